"""Two-state amplitudes and weak values of arm projectors.

A run of the interferometer is described by two vectors at once: the
forward state launched from the source and the backward state anchored on
the detector port that fired.  Their contraction is slice-independent and
equals the postselection amplitude; the (possibly sequential) weak value
of arm projectors is the corresponding projected contraction divided by
that amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import NetworkLayout, PathState, propagate, stage_unitary

__all__ = [
    "ArmProjector",
    "CoState",
    "DegeneratePostselection",
    "POSTSELECTION_TOL",
    "PathState",
    "ProjectorChain",
    "WeakValueResult",
    "backward_state",
    "forward_state",
    "postselection_amplitude",
    "sequential_weak_value",
    "weak_value",
]

POSTSELECTION_TOL = 1e-12


class DegeneratePostselection(ValueError):
    """The chosen port is (numerically) orthogonal to the launched state."""


@dataclass(frozen=True, eq=False)
class CoState:
    """Backward-evolved postselection bra; components are ``<phi(t)|arm>``."""

    slice_index: int
    arms: tuple[str, ...]
    components: np.ndarray

    def component(self, arm: str) -> complex:
        return complex(self.components[self.arms.index(arm)])


@dataclass(frozen=True)
class ArmProjector:
    """Projector onto one arm at one slice."""

    arm: str
    slice_index: int


@dataclass(frozen=True)
class ProjectorChain:
    """Time-ordered product of arm projectors.

    Consecutive repeats of the same projector collapse on construction
    (projectors are idempotent); after that the slices must be strictly
    increasing, so two different arms cannot share a slice.
    """

    projectors: tuple[ArmProjector, ...]

    def __post_init__(self):
        if not self.projectors:
            raise ValueError("empty projector chain")
        reduced: list[ArmProjector] = []
        for proj in self.projectors:
            if not reduced or proj != reduced[-1]:
                reduced.append(proj)
        object.__setattr__(self, "projectors", tuple(reduced))
        slices = [p.slice_index for p in self.projectors]
        if any(b <= a for a, b in zip(slices, slices[1:])):
            raise ValueError(
                "projector chain slices must be strictly increasing "
                f"(got {slices}); same-slice distinct arms are orthogonal"
            )

    @classmethod
    def of(cls, *steps: tuple[str, int]) -> "ProjectorChain":
        return cls(tuple(ArmProjector(arm, s) for arm, s in steps))


@dataclass(frozen=True)
class WeakValueResult:
    """A weak value together with the pieces it was built from."""

    value: complex
    numerator: complex
    postselection_amplitude: complex


def forward_state(layout: NetworkLayout, slice_index: int) -> PathState:
    """Source amplitude 1 propagated forward to ``slice_index``."""
    vec = np.zeros(len(layout.slices[0]), dtype=complex)
    vec[layout.arm_index(0, layout.source)] = 1.0
    return propagate(PathState(0, layout.slices[0], vec), layout, slice_index)


def backward_state(layout: NetworkLayout, port: str, slice_index: int) -> CoState:
    """Postselection bra for ``port`` pulled back to ``slice_index``.

    The components are bra coefficients, i.e. ``<f| U(final, t) |arm>``;
    pulling back one stage multiplies by the stage matrix from the left
    (plain transpose, no conjugation).
    """
    if not 0 <= slice_index < layout.n_slices:
        raise ValueError(f"invalid slice index {slice_index}")
    arm = layout.port_arm(port)
    row = np.zeros(len(layout.slices[-1]), dtype=complex)
    row[layout.arm_index(layout.final_slice, arm)] = 1.0
    for k in range(layout.final_slice - 1, slice_index - 1, -1):
        row = stage_unitary(layout, k).T @ row
    return CoState(slice_index, layout.slices[slice_index], row)


def _contraction(layout: NetworkLayout, port: str, slice_index: int) -> complex:
    fwd = forward_state(layout, slice_index)
    bwd = backward_state(layout, port, slice_index)
    return complex(bwd.components @ fwd.amplitudes)


def postselection_amplitude(layout: NetworkLayout, port: str) -> complex:
    """Amplitude ``<port| U |source>``; asserts slice-independence."""
    values = [_contraction(layout, port, k) for k in range(layout.n_slices)]
    spread = max(abs(v - values[0]) for v in values)
    if spread > 1e-12:
        raise RuntimeError(f"two-state contraction drifts across slices ({spread:.3e})")
    return values[0]


def _checked_amplitude(layout: NetworkLayout, port: str) -> complex:
    amp = postselection_amplitude(layout, port)
    if abs(amp) <= POSTSELECTION_TOL:
        raise DegeneratePostselection(
            f"port {port!r} has postselection amplitude {abs(amp):.3e}; "
            "weak values are undefined"
        )
    return amp


def weak_value(layout: NetworkLayout, port: str, projector: ArmProjector) -> WeakValueResult:
    """Weak value of an arm projector between source and postselected port.

    Parameters
    ----------
    layout : NetworkLayout
    port : str
        Detector port fixing the backward state.
    projector : ArmProjector
        Arm and slice of the projector.

    Returns
    -------
    WeakValueResult
        ``value = <phi|P|psi> / <phi|psi>`` with the numerator and the
        postselection amplitude attached.

    Raises
    ------
    DegeneratePostselection
        If ``|<phi|psi>| <= 1e-12``.
    """
    amp = _checked_amplitude(layout, port)
    fwd = forward_state(layout, projector.slice_index)
    bwd = backward_state(layout, port, projector.slice_index)
    idx = layout.arm_index(projector.slice_index, projector.arm)
    numerator = complex(bwd.components[idx] * fwd.amplitudes[idx])
    return WeakValueResult(numerator / amp, numerator, amp)


def sequential_weak_value(
    layout: NetworkLayout, port: str, chain: ProjectorChain
) -> WeakValueResult:
    """Weak value of a time-ordered projector product.

    The forward state is projected at the first chain slice, propagated to
    the next, projected again, and so on; the result is contracted with
    the backward state at the last chain slice and divided by the
    postselection amplitude.  A single-projector chain reduces to
    :func:`weak_value`.
    """
    amp = _checked_amplitude(layout, port)
    first = chain.projectors[0]
    state = forward_state(layout, first.slice_index)
    vec = state.amplitudes.copy()
    current = first.slice_index
    for proj in chain.projectors:
        if proj.slice_index != current:
            vec = propagate(
                PathState(current, layout.slices[current], vec), layout,
                proj.slice_index,
            ).amplitudes
            current = proj.slice_index
        keep = layout.arm_index(current, proj.arm)
        mask = np.zeros_like(vec)
        mask[keep] = vec[keep]
        vec = mask
    bwd = backward_state(layout, port, current)
    numerator = complex(bwd.components @ vec)
    return WeakValueResult(numerator / amp, numerator, amp)
