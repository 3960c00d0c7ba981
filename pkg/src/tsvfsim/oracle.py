"""Position-grid reference evolution for coupled meter experiments.

Everything the closed-form pointer algebra produces (probabilities, means,
correlators) is recomputed here the slow honest way: each pointer lives on
a uniform position grid, couplings displace wavefunctions (exact index
shift when the strength is a whole number of grid steps, spectral shift
otherwise), momentum moments come from FFT derivatives.  Agreement between
the two routes within tight tolerances is the main correctness check of
the analytic path.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .meter import Experiment, ZeroProbability, pointer_corr, pointer_mean, postselect, run_coupled, zeta_corr
from .meter import arm_probability as analytic_arm_probability
from .network import serialize_network, stage_unitary

__all__ = [
    "ComparisonRow",
    "ComparisonTable",
    "GridSpec",
    "GridState",
    "GridTooSmall",
    "Report",
    "compare",
    "default_grid",
    "experiment_reports",
    "grid_arm_probability",
    "grid_moments",
    "grid_run",
]

NORM_TOL = 1e-10


class GridTooSmall(ValueError):
    """The grid cannot hold the pointer packets to the required accuracy."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform position grid [-half_width, half_width] with an odd point count."""

    half_width: float
    points: int = 1025

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.points < 3 or self.points % 2 == 0:
            raise ValueError("points must be an odd number >= 3")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points)


def default_grid(experiment: Experiment) -> GridSpec:
    """L = 10 max(sigma) + 2 max(g), 1025 points."""
    sigmas = [m.sigma for m in experiment.meters] or [1.0]
    strengths = [m.strength for m in experiment.meters] or [0.0]
    return GridSpec(10.0 * max(sigmas) + 2.0 * max(strengths), 1025)


@dataclass(frozen=True, eq=False)
class GridState:
    """Discretised joint state: axis 0 is the arm, one grid axis per meter."""

    slice_index: int
    experiment: Experiment
    spec: GridSpec
    array: np.ndarray

    def norm(self) -> float:
        h = self.spec.spacing
        m = len(self.experiment.meters)
        return math.sqrt(float(np.sum(np.abs(self.array) ** 2)) * h ** m)


def _initial_pointer(sigma: float, spec: GridSpec) -> np.ndarray:
    x = spec.axis
    phi = (2.0 * math.pi * sigma * sigma) ** -0.25 * np.exp(
        -(x * x) / (4.0 * sigma * sigma)
    )
    norm = float(np.sum(phi * phi)) * spec.spacing
    if abs(norm - 1.0) > NORM_TOL:
        raise GridTooSmall(
            f"initial pointer (sigma={sigma}) has discrete norm {norm!r} on this grid"
        )
    return phi.astype(complex)


def _displace(arr: np.ndarray, axis: int, g: float, spec: GridSpec) -> np.ndarray:
    """Apply exp(-i g p), i.e. f(x) -> f(x - g), along one grid axis."""
    if g == 0.0:
        return arr
    steps = g / spec.spacing
    if abs(steps - round(steps)) < 1e-9:
        k = int(round(steps))
        out = np.zeros_like(arr)
        src = [slice(None)] * arr.ndim
        dst = [slice(None)] * arr.ndim
        if k >= 0:
            src[axis] = slice(0, arr.shape[axis] - k)
            dst[axis] = slice(k, arr.shape[axis])
        else:
            src[axis] = slice(-k, arr.shape[axis])
            dst[axis] = slice(0, arr.shape[axis] + k)
        out[tuple(dst)] = arr[tuple(src)]
        return out
    freq = 2.0 * math.pi * np.fft.fftfreq(arr.shape[axis], d=spec.spacing)
    shape = [1] * arr.ndim
    shape[axis] = arr.shape[axis]
    phase = np.exp(-1j * freq * g).reshape(shape)
    return np.fft.ifft(np.fft.fft(arr, axis=axis) * phase, axis=axis)


def _momentum_apply(arr: np.ndarray, axis: int, spec: GridSpec) -> np.ndarray:
    """Apply p = -i d/dx along one grid axis (spectral derivative)."""
    freq = 2.0 * math.pi * np.fft.fftfreq(arr.shape[axis], d=spec.spacing)
    shape = [1] * arr.ndim
    shape[axis] = arr.shape[axis]
    return np.fft.ifft(np.fft.fft(arr, axis=axis) * freq.reshape(shape), axis=axis)


def _check_spec(experiment: Experiment, spec: GridSpec):
    for m in experiment.meters:
        need = 6.0 * m.sigma + 2.0 * m.strength
        if spec.half_width < need:
            raise GridTooSmall(
                f"half_width {spec.half_width} < {need} required for meter "
                f"{m.meter_id} (6 sigma + 2 g)"
            )


def _evolve(experiment: Experiment, spec: GridSpec, to_slice: int,
            marginals: dict[tuple[int, str], float] | None = None) -> np.ndarray:
    layout = experiment.layout
    meters = experiment.meters
    _check_spec(experiment, spec)
    pointers = [_initial_pointer(m.sigma, spec) for m in meters]
    state = np.zeros((len(layout.slices[0]),) + (spec.points,) * len(meters),
                     dtype=complex)
    seed_idx = (layout.arm_index(0, layout.source),) + (slice(None),) * len(meters)
    packet = np.ones((), dtype=complex)
    for phi in reversed(pointers):
        packet = np.multiply.outer(phi, packet)
    state[seed_idx] = packet

    h = spec.spacing

    def couple(at_slice: int):
        for j, meter in enumerate(meters):
            if meter.slice_index != at_slice or meter.strength == 0.0:
                continue
            idx = layout.arm_index(at_slice, meter.arm)
            state[idx] = _displace(state[idx], j, meter.strength, spec)

    def record(at_slice: int):
        if marginals is None:
            return
        weights = h ** len(meters)
        for i, arm in enumerate(layout.slices[at_slice]):
            marginals[(at_slice, arm)] = float(
                np.sum(np.abs(state[i]) ** 2) * weights
            )

    couple(0)
    record(0)
    for k in range(to_slice):
        u = stage_unitary(layout, k)
        state = np.tensordot(u, state, axes=(1, 0))
        couple(k + 1)
        record(k + 1)
    return state


def grid_run(experiment: Experiment, spec: GridSpec | None = None,
             to_slice: int | None = None) -> GridState:
    """Evolve the experiment on the grid up to a slice (default: final).

    Parameters
    ----------
    experiment : Experiment
    spec : GridSpec, optional
        Defaults to ``default_grid(experiment)``.
    to_slice : int, optional
        Stop after couplings at this slice have acted.

    Raises
    ------
    GridTooSmall
        If the grid cannot represent the initial packet to 1e-10 or is
        narrower than 6 sigma + 2 g for some meter.
    """
    spec = spec or default_grid(experiment)
    layout = experiment.layout
    if to_slice is None:
        to_slice = layout.final_slice
    if not 0 <= to_slice < layout.n_slices:
        raise ValueError(f"invalid slice index {to_slice}")
    state = _evolve(experiment, spec, to_slice)
    return GridState(to_slice, experiment, spec, state)


def grid_arm_probability(experiment: Experiment, arm: str, slice_index: int,
                         spec: GridSpec | None = None) -> float:
    """Grid-route counterpart of :func:`tsvfsim.meter.arm_probability`."""
    state = grid_run(experiment, spec, to_slice=slice_index)
    layout = experiment.layout
    idx = layout.arm_index(slice_index, arm)
    h = state.spec.spacing ** len(experiment.meters)
    return float(np.sum(np.abs(state.array[idx]) ** 2) * h)


def grid_moments(state: GridState, port: str) -> dict[str, float]:
    """Post-selected pointer statistics evaluated by grid quadrature.

    Returns a flat name -> value map: the port probability, per-meter
    ``x``/``p`` means and second moments, and for every meter pair the
    four cross correlators plus the real and imaginary parts of the
    complex readout correlator.
    """
    exp = state.experiment
    layout = exp.layout
    if state.slice_index != layout.final_slice:
        raise ValueError("moments need the final-slice state")
    meters = exp.meters
    m = len(meters)
    h = state.spec.spacing
    weight = h ** m
    chi = state.array[layout.arm_index(layout.final_slice, layout.port_arm(port))]
    prob = float(np.sum(np.abs(chi) ** 2) * weight)
    values: dict[str, float] = {"probability": prob}
    if m == 0:
        return values
    if prob < 1e-300:
        raise ZeroProbability(f"port {port!r} fires with probability {prob:.3e}")

    x = state.spec.axis

    def axis_x(arr, j):
        shape = [1] * m
        shape[j] = state.spec.points
        return arr * x.reshape(shape)

    def axis_p(arr, j):
        return _momentum_apply(arr, j, state.spec)

    def inner(a, b) -> complex:
        return complex(np.sum(np.conj(a) * b) * weight)

    applied = {}
    for j, meter in enumerate(meters):
        applied[("x", j)] = axis_x(chi, j)
        applied[("p", j)] = axis_p(chi, j)
        mid = meter.meter_id
        values[f"m{mid}.x_mean"] = inner(chi, applied[("x", j)]).real / prob
        values[f"m{mid}.p_mean"] = inner(chi, applied[("p", j)]).real / prob
        values[f"m{mid}.x2"] = inner(applied[("x", j)], applied[("x", j)]).real / prob
        values[f"m{mid}.p2"] = inner(applied[("p", j)], applied[("p", j)]).real / prob
    for i in range(m):
        for j in range(i + 1, m):
            mi, mj = meters[i].meter_id, meters[j].meter_id
            xx = inner(chi, axis_x(applied[("x", i)], j)).real / prob
            pp = inner(applied[("p", i)], applied[("p", j)]).real / prob
            xp = inner(chi, axis_p(applied[("x", i)], j)).real / prob
            px = inner(applied[("x", j)], applied[("p", i)]).real / prob
            values[f"corr.x{mi}_x{mj}"] = xx
            values[f"corr.p{mi}_p{mj}"] = pp
            values[f"corr.x{mi}_p{mj}"] = xp
            values[f"corr.p{mi}_x{mj}"] = px
            si2 = meters[i].sigma ** 2
            sj2 = meters[j].sigma ** 2
            zeta = complex(xx - 4 * si2 * sj2 * pp, 2 * sj2 * xp + 2 * si2 * px)
            values[f"zeta.{mi}_{mj}.re"] = zeta.real
            values[f"zeta.{mi}_{mj}.im"] = zeta.imag
    return values


# ----------------------------------------------------------------------
# Analytic-vs-grid comparison


@dataclass(frozen=True)
class Report:
    """Named scalar quantities of one experiment, from one route."""

    experiment_key: str
    route: str
    values: dict[str, float]


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    analytic: float
    grid: float
    abs_dev: float
    tol: float
    passed: bool


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_json(self) -> str:
        return json.dumps(
            {
                "all_pass": self.all_pass,
                "rows": [
                    {
                        "name": r.name,
                        "analytic": r.analytic,
                        "grid": r.grid,
                        "abs_dev": r.abs_dev,
                        "tol": r.tol,
                        "pass": r.passed,
                    }
                    for r in self.rows
                ],
            },
            indent=2,
        )


def experiment_key(experiment: Experiment, port: str) -> str:
    blob = serialize_network(experiment.layout) + repr(experiment.meters) + port
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def experiment_reports(experiment: Experiment, port: str,
                       spec: GridSpec | None = None) -> tuple[Report, Report]:
    """Matched analytic and grid reports for one experiment and port.

    Quantities: probability of every detector port, the probability of
    every (arm, slice) projective detection, and all post-selected pointer
    moments for the chosen port.
    """
    spec = spec or default_grid(experiment)
    layout = experiment.layout
    key = experiment_key(experiment, port)

    analytic: dict[str, float] = {}
    grid: dict[str, float] = {}

    joint = run_coupled(experiment)
    for name in layout.ports:
        try:
            analytic[f"P({name})"] = postselect(joint, name).postselection_probability
        except ZeroProbability:
            analytic[f"P({name})"] = 0.0
    for k in range(layout.n_slices):
        for arm in layout.slices[k]:
            analytic[f"P[{arm}@{k}]"] = analytic_arm_probability(experiment, arm, k)
    mixture = postselect(joint, port)
    for meter in experiment.meters:
        mid = meter.meter_id
        analytic[f"m{mid}.x_mean"] = pointer_mean(mixture, mid, "x")
        analytic[f"m{mid}.p_mean"] = pointer_mean(mixture, mid, "p")
        analytic[f"m{mid}.x2"] = pointer_corr(mixture, (mid, "x"), (mid, "x"))
        analytic[f"m{mid}.p2"] = pointer_corr(mixture, (mid, "p"), (mid, "p"))
    for a in range(len(experiment.meters)):
        for b in range(a + 1, len(experiment.meters)):
            mi = experiment.meters[a].meter_id
            mj = experiment.meters[b].meter_id
            analytic[f"corr.x{mi}_x{mj}"] = pointer_corr(mixture, (mi, "x"), (mj, "x"))
            analytic[f"corr.p{mi}_p{mj}"] = pointer_corr(mixture, (mi, "p"), (mj, "p"))
            analytic[f"corr.x{mi}_p{mj}"] = pointer_corr(mixture, (mi, "x"), (mj, "p"))
            analytic[f"corr.p{mi}_x{mj}"] = pointer_corr(mixture, (mi, "p"), (mj, "x"))
            z = zeta_corr(mixture, mi, mj)
            analytic[f"zeta.{mi}_{mj}.re"] = z.real
            analytic[f"zeta.{mi}_{mj}.im"] = z.imag

    marginals: dict[tuple[int, str], float] = {}
    state_array = _evolve(experiment, spec, layout.final_slice, marginals)
    final = GridState(layout.final_slice, experiment, spec, state_array)
    h = spec.spacing ** len(experiment.meters)
    for name in layout.ports:
        arm_idx = layout.arm_index(layout.final_slice, layout.port_arm(name))
        grid[f"P({name})"] = float(np.sum(np.abs(final.array[arm_idx]) ** 2) * h)
    for (k, arm), p in marginals.items():
        grid[f"P[{arm}@{k}]"] = p
    grid.update(grid_moments(final, port))
    grid.pop("probability", None)

    return (
        Report(key, "analytic", analytic),
        Report(key, "grid", grid),
    )


def compare(analytic: Report, grid: Report,
            tolerances: float | dict[str, float] = 1e-7) -> ComparisonTable:
    """Line up two reports name by name.

    ``tolerances`` is either one absolute tolerance for everything or a
    per-name map (missing names fall back to 1e-7).  The two reports must
    describe the same experiment.
    """
    if analytic.experiment_key != grid.experiment_key:
        raise ValueError("reports describe different experiments")
    names = sorted(set(analytic.values) & set(grid.values))
    if not names:
        raise ValueError("reports share no quantities")
    rows = []
    for name in names:
        if isinstance(tolerances, dict):
            tol = tolerances.get(name, 1e-7)
        else:
            tol = float(tolerances)
        a, g = float(analytic.values[name]), float(grid.values[name])
        dev = abs(a - g)
        rows.append(ComparisonRow(name, a, g, dev, tol, bool(dev <= tol)))
    return ComparisonTable(tuple(rows))
