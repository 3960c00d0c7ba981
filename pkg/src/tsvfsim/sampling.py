"""Reproducible Monte Carlo readout of post-selected pointer quadratures.

Readings are drawn from the exact joint density of the chosen quadratures
(one per meter, ``x`` or ``p``), interference cross-terms included, by
rejection sampling under a positive Gaussian-mixture envelope.  Randomness
comes from the Philox counter-based generator: reading block ``b`` of a
batch uses a generator keyed by ``(seed, b)``, so any partitioning of the
same total sample count over workers reproduces the same readings bit for
bit.

Moment estimates carry jackknife standard errors over 50 blocks, and the
four quadrature combinations of a two-meter run assemble into the complex
sequential weak-value estimate with propagated errors.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .meter import MeterAttachment, PointerMixture

__all__ = [
    "BLOCK_SIZE",
    "CostModel",
    "JACKKNIFE_BLOCKS",
    "MIN_SAMPLES",
    "MomentEstimate",
    "ReadoutPlan",
    "SampleBatch",
    "SampleEstimates",
    "calibrate_cost_model",
    "estimate_from_samples",
    "export_batch_csv",
    "required_samples",
    "sample_readings",
]

BLOCK_SIZE = 4096
JACKKNIFE_BLOCKS = 50
MIN_SAMPLES = 100


@dataclass(frozen=True)
class ReadoutPlan:
    """What to measure: one quadrature per meter, how many times, which seed."""

    quadratures: tuple[str, ...]
    n: int
    seed: int

    def __post_init__(self):
        if any(q not in ("x", "p") for q in self.quadratures):
            raise ValueError("quadratures must be 'x' or 'p'")
        if self.n < 1:
            raise ValueError("need at least one reading")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Matrix of readings (n rows, one column per meter) plus provenance."""

    plan: ReadoutPlan
    meters: tuple[MeterAttachment, ...]
    readings: np.ndarray
    postselection_probability: float
    acceptance_rate: float


def _density_terms(mixture: PointerMixture, quadratures: tuple[str, ...]):
    """Precompute per-term shift rows and amplitudes for density evaluation."""
    shifts = np.array(list(mixture.amplitudes.keys()), dtype=float)
    amps = np.array(list(mixture.amplitudes.values()), dtype=complex)
    sigmas = np.array([m.sigma for m in mixture.meters], dtype=float)
    return shifts, amps, sigmas


def _term_factors(v: np.ndarray, shifts: np.ndarray, sigmas: np.ndarray,
                  quadratures: tuple[str, ...]):
    """Per-candidate, per-term wavefunction factors and their moduli.

    v has shape (n, m); returns complex (n, T) products over meters of
    phi_{s}(v) for x readout and of the momentum-space packet for p
    readout, together with the modulus array used by the envelope.
    """
    n, m = v.shape
    t = shifts.shape[0]
    w = np.ones((n, t), dtype=complex)
    w_abs = np.ones((n, t), dtype=float)
    for j in range(m):
        s = sigmas[j]
        col = v[:, j][:, None]
        sj = shifts[:, j][None, :]
        if quadratures[j] == "x":
            f = (2.0 * math.pi * s * s) ** -0.25 * np.exp(
                -((col - sj) ** 2) / (4.0 * s * s)
            )
            w *= f
            w_abs *= f
        else:
            mag = (2.0 * s * s / math.pi) ** 0.25 * np.exp(-(s * s) * col ** 2)
            w *= mag * np.exp(-1j * col * sj)
            w_abs *= np.broadcast_to(mag, (n, t))
    return w, w_abs


def _sample_block(mixture: PointerMixture, quadratures: tuple[str, ...],
                  seed: int, block_index: int, count: int):
    """Draw ``count`` readings from the block's own Philox stream."""
    shifts, amps, sigmas = _density_terms(mixture, quadratures)
    t, m = shifts.shape
    abs_amps = np.abs(amps)

    # Envelope: (sum_s |A_s| u_s(v))^2, a mixture over term pairs (s, s') of
    # per-meter product Gaussians; for x readout the pair component is
    # N((s_j + s'_j)/2, sigma_j^2) with weight K(s_j, s'_j), for p readout
    # N(0, 1/(4 sigma_j^2)) with weight 1.
    pair_w = np.outer(abs_amps, abs_amps).ravel()
    means = np.zeros((t * t, m))
    devs = np.zeros((t * t, m))
    for j in range(m):
        sj = shifts[:, j]
        if quadratures[j] == "x":
            pair_k = np.exp(-((sj[:, None] - sj[None, :]) ** 2) / (8 * sigmas[j] ** 2))
            pair_w = pair_w * pair_k.ravel()
            means[:, j] = (0.5 * (sj[:, None] + sj[None, :])).ravel()
            devs[:, j] = sigmas[j]
        else:
            devs[:, j] = 0.5 / sigmas[j]
    pair_p = pair_w / pair_w.sum()

    rng = np.random.Generator(np.random.Philox(key=[seed, block_index]))
    out = np.empty((count, m))
    filled = 0
    candidates = 0
    while filled < count:
        draw = max(256, int(1.5 * (count - filled) / max(0.05, _rate(mixture, pair_w))))
        draw = min(draw, 1 << 17)
        comp = rng.choice(t * t, size=draw, p=pair_p)
        v = rng.normal(means[comp], devs[comp])
        u = rng.random(draw)
        w, w_abs = _term_factors(v, shifts, sigmas, quadratures)
        f = np.abs(w @ amps) ** 2
        env = (w_abs @ abs_amps) ** 2
        keep = v[u * env < f]
        candidates += draw
        take = min(count - filled, keep.shape[0])
        out[filled:filled + take] = keep[:take]
        filled += take
    return out, candidates


def _rate(mixture: PointerMixture, pair_w: np.ndarray) -> float:
    # mean acceptance = (target mass) / (envelope mass)
    return mixture.postselection_probability / float(pair_w.sum())


def sample_readings(mixture: PointerMixture, plan: ReadoutPlan) -> SampleBatch:
    """Draw quadrature readings from the post-selected pointer density.

    Parameters
    ----------
    mixture : PointerMixture
        Post-selected pointer state (see :func:`tsvfsim.meter.postselect`).
    plan : ReadoutPlan
        One quadrature per meter (in meter order), the number of readings
        and the 64-bit seed.

    Returns
    -------
    SampleBatch
        Readings of shape ``(plan.n, number of meters)``, the physical
        postselection pass rate, and the rejection acceptance rate.

    Notes
    -----
    Reading rows ``[b * 4096, (b+1) * 4096)`` depend only on ``(seed, b)``,
    so the batch content is invariant under any block partitioning.
    """
    m = len(mixture.meters)
    if len(plan.quadratures) != m:
        raise ValueError(f"plan lists {len(plan.quadratures)} quadratures for {m} meters")
    out = np.empty((plan.n, m))
    candidates = 0
    for block in range((plan.n + BLOCK_SIZE - 1) // BLOCK_SIZE):
        lo = block * BLOCK_SIZE
        hi = min(plan.n, lo + BLOCK_SIZE)
        # Every block draws a full block's worth so partial final blocks
        # still reproduce the full-block prefix.
        block_readings, cand = _sample_block(
            mixture, plan.quadratures, plan.seed, block, BLOCK_SIZE
        )
        out[lo:hi] = block_readings[: hi - lo]
        candidates += cand
    drawn = BLOCK_SIZE * math.ceil(plan.n / BLOCK_SIZE)
    return SampleBatch(
        plan=plan,
        meters=mixture.meters,
        readings=out,
        postselection_probability=mixture.postselection_probability,
        acceptance_rate=drawn / candidates,
    )


# ----------------------------------------------------------------------
# Estimation


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    degenerate: bool = False


def _jackknife_mean(samples: np.ndarray) -> MomentEstimate:
    """Mean with a delete-one-block jackknife standard error."""
    n = samples.shape[0]
    mean = float(samples.mean())
    if n < 2:
        return MomentEstimate(mean, math.inf, degenerate=True)
    blocks = min(JACKKNIFE_BLOCKS, n)
    edges = np.linspace(0, n, blocks + 1).astype(int)
    total = samples.sum()
    loo = np.array([
        (total - samples[lo:hi].sum()) / (n - (hi - lo))
        for lo, hi in zip(edges[:-1], edges[1:])
    ])
    se = math.sqrt((blocks - 1) / blocks * float(((loo - loo.mean()) ** 2).sum()))
    return MomentEstimate(mean, se)


@dataclass(frozen=True)
class SampleEstimates:
    """Plug-in moments and, when all four combinations are present, the
    assembled complex sequential estimate with propagated errors."""

    singles: dict[tuple[int, str], MomentEstimate]
    pair_moments: dict[tuple[str, str], MomentEstimate]
    zeta: complex | None = None
    zeta_stderr: tuple[float, float] | None = None
    sequential: complex | None = None
    sequential_stderr: tuple[float, float] | None = None
    degenerate: bool = False


def estimate_from_samples(batches: list[SampleBatch]) -> SampleEstimates:
    """Turn sampled readings into moment and weak-value estimates.

    Singles come from per-column means; two-meter batches contribute the
    product moment of their quadrature pair.  When the four combinations
    (xx, pp, xp, px) of one two-meter configuration are all present, the
    complex readout correlator and the sequential weak-value estimate are
    assembled, with standard errors propagated in quadrature (batches are
    independent).
    """
    if not batches:
        raise ValueError("no batches given")
    singles: dict[tuple[int, str], MomentEstimate] = {}
    pairs: dict[tuple[str, str], MomentEstimate] = {}
    meters = batches[0].meters
    for batch in batches:
        if batch.meters != meters:
            raise ValueError("batches come from different meter configurations")
        for col, (meter, quad) in enumerate(zip(batch.meters, batch.plan.quadratures)):
            key = (meter.meter_id, quad)
            if key not in singles:
                singles[key] = _jackknife_mean(batch.readings[:, col])
        if len(batch.meters) == 2:
            combo = (batch.plan.quadratures[0], batch.plan.quadratures[1])
            if combo not in pairs:
                pairs[combo] = _jackknife_mean(
                    batch.readings[:, 0] * batch.readings[:, 1]
                )
    degenerate = any(e.degenerate for e in singles.values()) or any(
        e.degenerate for e in pairs.values()
    )
    needed = [("x", "x"), ("p", "p"), ("x", "p"), ("p", "x")]
    if len(meters) != 2 or any(c not in pairs for c in needed):
        return SampleEstimates(singles, pairs, degenerate=degenerate)

    s0, s1 = meters[0].sigma ** 2, meters[1].sigma ** 2
    xx, pp = pairs[("x", "x")], pairs[("p", "p")]
    xp, px = pairs[("x", "p")], pairs[("p", "x")]
    zeta = complex(
        xx.value - 4.0 * s0 * s1 * pp.value,
        2.0 * s1 * xp.value + 2.0 * s0 * px.value,
    )
    zeta_se = (
        math.hypot(xx.stderr, 4.0 * s0 * s1 * pp.stderr),
        math.hypot(2.0 * s1 * xp.stderr, 2.0 * s0 * px.stderr),
    )
    g = meters[0].strength * meters[1].strength
    if g == 0.0:
        return SampleEstimates(singles, pairs, zeta, zeta_se, degenerate=degenerate)
    return SampleEstimates(
        singles, pairs, zeta, zeta_se,
        sequential=zeta / g,
        sequential_stderr=(zeta_se[0] / g, zeta_se[1] / g),
        degenerate=degenerate,
    )


# ----------------------------------------------------------------------
# Sample-cost model


@dataclass(frozen=True)
class CostModel:
    """Fitted prefactor of n = C sigma^4 / (g1^2 g2^2 rel_err^2)."""

    constant: float
    reference: str = ""


def required_samples(
    g1: float, g2: float, sigma: float, target_rel_err: float,
    model: CostModel,
) -> int:
    """Samples per quadrature combination needed for a relative error.

    Uses the scaling ``n = C sigma^4 / (g1^2 g2^2 target^2)`` with the
    calibrated prefactor; the result never falls below ``MIN_SAMPLES``
    (two readings per jackknife block), which is also the answer for
    arbitrarily loose targets.
    """
    if g1 <= 0 or g2 <= 0 or sigma <= 0 or target_rel_err <= 0:
        raise ValueError("strengths, width and target must be positive")
    n = model.constant * sigma ** 4 / (g1 ** 2 * g2 ** 2 * target_rel_err ** 2)
    if not math.isfinite(n):
        raise ValueError("cost model diverges for these parameters")
    return max(MIN_SAMPLES, math.ceil(n))


def calibrate_cost_model(
    mixture: PointerMixture, exact: complex, n: int = 40_000, seed: int = 2_026_08,
) -> CostModel:
    """Fit the cost prefactor from one sampled run of a two-meter mixture.

    Runs the four quadrature combinations at ``n`` readings each, measures
    the propagated relative standard error of the sequential estimate
    against ``|exact|``, and solves the scaling law for its constant.
    """
    if len(mixture.meters) != 2:
        raise ValueError("cost calibration needs a two-meter mixture")
    g1, g2 = (m.strength for m in mixture.meters)
    sigma = mixture.meters[0].sigma
    batches = [
        sample_readings(mixture, ReadoutPlan((qa, qb), n, seed + k))
        for k, (qa, qb) in enumerate([("x", "x"), ("p", "p"), ("x", "p"), ("p", "x")])
    ]
    est = estimate_from_samples(batches)
    rel = math.hypot(*est.sequential_stderr) / abs(exact)
    constant = rel ** 2 * n * (g1 * g2) ** 2 / sigma ** 4
    return CostModel(constant, reference=f"g1={g1} g2={g2} sigma={sigma} n={n}")


# ----------------------------------------------------------------------
# Export


def export_batch_csv(batch: SampleBatch, path: str | Path,
                     meta_path: str | Path | None = None) -> Path:
    """Write readings as CSV rows ``meter_id,quadrature,reading``.

    A JSON sidecar (default: same name with ``.meta.json`` appended)
    records the seed, the reading count and the pass rates, enough to
    reproduce the batch bit for bit.
    """
    path = Path(path)
    meta = Path(meta_path) if meta_path is not None else path.with_name(
        path.name + ".meta.json"
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["meter_id", "quadrature", "reading"])
        for row in batch.readings:
            for meter, quad, value in zip(batch.meters, batch.plan.quadratures, row):
                writer.writerow([meter.meter_id, quad, repr(float(value))])
    meta.write_text(json.dumps({
        "seed": batch.plan.seed,
        "n": batch.plan.n,
        "pass_rate": batch.postselection_probability,
        "rejection_acceptance_rate": batch.acceptance_rate,
        "quadratures": list(batch.plan.quadratures),
        "meters": [
            {
                "meter_id": m.meter_id,
                "arm": m.arm,
                "slice": m.slice_index,
                "strength": m.strength,
                "sigma": m.sigma,
            }
            for m in batch.meters
        ],
    }, indent=2) + "\n")
    return path
