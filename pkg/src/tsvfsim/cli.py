"""Command-line front end.

Six subcommands, each emitting one flat table as CSV (default) or JSON::

    tsvfsim weak-values  [--network ...] [--postselect D2]
    tsvfsim sequential   --chain B@2,E@3 [--chain C@2,E@3 ...]
    tsvfsim disturbance  [--sweep 0.05:0.5:0.05] [--probe E@3]
    tsvfsim meter-sweep  [--sweep 0.4x0.5x6] [--meter C@2 --meter E@3]
    tsvfsim montecarlo   [--n 1000000] [--seed N]
    tsvfsim oracle       [--grid-half-width L] [--grid-points M]

Every table starts with a ``kind`` column (``value`` rows report numbers,
``check`` rows report verifications) and ends with a ``pass`` column.  The
process exits 0 only if every non-empty ``pass`` field is true, 1 if some
check failed, and 2 on usage or input errors.  Output for a fixed seed is
byte-identical across runs.

Defaults can also be given in an INI file (``--config``); explicit flags
win over the file.  Sections: ``[scenario]`` (network, postselect, seed,
format), ``[meters]`` (any keys, sorted, one meter spec each), ``[chains]``
(same idea), ``[sweep]`` (gs = spec), ``[montecarlo]`` (n), ``[grid]``
(half_width, points).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .meter import (
    ZeroProbability,
    arm_probability,
    attach_meter,
    estimate_sequential_weak_value,
    estimate_weak_value,
    new_experiment,
    pointer_corr,
    pointer_mean,
    postselect,
    run_coupled,
    zeta_corr,
)
from .network import (
    NetworkParseError,
    nested_mzi_preset,
    parse_network,
)
from .oracle import GridSpec, compare, default_grid, experiment_reports
from .sampling import ReadoutPlan, estimate_from_samples, sample_readings
from .tsvf import (
    ArmProjector,
    DegeneratePostselection,
    ProjectorChain,
    sequential_weak_value,
    weak_value,
)

DEFAULT_SEED = 20260822
SUM_TOL = 1e-10
DISTURBANCE_TOL = 1e-10
SLOPE_TARGET = 2.0
SLOPE_TOL = 0.5
Z_LIMIT = 4.0

_METER_RE = re.compile(r"^(?P<arm>\w+)@(?P<slice>\d+)(?::(?P<params>\S+))?$")
_STEP_RE = re.compile(r"^(?P<arm>\w+)@(?P<slice>\d+)$")


class CliError(Exception):
    """Input or scenario problem; reported on stderr with exit status 2."""


@dataclass(frozen=True)
class MeterSpec:
    arm: str
    slice_index: int
    strength: float
    sigma: float

    def label(self) -> str:
        return f"{self.arm}@{self.slice_index}"


def parse_meter_spec(text: str) -> MeterSpec:
    """``arm@slice[:g=V,sigma=V]``; g defaults to 0.3, sigma to 1.0."""
    match = _METER_RE.match(text.strip())
    if not match:
        raise CliError(f"bad meter spec {text!r} (want arm@slice[:g=V,sigma=V])")
    g, sigma = 0.3, 1.0
    if match["params"]:
        for item in match["params"].split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise CliError(f"bad meter parameter {item!r} in {text!r}")
            try:
                number = float(value)
            except ValueError:
                raise CliError(f"bad number {value!r} in meter spec {text!r}") from None
            if key == "g":
                g = number
            elif key == "sigma":
                sigma = number
            else:
                raise CliError(f"unknown meter parameter {key!r} in {text!r}")
    return MeterSpec(match["arm"], int(match["slice"]), g, sigma)


def parse_chain_spec(text: str) -> tuple[tuple[str, int], ...]:
    """``B@2,E@3`` -> (("B", 2), ("E", 3))."""
    steps = []
    for item in text.split(","):
        match = _STEP_RE.match(item.strip())
        if not match:
            raise CliError(f"bad chain step {item!r} in {text!r} (want arm@slice)")
        steps.append((match["arm"], int(match["slice"])))
    if not steps:
        raise CliError("empty chain")
    return tuple(steps)


def parse_sweep_spec(text: str) -> tuple[float, ...]:
    """Coupling sweep: ``a,b,c`` list, ``start:stop:step`` inclusive range,
    or ``startxfactorxcount`` geometric ladder."""
    text = text.strip()
    try:
        if "x" in text:
            start_s, factor_s, count_s = text.split("x")
            start, factor, count = float(start_s), float(factor_s), int(count_s)
            if count < 1 or start <= 0 or factor <= 0:
                raise ValueError
            values = tuple(start * factor ** k for k in range(count))
        elif ":" in text:
            start_s, stop_s, step_s = text.split(":")
            start, stop, step = float(start_s), float(stop_s), float(step_s)
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = tuple(start + k * step for k in range(count))
        else:
            values = tuple(float(v) for v in text.split(","))
    except (ValueError, TypeError):
        raise CliError(
            f"bad sweep spec {text!r} (want a,b,c or start:stop:step or startxfactorxcount)"
        ) from None
    if not values or any(v <= 0 for v in values):
        raise CliError("sweep values must be positive")
    return values


# ----------------------------------------------------------------------
# Scenario assembly


def load_layout(spec: str):
    if spec == "nested-mzi":
        return nested_mzi_preset()
    path = Path(spec)
    if not path.exists():
        raise CliError(f"network {spec!r} is neither a preset name nor a file")
    try:
        return parse_network(path.read_text())
    except NetworkParseError as exc:
        raise CliError(f"{spec}: {exc}") from exc


def build_experiment(layout, meter_specs: list[MeterSpec]):
    exp = new_experiment(layout)
    for m in meter_specs:
        try:
            exp = attach_meter(exp, m.arm, m.slice_index, m.strength, m.sigma)
        except (ValueError, KeyError) as exc:
            raise CliError(f"meter {m.label()}: {exc}") from exc
    return exp


def pick_port(layout, requested: str | None) -> str:
    if requested is not None:
        if requested not in layout.ports:
            raise CliError(
                f"unknown port {requested!r} (this network has: {', '.join(layout.ports)})"
            )
        return requested
    if "D2" in layout.ports:
        return "D2"
    raise CliError(
        f"choose a detector port with --postselect (one of: {', '.join(layout.ports)})"
    )


# ----------------------------------------------------------------------
# Subcommands: each returns (columns, rows, meta)


def cmd_weak_values(layout, port):
    columns = ("kind", "arm", "slice", "re", "im", "pass")
    rows = []
    for k in range(layout.n_slices):
        total = 0.0 + 0.0j
        for arm in layout.slices[k]:
            value = weak_value(layout, port, ArmProjector(arm, k)).value
            total += value
            rows.append({"kind": "value", "arm": arm, "slice": k,
                         "re": value.real, "im": value.imag, "pass": None})
        rows.append({"kind": "check", "arm": "sum", "slice": k,
                     "re": total.real, "im": total.imag,
                     "pass": abs(total - 1.0) < SUM_TOL})
    return columns, rows, {"port": port}


def cmd_sequential(layout, port, chain_specs: list[tuple[tuple[str, int], ...]]):
    columns = ("kind", "chain", "re", "im", "pass")
    declared: dict[tuple[tuple[str, int], ...], complex] = {}
    rows = []
    for steps in chain_specs:
        if steps in declared:
            continue
        try:
            chain = ProjectorChain.of(*steps)
        except ValueError as exc:
            raise CliError(f"chain {_chain_label(steps)}: {exc}") from exc
        declared[steps] = sequential_weak_value(layout, port, chain).value
    for steps, value in declared.items():
        rows.append({"kind": "value", "chain": _chain_label(steps),
                     "re": value.real, "im": value.imag, "pass": None})
    # Marginal checks: wherever the declared chains differ only in the arm
    # at one slot and jointly cover every arm of that slice, their sum must
    # equal the chain with that slot removed.
    seen_templates = set()
    for steps in declared:
        for i, (_, slice_index) in enumerate(steps):
            template = (steps[:i], slice_index, steps[i + 1:])
            if template in seen_templates:
                continue
            seen_templates.add(template)
            group = [s for s in declared
                     if s[:i] == template[0] and s[i + 1:] == template[2]
                     and len(s) == len(steps)]
            arms = {s[i][0] for s in group}
            if arms != set(layout.slices[slice_index]):
                continue
            total = sum(declared[s] for s in group)
            reduced = steps[:i] + steps[i + 1:]
            if reduced:
                reference = sequential_weak_value(
                    layout, port, ProjectorChain.of(*reduced)
                ).value
            else:
                reference = 1.0 + 0.0j
            label = _chain_label(steps[:i] + (("*", slice_index),) + steps[i + 1:])
            rows.append({"kind": "check", "chain": label,
                         "re": total.real, "im": total.imag,
                         "pass": abs(total - reference) < SUM_TOL})
    return columns, rows, {"port": port}


def _chain_label(steps) -> str:
    return ">".join(f"{arm}@{k}" for arm, k in steps)


def cmd_disturbance(layout, port, meter: MeterSpec, probe: tuple[str, int],
                    sweep: tuple[float, ...], canonical: bool):
    columns = ("kind", "g", "p_probe", "p_port", "closed_form", "deviation", "pass")
    probe_arm, probe_slice = probe
    base = build_experiment(layout, [MeterSpec(meter.arm, meter.slice_index,
                                               0.0, meter.sigma)])
    try:
        p_unperturbed = arm_probability(base, probe_arm, probe_slice)
    except (ValueError, KeyError) as exc:
        raise CliError(f"probe {probe_arm}@{probe_slice}: {exc}") from exc
    rows = []
    deviations = []
    for g in sweep:
        exp = build_experiment(layout, [MeterSpec(meter.arm, meter.slice_index,
                                                  g, meter.sigma)])
        try:
            p_probe = arm_probability(exp, probe_arm, probe_slice)
        except (ValueError, KeyError) as exc:
            raise CliError(f"probe {probe_arm}@{probe_slice}: {exc}") from exc
        try:
            p_port = postselect(run_coupled(exp), port).postselection_probability
        except ZeroProbability:
            p_port = 0.0
        row = {"kind": "value", "g": g, "p_probe": p_probe, "p_port": p_port,
               "closed_form": None, "deviation": None, "pass": None}
        if canonical:
            overlap = math.exp(-g * g / (8.0 * meter.sigma ** 2))
            closed = 0.25 * (1.0 - overlap)
            row["closed_form"] = closed
            row["deviation"] = abs(p_probe - closed)
            row["pass"] = row["deviation"] < DISTURBANCE_TOL
        rows.append(row)
        deviations.append(abs(p_probe - p_unperturbed))
    # a single coupling scales every downstream coherence by the same
    # pointer overlap, so the shift away from the g=0 value must grow
    # with the coupling no matter which arm is probed
    grows = all(b - a > -1e-12 for a, b in zip(deviations, deviations[1:]))
    rows.append({"kind": "check", "g": "monotone", "p_probe": None,
                 "p_port": None, "closed_form": None, "deviation": None,
                 "pass": grows})
    return columns, rows, {"port": port, "meter": meter.label(),
                           "probe": f"{probe_arm}@{probe_slice}",
                           "sigma": meter.sigma}


def cmd_meter_sweep(layout, port, meters: list[MeterSpec], sweep: tuple[float, ...]):
    if len(sweep) < 4:
        raise CliError(f"meter-sweep needs at least 4 sweep points, got {len(sweep)}")
    if not meters:
        raise CliError("meter-sweep needs at least one --meter")
    columns = ("kind", "g", "single_re", "single_im", "single_err",
               "seq_re", "seq_im", "seq_err", "pass")
    first = meters[0]
    single_exact = weak_value(layout, port,
                              ArmProjector(first.arm, first.slice_index)).value
    seq_exact = None
    if len(meters) >= 2:
        steps = tuple((m.arm, m.slice_index) for m in meters[:2])
        try:
            seq_exact = sequential_weak_value(
                layout, port, ProjectorChain.of(*steps)
            ).value
        except ValueError as exc:
            raise CliError(f"meters {steps} do not form a chain: {exc}") from exc
    rows = []
    single_errs, seq_errs = [], []
    for g in sweep:
        specs = [MeterSpec(m.arm, m.slice_index, g, m.sigma) for m in meters]
        mixture = postselect(run_coupled(build_experiment(layout, specs)), port)
        single = estimate_weak_value(mixture, 0)
        single_err = abs(single - single_exact)
        row = {"kind": "value", "g": g,
               "single_re": single.real, "single_im": single.imag,
               "single_err": single_err,
               "seq_re": None, "seq_im": None, "seq_err": None, "pass": None}
        single_errs.append(single_err)
        if seq_exact is not None:
            seq = estimate_sequential_weak_value(mixture, 0, 1)
            row["seq_re"], row["seq_im"] = seq.real, seq.imag
            row["seq_err"] = abs(seq - seq_exact)
            seq_errs.append(row["seq_err"])
        rows.append(row)
    rows.append(_slope_row("slope_single", sweep, single_errs, "single_err"))
    if seq_exact is not None:
        rows.append(_slope_row("slope_seq", sweep, seq_errs, "seq_err"))
    meta = {"port": port, "meters": [m.label() for m in meters],
            "single_exact": [single_exact.real, single_exact.imag]}
    if seq_exact is not None:
        meta["seq_exact"] = [seq_exact.real, seq_exact.imag]
    return columns, rows, meta


def _slope_row(label: str, sweep, errs, err_column: str) -> dict:
    row = {"kind": "check", "g": label, "single_re": None, "single_im": None,
           "single_err": None, "seq_re": None, "seq_im": None, "seq_err": None,
           "pass": None}
    # An estimator that is exact at every g has nothing to fit.
    if min(errs) > 1e-13:
        slope = float(np.polyfit(np.log(sweep), np.log(errs), 1)[0])
        row[err_column] = slope
        row["pass"] = abs(slope - SLOPE_TARGET) <= SLOPE_TOL
    return row


def cmd_montecarlo(layout, port, meters: list[MeterSpec], n: int, seed: int):
    if len(meters) != 2:
        raise CliError("montecarlo needs exactly two --meter specs")
    columns = ("kind", "quantity", "estimate", "stderr", "exact", "z", "pass")
    mixture = postselect(run_coupled(build_experiment(layout, meters)), port)
    combos = [("x", "x"), ("p", "p"), ("x", "p"), ("p", "x")]
    batches = [
        sample_readings(mixture, ReadoutPlan(combo, n, seed + k))
        for k, combo in enumerate(combos)
    ]
    est = estimate_from_samples(batches)

    rows = []

    def check(quantity, estimate, stderr, exact):
        z = (estimate - exact) / stderr if stderr > 0 else math.inf
        rows.append({"kind": "value", "quantity": quantity,
                     "estimate": estimate, "stderr": stderr, "exact": exact,
                     "z": z, "pass": abs(z) < Z_LIMIT})

    for (meter_id, quad), moment in sorted(est.singles.items()):
        check(f"m{meter_id}.{quad}_mean", moment.value, moment.stderr,
              pointer_mean(mixture, meter_id, quad))
    ids = [m.meter_id for m in mixture.meters]
    for qa, qb in combos:
        moment = est.pair_moments[(qa, qb)]
        check(f"corr.{qa}{ids[0]}_{qb}{ids[1]}", moment.value, moment.stderr,
              pointer_corr(mixture, (ids[0], qa), (ids[1], qb)))
    if est.sequential is None:
        raise CliError("sequential estimate needs both couplings nonzero")
    zeta_exact = zeta_corr(mixture, ids[0], ids[1])
    check("zeta.re", est.zeta.real, est.zeta_stderr[0], zeta_exact.real)
    check("zeta.im", est.zeta.imag, est.zeta_stderr[1], zeta_exact.imag)
    seq_exact = estimate_sequential_weak_value(mixture, ids[0], ids[1])
    check("seq.re", est.sequential.real, est.sequential_stderr[0], seq_exact.real)
    check("seq.im", est.sequential.imag, est.sequential_stderr[1], seq_exact.imag)
    meta = {
        "port": port,
        "n": n,
        "seed": seed,
        "postselection_probability": mixture.postselection_probability,
        "acceptance_rates": {
            "".join(b.plan.quadratures): b.acceptance_rate for b in batches
        },
    }
    return columns, rows, meta


def cmd_oracle(layout, port, meters: list[MeterSpec],
               half_width: float | None, points: int | None):
    columns = ("kind", "name", "analytic", "grid", "abs_dev", "tol", "pass")
    exp = build_experiment(layout, meters)
    if half_width is not None:
        spec = GridSpec(half_width, points if points is not None else 1025)
    elif points is not None:
        spec = GridSpec(default_grid(exp).half_width, points)
    else:
        spec = default_grid(exp)
    analytic, grid = experiment_reports(exp, port, spec)
    table = compare(analytic, grid, 1e-7)
    rows = [
        {"kind": "value", "name": r.name, "analytic": r.analytic, "grid": r.grid,
         "abs_dev": r.abs_dev, "tol": r.tol, "pass": r.passed}
        for r in table.rows
    ]
    meta = {"port": port, "half_width": spec.half_width, "points": spec.points,
            "meters": [m.label() for m in meters]}
    return columns, rows, meta


# ----------------------------------------------------------------------
# Output


def _plain(value):
    """Strip numpy scalar wrappers so CSV and JSON render builtins only."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, float):
        return float(value)
    return value


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def render_json(command, columns, rows, meta, all_pass) -> str:
    payload = {
        "command": command,
        "meta": meta,
        "columns": list(columns),
        "rows": rows,
        "all_pass": all_pass,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------------
# Argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--network", metavar="SPEC",
                        help="'nested-mzi' (default) or path to a network file")
    common.add_argument("--postselect", metavar="PORT",
                        help="detector port to condition on (preset default: D2)")
    common.add_argument("--meter", metavar="ARM@SLICE[:g=V,sigma=V]",
                        action="append", dest="meters",
                        help="attach a pointer meter; repeatable")
    common.add_argument("--format", choices=("csv", "json"), dest="fmt")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--config", metavar="PATH", help="INI file with defaults")
    common.add_argument("--seed", type=int, help="RNG seed for sampling commands")

    parser = argparse.ArgumentParser(
        prog="tsvfsim",
        description="Two-boundary interferometer analysis from the command line.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("weak-values", parents=[common],
                   help="weak value of every arm projector at every slice")
    p = sub.add_parser("sequential", parents=[common],
                       help="sequential weak values of projector chains")
    p.add_argument("--chain", metavar="A@K,B@L,...", action="append",
                   dest="chains", help="projector chain; repeatable")
    p = sub.add_parser("disturbance", parents=[common],
                       help="probe-arm probability vs coupling strength")
    p.add_argument("--sweep", metavar="SPEC", help="coupling sweep")
    p.add_argument("--probe", metavar="ARM@SLICE", help="arm whose probability to track")
    p = sub.add_parser("meter-sweep", parents=[common],
                       help="estimator error vs coupling strength")
    p.add_argument("--sweep", metavar="SPEC", help="coupling sweep (>= 4 points)")
    p = sub.add_parser("montecarlo", parents=[common],
                       help="sampled readout vs closed-form moments")
    p.add_argument("--n", type=int, help="readings per quadrature combination")
    p = sub.add_parser("oracle", parents=[common],
                       help="closed-form route vs grid route")
    p.add_argument("--grid-half-width", type=float, dest="half_width")
    p.add_argument("--grid-points", type=int, dest="points")
    return parser


def load_config(path: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise CliError(f"cannot read config {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise CliError(f"bad config {path!r}: {exc}") from exc
    values: dict = {}
    if parser.has_section("scenario"):
        section = parser["scenario"]
        for key in ("network", "postselect", "format", "probe"):
            if key in section:
                values[key] = section[key]
        if "seed" in section:
            values["seed"] = section.getint("seed")
    if parser.has_section("meters"):
        values["meters"] = [v for _, v in sorted(parser["meters"].items())]
    if parser.has_section("chains"):
        values["chains"] = [v for _, v in sorted(parser["chains"].items())]
    if parser.has_section("sweep") and "gs" in parser["sweep"]:
        values["sweep"] = parser["sweep"]["gs"]
    if parser.has_section("montecarlo") and "n" in parser["montecarlo"]:
        values["n"] = parser["montecarlo"].getint("n")
    if parser.has_section("grid"):
        section = parser["grid"]
        if "half_width" in section:
            values["half_width"] = section.getfloat("half_width")
        if "points" in section:
            values["points"] = section.getint("points")
    return values


def _pick(flag, config: dict, key: str, fallback):
    if flag is not None:
        return flag
    return config.get(key, fallback)


def run(args) -> tuple[tuple, list, dict, str]:
    config = load_config(args.config) if args.config else {}
    network_spec = _pick(args.network, config, "network", "nested-mzi")
    layout = load_layout(network_spec)
    port = pick_port(layout, _pick(args.postselect, config, "postselect", None))
    meter_texts = _pick(args.meters, config, "meters", None)
    meters = [parse_meter_spec(t) for t in meter_texts] if meter_texts else []
    seed = _pick(args.seed, config, "seed", DEFAULT_SEED)
    fmt = _pick(args.fmt, config, "format", "csv")

    if args.command == "weak-values":
        columns, rows, meta = cmd_weak_values(layout, port)
    elif args.command == "sequential":
        chain_texts = _pick(args.chains, config, "chains", None) or ["B@2,E@3"]
        chains = [parse_chain_spec(t) for t in chain_texts]
        columns, rows, meta = cmd_sequential(layout, port, chains)
    elif args.command == "disturbance":
        sweep = parse_sweep_spec(_pick(args.sweep, config, "sweep", "0.05:0.5:0.05"))
        meter = meters[0] if meters else MeterSpec("B", 2, 0.0, 1.0)
        if len(meters) > 1:
            raise CliError("disturbance tracks a single meter")
        probe_text = _pick(args.probe, config, "probe", "E@3")
        match = _STEP_RE.match(probe_text.strip())
        if not match:
            raise CliError(f"bad probe {probe_text!r} (want arm@slice)")
        probe = (match["arm"], int(match["slice"]))
        canonical = (
            network_spec == "nested-mzi"
            and (meter.arm, meter.slice_index) == ("B", 2)
            and probe == ("E", 3)
        )
        columns, rows, meta = cmd_disturbance(layout, port, meter, probe,
                                              sweep, canonical)
    elif args.command == "meter-sweep":
        sweep = parse_sweep_spec(_pick(args.sweep, config, "sweep", "0.4x0.5x6"))
        if not meters:
            meters = [MeterSpec("C", 2, 0.0, 1.0), MeterSpec("E", 3, 0.0, 1.0)]
        columns, rows, meta = cmd_meter_sweep(layout, port, meters, sweep)
    elif args.command == "montecarlo":
        if not meters:
            meters = [MeterSpec("B", 2, 0.3, 1.0), MeterSpec("E", 3, 0.3, 1.0)]
        n = _pick(args.n, config, "n", 1_000_000)
        if n < 1:
            raise CliError("need at least one reading")
        columns, rows, meta = cmd_montecarlo(layout, port, meters, n, seed)
    elif args.command == "oracle":
        if not meters:
            meters = [MeterSpec("B", 2, 0.3, 1.0), MeterSpec("E", 3, 0.3, 1.0)]
        half_width = _pick(args.half_width, config, "half_width", None)
        points = _pick(args.points, config, "points", None)
        columns, rows, meta = cmd_oracle(layout, port, meters, half_width, points)
    else:  # pragma: no cover - argparse enforces the choices
        raise CliError(f"unknown command {args.command!r}")
    return columns, rows, meta, fmt


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        columns, rows, meta, fmt = run(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DegeneratePostselection, ZeroProbability) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows = [{key: _plain(value) for key, value in row.items()} for row in rows]
    checks = [row["pass"] for row in rows if row.get("pass") is not None]
    all_pass = all(checks)
    if fmt == "csv":
        text = render_csv(columns, rows)
    else:
        text = render_json(args.command, columns, rows, meta, all_pass)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if all_pass else 1


if __name__ == "__main__":
    raise SystemExit(main())
