"""Discrete-path interferometer networks.

A network is a sequence of time slices, each holding a set of labelled arms
that carry complex amplitudes.  Between consecutive slices a stage acts: a
collection of beamsplitters, mirrors and phase plates, plus arms that pass
through untouched.  Each stage assembles into a norm-preserving matrix, so a
single-photon amplitude vector can be pushed forward (or pulled backward)
slice by slice.

Conventions
-----------
* A beamsplitter with mixing angle theta applies
  ``[[cos(theta), i sin(theta)], [i sin(theta), cos(theta)]]`` (times an
  optional global phase): transmission is real, reflection picks up ``i``.
  ``theta = pi/4`` gives the balanced 50-50 splitter.
* Mirrors act as the identity; they only rename an arm.
* A beamsplitter may declare a single input arm, in which case its second
  port carries vacuum and the stage matrix becomes a tall isometry.

Networks also round-trip through a plain text format; see
:func:`parse_network` for the grammar.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BALANCED_ANGLE",
    "ComponentSpec",
    "NESTED_MZI_T1",
    "NESTED_MZI_T2",
    "NetworkLayout",
    "NetworkParseError",
    "PathState",
    "Stage",
    "UNITARITY_TOL",
    "beamsplitter",
    "mirror",
    "nested_mzi_preset",
    "parse_network",
    "phase_plate",
    "propagate",
    "random_layout",
    "serialize_network",
    "stage_unitary",
    "validate_network",
]

UNITARITY_TOL = 1e-12
BALANCED_ANGLE = math.pi / 4

_ARM_RE = re.compile(r"^[A-Za-z0-9_]+$")


class NetworkParseError(ValueError):
    """Raised when network text cannot be parsed; carries 1-based line/column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _check_arm_name(name: str) -> str | None:
    if not name:
        return "empty arm name"
    if not _ARM_RE.match(name):
        return f"invalid arm name {name!r} (letters, digits and _ only)"
    return None


@dataclass(frozen=True)
class ComponentSpec:
    """One optical element inside a stage.

    kind is "beamsplitter", "mirror" or "phase".  ``theta`` is the mixing
    angle (beamsplitters only); ``phase`` is a global phase for
    beamsplitters and the applied phase for phase plates.  ``name`` is a
    label for the text format and is ignored by structural equality.
    ``matrix_override`` (rows x cols as nested tuples) substitutes an
    explicit block for testing; it is not serializable.
    """

    kind: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    theta: float = 0.0
    phase: float = 0.0
    name: str = field(default="", compare=False)
    matrix_override: tuple[tuple[complex, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("beamsplitter", "mirror", "phase"):
            raise ValueError(f"unknown component kind {self.kind!r}")
        n_in, n_out = len(self.inputs), len(self.outputs)
        if self.kind == "beamsplitter":
            if n_in not in (1, 2) or n_out != 2:
                raise ValueError("beamsplitter needs 1-2 inputs and exactly 2 outputs")
        else:
            if n_in != 1 or n_out != 1:
                raise ValueError(f"{self.kind} needs exactly 1 input and 1 output")
        if self.kind == "phase" and self.inputs != self.outputs:
            raise ValueError("phase plate must act on a single arm (input == output)")

    def block(self) -> np.ndarray:
        """Complex block of shape (len(outputs), len(inputs))."""
        if self.matrix_override is not None:
            return np.array(self.matrix_override, dtype=complex)
        if self.kind == "beamsplitter":
            if self.theta == BALANCED_ANGLE:
                # cos(pi/4) and sin(pi/4) round to values 1 ulp apart; a
                # balanced splitter needs them bitwise equal so that dark
                # ports cancel to exactly zero.
                c = s = math.sqrt(0.5)
            else:
                c, s = math.cos(self.theta), math.sin(self.theta)
            full = np.exp(1j * self.phase) * np.array([[c, 1j * s], [1j * s, c]])
            return full[:, : len(self.inputs)]
        if self.kind == "mirror":
            return np.array([[1.0 + 0j]])
        return np.array([[np.exp(1j * self.phase)]])


@dataclass(frozen=True)
class Stage:
    """The elements acting between slice ``index`` and ``index + 1``."""

    index: int
    components: tuple[ComponentSpec, ...]
    pass_through: tuple[str, ...] = ()


@dataclass(frozen=True)
class NetworkLayout:
    """Slices, stages, the source arm and the named detector ports.

    ``slices`` is an ordered tuple of arm tuples; ``detector_ports`` maps
    port names to arms of the final slice (stored as ordered pairs).
    """

    slices: tuple[tuple[str, ...], ...]
    stages: tuple[Stage, ...]
    source: str
    detector_ports: tuple[tuple[str, str], ...]

    @property
    def n_slices(self) -> int:
        return len(self.slices)

    @property
    def final_slice(self) -> int:
        return len(self.slices) - 1

    def arms_at(self, slice_index: int) -> tuple[str, ...]:
        return self.slices[slice_index]

    def arm_index(self, slice_index: int, arm: str) -> int:
        try:
            return self.slices[slice_index].index(arm)
        except ValueError:
            raise ValueError(f"arm {arm!r} is not on slice {slice_index}") from None

    def port_arm(self, port: str) -> str:
        for name, arm in self.detector_ports:
            if name == port:
                return arm
        raise ValueError(f"unknown detector port {port!r}")

    @property
    def ports(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.detector_ports)


@dataclass(frozen=True, eq=False)
class PathState:
    """Amplitude vector over the arms of one slice."""

    slice_index: int
    arms: tuple[str, ...]
    amplitudes: np.ndarray

    def amplitude(self, arm: str) -> complex:
        return complex(self.amplitudes[self.arms.index(arm)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def beamsplitter(name, inputs, outputs, theta=BALANCED_ANGLE, phase=0.0) -> ComponentSpec:
    return ComponentSpec("beamsplitter", tuple(inputs), tuple(outputs),
                         theta=theta, phase=phase, name=name)


def mirror(name, input_arm, output_arm) -> ComponentSpec:
    return ComponentSpec("mirror", (input_arm,), (output_arm,), name=name)


def phase_plate(arm, value) -> ComponentSpec:
    return ComponentSpec("phase", (arm,), (arm,), phase=value)


def validate_network(layout: NetworkLayout) -> list[str]:
    """Check every structural invariant; return a list of violation messages.

    An empty list means the layout is valid.  Checks cover arm naming,
    slice coverage (each input arm consumed exactly once, each output arm
    produced exactly once), source/port wiring, and numeric
    norm-preservation ``max|U†U - I| < 1e-12`` of every stage matrix.
    """
    report: list[str] = []
    if not layout.slices:
        return ["layout has no slices"]
    if len(layout.stages) != len(layout.slices) - 1:
        report.append(
            f"{len(layout.slices)} slices need {len(layout.slices) - 1} stages, "
            f"found {len(layout.stages)}"
        )
    for k, arms in enumerate(layout.slices):
        if not arms:
            report.append(f"slice {k} is empty")
        for arm in arms:
            msg = _check_arm_name(arm)
            if msg:
                report.append(f"slice {k}: {msg}")
        dupes = [a for a, c in Counter(arms).items() if c > 1]
        for a in dupes:
            report.append(f"arm {a} listed twice on slice {k}")

    if layout.source not in layout.slices[0]:
        report.append(f"source arm {layout.source!r} is not on slice 0")

    port_names = [name for name, _ in layout.detector_ports]
    for name, c in Counter(port_names).items():
        if c > 1:
            report.append(f"detector port {name} declared twice")
    port_arms = [arm for _, arm in layout.detector_ports]
    for name, arm in layout.detector_ports:
        if arm not in layout.slices[-1]:
            report.append(f"detector port {name} targets {arm!r}, not a final-slice arm")
    for arm, c in Counter(port_arms).items():
        if c > 1:
            report.append(f"arm {arm} is targeted by more than one detector port")

    for stage in layout.stages[: len(layout.slices) - 1]:
        k = stage.index
        ins, outs = layout.slices[k], layout.slices[k + 1]
        consumed: Counter[str] = Counter()
        produced: Counter[str] = Counter()
        for comp in stage.components:
            for arm in comp.inputs:
                if arm not in ins:
                    report.append(f"stage {k}: input arm {arm!r} is not on slice {k}")
                consumed[arm] += 1
            for arm in comp.outputs:
                if arm not in outs:
                    report.append(f"stage {k}: output arm {arm!r} is not on slice {k + 1}")
                produced[arm] += 1
        for arm in stage.pass_through:
            if arm not in ins:
                report.append(f"stage {k}: pass-through arm {arm!r} is not on slice {k}")
            if arm not in outs:
                report.append(f"stage {k}: pass-through arm {arm!r} is not on slice {k + 1}")
            consumed[arm] += 1
            produced[arm] += 1
        for arm, c in consumed.items():
            if c > 1:
                report.append(f"arm {arm} double-consumed at stage {k}")
        for arm, c in produced.items():
            if c > 1:
                report.append(f"arm {arm} produced twice at stage {k}")
        for arm in ins:
            if consumed[arm] == 0:
                report.append(
                    f"arm {arm} at slice {k} is neither consumed nor passed through"
                )
        for arm in outs:
            if produced[arm] == 0:
                report.append(f"arm {arm} at slice {k + 1} is never produced by stage {k}")

    if not report:
        for k in range(len(layout.stages)):
            u = stage_unitary(layout, k)
            gram = u.conj().T @ u
            dev = float(np.max(np.abs(gram - np.eye(u.shape[1]))))
            if dev >= UNITARITY_TOL:
                report.append(
                    f"stage {k} is not norm-preserving (max|U†U - I| = {dev:.3e})"
                )
    return report


def stage_unitary(layout: NetworkLayout, stage_index: int) -> np.ndarray:
    """Assemble the stage matrix mapping slice k amplitudes to slice k+1.

    Rows follow ``layout.slices[k + 1]``, columns ``layout.slices[k]``.  The
    matrix is square when both slices hold the same number of arms and a
    tall isometry when a beamsplitter feeds from a single (vacuum-padded)
    input.
    """
    if not 0 <= stage_index < len(layout.stages):
        raise ValueError(f"invalid stage index {stage_index}")
    stage = layout.stages[stage_index]
    ins = layout.slices[stage_index]
    outs = layout.slices[stage_index + 1]
    u = np.zeros((len(outs), len(ins)), dtype=complex)
    for comp in stage.components:
        block = comp.block()
        if block.shape != (len(comp.outputs), len(comp.inputs)):
            raise ValueError(
                f"stage {stage_index}: component {comp.name or comp.kind} block shape "
                f"{block.shape} does not match its port counts"
            )
        for r, out_arm in enumerate(comp.outputs):
            for c, in_arm in enumerate(comp.inputs):
                u[outs.index(out_arm), ins.index(in_arm)] = block[r, c]
    for arm in stage.pass_through:
        u[outs.index(arm), ins.index(arm)] = 1.0
    return u


def propagate(state: PathState, layout: NetworkLayout, to_slice: int) -> PathState:
    """Evolve an amplitude vector from its slice to ``to_slice`` (forward only).

    Parameters
    ----------
    state : PathState
        Amplitudes on ``state.slice_index``; the arm order must match the
        layout's slice.
    layout : NetworkLayout
    to_slice : int
        Target slice, ``>= state.slice_index``.

    Returns
    -------
    PathState on ``to_slice``.
    """
    if state.arms != layout.slices[state.slice_index]:
        raise ValueError(
            f"state arms {state.arms} do not match slice {state.slice_index}"
        )
    if not 0 <= to_slice < layout.n_slices:
        raise ValueError(f"invalid slice index {to_slice}")
    if to_slice < state.slice_index:
        raise ValueError("propagate only runs forward; use a backward state instead")
    vec = np.asarray(state.amplitudes, dtype=complex)
    for k in range(state.slice_index, to_slice):
        vec = stage_unitary(layout, k) @ vec
    return PathState(to_slice, layout.slices[to_slice], vec)


# Slice indices of the two weak-coupling times in the nested preset.
NESTED_MZI_T1 = 2
NESTED_MZI_T2 = 3


def nested_mzi_preset() -> NetworkLayout:
    """Balanced nested Mach-Zehnder interferometer with a dark inner port.

    Five slices: {in} -> {N, D} -> {N, B, C} -> {N, E, F} -> {D1, D2, D3}.
    The outer arm N runs straight to the final recombiner; D feeds the
    inner interferometer (arms B, C) whose recombined output E carries
    exactly zero amplitude while F (modulus 1 from D) exits to port D3.
    All beamsplitters are balanced.  Slice 2 and slice 3 are the two
    coupling times exposed as ``NESTED_MZI_T1`` / ``NESTED_MZI_T2``.
    """
    q = BALANCED_ANGLE
    layout = NetworkLayout(
        slices=(
            ("in",),
            ("N", "D"),
            ("N", "B", "C"),
            ("N", "E", "F"),
            ("D1", "D2", "D3"),
        ),
        stages=(
            Stage(0, (beamsplitter("BS1", ("in",), ("N", "D"), q),)),
            Stage(1, (beamsplitter("BS2", ("D",), ("B", "C"), q),), ("N",)),
            Stage(2, (beamsplitter("BS3", ("B", "C"), ("E", "F"), q),), ("N",)),
            Stage(
                3,
                (
                    beamsplitter("BS4", ("N", "E"), ("D1", "D2"), q),
                    mirror("MF", "F", "D3"),
                ),
            ),
        ),
        source="in",
        detector_ports=(("D1", "D1"), ("D2", "D2"), ("D3", "D3")),
    )
    # The inner interferometer must be tuned dark toward E: amplitude(D -> E)
    # exactly 0 and |amplitude(D -> F)| = 1.  Guard the construction.
    probe = PathState(1, layout.slices[1], np.array([0.0, 1.0], dtype=complex))
    at_t2 = propagate(probe, layout, NESTED_MZI_T2)
    if abs(at_t2.amplitude("E")) > 1e-15 or abs(abs(at_t2.amplitude("F")) - 1.0) > 1e-15:
        raise RuntimeError("nested preset mis-tuned: inner output E is not dark")
    return layout


def random_layout(seed: int, max_arms: int = 5, max_stages: int = 5) -> NetworkLayout:
    """Deterministic random layered network for property testing.

    Every slice shares one arm set; each stage shuffles the arms, pairs
    them into beamsplitters with random angles and phases, and routes any
    leftover arm through a phase plate, a mirror swap or a bare
    pass-through.  All stage matrices are square unitaries.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    n_arms = int(rng.integers(2, max_arms + 1))
    n_stages = int(rng.integers(2, max_stages + 1))
    arms = tuple(f"a{i}" for i in range(n_arms))
    stages = []
    for k in range(n_stages):
        order = list(rng.permutation(n_arms))
        comps: list[ComponentSpec] = []
        passes: list[str] = []
        i = 0
        while i + 1 < len(order):
            pair = (arms[order[i]], arms[order[i + 1]])
            theta = float(rng.uniform(0.0, math.pi / 2))
            phase = float(rng.uniform(0.0, 2 * math.pi))
            comps.append(beamsplitter(f"BS{k}_{i // 2}", pair, pair, theta, phase))
            i += 2
        if i < len(order):
            arm = arms[order[i]]
            choice = rng.integers(0, 3)
            if choice == 0:
                passes.append(arm)
            elif choice == 1:
                comps.append(phase_plate(arm, float(rng.uniform(0.0, 2 * math.pi))))
            else:
                comps.append(mirror(f"M{k}", arm, arm))
        stages.append(Stage(k, tuple(comps), tuple(passes)))
    source = arms[int(rng.integers(0, n_arms))]
    ports = tuple((f"P_{a}", a) for a in arms)
    return NetworkLayout(
        slices=tuple(arms for _ in range(n_stages + 1)),
        stages=tuple(stages),
        source=source,
        detector_ports=ports,
    )


# --------------------------------------------------------------------------
# Text format
#
#   arm <name>
#   slice <k>: <arm>, <arm>, ...
#   source <arm>
#   bs <name> stage=<k> in=<a>[,<b>] out=<c>,<d> [theta=<rad>] [phase=<rad>]
#       (theta defaults to the balanced angle pi/4, phase to 0)
#   mirror <name> stage=<k> in=<a> out=<b>
#   phase stage=<k> arm=<a> value=<rad>
#   pass stage=<k> arm=<a>
#   detector <port>=<arm>
#
# '#' starts a comment. Arms must be declared before use; every input arm
# of a stage must be consumed exactly once (component or pass line).

_TOKEN_RE = re.compile(r"\S+")
_KV_RE = re.compile(r"^([A-Za-z_]+)=(.*)$")


def _fail(msg: str, line: int, col: int):
    raise NetworkParseError(msg, line, col)


def _parse_float(text: str, line: int, col: int) -> float:
    try:
        return float(text)
    except ValueError:
        _fail(f"invalid number {text!r}", line, col)


def _parse_int(text: str, line: int, col: int) -> int:
    try:
        return int(text)
    except ValueError:
        _fail(f"invalid integer {text!r}", line, col)


class _LineParser:
    """Splits a directive line into key=value fields with column tracking."""

    def __init__(self, line: str, lineno: int, tokens: list[tuple[str, int]]):
        self.line = line
        self.lineno = lineno
        self.fields: dict[str, tuple[str, int, int]] = {}  # value, value col, key col
        for text, col in tokens:
            m = _KV_RE.match(text)
            if not m:
                _fail(f"expected key=value, found {text!r}", lineno, col)
            key, value = m.group(1), m.group(2)
            if key in self.fields:
                _fail(f"duplicate parameter {key!r}", lineno, col)
            if not value:
                _fail(f"empty value for {key!r}", lineno, col)
            self.fields[key] = (value, col + len(key) + 1, col)

    def take(self, key: str, required: bool = True) -> tuple[str, int] | None:
        if key not in self.fields:
            if required:
                _fail(f"missing parameter {key!r}", self.lineno, len(self.line) + 1)
            return None
        value, vcol, _ = self.fields.pop(key)
        return value, vcol

    def finish(self):
        for key, (_, _, kcol) in self.fields.items():
            _fail(f"unknown parameter {key!r}", self.lineno, kcol)


def parse_network(text: str) -> NetworkLayout:
    """Parse the plain text network format into a validated layout.

    Parameters
    ----------
    text : str
        Network description; see the module docstring for the grammar.

    Returns
    -------
    NetworkLayout
        A layout satisfying every structural invariant.

    Raises
    ------
    NetworkParseError
        On any syntax or consistency problem, reporting the 1-based line
        and column (e.g. an undeclared arm is named together with the line
        that references it).
    """
    declared: dict[str, int] = {}
    slices: dict[int, tuple[list[str], int]] = {}
    source: tuple[str, int] | None = None
    detectors: list[tuple[str, str, int]] = []
    components: list[tuple[int, ComponentSpec, int]] = []  # (stage, spec, line)
    passes: list[tuple[int, str, int]] = []
    n_lines = 0

    def check_declared(arm: str, lineno: int, col: int) -> str:
        err = _check_arm_name(arm)
        if err:
            _fail(err, lineno, col)
        if arm not in declared:
            _fail(f"unknown arm reference {arm!r}", lineno, col)
        return arm

    def split_arms(value: str, lineno: int, col: int) -> list[tuple[str, int]]:
        out = []
        offset = 0
        for piece in value.split(","):
            name = piece.strip()
            sub = col + offset + (len(piece) - len(piece.lstrip()))
            if not name:
                _fail("empty arm in list", lineno, sub)
            out.append((name, sub))
            offset += len(piece) + 1
        return out

    for lineno, raw in enumerate(text.splitlines(), start=1):
        n_lines = lineno
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        tokens = [(m.group(0), m.start() + 1) for m in _TOKEN_RE.finditer(line)]
        directive, dcol = tokens[0]

        if directive == "arm":
            if len(tokens) != 2:
                _fail("usage: arm <name>", lineno, dcol)
            name, col = tokens[1]
            err = _check_arm_name(name)
            if err:
                _fail(err, lineno, col)
            if name in declared:
                _fail(f"arm {name!r} declared twice", lineno, col)
            declared[name] = lineno

        elif directive == "slice":
            m = re.match(r"^\s*slice\s+(\d+)\s*:\s*(.*)$", line)
            if not m:
                _fail("usage: slice <k>: <arm>, <arm>, ...", lineno, dcol)
            k = int(m.group(1))
            if k in slices:
                _fail(f"slice {k} declared twice", lineno, dcol)
            body, body_col = m.group(2), m.start(2) + 1
            if not body.strip():
                _fail(f"slice {k} lists no arms", lineno, body_col)
            arms = [check_declared(a, lineno, c) for a, c in split_arms(body, lineno, body_col)]
            dupes = [a for a, c in Counter(arms).items() if c > 1]
            if dupes:
                _fail(f"arm {dupes[0]!r} listed twice on slice {k}", lineno, body_col)
            slices[k] = (arms, lineno)

        elif directive == "source":
            if len(tokens) != 2:
                _fail("usage: source <arm>", lineno, dcol)
            if source is not None:
                _fail("source declared twice", lineno, dcol)
            name, col = tokens[1]
            source = (check_declared(name, lineno, col), lineno)

        elif directive == "detector":
            if len(tokens) != 2:
                _fail("usage: detector <port>=<arm>", lineno, dcol)
            text_, col = tokens[1]
            if "=" not in text_:
                _fail("usage: detector <port>=<arm>", lineno, col)
            port, arm = text_.split("=", 1)
            if not port:
                _fail("empty detector port name", lineno, col)
            if any(port == p for p, _, _ in detectors):
                _fail(f"detector port {port!r} declared twice", lineno, col)
            arm = check_declared(arm, lineno, col + len(port) + 1)
            detectors.append((port, arm, lineno))

        elif directive == "bs":
            if len(tokens) < 2 or "=" in tokens[1][0]:
                _fail("usage: bs <name> stage=... in=... out=... theta=... phase=...",
                      lineno, dcol)
            name = tokens[1][0]
            p = _LineParser(line, lineno, tokens[2:])
            stage_txt, scol = p.take("stage")
            in_txt, icol = p.take("in")
            out_txt, ocol = p.take("out")
            theta_field = p.take("theta", required=False)
            phase_field = p.take("phase", required=False)
            p.finish()
            stage = _parse_int(stage_txt, lineno, scol)
            ins = tuple(check_declared(a, lineno, c)
                        for a, c in split_arms(in_txt, lineno, icol))
            outs = tuple(check_declared(a, lineno, c)
                         for a, c in split_arms(out_txt, lineno, ocol))
            theta = BALANCED_ANGLE
            if theta_field is not None:
                theta = _parse_float(theta_field[0], lineno, theta_field[1])
            phase = 0.0
            if phase_field is not None:
                phase = _parse_float(phase_field[0], lineno, phase_field[1])
            if len(ins) not in (1, 2):
                _fail("beamsplitter needs 1 or 2 input arms", lineno, icol)
            if len(outs) != 2:
                _fail("beamsplitter needs exactly 2 output arms", lineno, ocol)
            components.append(
                (stage, beamsplitter(name, ins, outs, theta, phase), lineno)
            )

        elif directive == "mirror":
            if len(tokens) < 2 or "=" in tokens[1][0]:
                _fail("usage: mirror <name> stage=... in=... out=...", lineno, dcol)
            name = tokens[1][0]
            p = _LineParser(line, lineno, tokens[2:])
            stage_txt, scol = p.take("stage")
            in_txt, icol = p.take("in")
            out_txt, ocol = p.take("out")
            p.finish()
            stage = _parse_int(stage_txt, lineno, scol)
            arm_in = check_declared(in_txt, lineno, icol)
            arm_out = check_declared(out_txt, lineno, ocol)
            components.append((stage, mirror(name, arm_in, arm_out), lineno))

        elif directive == "phase":
            p = _LineParser(line, lineno, tokens[1:])
            stage_txt, scol = p.take("stage")
            arm_txt, acol = p.take("arm")
            value_txt, vcol = p.take("value")
            p.finish()
            stage = _parse_int(stage_txt, lineno, scol)
            arm = check_declared(arm_txt, lineno, acol)
            value = _parse_float(value_txt, lineno, vcol)
            components.append((stage, phase_plate(arm, value), lineno))

        elif directive == "pass":
            p = _LineParser(line, lineno, tokens[1:])
            stage_txt, scol = p.take("stage")
            arm_txt, acol = p.take("arm")
            p.finish()
            stage = _parse_int(stage_txt, lineno, scol)
            arm = check_declared(arm_txt, lineno, acol)
            passes.append((stage, arm, lineno))

        else:
            _fail(f"unknown directive {directive!r}", lineno, dcol)

    end = (max(n_lines, 1), 1)
    if not slices:
        _fail("no slice declarations", *end)
    n_slices = max(slices) + 1
    for k in range(n_slices):
        if k not in slices:
            _fail(f"missing declaration for slice {k}", *end)
    if source is None:
        _fail("missing source declaration", *end)
    if not detectors:
        _fail("missing detector declaration", *end)

    slice_arms = tuple(tuple(slices[k][0]) for k in range(n_slices))
    if source[0] not in slice_arms[0]:
        _fail(f"source arm {source[0]!r} is not on slice 0", source[1], 1)
    for port, arm, lineno in detectors:
        if arm not in slice_arms[-1]:
            _fail(f"detector port {port} targets {arm!r}, not a final-slice arm",
                  lineno, 1)

    n_stages = n_slices - 1
    for stage, comp, lineno in components:
        if not 0 <= stage < n_stages:
            _fail(f"stage {stage} out of range (0..{n_stages - 1})", lineno, 1)
    for stage, arm, lineno in passes:
        if not 0 <= stage < n_stages:
            _fail(f"stage {stage} out of range (0..{n_stages - 1})", lineno, 1)

    # Per-stage consumption bookkeeping with line attribution.
    for k in range(n_stages):
        ins, outs = slice_arms[k], slice_arms[k + 1]
        consumed: dict[str, int] = {}
        produced: dict[str, int] = {}
        for stage, comp, lineno in components:
            if stage != k:
                continue
            for arm in comp.inputs:
                if arm not in ins:
                    _fail(f"arm {arm!r} is not on slice {k}", lineno, 1)
                if arm in consumed:
                    _fail(f"arm {arm} double-consumed at stage {k}", lineno, 1)
                consumed[arm] = lineno
            for arm in comp.outputs:
                if arm not in outs:
                    _fail(f"arm {arm!r} is not on slice {k + 1}", lineno, 1)
                if arm in produced:
                    _fail(f"arm {arm} produced twice at stage {k}", lineno, 1)
                produced[arm] = lineno
        for stage, arm, lineno in passes:
            if stage != k:
                continue
            if arm not in ins or arm not in outs:
                _fail(f"pass-through arm {arm!r} must be on slices {k} and {k + 1}",
                      lineno, 1)
            if arm in consumed:
                _fail(f"arm {arm} double-consumed at stage {k}", lineno, 1)
            if arm in produced:
                _fail(f"arm {arm} produced twice at stage {k}", lineno, 1)
            consumed[arm] = produced[arm] = lineno
        for arm in ins:
            if arm not in consumed:
                _fail(
                    f"arm {arm} at slice {k} is neither consumed nor passed through",
                    slices[k][1], 1,
                )
        for arm in outs:
            if arm not in produced:
                _fail(f"arm {arm} at slice {k + 1} is never produced by stage {k}",
                      slices[k + 1][1], 1)

    layout = NetworkLayout(
        slices=slice_arms,
        stages=tuple(
            Stage(
                k,
                tuple(c for s, c, _ in components if s == k),
                tuple(a for s, a, _ in passes if s == k),
            )
            for k in range(n_stages)
        ),
        source=source[0],
        detector_ports=tuple((port, arm) for port, arm, _ in detectors),
    )
    problems = validate_network(layout)
    if problems:
        _fail("; ".join(problems), 1, 1)
    return layout


def serialize_network(layout: NetworkLayout) -> str:
    """Render a layout to text such that ``parse_network`` reproduces it.

    Slices, components, parameters and port wiring round-trip exactly
    (floats are written in shortest round-trip decimal form); pass-through
    arms get explicit ``pass`` lines.  Layouts carrying matrix overrides
    are not serializable.
    """
    lines: list[str] = []
    seen: list[str] = []
    for arms in layout.slices:
        for arm in arms:
            if arm not in seen:
                seen.append(arm)
    lines.extend(f"arm {a}" for a in seen)
    for k, arms in enumerate(layout.slices):
        lines.append(f"slice {k}: " + ", ".join(arms))
    lines.append(f"source {layout.source}")
    for stage in layout.stages:
        for i, comp in enumerate(stage.components):
            if comp.matrix_override is not None:
                raise ValueError("matrix overrides are not serializable")
            if comp.kind == "beamsplitter":
                name = comp.name or f"BS{stage.index}_{i}"
                lines.append(
                    f"bs {name} stage={stage.index} in={','.join(comp.inputs)} "
                    f"out={','.join(comp.outputs)} theta={comp.theta!r} "
                    f"phase={comp.phase!r}"
                )
            elif comp.kind == "mirror":
                name = comp.name or f"M{stage.index}_{i}"
                lines.append(
                    f"mirror {name} stage={stage.index} in={comp.inputs[0]} "
                    f"out={comp.outputs[0]}"
                )
            else:
                lines.append(
                    f"phase stage={stage.index} arm={comp.inputs[0]} "
                    f"value={comp.phase!r}"
                )
        for arm in stage.pass_through:
            lines.append(f"pass stage={stage.index} arm={arm}")
    for port, arm in layout.detector_ports:
        lines.append(f"detector {port}={arm}")
    return "\n".join(lines) + "\n"
