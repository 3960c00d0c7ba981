"""Network layout construction, validation, text format round-trips."""

import math

import numpy as np
import pytest

from tsvfsim.network import (
    BALANCED_ANGLE,
    ComponentSpec,
    NetworkLayout,
    NetworkParseError,
    PathState,
    Stage,
    beamsplitter,
    mirror,
    nested_mzi_preset,
    parse_network,
    phase_plate,
    propagate,
    random_layout,
    serialize_network,
    stage_unitary,
    validate_network,
)

R = math.sqrt(0.5)

# Stage matrices of the preset, assembled by hand from the wiring diagram.
HAND_UNITARIES = [
    np.array([[R], [1j * R]]),
    np.array([[1, 0], [0, R], [0, 1j * R]]),
    np.array([[1, 0, 0], [0, R, 1j * R], [0, 1j * R, R]]),
    np.array([[R, 1j * R, 0], [1j * R, R, 0], [0, 0, 1]]),
]


@pytest.fixture
def preset():
    return nested_mzi_preset()


def test_preset_is_valid(preset):
    assert validate_network(preset) == []


def test_preset_slice_structure(preset):
    assert preset.slices == (
        ("in",),
        ("N", "D"),
        ("N", "B", "C"),
        ("N", "E", "F"),
        ("D1", "D2", "D3"),
    )
    assert preset.source == "in"
    assert preset.ports == ("D1", "D2", "D3")
    assert preset.port_arm("D3") == "D3"


def test_preset_stage_matrices_match_hand_assembly(preset):
    for k, expected in enumerate(HAND_UNITARIES):
        got = stage_unitary(preset, k)
        assert got.shape == expected.shape
        np.testing.assert_allclose(got, expected, atol=1e-15)


def test_stage_unitary_rejects_bad_index(preset):
    with pytest.raises(ValueError, match="invalid stage index"):
        stage_unitary(preset, 4)
    with pytest.raises(ValueError, match="invalid stage index"):
        stage_unitary(preset, -1)


def test_forward_propagation_frozen_amplitudes(preset):
    state = PathState(0, preset.slices[0], (1.0 + 0j,))
    mid = propagate(state, preset, 2)
    assert abs(mid.amplitude("N") - R) < 1e-15
    assert abs(mid.amplitude("B") - 0.5j) < 1e-15
    assert abs(mid.amplitude("C") + 0.5) < 1e-15
    out = propagate(mid, preset, 4)
    probs = {arm: abs(out.amplitude(arm)) ** 2 for arm in preset.slices[4]}
    assert abs(probs["D1"] - 0.25) < 1e-14
    assert abs(probs["D2"] - 0.25) < 1e-14
    assert abs(probs["D3"] - 0.5) < 1e-14
    assert abs(sum(probs.values()) - 1.0) < 1e-14


def test_dark_port_cancels_exactly(preset):
    # balanced-angle coefficients are forced bitwise equal, so the inner
    # interferometer's dark output holds amplitude 0.0, not ~1e-16
    state = PathState(0, preset.slices[0], (1.0 + 0j,))
    assert propagate(state, preset, 3).amplitude("E") == 0.0


def test_propagate_rejects_mismatched_state(preset):
    state = PathState(1, ("N", "X"), (1.0, 0.0))
    with pytest.raises(ValueError):
        propagate(state, preset, 2)


def test_propagate_is_forward_only(preset):
    state = PathState(2, preset.slices[2], (1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        propagate(state, preset, 1)


def test_beamsplitter_block_convention():
    theta, phi = 0.3, 1.1
    block = beamsplitter("b", ("a", "b"), ("c", "d"), theta, phi).block()
    c, s = math.cos(theta), math.sin(theta)
    expected = np.exp(1j * phi) * np.array([[c, 1j * s], [1j * s, c]])
    np.testing.assert_allclose(block, expected, atol=1e-15)


def test_single_input_beamsplitter_is_isometry_column():
    block = beamsplitter("b", ("a",), ("c", "d")).block()
    assert block.shape == (2, 1)
    np.testing.assert_allclose(block[:, 0], [R, 1j * R], atol=1e-15)


def test_balanced_angle_coefficients_bitwise_equal():
    block = beamsplitter("b", ("a", "b"), ("c", "d"), BALANCED_ANGLE).block()
    assert block[0, 0].real == block[0, 1].imag == math.sqrt(0.5)


def test_mirror_and_phase_blocks():
    np.testing.assert_array_equal(mirror("m", "a", "b").block(), [[1.0 + 0j]])
    block = phase_plate("a", math.pi / 3).block()
    assert abs(block[0, 0] - np.exp(1j * math.pi / 3)) < 1e-15


def test_component_spec_validation():
    with pytest.raises(ValueError, match="unknown component kind"):
        ComponentSpec("prism", ("a",), ("b",))
    with pytest.raises(ValueError, match="beamsplitter needs"):
        ComponentSpec("beamsplitter", ("a", "b", "c"), ("d", "e"))
    with pytest.raises(ValueError, match="exactly 1 input"):
        ComponentSpec("mirror", ("a", "b"), ("c",))
    with pytest.raises(ValueError, match="input == output"):
        ComponentSpec("phase", ("a",), ("b",))


def _tiny_layout(stages):
    return NetworkLayout(
        slices=(("a", "b"), ("c", "d")),
        stages=stages,
        source="a",
        detector_ports=(("P1", "c"), ("P2", "d")),
    )


def test_validate_reports_double_consumption():
    stage = Stage(0, (
        beamsplitter("x", ("a", "b"), ("c", "d")),
        mirror("m", "a", "c"),
    ))
    report = validate_network(_tiny_layout((stage,)))
    assert "arm a double-consumed at stage 0" in report
    assert "arm c produced twice at stage 0" in report


def test_validate_reports_unconsumed_arm():
    stage = Stage(0, (mirror("m", "a", "c"), mirror("n", "b", "d")))
    ok = validate_network(_tiny_layout((stage,)))
    assert ok == []
    stage = Stage(0, (mirror("m", "a", "c"),))
    report = validate_network(_tiny_layout((stage,)))
    assert "arm b at slice 0 is neither consumed nor passed through" in report
    assert "arm d at slice 1 is never produced by stage 0" in report


def test_validate_reports_norm_violation_from_tampered_matrix():
    bad = ComponentSpec(
        "beamsplitter", ("a", "b"), ("c", "d"),
        matrix_override=((0.9, 0.1j), (0.1j, 0.9)),
    )
    report = validate_network(_tiny_layout((Stage(0, (bad,)),)))
    assert len(report) == 1
    assert report[0].startswith("stage 0 is not norm-preserving")


def test_validate_reports_bad_ports():
    layout = NetworkLayout(
        slices=(("a",), ("b", "c")),
        stages=(Stage(0, (beamsplitter("x", ("a",), ("b", "c")),)),),
        source="a",
        detector_ports=(("P", "b"), ("Q", "nope"), ("R", "b")),
    )
    report = validate_network(layout)
    assert "detector port Q targets 'nope', not a final-slice arm" in report
    assert "arm b is targeted by more than one detector port" in report


SINGLE_MZI = """
# one balanced interferometer, output CC is dark
arm src
arm A
arm B
arm CC
arm DD
slice 0: src
slice 1: A, B
slice 2: CC, DD

source src
bs split stage=0 in=src out=A,B
bs merge stage=1 in=A,B out=CC,DD
detector bright=DD
detector dark=CC
"""


def test_parse_single_mzi_probabilities():
    layout = parse_network(SINGLE_MZI)
    assert validate_network(layout) == []
    state = propagate(PathState(0, ("src",), (1.0 + 0j,)), layout, 2)
    assert state.amplitude("CC") == 0.0
    assert abs(abs(state.amplitude("DD")) ** 2 - 1.0) < 1e-14


def test_round_trip_preset(preset):
    text = serialize_network(preset)
    again = parse_network(text)
    assert again.slices == preset.slices
    assert again.source == preset.source
    assert again.detector_ports == preset.detector_ports
    for k in range(preset.n_slices - 1):
        np.testing.assert_allclose(
            stage_unitary(again, k), stage_unitary(preset, k), atol=0
        )


def test_round_trip_preserves_theta_and_phase_exactly():
    text = """
arm a
arm b
arm c
slice 0: a
slice 1: b, c
source a
bs s stage=0 in=a out=b,c theta=0.12345678901234567 phase=2.5
detector P1=b
detector P2=c
"""
    layout = parse_network(text)
    comp = layout.stages[0].components[0]
    assert comp.theta == 0.12345678901234567
    assert comp.phase == 2.5
    again = parse_network(serialize_network(layout))
    assert again.stages[0].components[0].theta == comp.theta


@pytest.mark.parametrize("seed", range(12))
def test_random_layout_round_trips(seed):
    layout = random_layout(seed)
    assert validate_network(layout) == []
    again = parse_network(serialize_network(layout))
    assert again.slices == layout.slices
    for k in range(layout.n_slices - 1):
        np.testing.assert_allclose(
            stage_unitary(again, k), stage_unitary(layout, k), atol=0
        )


def test_serialize_rejects_matrix_overrides():
    bad = ComponentSpec(
        "beamsplitter", ("a", "b"), ("c", "d"),
        matrix_override=((R, 1j * R), (1j * R, R)),
    )
    layout = _tiny_layout((Stage(0, (bad,)),))
    with pytest.raises(ValueError, match="not serializable"):
        serialize_network(layout)


@pytest.mark.parametrize("text,line,fragment", [
    ("arm\n", 1, "usage: arm <name>"),
    ("arm a\nslice zero: a\n", 2, "usage: slice <k>:"),
    ("arm a\nslice 0: a\nsource q\n", 3, "unknown arm reference 'q'"),
    ("arm a\narm a\n", 2, "declared twice"),
    ("arm a\nslice 0: a\nslice 1: a\nsource a\nbs s stage=0 out=a theta=1\n",
     5, "missing parameter 'in'"),
    ("arm a\nslice 0: a\nsource a\nwormhole x\n", 4, "unknown directive"),
])
def test_parse_errors_carry_position(text, line, fragment):
    with pytest.raises(NetworkParseError) as err:
        parse_network(text)
    assert err.value.line == line
    assert fragment in str(err.value)
    assert f"line {line}," in str(err.value)


def test_parse_error_column_points_at_token():
    with pytest.raises(NetworkParseError) as err:
        parse_network("arm a\nslice 0: a\nsource Q\n")
    assert err.value.line == 3
    assert err.value.column == 8  # the Q token


def test_parse_reports_double_consumption_with_position():
    text = """
arm a
arm b
arm c
slice 0: a
slice 1: b, c
source a
bs s stage=0 in=a out=b,c
mirror m stage=0 in=a out=b
detector P1=b
detector P2=c
"""
    with pytest.raises(NetworkParseError) as err:
        parse_network(text)
    assert "double-consumed" in str(err.value)


def test_parse_requires_source_and_detectors():
    with pytest.raises(NetworkParseError, match="source"):
        parse_network("arm a\nslice 0: a\ndetector P=a\n")
    with pytest.raises(NetworkParseError, match="detector"):
        parse_network("arm a\nslice 0: a\nsource a\n")


def test_unknown_arm_in_component():
    text = "arm a\narm b\nslice 0: a\nslice 1: b\nsource a\nmirror m stage=0 in=Q out=b\n"
    with pytest.raises(NetworkParseError, match="unknown arm reference 'Q'"):
        parse_network(text)


def test_component_equality_ignores_name():
    a = beamsplitter("left", ("a",), ("b", "c"), 0.5)
    b = beamsplitter("right", ("a",), ("b", "c"), 0.5)
    assert a == b
    assert a != beamsplitter("left", ("a",), ("b", "c"), 0.6)
