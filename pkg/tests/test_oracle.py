"""Grid route vs closed-form route.

The grid evolution knows nothing about the pointer algebra: it just
multiplies wavefunction arrays through the same stage matrices and shifts
them on coupling. Agreement within 1e-7 absolute (usually far better) on
every probability and moment is the library's strongest self-check.
"""

import math

import numpy as np
import pytest

from tsvfsim.meter import arm_probability, attach_meter, new_experiment
from tsvfsim.oracle import (
    ComparisonTable,
    GridSpec,
    GridTooSmall,
    compare,
    default_grid,
    experiment_reports,
    grid_arm_probability,
    grid_moments,
    grid_run,
)
from tsvfsim.network import nested_mzi_preset, random_layout
from tsvfsim.tsvf import postselection_amplitude

T1, T2 = 2, 3


@pytest.fixture
def preset():
    return nested_mzi_preset()


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(-1.0)
    with pytest.raises(ValueError):
        GridSpec(10.0, points=1024)  # even
    with pytest.raises(ValueError):
        GridSpec(10.0, points=1)
    spec = GridSpec(8.0, 17)
    assert spec.spacing == 1.0
    assert spec.axis[0] == -8.0 and spec.axis[-1] == 8.0


def test_default_grid_rule(preset):
    exp = attach_meter(new_experiment(preset), "B", T1, 0.4, 1.5)
    exp = attach_meter(exp, "E", T2, 0.2, 0.5)
    spec = default_grid(exp)
    assert spec.half_width == 10 * 1.5 + 2 * 0.4
    assert spec.points == 1025


def test_no_meter_grid_reduces_to_amplitudes(preset):
    exp = new_experiment(preset)
    analytic, grid = experiment_reports(exp, "D2")
    for port in preset.ports:
        exact = abs(postselection_amplitude(preset, port)) ** 2
        assert abs(grid.values[f"P({port})"] - exact) < 1e-12
    table = compare(analytic, grid, 1e-10)
    assert table.all_pass


def test_one_meter_report_agrees(preset):
    exp = attach_meter(new_experiment(preset), "B", T1, 0.3, 1.0)
    analytic, grid = experiment_reports(exp, "D2")
    assert set(analytic.values) == set(grid.values)
    table = compare(analytic, grid, 1e-8)
    assert table.all_pass, [r for r in table.rows if not r.passed]


def test_two_meter_report_agrees(preset):
    exp = attach_meter(new_experiment(preset), "B", T1, 0.3, 1.0)
    exp = attach_meter(exp, "E", T2, 0.5, 0.8)
    analytic, grid = experiment_reports(exp, "D2")
    table = compare(analytic, grid, 1e-7)
    assert table.all_pass, [r for r in table.rows if not r.passed]
    # zeta rows exist and match tightly
    assert "zeta.0_1.re" in analytic.values
    worst = max(table.rows, key=lambda r: r.abs_dev)
    assert worst.abs_dev < 1e-9


def test_integer_spacing_coupling_uses_exact_shift(preset):
    spec = GridSpec(10.24, 1025)  # spacing 0.02
    g = 0.3  # exactly 15 grid steps
    exp = attach_meter(new_experiment(preset), "B", T1, g, 1.0)
    assert abs(g / spec.spacing - round(g / spec.spacing)) < 1e-12
    assert abs(
        grid_arm_probability(exp, "E", T2, spec) - arm_probability(exp, "E", T2)
    ) < 1e-12


def test_pointwise_marginal_density(preset):
    # on arm E at t2 the joint wavefunction is (i/(2 sqrt 2))(phi_g - phi_0)
    g, sigma = 0.7, 1.0
    exp = attach_meter(new_experiment(preset), "B", T1, g, sigma)
    spec = default_grid(exp)
    state = grid_run(exp, spec, to_slice=T2)
    x = spec.axis
    idx = preset.arm_index(T2, "E")
    density = np.abs(state.array[idx]) ** 2

    def phi(c):
        return (2 * math.pi * sigma**2) ** -0.25 * np.exp(
            -((x - c) ** 2) / (4 * sigma**2)
        )

    expected = np.abs(1j / (2 * math.sqrt(2)) * (phi(g) - phi(0))) ** 2
    np.testing.assert_allclose(density, expected, atol=1e-12)


def test_grid_arm_probabilities_across_slices(preset):
    exp = attach_meter(new_experiment(preset), "C", T1, 0.45, 1.1)
    for k in range(preset.n_slices):
        for arm in preset.slices[k]:
            assert abs(
                grid_arm_probability(exp, arm, k) - arm_probability(exp, arm, k)
            ) < 1e-10, (arm, k)


def test_grid_norm_is_one(preset):
    exp = attach_meter(new_experiment(preset), "B", T1, 0.4, 1.0)
    state = grid_run(exp)
    assert abs(state.norm() - 1.0) < 1e-10


def test_too_small_grid_raises(preset):
    exp = attach_meter(new_experiment(preset), "B", T1, 0.3, 1.0)
    with pytest.raises(GridTooSmall):
        grid_run(exp, GridSpec(2.0, 257))


def test_underresolved_pointer_raises(preset):
    # 9 points across [-40, 40] cannot hold a unit-width packet
    exp = attach_meter(new_experiment(preset), "B", T1, 0.3, 1.0)
    with pytest.raises(GridTooSmall, match="norm"):
        grid_run(exp, GridSpec(40.0, 9))


def test_grid_run_slice_validation(preset):
    exp = new_experiment(preset)
    with pytest.raises(ValueError):
        grid_run(exp, to_slice=99)


def test_grid_moments_needs_final_slice(preset):
    exp = attach_meter(new_experiment(preset), "B", T1, 0.3, 1.0)
    state = grid_run(exp, to_slice=T2)
    with pytest.raises(ValueError):
        grid_moments(state, "D2")


def test_compare_rejects_mismatched_experiments(preset):
    exp_a = attach_meter(new_experiment(preset), "B", T1, 0.3, 1.0)
    exp_b = attach_meter(new_experiment(preset), "B", T1, 0.4, 1.0)
    a_report, _ = experiment_reports(exp_a, "D2")
    _, b_grid = experiment_reports(exp_b, "D2")
    with pytest.raises(ValueError, match="different experiments"):
        compare(a_report, b_grid)


def test_compare_tolerance_map(preset):
    exp = new_experiment(preset)
    analytic, grid = experiment_reports(exp, "D2")
    table = compare(analytic, grid, {"P(D2)": 1e-15})
    assert isinstance(table, ComparisonTable)
    row = next(r for r in table.rows if r.name == "P(D2)")
    assert row.tol == 1e-15
    other = next(r for r in table.rows if r.name != "P(D2)")
    assert other.tol == 1e-7  # fallback
    assert "all_pass" in table.to_json()


def test_grid_agrees_on_random_layout():
    layout = random_layout(3)
    arm = layout.slices[1][0]
    exp = attach_meter(new_experiment(layout), arm, 1, 0.4, 1.0)
    port = max(
        layout.ports, key=lambda p: abs(postselection_amplitude(layout, p))
    )
    analytic, grid = experiment_reports(exp, port)
    table = compare(analytic, grid, 1e-7)
    assert table.all_pass, [r for r in table.rows if not r.passed]
