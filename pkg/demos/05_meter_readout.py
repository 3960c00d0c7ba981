"""Reading weak values off Gaussian pointers, checked against the grid.

A pointer coupled to an arm shifts by g times the arm's weak value (to
leading order). The complex readout combination x + 2 i sigma^2 p turns
pointer moments into weak-value estimates; two pointers multiplied give
the sequential weak value. The same numbers are then recomputed by a
brute-force discretized-wavefunction oracle.

Run:  python3 demos/05_meter_readout.py
"""

from tsvfsim.meter import (
    attach_meter,
    estimate_sequential_weak_value,
    estimate_weak_value,
    new_experiment,
    pointer_mean,
    postselect,
    run_coupled,
)
from tsvfsim.network import nested_mzi_preset
from tsvfsim.oracle import compare, experiment_reports

layout = nested_mzi_preset()
port = "D2"

print("single meter on C, shrinking coupling:")
print(f"{'g':>7}  {'estimate':>22}  {'error':>9}")
for g in (0.4, 0.2, 0.1, 0.05):
    exp = attach_meter(new_experiment(layout), "C", 2, g, 1.0)
    mixture = postselect(run_coupled(exp), port)
    est = estimate_weak_value(mixture, 0)
    print(f"{g:7.3f}  {est:22.6f}  {abs(est - (-0.5)):9.2e}")
print("the error shrinks quadratically; the weak value of C is -1/2")

g = 0.3
alone = postselect(run_coupled(
    attach_meter(new_experiment(layout), "B", 2, g, 1.0)), port)
print(f"\na lone meter on B at g = {g} shifts by exactly g/2:")
print(f"  <x> = {pointer_mean(alone, 0, 'x'):.15f}")

exp = attach_meter(new_experiment(layout), "B", 2, g, 1.0)
exp = attach_meter(exp, "E", 3, g, 1.0)
mixture = postselect(run_coupled(exp), port)
print(f"\ntwo meters (B then E) at g = {g} disturb each other a little:")
print(f"  <x> on B meter: {pointer_mean(mixture, 0, 'x'):.6f}")
print(f"  <x> on E meter: {pointer_mean(mixture, 1, 'x'):.6f}")
print(f"  sequential estimate: {estimate_sequential_weak_value(mixture, 0, 1):.6f}")
print("  exact sequential weak value: 0.5")

print("\ngrid oracle cross-check of every probability and moment:")
analytic, grid = experiment_reports(exp, port)
table = compare(analytic, grid)
worst = max(row.abs_dev for row in table.rows)
print(f"  {len(table.rows)} quantities compared, all pass: {table.all_pass}")
print(f"  worst |analytic - grid| = {worst:.2e}")
