"""Sequential weak values: ordered products of projectors at two times.

The single-time weak value on the inner exit arm E vanishes, yet the
two-time products {B then E} and {C then E} do not; they cancel only in
the sum. Ordinary conditional probabilities cannot do this.

Run:  python3 demos/03_sequential_chains.py
"""

from tsvfsim.network import nested_mzi_preset
from tsvfsim.tsvf import ProjectorChain, sequential_weak_value, weak_value, ArmProjector

layout = nested_mzi_preset()
port = "D2"
T1, T2 = 2, 3


def chain(*steps):
    return sequential_weak_value(layout, port, ProjectorChain.of(*steps)).value


print("two-step chains through slice 2 and slice 3:")
for first in layout.slices[T1]:
    for second in layout.slices[T2]:
        value = chain((first, T1), (second, T2))
        print(f"  {first}@{T1} > {second}@{T2}: {value:+.4f}")

print("\nmarginal sum rules (summing one slot recovers the shorter chain):")
for second in layout.slices[T2]:
    total = sum(chain((a, T1), (second, T2)) for a in layout.slices[T1])
    single = weak_value(layout, port, ArmProjector(second, T2)).value
    print(f"  sum_a a@{T1} > {second}@{T2} = {total:+.4f}"
          f"   vs {second}@{T2} alone = {single:+.4f}")

print("\na three-step chain:")
value = chain(("D", 1), ("B", 2), ("E", 3))
single_d = weak_value(layout, port, ArmProjector("D", 1)).value
print(f"  D@1 > B@2 > E@3: {value:+.4f}")
print(f"  yet D@1 alone:   {single_d:+.4f}")
print("  the inner-loop feed arm leaves no trace on its own, but the")
print("  chain threaded through it is as large as B > E itself.")
