"""Build an interferometer layout two ways: in code and from text.

Run:  python3 demos/01_build_a_network.py
"""

import numpy as np

from tsvfsim.network import (
    nested_mzi_preset,
    parse_network,
    serialize_network,
    stage_unitary,
    validate_network,
)

layout = nested_mzi_preset()
print("preset slices:")
for k, arms in enumerate(layout.slices):
    print(f"  slice {k}: {', '.join(arms)}")
print(f"source: {layout.source}")
print(f"ports:  {', '.join(layout.ports)}")

print("\nstage 2 (inner recombiner) as a matrix:")
print(np.round(stage_unitary(layout, 2), 6))

print("\nthe same layout, serialized to the text format:")
text = serialize_network(layout)
print(text)

# round-trip: parse the text back and check it describes the same network
again = parse_network(text)
assert again.slices == layout.slices
assert again.ports == layout.ports
for k in range(len(layout.slices) - 1):
    assert np.array_equal(stage_unitary(again, k), stage_unitary(layout, k))
print("round-trip through the text format is exact")

problems = validate_network(layout)
print(f"validation problems: {problems or 'none'}")
