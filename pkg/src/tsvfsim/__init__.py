"""Weak-measurement simulation for discrete-path interferometers.

Modules
-------
network
    Arm/slice layouts, stage unitaries, the nested interferometer preset,
    and the text format.
tsvf
    Forward/backward amplitude vectors, weak values and sequential weak
    values of arm projectors.
meter
    Gaussian pointer meters, impulsive couplings, post-selected pointer
    statistics and weak-value estimators.
sampling
    Reproducible Monte Carlo readout of pointer quadratures.
oracle
    Position-grid reference evolution and analytic-vs-grid comparison.
cli
    Command line front end (``tsvfsim`` entry point).
"""

from . import meter, network, oracle, sampling, tsvf
from .meter import (
    Experiment,
    ZeroProbability,
    attach_meter,
    new_experiment,
    run_coupled,
)
from .network import (
    NetworkLayout,
    NetworkParseError,
    nested_mzi_preset,
    parse_network,
    serialize_network,
)
from .tsvf import (
    ArmProjector,
    DegeneratePostselection,
    ProjectorChain,
    sequential_weak_value,
    weak_value,
)

__version__ = "0.1.0"

__all__ = [
    "ArmProjector",
    "DegeneratePostselection",
    "Experiment",
    "NetworkLayout",
    "NetworkParseError",
    "ProjectorChain",
    "ZeroProbability",
    "attach_meter",
    "cli",
    "meter",
    "nested_mzi_preset",
    "network",
    "new_experiment",
    "oracle",
    "parse_network",
    "run_coupled",
    "sampling",
    "sequential_weak_value",
    "serialize_network",
    "tsvf",
    "weak_value",
]
