"""Rearrangement suprema, support-family functionals and invariants of Hamiltonian maps."""

__version__ = "0.1.0"

from .measure import DiscreteFunction, MeasureSpace  # noqa: E402
from .rng import CounterRNG  # noqa: E402

__all__ = ["__version__", "CounterRNG", "DiscreteFunction", "MeasureSpace"]
