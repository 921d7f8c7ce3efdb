"""Randomness extraction from a hydrogen-like atom coupled to the electromagnetic vacuum.

Second-order (Dyson) perturbation theory for the atomic reduced state after a
switched light-matter interaction, and the min-entropy an adversary holding
the field cannot reduce.
"""

__version__ = "0.1.0"

from .atom import AtomParams, TransitionSpec  # noqa: E402
from .evolution import InitialState, delta_rho_parts, evolve  # noqa: E402
from .randomness import min_entropy, purity  # noqa: E402
from .switching import DiracDelta, Gaussian, Sampled, SuddenTopHat  # noqa: E402

__all__ = [
    "AtomParams", "TransitionSpec", "InitialState", "delta_rho_parts", "evolve",
    "min_entropy", "purity", "Gaussian", "SuddenTopHat", "DiracDelta", "Sampled",
]
