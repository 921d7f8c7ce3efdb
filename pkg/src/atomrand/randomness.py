"""Guessing probability and min-entropy of the atomic outcome.

The joint atom-field state after the interaction is pure, so an adversary
holding the field is characterized by the Schmidt weights of that state,
which are the eigenvalues of the reduced atomic density matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SchmidtPair",
    "MeasurementBasis",
    "RandomnessReport",
    "purity",
    "schmidt_from_rho",
    "guessing_probability",
    "guessing_probability_optimized",
    "guessing_probability_from_purity",
    "min_entropy",
    "min_entropy_from_purity",
    "randomness_report",
]


@dataclass(frozen=True)
class SchmidtPair:
    lam0: float
    lam1: float

    def __post_init__(self):
        if abs(self.lam0 + self.lam1 - 1.0) > 1e-12:
            raise ValueError("Schmidt weights must sum to 1")
        if min(self.lam0, self.lam1) < -1e-12:
            raise ValueError("Schmidt weights must be non-negative")
        object.__setattr__(self, "lam0", min(max(self.lam0, 0.0), 1.0))
        object.__setattr__(self, "lam1", min(max(self.lam1, 0.0), 1.0))


@dataclass(frozen=True)
class MeasurementBasis:
    """Projective basis {cos t|0> + e^{ip} sin t|1>, sin t|0> - e^{ip} cos t|1>}."""

    theta: float
    phi: float = 0.0

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        c, s, ph = math.cos(self.theta), math.sin(self.theta), np.exp(1j * self.phi)
        return np.array([c, ph * s]), np.array([s, -ph * c])


@dataclass(frozen=True)
class RandomnessReport:
    purity: float
    guessing_probability: float
    min_entropy: float
    valid: bool


def purity(rho) -> float:
    """tr(rho^2) for a Hermitian matrix."""
    rho = np.asarray(rho)
    return float(np.real(np.sum(rho * rho.T)))


def schmidt_from_rho(rho) -> SchmidtPair:
    rho = np.asarray(rho, complex)
    herm = 0.5 * (rho + rho.conj().T)
    w = np.linalg.eigvalsh(herm)[::-1]
    w = np.clip(w, 0.0, 1.0)
    s = w.sum()
    if s <= 0:
        raise ValueError("density matrix has no positive weight")
    w = w / s
    return SchmidtPair(float(w[0]), float(1.0 - w[0]))


def guessing_probability(lam: SchmidtPair, basis: MeasurementBasis) -> float:
    """Helstrom success probability for the field states conditioned on the outcome.

    With |n_x> = sum_i sqrt(lam_i) <m_x|i> |f_i>, the two conditional field
    states are discriminated with P = (1 + sqrt(1 - 4 |<n0|n1>|^2)) / 2.
    """
    m0, m1 = basis.vectors()
    sq = np.sqrt([lam.lam0, lam.lam1])
    n0 = sq * np.conj(m0)
    n1 = sq * np.conj(m1)
    ov = abs(np.vdot(n0, n1)) ** 2
    return 0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - 4.0 * ov)))


def guessing_probability_from_purity(p: float) -> float:
    # 1/2 + sqrt(1/4 - (p/2 - 1/4)); the radicand is clipped at the pure-state edge
    return 0.5 + math.sqrt(max(0.0, 0.5 * (1.0 - p)))


def guessing_probability_optimized(rho) -> float:
    """Guessing probability minimized over the measurement basis."""
    return guessing_probability_from_purity(purity(rho))


def min_entropy_from_purity(p: float) -> float:
    h = -math.log2(guessing_probability_from_purity(p))
    return min(max(h, 0.0), 1.0)


def min_entropy(rho) -> float:
    """-log2 of the optimized guessing probability, in bits."""
    return min_entropy_from_purity(purity(rho))


def randomness_report(rho, valid: bool = True) -> RandomnessReport:
    p = purity(rho)
    return RandomnessReport(p, guessing_probability_from_purity(p), min_entropy_from_purity(p), valid)
