"""Spectral kernels of a hydrogenoid dipole transition.

A kernel K(k) is the weight that multiplies k^3 and a time bilinear under
the k-integral of the second-order traces.  It splits into the part coming
from the identity of the transverse projector and the part coming from the
k (x) k dyadic:

    K_I(k) = 1/(4 pi^2) * sum_l  X_l      S_l(k)^2
    K_D(k) = 1/(4 pi^2) * sum_ll' Y_ll'   S_l(k) S_l'(k)

with S_l the radial overlaps int r^3 R_e R_g j_l(kr) dr and X, Y pure
numbers built from Wigner 3j symbols.  The physical (transverse) kernel is
K_I - K_D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import special as _sp

from .quadrature import QuadratureConfig, integrate_semi_infinite
from .specfun import SqrtRational, SurdSum, hydrogen_radial, spherical_bessel_j, wigner3j

__all__ = [
    "A0_BASELINE",
    "CHARGE_BASELINE",
    "GAP_BASELINE",
    "KERNEL_CONSTANTS",
    "TransitionSpec",
    "AtomParams",
    "SpectralKernel",
    "radial_overlap",
    "radial_overlap_1s2p",
    "angular_identity_block",
    "angular_dyadic_block",
    "build_kernels",
    "closed_form_kernels_1s2pz",
    "scalar_kernels",
    "L_CUTOFF",
]

A0_BASELINE = 2.68e-4   # eV^-1
CHARGE_BASELINE = 8.54e-2
GAP_BASELINE = 3.73     # eV
L_CUTOFF = 8

# numerators n of the n * a0^2 / pi^2 kernel prefactors
KERNEL_CONSTANTS = {
    "identity": Fraction(663552),
    "dyadic": Fraction(24576),
    "identity_half": Fraction(331776),
    "dyadic_half": Fraction(12288),
    "identity_double": Fraction(1327104),
    "transverse": Fraction(49152),
}
PI_POWER = 2

_SQRT6 = math.sqrt(6.0)


@dataclass(frozen=True)
class TransitionSpec:
    ground: tuple = (1, 0, 0)
    excited: tuple = (2, 1, 0)
    a0: float = A0_BASELINE

    def __post_init__(self):
        for n, l, m in (self.ground, self.excited):
            if not (n >= 1 and 0 <= l < n and abs(m) <= l):
                raise ValueError(f"invalid orbital (n={n}, l={l}, m={m})")
        if not self.a0 > 0:
            raise ValueError("a0 must be positive")
        object.__setattr__(self, "ground", tuple(int(v) for v in self.ground))
        object.__setattr__(self, "excited", tuple(int(v) for v in self.excited))

    @property
    def is_1s2p(self) -> bool:
        return self.ground[:2] == (1, 0) and self.excited[:2] == (2, 1)

    @property
    def same_m(self) -> bool:
        return self.ground[2] == self.excited[2]


@dataclass(frozen=True)
class AtomParams:
    spec: TransitionSpec = TransitionSpec()
    e: float = CHARGE_BASELINE
    gap: float = GAP_BASELINE

    def __post_init__(self):
        if not self.e >= 0:
            raise ValueError("coupling e must be non-negative")
        if not self.gap >= 0:
            raise ValueError("energy gap must be non-negative")

    @property
    def a0(self) -> float:
        return self.spec.a0


@dataclass(frozen=True)
class SpectralKernel:
    identity_part: Callable
    dyadic_part: Callable
    provenance: str
    sumphase_identity: Optional[Callable] = None
    sumphase_dyadic: Optional[Callable] = None

    def transverse(self, k):
        return self.identity_part(k) - self.dyadic_part(k)

    def sumphase(self, k):
        """Transverse kernel of the e^{+-iW(t+t')} terms (zero unless m_e = m_g)."""
        if self.sumphase_identity is None:
            return self.transverse(k)
        return self.sumphase_identity(k) - self.sumphase_dyadic(k)


# ---------------------------------------------------------------------------
# radial overlaps

def radial_overlap_1s2p(l: int, k, a0: float):
    """int r^3 R_21 R_10 j_l(kr) dr in closed form (units of a0)."""
    k = np.asarray(k, float)
    x = a0 * k
    D4 = (4.0 * x * x + 9.0) ** 4
    if l == 0:
        out = 384.0 * _SQRT6 * (9.0 - 4.0 * x * x) / D4
    elif l == 1:
        out = -(256.0 * _SQRT6 / 3.0) * x * (4.0 * x * x - 45.0) / D4
    elif l == 2:
        out = 3072.0 * _SQRT6 * x * x / D4
    elif l == 3:
        out = 2048.0 * _SQRT6 * x**3 / D4
    else:
        out = _radial_1s2p_hyp(l, x)
    out = a0 * out
    return float(out) if out.ndim == 0 else out


def _radial_1s2p_hyp(l: int, x):
    # 8 sqrt(2 pi) 3^(-l-11/2) x^l Gamma(l+5) 2F1((l+5)/2, (l+6)/2; l+3/2; -4x^2/9) / Gamma(l+3/2)
    pref = 8.0 * math.sqrt(2 * math.pi) * 3.0 ** (-l - 5.5) * math.gamma(l + 5) / math.gamma(l + 1.5)
    return pref * x**l * _sp.hyp2f1(0.5 * (l + 5), 0.5 * (l + 6), l + 1.5, -4.0 * x * x / 9.0)


def _radial_quadrature(l: int, k: np.ndarray, spec: TransitionSpec, rel_tol: float = 1e-10) -> np.ndarray:
    (ng, lg, _), (ne, le, _) = spec.ground, spec.excited
    a0 = spec.a0
    beta = (1.0 / ne + 1.0 / ng) / a0

    def base(r):
        return r**3 * hydrogen_radial(ne, le, r, a0) * hydrogen_radial(ng, lg, r, a0)

    l1 = integrate_semi_infinite(lambda r: np.abs(base(r)), QuadratureConfig(rel_tol=1e-8, abs_tol=1e-300),
                                 k_split=60.0 / beta, breakpoints=[1.0 / beta, 10.0 / beta]).value
    kk = np.atleast_1d(k).astype(float)
    kmax = float(kk.max()) if kk.size else 0.0
    period = 2 * math.pi / kmax if kmax * 60.0 / beta > 4 * math.pi else None
    cfg = QuadratureConfig(rel_tol=rel_tol, abs_tol=1e-14 * l1, max_subdivisions=20000,
                           oscillation_period_hint=period)

    def f(r):
        return base(r)[:, None] * spherical_bessel_j(l, np.outer(r, kk))

    res = integrate_semi_infinite(f, cfg, k_split=60.0 / beta, breakpoints=[1.0 / beta, 10.0 / beta])
    return np.asarray(res.value, float)


def radial_overlap(l: int, k, spec: TransitionSpec, method: str = "auto"):
    """int_0^inf r^3 R_{n_e l_e} R_{n_g l_g} j_l(kr) dr.

    method: "auto" (closed form for 1s->2p, quadrature otherwise),
    "closed" or "quadrature".
    """
    if l < 0:
        raise ValueError("l must be non-negative")
    ka = np.asarray(k, float)
    if np.any(ka < 0):
        raise ValueError("k must be non-negative")
    if method == "auto":
        method = "closed" if spec.is_1s2p else "quadrature"
    if method == "closed":
        if not spec.is_1s2p:
            raise ValueError("closed-form radial overlap is only available for 1s->2p")
        return radial_overlap_1s2p(l, ka, spec.a0)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    out = _radial_quadrature(l, ka.ravel(), spec).reshape(ka.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# angular blocks

def _tj(j1, j2, j3, m1, m2, m3) -> SqrtRational:
    return wigner3j(j1, j2, j3, m1, m2, m3)


def _lam_range(a: int, b: int, c: int, d: int) -> range:
    # lambda compatible with both triads (a b lambda) and (c d lambda)
    return range(max(abs(a - b), abs(c - d)), min(a + b, c + d) + 1)


def _groups(exchange: Optional[str], spec: TransitionSpec):
    g = spec.ground[1:]
    e = spec.excited[1:]
    if exchange is None:
        return g, e, e, g
    if exchange == "tilde":
        return g, e, g, e
    if exchange == "double_tilde":
        return e, g, e, g
    raise ValueError(f"unknown exchange variant {exchange!r}")


def _pair(l, P, Q, lam, s) -> SqrtRational:
    # (l P lam; mP-mQ+s, -mP, mQ-s) (Q 1 lam; mQ, -s, s-mQ)
    (lp, mp), (lq, mq) = P, Q
    return _tj(l, lp, lam, mp - mq + s, -mp, mq - s) * _tj(lq, 1, lam, mq, -s, s - mq)


def _check_cutoff(spec: TransitionSpec, l_cutoff: int, *ls):
    top = spec.ground[1] + spec.excited[1] + 1
    if top > l_cutoff:
        raise ValueError(f"transition needs l up to {top}, above l_cutoff={l_cutoff}")
    for l in ls:
        if l > l_cutoff:
            raise ValueError(f"l={l} above l_cutoff={l_cutoff}")


@lru_cache(maxsize=4096)
def _identity_exact(lg, mg, le, me, l, exchange) -> SurdSum:
    spec = TransitionSpec((lg + 1, lg, mg), (le + 1, le, me))
    P, Q, R, T = _groups(exchange, spec)
    acc = SurdSum()
    for lam in _lam_range(l, P[0], Q[0], 1):
        c1 = _tj(l, P[0], lam, 0, 0, 0) * _tj(Q[0], 1, lam, 0, 0, 0)
        if not c1:
            continue
        for lamp in _lam_range(l, R[0], T[0], 1):
            c2 = _tj(l, R[0], lamp, 0, 0, 0) * _tj(T[0], 1, lamp, 0, 0, 0)
            if not c2:
                continue
            for s in (0, 1, -1):
                v = _pair(l, P, Q, lam, s) * _pair(l, R, T, lamp, -s)
                if v:
                    acc.add((2 * lam + 1) * (2 * lamp + 1), c1 * c2 * v)
    phase = -1 if (P[1] - Q[1]) % 2 else 1
    return acc.scaled(phase * (2 * l + 1) * (2 * lg + 1) * (2 * le + 1))


@lru_cache(maxsize=4096)
def _dyadic_exact(lg, mg, le, me, l, lp, exchange) -> SurdSum:
    if (l + lp) % 2:
        return SurdSum()
    spec = TransitionSpec((lg + 1, lg, mg), (le + 1, le, me))
    P, Q, R, T = _groups(exchange, spec)
    acc = SurdSum()
    for lam1 in _lam_range(l, P[0], Q[0], 1):
        c1 = _tj(l, P[0], lam1, 0, 0, 0) * _tj(Q[0], 1, lam1, 0, 0, 0)
        if not c1:
            continue
        for lam2 in _lam_range(lp, R[0], T[0], 1):
            c2 = _tj(lp, R[0], lam2, 0, 0, 0) * _tj(T[0], 1, lam2, 0, 0, 0)
            if not c2:
                continue
            for lam in (0, 2):
                c3 = _tj(1, 1, lam, 0, 0, 0) * _tj(l, lp, lam, 0, 0, 0)
                if not c3:
                    continue
                for s1 in (-1, 0, 1):
                    a = _pair(l, P, Q, lam1, s1)
                    if not a:
                        continue
                    for s2 in (-1, 0, 1):
                        b = _pair(lp, R, T, lam2, s2)
                        if not b:
                            continue
                        mid = _tj(1, 1, lam, s1, s2, -s1 - s2) * _tj(
                            l, lp, lam, -(P[1] - Q[1] + s1), -(R[1] - T[1] + s2), s1 + s2
                        )
                        if mid:
                            acc.add((2 * lam1 + 1) * (2 * lam2 + 1) * (2 * lam + 1), c1 * c2 * c3 * a * b * mid)
    # i^(l+l') (-1)^l' is real because l + l' is even
    phase = (-1) ** ((l + lp) // 2) * (-1) ** lp
    return acc.scaled(phase * (2 * l + 1) * (2 * lp + 1) * (2 * lg + 1) * (2 * le + 1))


def angular_identity_block(spec: TransitionSpec, l: int, exchange: Optional[str] = None,
                           l_cutoff: int = L_CUTOFF, exact: bool = False):
    """Coefficient X_l of j_l(k|x|) j_l(k|x'|) in the identity part of the traces.

    exchange=None gives the time-ordered/difference-phase block; "tilde" and
    "double_tilde" swap g and e in the second or first 3j group, as needed
    for the sum-phase terms.  With exact=True the value comes back as a
    SurdSum (sum of rational multiples of square roots).
    """
    _check_cutoff(spec, l_cutoff, l)
    _groups(exchange, spec)
    (_, lg, mg), (_, le, me) = spec.ground, spec.excited
    v = _identity_exact(lg, mg, le, me, l, exchange)
    return v if exact else float(v)


def angular_dyadic_block(spec: TransitionSpec, l: int, lp: int, exchange: Optional[str] = None,
                         l_cutoff: int = L_CUTOFF, exact: bool = False):
    """Coefficient Y_ll' of j_l(k|x|) j_l'(k|x'|) in the k (x) k part of the traces."""
    _check_cutoff(spec, l_cutoff, l, lp)
    _groups(exchange, spec)
    (_, lg, mg), (_, le, me) = spec.ground, spec.excited
    v = _dyadic_exact(lg, mg, le, me, l, lp, exchange)
    return v if exact else float(v)


# ---------------------------------------------------------------------------
# kernels

def _l_values(spec: TransitionSpec) -> range:
    return range(0, spec.ground[1] + spec.excited[1] + 2)


def build_kernels(params: AtomParams, l_cutoff: int = L_CUTOFF, radial_method: str = "auto") -> SpectralKernel:
    """Kernels from the 3j engine and radial overlaps (any hydrogenoid transition)."""
    spec = params.spec
    _check_cutoff(spec, l_cutoff)
    ls = list(_l_values(spec))

    def blocks(exchange):
        X = {l: angular_identity_block(spec, l, exchange, l_cutoff) for l in ls}
        Y = {(l, lp): angular_dyadic_block(spec, l, lp, exchange, l_cutoff) for l in ls for lp in ls}
        return ({l: v for l, v in X.items() if v != 0.0},
                {key: v for key, v in Y.items() if v != 0.0})

    X, Y = blocks(None)
    needed = sorted(set(X) | {l for pair in Y for l in pair})
    norm = 1.0 / (4.0 * math.pi**2)

    def overlaps(k):
        k = np.asarray(k, float)
        return {l: np.asarray(radial_overlap(l, k, spec, radial_method)) for l in needed}

    def make_identity(Xb):
        def f(k):
            S = overlaps(k)
            out = np.zeros(np.shape(k))
            for l, x in Xb.items():
                out = out + x * S[l] ** 2
            return norm * out
        return f

    def make_dyadic(Yb):
        def f(k):
            S = overlaps(k)
            out = np.zeros(np.shape(k))
            for (l, lp), y in Yb.items():
                out = out + y * S[l] * S[lp]
            return norm * out
        return f

    if spec.same_m:
        Xt, Yt = blocks("tilde")
        sp_i, sp_d = make_identity(Xt), make_dyadic(Yt)
    else:
        zero = lambda k: np.zeros(np.shape(k))
        sp_i, sp_d = zero, zero
    return SpectralKernel(make_identity(X), make_dyadic(Y), "general-engine", sp_i, sp_d)


def closed_form_kernels_1s2pz(params: AtomParams) -> SpectralKernel:
    """Rational 1s->2p_z kernels:

    K_I = 663552 a0^2 (16 a0^4 k^4 - 8 a0^2 k^2 + 9) / (pi^2 (4 a0^2 k^2 + 9)^8)
    K_D =  24576 a0^2 (9 - 20 a0^2 k^2)^2            / (pi^2 (4 a0^2 k^2 + 9)^8)
    """
    a0 = params.a0
    ci = float(KERNEL_CONSTANTS["identity"]) * a0 * a0 / math.pi**PI_POWER
    cd = float(KERNEL_CONSTANTS["dyadic"]) * a0 * a0 / math.pi**PI_POWER

    def ki(k):
        x2 = (a0 * np.asarray(k, float)) ** 2
        return ci * (16.0 * x2 * x2 - 8.0 * x2 + 9.0) / (4.0 * x2 + 9.0) ** 8

    def kd(k):
        x2 = (a0 * np.asarray(k, float)) ** 2
        return cd * (9.0 - 20.0 * x2) ** 2 / (4.0 * x2 + 9.0) ** 8

    if params.spec.same_m:
        return SpectralKernel(ki, kd, "closed-form")
    zero = lambda k: np.zeros(np.shape(k))
    return SpectralKernel(ki, kd, "closed-form", zero, zero)


def transverse_1s2pz(k, a0: float):
    """K_I - K_D = 49152 a0^2 / (pi^2 (4 a0^2 k^2 + 9)^6), free of cancellation."""
    x2 = (a0 * np.asarray(k, float)) ** 2
    return float(KERNEL_CONSTANTS["transverse"]) * a0 * a0 / math.pi**PI_POWER / (4.0 * x2 + 9.0) ** 6


def scalar_kernels(params: AtomParams, derivative: bool = False) -> SpectralKernel:
    """Monopole (scalar-field) kernels for the 1s->2s smearing psi_e psi_g.

    Weight per k^3 measure: 32768 a0^4 k^2 / (pi^2 (4 a0^2 k^2 + 9)^6), times an
    extra k^2 for the time-derivative coupling.  There is no dyadic part.
    """
    a0 = params.a0
    c = 32768.0 * a0**4 / math.pi**2

    def w(k):
        k = np.asarray(k, float)
        base = c * k * k / (4.0 * (a0 * k) ** 2 + 9.0) ** 6
        return base * k * k if derivative else base

    zero = lambda k: np.zeros(np.shape(k))
    return SpectralKernel(w, zero, "scalar-derivative" if derivative else "scalar")
