"""Second-order change of the atomic state and the evolved state.

Matrices are 2x2 complex arrays in the ordered basis (|g>, |e>), so the
(0, 0) entry is gg.  The initial state is

    rho_i = [[a^2, a b], [a b, b^2]],   b = sqrt(1 - a^2).

Every Delta rho is linear in (a^2, 1 - a^2, a b), which ``DeltaRhoParts``
exploits so that a-sweeps cost one set of k-integrals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special as _sp

from .atom import AtomParams, SpectralKernel, closed_form_kernels_1s2pz, scalar_kernels, transverse_1s2pz
from .quadrature import QuadratureConfig, default_k_split, integrate_semi_infinite
from .randomness import purity
from .specfun import scaled_erfc_complex
from .switching import DiracDelta, Gaussian, Sampled, SuddenTopHat, time_bilinear

__all__ = [
    "VALIDITY_THRESHOLD",
    "DEFAULT_QUAD",
    "InitialState",
    "ValidityReport",
    "PerturbativeValidityWarning",
    "DeltaRhoParts",
    "gaussian_parts",
    "sudden_parts",
    "delta_parts",
    "scalar_parts",
    "assembled_parts",
    "delta_rho_gaussian",
    "delta_rho_sudden",
    "delta_rho_gapless_sudden",
    "delta_rho_delta",
    "delta_rho_scalar",
    "delta_rho_assembled",
    "trace_contributions",
    "delta_rho_parts",
    "evolve",
    "truncated_purity",
]

VALIDITY_THRESHOLD = 0.1
_MAX_PANELS = 2_000_000
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
_EG = np.array([[0, 0], [1, 0]], dtype=complex)   # |e><g|
_GE = _EG.T.copy()                                 # |g><e|
_GG = np.array([[1, 0], [0, 0]], dtype=complex)
_EE = np.array([[0, 0], [0, 1]], dtype=complex)


class PerturbativeValidityWarning(UserWarning):
    """Delta rho too large for the second-order truncation to be trusted."""


@dataclass(frozen=True)
class InitialState:
    a: float

    def __post_init__(self):
        if not (0.0 <= self.a <= 1.0):
            raise ValueError("state parameter a must lie in [0, 1]")

    @property
    def b(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.a * self.a))

    @property
    def rho(self) -> np.ndarray:
        a, b = self.a, self.b
        return np.array([[a * a, a * b], [a * b, b * b]], dtype=complex)


@dataclass(frozen=True)
class ValidityReport:
    max_abs_entry: float
    exceeded: bool
    purity: float
    min_eigenvalue: float

    @property
    def negative_eigenvalue(self) -> bool:
        return self.min_eigenvalue < -1e-12


@dataclass(frozen=True)
class DeltaRhoParts:
    """Delta rho = a^2 ground + (1 - a^2) excited + a sqrt(1 - a^2) coherence."""

    ground: np.ndarray
    excited: np.ndarray
    coherence: np.ndarray
    error: float = 0.0

    def at(self, a: float) -> np.ndarray:
        st = InitialState(a)
        return a * a * self.ground + st.b * st.b * self.excited + a * st.b * self.coherence


def _hermitian_offdiag(eg: complex) -> np.ndarray:
    return eg * _EG + np.conj(eg) * _GE


# Delta rho entries are routinely 1e-9 or smaller, so the absolute floor must
# sit far below them for rel_tol to be the tolerance that actually binds;
# entries at roundoff level next to the largest one are not refined further
DEFAULT_QUAD = QuadratureConfig(abs_tol=1e-300, companion_floor=1e-14)


def _cfg(cfg: Optional[QuadratureConfig]) -> QuadratureConfig:
    return cfg or DEFAULT_QUAD


def _breaks(a0: float, gap: float, sigma: Optional[float]) -> list[float]:
    # geometric ladder past the form-factor scale 1/a0 so that a far-away
    # k_split cannot hide the k^-9 decay inside one wide panel
    top = default_k_split(a0, gap, sigma)
    pts = list(np.geomspace(1.0 / a0, top, max(2, int(math.ceil(math.log(top * a0) / math.log(3.0))) + 1)))
    if gap > 0:
        pts.append(gap)
        if sigma:
            pts += [gap - 5.0 / sigma, gap + 5.0 / sigma]
    if sigma:
        pts += [1.0 / sigma, 5.0 / sigma]
    return [p for p in pts if 0 < p < top]


# ---------------------------------------------------------------------------
# Gaussian switching

_DIFF_SERIES_H = 0.05
_DIFF_SERIES_TERMS = 20
_DIFF_ASYMPTOTIC_Y = 7.0
_DIFF_ASYMPTOTIC_TERMS = 24


def _erfcx_i_diff(y, h):
    """erfcx(i (y + h)) - erfcx(i (y - h)) for real y >= 0 and h >= 0, without cancellation.

    erfcx(i t) = exp(-t^2) - (2i/sqrt pi) F(t) with F the Dawson function.  The
    Dawson difference comes from its asymptotic series once y - h >= 7, and from
    an odd Taylor series in h (derivatives from F' = 1 - 2 t F) for small h.
    """
    y = np.asarray(y, dtype=float)
    re = np.exp(-(y - h) ** 2) * np.expm1(-4.0 * y * h)
    hi = y - h >= _DIFF_ASYMPTOTIC_Y
    lo = ~hi & (h < _DIFF_SERIES_H)
    direct = ~hi & ~lo
    im = np.zeros_like(y)
    im[direct] = _sp.dawsn(y[direct] + h) - _sp.dawsn(y[direct] - h)
    if np.any(lo):
        t = y[lo]
        # F^(n+1) = -2 t F^(n) - 2 n F^(n-1), with F' = 1 - 2 t F
        fm, fc = None, _sp.dawsn(t)
        acc, fact = np.zeros_like(t), 1.0
        for n in range(_DIFF_SERIES_TERMS):
            fn = 1.0 - 2.0 * t * fc if n == 0 else -2.0 * t * fc - 2.0 * n * fm
            fm, fc = fc, fn
            fact *= n + 1
            if n % 2 == 0:
                acc += h ** (n + 1) / fact * fc
        im[lo] = 2.0 * acc
    if np.any(hi):
        t = y[hi]
        # F(t) ~ sum_n (2n-1)!! / (2^(n+1) t^(2n+1)); each power is differenced via atanh
        lp, dl = np.log1p(-h / t), 2.0 * np.arctanh(h / t)
        acc, coef = np.zeros_like(t), 0.5
        for n in range(_DIFF_ASYMPTOTIC_TERMS):
            m = 2 * n + 1
            term = coef * t ** (-m) * np.exp(-m * lp) * -np.expm1(-m * dl)
            acc += term
            coef *= (2 * n + 1) / 2.0
        im[hi] = -acc
    return re - 2j / math.sqrt(math.pi) * im


def gaussian_parts(params: AtomParams, sigma: float, cfg: Optional[QuadratureConfig] = None) -> DeltaRhoParts:
    """Gaussian Delta rho from the one-dimensional printed integrals.

    Prefactor (24576/pi)(a0 e sigma)^2 with weight k^3/(4 a0^2 k^2 + 9)^6:
      diagonal   2[(1-a^2) E_- - a^2 E_+] sigma_z,  E_+- = exp(-sigma^2 (k +- W)^2 / 2)
      |e><g|     a b [X_+ - X_- - 2 E_+ + 2 E_0],   X_+- = erfcx(i sigma (k +- W)/sqrt 2)
    with E_0 = exp(-sigma^2 (k^2 + W^2)/2).  E_- is used directly in place of
    E_+ exp(2 k sigma^2 W), and the erf terms are carried in scaled form.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    a0, e, W = params.a0, params.e, params.gap
    pre = 24576.0 / math.pi * (a0 * e * sigma) ** 2
    r2 = math.sqrt(2.0)

    def f(k):
        w = pre * k**3 / (4.0 * (a0 * k) ** 2 + 9.0) ** 6
        ep = np.exp(-0.5 * (sigma * (k + W)) ** 2)
        em = np.exp(-0.5 * (sigma * (k - W)) ** 2)
        e0 = np.exp(-0.5 * sigma * sigma * (k * k + W * W))
        c = _erfcx_i_diff(sigma * k / r2, sigma * W / r2) - 2.0 * ep + 2.0 * e0
        return np.stack([-2.0 * w * ep, 2.0 * w * em, w * c.real, w * c.imag], axis=-1)

    res = integrate_semi_infinite(f, _cfg(cfg), k_split=default_k_split(a0, W, sigma),
                                  breakpoints=_breaks(a0, W, sigma))
    g, x, cr, ci = res.value
    return DeltaRhoParts(g * SIGMA_Z, x * SIGMA_Z, _hermitian_offdiag(cr + 1j * ci), float(np.max(res.error)))


def delta_rho_gaussian(params: AtomParams, a: float, sigma: float, cfg: Optional[QuadratureConfig] = None) -> np.ndarray:
    return gaussian_parts(params, sigma, cfg).at(a)


# ---------------------------------------------------------------------------
# sudden (top-hat) switching

def sudden_bracket_diagonal(k, W, sigma, a):
    """Diagonal numerator of the sudden result, as printed (multiplies sigma_z)."""
    return (2 * a * a * (k - W) ** 2 * np.cos(sigma * (k + W)) + 2 * (1 - 2 * a * a) * (k * k + W * W)
            + 4 * k * W + 2 * (a * a - 1) * np.cos(sigma * (k - W)) * (k + W) ** 2)


def sudden_bracket_offdiagonal(k, W, sigma):
    """|e><g| numerator of the sudden result, as printed (multiplies a b)."""
    return (np.exp(2j * sigma * W) * (k * k - W * W) + k * k * (2j * sigma * W - 1)
            + 4 * W * np.exp(1j * sigma * W) * (W * np.cos(k * sigma) - 1j * k * np.sin(k * sigma))
            - W * W * (3 + 2j * sigma * W))


def _sudden_window(k, W, sigma) -> np.ndarray:
    # where the printed numerators cancel too strongly: against (k^2 - W^2)^2
    # near resonance, and among their own O(k^2) terms when sigma k is small
    return (np.abs(k - W) < max(1e-3 * W, 1e-2 / sigma)) | (sigma * (k + W) < 1.0)


def sudden_parts(params: AtomParams, sigma: float, cfg: Optional[QuadratureConfig] = None) -> DeltaRhoParts:
    """Top-hat Delta rho: prefactor (49152/pi^2)(a0 e)^2, weight k^3/((4a0^2k^2+9)^6 (k^2-W^2)^2).

    The printed numerators are evaluated as they stand away from k = W; inside
    the removable-singularity window the algebraically identical per-term
    forms (sinc for 1 - cos, the stable nested integral) are used.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    a0, e, W = params.a0, params.e, params.gap
    pre = 49152.0 / math.pi**2 * (a0 * e) ** 2
    tb = time_bilinear(SuddenTopHat(sigma))

    def f(k):
        D6 = (4.0 * (a0 * k) ** 2 + 9.0) ** 6
        win = _sudden_window(k, W, sigma)
        den = np.where(win, 1.0, (k * k - W * W) ** 2)
        w = pre * k**3 / D6
        lit_g = sudden_bracket_diagonal(k, W, sigma, 1.0) / den
        lit_e = sudden_bracket_diagonal(k, W, sigma, 0.0) / den
        lit_c = sudden_bracket_offdiagonal(k, W, sigma) / den
        # stable forms: -F(k+W), +F(k-W), P - N(k-W) - conj N(k+W)
        fp, fm = tb.full_plus(k, W).real, tb.full_minus(k, W).real
        st_c = tb.full_sumphase(k, W) - tb.nested_plus(k, W) - np.conj(tb.nested_minus(k, W))
        g = np.where(win, -fp, lit_g)
        x = np.where(win, fm, lit_e)
        c = np.where(win, st_c, lit_c)
        return np.stack([w * g, w * x, w * c.real, w * c.imag], axis=-1)

    c = _cfg(cfg)
    if c.oscillation_period_hint is None:
        c = c.with_(oscillation_period_hint=2.0 * math.pi / sigma)
    ks = default_k_split(a0, W, sigma)
    # one panel per period up to k_split, with room to bisect each a few times
    periods = int(math.ceil(ks / c.oscillation_period_hint))
    if 16 * periods > c.max_subdivisions:
        c = c.with_(max_subdivisions=min(16 * periods, _MAX_PANELS))
    res = integrate_semi_infinite(f, c, k_split=ks, breakpoints=_breaks(a0, W, sigma))
    g, x, cr, ci = res.value
    return DeltaRhoParts(g * SIGMA_Z, x * SIGMA_Z, _hermitian_offdiag(cr + 1j * ci), float(np.max(res.error)))


def delta_rho_sudden(params: AtomParams, a: float, sigma: float, cfg: Optional[QuadratureConfig] = None) -> np.ndarray:
    return sudden_parts(params, sigma, cfg).at(a)


def delta_rho_gapless_sudden(params: AtomParams, a: float, sigma: float,
                             cfg: Optional[QuadratureConfig] = None) -> np.ndarray:
    """Degenerate (W = 0) top-hat result, proportional to (1 - 2a^2) sigma_z."""
    if params.gap != 0:
        raise ValueError("gapless sudden switching needs gap = 0")
    parts = sudden_parts(params, sigma, cfg)
    # at W = 0 the coherence part vanishes identically and ground = -excited
    s = 0.5 * (parts.excited[0, 0] - parts.ground[0, 0]).real
    return (1.0 - 2.0 * a * a) * s * SIGMA_Z


# ---------------------------------------------------------------------------
# delta switching

def delta_parts(params: AtomParams, C: float) -> DeltaRhoParts:
    if not C > 0:
        raise ValueError("C must be positive")
    c = 128.0 * C * C * params.e**2 / (10935.0 * math.pi**2 * params.a0**2)
    return DeltaRhoParts(-c * SIGMA_Z, c * SIGMA_Z, np.zeros((2, 2), complex))


def delta_rho_delta(params: AtomParams, a: float, C: float) -> np.ndarray:
    """128 C^2 e^2 (1 - 2a^2) / (10935 pi^2 a0^2) sigma_z, exact."""
    return delta_parts(params, C).at(a)


# ---------------------------------------------------------------------------
# scalar comparison models (ground state, Gaussian switching, 1s -> 2s smearing)

def scalar_parts(params: AtomParams, sigma: float, derivative: bool = False,
                 cfg: Optional[QuadratureConfig] = None) -> DeltaRhoParts:
    """-(32768/pi)(a0^2 e sigma)^2 int k^5 (k^7) E_+ / (4a0^2k^2+9)^6 sigma_z.

    Only the ground-state part is populated: the model is defined for a = 1.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    a0, e, W = params.a0, params.e, params.gap
    pre = 32768.0 / math.pi * (a0 * a0 * e * sigma) ** 2
    power = 7 if derivative else 5

    def f(k):
        return pre * k**power * np.exp(-0.5 * (sigma * (k + W)) ** 2) / (4.0 * (a0 * k) ** 2 + 9.0) ** 6

    res = integrate_semi_infinite(f, _cfg(cfg), k_split=default_k_split(a0, W, sigma), breakpoints=_breaks(a0, W, sigma))
    nan = np.full((2, 2), np.nan, complex)
    return DeltaRhoParts(-res.value * SIGMA_Z, nan, nan, res.error)


def delta_rho_scalar(params: AtomParams, sigma: float, derivative: bool = False, a: float = 1.0,
                     cfg: Optional[QuadratureConfig] = None) -> np.ndarray:
    if a != 1.0:
        raise ValueError("the scalar models are only defined for the ground state a = 1")
    return scalar_parts(params, sigma, derivative, cfg).ground


# ---------------------------------------------------------------------------
# assembly from kernels and time bilinears

_TRACES = ("U2_identity", "U2_dyadic", "U1_identity", "U1_dyadic")


def _sigma_of(profile) -> Optional[float]:
    return getattr(profile, "sigma", None)


def _trace_integrals(params: AtomParams, profile, kernel: SpectralKernel, cfg: Optional[QuadratureConfig]):
    W, e2 = params.gap, params.e ** 2
    tb = time_bilinear(profile)

    def f(k):
        k3 = e2 * k**3
        ki, kd = kernel.identity_part(k), kernel.dyadic_part(k)
        if kernel.sumphase_identity is None:
            si, sd = ki, kd
        else:
            si, sd = kernel.sumphase_identity(k), kernel.sumphase_dyadic(k)
        n_p, n_m = tb.nested_minus(k, W), tb.nested_plus(k, W)       # N(k+W), N(k-W)
        f_p, f_m = tb.full_plus(k, W), tb.full_minus(k, W)           # F(k+W), F(k-W)
        s = tb.full_sumphase(k, W)
        cols = [ki * n_p, ki * n_m, kd * n_p, kd * n_m, ki * f_p, ki * f_m, kd * f_p, kd * f_m, si * s, sd * s]
        # real and imaginary parts get separate error budgets: Re N is what
        # survives U2 + U2^dag and can be far smaller than Im N
        z = np.stack([k3 * np.asarray(c, complex) for c in cols], axis=-1)
        return np.concatenate([z.real, z.imag], axis=-1)

    sigma = _sigma_of(profile)
    c = _cfg(cfg)
    if isinstance(profile, SuddenTopHat) and c.oscillation_period_hint is None:
        c = c.with_(oscillation_period_hint=2.0 * math.pi / sigma)
    res = integrate_semi_infinite(f, c, k_split=default_k_split(params.a0, W, sigma),
                                  breakpoints=_breaks(params.a0, W, sigma))
    v = np.asarray(res.value)
    return v[:10] + 1j * v[10:], float(np.max(res.error))


def _trace_parts(I) -> dict:
    (in_p, in_m, dn_p, dn_m, if_p, if_m, df_p, df_m, is_, ds_) = I
    z = np.zeros((2, 2), complex)
    out = {}
    # tr_F(U2 rho): -int K N(k-W)[(1-a^2)|e><e| + ab|e><g|] + N(k+W)[a^2|g><g| + ab|g><e|]
    for name, sgn, n_p, n_m in (("U2_identity", -1.0, in_p, in_m), ("U2_dyadic", 1.0, dn_p, dn_m)):
        out[name] = (sgn * n_p * _GG, sgn * n_m * _EE, sgn * (n_m * _EG + n_p * _GE))
    # tr_F(U1 rho U1^dag): int K [(1-a^2) F(k-W)|g><g| + a^2 F(k+W)|e><e|] + ab K_sum [S|e><g| + c.c.]
    for name, sgn, f_p, f_m, s in (("U1_identity", 1.0, if_p, if_m, is_), ("U1_dyadic", -1.0, df_p, df_m, ds_)):
        out[name] = (sgn * f_p * _EE, sgn * f_m * _GG, sgn * (s * _EG + np.conj(s) * _GE))
    return out


def trace_contributions(params: AtomParams, profile, a: float, kernel: Optional[SpectralKernel] = None,
                        cfg: Optional[QuadratureConfig] = None) -> dict:
    """The four second-order traces, separately, at state parameter a.

    Keys: U2_identity, U2_dyadic (tr_F(U2 rho_i), not yet symmetrized) and
    U1_identity, U1_dyadic (tr_F(U1 rho_i U1^dag)).
    Delta rho = U2 + U2^dag + U1.
    """
    kernel = kernel or closed_form_kernels_1s2pz(params)
    I, _ = _trace_integrals(params, profile, kernel, cfg)
    st = InitialState(a)
    wa = (a * a, st.b * st.b, a * st.b)
    return {name: sum(w * m for w, m in zip(wa, parts)) for name, parts in _trace_parts(I).items()}


def assembled_parts(params: AtomParams, profile, kernel: Optional[SpectralKernel] = None,
                    cfg: Optional[QuadratureConfig] = None) -> DeltaRhoParts:
    kernel = kernel or closed_form_kernels_1s2pz(params)
    I, err = _trace_integrals(params, profile, kernel, cfg)
    parts = _trace_parts(I)
    acc = [np.zeros((2, 2), complex) for _ in range(3)]
    for name, triple in parts.items():
        for i, m in enumerate(triple):
            acc[i] = acc[i] + (m + m.conj().T if name.startswith("U2") else m)
    return DeltaRhoParts(acc[0], acc[1], acc[2], err)


def delta_rho_assembled(params: AtomParams, profile, a: float, kernel: Optional[SpectralKernel] = None,
                        cfg: Optional[QuadratureConfig] = None) -> np.ndarray:
    return assembled_parts(params, profile, kernel, cfg).at(a)


def delta_rho_parts(params: AtomParams, profile, model: str = "em",
                    cfg: Optional[QuadratureConfig] = None) -> DeltaRhoParts:
    """Dispatch to the dedicated evaluator for a profile and coupling model."""
    if model in ("udw", "udwd"):
        if not isinstance(profile, Gaussian):
            raise ValueError("the scalar models are only available for Gaussian switching")
        return scalar_parts(params, profile.sigma, model == "udwd", cfg)
    if model != "em":
        raise ValueError(f"unknown coupling model {model!r}")
    if isinstance(profile, Gaussian):
        return gaussian_parts(params, profile.sigma, cfg)
    if isinstance(profile, SuddenTopHat):
        return sudden_parts(params, profile.sigma, cfg)
    if isinstance(profile, DiracDelta):
        return delta_parts(params, profile.C)
    if isinstance(profile, Sampled):
        return assembled_parts(params, profile, cfg=cfg)
    raise TypeError(f"unsupported switching profile {type(profile).__name__}")


# ---------------------------------------------------------------------------

def evolve(initial: InitialState, delta: np.ndarray, warn: bool = True):
    """rho_A = rho_i + Delta rho, with a perturbative-validity report."""
    delta = np.asarray(delta, complex)
    rho = initial.rho + delta
    mx = float(np.max(np.abs(delta)))
    herm = 0.5 * (rho + rho.conj().T)
    rep = ValidityReport(mx, mx > VALIDITY_THRESHOLD, purity(rho), float(np.linalg.eigvalsh(herm)[0]))
    if rep.exceeded and warn:
        warnings.warn(
            f"max |Delta rho| = {mx:.3g} exceeds {VALIDITY_THRESHOLD}; second order may not be trustworthy",
            PerturbativeValidityWarning,
            stacklevel=2,
        )
    return rho, rep


def truncated_purity(initial: InitialState, delta: np.ndarray) -> float:
    """tr(rho_i^2) + 2 tr(rho_i Delta rho): the purity consistent to second order."""
    return float(1.0 + 2.0 * np.real(np.trace(initial.rho @ np.asarray(delta))))
