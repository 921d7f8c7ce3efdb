"""Switching functions chi(t) and the time bilinears they induce.

With chi~(q) = int chi(t) e^{iqt} dt, the five integrals that enter the
second-order traces are

    nested_minus(k, W) = int dt int_{t'<t} dt' chi chi' e^{-i(k+W)(t-t')}  = N(k+W)
    nested_plus(k, W)  = same with e^{-i(k-W)(t-t')}                       = N(k-W)
    full_minus(k, W)   = int int chi chi' e^{+i(k-W)(t-t')}               = |chi~(k-W)|^2
    full_plus(k, W)    = int int chi chi' e^{+i(k+W)(t-t')}               = |chi~(k+W)|^2
    full_sumphase(k,W) = int int chi chi' e^{iW(t+t')} e^{ik(t-t')}       = chi~(k+W) chi~(W-k)

For real chi, Re N(q) = |chi~(q)|^2 / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import QuadratureConfig, Region, integrate_interval, integrate_rectangle_2d
from .specfun import scaled_erfc_complex

__all__ = [
    "Gaussian",
    "SuddenTopHat",
    "DiracDelta",
    "Sampled",
    "SwitchingProfile",
    "TimeBilinear",
    "BILINEAR_KINDS",
    "time_bilinear",
    "brute_force_time_bilinear",
    "load_sampled_profile",
]

BILINEAR_KINDS = ("nested_minus", "nested_plus", "full_minus", "full_plus", "full_sumphase")

_SQRT2 = math.sqrt(2.0)
_SERIES_CUT = 0.5


@dataclass(frozen=True)
class Gaussian:
    """chi(t) = amplitude * exp(-t^2/sigma^2)."""

    sigma: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("Gaussian sigma must be positive")

    @property
    def support(self) -> tuple[float, float]:
        # exp(-64) ~ 1.6e-28: numerically compact
        return (-8.0 * self.sigma, 8.0 * self.sigma)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (0.0,)

    def chi(self, t):
        t = np.asarray(t, float)
        return self.amplitude * np.exp(-(t / self.sigma) ** 2)

    @property
    def l1_norm(self) -> float:
        return abs(self.amplitude) * math.sqrt(math.pi) * self.sigma


@dataclass(frozen=True)
class SuddenTopHat:
    """chi(t) = height on [0, sigma], zero elsewhere."""

    sigma: float
    height: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("top-hat width sigma must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return (0.0, self.sigma)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def chi(self, t):
        t = np.asarray(t, float)
        return np.where((t >= 0) & (t <= self.sigma), self.height, 0.0)

    @property
    def l1_norm(self) -> float:
        return abs(self.height) * self.sigma


@dataclass(frozen=True)
class DiracDelta:
    """chi(t) = C * delta(t)."""

    C: float

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("delta strength C must be positive")

    @property
    def l1_norm(self) -> float:
        return abs(self.C)


@dataclass(frozen=True)
class Sampled:
    """Tabulated chi on a strictly increasing grid; zero outside [t[0], t[-1]].

    Interpolation is a not-a-knot cubic spline (straight line for two
    samples), so a two-point constant table is an exact top-hat.
    """

    t: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, float)
        v = np.asarray(self.values, float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("sampled profile needs matching 1-D arrays with >= 2 points")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise ValueError("sampled profile must be finite")
        if not np.all(np.diff(t) > 0):
            raise ValueError("sampled time grid must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_spline", CubicSpline(t, v) if t.size > 2 else None)

    @property
    def support(self) -> tuple[float, float]:
        return (float(self.t[0]), float(self.t[-1]))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def chi(self, t):
        t = np.asarray(t, float)
        if self._spline is None:
            y = np.interp(t, self.t, self.values)
        else:
            y = self._spline(t)
        return np.where((t >= self.t[0]) & (t <= self.t[-1]), y, 0.0)

    @property
    def l1_norm(self) -> float:
        r = integrate_interval(lambda x: np.abs(self.chi(x)), self.t[0], self.t[-1],
                               QuadratureConfig(rel_tol=1e-8, abs_tol=1e-300))
        return float(r.value)


SwitchingProfile = Union[Gaussian, SuddenTopHat, DiracDelta, Sampled]


def load_sampled_profile(path: Union[str, Path]) -> Sampled:
    """Read a two-column (t, chi) table; the first line is a header.

    Columns may be separated by whitespace or commas; blank lines and lines
    starting with '#' are skipped.
    """
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty switching file")
    rows = []
    for no, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.replace(",", " ").split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{no}: expected two columns, got {len(parts)}")
        rows.append((float(parts[0]), float(parts[1])))
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two samples")
    arr = np.array(rows)
    return Sampled(arr[:, 0], arr[:, 1])


@dataclass(frozen=True)
class TimeBilinear:
    nested_minus: Callable
    nested_plus: Callable
    full_minus: Callable
    full_plus: Callable
    full_sumphase: Callable

    def __getitem__(self, kind: str) -> Callable:
        if kind not in BILINEAR_KINDS:
            raise KeyError(kind)
        return getattr(self, kind)


# ---------------------------------------------------------------------------
# closed forms, written in terms of nested N(q), full F(q) and sum-phase S(k, W)

def _from_parts(N, F, S) -> TimeBilinear:
    def arrs(k, w):
        return np.asarray(k, float), np.asarray(w, float)

    def nm(k, w):
        k, w = arrs(k, w)
        return N(k + w)

    def np_(k, w):
        k, w = arrs(k, w)
        return N(k - w)

    def fm(k, w):
        k, w = arrs(k, w)
        return F(k - w)

    def fp(k, w):
        k, w = arrs(k, w)
        return F(k + w)

    def fs(k, w):
        k, w = arrs(k, w)
        return S(k, w)

    return TimeBilinear(nm, np_, fm, fp, fs)


def _gaussian_parts(p: Gaussian):
    s, A2 = p.sigma, p.amplitude**2
    pref = math.pi * s * s

    def N(q):
        # (pi s^2/2) erfc(i s q/sqrt2) e^{-s^2 q^2/2} == (pi s^2/2) erfcx(i s q/sqrt2)
        return A2 * 0.5 * pref * scaled_erfc_complex(1j * s * q / _SQRT2)

    def F(q):
        return A2 * pref * np.exp(-0.5 * (s * q) ** 2) + 0j

    def S(k, w):
        return A2 * pref * np.exp(-0.5 * s * s * (k * k + w * w)) + 0j

    return N, F, S


def _sinc(x):
    # sin(x)/x
    return np.sinc(np.asarray(x) / np.pi)


def _x_minus_sin_over_x2(x):
    # (x - sin x) / x^2, series below |x| = 0.5 where the difference cancels
    small = np.abs(x) < _SERIES_CUT
    xs = np.where(small, 1.0, x)
    direct = (xs - np.sin(xs)) / (xs * xs)
    x2 = x * x
    series = np.zeros_like(x)
    for n in range(7, 0, -1):
        # term x^(2n-1) / (2n+1)! with alternating sign
        series = x2 * series + (-1) ** (n - 1) / math.factorial(2 * n + 1)
    return np.where(small, x * series, direct)


def _sudden_parts(p: SuddenTopHat):
    s, h2 = p.sigma, p.height**2

    def N(q):
        # [1 - ix - e^{-ix}]/q^2 = s^2 [sinc^2(x/2)/2 - i (x - sin x)/x^2],  x = s q
        x = s * np.asarray(q, float)
        return h2 * s * s * (0.5 * _sinc(0.5 * x) ** 2 - 1j * _x_minus_sin_over_x2(x))

    def F(q):
        return h2 * (s * _sinc(0.5 * s * np.asarray(q))) ** 2 + 0j

    def S(k, w):
        return h2 * s * s * np.exp(1j * w * s) * _sinc(0.5 * s * (k + w)) * _sinc(0.5 * s * (w - k))

    return N, F, S


def _delta_parts(p: DiracDelta):
    c2 = p.C**2

    def N(q):
        return np.full(np.shape(q), 0.5 * c2, dtype=complex)

    def F(q):
        return np.full(np.shape(q), c2, dtype=complex)

    def S(k, w):
        return np.full(np.broadcast(k, w).shape, c2, dtype=complex)

    return N, F, S


def time_bilinear(profile: SwitchingProfile, cfg: Optional[QuadratureConfig] = None) -> TimeBilinear:
    """Evaluators for the five time bilinears of a switching profile."""
    if isinstance(profile, Gaussian):
        return _from_parts(*_gaussian_parts(profile))
    if isinstance(profile, SuddenTopHat):
        return _from_parts(*_sudden_parts(profile))
    if isinstance(profile, DiracDelta):
        return _from_parts(*_delta_parts(profile))
    if isinstance(profile, Sampled):
        def make(kind):
            def ev(k, w):
                kk, ww = np.broadcast_arrays(np.asarray(k, float), np.asarray(w, float))
                out = np.empty(kk.shape, complex)
                for idx in np.ndindex(kk.shape):
                    out[idx] = brute_force_time_bilinear(profile, float(kk[idx]), float(ww[idx]), kind, cfg)
                return out
            return ev
        return TimeBilinear(*(make(kind) for kind in BILINEAR_KINDS))
    raise TypeError(f"unsupported switching profile {type(profile).__name__}")


def brute_force_time_bilinear(profile, k: float, omega: float, kind: str,
                              cfg: Optional[QuadratureConfig] = None) -> complex:
    """Direct 2-D quadrature of one time bilinear (the oracle for the closed forms).

    Works for any profile exposing ``chi``, ``support`` and ``l1_norm``; the
    absolute tolerance is 1e-10 * (int |chi|)^2 unless ``cfg`` is given.
    """
    if kind not in BILINEAR_KINDS:
        raise ValueError(f"unknown bilinear kind {kind!r}")
    if isinstance(profile, DiracDelta):
        raise TypeError("a delta profile has no pointwise chi; use time_bilinear")
    lo, hi = profile.support
    scale = profile.l1_norm**2
    if scale == 0.0:
        return 0j
    if cfg is None:
        cfg = QuadratureConfig(rel_tol=1e-10, abs_tol=1e-10 * scale, max_subdivisions=4000)
    chi = profile.chi

    if kind == "nested_minus":
        q, ordered = k + omega, True
        phase = lambda t, s: np.exp(-1j * q * (t - s))
    elif kind == "nested_plus":
        q, ordered = k - omega, True
        phase = lambda t, s: np.exp(-1j * q * (t - s))
    elif kind == "full_minus":
        q, ordered = k - omega, False
        phase = lambda t, s: np.exp(1j * q * (t - s))
    elif kind == "full_plus":
        q, ordered = k + omega, False
        phase = lambda t, s: np.exp(1j * q * (t - s))
    else:
        ordered = False
        phase = lambda t, s: np.exp(1j * omega * (t + s) + 1j * k * (t - s))

    ct_cache = {}

    def f(t, s):
        ct = ct_cache.get(t)
        if ct is None:
            ct = float(chi(t))
            ct_cache[t] = ct
        return ct * chi(s) * phase(t, s)

    bps = tuple(b for b in getattr(profile, "breakpoints", ()) if lo < b < hi)
    r = integrate_rectangle_2d(f, Region(lo, hi, lo, hi, ordered), cfg, bps, bps)
    return complex(r.value)
