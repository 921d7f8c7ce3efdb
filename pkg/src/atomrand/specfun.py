"""Special functions used by the angular, radial and time-integral code.

Contents
--------
wigner3j            exact Racah evaluation, returned as sign * sqrt(p/q)
spherical_bessel_j  j_l(x) for l <= 10, series + recurrences
scaled_erfc_complex erfcx(z) = exp(z^2) erfc(z) for complex z
hydrogen_radial     normalized hydrogenoid R_nl(r)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import special as _sp

__all__ = [
    "SqrtRational",
    "SurdSum",
    "wigner3j",
    "wigner3j_float",
    "spherical_bessel_j",
    "scaled_erfc_complex",
    "associated_laguerre",
    "hydrogen_radial",
]

MAX_BESSEL_ORDER = 10


@dataclass(frozen=True)
class SqrtRational:
    """A real number of the form sign * sqrt(square) with `square` rational."""

    sign: int
    square: Fraction

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.sqrt(self.square.numerator / self.square.denominator)

    def __mul__(self, other: "SqrtRational") -> "SqrtRational":
        if not isinstance(other, SqrtRational):
            return NotImplemented
        return SqrtRational(self.sign * other.sign, self.square * other.square)

    def __neg__(self) -> "SqrtRational":
        return SqrtRational(-self.sign, self.square)

    def __bool__(self) -> bool:
        return self.sign != 0

    def as_surd(self) -> tuple[Fraction, int]:
        """Write the value as c * sqrt(s) with c rational and s square-free."""
        if self.sign == 0:
            return Fraction(0), 1
        n, d = self.square.numerator, self.square.denominator
        a, sf = _squarefree_split(n * d)
        return Fraction(self.sign * a, d), sf


def _squarefree_split(n: int) -> tuple[int, int]:
    """n = a^2 * s with s square-free (trial division; factors here are small)."""
    a, s = 1, 1
    p = 2
    while p * p <= n and p < 1000:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        a *= p ** (e // 2)
        if e % 2:
            s *= p
        p += 1 if p == 2 else 2
    if n > 1:
        r = math.isqrt(n)
        if r * r == n:
            a *= r
        else:
            s *= n
    return a, s


class SurdSum:
    """Exact accumulator for sums of c_i * sqrt(s_i)."""

    def __init__(self):
        self.terms: dict[int, Fraction] = {}

    def add(self, coeff, value: SqrtRational) -> None:
        if not value or coeff == 0:
            return
        c, sf = value.as_surd()
        self.terms[sf] = self.terms.get(sf, Fraction(0)) + Fraction(coeff) * c

    def scaled(self, factor) -> "SurdSum":
        out = SurdSum()
        out.terms = {s: Fraction(factor) * c for s, c in self.terms.items() if c != 0}
        return out

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.terms.values())

    def rational(self) -> Optional[Fraction]:
        """The exact value if it is rational, else None."""
        nz = {s: c for s, c in self.terms.items() if c != 0}
        if not nz:
            return Fraction(0)
        if set(nz) == {1}:
            return nz[1]
        return None

    def __float__(self) -> float:
        return math.fsum(float(c) * math.sqrt(s) for s, c in self.terms.items() if c != 0)


ZERO = SqrtRational(0, Fraction(0))


def _doubled(x) -> int:
    """Return 2*x as an int, rejecting anything that is not a half-integer."""
    d = Fraction(x) * 2
    if d.denominator != 1:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return int(d)


@lru_cache(maxsize=65536)
def _wigner3j_doubled(tj1: int, tj2: int, tj3: int, tm1: int, tm2: int, tm3: int) -> SqrtRational:
    # all arguments are doubled so that half-integers stay integral
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        if tj < 0:
            raise ValueError("angular momenta must be non-negative")
        if (tj - tm) % 2:
            raise ValueError("m must have the same integrality as its j")
    if tm1 + tm2 + tm3 != 0:
        return ZERO
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm3) > tj3:
        return ZERO
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2) or (tj1 + tj2 + tj3) % 2:
        return ZERO

    j1p, j2p, j3p = tj1 + tj2 - tj3, tj1 - tj2 + tj3, -tj1 + tj2 + tj3
    f = math.factorial
    delta = Fraction(f(j1p // 2) * f(j2p // 2) * f(j3p // 2), f((tj1 + tj2 + tj3) // 2 + 1))
    norm = (
        f((tj1 + tm1) // 2) * f((tj1 - tm1) // 2)
        * f((tj2 + tm2) // 2) * f((tj2 - tm2) // 2)
        * f((tj3 + tm3) // 2) * f((tj3 - tm3) // 2)
    )

    # Racah single sum over t
    a1 = (tj3 - tj2 + tm1) // 2
    a2 = (tj3 - tj1 - tm2) // 2
    b1 = (tj1 + tj2 - tj3) // 2
    b2 = (tj1 - tm1) // 2
    b3 = (tj2 + tm2) // 2
    t_lo = max(0, -a1, -a2)
    t_hi = min(b1, b2, b3)
    s = Fraction(0)
    for t in range(t_lo, t_hi + 1):
        den = f(t) * f(a1 + t) * f(a2 + t) * f(b1 - t) * f(b2 - t) * f(b3 - t)
        s += Fraction((-1) ** t, den)
    if s == 0:
        return ZERO
    phase = -1 if ((tj1 - tj2 - tm3) // 2) % 2 else 1
    sign = phase * (1 if s > 0 else -1)
    return SqrtRational(sign, s * s * delta * norm)


def wigner3j(j1, j2, j3, m1, m2, m3) -> SqrtRational:
    """Exact Wigner 3j symbol (j1 j2 j3; m1 m2 m3).

    Arguments may be ints, half-integer floats or Fractions. Forbidden
    combinations (m-sum or triangle violations, |m| > j) give an exact zero.
    """
    return _wigner3j_doubled(
        _doubled(j1), _doubled(j2), _doubled(j3), _doubled(m1), _doubled(m2), _doubled(m3)
    )


def wigner3j_float(j1, j2, j3, m1, m2, m3) -> float:
    return float(wigner3j(j1, j2, j3, m1, m2, m3))


# ---------------------------------------------------------------------------
# spherical Bessel functions

def _sbj_series(l: int, x: np.ndarray) -> np.ndarray:
    # j_l(x) = x^l/(2l+1)!! * sum_p (-x^2/2)^p / (p! (2l+3)(2l+5)...(2l+2p+1))
    dfact = float(np.prod(np.arange(1, 2 * l + 2, 2, dtype=float)))
    term = np.ones_like(x)
    total = np.ones_like(x)
    h = -0.5 * x * x
    for p in range(1, 40):
        term = term * h / (p * (2 * l + 2 * p + 1))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return x**l / dfact * total


def _sbj_upward(l: int, x: np.ndarray) -> np.ndarray:
    j0 = np.sin(x) / x
    if l == 0:
        return j0
    j1 = np.sin(x) / (x * x) - np.cos(x) / x
    jm, jc = j0, j1
    for n in range(1, l):
        jm, jc = jc, (2 * n + 1) / x * jc - jm
    return jc


def _sbj_miller(l: int, x: np.ndarray) -> np.ndarray:
    # downward recurrence from well above l, normalized by sum (2n+1) j_n^2 = 1
    start = l + 30 + int(np.max(x))
    jp = np.zeros_like(x)
    jc = np.full_like(x, 1e-30)
    out = np.zeros_like(x)
    norm = np.zeros_like(x)
    for n in range(start, 0, -1):
        jm = (2 * n + 1) / x * jc - jp
        if n == l:
            out = jc.copy()
        norm += (2 * n + 1) * jc * jc
        jp, jc = jc, jm
        # rescale to avoid overflow; out/sqrt(norm) is unaffected
        big = np.abs(jc) > 1e100
        if np.any(big):
            jp = np.where(big, jp * 1e-100, jp)
            jc = np.where(big, jc * 1e-100, jc)
            out = np.where(big, out * 1e-100, out)
            norm = np.where(big, norm * 1e-200, norm)
    if l == 0:
        out = jc.copy()
    norm += jc * jc
    return out / np.sqrt(norm)


def spherical_bessel_j(l: int, x):
    """Spherical Bessel function of the first kind, j_l(x), for x >= 0.

    Uses the power series for x < 1, upward recurrence for x > l (where it
    is stable) and Miller's downward recurrence in between.
    """
    if not (0 <= l <= MAX_BESSEL_ORDER) or int(l) != l:
        raise ValueError(f"order l={l} outside supported range 0..{MAX_BESSEL_ORDER}")
    l = int(l)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or not np.all(np.isfinite(xa)):
        raise ValueError("spherical_bessel_j requires finite x >= 0")
    flat = xa.ravel()
    out = np.empty_like(flat)
    small = flat < 1.0
    up = (~small) & (flat > l)
    mid = ~(small | up)
    if np.any(small):
        out[small] = _sbj_series(l, flat[small])
    if np.any(up):
        out[up] = _sbj_upward(l, flat[up])
    if np.any(mid):
        out[mid] = _sbj_miller(l, flat[mid])
    out = out.reshape(xa.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------

def scaled_erfc_complex(z):
    """erfcx(z) = exp(z**2) * erfc(z) for complex z (Faddeeva-backed)."""
    za = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(za)):
        raise ValueError("scaled_erfc_complex requires finite input")
    out = _sp.erfcx(za)
    return complex(out) if out.ndim == 0 else out


def associated_laguerre(n: int, alpha: float, x):
    """Generalized Laguerre polynomial L_n^alpha(x) via the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    if n < 0:
        raise ValueError("n must be non-negative")
    lm = np.ones_like(x)
    if n == 0:
        return lm
    lc = 1.0 + alpha - x
    for k in range(1, n):
        lm, lc = lc, ((2 * k + 1 + alpha - x) * lc - (k + alpha) * lm) / (k + 1)
    return lc


def hydrogen_radial(n: int, l: int, r, a0: float):
    """Normalized hydrogenoid radial function R_nl(r); units a0^{-3/2}."""
    if n < 1 or not (0 <= l < n):
        raise ValueError(f"invalid quantum numbers n={n}, l={l}")
    if a0 <= 0:
        raise ValueError("a0 must be positive")
    r = np.asarray(r, dtype=float)
    rho = 2.0 * r / (n * a0)
    norm = math.sqrt((2.0 / (n * a0)) ** 3 * math.factorial(n - l - 1) / (2 * n * math.factorial(n + l)))
    out = norm * np.exp(-rho / 2) * rho**l * associated_laguerre(n - l - 1, 2 * l + 1, rho)
    return float(out) if out.ndim == 0 else out
