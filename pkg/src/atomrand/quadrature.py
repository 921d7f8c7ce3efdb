"""Adaptive quadrature on finite, semi-infinite and (ordered) rectangular domains.

The 1-D engine is a globally adaptive bisection scheme built on a fixed
10-point Gauss-Legendre rule.  Every live panel carries its own rule value
and the values on its two halves; the difference between the two is the
panel's error estimate, and the (more accurate) half-sum is what gets
accumulated.  Bisecting a panel reuses the halves, so each refinement costs
40 new integrand evaluations.  Integrands are vectorized: ``f(x)`` receives a
1-D array and returns either an array of the same length or an array of
shape ``(len(x), m)`` for vector-valued integrals.  Complex values are fine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

__all__ = [
    "QuadratureConfig",
    "QuadResult",
    "NonConvergenceError",
    "Region",
    "integrate_interval",
    "integrate_semi_infinite",
    "integrate_rectangle_2d",
    "default_k_split",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-14
    max_subdivisions: int = 10_000
    oscillation_period_hint: Optional[float] = None
    # vector integrands: no component is asked for better than
    # companion_floor * max|I_j|, so an entry that is zero up to roundoff
    # does not stall the others
    companion_floor: float = 0.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 4:
            raise ValueError("max_subdivisions must be at least 4")
        if self.oscillation_period_hint is not None and not self.oscillation_period_hint > 0:
            raise ValueError("oscillation_period_hint must be positive")
        if not 0.0 <= self.companion_floor <= 1.0:
            raise ValueError("companion_floor must lie in [0, 1]")

    def with_(self, **kw) -> "QuadratureConfig":
        d = dict(
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            max_subdivisions=self.max_subdivisions,
            oscillation_period_hint=self.oscillation_period_hint,
            companion_floor=self.companion_floor,
        )
        d.update(kw)
        return QuadratureConfig(**d)


class QuadResult(NamedTuple):
    value: object
    error: object
    n_panels: int


class NonConvergenceError(RuntimeError):
    """Raised when the subdivision budget runs out; carries the partial result."""

    def __init__(self, message, value, error, n_panels):
        super().__init__(message)
        self.value = value
        self.error = error
        self.n_panels = n_panels


def default_k_split(a0: float, omega: float = 0.0, sigma: Optional[float] = None) -> float:
    """max(10/a0, 10*omega, 10/sigma): where the finite part hands over to the tail."""
    ks = 10.0 / a0
    ks = max(ks, 10.0 * omega)
    if sigma is not None and sigma > 0:
        ks = max(ks, 10.0 / sigma)
    return ks


def _panel_rule(f, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gauss-Legendre values on panels [a_i, b_i]; returns shape (P, m)."""
    hw = 0.5 * (b - a)
    x = (0.5 * (a + b))[:, None] + hw[:, None] * _GL_X[None, :]
    y = np.asarray(f(x.ravel()))
    y = y.reshape(a.size, _GL_X.size, -1)
    return hw[:, None] * np.einsum("pnm,n->pm", y, _GL_W)


def _adaptive(f, edges: np.ndarray, cfg: QuadratureConfig):
    a = edges[:-1].astype(float)
    b = edges[1:].astype(float)
    keep = b > a
    a, b = a[keep], b[keep]
    if a.size == 0:
        return np.zeros(1), np.zeros(1), 0
    if a.size > cfg.max_subdivisions:
        raise ValueError("initial panel count exceeds max_subdivisions")

    m = 0.5 * (a + b)
    vals = _panel_rule(f, np.concatenate([a, a, m]), np.concatenate([b, m, b]))
    P = a.size
    Q, QL, QR = vals[:P], vals[P:2 * P], vals[2 * P:]

    while True:
        est = QL + QR
        err = np.abs(est - Q)
        total = est.sum(axis=0)
        total_err = err.sum(axis=0)
        mag = np.abs(total)
        tol = np.maximum(np.maximum(cfg.abs_tol, cfg.rel_tol * mag), cfg.companion_floor * mag.max())
        if np.all(total_err <= tol):
            return total, total_err, a.size

        ratio = (err / tol).max(axis=1)
        # panels too short to split further are frozen
        splittable = (b - a) > 64 * np.finfo(float).eps * np.maximum(np.abs(a), np.abs(b))
        ratio = np.where(splittable, ratio, 0.0)
        room = cfg.max_subdivisions - a.size
        if room <= 0 or not np.any(ratio > 0):
            raise NonConvergenceError(
                f"quadrature did not converge with {a.size} panels "
                f"(error {np.max(total_err):.3e} > tolerance {np.min(tol):.3e})",
                total, total_err, a.size,
            )
        # refine every panel above its fair share of the tolerance
        sel = np.flatnonzero(ratio > 1.0 / a.size)
        if sel.size == 0:
            sel = np.array([int(np.argmax(ratio))])
        if sel.size > room:
            sel = sel[np.argsort(-ratio[sel], kind="stable")[:room]]
            sel.sort()

        sa, sb = a[sel], b[sel]
        sm = 0.5 * (sa + sb)
        q1, q3 = 0.5 * (sa + sm), 0.5 * (sm + sb)
        n = sel.size
        quarters = _panel_rule(
            f, np.concatenate([sa, q1, sm, q3]), np.concatenate([q1, sm, q3, sb])
        )
        new_a = np.concatenate([sa, sm])
        new_b = np.concatenate([sm, sb])
        new_Q = np.concatenate([QL[sel], QR[sel]])
        new_QL = np.concatenate([quarters[:n], quarters[2 * n:3 * n]])
        new_QR = np.concatenate([quarters[n:2 * n], quarters[3 * n:]])

        live = np.ones(a.size, bool)
        live[sel] = False
        a = np.concatenate([a[live], new_a])
        b = np.concatenate([b[live], new_b])
        Q = np.concatenate([Q[live], new_Q])
        QL = np.concatenate([QL[live], new_QL])
        QR = np.concatenate([QR[live], new_QR])
        order = np.argsort(a, kind="stable")
        a, b, Q, QL, QR = a[order], b[order], Q[order], QL[order], QR[order]


def _finish(total, total_err, n, vector: bool):
    if vector:
        return QuadResult(total, total_err, n)
    v = total[0]
    return QuadResult(v.real.item() if np.isrealobj(total) else complex(v), float(total_err[0]), n)


def _probe_vector(f, x0: float) -> tuple[bool, Callable]:
    y = np.asarray(f(np.array([x0, x0])))
    return (y.ndim == 2), f


def _period_edges(lo: float, hi: float, period: Optional[float], cap: int) -> np.ndarray:
    if period is None or hi <= lo:
        return np.array([lo, hi])
    n = int(math.ceil((hi - lo) / period))
    n = max(1, min(n, cap))
    return np.linspace(lo, hi, n + 1)


def _merge_edges(lo, hi, pieces: Sequence[np.ndarray], points: Sequence[float]) -> np.ndarray:
    e = [np.array([lo, hi], float)]
    e.extend(pieces)
    pts = [p for p in points if lo < p < hi and np.isfinite(p)]
    if pts:
        e.append(np.asarray(pts, float))
    return np.unique(np.concatenate(e))


def integrate_interval(
    f: Callable,
    a: float,
    b: float,
    cfg: Optional[QuadratureConfig] = None,
    breakpoints: Sequence[float] = (),
) -> QuadResult:
    """Integrate f over the finite interval [a, b]."""
    cfg = cfg or QuadratureConfig()
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integrate_interval needs finite limits")
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    if a == b:
        vector, _ = _probe_vector(f, a)
        y = np.asarray(f(np.array([a])))
        z = np.zeros(y.shape[1:] if vector else (1,), dtype=y.dtype)
        return _finish(z, np.zeros(z.shape), 0, vector)
    vector, _ = _probe_vector(f, 0.5 * (a + b))
    cap = max(1, cfg.max_subdivisions // 4)
    edges = _merge_edges(a, b, [_period_edges(a, b, cfg.oscillation_period_hint, cap)], breakpoints)
    total, err, n = _adaptive(f, edges, cfg)
    return _finish(sign * total, err, n, vector)


def integrate_semi_infinite(
    f: Callable,
    cfg: Optional[QuadratureConfig] = None,
    *,
    k_split: Optional[float] = None,
    breakpoints: Sequence[float] = (),
    lower: float = 0.0,
) -> QuadResult:
    """Integrate f over [lower, inf).

    [lower, k_split] is handled directly (split per period when the config
    carries an oscillation hint); the tail is mapped onto u in [0, 1) via
    k = k_split + L*u/(1-u) with L = k_split - lower, and both pieces are
    refined under one global error budget.
    """
    cfg = cfg or QuadratureConfig()
    if k_split is None:
        finite = [p for p in breakpoints if np.isfinite(p) and p > lower]
        k_split = 2.0 * max(finite) if finite else lower + 1.0
    if not k_split > lower:
        raise ValueError("k_split must exceed the lower limit")
    L = k_split - lower

    def g(s):
        s = np.asarray(s, float)
        tail = s > k_split
        u = np.where(tail, s - k_split, 0.0)
        one_m = 1.0 - u
        kk = np.where(tail, k_split + L * u / one_m, s)
        jac = np.where(tail, L / (one_m * one_m), 1.0)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            y = np.asarray(f(kk))
        if y.ndim == 2:
            return y * jac[:, None]
        return y * jac

    vector, _ = _probe_vector(f, 0.5 * (lower + k_split))
    cap = max(1, cfg.max_subdivisions // 4)
    head = _merge_edges(lower, k_split, [_period_edges(lower, k_split, cfg.oscillation_period_hint, cap)], breakpoints)
    tail = k_split + np.array([0.0, 0.5, 0.75, 0.9, 0.97, 1.0])
    edges = np.unique(np.concatenate([head, tail]))
    total, err, n = _adaptive(g, edges, cfg)
    return _finish(total, err, n, vector)


@dataclass(frozen=True)
class Region:
    """Integration region for integrate_rectangle_2d.

    Outer variable t in [t_lo, t_hi], inner s in [s_lo, s_hi]; with
    ``ordered=True`` the inner upper limit becomes min(t, s_hi).
    """

    t_lo: float
    t_hi: float
    s_lo: float
    s_hi: float
    ordered: bool = False


def integrate_rectangle_2d(
    f: Callable,
    region: Region,
    cfg: Optional[QuadratureConfig] = None,
    breakpoints_t: Sequence[float] = (),
    breakpoints_s: Sequence[float] = (),
) -> QuadResult:
    """Iterated adaptive integral of f(t, s) (t scalar, s a 1-D array).

    The returned error is the outer estimate plus the worst inner error times
    the outer length.
    """
    cfg = cfg or QuadratureConfig()
    width = region.t_hi - region.t_lo
    if width <= 0:
        raise ValueError("empty outer range")
    inner_cfg = cfg.with_(rel_tol=0.1 * cfg.rel_tol, abs_tol=0.1 * cfg.abs_tol / width)
    worst_inner = [0.0]

    def outer(ts):
        out = np.empty(ts.size, dtype=complex)
        for i, t in enumerate(ts):
            hi = min(t, region.s_hi) if region.ordered else region.s_hi
            if hi <= region.s_lo:
                out[i] = 0.0
                continue
            r = integrate_interval(lambda s, t=t: f(t, s), region.s_lo, hi, inner_cfg, breakpoints_s)
            out[i] = r.value
            worst_inner[0] = max(worst_inner[0], float(np.max(r.error)))
        return out

    edges = _merge_edges(
        region.t_lo, region.t_hi,
        [_period_edges(region.t_lo, region.t_hi, cfg.oscillation_period_hint, max(1, cfg.max_subdivisions // 4))],
        breakpoints_t,
    )
    total, err, n = _adaptive(outer, edges, cfg.with_(abs_tol=0.5 * cfg.abs_tol))
    value = complex(total[0])
    if value.imag == 0.0:
        value = value.real
    return QuadResult(value, float(err[0]) + width * worst_inner[0], n)
