"""Independent reference values shared by several test modules."""

import math
from fractions import Fraction

import mpmath
import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import sph_harm_y

# int_0^inf k^(2n+1) / (b k^2 + c)^m dk = B(n+1, m-n-1) / (2 b^(n+1) c^(m-n-1))
BETA_FAMILY = [
    # (n, m, b, c)
    (0, 2, 1.0, 1.0),
    (0, 3, 2.0, 0.5),
    (1, 4, 1.0, 9.0),
    (1, 6, 4 * 2.68e-4**2, 9.0),
    (2, 5, 0.3, 2.0),
    (2, 7, 1.0, 1.0),
    (3, 6, 4.0, 9.0),
    (0, 6, 1e-4, 1.0),
    (4, 8, 1.0, 3.0),
    (1, 3, 7.0, 0.1),
]


def beta_family_exact(n, m, b, c):
    return beta_fn(n + 1, m - n - 1) / (2 * b ** (n + 1) * c ** (m - n - 1))


def beta_family_integrand(n, m, b, c):
    return lambda k: k ** (2 * n + 1) / (b * k * k + c) ** m


def beta_k3_over_d6(b, c):
    """int k^3/(b k^2 + c)^6 = 1/(40 b^2 c^4), the weight behind the delta result."""
    return Fraction(1, 40) / (Fraction(b) ** 2 * Fraction(c) ** 4)


def gapless_sudden_meijer(e, a, sigma, a0):
    """Closed form of the degenerate top-hat diagonal entry via a Meijer-G function."""
    z = mpmath.mpf(9) * sigma**2 / (16 * a0**2)
    g = mpmath.meijerg([[0], []], [[0, 5], [mpmath.mpf(1) / 2]], z)
    return float(512 * e**2 / (295245 * mpmath.pi**2) * (1 - 2 * a * a) * (24 - mpmath.sqrt(mpmath.pi) * g))


class SphereOracle:
    """Angular blocks by direct quadrature on the unit sphere.

    F_l(k^) = (-i)^l 4 pi sum_m Y_lm(k^) int dr^ Y*_lm Y*_{le me} Y_{lg mg} r^
    X_l = <|F_l|^2>, D_{l l'} = <conj(k^.F_l) (k^.F_l')>, averages over k^.
    """

    def __init__(self, n_theta=40, n_phi=80):
        x, w = np.polynomial.legendre.leggauss(n_theta)
        th = np.arccos(x)
        ph = np.arange(n_phi) * 2 * np.pi / n_phi
        self.TH, self.PH = np.meshgrid(th, ph, indexing="ij")
        self.W = np.outer(w, np.full(n_phi, 2 * np.pi / n_phi))
        self.rhat = np.stack([np.sin(self.TH) * np.cos(self.PH), np.sin(self.TH) * np.sin(self.PH), np.cos(self.TH)])

    def _Y(self, l, m):
        return sph_harm_y(l, m, self.TH, self.PH)

    def field(self, l, lg, mg, le, me):
        ang = np.conj(self._Y(le, me)) * self._Y(lg, mg) * self.rhat
        out = np.zeros((3,) + self.TH.shape, complex)
        for m in range(-l, l + 1):
            G = np.array([np.sum(self.W * np.conj(self._Y(l, m)) * ang[i]) for i in range(3)])
            out += 4 * np.pi * G[:, None, None] * self._Y(l, m)[None]
        return out * (-1j) ** l

    def blocks(self, lg, mg, le, me, L=5, conjugate=True):
        """(X, D); conjugate=False gives the sum-phase averages <F_a(k^).F_b(-k^)>.

        The sum-phase trace pairs F_eg(k) with conj F_ge(k) = F_eg(-k), and
        F_l(-k^) = (-1)^l F_l(k^).
        """
        fs = [self.field(l, lg, mg, le, me) for l in range(L)]
        cj = np.conj if conjugate else (lambda z: z)
        X = np.zeros((L, L), complex)
        D = np.zeros((L, L), complex)
        for a in range(L):
            for b in range(L):
                X[a, b] = np.sum(self.W * np.sum(cj(fs[a]) * fs[b], axis=0)) / (4 * np.pi)
                ka = np.sum(self.rhat * fs[a], axis=0)
                kb = np.sum(self.rhat * fs[b], axis=0)
                D[a, b] = np.sum(self.W * cj(ka) * kb) / (4 * np.pi)
        if conjugate:
            return X.real, D.real
        parity = (-1.0) ** np.arange(L)
        return X * parity[None, :], D * parity[None, :]

