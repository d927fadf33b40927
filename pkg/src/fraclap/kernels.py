"""Interval geometry, the fractional-order constant and the closed-form
scalar densities rho (exterior kernel mass) and kappa (its interior mirror).

Everything here is exact up to floating point: on an interval the defining
integrals of rho and kappa have elementary antiderivatives, so no quadrature
is involved.  The quadrature oracles live in the test suite only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "IntervalDomain",
    "FractionalKernel",
    "gamma_function",
    "normalization_constant",
    "rho",
    "kappa",
    "power_integral",
    "power_integral_width",
]


# Lanczos coefficients, g = 7, 9 terms (Godfrey).  Gives ~15 significant
# digits on the positive real axis, comfortably above the 12-digit contract.
_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_function(z: float) -> float:
    """Euler Gamma for real z > 0 via the Lanczos approximation.

    Self-contained on purpose: the normalization constant must not depend on
    platform math-library quality.  Arguments below 0.5 are lifted through
    the recurrence Gamma(z) = Gamma(z+1)/z, which keeps the Lanczos series in
    its stable zone.
    """
    if z <= 0.0:
        raise ValueError(f"gamma_function requires z > 0, got {z}")
    if z < 0.5:
        return gamma_function(z + 1.0) / z
    z = z - 1.0
    x = _LANCZOS_C[0]
    for i, c in enumerate(_LANCZOS_C[1:], start=1):
        x += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * x


def normalization_constant(n: int, s: float) -> float:
    """Constant C(n, s) = s 4^s Gamma((2s+n)/2) / (pi^{n/2} Gamma(1-s))."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"order s must lie in (0, 1), got {s}")
    if n < 1:
        raise ValueError(f"dimension n must be >= 1, got {n}")
    num = s * 2.0 ** (2.0 * s) * gamma_function((2.0 * s + n) / 2.0)
    den = math.pi ** (n / 2.0) * gamma_function(1.0 - s)
    return num / den


@dataclass(frozen=True)
class IntervalDomain:
    """Open interval (a, b) together with its exterior bookkeeping.

    ``exterior_truncation`` is the half-length of the exterior window
    [a - R, a) u (b, b + R] used for visualization and for the random
    perturbations in the minimality checks.  Analytic and semi-infinite
    quadrature never truncates.
    """

    a: float
    b: float
    exterior_truncation: float = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if not self.exterior_truncation > 0.0:
            raise ValueError("exterior_truncation must be positive")

    @property
    def length(self) -> float:
        return self.b - self.a

    def distance_to_boundary(self, x):
        """dist(x, {a, b}); positive inside (a, b)."""
        x = np.asarray(x, dtype=float)
        return np.minimum(x - self.a, self.b - x)

    def contains(self, x) -> bool:
        return bool(np.all((self.a < np.asarray(x)) & (np.asarray(x) < self.b)))

    def is_exterior(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all((x < self.a) | (x > self.b)))


@dataclass(frozen=True)
class FractionalKernel:
    """Order s in (0, 1) in dimension n = 1, with the constant cached."""

    s: float
    n: int = 1
    c_ns: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"order s must lie in (0, 1), got {self.s}")
        if self.n != 1:
            raise ValueError("only n = 1 is supported")
        object.__setattr__(self, "c_ns", normalization_constant(self.n, self.s))

    @property
    def exponent(self) -> float:
        """Kernel exponent n + 2s."""
        return self.n + 2.0 * self.s

    def riesz(self, x, y):
        """|x - y|^{-(n+2s)} for x != y."""
        d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        return d ** (-self.exponent)


def power_integral_width(t1, width, p: float):
    """Integral of t^{-p} over (t1, t1 + width), 0 < t1, 0 <= width.

    Stable for p near 1 (expm1/log1p give the log limit without
    cancellation) and for width far below the floating-point granularity
    of t1, which is why the width is passed separately.
    """
    t1 = np.asarray(t1, dtype=float)
    width = np.asarray(width, dtype=float)
    q = 1.0 - p
    z = width / t1
    if q == 0.0:
        return np.log1p(z)
    r = q * np.log1p(z)
    small = np.abs(r) < 0.5
    return np.where(
        small,
        t1 ** q * np.expm1(np.where(small, r, 0.0)) / q,
        ((t1 + width) ** q - t1 ** q) / q,
    )


def power_integral(t1, t2, p: float):
    """Integral of t^{-p} over (t1, t2), 0 < t1 <= t2, stable for p near 1."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    return power_integral_width(t1, t2 - t1, p)


def rho(domain: IntervalDomain, kernel: FractionalKernel, x):
    """Exterior kernel mass rho(x) = integral over (a,b) of |x-y|^{-(1+2s)} dy.

    Closed form: for x > b it equals ((x-b)^{-2s} - (x-a)^{-2s}) / (2s),
    mirrored for x < a.  Only defined strictly outside [a, b].
    """
    x = np.asarray(x, dtype=float)
    if np.any((x >= domain.a) & (x <= domain.b)):
        raise ValueError("rho is defined only outside the closed interval [a, b]")
    near = np.where(x > domain.b, x - domain.b, domain.a - x)
    out = power_integral_width(near, domain.length, kernel.exponent)
    return float(out) if np.ndim(out) == 0 else out


def kappa(domain: IntervalDomain, kernel: FractionalKernel, x):
    """Interior density kappa(x) = C(n,s) * integral over R\\(a,b) of the kernel.

    Closed form C(n,s) ((b-x)^{-2s} + (x-a)^{-2s}) / (2s) for a < x < b.
    """
    x = np.asarray(x, dtype=float)
    if np.any((x <= domain.a) | (x >= domain.b)):
        raise ValueError("kappa is defined only inside the open interval (a, b)")
    two_s = 2.0 * kernel.s
    out = kernel.c_ns * ((domain.b - x) ** -two_s + (x - domain.a) ** -two_s) / two_s
    return out if out.ndim else float(out)
