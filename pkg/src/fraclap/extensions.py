"""P1 fields on the interval and the three exterior extension operators.

A Field is data on the closed interval; an ExtendedField adds exterior
values according to the chosen exterior condition:

* Dirichlet -- zero outside,
* Neumann   -- moment(x) / rho(x), the unique choice annihilating the
  nonlocal normal derivative,
* Robin     -- C rho / (C rho + beta) times the Neumann value.

moment(x) denotes the integral over the interval of u(y) |x-y|^{-(1+2s)} dy.
For piecewise-linear u it has a per-element closed form, evaluated here in
a cancellation-safe parametrization driven by distances to the boundary
(the basis values are extrapolated at the evaluation point, so nothing
large is ever subtracted).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .kernels import FractionalKernel, IntervalDomain, power_integral_width, rho

__all__ = [
    "Mesh",
    "Field",
    "ExteriorWeight",
    "ExtendedField",
    "extend",
    "nonlocal_normal_derivative",
    "SideTables",
    "side_tables",
]

# Exterior evaluation cap: closer to the boundary the 0*inf balance in the
# Neumann ratio is no longer meaningful at double precision.
BOUNDARY_EVAL_CAP = 1e-10

FLAVORS = ("dirichlet", "neumann", "robin")


@dataclass(frozen=True)
class Mesh:
    """Uniform partition of (a, b) into n_elements P1 elements."""

    domain: IntervalDomain
    n_elements: int

    def __post_init__(self):
        if self.n_elements < 2:
            raise ValueError("mesh needs at least 2 elements")

    @property
    def h(self) -> float:
        return self.domain.length / self.n_elements

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.domain.a, self.domain.b, self.n_elements + 1)

    @property
    def n_nodes(self) -> int:
        return self.n_elements + 1

    def field(self, coeffs) -> "Field":
        return Field(self, np.asarray(coeffs, dtype=float))

    def interpolate(self, fn) -> "Field":
        return Field(self, np.asarray(fn(self.nodes), dtype=float))


@dataclass(frozen=True)
class Field:
    """Nodal coefficients of a continuous piecewise-linear function."""

    mesh: Mesh
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.mesh.n_nodes,):
            raise ValueError(
                f"expected {self.mesh.n_nodes} coefficients, "
                f"got shape {self.coeffs.shape}"
            )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        dom = self.mesh.domain
        if np.any((x < dom.a - 1e-12) | (x > dom.b + 1e-12)):
            raise ValueError("Field is defined on the closed interval only")
        out = np.interp(x, self.mesh.nodes, self.coeffs)
        return float(out) if np.ndim(out) == 0 else out


class ExteriorWeight:
    """Nonnegative integrable weight beta on the exterior of the interval."""

    def __init__(self, kind, fn, breakpoints=()):
        self.kind = kind
        self._fn = fn
        self.breakpoints = tuple(float(p) for p in breakpoints)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.asarray(self._fn(y), dtype=float)
        return float(out) if np.ndim(out) == 0 else out

    def __repr__(self):
        return f"ExteriorWeight({self.kind})"

    @staticmethod
    def zero() -> "ExteriorWeight":
        return ExteriorWeight("zero", lambda y: np.zeros_like(y))

    @staticmethod
    def constant_window(c: float, lo: float, hi: float) -> "ExteriorWeight":
        if c < 0:
            raise ValueError("weight must be nonnegative")
        if not lo < hi:
            raise ValueError("window must have positive length")
        return ExteriorWeight(
            "constant_window",
            lambda y: np.where((y >= lo) & (y <= hi), c, 0.0),
            breakpoints=(lo, hi),
        )

    @staticmethod
    def algebraic_decay(c: float, power: float, domain: IntervalDomain) -> "ExteriorWeight":
        if c < 0:
            raise ValueError("weight must be nonnegative")
        if power <= 1.0:
            raise ValueError("decay power must exceed 1 for integrability")

        def fn(y):
            d = np.maximum(np.maximum(domain.a - y, y - domain.b), 0.0)
            return c * (1.0 + d) ** (-power)

        return ExteriorWeight("algebraic_decay", fn)

    @staticmethod
    def tabulated(points, values) -> "ExteriorWeight":
        points = np.asarray(points, dtype=float)
        values = np.asarray(values, dtype=float)
        if np.any(values < 0):
            raise ValueError("weight must be nonnegative")
        if np.any(np.diff(points) <= 0):
            raise ValueError("tabulation points must be strictly increasing")

        def fn(y):
            return np.interp(y, points, values, left=0.0, right=0.0)

        return ExteriorWeight("tabulated", fn, breakpoints=tuple(points))


# ---------------------------------------------------------------------------
# Closed-form moment tables for a batch of exterior points on one side
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SideTables:
    """Per-element closed-form moments at exterior points of one side.

    Shapes are (n_elements, n_points) unless noted.  All quantities are
    computed from distances to the boundary, so they remain accurate for
    points far below float resolution of absolute coordinates.

    M0/M1 are moments of the local shape functions, M00/M01/M11 of their
    pairwise products; ``rho`` is the full kernel mass, ``rho_far`` the
    mass of all elements except the one touching this side's endpoint.
    """

    side: float
    dist: np.ndarray
    M0: np.ndarray
    M1: np.ndarray
    M00: np.ndarray
    M01: np.ndarray
    M11: np.ndarray
    rho: np.ndarray
    rho_far: np.ndarray

    def hat_moments(self) -> np.ndarray:
        """Moments of all global hat functions, shape (n_nodes, n_points)."""
        n_el, n_pt = self.M0.shape
        out = np.zeros((n_el + 1, n_pt))
        out[:-1] += self.M0
        out[1:] += self.M1
        return out

    def field_moment(self, coeffs: np.ndarray) -> np.ndarray:
        """Moment of the P1 field with the given nodal coefficients."""
        return coeffs[:-1] @ self.M0 + coeffs[1:] @ self.M1


def side_tables(mesh: Mesh, kernel: FractionalKernel, side: float, dist) -> SideTables:
    """Build SideTables for exterior points at the given distances.

    ``side`` is +1 for points right of b, -1 for points left of a.
    """
    dist = np.atleast_1d(np.asarray(dist, dtype=float))
    if np.any(dist <= 0.0):
        raise ValueError("exterior distances must be positive")
    h = mesh.h
    n = mesh.n_elements
    s = kernel.s
    p1 = 1.0 + 2.0 * s

    # Element index k counted from this side's endpoint: its near edge is
    # at distance k*h, far edge at (k+1)*h.  For the right side that is
    # element n-1-k in mesh order; for the left side element k.
    k = np.arange(n, dtype=float)[:, None]
    d = dist[None, :]
    t1 = d + k * h
    t2 = d + (k + 1.0) * h

    J1 = power_integral_width(t1, h, p1)
    J2 = power_integral_width(t1, h, 2.0 * s)
    J3 = power_integral_width(t1, h, 2.0 * s - 1.0)

    # Extrapolated values of the local shapes at the evaluation point, in
    # side-local orientation: lam_near is the shape rising toward this
    # side's endpoint.  Its value at distance d beyond the endpoint is
    # (d + k h + h)/h for the k-th element, the other shape is -(d + k h)/h.
    v_near = t2 / h
    v_far = -t1 / h

    # Single factors: P(tau) = value - slope_along_t * tau where tau is the
    # distance variable; for both sides tau grows away from the point, and
    # the near shape decreases with tau at rate 1/h.
    Mnear = v_near * J1 - J2 / h
    Mfar = v_far * J1 + J2 / h

    # Pair products: P(tau) = (vn - tau/h)(vf + tau/h) etc.
    Mnn = v_near ** 2 * J1 - 2.0 * v_near / h * J2 + J3 / h ** 2
    Mff = v_far ** 2 * J1 + 2.0 * v_far / h * J2 + J3 / h ** 2
    Mnf = v_near * v_far * J1 + (v_near - v_far) / h * J2 - J3 / h ** 2

    # The antiderivative route above multiplies extrapolated basis values
    # (of size t/h) by near-equal power integrals; its cancellation error
    # grows like (t1/h)^2 ulp.  For element/point pairs separated by many
    # element lengths, plain Gauss on the element is exact to machine
    # precision instead (the kernel is analytic there).
    far = t1 > 32.0 * h
    if np.any(far):
        xg, wg = np.polynomial.legendre.leggauss(12)
        xg = 0.5 * (xg + 1.0)
        wg = 0.5 * wg
        gnear = np.zeros_like(t1)
        gfar = np.zeros_like(t1)
        gnn = np.zeros_like(t1)
        gff = np.zeros_like(t1)
        gnf = np.zeros_like(t1)
        for sg, wgt in zip(xg, wg):
            ker = wgt * (t1 + sg * h) ** (-p1)
            gnear += (1.0 - sg) * ker
            gfar += sg * ker
            gnn += (1.0 - sg) ** 2 * ker
            gff += sg ** 2 * ker
            gnf += sg * (1.0 - sg) * ker
        Mnear = np.where(far, h * gnear, Mnear)
        Mfar = np.where(far, h * gfar, Mfar)
        Mnn = np.where(far, h * gnn, Mnn)
        Mff = np.where(far, h * gff, Mff)
        Mnf = np.where(far, h * gnf, Mnf)

    # Map side-local orientation back to mesh orientation.
    if side > 0:
        # element order reversed; near shape is lam1 of mesh element n-1-k
        rev = slice(None, None, -1)
        M1m, M0m = Mnear[rev], Mfar[rev]
        M11m, M00m, M01m = Mnn[rev], Mff[rev], Mnf[rev]
    else:
        M0m, M1m = Mnear, Mfar
        M00m, M11m, M01m = Mnn, Mff, Mnf

    L = mesh.domain.length
    rho_all = power_integral_width(dist, L, p1)
    rho_far = power_integral_width(dist + h, (n - 1.0) * h, p1)

    return SideTables(
        side=float(side), dist=dist, M0=M0m, M1=M1m,
        M00=M00m, M01=M01m, M11=M11m, rho=rho_all, rho_far=rho_far,
    )


# ---------------------------------------------------------------------------
# Extended fields
# ---------------------------------------------------------------------------


class ExtendedField:
    """A Field together with its exterior evaluator for one flavor."""

    def __init__(self, interior: Field, flavor: str, kernel: FractionalKernel,
                 beta: ExteriorWeight | None = None):
        flavor = flavor.lower()
        if flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {flavor!r}, expected one of {FLAVORS}")
        if flavor == "robin":
            if beta is None:
                raise ValueError("robin flavor requires an exterior weight beta")
        self.interior = interior
        self.flavor = flavor
        self.kernel = kernel
        self.beta = beta if flavor == "robin" else None

    @property
    def domain(self) -> IntervalDomain:
        return self.interior.mesh.domain

    def exterior_value(self, side: float, dist) -> np.ndarray:
        """Exterior values at distances `dist` beyond the side's endpoint."""
        dist = np.atleast_1d(np.asarray(dist, dtype=float))
        if self.flavor == "dirichlet":
            return np.zeros_like(dist)
        tab = side_tables(self.interior.mesh, self.kernel, side, dist)
        mom = tab.field_moment(self.interior.coeffs)
        if self.flavor == "neumann":
            return mom / tab.rho
        c = self.kernel.c_ns
        edge = self.domain.b if side > 0 else self.domain.a
        bval = self.beta(edge + side * dist)
        return c * mom / (c * tab.rho + bval)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(x)
        dom = self.domain
        out = np.empty_like(x)
        inside = (x >= dom.a) & (x <= dom.b)
        out[inside] = self.interior(x[inside]) if np.any(inside) else 0.0
        for side, mask in ((+1.0, x > dom.b), (-1.0, x < dom.a)):
            if not np.any(mask):
                continue
            edge = dom.b if side > 0 else dom.a
            dist = side * (x[mask] - edge)
            if np.any(dist < BOUNDARY_EVAL_CAP):
                raise ValueError(
                    f"exterior evaluation within {BOUNDARY_EVAL_CAP} of the "
                    "boundary is not supported"
                )
            out[mask] = self.exterior_value(side, dist)
        return float(out[0]) if scalar else out


def extend(u: Field, flavor: str, kernel: FractionalKernel,
           domain: IntervalDomain, beta: ExteriorWeight | None = None) -> ExtendedField:
    """Extend interior data to the whole line per the chosen exterior condition."""
    if u.mesh.domain != domain:
        raise ValueError("field mesh does not live on the given domain")
    return ExtendedField(u, flavor, kernel, beta=beta)


def nonlocal_normal_derivative(v: ExtendedField, kernel: FractionalKernel,
                               domain: IntervalDomain, x):
    """N^s v(x) = C(n,s) (v(x) rho(x) - moment(x)) for exterior x."""
    x = np.asarray(x, dtype=float)
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(x)
    if not domain.is_exterior(x):
        raise ValueError("the nonlocal normal derivative lives on the exterior")
    out = np.empty_like(x)
    for side, mask in ((+1.0, x > domain.b), (-1.0, x < domain.a)):
        if not np.any(mask):
            continue
        edge = domain.b if side > 0 else domain.a
        dist = side * (x[mask] - edge)
        tab = side_tables(v.interior.mesh, kernel, side, dist)
        mom = tab.field_moment(v.interior.coeffs)
        vals = v.exterior_value(side, dist)
        out[mask] = kernel.c_ns * (vals * tab.rho - mom)
    return float(out[0]) if scalar else out
