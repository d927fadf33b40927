"""Galerkin assembly of the bilinear forms on the P1 mesh.

All four stiffness matrices share two ingredients:

* the interior double integral over Omega x Omega of the hat-difference
  products against |x-y|^{-(1+2s)} -- on a uniform mesh it only depends on
  the element offset, so one local matrix per offset is integrated and
  scattered along diagonals;
* exterior corrections, which are integrals over R \\ Omega of densities
  built from the hat extensions u_i = moment_i / rho.  These are evaluated
  on one shared positive-weight exterior rule, which makes every pairwise
  difference of assembled forms an explicit nonnegative Gram matrix -- the
  discrete mirror of the ordering proofs.

The Neumann matrix is the Dirichlet-type form plus the exterior correction
combined under one integral sign.  Evaluating the two parts separately is
not possible for s >= 1/2 (the kappa term and the correction both diverge
at the endpoint hats); the combined integrand stays integrable, and near
the boundary it is evaluated through basis functions shifted by their
boundary value, which removes the numerical cancellation as well.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .extensions import ExteriorWeight, Field, Mesh, SideTables, side_tables
from .kernels import FractionalKernel, IntervalDomain
from .quadrature import (
    ExteriorRule,
    QuadratureConfig,
    QuadratureDivergenceError,
    exterior_rule,
    singular_pair_integral,
)

__all__ = [
    "FormMatrices",
    "assemble_mass",
    "assemble_dirichlet",
    "assemble_neumann",
    "assemble_robin",
    "assemble_mu",
    "write_flap",
    "read_flap",
]


@dataclass(frozen=True)
class FormMatrices:
    """Stiffness and mass matrix of one flavor on its active DOFs."""

    flavor: str
    stiffness: np.ndarray
    mass: np.ndarray
    dof_map: np.ndarray
    mesh: Mesh
    kernel: FractionalKernel
    domain: IntervalDomain
    beta: ExteriorWeight | None = None
    weight: ExteriorWeight | None = None

    @property
    def n_active(self) -> int:
        return len(self.dof_map)

    def quadratic_form(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.stiffness @ x)

    def restrict(self, coeffs: np.ndarray) -> np.ndarray:
        """Full nodal vector -> active DOF vector."""
        return np.asarray(coeffs, dtype=float)[self.dof_map]

    def embed(self, active: np.ndarray) -> np.ndarray:
        """Active DOF vector -> full nodal vector (zeros elsewhere)."""
        out = np.zeros(self.mesh.n_nodes)
        out[self.dof_map] = active
        return out

    def save_binary(self, path, which: str = "stiffness") -> None:
        write_flap(getattr(self, which), path)

    def save_csv(self, path, which: str = "stiffness") -> None:
        np.savetxt(path, getattr(self, which), delimiter=",", fmt="%.17g")


def write_flap(matrix: np.ndarray, path) -> None:
    """Dense square matrix as magic 'FLAP', u32 size, f64 row-major, LE."""
    m = np.ascontiguousarray(matrix, dtype="<f8")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("FLAP format stores square matrices")
    with open(path, "wb") as fh:
        fh.write(b"FLAP")
        fh.write(struct.pack("<I", m.shape[0]))
        fh.write(m.tobytes())


def read_flap(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != b"FLAP":
            raise ValueError(f"bad magic {magic!r}, expected b'FLAP'")
        (n,) = struct.unpack("<I", fh.read(4))
        data = np.frombuffer(fh.read(8 * n * n), dtype="<f8")
    return data.reshape(n, n).copy()


def assemble_mass(mesh: Mesh) -> np.ndarray:
    """P1 mass matrix: tridiagonal closed form on the uniform mesh."""
    n = mesh.n_nodes
    h = mesh.h
    m = np.zeros((n, n))
    idx = np.arange(n)
    m[idx, idx] = 2.0 * h / 3.0
    m[0, 0] = m[-1, -1] = h / 3.0
    m[idx[:-1], idx[:-1] + 1] = h / 6.0
    m[idx[:-1] + 1, idx[:-1]] = h / 6.0
    return m


# ---------------------------------------------------------------------------
# Interior part: offset patterns
# ---------------------------------------------------------------------------

_PATTERN_TOL = 1e-11


@lru_cache(maxsize=32)
def _singular_patterns(s: float):
    """Local matrices for offsets 0 (identical) and 1 (touching), unit mesh."""
    alpha = 1.0 + 2.0 * s
    cfg = QuadratureConfig(rel_tol=_PATTERN_TOL, max_depth=40)

    v0 = singular_pair_integral(
        lambda x, y: (x - y) ** 2, (0.0, 1.0), (0.0, 1.0), alpha, cfg
    )
    local0 = v0 * np.array([[1.0, -1.0], [-1.0, 1.0]])

    factors = (
        lambda x, y: 1.0 - x,          # hat at the left node
        lambda x, y: x + y - 2.0,      # hat at the shared node
        lambda x, y: 1.0 - y,          # minus hat at the right node
    )
    local1 = np.empty((3, 3))
    for u in range(3):
        for v in range(u, 3):
            val = singular_pair_integral(
                lambda x, y, u=u, v=v: factors[u](x, y) * factors[v](x, y),
                (0.0, 1.0), (1.0, 2.0), alpha, cfg,
            )
            local1[u, v] = local1[v, u] = val
    return local0, local1


def _far_patterns(s: float, n_offsets: int, order: int = 16) -> np.ndarray:
    """Local 4x4 matrices for offsets m = 2..n_offsets on the unit mesh.

    The integrand (m + eta - xi)^{-alpha} is analytic on the unit square at
    distance >= 1 from its singularity, so a fixed tensor Gauss rule is
    exact to machine precision for every offset at once.
    """
    alpha = 1.0 + 2.0 * s
    ms = np.arange(2, n_offsets + 1, dtype=float)
    if len(ms) == 0:
        return np.zeros((0, 4, 4))
    xi, wi = np.polynomial.legendre.leggauss(order)
    xi = 0.5 * (xi + 1.0)
    wi = 0.5 * wi
    X = xi[None, :, None]
    Y = xi[None, None, :]
    W = wi[:, None] * wi[None, :]
    V = (ms[:, None, None] + Y - X) ** (-alpha)

    lam = np.stack([1.0 - xi, xi])            # (2, order)
    out = np.empty((len(ms), 4, 4))
    fac_x = [lam[0][None, :, None], lam[1][None, :, None], None, None]
    fac_y = [None, None, -lam[0][None, None, :], -lam[1][None, None, :]]
    for u in range(4):
        for v in range(u, 4):
            fu = fac_x[u] if u < 2 else fac_y[u]
            fv = fac_x[v] if v < 2 else fac_y[v]
            vals = np.einsum("mxy,xy->m", V * fu * fv, W)
            out[:, u, v] = out[:, v, u] = vals
    return out


@lru_cache(maxsize=8)
def _interior_matrix_cached(mesh: Mesh, kernel: FractionalKernel) -> np.ndarray:
    n = mesh.n_elements
    s = kernel.s
    scale = 0.5 * kernel.c_ns * mesh.h ** (1.0 - 2.0 * s)
    local0, local1 = _singular_patterns(s)
    far = _far_patterns(s, n - 1)

    P = np.zeros((n + 1, n + 1))

    def scatter(local, slots, m, factor):
        count = n - m
        base = np.arange(count)
        for u, du in enumerate(slots):
            for v, dv in enumerate(slots):
                P[base + du, base + dv] += factor * local[u, v]

    scatter(local0, (0, 1), 0, scale)
    if n >= 2:
        scatter(local1, (0, 1, 2), 1, 2.0 * scale)
    for i, m in enumerate(range(2, n)):
        scatter(far[i], (0, 1, m, m + 1), m, 2.0 * scale)
    return P


def interior_form_matrix(mesh: Mesh, kernel: FractionalKernel) -> np.ndarray:
    """(C/2) * double integral over Omega^2 of hat differences, all nodes.

    Shared by every flavor; callers must not mutate the returned array.
    """
    return _interior_matrix_cached(mesh, kernel)


# ---------------------------------------------------------------------------
# Exterior corrections on the shared rule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExteriorStructures:
    """Everything the exterior corrections need on the shared rule.

    U holds the hat-extension values u_i = moment_i / rho at the rule
    nodes; Upsi the values of the boundary-shifted basis (the endpoint hat
    of each node's side carries its Neumann value minus one).  Mpsi is the
    weighted matrix of pairwise shifted-basis moments; its interior block
    equals the kappa-weighted mass matrix divided by C(n,s).
    """

    rule: ExteriorRule
    U: np.ndarray
    Upsi: np.ndarray
    rho: np.ndarray
    Mpsi: np.ndarray


def _side_contribution(mesh, tabs: SideTables, w: np.ndarray, n: int):
    """Weighted shifted-moment matrix and U, Upsi columns for one side."""
    hatm = tabs.hat_moments()
    U = hatm / tabs.rho

    A00 = tabs.M00 @ w
    A01 = tabs.M01 @ w
    A11 = tabs.M11 @ w
    momsum = hatm @ w
    rho_far_sum = float(tabs.rho_far @ w)

    M = np.zeros((n + 1, n + 1))
    diag = np.zeros(n + 1)
    diag[:-1] += A00
    diag[1:] += A11
    off = A01.copy()

    Upsi = U.copy()
    if tabs.side > 0:
        shifted = -(tabs.rho_far + tabs.M0[n - 1]) / tabs.rho
        Upsi[n] = shifted
        diag[n] = rho_far_sum + A00[n - 1]
        off[n - 1] = -(float(tabs.M1[n - 2] @ w) + A00[n - 1])
        dense = -momsum[: n - 1]
        M[n, : n - 1] = dense
        M[: n - 1, n] = dense
    else:
        shifted = -(tabs.rho_far + tabs.M1[0]) / tabs.rho
        Upsi[0] = shifted
        diag[0] = rho_far_sum + A11[0]
        off[0] = -(float(tabs.M0[1] @ w) + A11[0])
        dense = -momsum[2:]
        M[0, 2:] = dense
        M[2:, 0] = dense

    idx = np.arange(n + 1)
    M[idx, idx] = diag
    M[idx[:-1], idx[:-1] + 1] += off
    M[idx[:-1] + 1, idx[:-1]] += off
    return M, U, Upsi


@lru_cache(maxsize=8)
def _exterior_structures_cached(
    mesh: Mesh, kernel: FractionalKernel, breakpoints: tuple
) -> ExteriorStructures:
    rule = exterior_rule(mesh.domain, kernel, breakpoints=breakpoints)
    n = mesh.n_elements
    Q = len(rule.nodes)
    U = np.empty((n + 1, Q))
    Upsi = np.empty((n + 1, Q))
    rho_all = np.empty(Q)
    Mpsi = np.zeros((n + 1, n + 1))
    for side in (+1.0, -1.0):
        mask = rule.side == side
        tabs = side_tables(mesh, kernel, side, rule.dist[mask])
        M, Uside, Upsiside = _side_contribution(mesh, tabs, rule.weights[mask], n)
        Mpsi += M
        U[:, mask] = Uside
        Upsi[:, mask] = Upsiside
        rho_all[mask] = tabs.rho
    return ExteriorStructures(rule=rule, U=U, Upsi=Upsi, rho=rho_all, Mpsi=Mpsi)


def exterior_structures(mesh, kernel, breakpoints=()) -> ExteriorStructures:
    return _exterior_structures_cached(mesh, kernel, tuple(breakpoints))


def _gram(ext: ExteriorStructures, density: np.ndarray, shifted=False) -> np.ndarray:
    """Gram matrix of the hat extensions against a nonnegative density."""
    basis = ext.Upsi if shifted else ext.U
    weighted = basis * (ext.rule.weights * density)[None, :]
    return weighted @ basis.T


def _neumann_stiffness(mesh, kernel, ext: ExteriorStructures) -> np.ndarray:
    P = interior_form_matrix(mesh, kernel)
    correction = kernel.c_ns * (ext.Mpsi - _gram(ext, ext.rho, shifted=True))
    return P + correction


def _assert_psd(K: np.ndarray, tol_scale: float = 1e-8) -> None:
    norm = float(np.abs(K).sum(axis=1).max())
    shift = tol_scale * norm
    try:
        np.linalg.cholesky(K + shift * np.eye(K.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError(
            f"assembled matrix is not positive semidefinite within {shift:g}"
        ) from exc


def assemble_dirichlet(mesh: Mesh, kernel: FractionalKernel,
                       domain: IntervalDomain, quad=None) -> FormMatrices:
    """Dirichlet form: interior double integral plus the kappa term,
    endpoint DOFs eliminated (zero-value constraint)."""
    _check_domain(mesh, domain)
    ext = exterior_structures(mesh, kernel)
    n = mesh.n_elements
    interior = np.arange(1, n)
    full = interior_form_matrix(mesh, kernel) + kernel.c_ns * ext.Mpsi
    K = full[np.ix_(interior, interior)]
    mass = assemble_mass(mesh)[np.ix_(interior, interior)]
    return FormMatrices("dirichlet", K, mass, interior, mesh, kernel, domain)


def assemble_neumann(mesh: Mesh, kernel: FractionalKernel,
                     domain: IntervalDomain, quad=None) -> FormMatrices:
    """Neumann form on all nodes; the constant vector lies in its kernel."""
    _check_domain(mesh, domain)
    ext = exterior_structures(mesh, kernel)
    K = _neumann_stiffness(mesh, kernel, ext)
    _assert_psd(K)
    dof = np.arange(mesh.n_nodes)
    return FormMatrices("neumann", K, assemble_mass(mesh), dof, mesh, kernel, domain)


def assemble_robin(mesh: Mesh, kernel: FractionalKernel, domain: IntervalDomain,
                   beta: ExteriorWeight, quad=None) -> FormMatrices:
    """Robin form: Neumann plus the Gram of the density C beta rho/(C rho + beta)."""
    _check_domain(mesh, domain)
    _check_weight_values(beta, domain)
    _check_beta_integrable(beta, domain)
    ext = exterior_structures(mesh, kernel, breakpoints=beta.breakpoints)
    K = _neumann_stiffness(mesh, kernel, ext)
    c = kernel.c_ns
    bvals = beta(ext.rule.nodes)
    density = c * bvals * ext.rho / (c * ext.rho + bvals)
    K = K + _gram(ext, density)
    _assert_psd(K)
    dof = np.arange(mesh.n_nodes)
    return FormMatrices("robin", K, assemble_mass(mesh), dof, mesh, kernel, domain,
                        beta=beta)


def assemble_mu(mesh: Mesh, kernel: FractionalKernel, domain: IntervalDomain,
                w: ExteriorWeight, quad=None, active: str = "all") -> FormMatrices:
    """Generalized exterior-measure form with density w (d mu = w dy).

    With endpoint DOFs active the correction integral diverges when w grows
    like rho near the boundary and s >= 1/2; this is detected and reported.
    ``active='interior'`` restricts to the Dirichlet DOF set, on which any
    admissible density is integrable.
    """
    _check_domain(mesh, domain)
    _check_weight_values(w, domain)
    if active not in ("all", "interior"):
        raise ValueError("active must be 'all' or 'interior'")
    if active == "all":
        _check_mu_integrable(mesh, kernel, domain, w)
    ext = exterior_structures(mesh, kernel, breakpoints=w.breakpoints)
    K = _neumann_stiffness(mesh, kernel, ext) + _gram(ext, w(ext.rule.nodes))
    if active == "interior":
        dof = np.arange(1, mesh.n_elements)
        K = K[np.ix_(dof, dof)]
    else:
        dof = np.arange(mesh.n_nodes)
    mass = assemble_mass(mesh)[np.ix_(dof, dof)]
    return FormMatrices("mu", K, mass, dof, mesh, kernel, domain, weight=w)


def _check_domain(mesh: Mesh, domain: IntervalDomain) -> None:
    if mesh.domain != domain:
        raise ValueError("mesh and domain disagree")


def _check_weight_values(weight: ExteriorWeight, domain: IntervalDomain) -> None:
    L = domain.length
    probes = np.concatenate([
        domain.b + L * np.geomspace(1e-6, 1e3, 40),
        domain.a - L * np.geomspace(1e-6, 1e3, 40),
    ])
    if np.any(weight(probes) < 0.0):
        raise ValueError("exterior weight must be nonnegative")


def _check_beta_integrable(beta: ExteriorWeight, domain: IntervalDomain) -> None:
    L = domain.length
    for edge, sgn in ((domain.b, 1.0), (domain.a, -1.0)):
        t = L * np.array([1e2, 1e4, 1e6])
        masses = beta(edge + sgn * t) * t
        if masses[-1] > 1e-300 and masses[-1] > 0.9 * masses[0]:
            raise ValueError(
                "beta fails the integrability probe (mass beta(y)*|y| does "
                "not decay along the exterior ray)"
            )


def _check_mu_integrable(mesh, kernel, domain, w) -> None:
    L = domain.length
    for side, edge in ((+1.0, domain.b), (-1.0, domain.a)):
        d = L * np.array([1e-3, 1e-5, 1e-7, 1e-9])
        tabs = side_tables(mesh, kernel, side, d)
        u_end = tabs.hat_moments()[-1 if side > 0 else 0] / tabs.rho
        vals = w(edge + side * d) * u_end ** 2 * d
        if vals[0] > 0 and vals[-1] > 0.8 * vals[0]:
            raise QuadratureDivergenceError(
                "exterior measure integral diverges at the boundary for "
                "endpoint DOFs; assemble with active='interior' or use an "
                "integrable density"
            )
