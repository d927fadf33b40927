"""Spectral machinery: elliptic solves, generalized eigendecomposition,
semigroup evolution and the discrete heat-kernel sup.

Everything is dense: at desk scale (N <= 2048) a full symmetric
generalized eigendecomposition is affordable and gives e^{-tA} to machine
precision for all t simultaneously.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import FormMatrices
from .extensions import Field

__all__ = [
    "SpectralSemigroup",
    "solve_elliptic",
    "eigendecompose",
    "evolve",
    "heat_kernel_sup",
    "NeumannCompatibilityError",
]


class NeumannCompatibilityError(ValueError):
    """Right-hand side has nonzero mean: the Neumann system is singular."""


def _load_vector(forms: FormMatrices, f: Field) -> np.ndarray:
    """Galerkin load (M f)|_active for P1 data f given on the full mesh."""
    from .assembly import assemble_mass

    full_mass = assemble_mass(forms.mesh)
    return (full_mass @ f.coeffs)[forms.dof_map]


def solve_elliptic(forms: FormMatrices, f: Field) -> Field:
    """Solve K u = M f on the active DOFs; returns the full nodal Field.

    For the Neumann flavor the right-hand side must have zero mean (testing
    the weak form with the constant function forces it); the solve then
    runs on the M-orthogonal complement of the constants and the mean-zero
    representative is returned.
    """
    if f.mesh != forms.mesh:
        raise ValueError("field and forms live on different meshes")
    K = forms.stiffness
    load = _load_vector(forms, f)
    if forms.flavor == "neumann":
        one = np.ones(forms.n_active)
        m_one = forms.mass @ one
        volume = float(one @ m_one)
        mean = float(one @ load)
        norm = float(np.abs(K).sum(axis=1).max())
        if abs(mean) > 1e-10 * max(1.0, np.abs(load).max(), volume):
            raise NeumannCompatibilityError(
                f"Neumann data must satisfy the zero-mean compatibility "
                f"condition; got integral {mean:.3e}"
            )
        # rank-one shift removes the constant kernel without touching the
        # mean-zero complement
        K = K + (norm / volume) * np.outer(m_one, m_one)
        u = scipy.linalg.solve(K, load, assume_a="pos")
        u -= (float(m_one @ u) / volume) * one
    else:
        u = scipy.linalg.solve(K, load, assume_a="pos")
    return forms.mesh.field(forms.embed(u))


@dataclass(frozen=True)
class SpectralSemigroup:
    """Generalized eigenpairs (ascending) of one form, M-orthonormal."""

    forms: FormMatrices
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, psi_k^T M psi_j = delta_kj

    @property
    def flavor(self) -> str:
        return self.forms.flavor

    @property
    def complete(self) -> bool:
        return len(self.eigenvalues) == self.forms.n_active

    def coefficients(self, f: Field) -> np.ndarray:
        """Galerkin L2 coefficients psi_k^T (M_full f)|_active.

        The full mass matrix enters so that data on eliminated endpoint
        nodes still loads its neighbors, exactly as in the weak form.
        """
        return self.eigenvectors.T @ _load_vector(self.forms, f)


def eigendecompose(forms: FormMatrices, count: int | None = None) -> SpectralSemigroup:
    """Lowest `count` generalized eigenpairs of (K, M), M-orthonormal.

    Sign convention: the first component exceeding 1e-8 of the max is made
    positive, so decompositions are reproducible across BLAS backends.
    """
    n = forms.n_active
    if count is None:
        count = n
    if not 1 <= count <= n:
        raise ValueError(f"count must lie in [1, {n}], got {count}")
    lam, psi = scipy.linalg.eigh(
        forms.stiffness, forms.mass, subset_by_index=[0, count - 1]
    )
    norm = float(np.abs(forms.stiffness).sum(axis=1).max())
    if lam[0] < -1e-8 * norm:
        raise FloatingPointError(
            f"negative eigenvalue {lam[0]:.3e} below churn tolerance"
        )
    for k in range(psi.shape[1]):
        col = psi[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-8 * np.abs(col).max())
        if len(idx) and col[idx[0]] < 0:
            psi[:, k] = -col
    residual = forms.stiffness @ psi - forms.mass @ psi * lam[None, :]
    if np.abs(residual).max() > 1e-8 * max(norm, 1.0):
        raise FloatingPointError("eigenpair residual above tolerance")
    return SpectralSemigroup(forms, lam, psi)


def evolve(sg: SpectralSemigroup, f: Field, t: float) -> Field:
    """e^{-tA} f through the spectral representation."""
    if t < 0:
        raise ValueError("the semigroup is defined for t >= 0 only")
    coeffs = sg.coefficients(f)
    active = sg.eigenvectors @ (np.exp(-sg.eigenvalues * t) * coeffs)
    return sg.forms.mesh.field(sg.forms.embed(active))


def heat_kernel_sup(sg: SpectralSemigroup, t: float) -> float:
    """Max over active nodes of |sum_k e^{-lambda_k t} psi_k(i) psi_k(j)|.

    Discrete proxy for the L1 -> Linf norm of the semigroup at time t.
    """
    if t <= 0:
        raise ValueError("heat kernel sup requires t > 0")
    if not sg.complete:
        raise ValueError("heat kernel evaluation needs the full decomposition")
    damped = sg.eigenvectors * np.exp(-0.5 * sg.eigenvalues * t)[None, :]
    kernel = damped @ damped.T
    return float(np.abs(kernel).max())
