"""Fractional Laplacian on a bounded interval with Dirichlet, nonlocal
Neumann and nonlocal Robin exterior conditions.

The package realizes the three exterior-value problems through their
bilinear forms on a P1 mesh, exposes the associated spectral semigroups,
and ships executable verification suites for the structural properties
(divergence theorem, form ordering, semigroup domination, submarkovian
behaviour, ultracontractive decay).
"""

__version__ = "0.1.0"

from .kernels import (
    FractionalKernel,
    IntervalDomain,
    kappa,
    normalization_constant,
    rho,
)
from .quadrature import (
    QuadratureConfig,
    QuadratureConvergenceError,
    QuadratureDivergenceError,
    QuadratureError,
    exterior_tail_integral,
    principal_value_laplacian,
    singular_pair_integral,
)
from .extensions import (
    ExtendedField,
    ExteriorWeight,
    Field,
    Mesh,
    extend,
    nonlocal_normal_derivative,
)
from .assembly import (
    FormMatrices,
    assemble_dirichlet,
    assemble_mass,
    assemble_mu,
    assemble_neumann,
    assemble_robin,
    read_flap,
    write_flap,
)
from .semigroup import (
    NeumannCompatibilityError,
    SpectralSemigroup,
    eigendecompose,
    evolve,
    heat_kernel_sup,
    solve_elliptic,
)
from .verify import (
    GaussianBump,
    VerificationReport,
    check_divergence_theorem,
    check_domination,
    check_extension_minimality,
    check_integration_by_parts,
    check_mu_counterexample,
    check_s_to_one_limit,
    check_submarkov,
    check_ultracontractivity,
)
