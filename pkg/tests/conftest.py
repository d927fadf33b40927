import numpy as np
import pytest

from fraclap import (
    ExteriorWeight,
    FractionalKernel,
    IntervalDomain,
    Mesh,
    assemble_dirichlet,
    assemble_neumann,
    assemble_robin,
)

DOMAIN = IntervalDomain(-1.0, 1.0, exterior_truncation=1.0)


def robin_window(domain=DOMAIN) -> ExteriorWeight:
    span = 0.25 * domain.length
    lo = domain.b + 0.05 * domain.length
    return ExteriorWeight.constant_window(1.0, lo, lo + span)


@pytest.fixture(scope="session")
def forms_cache():
    """Assembled forms, shared across the whole run (do not mutate)."""
    cache = {}

    def get(flavor: str, s: float, n: int):
        key = (flavor, s, n)
        if key not in cache:
            mesh = Mesh(DOMAIN, n)
            kernel = FractionalKernel(s)
            if flavor == "dirichlet":
                cache[key] = assemble_dirichlet(mesh, kernel, DOMAIN)
            elif flavor == "neumann":
                cache[key] = assemble_neumann(mesh, kernel, DOMAIN)
            elif flavor == "robin":
                cache[key] = assemble_robin(mesh, kernel, DOMAIN, robin_window())
            else:
                raise ValueError(flavor)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def sg_cache(forms_cache):
    """Spectral decompositions, shared across the whole run."""
    from fraclap import eigendecompose

    cache = {}

    def get(flavor: str, s: float, n: int):
        key = (flavor, s, n)
        if key not in cache:
            cache[key] = eigendecompose(forms_cache(flavor, s, n))
        return cache[key]

    return get


def random_interior_vectors(n_nodes: int, count: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        full = np.zeros(n_nodes)
        full[1:-1] = rng.standard_normal(n_nodes - 2)
        out.append(full)
    return out
