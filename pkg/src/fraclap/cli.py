"""Command-line front end: configure, run and export solves, spectra,
evolutions and verification suites.

Configs are flat INI files (key = value under bracketed sections); the
grammar is documented in the README.  Outputs are CSV with 17 significant
digits and JSON reports, each carrying the config snapshot in its header,
so identical (config, seed, build) runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import (
    assemble_dirichlet,
    assemble_mu,
    assemble_neumann,
    assemble_robin,
)
from .extensions import ExteriorWeight, Field, Mesh, extend
from .kernels import FractionalKernel, IntervalDomain
from .quadrature import QuadratureConfig, QuadratureError
from .semigroup import (
    NeumannCompatibilityError,
    eigendecompose,
    evolve,
    solve_elliptic,
)
from .verify import (
    GaussianBump,
    VerificationReport,
    build_descriptor,
    check_divergence_theorem,
    check_domination,
    check_extension_minimality,
    check_integration_by_parts,
    check_mu_counterexample,
    check_s_to_one_limit,
    check_submarkov,
    check_ultracontractivity,
)

__all__ = ["RunConfig", "main", "cmd_solve", "cmd_spectrum", "cmd_evolve", "cmd_verify"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

ALL_SUITES = (
    "divergence_theorem",
    "integration_by_parts",
    "s_to_one_limit",
    "domination",
    "submarkov",
    "ultracontractivity",
    "extension_minimality",
    "mu_counterexample",
)


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    """Validated run configuration (see README for the file grammar)."""

    a: float = -1.0
    b: float = 1.0
    exterior_truncation: float = 1.0
    s: float = 0.5
    flavor: str = "dirichlet"
    n_elements: int = 128
    beta_spec: dict = field(default_factory=lambda: {"kind": "zero"})
    rhs_spec: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    time_grid: tuple = (0.01, 0.1, 1.0)
    rel_tol: float = 1e-8
    max_depth: int = 30
    gauss_order: int = 8
    seed: int = 0
    out_dir: str = "out"
    exterior_samples: int = 33
    suites: tuple = ALL_SUITES
    eig_count: int | None = None

    def validate(self) -> None:
        if not self.a < self.b:
            raise ConfigError(f"domain requires a < b, got a={self.a}, b={self.b}")
        if not 0.0 < self.s < 1.0:
            raise ConfigError(f"order s must lie in (0, 1), got {self.s}")
        if self.n_elements < 4:
            raise ConfigError(f"mesh size N must be >= 4, got {self.n_elements}")
        if self.flavor not in ("dirichlet", "neumann", "robin", "mu"):
            raise ConfigError(f"unknown flavor {self.flavor!r}")
        if self.exterior_truncation <= 0:
            raise ConfigError("exterior_truncation must be positive")
        if any(t < 0 for t in self.time_grid):
            raise ConfigError("time grid entries must be nonnegative")
        kind = self.beta_spec.get("kind", "zero")
        if kind not in ("zero", "constant_window", "algebraic_decay", "tabulated"):
            raise ConfigError(f"unknown beta kind {kind!r}")
        if float(self.beta_spec.get("c", 0.0)) < 0:
            raise ConfigError("beta amplitude must be nonnegative")
        if self.flavor in ("robin", "mu") and kind == "zero" and self.flavor == "mu":
            pass  # mu with zero density degenerates to neumann; allowed
        for suite in self.suites:
            if suite not in ALL_SUITES:
                raise ConfigError(f"unknown suite {suite!r}")
        # constructing the validated objects exercises module preconditions
        self.domain()
        self.kernel()
        self.quadrature()

    # -- constructors -----------------------------------------------------

    def domain(self) -> IntervalDomain:
        return IntervalDomain(self.a, self.b, self.exterior_truncation)

    def kernel(self) -> FractionalKernel:
        return FractionalKernel(self.s)

    def mesh(self) -> Mesh:
        return Mesh(self.domain(), self.n_elements)

    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(
            gauss_order=self.gauss_order, rel_tol=self.rel_tol,
            max_depth=self.max_depth,
        )

    def beta(self) -> ExteriorWeight:
        spec = self.beta_spec
        kind = spec.get("kind", "zero")
        dom = self.domain()
        if kind == "zero":
            return ExteriorWeight.zero()
        if kind == "constant_window":
            return ExteriorWeight.constant_window(
                float(spec.get("c", 1.0)),
                float(spec.get("window_lo", dom.b + 0.05 * dom.length)),
                float(spec.get("window_hi", dom.b + 0.30 * dom.length)),
            )
        if kind == "algebraic_decay":
            return ExteriorWeight.algebraic_decay(
                float(spec.get("c", 1.0)), float(spec.get("power", 2.0)), dom
            )
        points = [float(p) for p in str(spec["points"]).split(",")]
        values = [float(v) for v in str(spec["values"]).split(",")]
        return ExteriorWeight.tabulated(points, values)

    def rhs_field(self, mesh: Mesh) -> Field:
        spec = self.rhs_spec
        kind = spec.get("kind", "constant")
        dom = mesh.domain
        mid = 0.5 * (dom.a + dom.b)
        if kind == "constant":
            return mesh.field(np.full(mesh.n_nodes, float(spec.get("value", 1.0))))
        if kind == "hat":
            center = float(spec.get("center", mid))
            width = float(spec.get("width", 0.25 * dom.length))
            vals = np.maximum(1.0 - np.abs(mesh.nodes - center) / width, 0.0)
            return mesh.field(float(spec.get("value", 1.0)) * vals)
        if kind == "gaussian":
            bump = GaussianBump(
                float(spec.get("center", mid)),
                float(spec.get("width", 0.1 * dom.length)),
                float(spec.get("value", 1.0)),
            )
            return mesh.interpolate(bump)
        if kind == "getoor":
            xi = (2.0 * mesh.nodes - dom.a - dom.b) / dom.length
            vals = np.maximum(1.0 - xi * xi, 0.0) ** self.s
            return mesh.field(float(spec.get("value", 1.0)) * vals)
        if kind == "random":
            rng = np.random.default_rng(self.seed)
            return mesh.field(rng.uniform(0.0, 1.0, mesh.n_nodes))
        raise ConfigError(f"unknown rhs kind {kind!r}")

    def forms(self):
        mesh, ker, dom = self.mesh(), self.kernel(), self.domain()
        quad = self.quadrature()
        if self.flavor == "dirichlet":
            return assemble_dirichlet(mesh, ker, dom, quad)
        if self.flavor == "neumann":
            return assemble_neumann(mesh, ker, dom, quad)
        if self.flavor == "robin":
            return assemble_robin(mesh, ker, dom, self.beta(), quad)
        return assemble_mu(mesh, ker, dom, self.beta(), quad)

    def snapshot(self) -> dict:
        return {
            "domain": {"a": self.a, "b": self.b,
                       "exterior_truncation": self.exterior_truncation},
            "problem": {"s": self.s, "flavor": self.flavor},
            "mesh": {"n": self.n_elements},
            "beta": self.beta_spec,
            "rhs": self.rhs_spec,
            "time": {"grid": list(self.time_grid)},
            "quadrature": {"rel_tol": self.rel_tol, "max_depth": self.max_depth,
                           "gauss_order": self.gauss_order},
            "seed": self.seed,
            "build": build_descriptor(),
        }


def load_config(path, overrides=None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cfg = RunConfig()
    try:
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        if parser.has_section("domain"):
            sec = parser["domain"]
            cfg.a = sec.getfloat("a", cfg.a)
            cfg.b = sec.getfloat("b", cfg.b)
            cfg.exterior_truncation = sec.getfloat(
                "exterior_truncation", cfg.exterior_truncation
            )
        if parser.has_section("problem"):
            sec = parser["problem"]
            cfg.s = sec.getfloat("s", cfg.s)
            cfg.flavor = sec.get("flavor", cfg.flavor).strip().lower()
        if parser.has_section("mesh"):
            cfg.n_elements = parser["mesh"].getint("n", cfg.n_elements)
        if parser.has_section("beta"):
            cfg.beta_spec = dict(parser["beta"])
        if parser.has_section("rhs"):
            cfg.rhs_spec = dict(parser["rhs"])
        if parser.has_section("time"):
            grid = parser["time"].get("grid", "")
            if grid:
                cfg.time_grid = tuple(float(t) for t in grid.split(","))
        if parser.has_section("quadrature"):
            sec = parser["quadrature"]
            cfg.rel_tol = sec.getfloat("rel_tol", cfg.rel_tol)
            cfg.max_depth = sec.getint("max_depth", cfg.max_depth)
            cfg.gauss_order = sec.getint("gauss_order", cfg.gauss_order)
        if parser.has_section("output"):
            sec = parser["output"]
            cfg.out_dir = sec.get("directory", cfg.out_dir)
            cfg.exterior_samples = sec.getint(
                "exterior_samples", cfg.exterior_samples
            )
        if parser.has_section("verify"):
            suites = parser["verify"].get("suites", "")
            if suites:
                cfg.suites = tuple(s.strip() for s in suites.split(",") if s.strip())
        if parser.has_section("spectrum"):
            cfg.eig_count = parser["spectrum"].getint("count", 0) or None
        cfg.seed = parser.getint("run", "seed", fallback=cfg.seed)
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for attr, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, attr, value)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: Path, header_cols, rows, snapshot: dict) -> None:
    lines = [f"# {json.dumps(snapshot, sort_keys=True)}"]
    lines.append(",".join(header_cols))
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _solution_rows(cfg: RunConfig, u: Field):
    mesh = u.mesh
    dom = mesh.domain
    rows = []
    R = dom.exterior_truncation
    n_ext = cfg.exterior_samples
    ker = cfg.kernel()
    flavor = "neumann" if cfg.flavor == "mu" else cfg.flavor
    beta = cfg.beta() if flavor == "robin" else None
    ext = extend(u, flavor, ker, dom, beta=beta)
    left = dom.a - np.linspace(R, R / n_ext, n_ext)
    for x in left:
        rows.append((float(x), float(ext(float(x)))))
    for x, val in zip(mesh.nodes, u.coeffs):
        rows.append((float(x), float(val)))
    right = dom.b + np.linspace(R / n_ext, R, n_ext)
    for x in right:
        rows.append((float(x), float(ext(float(x)))))
    return rows


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_solve(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    forms = cfg.forms()
    f = cfg.rhs_field(forms.mesh)
    u = solve_elliptic(forms, f)
    energy = forms.quadratic_form(forms.restrict(u.coeffs))
    from .assembly import assemble_mass

    load = (assemble_mass(forms.mesh) @ f.coeffs)[forms.dof_map]
    residual = forms.stiffness @ forms.restrict(u.coeffs) - load
    rel_res = float(np.abs(residual).max() / max(np.abs(load).max(), 1e-300))
    _write_csv(out / "solution.csv", ["x", "u"], _solution_rows(cfg, u),
               cfg.snapshot())
    print(f"energy a(u,u) = {_fmt(energy)}")
    print(f"relative residual = {rel_res:.3e}")
    print(f"wrote {out / 'solution.csv'}")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    forms = cfg.forms()
    count = cfg.eig_count or forms.n_active
    sg = eigendecompose(forms, count)
    rows = [
        (k + 1, float(lam), cfg.flavor, float(cfg.s), cfg.n_elements)
        for k, lam in enumerate(sg.eigenvalues)
    ]
    _write_csv(out / "spectrum.csv", ["k", "lambda", "flavor", "s", "N"],
               rows, cfg.snapshot())
    print(f"lambda_1 = {_fmt(float(sg.eigenvalues[0]))}")
    print(f"wrote {out / 'spectrum.csv'}")
    return EXIT_OK


def cmd_evolve(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    forms = cfg.forms()
    f = cfg.rhs_field(forms.mesh)
    sg = eigendecompose(forms)
    rows, summary = [], []
    mass = forms.mass
    for t in cfg.time_grid:
        ut = evolve(sg, f, t)
        active = forms.restrict(ut.coeffs)
        total_mass = float(np.ones(forms.n_active) @ (mass @ active))
        sup = float(np.abs(ut.coeffs).max())
        summary.append((float(t), total_mass, sup))
        for x, val in zip(forms.mesh.nodes, ut.coeffs):
            rows.append((float(t), float(x), float(val)))
    _write_csv(out / "evolution.csv", ["t", "x", "u"], rows, cfg.snapshot())
    _write_csv(out / "evolution_summary.csv", ["t", "mass", "sup"],
               summary, cfg.snapshot())
    print(f"wrote {out / 'evolution.csv'} and evolution_summary.csv")
    return EXIT_OK


def _run_suite(name: str, cfg: RunConfig) -> VerificationReport:
    dom, ker, mesh = cfg.domain(), cfg.kernel(), cfg.mesh()
    quad = cfg.quadrature()
    beta = cfg.beta()
    if beta.kind == "zero":
        beta = None
    L = dom.length
    u = GaussianBump(dom.a + 0.6 * L, 0.15 * L)
    v = GaussianBump(dom.a + 0.45 * L, 0.2 * L)
    if name == "divergence_theorem":
        return check_divergence_theorem(u, ker, dom, quad)
    if name == "integration_by_parts":
        return check_integration_by_parts(u, v, ker, dom, quad)
    if name == "s_to_one_limit":
        return check_s_to_one_limit(u, v, dom, quad=quad)
    if name == "domination":
        return check_domination(mesh, ker, dom, beta, cfg.time_grid, cfg.seed)
    if name == "submarkov":
        return check_submarkov(mesh, ker, dom, beta, t_grid=cfg.time_grid,
                               seed=cfg.seed)
    if name == "ultracontractivity":
        from .verify import _robin_weight_default

        b = beta or _robin_weight_default(dom)
        sgs = [
            eigendecompose(assemble_dirichlet(mesh, ker, dom)),
            eigendecompose(assemble_robin(mesh, ker, dom, b)),
            eigendecompose(assemble_neumann(mesh, ker, dom)),
        ]
        return check_ultracontractivity(sgs)
    if name == "extension_minimality":
        small = Mesh(dom, min(cfg.n_elements, 64))
        return check_extension_minimality(small, ker, dom, beta, seed=cfg.seed)
    if name == "mu_counterexample":
        return check_mu_counterexample(mesh, ker, dom, beta, seed=cfg.seed)
    raise ConfigError(f"unknown suite {name!r}")


def cmd_verify(cfg: RunConfig, suites=None) -> int:
    out = Path(cfg.out_dir)
    (out / "reports").mkdir(parents=True, exist_ok=True)
    names = tuple(suites or cfg.suites)
    for name in names:
        if name not in ALL_SUITES:
            raise ConfigError(f"unknown suite {name!r}")
    workers = int(os.environ.get("FRACLAP_THREADS", "1") or "1")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda n: _run_suite(n, cfg), names))
    else:
        reports = [_run_suite(n, cfg) for n in names]
    reports.sort(key=lambda r: r.suite)
    all_pass = True
    for rep in reports:
        rep.config = {"run": cfg.snapshot(), **rep.config}
        (out / "reports" / f"{rep.suite}.json").write_text(
            rep.to_json() + "\n", encoding="utf-8"
        )
        print(rep.summary())
        all_pass &= rep.passed
    print(f"verify: {'all suites passed' if all_pass else 'FAILURES present'}")
    return EXIT_OK if all_pass else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fraclap",
        description="Fractional Laplacian on an interval with Dirichlet, "
                    "nonlocal Neumann and nonlocal Robin exterior conditions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "spectrum", "evolve", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="RNG seed")
        if name == "verify":
            p.add_argument("--suites", default=None,
                           help="comma-separated subset of suites")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(
            args.config, overrides={"out_dir": args.out, "seed": args.seed}
        )
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        if args.command == "evolve":
            return cmd_evolve(cfg)
        suites = None
        if getattr(args, "suites", None):
            suites = tuple(s.strip() for s in args.suites.split(","))
        return cmd_verify(cfg, suites)
    except (ConfigError, NeumannCompatibilityError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (QuadratureError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
