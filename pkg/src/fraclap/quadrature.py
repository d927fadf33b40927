"""Numerical integration for weakly singular kernels.

Three families of integrals appear throughout the library:

* double integrals over element pairs with an |x-y|^{-exponent} kernel
  (form assembly) -- identical and touching panels are reduced by a
  Duffy-type splitting and the singular direction is resolved by
  geometrically graded composite Gauss panels;
* semi-infinite exterior integrals with algebraic decay and, possibly,
  an integrable algebraic singularity at the interval endpoints;
* pointwise principal-value evaluation of the fractional Laplacian via
  the absolutely convergent second-difference rewriting.

All integrands are expected to be vectorized (numpy array in, array out).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .kernels import FractionalKernel, IntervalDomain

__all__ = [
    "QuadratureConfig",
    "QuadratureError",
    "QuadratureConvergenceError",
    "QuadratureDivergenceError",
    "GRADING_RATIO",
    "adaptive_integral",
    "graded_endpoint_integral",
    "singular_pair_integral",
    "exterior_tail_integral",
    "principal_value_laplacian",
    "pv_epsilon_excision",
    "ExteriorRule",
    "exterior_rule",
]

# Grading ratio for composite Gauss toward singular points.
GRADING_RATIO = 0.15

_TINY = 1e-300


class QuadratureError(RuntimeError):
    """Base class for quadrature failures."""


class QuadratureConvergenceError(QuadratureError):
    """Adaptive refinement exhausted max_depth without meeting rel_tol."""


class QuadratureDivergenceError(QuadratureError):
    """Successive refinements grow without decay: the integral diverges."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and rule sizes shared by all integration routines.

    ``pv_inner_radius`` is the symmetric excision radius (as a fraction of
    the local scale) used by the epsilon-excision evaluation of the
    principal value; the production path uses the second-difference form
    and does not excise.
    """

    gauss_order: int = 8
    pv_inner_radius: float = 0.5
    tail_substitution: str = "algebraic"
    rel_tol: float = 1e-8
    max_depth: int = 30

    def __post_init__(self):
        if not 0.0 < self.rel_tol <= 1e-2:
            raise ValueError(f"rel_tol must lie in (0, 1e-2], got {self.rel_tol}")
        if self.max_depth < 8:
            raise ValueError(f"max_depth must be >= 8, got {self.max_depth}")
        if self.gauss_order < 2:
            raise ValueError(f"gauss_order must be >= 2, got {self.gauss_order}")
        if self.tail_substitution != "algebraic":
            raise ValueError("only the algebraic tail substitution is supported")
        if not self.pv_inner_radius > 0.0:
            raise ValueError("pv_inner_radius must be positive")


_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], cached."""
    rule = _GAUSS_CACHE.get(n)
    if rule is None:
        rule = np.polynomial.legendre.leggauss(n)
        _GAUSS_CACHE[n] = rule
    return rule


def _panel_gauss(f, lo: float, hi: float, order: int) -> float:
    xi, wi = gauss_rule(order)
    half = 0.5 * (hi - lo)
    x = 0.5 * (hi + lo) + half * xi
    return half * float(np.dot(wi, np.asarray(f(x), dtype=float)))


def _presplit(lo: float, hi: float, singular_points, levels: int = 12):
    """Panel edges on (lo, hi), geometrically crowded toward each listed point.

    Points may coincide with the endpoints; interior points also become
    edges themselves so that kinks never sit inside a panel.
    """
    edges = {lo, hi}
    q = GRADING_RATIO
    for p in singular_points:
        if p < lo - 1e-30 or p > hi + 1e-30:
            continue
        if lo < p < hi:
            edges.add(p)
        for side in (-1.0, 1.0):
            span = (p - lo) if side < 0 else (hi - p)
            if span <= 0.0:
                continue
            for k in range(1, levels + 1):
                edges.add(p + side * span * q ** k)
    return sorted(edges)


def adaptive_integral(
    f,
    lo: float,
    hi: float,
    *,
    rel_tol: float = 1e-8,
    max_depth: int = 30,
    order: int = 8,
    singular_points=(),
    abs_floor: float = 0.0,
) -> float:
    """Globally adaptive composite Gauss on (lo, hi).

    Panels are bisected worst-first until the summed error estimate meets
    rel_tol relative to max(|integral|, abs_floor).  ``singular_points``
    mark kinks or endpoint singularities: panels are pre-crowded there so
    the bisection depth stays within ``max_depth``.
    """
    if hi == lo:
        return 0.0
    if hi < lo:
        return -adaptive_integral(
            f, hi, lo, rel_tol=rel_tol, max_depth=max_depth, order=order,
            singular_points=singular_points, abs_floor=abs_floor,
        )

    fine = order + 6

    def measure(plo, phi):
        coarse_val = _panel_gauss(f, plo, phi, order)
        fine_val = _panel_gauss(f, plo, phi, fine)
        return fine_val, abs(fine_val - coarse_val)

    edges = _presplit(lo, hi, singular_points)
    heap = []
    count = 0
    total = 0.0
    active_err = 0.0
    dead_err = 0.0  # error stuck at the integrand's floating-point noise floor
    for plo, phi in zip(edges[:-1], edges[1:]):
        val, err = measure(plo, phi)
        total += val
        active_err += err
        heapq.heappush(heap, (-err, count, plo, phi, 0, val))
        count += 1

    while heap and active_err + dead_err > rel_tol * max(abs(total), abs_floor) + _TINY:
        neg_err, _, plo, phi, depth, val = heapq.heappop(heap)
        parent_err = -neg_err
        if parent_err <= 0.0:
            break
        if depth >= max_depth:
            raise QuadratureConvergenceError(
                f"adaptive refinement exceeded max_depth={max_depth} "
                f"on panel ({plo:.3g}, {phi:.3g})"
            )
        total -= val
        active_err -= parent_err
        child_err = 0.0
        children = []
        mid = 0.5 * (plo + phi)
        for clo, chi in ((plo, mid), (mid, phi)):
            cval, cerr = measure(clo, chi)
            total += cval
            child_err += cerr
            children.append((-cerr, clo, chi, cval))
        if depth >= 3 and child_err > 0.9 * parent_err:
            # refinement no longer reduces the estimate: noise-limited
            dead_err += child_err
        else:
            for cneg, clo, chi, cval in children:
                heapq.heappush(heap, (cneg, count, clo, chi, depth + 1, cval))
                count += 1
                active_err -= cneg
        if count > 50000:
            raise QuadratureConvergenceError("adaptive panel budget exhausted")
    return total


def graded_endpoint_integral(
    f,
    anchor: float,
    far: float,
    *,
    rel_tol: float = 1e-8,
    order: int = 16,
    max_levels: int = 60,
    max_depth: int = 30,
    known_power: float | None = None,
    singular_points=(),
    abs_floor: float = 0.0,
) -> float:
    """Integral over the segment between ``anchor`` and ``far`` where the
    integrand has an integrable algebraic (or log) singularity at ``anchor``.

    Geometric panels with ratio GRADING_RATIO march toward the anchor; the
    remaining tail is completed by geometric-series extrapolation once the
    level sums decay at a stable ratio.  ``known_power`` is the exponent
    gamma of the leading |x - anchor|^{-gamma} behaviour, when the caller
    knows it; it seeds the expected level ratio.  Level sums that fail to
    decay raise QuadratureDivergenceError.
    """
    span = far - anchor
    if span == 0.0:
        return 0.0
    sgn = 1.0 if span > 0 else -1.0
    dist = abs(span)
    q = GRADING_RATIO

    # Wide panels near `far` may contain structure unrelated to the
    # singularity; integrate the top levels adaptively.
    refine_levels = 6

    def level_sum(j):
        d_hi = dist * q ** j
        d_lo = dist * q ** (j + 1)
        lo = anchor + sgn * d_lo
        hi = anchor + sgn * d_hi
        if lo > hi:
            lo, hi = hi, lo
        has_break = any(lo < p < hi for p in singular_points)
        if j < refine_levels or has_break:
            return adaptive_integral(
                f, lo, hi, rel_tol=0.1 * rel_tol, max_depth=max_depth,
                order=order, singular_points=singular_points,
                abs_floor=abs_floor,
            )
        return _panel_gauss(f, lo, hi, order)

    r_seed = None
    if known_power is not None:
        if known_power >= 1.0:
            raise QuadratureDivergenceError(
                f"endpoint power {known_power} >= 1 is not integrable"
            )
        r_seed = q ** (1.0 - known_power)

    # Below this distance, anchor + d rounds back onto the anchor and the
    # integrand cannot be evaluated meaningfully; extrapolation covers it.
    d_floor = 1e-13 * abs(anchor) + 1e-250 * dist

    total = 0.0
    cs = []
    grow_streak = 0
    for j in range(max_levels):
        if dist * q ** (j + 1) < d_floor and j >= 4:
            break
        c = level_sum(j)
        total += c
        cs.append(c)
        scale = max(abs(total), abs_floor, _TINY)
        if c == 0.0:
            if j >= 30 and all(v == 0.0 for v in cs):
                return total
            continue
        if j < 4:
            continue
        if total != 0.0 and abs(c) <= 0.02 * rel_tol * scale:
            if cs[-2] != 0.0:
                r1 = cs[-1] / cs[-2]
                if 0.0 < r1 < 0.95:
                    total += cs[-1] * r1 / (1.0 - r1)
            return total
        r1 = cs[-1] / cs[-2] if cs[-2] != 0.0 else math.inf
        r0 = cs[-2] / cs[-3] if cs[-3] != 0.0 else math.inf
        if r1 >= 1.0 - 1e-9 and r0 >= 1.0 - 1e-9:
            grow_streak += 1
            if grow_streak >= 4 and abs(c) > rel_tol * scale:
                raise QuadratureDivergenceError(
                    "graded level sums do not decay; integral appears divergent"
                )
            continue
        grow_streak = 0
        if not (0.0 < r1 < 1.0 and 0.0 < r0 < 1.0):
            continue
        r_hat = r1 if r_seed is None else r_seed
        stable = abs(r1 - r0) <= 0.02 * max(1.0 - r_hat, 0.02)
        if r_seed is not None:
            stable = stable or abs(r1 - r_seed) <= 0.1 * (1.0 - r_seed)
        if stable and r_hat < 1.0:
            tail = cs[-1] * r_hat / (1.0 - r_hat)
            tail_err = abs(cs[-1]) * abs(r1 - r0) / (1.0 - r_hat) ** 2
            if tail_err <= 0.5 * rel_tol * scale or abs(tail) <= rel_tol * scale:
                return total + tail
    # Levels exhausted: accept the best available extrapolation if it is
    # meaningful, otherwise report non-convergence.
    scale = max(abs(total), abs_floor, _TINY)
    if len(cs) >= 3 and cs[-2] != 0.0:
        r1 = cs[-1] / cs[-2]
        r_hat = r1 if r_seed is None else r_seed
        if 0.0 < r_hat < 1.0 and 0.0 < r1 < 1.0:
            tail = cs[-1] * r_hat / (1.0 - r_hat)
            if abs(tail) <= 10.0 * rel_tol * scale:
                return total + tail
    if abs(cs[-1]) <= rel_tol * scale:
        return total
    raise QuadratureConvergenceError(
        f"graded integration did not converge in {max_levels} levels"
    )


# ---------------------------------------------------------------------------
# Singular double integrals over panel pairs
# ---------------------------------------------------------------------------


def _adaptive_2d(F, ax0, ax1, bx0, bx1, *, rel_tol, max_depth, order, abs_floor=0.0):
    """Worst-first quadtree tensor Gauss for a smooth integrand on a box."""
    fine = order + 5

    def cell_value(a0, a1, b0, b1, n):
        xi, wi = gauss_rule(n)
        ha, hb = 0.5 * (a1 - a0), 0.5 * (b1 - b0)
        x = 0.5 * (a1 + a0) + ha * xi
        y = 0.5 * (b1 + b0) + hb * xi
        vals = np.asarray(F(x[:, None], y[None, :]), dtype=float)
        vals = np.broadcast_to(vals, (n, n))
        return ha * hb * float(wi @ vals @ wi)

    def measure(a0, a1, b0, b1):
        coarse = cell_value(a0, a1, b0, b1, order)
        fine_v = cell_value(a0, a1, b0, b1, fine)
        return fine_v, abs(fine_v - coarse)

    val, err = measure(ax0, ax1, bx0, bx1)
    heap = [(-err, 0, ax0, ax1, bx0, bx1, 0, val)]
    count = 1
    total, total_err = val, err
    while total_err > rel_tol * max(abs(total), abs_floor) + _TINY:
        neg_err, _, a0, a1, b0, b1, depth, v = heapq.heappop(heap)
        if depth >= max_depth:
            raise QuadratureConvergenceError(
                "2-D adaptive refinement exceeded max_depth"
            )
        total -= v
        total_err += neg_err
        am, bm = 0.5 * (a0 + a1), 0.5 * (b0 + b1)
        for ca0, ca1 in ((a0, am), (am, a1)):
            for cb0, cb1 in ((b0, bm), (bm, b1)):
                cv, ce = measure(ca0, ca1, cb0, cb1)
                total += cv
                total_err += ce
                heapq.heappush(
                    heap, (-ce, count, ca0, ca1, cb0, cb1, depth + 1, cv)
                )
                count += 1
        if count > 40000:
            raise QuadratureConvergenceError("2-D adaptive cell budget exhausted")
    return total


def _composite_unit_rule(order: int, panels: int):
    """Composite Gauss rule on [0, 1] with equal panels."""
    xi, wi = gauss_rule(order)
    xi = 0.5 * (xi + 1.0)
    wi = 0.5 * wi
    offsets = np.arange(panels)[:, None]
    nodes = ((offsets + xi[None, :]) / panels).ravel()
    weights = np.tile(wi / panels, panels)
    return nodes, weights


def _calibrate_panels(evaluate, rel_tol, order, start=1, cap=64):
    """Double the inner panel count until the probe values stabilize.

    ``evaluate(panels)`` returns an array of probe integrals computed with
    the given composite resolution; integrands with structure finer than
    one Gauss panel (narrow bumps) are caught here.
    """
    panels = start
    ref = evaluate(panels)
    while panels < cap:
        finer = evaluate(2 * panels)
        scale = np.abs(finer).max() + _TINY
        if np.abs(finer - ref).max() <= max(0.1 * rel_tol, 1e-13) * scale:
            return 2 * panels
        ref = finer
        panels *= 2
    return panels


def _pair_identical(f, a0, a1, exponent, config):
    H = a1 - a0
    inner_order = config.gauss_order + 4

    def g_with(ts, nodes, weights):
        ts = np.asarray(ts, dtype=float)
        L = H - ts
        X = a0 + L[:, None] * nodes[None, :]
        T = np.broadcast_to(ts[:, None], X.shape)
        vals = np.broadcast_to(
            np.asarray(f(X, X + T), dtype=float)
            + np.asarray(f(X + T, X), dtype=float),
            X.shape,
        )
        return ts ** (-exponent) * (vals @ weights) * L

    probe = H * np.array([0.5, 0.2, 0.08, 0.03, 0.01])

    def evaluate(panels):
        nodes, weights = _composite_unit_rule(inner_order, panels)
        return g_with(probe, nodes, weights)

    panels = _calibrate_panels(evaluate, config.rel_tol, inner_order)
    nodes, weights = _composite_unit_rule(inner_order, panels)

    return graded_endpoint_integral(
        lambda ts: g_with(ts, nodes, weights),
        0.0, H, rel_tol=config.rel_tol, order=config.gauss_order + 8,
        max_levels=max(config.max_depth, 40), max_depth=config.max_depth,
    )


def _pair_touching(f, a0, a1, b0, b1, exponent, config):
    # Orient so that panel A ends where panel B begins.
    if abs(a1 - b0) <= 1e-14 * max(abs(a1), 1.0):
        c, U, V = a1, a1 - a0, b1 - b0
        x_of = lambda u: c - u
        y_of = lambda v: c + v
    else:
        c, U, V = a0, a1 - a0, b1 - b0
        x_of = lambda u: c + u
        y_of = lambda v: c - v

    m = min(U, V)
    inner_order = config.gauss_order + 4

    def duffy_leg(outer_is_u):
        def g_with(rr, nodes, weights):
            rr = np.asarray(rr, dtype=float)
            shape = (rr.size, nodes.size)
            R = np.broadcast_to(rr[:, None], shape)
            RW = R * np.broadcast_to(nodes[None, :], shape)
            wker = weights * (1.0 + nodes) ** (-exponent)
            if outer_is_u:
                vals = np.asarray(f(x_of(R), y_of(RW)), dtype=float)
            else:
                vals = np.asarray(f(x_of(RW), y_of(R)), dtype=float)
            vals = np.broadcast_to(vals, shape)
            return rr ** (1.0 - exponent) * (vals @ wker)

        probe = m * np.array([0.9, 0.5, 0.2, 0.05])

        def evaluate(panels):
            nodes, weights = _composite_unit_rule(inner_order, panels)
            return g_with(probe, nodes, weights)

        panels = _calibrate_panels(evaluate, config.rel_tol, inner_order)
        nodes, weights = _composite_unit_rule(inner_order, panels)

        return graded_endpoint_integral(
            lambda rr: g_with(rr, nodes, weights),
            0.0, m, rel_tol=config.rel_tol, order=config.gauss_order + 8,
            max_levels=max(config.max_depth, 40), max_depth=config.max_depth,
        )

    total = duffy_leg(True) + duffy_leg(False)

    def F(u, v):
        return np.asarray(f(x_of(u), y_of(v)), dtype=float) * (u + v) ** (-exponent)

    floor = abs(total)
    if U > m:
        total += _adaptive_2d(
            F, m, U, 0.0, V, rel_tol=config.rel_tol,
            max_depth=config.max_depth, order=config.gauss_order,
            abs_floor=floor,
        )
    if V > m:
        total += _adaptive_2d(
            F, 0.0, m, m, V, rel_tol=config.rel_tol,
            max_depth=config.max_depth, order=config.gauss_order,
            abs_floor=floor,
        )
    return total


def singular_pair_integral(f, panel_a, panel_b, exponent: float, config=None) -> float:
    """Integral of f(x, y) |x-y|^{-exponent} over panel_a x panel_b.

    Panels are 1-D intervals that are identical, share one endpoint, or are
    disjoint (mesh elements).  For identical/touching panels the integrand
    must be integrable, which for form integrands holds because the hat
    differences vanish at x = y.
    """
    config = config or QuadratureConfig()
    if not 1.0 < exponent < 3.0:
        raise ValueError(f"exponent must lie in (1, 3), got {exponent}")
    a0, a1 = sorted(map(float, panel_a))
    b0, b1 = sorted(map(float, panel_b))
    if a1 <= a0 or b1 <= b0:
        raise ValueError("panels must have positive length")

    tol = 1e-14 * max(a1 - a0, b1 - b0, abs(a0), abs(b1), 1.0)
    if abs(a0 - b0) <= tol and abs(a1 - b1) <= tol:
        return _pair_identical(f, a0, a1, exponent, config)
    if abs(a1 - b0) <= tol or abs(b1 - a0) <= tol:
        return _pair_touching(f, a0, a1, b0, b1, exponent, config)
    if a1 < b0 or b1 < a0:
        def F(x, y):
            return np.asarray(f(x, y), dtype=float) * np.abs(x - y) ** (-exponent)

        return _adaptive_2d(
            F, a0, a1, b0, b1, rel_tol=config.rel_tol,
            max_depth=config.max_depth, order=config.gauss_order,
        )
    raise ValueError("partially overlapping panels are not supported")


# ---------------------------------------------------------------------------
# Semi-infinite exterior integrals
# ---------------------------------------------------------------------------


def _tail_side(g, edge: float, sgn: float, L: float, config, breakpoints, boundary_power):
    """Integral of g over the half line starting at `edge`, direction sgn."""
    rel_tol = config.rel_tol
    near_far = edge + sgn * L
    near_breaks = [p for p in breakpoints if 0.0 < sgn * (p - edge) < L]
    near = graded_endpoint_integral(
        g, edge, near_far, rel_tol=rel_tol, order=config.gauss_order + 8,
        max_levels=max(config.max_depth, 40), max_depth=config.max_depth,
        known_power=boundary_power, singular_points=near_breaks,
    )

    # Algebraic substitution |y - edge| = L m^{-1} (1 - m) maps the far tail
    # to m in (0, 1/2]; decay of g translates into an integrable endpoint
    # at m = 0 and divergence is detected by the graded machinery there.
    def far_integrand(m):
        m = np.asarray(m, dtype=float)
        y = edge + sgn * L * (1.0 - m) / m
        return np.asarray(g(y), dtype=float) * L / (m * m)

    far_breaks = []
    for p in breakpoints:
        d = sgn * (p - edge)
        if d >= L:
            far_breaks.append(L / (d + L))
    far = graded_endpoint_integral(
        far_integrand, 0.0, 0.5, rel_tol=rel_tol, order=config.gauss_order + 8,
        max_levels=max(config.max_depth, 40), max_depth=config.max_depth,
        singular_points=far_breaks, abs_floor=abs(near),
    )
    return near + far


def exterior_tail_integral(
    g,
    domain: IntervalDomain,
    config=None,
    *,
    breakpoints=(),
    boundary_power: float | None = None,
) -> float:
    """Integral of g over R \\ [a, b] (both exterior rays).

    g must decay at least like dist^{-(1+eta)} far from the interval and may
    have an integrable algebraic singularity at the endpoints a, b; the
    optional ``boundary_power`` supplies the known exponent.  The far tail
    uses the algebraic substitution, the boundary uses graded panels.
    """
    config = config or QuadratureConfig()
    L = domain.length
    right = _tail_side(g, domain.b, +1.0, L, config, breakpoints, boundary_power)
    left = _tail_side(g, domain.a, -1.0, L, config, breakpoints, boundary_power)
    return right + left


# ---------------------------------------------------------------------------
# Pointwise fractional Laplacian
# ---------------------------------------------------------------------------


def _support_of(u, support):
    if support is not None:
        return support
    return getattr(u, "support", None)


def principal_value_laplacian(
    u, kernel: FractionalKernel, x: float, config=None, *, support=None
) -> float:
    """(-Delta)^s u at x through the second-difference form.

    Evaluates C(n,s) * int_0^inf (2u(x) - u(x+h) - u(x-h)) h^{-(1+2s)} dh,
    which is absolutely convergent for u that is C^2 near x with global
    growth below |y|^{2s}.  ``support`` (or u.support) marks where u
    vanishes identically, enabling the exact algebraic tail.
    """
    config = config or QuadratureConfig()
    s = kernel.s
    alpha = 1.0 + 2.0 * s
    x = float(x)
    ux = float(np.asarray(u(np.array([x])), dtype=float)[0])

    def second_diff(h):
        h = np.asarray(h, dtype=float)
        return (
            2.0 * ux
            - np.asarray(u(x + h), dtype=float)
            - np.asarray(u(x - h), dtype=float)
        )

    def integrand(h):
        return second_diff(h) * np.asarray(h, dtype=float) ** (-alpha)

    sup = _support_of(u, support)
    hints = []
    if sup is not None:
        lo, hi = sup
        for p in (abs(x - lo), abs(x - hi)):
            if p > 0.0:
                hints.append(p)
        hints = sorted(set(hints))
        T = max(abs(x - lo), abs(x - hi))
    else:
        T = None

    h_first = hints[0] if hints else 1.0
    total = graded_endpoint_integral(
        integrand, 0.0, h_first, rel_tol=config.rel_tol,
        order=config.gauss_order + 8, max_levels=max(config.max_depth, 40),
        max_depth=config.max_depth, known_power=alpha - 2.0,
    )

    if T is not None:
        if T > h_first:
            total += adaptive_integral(
                integrand, h_first, T, rel_tol=config.rel_tol,
                max_depth=config.max_depth, order=config.gauss_order,
                singular_points=hints, abs_floor=abs(total),
            )
        # beyond T both u(x+h) and u(x-h) vanish
        total += 2.0 * ux * T ** (-2.0 * s) / (2.0 * s)
    else:
        def far_integrand(m):
            m = np.asarray(m, dtype=float)
            h = h_first * (1.0 - m) / m + h_first
            return integrand(h) * h_first / (m * m)

        total += graded_endpoint_integral(
            far_integrand, 0.0, 0.5, rel_tol=config.rel_tol,
            order=config.gauss_order + 8,
            max_levels=max(config.max_depth, 40),
            max_depth=config.max_depth, abs_floor=abs(total),
        )
    return kernel.c_ns * total


def pv_epsilon_excision(
    u, kernel: FractionalKernel, x: float, eps: float, config=None, *, support=None
) -> float:
    """Literal epsilon-excision evaluation of the principal value.

    Test oracle for the second-difference path: integrates the one-sided
    differences over h > eps only.  Converges slowly as eps -> 0 and
    requires u'(x) = 0 (or symmetric u) for a finite limit when s >= 1/2.
    """
    config = config or QuadratureConfig()
    s = kernel.s
    alpha = 1.0 + 2.0 * s
    x = float(x)
    ux = float(np.asarray(u(np.array([x])), dtype=float)[0])

    def one_sided(h):
        h = np.asarray(h, dtype=float)
        return (
            (ux - np.asarray(u(x + h), dtype=float))
            + (ux - np.asarray(u(x - h), dtype=float))
        ) * h ** (-alpha)

    sup = _support_of(u, support)
    if sup is None:
        raise ValueError("epsilon-excision oracle requires known support")
    lo, hi = sup
    T = max(abs(x - lo), abs(x - hi))
    hints = sorted({abs(x - lo), abs(x - hi), eps})
    total = adaptive_integral(
        one_sided, eps, T, rel_tol=config.rel_tol, max_depth=config.max_depth,
        order=config.gauss_order, singular_points=hints,
    )
    total += 2.0 * ux * T ** (-2.0 * s) / (2.0 * s)
    return kernel.c_ns * total


# ---------------------------------------------------------------------------
# Fixed composite rule on the exterior (shared by assembly)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExteriorRule:
    """Positive-weight composite rule for integrals over R \\ [a, b].

    Nodes are graded geometrically toward both interval endpoints and the
    far tails are folded in by the algebraic substitution, so densities
    with an integrable endpoint singularity and algebraic decay are
    integrated to near machine accuracy by a plain weighted sum.

    ``dist`` holds each node's exact distance to its interval endpoint and
    ``side`` is +1 (right of b) or -1 (left of a): deep nodes lie closer to
    the boundary than float addition to ``nodes`` can represent, so closed
    forms must be driven by ``dist``, never by nodes - b.  ``nodes`` serve
    weight evaluators only and are clamped a hair off the boundary.
    """

    nodes: np.ndarray
    weights: np.ndarray
    side: np.ndarray
    dist: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def exterior_rule(
    domain: IntervalDomain,
    kernel: FractionalKernel,
    *,
    breakpoints=(),
    order: int = 20,
    digits: float = 14.0,
) -> ExteriorRule:
    """Build the shared exterior rule for a given domain and kernel order.

    The grading depth is chosen so that the truncated-tail error of the
    worst admissible integrand (dist^{1-2s} at the boundary, dist^{-(1+2s)}
    at infinity) stays below 10^-digits relative.
    """
    s = kernel.s
    q = GRADING_RATIO
    L = domain.length
    dec = math.log10(1.0 / q)
    near_levels = math.ceil(digits / (min(2.0 - 2.0 * s, 1.0) * dec)) + 2
    far_levels = math.ceil(digits / (2.0 * s * dec)) + 2

    xi, wi = gauss_rule(order)
    dists, weights, sides = [], [], []

    def add_panel(side, d_lo, d_hi, jac_pow=0):
        # panel in distance space; jac_pow=2 marks the m-substituted tail
        half = 0.5 * (d_hi - d_lo)
        mid = 0.5 * (d_hi + d_lo)
        t = mid + half * xi
        w = half * wi
        if jac_pow:
            d = L * (1.0 - t) / t
            w = w * L / (t * t)
        else:
            d = t
        dists.append(d)
        weights.append(w)
        sides.append(np.full(d.shape, side, dtype=float))

    for edge, sgn in ((domain.b, +1.0), (domain.a, -1.0)):
        side_breaks = sorted(
            sgn * (p - edge) for p in breakpoints if 0.0 < sgn * (p - edge) < L
        )
        for j in range(near_levels):
            d_hi, d_lo = L * q ** j, L * q ** (j + 1)
            cuts = [d_lo] + [p for p in side_breaks if d_lo < p < d_hi] + [d_hi]
            for c_lo, c_hi in zip(cuts[:-1], cuts[1:]):
                add_panel(sgn, c_lo, c_hi)

        far_breaks = sorted(
            L / (sgn * (p - edge) + L)
            for p in breakpoints
            if sgn * (p - edge) >= L
        )
        for k in range(far_levels):
            m_hi, m_lo = 0.5 * q ** k, 0.5 * q ** (k + 1)
            cuts = [m_lo] + [p for p in far_breaks if m_lo < p < m_hi] + [m_hi]
            for c_lo, c_hi in zip(cuts[:-1], cuts[1:]):
                add_panel(sgn, c_lo, c_hi, jac_pow=2)

    dist = np.concatenate(dists)
    side = np.concatenate(sides)
    edge = np.where(side > 0, domain.b, domain.a)
    # `nodes` only feeds weight evaluators; clamping keeps them strictly
    # exterior where float addition would round onto the boundary.
    eval_dist = np.maximum(dist, 1e-12 * L)
    return ExteriorRule(
        nodes=edge + side * eval_dist,
        weights=np.abs(np.concatenate(weights)),
        side=side,
        dist=dist,
    )
