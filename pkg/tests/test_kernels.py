import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fraclap.kernels import (
    FractionalKernel,
    IntervalDomain,
    gamma_function,
    kappa,
    normalization_constant,
    power_integral,
    rho,
)

mpmath.mp.dps = 40


def mp_constant(n, s):
    s = mpmath.mpf(s)
    return float(
        s * 2 ** (2 * s) * mpmath.gamma((2 * s + n) / 2)
        / (mpmath.pi ** (mpmath.mpf(n) / 2) * mpmath.gamma(1 - s))
    )


class TestGamma:
    def test_accuracy_on_unit_range(self):
        # the constant needs >= 12 significant digits on (0, 3)
        zs = np.linspace(0.01, 3.0, 601)
        worst = max(
            abs(gamma_function(z) - float(mpmath.gamma(z))) / float(mpmath.gamma(z))
            for z in zs
        )
        assert worst < 1e-12

    def test_recurrence_region(self):
        assert gamma_function(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
        assert gamma_function(1.0) == pytest.approx(1.0, rel=1e-14)
        assert gamma_function(2.5) == pytest.approx(1.5 * 0.5 * math.sqrt(math.pi),
                                                    rel=1e-14)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            gamma_function(0.0)


class TestNormalizationConstant:
    def test_half_is_one_over_pi(self):
        assert normalization_constant(1, 0.5) == pytest.approx(
            0.3183098861837907, abs=1e-12
        )

    def test_vanishes_as_s_to_zero(self):
        # prefactor s forces the limit; Gamma factors stay finite
        assert normalization_constant(1, 1e-7) < 1e-6
        vals = [normalization_constant(1, s) for s in (1e-3, 1e-4, 1e-5)]
        assert vals[0] > vals[1] > vals[2]

    @pytest.mark.parametrize("s", [0.1, 0.25, 0.5, 0.75, 0.9])
    def test_against_arbitrary_precision(self, s):
        assert normalization_constant(1, s) == pytest.approx(
            mp_constant(1, s), rel=1e-12
        )

    def test_no_pole_cancellation_near_one(self):
        # continuity in s on a sampled grid approaching s = 1
        for s in np.linspace(0.95, 0.9999, 30):
            assert normalization_constant(1, s) == pytest.approx(
                mp_constant(1, s), rel=1e-11
            )

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            normalization_constant(1, 0.0)
        with pytest.raises(ValueError):
            normalization_constant(1, 1.0)
        with pytest.raises(ValueError):
            normalization_constant(0, 0.5)


class TestDomainAndKernelTypes:
    def test_interval_invariants(self):
        with pytest.raises(ValueError):
            IntervalDomain(1.0, 0.0)
        with pytest.raises(ValueError):
            IntervalDomain(0.0, 1.0, exterior_truncation=0.0)
        dom = IntervalDomain(0.0, 1.0)
        assert dom.distance_to_boundary(0.25) == pytest.approx(0.25)
        assert dom.distance_to_boundary(0.75) == pytest.approx(0.25)

    def test_kernel_invariants(self):
        ker = FractionalKernel(0.3)
        assert ker.c_ns == pytest.approx(normalization_constant(1, 0.3), rel=1e-15)
        assert ker.riesz(0.0, 2.0) == pytest.approx(2.0 ** -1.6, rel=1e-14)
        assert ker.riesz(2.0, 0.0) == ker.riesz(0.0, 2.0)
        with pytest.raises(ValueError):
            FractionalKernel(1.5)
        with pytest.raises(ValueError):
            FractionalKernel(0.5, n=2)


class TestRho:
    def test_closed_form_example(self):
        dom = IntervalDomain(0.0, 1.0)
        ker = FractionalKernel(0.5)
        assert rho(dom, ker, 2.0) == pytest.approx(0.5, abs=1e-14)

    def test_blows_up_at_boundary(self):
        dom = IntervalDomain(0.0, 1.0)
        ker = FractionalKernel(0.4)
        eps = 1e-6
        assert rho(dom, ker, 1.0 + eps) > rho(dom, ker, 1.0 + 2 * eps)
        assert rho(dom, ker, 1.0 + eps) > 1e3

    def test_rejects_interior(self):
        dom = IntervalDomain(0.0, 1.0)
        ker = FractionalKernel(0.5)
        with pytest.raises(ValueError):
            rho(dom, ker, 0.5)
        with pytest.raises(ValueError):
            rho(dom, ker, 1.0)

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
    def test_against_quadrature_oracle(self, s):
        dom = IntervalDomain(-0.3, 1.1)
        ker = FractionalKernel(s)
        rng = np.random.default_rng(7)
        for _ in range(40):
            side = 1 if rng.uniform() < 0.5 else -1
            d = 10.0 ** rng.uniform(-3, 1)
            x = dom.b + d if side > 0 else dom.a - d
            oracle, err = quad(
                lambda y: abs(x - y) ** -(1.0 + 2.0 * s), dom.a, dom.b,
                points=[dom.a, dom.b], limit=200,
            )
            assert rho(dom, ker, x) == pytest.approx(oracle, rel=1e-8)

    def test_decreasing_in_distance(self):
        dom = IntervalDomain(0.0, 1.0)
        ker = FractionalKernel(0.6)
        xs = 1.0 + np.geomspace(1e-3, 10, 30)
        vals = rho(dom, ker, xs)
        assert np.all(np.diff(vals) < 0)


class TestKappa:
    def test_closed_form_example(self):
        dom = IntervalDomain(0.0, 1.0)
        ker = FractionalKernel(0.5)
        assert kappa(dom, ker, 0.5) == pytest.approx(4.0 / math.pi, rel=1e-12)

    def test_rejects_exterior(self):
        dom = IntervalDomain(0.0, 1.0)
        ker = FractionalKernel(0.5)
        with pytest.raises(ValueError):
            kappa(dom, ker, 1.5)

    @settings(max_examples=30, deadline=None)
    @given(
        a=st.floats(-3.0, 0.0), length=st.floats(0.5, 3.0),
        s=st.floats(0.05, 0.95), frac=st.floats(0.01, 0.99),
    )
    def test_reflection_symmetry(self, a, length, s, frac):
        dom = IntervalDomain(a, a + length)
        ker = FractionalKernel(s)
        x = a + frac * length
        mirrored = dom.a + dom.b - x
        assert kappa(dom, ker, x) == pytest.approx(
            kappa(dom, ker, mirrored), rel=1e-11
        )

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
    def test_delta_power_bounds(self, s):
        # explicit 1-D constants: C1 = C/(2s) <= kappa delta^{2s} <= 2 C/(2s)
        dom = IntervalDomain(-1.0, 1.0)
        ker = FractionalKernel(s)
        xs = np.linspace(dom.a, dom.b, 1002)[1:-1]
        val = kappa(dom, ker, xs) * dom.distance_to_boundary(xs) ** (2 * s)
        c1 = ker.c_ns / (2 * s)
        c2 = 2 * ker.c_ns / (2 * s)
        assert np.all(val >= c1 * (1 - 1e-12))
        assert np.all(val <= c2 * (1 + 1e-12))

    @pytest.mark.parametrize("s", [0.3, 0.5, 0.8])
    def test_against_quadrature_oracle(self, s):
        dom = IntervalDomain(0.0, 2.0)
        ker = FractionalKernel(s)
        rng = np.random.default_rng(3)
        for x in rng.uniform(0.05, 1.95, 20):
            left, _ = quad(lambda y: (x - y) ** -(1 + 2 * s), -np.inf, dom.a)
            right, _ = quad(lambda y: (y - x) ** -(1 + 2 * s), dom.b, np.inf)
            assert kappa(dom, ker, x) == pytest.approx(
                ker.c_ns * (left + right), rel=1e-8
            )


class TestPowerIntegral:
    def test_log_branch(self):
        assert power_integral(1.0, 2.0, 1.0) == pytest.approx(math.log(2), rel=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(
        t1=st.floats(1e-4, 10.0), width=st.floats(1e-4, 10.0),
        p=st.floats(-1.0, 2.9),
    )
    def test_matches_quadrature(self, t1, width, p):
        val = float(power_integral(t1, t1 + width, p))
        oracle = float(mpmath.quad(lambda t: t ** (-p), [t1, t1 + width]))
        assert val == pytest.approx(oracle, rel=1e-11, abs=1e-14)

    def test_tiny_width_below_ulp(self):
        # width far below the float granularity of t1 must not underflow
        t1, width, p = 1e17, 2.0, 1.5
        from fraclap.kernels import power_integral_width

        val = float(power_integral_width(t1, width, p))
        assert val == pytest.approx(width * t1 ** -p, rel=1e-10)
