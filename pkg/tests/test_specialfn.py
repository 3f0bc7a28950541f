import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from moegg.exceptions import DomainError
from moegg.specialfn import (
    QuadratureConfig,
    gen_integro_exponential,
    integrate_interval,
    ks_p_value,
    log_beta,
    scaled_upper_incomplete_gamma,
    upper_incomplete_gamma,
)


def _gamma_oracle(u, v):
    return float(mp.gammainc(u, v))


def _integro_oracle(s, k, z):
    # mpmath quadrature of the defining integral, breakpoints keep it accurate
    f = lambda x: mp.log(x) ** k * x ** (-s) * mp.exp(-z * x)
    pts = [1, 1 + 0.01 / z, 1 + 0.1 / z, 1 + 1 / z, 1 + 10 / z, 1 + 100 / z, mp.inf]
    with mp.workdps(30):
        return float(mp.quad(f, pts) / mp.factorial(k))


class TestUpperIncompleteGamma:
    def test_shape_one_is_exponential(self):
        np.testing.assert_allclose(upper_incomplete_gamma(1, 2), math.exp(-2), rtol=1e-14)

    def test_zero_argument_is_complete_gamma(self):
        np.testing.assert_allclose(upper_incomplete_gamma(0.5, 0), math.sqrt(math.pi), rtol=1e-14)

    def test_exponential_integral_against_quadrature(self):
        expected, _ = integrate.quad(lambda x: math.exp(-x) / x, 1, np.inf, epsabs=1e-14, epsrel=1e-13)
        np.testing.assert_allclose(upper_incomplete_gamma(0, 1), expected, rtol=1e-12)

    @pytest.mark.parametrize(
        "u,v",
        [(0.0, 0.1), (0.0, 1e-5), (-0.5, 0.3), (-3.2, 0.5), (-20.0, 5.0), (2.7, 0.1),
         (2.7, 10.0), (50.0, 30.0), (50.0, 60.0), (3.5, 700.0), (0.001, 0.5), (-1.0, 0.2)],
    )
    def test_against_mpmath(self, u, v):
        np.testing.assert_allclose(upper_incomplete_gamma(u, v), _gamma_oracle(u, v), rtol=1e-12)

    @pytest.mark.parametrize("u", [0.5, 1.0, 2.7])
    @pytest.mark.parametrize("v", [0.1, 1.0, 10.0])
    def test_recurrence(self, u, v):
        lhs = upper_incomplete_gamma(u + 1, v)
        rhs = u * upper_incomplete_gamma(u, v) + v**u * math.exp(-v)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-9)

    @pytest.mark.parametrize("u", [-1.5, 0.0, 0.7, 4.0])
    def test_strictly_decreasing_in_v(self, u):
        vs = np.linspace(0.05, 30, 100)
        values = [upper_incomplete_gamma(u, v) for v in vs]
        assert np.all(np.diff(values) < 0)

    def test_underflow_returns_zero(self):
        assert upper_incomplete_gamma(1.0, 800.0) == 0.0

    def test_scaled_is_finite_beyond_underflow(self):
        np.testing.assert_allclose(scaled_upper_incomplete_gamma(1.0, 800.0), 1.0, rtol=1e-12)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            upper_incomplete_gamma(0.0, 0.0)
        with pytest.raises(DomainError):
            upper_incomplete_gamma(-1.0, 0.0)
        with pytest.raises(DomainError):
            upper_incomplete_gamma(1.0, -0.1)


class TestGenIntegroExponential:
    @pytest.mark.parametrize("z", [0.1, 1.0, 5.0])
    def test_reduces_to_exponential_integral(self, z):
        np.testing.assert_allclose(
            gen_integro_exponential(1, 0, z), upper_incomplete_gamma(0, z), rtol=1e-9
        )

    @pytest.mark.parametrize(
        "s,k,z", [(1, 1, 1.0), (1, 2, 0.5), (1, 3, 5.0), (0.5, 2, 30.0), (2, 1, 0.01), (0.3, 0, 1e-3), (3, 6, 2.0)]
    )
    def test_against_quadrature_oracle(self, s, k, z):
        np.testing.assert_allclose(gen_integro_exponential(s, k, z), _integro_oracle(s, k, z), rtol=1e-9)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            gen_integro_exponential(1, 0, 0.0)
        with pytest.raises(DomainError):
            gen_integro_exponential(1, -1, 1.0)
        with pytest.raises(DomainError):
            gen_integro_exponential(1, 1.5, 1.0)


class TestQuadrature:
    def test_config_validation(self):
        with pytest.raises(DomainError):
            QuadratureConfig(abs_tol=0.0)
        with pytest.raises(DomainError):
            QuadratureConfig(max_subdivisions=0)

    def test_semi_infinite_mapping(self):
        value = integrate_interval(lambda x: math.exp(-x), 2.0, math.inf)
        np.testing.assert_allclose(value, math.exp(-2.0), rtol=1e-10)


class TestLogBeta:
    def test_known_values(self):
        np.testing.assert_allclose(log_beta(1, 1), 0.0, atol=1e-15)
        np.testing.assert_allclose(log_beta(2, 3), math.log(1 / 12), rtol=1e-13)
        np.testing.assert_allclose(log_beta(0.5, 0.5), math.log(math.pi), rtol=1e-13)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            log_beta(0.0, 1.0)
        with pytest.raises(DomainError):
            log_beta(1.0, -2.0)


class TestKsPValue:
    def test_zero_statistic(self):
        assert ks_p_value(0.0, 10) == 1.0

    def test_series_oracle(self):
        expected = 2 * sum((-1) ** (j - 1) * math.exp(-2 * j * j) for j in range(1, 21))
        np.testing.assert_allclose(ks_p_value(1.0, 1), expected, rtol=1e-12)

    def test_theta_branch_matches_series(self):
        # both representations of the Kolmogorov tail agree below x = 1
        for x in [0.6, 0.8, 0.95]:
            series = 2 * sum((-1) ** (j - 1) * math.exp(-2 * j * j * x * x) for j in range(1, 400))
            np.testing.assert_allclose(ks_p_value(x, 1), series, atol=1e-10)

    def test_glass_fibre_reference(self):
        assert abs(ks_p_value(0.1008, 63) - 0.5443) < 0.03

    def test_monotone_in_d(self):
        ds = np.linspace(0, 1, 200)
        p = [ks_p_value(d, 40) for d in ds]
        assert np.all(np.diff(p) <= 0)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            ks_p_value(-0.1, 10)
        with pytest.raises(DomainError):
            ks_p_value(0.5, 0)
