import math

import numpy as np
import pytest
from scipy import integrate, stats

from moegg.datasets import glass_fibres
from moegg.distribution import MoeggParams, quantile, sample
from moegg.exceptions import DomainError
from moegg.gof import (
    MODEL_ORDER,
    MODELS,
    anderson_darling,
    compare_models,
    cramer_von_mises,
    curve_data,
    fd_information,
    fit_model,
    get_model,
    gof_report,
    information_criteria,
    ks_statistic,
    nested_start,
)
from moegg.inference import Dataset, FitConfig

# printed MLE vectors used as reference points for the statistics
REFERENCE_PARAMS = {
    "MOEGG": [2.2193, 0.6791, 1.3929, 19.1052],
    "MOEGE": [34.8741, 5.6105, 158.5649],
    "MOEGL": [27.3356, 6.0619, 176.9702],
    "BG": [0.0357, 2.8487, 1.6357, 1.0650],
    "McG": [0.0699, 2.1279, 2.0612, 2.6692, 4.8180],
    "GG": [1.6253, 0.0368, 2.8647],
    "GE": [31.3068, 2.6106],
    "Gompertz": [0.0091, 3.6262],
}


@pytest.fixture(scope="module")
def glass():
    return glass_fibres()


@pytest.fixture(scope="module")
def reports(glass):
    return {r.model: r for r in compare_models(glass)}


@pytest.fixture(scope="module")
def ranked(glass):
    return compare_models(glass)


class TestModelSpecs:
    def test_dims(self):
        assert [MODELS[m].dim for m in MODEL_ORDER] == [4, 3, 3, 4, 5, 3, 2, 2]
        assert [m for m in MODEL_ORDER if MODELS[m].analytic_derivatives] == ["MOEGG"]

    @pytest.mark.parametrize("name", MODEL_ORDER)
    def test_density_integrates_to_cdf(self, name):
        m = MODELS[name]
        p = np.asarray(REFERENCE_PARAMS[name], dtype=float)
        for x in (0.8, 1.5, 2.0):
            val, _ = integrate.quad(lambda t: math.exp(m.log_pdf(p, np.array([t]))[0]), 0, x, limit=200, epsabs=1e-12)
            assert val == pytest.approx(float(m.cdf(p, np.array([x]))[0]), abs=1e-7)

    @pytest.mark.parametrize("name", MODEL_ORDER)
    def test_cdf_monotone(self, name):
        m = MODELS[name]
        p = np.asarray(REFERENCE_PARAMS[name], dtype=float)
        grid = np.linspace(1e-3, 4, 400)
        c = m.cdf(p, grid)
        assert np.all(np.diff(c) >= -1e-15)
        assert np.all((c >= 0) & (c <= 1))

    def test_moegg_theta_one_is_gg(self, glass):
        p = [1.4, 0.1, 2.5]
        assert MODELS["MOEGG"].log_likelihood(p + [1.0], glass) == pytest.approx(
            MODELS["GG"].log_likelihood(p, glass), rel=1e-12)

    def test_moege_theta_one_is_ge(self, glass):
        assert MODELS["MOEGE"].log_likelihood([3, 2, 1.0], glass) == pytest.approx(
            MODELS["GE"].log_likelihood([3, 2], glass), rel=1e-12)

    def test_lam_zero_limit_matches_moege(self, glass):
        ll_gg = MODELS["MOEGG"].log_likelihood([2.0, 1.3, 1e-6, 3.0], glass)
        ll_ge = MODELS["MOEGE"].log_likelihood([2.0, 1.3, 3.0], glass)
        assert ll_gg == pytest.approx(ll_ge, abs=1e-3)

    def test_reference_log_likelihoods(self, glass):
        assert -MODELS["GG"].log_likelihood(REFERENCE_PARAMS["GG"], glass) == pytest.approx(14.1456, abs=0.01)
        assert -MODELS["GE"].log_likelihood(REFERENCE_PARAMS["GE"], glass) == pytest.approx(31.3835, abs=0.01)
        assert -MODELS["BG"].log_likelihood(REFERENCE_PARAMS["BG"], glass) == pytest.approx(14.1443, abs=0.01)
        assert -MODELS["McG"].log_likelihood(REFERENCE_PARAMS["McG"], glass) == pytest.approx(13.8548, abs=0.01)

    def test_bad_params(self):
        with pytest.raises(DomainError):
            MODELS["GG"].check([1, 2])
        with pytest.raises(DomainError):
            MODELS["GG"].check([1, -2, 3])
        with pytest.raises(DomainError):
            get_model("weibull")

    def test_lookup_case_insensitive(self):
        assert get_model("moegg") is MODELS["MOEGG"]
        assert get_model("mcg") is MODELS["McG"]


class TestStatistics:
    def _grid_data(self, n):
        p = MoeggParams(2, 1.5, 0.5, 5)
        u = (np.arange(1, n + 1) - 0.5) / n
        return p, Dataset(quantile(p, u))

    def test_ks_perfect_grid(self):
        p, d = self._grid_data(40)
        stat, _ = ks_statistic("MOEGG", p.as_array(), d)
        assert stat <= 1 / 80 + 1e-12

    def test_cm_perfect_grid(self):
        p, d = self._grid_data(40)
        assert cramer_von_mises("MOEGG", p.as_array(), d, method="plain") == pytest.approx(1 / 480, abs=1e-12)

    def test_ks_matches_scipy(self, glass):
        p = REFERENCE_PARAMS["GG"]
        ours, _ = ks_statistic("GG", p, glass)
        ref = stats.kstest(glass.values, lambda x: MODELS["GG"].cdf(np.asarray(p), np.atleast_1d(x))).statistic
        assert ours == pytest.approx(ref, abs=1e-14)

    def test_plain_statistics_match_scipy(self, glass):
        p = np.asarray(REFERENCE_PARAMS["GG"])
        cdf = lambda x: MODELS["GG"].cdf(p, np.atleast_1d(x))
        cm = stats.cramervonmises(glass.values, cdf).statistic
        assert cramer_von_mises("GG", p, glass, method="plain") == pytest.approx(cm, rel=1e-10)
        u = np.sort(cdf(glass.values))
        n = glass.n
        i = np.arange(1, n + 1)
        ad = -n - np.mean((2 * i - 1) * (np.log(u) + np.log(1 - u[::-1])))
        assert anderson_darling("GG", p, glass, method="plain") == pytest.approx(ad, rel=1e-12)

    @pytest.mark.parametrize("name, ks, pv", [("MOEGG", 0.1008, 0.5443), ("GE", 0.2290, 0.0027)])
    def test_reference_ks(self, glass, name, ks, pv):
        stat, p = ks_statistic(name, REFERENCE_PARAMS[name], glass)
        assert stat == pytest.approx(ks, abs=5e-4)
        assert p == pytest.approx(pv, abs=0.01)

    @pytest.mark.parametrize("name, cm, ad", [
        ("MOEGG", 0.0937, 0.5333), ("GG", 0.1623, 0.9085), ("GE", 0.7798, 4.2334),
        ("MOEGE", 0.2861, 1.5587), ("MOEGL", 0.2747, 1.4968), ("McG", 0.1546, 0.8658),
    ])
    def test_reference_transformed(self, glass, name, cm, ad):
        assert cramer_von_mises(name, REFERENCE_PARAMS[name], glass) == pytest.approx(cm, abs=2e-4)
        assert anderson_darling(name, REFERENCE_PARAMS[name], glass) == pytest.approx(ad, abs=2e-3)

    def test_ranges(self, glass):
        for name in MODEL_ORDER:
            stat, p = ks_statistic(name, REFERENCE_PARAMS[name], glass)
            assert 0 <= stat <= 1 and 0 <= p <= 1
            assert cramer_von_mises(name, REFERENCE_PARAMS[name], glass) >= 0
            assert anderson_darling(name, REFERENCE_PARAMS[name], glass, method="plain") >= 0

    def test_bad_method(self, glass):
        with pytest.raises(DomainError):
            cramer_von_mises("GG", REFERENCE_PARAMS["GG"], glass, method="corrected")


class TestInformationCriteria:
    def test_reference_row(self):
        ic = information_criteria(12.0571, 4, 63)
        assert ic.aic == pytest.approx(32.1142, abs=1e-10)
        assert ic.caic == pytest.approx(32.6660, abs=1e-4)
        assert ic.bic == pytest.approx(40.6868, abs=1e-3)

    def test_gg_row(self):
        ic = information_criteria(14.1456, 3, 63)
        assert ic.aic == pytest.approx(34.2912)
        assert ic.caic == pytest.approx(34.5963, abs=1e-4)

    def test_identities(self):
        for nll, k, n in [(3.2, 2, 20), (100.0, 5, 500), (-4.0, 1, 5)]:
            ic = information_criteria(nll, k, n)
            assert ic.aic == 2 * k + 2 * nll
            assert ic.bic == k * math.log(n) + 2 * nll
            assert ic.caic == ic.aic + 2 * k * k / (n - k - 1)
            assert ic.aicc == ic.aic + 2 * k * (k + 1) / (n - k - 1)

    def test_trivial(self):
        ic = information_criteria(0.0, 0, 10)
        assert (ic.aic, ic.caic, ic.bic) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("k, n", [(4, 5), (4, 4), (2, 1)])
    def test_undefined(self, k, n):
        with pytest.raises(DomainError):
            information_criteria(1.0, k, n)


class TestFitModel:
    def test_gg(self, reports):
        r = reports["GG"]
        assert r.neg_loglik == pytest.approx(14.1456, abs=0.01)
        target = np.array([1.6253, 0.0368, 2.8647])
        assert np.linalg.norm(r.params - target) / np.linalg.norm(target) < 0.02

    def test_ge(self, reports):
        assert reports["GE"].neg_loglik == pytest.approx(31.3835, abs=0.01)

    def test_gompertz(self, reports):
        r = reports["Gompertz"]
        assert r.neg_loglik == pytest.approx(14.8100, abs=0.01)
        np.testing.assert_allclose(r.params, [0.0091, 3.6262], rtol=0.05)

    def test_competitors_not_worse_than_reference(self, reports, glass):
        for name in MODEL_ORDER:
            ref = -MODELS[name].log_likelihood(REFERENCE_PARAMS[name], glass)
            assert reports[name].neg_loglik <= ref + 1e-6

    def test_all_converged(self, reports):
        assert all(r.converged for r in reports.values())

    def test_fd_information_vs_analytic(self, glass):
        from moegg.inference import observed_information

        p = np.array([2.1853, 0.732, 1.3499, 22.005])
        np.testing.assert_allclose(fd_information(MODELS["MOEGG"], p, glass),
                                   observed_information(MoeggParams(*p), glass), rtol=2e-3)

    def test_standard_errors(self, reports):
        np.testing.assert_allclose(reports["GE"].std_errors, [9.5016, 0.2379], rtol=0.02)

    def test_nested_start(self):
        from moegg.gof import ModelFit

        fit = ModelFit("GG", np.array([1.5, 0.1, 2.0]), 1.0, np.zeros(3), np.zeros((3, 3)), True, 0.0)
        np.testing.assert_array_equal(nested_start("MOEGG", fit), [1.5, 0.1, 2.0, 1.0])
        with pytest.raises(DomainError):
            nested_start("GE", fit)


class TestCompareModels:
    def test_moegg_first(self, ranked):
        assert ranked[0].model == "MOEGG"
        assert [r.model for r in ranked] == sorted((r.model for r in ranked), key=lambda m: next(
            (r.aic, r.bic, r.model) for r in ranked if r.model == m))

    def test_moegg_row(self, reports):
        r = reports["MOEGG"]
        assert r.neg_loglik == pytest.approx(12.0571, abs=0.01)
        assert r.aic == pytest.approx(32.1143, abs=0.02)
        assert r.bic == pytest.approx(40.6868, abs=0.02)
        assert r.caic == pytest.approx(32.6660, abs=0.02)
        assert r.ks == pytest.approx(0.1008, abs=0.002)
        assert r.p_value == pytest.approx(0.5443, abs=0.03)
        assert r.cm == pytest.approx(0.0937, abs=0.003)
        assert r.ad == pytest.approx(0.5333, abs=0.01)

    def test_gg_row(self, reports):
        assert reports["GG"].cm == pytest.approx(0.1623, abs=0.003)
        assert reports["GG"].ad == pytest.approx(0.9085, abs=0.01)

    def test_report_identities(self, ranked, glass):
        for r in ranked:
            assert r.aic == 2 * r.dim + 2 * r.neg_loglik
            assert r.bic == r.dim * math.log(glass.n) + 2 * r.neg_loglik

    def test_nesting(self, reports):
        assert -reports["MOEGG"].neg_loglik >= -reports["GG"].neg_loglik - 1e-6
        assert -reports["GG"].neg_loglik >= -reports["Gompertz"].neg_loglik - 1e-6

    def test_single_model(self, glass):
        out = compare_models(glass, ["GE"])
        assert len(out) == 1 and out[0].model == "GE"

    def test_empty(self, glass):
        with pytest.raises(DomainError):
            compare_models(glass, [])

    def test_synthetic_gg(self):
        d = Dataset(sample(MoeggParams(1.5, 0.5, 1.0, 1.0), 1000, 777))
        out = {r.model: r for r in compare_models(d, ["MOEGG", "GG", "Gompertz"], FitConfig(n_starts=2))}
        gap = out["MOEGG"].aic - out["GG"].aic
        assert 0.0 <= gap <= 2.0
        assert out["MOEGG"].neg_loglik <= out["GG"].neg_loglik + 1e-6

    def test_as_dict(self, reports):
        row = reports["GE"].as_dict()
        assert set(row["params"]) == {"alpha", "lam"}
        assert row["model"] == "GE"


class TestCurveData:
    def test_shapes(self, ranked, glass):
        cd = curve_data(ranked, glass, points=50)
        assert cd.x.shape == (50,)
        assert set(cd.pdf) == set(MODEL_ORDER)
        assert cd.ecdf[0] == 0.0 and cd.ecdf[-1] == 1.0
        assert np.all(np.diff(cd.ecdf) >= 0)
        assert cd.pp_empirical.shape == (glass.n,)
        for model, fitted in cd.pp_fitted.items():
            assert np.all(np.diff(fitted) >= 0)

    def test_report_from_params(self, glass):
        r = gof_report("GE", REFERENCE_PARAMS["GE"], glass)
        assert r.neg_loglik == pytest.approx(31.3835, abs=1e-3)
        assert math.isnan(r.std_errors[0])
