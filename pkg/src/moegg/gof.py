"""Goodness of fit, information criteria and a model-comparison harness.

Eight lifetime models share one interface (:class:`ModelSpec`): the MOEGG
law and seven competitors.  MOEGG is fitted by :func:`moegg.inference.fit_mle`
with analytic derivatives; the competitors are fitted by a simplex search in
log-parameters followed by a quasi-Newton polish, with standard errors from a
finite-difference observed information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, special, stats

from . import distribution as dist
from .distribution import MoeggParams, log1mexp
from .exceptions import DomainError
from .inference import Dataset, FitConfig, as_dataset, fit_mle, init_params
from .specialfn import ks_p_value

_CLAMP = 1e-15


# ---------------------------------------------------------------------------
# model densities (vectorized in x; parameters as a 1-d array)


def _gompertz_parts(beta, lam, x):
    u = dist._u(beta, lam, x)
    return u, log1mexp(u)


def _moegg_log_pdf(p, x):
    return dist.log_pdf(MoeggParams(*p), x)


def _moegg_cdf(p, x):
    return dist.cdf(MoeggParams(*p), x)


def _gg_log_pdf(p, x):
    return dist.gg_log_pdf(p[0], p[1], p[2], x)


def _gg_cdf(p, x):
    return dist.gg_cdf(p[0], p[1], p[2], x)


def _gompertz_log_pdf(p, x):
    return dist.gg_log_pdf(1.0, p[0], p[1], x)


def _gompertz_cdf(p, x):
    return dist.gg_cdf(1.0, p[0], p[1], x)


def _ge_log_pdf(p, x):
    alpha, lam = p
    return math.log(alpha * lam) - lam * x + (alpha - 1) * log1mexp(lam * x)


def _ge_cdf(p, x):
    alpha, lam = p
    return np.exp(alpha * log1mexp(lam * x))


def _mo_tilt(log_g, alpha, theta):
    """Marshall-Olkin pieces for a baseline with ``log G``: (log A, log D)."""
    log_a = alpha * log_g
    a = np.exp(log_a)
    return log_a, np.log(theta + (1.0 - theta) * a)


def _moege_log_pdf(p, x):
    alpha, lam, theta = p
    log_g = log1mexp(lam * x)
    _, log_d = _mo_tilt(log_g, alpha, theta)
    return math.log(alpha * lam * theta) - lam * x + (alpha - 1) * log_g - 2 * log_d


def _moege_cdf(p, x):
    alpha, lam, theta = p
    log_a, log_d = _mo_tilt(log1mexp(lam * x), alpha, theta)
    return np.exp(log_a - log_d)


def _lindley_log_sf(lam, x):
    return np.log1p(lam * x / (1.0 + lam)) - lam * x


def _moegl_log_pdf(p, x):
    alpha, lam, theta = p
    log_g = np.log(-np.expm1(_lindley_log_sf(lam, x)))
    _, log_d = _mo_tilt(log_g, alpha, theta)
    base = math.log(alpha * theta * lam * lam / (1.0 + lam)) + np.log1p(x) - lam * x
    return base + (alpha - 1) * log_g - 2 * log_d


def _moegl_cdf(p, x):
    alpha, lam, theta = p
    log_a, log_d = _mo_tilt(np.log(-np.expm1(_lindley_log_sf(lam, x))), alpha, theta)
    return np.exp(log_a - log_d)


def _bg_log_pdf(p, x):
    beta, lam, a, b = p
    u, log_g = _gompertz_parts(beta, lam, x)
    return math.log(beta) + lam * x - b * u - special.betaln(a, b) + (a - 1) * log_g


def _bg_cdf(p, x):
    beta, lam, a, b = p
    u, log_g = _gompertz_parts(beta, lam, x)
    # the complement form keeps the upper tail accurate
    return np.where(log_g > -0.7, special.betaincc(b, a, np.exp(-u)), special.betainc(a, b, np.exp(log_g)))


def _mcg_log_pdf(p, x):
    beta, lam, a, b, c = p
    u, log_g = _gompertz_parts(beta, lam, x)
    log_1mgc = np.log(-np.expm1(c * log_g))
    return (math.log(c * beta) + lam * x - u - special.betaln(a / c, b)
            + (a - 1) * log_g + (b - 1) * log_1mgc)


def _mcg_cdf(p, x):
    beta, lam, a, b, c = p
    _, log_g = _gompertz_parts(beta, lam, x)
    return special.betainc(a / c, b, np.exp(c * log_g))


@dataclass(frozen=True)
class ModelSpec:
    """A parametric lifetime model with a positive parameter box."""

    name: str
    param_names: tuple
    log_pdf: Callable = field(repr=False)
    cdf: Callable = field(repr=False)
    bounds: tuple = field(repr=False, default=())
    analytic_derivatives: bool = False

    @property
    def dim(self) -> int:
        return len(self.param_names)

    def check(self, params) -> np.ndarray:
        arr = np.asarray(params, dtype=float).ravel()
        if arr.size != self.dim:
            raise DomainError(f"{self.name} takes {self.dim} parameters {self.param_names}, got {arr.size}")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise DomainError(f"{self.name} parameters must be finite and positive")
        return arr

    def log_likelihood(self, params, data) -> float:
        arr = self.check(params)
        x = as_dataset(data).values
        with np.errstate(all="ignore"):
            ll = float(np.sum(self.log_pdf(arr, x)))
        return ll if math.isfinite(ll) else -math.inf


def _box(k):
    return tuple((1e-8, 1e6) for _ in range(k))


MODELS = {
    "MOEGG": ModelSpec("MOEGG", ("alpha", "beta", "lam", "theta"), _moegg_log_pdf, _moegg_cdf, _box(4), True),
    "MOEGE": ModelSpec("MOEGE", ("alpha", "lam", "theta"), _moege_log_pdf, _moege_cdf, _box(3)),
    "MOEGL": ModelSpec("MOEGL", ("alpha", "lam", "theta"), _moegl_log_pdf, _moegl_cdf, _box(3)),
    "BG": ModelSpec("BG", ("beta", "lam", "theta", "gamma"), _bg_log_pdf, _bg_cdf, _box(4)),
    "McG": ModelSpec("McG", ("beta", "lam", "theta", "gamma", "delta"), _mcg_log_pdf, _mcg_cdf, _box(5)),
    "GG": ModelSpec("GG", ("alpha", "beta", "lam"), _gg_log_pdf, _gg_cdf, _box(3)),
    "GE": ModelSpec("GE", ("alpha", "lam"), _ge_log_pdf, _ge_cdf, _box(2)),
    "Gompertz": ModelSpec("Gompertz", ("beta", "lam"), _gompertz_log_pdf, _gompertz_cdf, _box(2)),
}
MODEL_ORDER = tuple(MODELS)


def get_model(name) -> ModelSpec:
    if isinstance(name, ModelSpec):
        return name
    for key, spec in MODELS.items():
        if key.lower() == str(name).lower():
            return spec
    raise DomainError(f"unknown model {name!r}; choose from {', '.join(MODEL_ORDER)}")


# ---------------------------------------------------------------------------
# statistics


def _probability_integral(m: ModelSpec, params, d: Dataset):
    arr = m.check(params)
    with np.errstate(all="ignore"):
        u = np.asarray(m.cdf(arr, d.sorted_view), dtype=float)
    if not np.all(np.isfinite(u)):
        raise DomainError(f"{m.name} cdf is not finite at the data")
    return u


def ks_statistic(m, params, data):
    """One-sample Kolmogorov-Smirnov distance and its asymptotic p-value."""
    m = get_model(m)
    d = as_dataset(data)
    u = _probability_integral(m, params, d)
    n = d.n
    i = np.arange(1, n + 1)
    stat = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    stat = min(max(stat, 0.0), 1.0)
    return stat, ks_p_value(stat, n)


def _edf_inputs(m, params, data, method):
    m = get_model(m)
    d = as_dataset(data)
    u = np.clip(_probability_integral(m, params, d), _CLAMP, 1 - _CLAMP)
    if method == "transformed":
        # normal-scores transform: the statistics then refer to a standard normal null
        y = stats.norm.ppf(u)
        sd = np.std(y, ddof=1)
        if not sd > 0:
            raise DomainError("transformed statistics need non-constant probability integrals")
        u = np.clip(np.sort(stats.norm.cdf((y - np.mean(y)) / sd)), _CLAMP, 1 - _CLAMP)
    elif method != "plain":
        raise DomainError(f"method must be 'transformed' or 'plain', got {method!r}")
    return u, d.n


def cramer_von_mises(m, params, data, method="transformed") -> float:
    """Cramer-von Mises W^2.

    ``method="transformed"`` (default) applies the normal-scores transform of
    the probability integrals before the standard formula; ``"plain"`` uses
    ``u_i = F(x_(i))`` directly.
    """
    u, n = _edf_inputs(m, params, data, method)
    i = np.arange(1, n + 1)
    return float(1.0 / (12 * n) + np.sum((u - (2 * i - 1) / (2 * n)) ** 2))


def anderson_darling(m, params, data, method="transformed") -> float:
    """Anderson-Darling A^2 with the same ``method`` choice as :func:`cramer_von_mises`."""
    u, n = _edf_inputs(m, params, data, method)
    i = np.arange(1, n + 1)
    return float(-n - np.sum((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1]))) / n)


@dataclass(frozen=True)
class InformationCriteria:
    aic: float
    caic: float
    bic: float
    aicc: float


def information_criteria(neg_loglik, dim, n) -> InformationCriteria:
    """AIC, CAIC, BIC and the small-sample AICc.

    CAIC is ``AIC + 2 k^2 / (n - k - 1)``; AICc is ``AIC + 2 k (k + 1) / (n - k - 1)``.
    """
    dim, n = int(dim), int(n)
    if dim < 0 or n <= dim + 1:
        raise DomainError(f"need n > dim + 1 (got n={n}, dim={dim})")
    aic = 2.0 * dim + 2.0 * neg_loglik
    denom = n - dim - 1
    return InformationCriteria(
        aic=aic,
        caic=aic + 2.0 * dim * dim / denom,
        bic=dim * math.log(n) + 2.0 * neg_loglik,
        aicc=aic + 2.0 * dim * (dim + 1) / denom,
    )


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class ModelFit:
    model: str
    params: np.ndarray
    neg_loglik: float
    std_errors: np.ndarray
    covariance: np.ndarray
    converged: bool
    gradient_norm: float
    message: str = ""


def default_start(m: ModelSpec, d: Dataset) -> np.ndarray:
    """A data-driven starting vector for each model."""
    g = init_params(d)
    rate = 1.0 / float(np.mean(d.values))
    starts = {
        "MOEGG": g.as_array(),
        "MOEGE": [1.0, rate, 1.0],
        "MOEGL": [1.0, rate, 1.0],
        "BG": [g.beta, g.lam, 1.0, 1.0],
        "McG": [g.beta, g.lam, 1.0, 1.0, 1.0],
        "GG": [1.0, g.beta, g.lam],
        "GE": [1.0, rate],
        "Gompertz": [g.beta, g.lam],
    }
    return np.asarray(starts[m.name], dtype=float)


def _fd_gradient(f, x, rel=1e-5):
    out = np.empty(x.size)
    for i in range(x.size):
        h = rel * max(abs(x[i]), 1e-8)
        e = np.zeros(x.size)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def fd_information(m: ModelSpec, params, data, rel=1e-4) -> np.ndarray:
    """Central-difference negative Hessian of the log-likelihood."""
    x0 = m.check(params)
    d = as_dataset(data)
    k = x0.size
    h = rel * np.abs(x0)
    f = lambda v: m.log_likelihood(v, d) if np.all(v > 0) else -math.inf
    f0 = f(x0)
    hess = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        hess[i, i] = (f(x0 + ei) - 2 * f0 + f(x0 - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            val = (f(x0 + ei + ej) - f(x0 + ei - ej) - f(x0 - ei + ej) + f(x0 - ei - ej)) / (4 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return -hess


def _covariance(info):
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        k = info.shape[0]
        return np.full((k, k), math.nan), np.full(k, math.nan)
    cov = 0.5 * (cov + cov.T)
    diag = np.diag(cov)
    return cov, np.sqrt(np.where(diag >= 0, diag, math.nan))


def _fit_competitor(m: ModelSpec, d: Dataset, cfg: FitConfig, extra_starts):
    lo, hi = math.log(cfg.lower_bound), math.log(cfg.upper_bound)

    def objective(phi):
        if np.any(phi < lo) or np.any(phi > hi):
            return math.inf
        ll = m.log_likelihood(np.exp(phi), d)
        return -ll if math.isfinite(ll) else math.inf

    base = np.log(default_start(m, d))
    rng = np.random.default_rng(int(cfg.seed) % 2**64)
    starts = [base] + [base + rng.uniform(-math.log(3.0), math.log(3.0), m.dim) for _ in range(int(cfg.n_starts) - 1)]
    starts += [np.log(m.check(s)) for s in extra_starts]
    best = None
    for phi0 in starts:
        if not math.isfinite(objective(phi0)):
            continue
        with np.errstate(all="ignore"):
            res = optimize.minimize(objective, phi0, method="Nelder-Mead",
                                    options={"maxiter": 20000, "maxfev": 20000, "xatol": 1e-10, "fatol": 1e-12})
            phi, fun = res.x, res.fun
            polish = optimize.minimize(objective, phi, method="BFGS", options={"gtol": 1e-9})
        if math.isfinite(polish.fun) and polish.fun <= fun:
            phi, fun = polish.x, polish.fun
        if best is None or fun < best[1]:
            best = (phi, fun)
    if best is None:
        nan = np.full(m.dim, math.nan)
        return ModelFit(m.name, nan, math.inf, nan, np.full((m.dim, m.dim), math.nan), False, math.inf,
                        "no start point with finite likelihood")
    phi, fun = best
    params = np.exp(phi)
    grad = _fd_gradient(objective, phi)
    gnorm = float(np.max(np.abs(grad)))
    info = fd_information(m, params, d)
    cov, se = _covariance(info)
    converged = bool(math.isfinite(gnorm) and gnorm <= 1e-4)
    message = "" if converged else f"log-space gradient {gnorm:.3g} above 1e-4"
    return ModelFit(m.name, params, float(fun), se, cov, converged, gnorm, message)


def fit_model(m, data, cfg: FitConfig = FitConfig(), extra_starts=()) -> ModelFit:
    """Maximum-likelihood fit of any registered model.

    MOEGG goes through the analytic Newton fitter; ``extra_starts`` adds
    parameter vectors to the multistart set (used to seed nested models).
    """
    m = get_model(m)
    d = as_dataset(data)
    if m.name == "MOEGG":
        fr = fit_mle(d, cfg, extra_starts=extra_starts)
        return ModelFit("MOEGG", fr.params.as_array(), fr.neg_loglik, fr.std_errors, fr.covariance,
                        fr.converged, fr.score_norm_at_solution, "" if fr.converged else fr.stop_reason)
    return _fit_competitor(m, d, cfg, extra_starts)


def nested_start(child: str, parent_fit: ModelFit):
    """Embed a fitted submodel into its parent: Gompertz -> GG (alpha = 1), GG -> MOEGG (theta = 1)."""
    p = parent_fit.params
    if child == "GG" and parent_fit.model == "Gompertz":
        return np.array([1.0, p[0], p[1]])
    if child == "MOEGG" and parent_fit.model == "GG":
        return np.array([p[0], p[1], p[2], 1.0])
    raise DomainError(f"{parent_fit.model} is not treated as nested in {child}")


# ---------------------------------------------------------------------------
# comparison


@dataclass(frozen=True)
class GofReport:
    model: str
    dim: int
    params: np.ndarray
    std_errors: np.ndarray
    neg_loglik: float
    aic: float
    caic: float
    bic: float
    aicc: float
    ks: float
    p_value: float
    cm: float
    ad: float
    converged: bool
    note: str = ""

    def as_dict(self) -> dict:
        names = get_model(self.model).param_names
        return {
            "model": self.model,
            "dim": self.dim,
            "params": dict(zip(names, map(float, self.params))),
            "std_errors": dict(zip(names, map(float, self.std_errors))),
            "neg_loglik": self.neg_loglik,
            "aic": self.aic,
            "caic": self.caic,
            "bic": self.bic,
            "aicc": self.aicc,
            "ks": self.ks,
            "p_value": self.p_value,
            "cm": self.cm,
            "ad": self.ad,
            "converged": self.converged,
            "note": self.note,
        }


def gof_report(m, params, data, neg_loglik=None, std_errors=None, converged=True, note="",
               method="transformed") -> GofReport:
    """All statistics for one model at a given parameter vector."""
    m = get_model(m)
    d = as_dataset(data)
    arr = m.check(params)
    nll = -m.log_likelihood(arr, d) if neg_loglik is None else float(neg_loglik)
    ic = information_criteria(nll, m.dim, d.n)
    ks, pv = ks_statistic(m, arr, d)
    se = np.full(m.dim, math.nan) if std_errors is None else np.asarray(std_errors, dtype=float)
    return GofReport(
        model=m.name, dim=m.dim, params=arr, std_errors=se, neg_loglik=nll,
        aic=ic.aic, caic=ic.caic, bic=ic.bic, aicc=ic.aicc, ks=ks, p_value=pv,
        cm=cramer_von_mises(m, arr, d, method), ad=anderson_darling(m, arr, d, method),
        converged=converged, note=note,
    )


def _failed_report(m: ModelSpec, fit: ModelFit) -> GofReport:
    nan = math.nan
    return GofReport(m.name, m.dim, fit.params, fit.std_errors, fit.neg_loglik, nan, nan, nan, nan,
                     nan, nan, nan, nan, False, fit.message or "fit failed")


def _rank_key(r: GofReport):
    bad = not (r.converged and math.isfinite(r.aic))
    inf = math.inf
    return (bad, r.aic if not bad else inf, r.bic if not bad else inf, r.model)


def compare_models(data, models=MODEL_ORDER, cfg: FitConfig = FitConfig(), method="transformed"):
    """Fit every model and rank by AIC, then BIC, then name; failed fits go last.

    Gompertz is fitted before GG and GG before MOEGG so each fitted submodel
    can seed its parent, which keeps the nested log-likelihoods ordered.
    """
    d = as_dataset(data)
    specs = [get_model(m) for m in models]
    if not specs:
        raise DomainError("compare_models needs at least one model")
    names = [s.name for s in specs]
    fits = {}
    order = sorted(names, key=lambda n: {"Gompertz": 0, "GG": 1, "MOEGG": 2}.get(n, 3))
    for name in order:
        extra = []
        if name == "GG" and "Gompertz" in fits:
            extra.append(nested_start("GG", fits["Gompertz"]))
        if name == "MOEGG" and "GG" in fits:
            extra.append(nested_start("MOEGG", fits["GG"]))
        fits[name] = fit_model(name, d, cfg, extra_starts=extra)
    reports = []
    for spec in specs:
        fit = fits[spec.name]
        if not np.all(np.isfinite(fit.params)):
            reports.append(_failed_report(spec, fit))
            continue
        try:
            reports.append(gof_report(spec, fit.params, d, fit.neg_loglik, fit.std_errors,
                                      fit.converged, fit.message, method))
        except DomainError as exc:
            reports.append(_failed_report(spec, ModelFit(**{**fit.__dict__, "message": str(exc)})))
    reports.sort(key=_rank_key)
    return reports


@dataclass(frozen=True)
class CurveData:
    """Grid evaluations for plotting fitted densities, cdfs and probability plots."""

    x: np.ndarray
    pdf: dict
    cdf: dict
    ecdf: np.ndarray
    pp_empirical: np.ndarray
    pp_fitted: dict


def curve_data(reports, data, grid=None, points=200) -> CurveData:
    """Fitted pdf/cdf on a grid, the empirical cdf, and probability-plot coordinates."""
    d = as_dataset(data)
    xs = d.sorted_view
    if grid is None:
        lo, hi = float(xs[0]), float(xs[-1])
        pad = 0.1 * (hi - lo)
        grid = np.linspace(max(lo - pad, 0.0), hi + pad, points)
    grid = np.asarray(grid, dtype=float)
    pdf, cdf, pp = {}, {}, {}
    for r in reports:
        if not np.all(np.isfinite(r.params)):
            continue
        m = get_model(r.model)
        with np.errstate(all="ignore"):
            pdf[r.model] = np.exp(m.log_pdf(r.params, grid))
            cdf[r.model] = np.asarray(m.cdf(r.params, grid), dtype=float)
            pp[r.model] = np.asarray(m.cdf(r.params, xs), dtype=float)
    ecdf = np.searchsorted(xs, grid, side="right") / d.n
    positions = (np.arange(1, d.n + 1) - 0.5) / d.n
    return CurveData(grid, pdf, cdf, ecdf, positions, pp)
