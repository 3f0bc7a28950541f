"""Maximum-likelihood estimation for the MOEGG law.

The log-likelihood, score and observed information are evaluated with the
same cancellation-free intermediates as :mod:`moegg.distribution`.  The
fitter runs Newton-Raphson over the log-parameters, with step halving, a
Nelder-Mead fallback whenever the Newton direction fails to ascend, and a
seeded multistart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from . import distribution as dist
from .distribution import MoeggParams
from .exceptions import DataError, DomainError

PARAM_NAMES = ("alpha", "beta", "lam", "theta")
_SERIES_CUT = 0.5


@dataclass(frozen=True)
class Dataset:
    """A validated sample of strictly positive reals."""

    values: np.ndarray
    name: str = "data"

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float).ravel()
        if arr.size == 0:
            raise DataError("dataset is empty")
        if not np.all(np.isfinite(arr)):
            raise DataError("dataset contains non-finite values")
        if np.any(arr <= 0):
            raise DataError("dataset values must be strictly positive")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def sorted_view(self) -> np.ndarray:
        return np.sort(self.values)

    def summary(self) -> dict:
        """Mean, sample variance, median, kurtosis (non-excess), skewness, min and max."""
        x = self.values
        out = {
            "n": self.n,
            "mean": float(np.mean(x)),
            "variance": float(np.var(x, ddof=1)) if self.n > 1 else 0.0,
            "median": float(np.median(x)),
            "min": float(np.min(x)),
            "max": float(np.max(x)),
        }
        if self.n > 2 and np.ptp(x) > 0:
            out["skewness"] = float(stats.skew(x))
            out["kurtosis"] = float(stats.kurtosis(x, fisher=False))
        else:
            out["skewness"] = math.nan
            out["kurtosis"] = math.nan
        return out


def as_dataset(data) -> Dataset:
    return data if isinstance(data, Dataset) else Dataset(np.asarray(data, dtype=float))


@dataclass(frozen=True)
class FitConfig:
    """Stopping rules, multistart and bounds for :func:`fit_mle`."""

    max_iterations: int = 200
    gradient_tol: float = 1e-8
    step_tol: float = 1e-12
    n_starts: int = 8
    seed: int = 20240611
    lower_bound: float = 1e-8
    upper_bound: float = 1e6

    def __post_init__(self):
        if int(self.max_iterations) < 1 or int(self.n_starts) < 1:
            raise DomainError("max_iterations and n_starts must be positive")
        if not (self.gradient_tol > 0 and self.step_tol > 0):
            raise DomainError("tolerances must be positive")
        if not 0 < self.lower_bound < self.upper_bound:
            raise DomainError("bounds must satisfy 0 < lower < upper")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    loglik: float
    score_norm: float
    step_norm: float
    kind: str


@dataclass(frozen=True)
class FitResult:
    """MLE with its observed information, covariance and diagnostics.

    ``converged`` means the max-norm of the score at ``params`` is at most
    ``gradient_tol``; ``stop_reason`` says why iteration ended.
    """

    params: MoeggParams
    loglik: float
    observed_info: np.ndarray
    covariance: np.ndarray
    std_errors: np.ndarray
    converged: bool
    iterations: int
    score_norm_at_solution: float
    stop_reason: str = ""
    start_index: int = 0
    trace: tuple = field(default=(), repr=False)

    @property
    def neg_loglik(self) -> float:
        return -self.loglik

    @property
    def information_positive_definite(self) -> bool:
        if not np.all(np.isfinite(self.observed_info)):
            return False
        return bool(np.all(np.linalg.eigvalsh(self.observed_info) > 0))


# ---------------------------------------------------------------------------
# likelihood pieces


def _k1(y):
    """``y e^y - e^y + 1 = int_0^y t e^t dt``, without cancellation for small y."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < _SERIES_CUT
    ys = np.where(small, y, 0.0)
    series = np.zeros_like(ys)
    fact = 1.0
    for k in range(0, 30):
        series = series + ys ** (k + 2) / ((k + 2) * fact)
        fact *= k + 1
    with np.errstate(over="ignore", invalid="ignore"):
        closed = y * np.exp(y) - np.expm1(y)
    return np.where(small, series, closed)


def _k2(y):
    """``y^2 e^y - 2 y e^y + 2 (e^y - 1) = int_0^y t^2 e^t dt``."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < _SERIES_CUT
    ys = np.where(small, y, 0.0)
    series = np.zeros_like(ys)
    fact = 1.0
    for k in range(0, 30):
        series = series + ys ** (k + 3) / ((k + 3) * fact)
        fact *= k + 1
    with np.errstate(over="ignore", invalid="ignore"):
        closed = (y * y - 2.0 * y) * np.exp(y) + 2.0 * np.expm1(y)
    return np.where(small, series, closed)


@dataclass
class _Terms:
    """Per-observation intermediates shared by score and information."""

    lg: np.ndarray      # log G
    r: np.ndarray       # dL/du = 1 / expm1(u)
    a_over_d: np.ndarray
    oma_over_d: np.ndarray  # (1 - A) / D
    u_b: np.ndarray
    u_l: np.ndarray
    u_bl: np.ndarray
    u_ll: np.ndarray


def _terms(p: MoeggParams, x) -> _Terms:
    a, b, lam, th = p.alpha, p.beta, p.lam, p.theta
    parts = dist._parts(a, b, lam, th, x)
    u = parts.u
    with np.errstate(over="ignore"):
        r = 1.0 / np.expm1(u)
    y = lam * x
    em1 = np.expm1(y)
    k1 = _k1(y)
    k2 = _k2(y)
    return _Terms(
        lg=parts.log_g,
        r=r,
        a_over_d=np.exp(parts.log_a - parts.log_d),
        oma_over_d=np.exp(parts.log_1ma - parts.log_d),
        u_b=em1 / lam,
        u_l=b * k1 / lam**2,
        u_bl=k1 / lam**2,
        u_ll=b * k2 / lam**3,
    )


def log_likelihood(p: MoeggParams, data) -> float:
    """``sum log f(x_i)``; ``-inf`` when some observation has zero density."""
    d = as_dataset(data)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.asarray(dist.log_pdf(p, d.values), dtype=float)
    if np.any(np.isnan(values)):
        return -math.inf
    return float(math.fsum(values))


def score(p: MoeggParams, data) -> np.ndarray:
    """Gradient of the log-likelihood in (alpha, beta, lam, theta).

    ``U_alpha = n/alpha + sum L - 2 theta_bar sum A L / D``,
    ``U_eta = [n/beta] + [sum x] - sum u_eta + (alpha-1) sum L_eta
    - 2 theta_bar alpha sum A L_eta / D`` for eta in (beta, lam), and
    ``U_theta = n/theta - 2 sum (1 - A) / D``, where ``L = log G`` and
    ``L_eta = u_eta / expm1(u)``.
    """
    d = as_dataset(data)
    x = d.values
    n = d.n
    a, th = p.alpha, p.theta
    tb = p.theta_bar
    t = _terms(p, x)
    l_b = t.r * t.u_b
    l_l = t.r * t.u_l
    g = np.array([
        n / a + np.sum(t.lg) - 2.0 * tb * np.sum(t.a_over_d * t.lg),
        n / p.beta - np.sum(t.u_b) + (a - 1.0) * np.sum(l_b) - 2.0 * tb * a * np.sum(t.a_over_d * l_b),
        np.sum(x) - np.sum(t.u_l) + (a - 1.0) * np.sum(l_l) - 2.0 * tb * a * np.sum(t.a_over_d * l_l),
        n / th - 2.0 * np.sum(t.oma_over_d),
    ])
    if not np.all(np.isfinite(g)):
        raise DomainError("score is not finite at these parameters")
    return g


def observed_information(p: MoeggParams, data) -> np.ndarray:
    """``J = -H``, the negated Hessian of the log-likelihood.

    Writing ``D = theta + theta_bar A`` with ``A = G^alpha`` and
    ``q_ab = D_ab / D - D_a D_b / D^2``, every ``-2 sum log D`` contribution
    is ``-2 sum q_ab``; the remaining pieces come from ``log G`` and ``u``.
    """
    d = as_dataset(data)
    x = d.values
    n = d.n
    a, th = p.alpha, p.theta
    tb = p.theta_bar
    t = _terms(p, x)
    lg = t.lg
    ad = t.a_over_d                  # A / D
    od = t.oma_over_d                # (1 - A) / D
    r = t.r
    curv = r * (1.0 + r)             # -d^2 L / du^2
    u1 = {"b": t.u_b, "l": t.u_l}
    u2 = {("b", "b"): 0.0, ("b", "l"): t.u_bl, ("l", "l"): t.u_ll}
    l1 = {k: r * v for k, v in u1.items()}

    def l2(i, j):
        key = (i, j) if (i, j) in u2 else (j, i)
        return -curv * u1[i] * u1[j] + r * u2[key]

    # first derivatives of D, divided by D
    d1 = {
        "a": tb * lg * ad,
        "t": od,
        "b": tb * a * ad * l1["b"],
        "l": tb * a * ad * l1["l"],
    }

    def d2(i, j):
        s = {i, j}
        if s == {"a"}:
            return tb * lg * lg * ad
        if s == {"t"}:
            return np.zeros_like(lg)
        if s == {"a", "t"}:
            return -lg * ad
        if "t" in s:
            eta = (s - {"t"}).pop()
            return -a * ad * l1[eta]
        if "a" in s:
            eta = (s - {"a"}).pop()
            return tb * ad * l1[eta] * (a * lg + 1.0)
        return tb * a * ad * (a * l1[i] * l1[j] + l2(i, j))

    def q(i, j):
        return np.sum(d2(i, j) - d1[i] * d1[j])

    keys = ("a", "b", "l", "t")
    h = np.zeros((4, 4))
    for ii, i in enumerate(keys):
        for jj in range(ii, 4):
            j = keys[jj]
            value = -2.0 * q(i, j)
            pair = {i, j}
            if pair == {"a"}:
                value += -n / a**2
            elif pair == {"t"}:
                value += -n / th**2
            elif pair <= {"a", "b", "l"} and "a" in pair:
                eta = (pair - {"a"}).pop()
                value += np.sum(l1[eta])
            elif pair <= {"b", "l"}:
                ordered = (i, j) if (i, j) in u2 else (j, i)
                value += -np.sum(u2[ordered]) + (a - 1.0) * np.sum(l2(i, j))
                if pair == {"b"}:
                    value += -n / p.beta**2
            h[ii, jj] = h[jj, ii] = value
    if not np.all(np.isfinite(h)):
        raise DomainError("observed information is not finite at these parameters")
    return -h


def printed_information_check(p: MoeggParams, data, rel_tol=1e-4) -> dict:
    """Compare the Hessian element displays as printed with the derived Hessian.

    Returns ``{element: (printed, derived, agrees)}`` for the ten elements
    ``U_aa ... U_tt``.  Used as a diagnostic: several printed cross terms do
    not match a finite-difference Hessian.
    """
    d = as_dataset(data)
    x = d.values
    n = d.n
    a, b, l, t = p.alpha, p.beta, p.lam, p.theta
    tb = p.theta_bar
    e = np.exp(l * x)
    z = np.exp(-b / l * (e - 1))
    g = 1 - z
    big_a = g**a
    dd = t + tb * big_a
    lg = np.log(g)
    k = l * x * e - e + 1
    s = np.sum
    printed = {
        "alpha,alpha": -n / a**2 - 2 * tb * s(big_a * lg**2 / dd) + 2 * tb**2 * s((big_a * lg / dd) ** 2),
        "alpha,beta": s((e - 1) * z / g) / l - 2 * a * tb / l * s((e - 1) * z * g ** (a - 1) * lg / dd)
        - 2 * tb / l * s((e - 1) * z / (g * dd**2)) + 2 * a * tb**2 / l * s((e - 1) * z * g ** (2 * a - 1) * lg / dd**2),
        "alpha,lam": b / l * s(k * z / g) - 2 * b * tb / l * s((1 + a * lg) * k * z * g ** (a - 1) / dd),
        "alpha,theta": 2 * s(big_a * lg / dd**2),
        "beta,beta": -n / b**2 - (a - 1) / l**2 * s((e - 1) ** 2 * z / g) - (a - 1) / l**2 * s(z**2 * (e - 1) ** 2 / g**2)
        + 2 * tb * a / l**2 * s((e - 1) ** 2 * z * g ** (a - 1) / dd)
        - 2 * tb * a * (a - 1) / l**2 * s((e - 1) ** 2 * z**2 * g ** (a - 2) / dd)
        + 2 * tb**2 * a**2 / l**2 * s(((e - 1) * z * g ** (a - 1) / dd) ** 2),
        "beta,lam": (
            s(e - 1) / l**2 - s(x * e) / l + (a - 1) / l**2 * s((l - b * e + b) * x * e * z / g)
            + b * (a - 1) / l**3 * s((e - 1) ** 2 * z / g) - (a - 1) / l * s((e - 1) * z / g)
            - b * (a - 1) / l**3 * s(k * (e - 1) * z**2 / g**2) - 2 * tb * a / l * s(x * e * z * g ** (a - 1) / dd)
            - 2 * tb * a * b / l**3 * s((e - l * x * e + 1) * (e - 1) * z * g ** (a - 1) / dd)
            - 2 * tb * a * b * (a - 1) / l**3 * s(k * (e - 1) * z**2 * g ** (a - 2) / dd)
            + 2 * tb * a / l**2 * s((e - 1) * z * g ** (a - 1) / dd)
            + 2 * tb**2 * b * a / l**3 * s(k * (e - 1) * z**2 * g ** (2 * a - 2) / dd**2)
        ),
        "lam,lam": (
            -2 * b / l**3 * s(e - 1) + 2 * b / l**2 * s(x * e) - b / l * s(x**2 * e)
            + b * (a - 1) / l * s(z * x**2 * e / g) - b**2 * (a - 1) / l**4 * s(k**2 * z / g)
            - 2 * b * (a - 1) / l**3 * s(k * z / g) - b**2 * (a - 1) / l**4 * s((k * z / g) ** 2)
            - 2 * a * b * tb * s(x**2 * e * z * g ** (a - 1) / dd) + 2 * a * b**2 * tb / l**3 * s(k**2 * z * g ** (a - 1) / dd)
            - 2 * b**2 * a * (a - 1) * tb / l**3 * s(k**2 * z**2 * g ** (a - 2) / dd)
            + 4 * b * a * tb / l**3 * s(k * z * g ** (a - 1) / dd)
            + 2 * (a * b * tb) ** 2 / l**4 * s((k * z * g ** (a - 1) / dd) ** 2)
        ),
        "lam,theta": 2 * a * b / l**2 * s(k * z * g ** (a - 1) / dd) + 2 * a * b * tb / l * s(k * z * g ** (a - 1) * (1 - big_a) / dd**2),
        "beta,theta": 2 * a / l * s((e - 1) * z * g ** (a - 1) / dd) + 2 * tb * a * s((1 - big_a) * (e - 1) * z * g ** (a - 1) / dd**2),
        "theta,theta": -n / t**2 + 2 * s(((1 - big_a) / dd) ** 2),
    }
    hess = -observed_information(p, d)
    index = {name: i for i, name in enumerate(PARAM_NAMES)}
    out = {}
    for key, value in printed.items():
        i, j = (index[k] for k in key.split(","))
        derived = hess[i, j]
        agrees = abs(value - derived) <= rel_tol * max(1.0, abs(derived))
        out[key] = (float(value), float(derived), bool(agrees))
    return out


# ---------------------------------------------------------------------------
# fitting


def init_params(data) -> MoeggParams:
    """Gompertz-style start: ``lam0 = 1/sd`` and ``beta0`` matching the sample median.

    With alpha = theta = 1 the median solves ``(beta/lam) expm1(lam m) = ln 2``.
    """
    d = as_dataset(data)
    if d.n < 2 or np.ptp(d.values) == 0:
        raise DataError("need at least two distinct values to initialize")
    sd = float(np.std(d.values, ddof=1))
    lam0 = 1.0 / sd
    median = float(np.median(d.values))
    beta0 = lam0 * math.log(2.0) / math.expm1(lam0 * median)
    return MoeggParams(1.0, beta0, lam0, 1.0)


def _clip_log(phi, cfg):
    return np.clip(phi, math.log(cfg.lower_bound), math.log(cfg.upper_bound))


def _log_space(p: MoeggParams, d: Dataset):
    """Log-likelihood, gradient and Hessian in phi = log(params)."""
    theta = p.as_array()
    g = score(p, d)
    h = -observed_information(p, d)
    gt = theta * g
    ht = np.outer(theta, theta) * h + np.diag(gt)
    return gt, ht


def _objective(phi, d):
    try:
        p = MoeggParams.from_sequence(np.exp(phi))
    except DomainError:
        return math.inf
    ll = log_likelihood(p, d)
    return -ll if math.isfinite(ll) else math.inf


def _within_noise(trial, trial_ll, ll, gnorm, d):
    """Near the optimum the log-likelihood is flat to rounding; accept a step there if it shrinks the score."""
    if not math.isfinite(trial_ll) or trial_ll < ll - 8.0 * np.finfo(float).eps * max(1.0, abs(ll)):
        return False
    g = score(MoeggParams.from_sequence(np.exp(trial)), d)
    return bool(np.max(np.abs(g)) < gnorm)


def _newton_run(phi0, d: Dataset, cfg: FitConfig):
    """One safeguarded Newton run from ``phi0``; returns (phi, loglik, iters, reason, trace)."""
    phi = _clip_log(np.asarray(phi0, dtype=float), cfg)
    ll = -_objective(phi, d)
    trace = [TraceEntry(0, ll, math.nan, 0.0, "start")]
    reason = "max_iterations"
    iterations = 0
    for it in range(1, int(cfg.max_iterations) + 1):
        iterations = it
        p = MoeggParams.from_sequence(np.exp(phi))
        try:
            g_orig = score(p, d)
            gt, ht = _log_space(p, d)
        except DomainError:
            reason = "non_finite_derivatives"
            break
        if np.max(np.abs(g_orig)) <= cfg.gradient_tol:
            reason = "gradient_tol"
            break
        direction = None
        try:
            eig = np.linalg.eigvalsh(ht)
            if np.all(eig < 0):
                direction = -np.linalg.solve(ht, gt)
        except np.linalg.LinAlgError:
            direction = None
        kind = "newton"
        if direction is None or not np.dot(gt, direction) > 0:
            # not an ascent direction: derivative-free simplex restart
            res = optimize.minimize(
                _objective, phi, args=(d,), method="Nelder-Mead",
                options={"maxiter": 2000, "xatol": 1e-10, "fatol": 1e-13},
            )
            new_phi = _clip_log(res.x, cfg)
            new_ll = -_objective(new_phi, d)
            kind = "simplex"
        else:
            step = 1.0
            new_phi, new_ll = phi, ll
            gnorm = float(np.max(np.abs(g_orig)))
            for _ in range(31):
                trial = _clip_log(phi + step * direction, cfg)
                trial_ll = -_objective(trial, d)
                if trial_ll >= ll or _within_noise(trial, trial_ll, ll, gnorm, d):
                    new_phi, new_ll = trial, trial_ll
                    break
                step *= 0.5
        step_norm = float(np.max(np.abs(new_phi - phi)))
        if new_ll < ll and not (kind == "newton" and step_norm > 0):
            new_phi, new_ll, step_norm = phi, ll, 0.0
        trace.append(TraceEntry(it, new_ll, float(np.max(np.abs(g_orig))), step_norm, kind))
        if step_norm <= cfg.step_tol and new_ll - ll <= 0.0:
            phi = new_phi
            reason = "step_stalled"
            break
        phi, ll = new_phi, new_ll
    return phi, ll, iterations, reason, tuple(trace)


def _build_result(phi, ll, iterations, reason, trace, start, d, cfg) -> FitResult:
    p = MoeggParams.from_sequence(np.exp(phi))
    try:
        g = score(p, d)
        info = observed_information(p, d)
        gnorm = float(np.max(np.abs(g)))
    except DomainError:
        info = np.full((4, 4), math.nan)
        gnorm = math.inf
    try:
        cov = np.linalg.inv(info)
        cov = 0.5 * (cov + cov.T)
    except np.linalg.LinAlgError:
        cov = np.full((4, 4), math.nan)
    diag = np.diag(cov)
    se = np.sqrt(np.where(diag >= 0, diag, math.nan))
    return FitResult(
        params=p,
        loglik=ll,
        observed_info=info,
        covariance=cov,
        std_errors=se,
        converged=bool(gnorm <= cfg.gradient_tol),
        iterations=iterations,
        score_norm_at_solution=gnorm,
        stop_reason=reason,
        start_index=start,
        trace=trace,
    )


def start_points(data, cfg: FitConfig = FitConfig()):
    """The deterministic multistart set: the heuristic start, then uniform +-ln 3 log perturbations."""
    base = np.log(init_params(data).as_array())
    rng = np.random.default_rng(int(cfg.seed) % 2**64)
    starts = [base]
    for _ in range(int(cfg.n_starts) - 1):
        starts.append(base + rng.uniform(-math.log(3.0), math.log(3.0), 4))
    return starts


def fit_mle(data, cfg: FitConfig = FitConfig(), extra_starts=()) -> FitResult:
    """Maximum-likelihood fit over the positive orthant.

    Each start runs :func:`_newton_run`; results are ranked by (converged,
    log-likelihood, start index), which does not depend on execution order.
    ``extra_starts`` (parameter vectors, e.g. a fitted GG with theta = 1) are
    appended after the seeded set.
    """
    d = as_dataset(data)
    if d.n < 5:
        raise DataError(f"need at least 5 observations to fit 4 parameters, got {d.n}")
    if np.ptp(d.values) == 0:
        raise DataError("all observations are equal; the likelihood has no interior maximum")
    results = []
    starts = list(start_points(d, cfg))
    for extra in extra_starts:
        values = extra.as_array() if isinstance(extra, MoeggParams) else np.asarray(extra, dtype=float)
        starts.append(np.log(MoeggParams.from_sequence(values).as_array()))
    for index, phi0 in enumerate(starts):
        phi, ll, iters, reason, trace = _newton_run(phi0, d, cfg)
        results.append(_build_result(phi, ll, iters, reason, trace, index, d, cfg))
    results.sort(key=lambda r: (not r.converged, -r.loglik if math.isfinite(r.loglik) else math.inf, r.start_index))
    return results[0]


@dataclass(frozen=True)
class ConfidenceInterval:
    name: str
    estimate: float
    lower: float
    upper: float
    violates_positivity: bool


def confidence_intervals(fr: FitResult, level: float = 0.95):
    """Wald intervals ``estimate +- z se``; negative lower bounds are kept and flagged."""
    if not 0 < level < 1:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    z = float(stats.norm.ppf(0.5 * (1.0 + level)))
    out = []
    for name, est, se in zip(PARAM_NAMES, fr.params.as_array(), fr.std_errors):
        lo, hi = est - z * se, est + z * se
        out.append(ConfidenceInterval(name, float(est), float(lo), float(hi), bool(lo <= 0)))
    return out
