"""The MOEGG lifetime distribution: evaluation, inversion, sampling and the
GG mixture representation.

With ``u = (beta/lam) (e^(lam x) - 1)`` and ``G = 1 - e^-u`` the cdf is

    F(x) = G^alpha / (theta + (1 - theta) G^alpha).

Everything is evaluated in log space.  ``e^(lam x)`` only ever enters through
``u`` and ``log G`` is formed with ``log1p``/``expm1`` so that trial points
with ``lam x`` in the hundreds stay finite during fitting.

All evaluators accept scalars or array-likes and return a float or an
ndarray of matching shape.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class MoeggParams:
    """Parameter vector (alpha, beta, lam, theta), all strictly positive.

    ``lam`` is the Gompertz acceleration (``lambda`` is reserved in Python)
    and ``theta`` the Marshall-Olkin tilt.
    """

    alpha: float
    beta: float
    lam: float
    theta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "lam", "theta"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a finite positive number, got {value}")
            object.__setattr__(self, name, value)

    @property
    def theta_bar(self) -> float:
        return 1.0 - self.theta

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.lam, self.theta])

    @classmethod
    def from_sequence(cls, values) -> "MoeggParams":
        values = [float(v) for v in values]
        if len(values) != 4:
            raise DomainError(f"expected 4 parameters (alpha, beta, lam, theta), got {len(values)}")
        return cls(*values)

    def with_theta(self, theta) -> "MoeggParams":
        return MoeggParams(self.alpha, self.beta, self.lam, theta)


# ---------------------------------------------------------------------------
# stable building blocks


def _as_x(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("x must be nonnegative")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def log1mexp(a):
    """``log(1 - e^-a)`` for ``a >= 0``, switching branches at ln 2."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        small = a <= _LN2
        return np.where(small, np.log(-np.expm1(-np.where(small, a, 1.0))), np.log1p(-np.exp(-a)))


def _u(beta, lam, x):
    """Cumulative Gompertz hazard ``(beta/lam)(e^(lam x) - 1)``; ``lam == 0`` is the exponential limit."""
    if lam == 0.0:
        return beta * x
    with np.errstate(over="ignore"):
        return (beta / lam) * np.expm1(lam * x)


@dataclass
class _Parts:
    u: np.ndarray
    log_g: np.ndarray
    log_a: np.ndarray
    log_1ma: np.ndarray
    log_d: np.ndarray


def _parts(alpha, beta, lam, theta, x) -> _Parts:
    u = _u(beta, lam, x)
    log_g = log1mexp(u)
    log_a = alpha * log_g
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_1ma = np.log(-np.expm1(log_a))
        # for huge u, 1 - G^alpha ~ alpha e^-u has no representable difference
        log_1ma = np.where(u > 700.0, math.log(alpha) - u, log_1ma)
        a = np.exp(log_a)
        # D = theta + (1 - theta) A written as a sum of nonnegative pieces
        log_d = np.log(a + theta * np.exp(log_1ma))
    return _Parts(u, log_g, log_a, log_1ma, log_d)


def _log_pdf(alpha, beta, lam, theta, x):
    p = _parts(alpha, beta, lam, theta, x)
    with np.errstate(invalid="ignore"):
        shape_term = 0.0 if alpha == 1.0 else (alpha - 1.0) * p.log_g
        return (
            math.log(alpha) + math.log(beta) + math.log(theta)
            + lam * x - p.u + shape_term - 2.0 * p.log_d
        )


def _log_cdf(alpha, beta, lam, theta, x):
    p = _parts(alpha, beta, lam, theta, x)
    return p.log_a - p.log_d


def _log_sf(alpha, beta, lam, theta, x):
    p = _parts(alpha, beta, lam, theta, x)
    return math.log(theta) + p.log_1ma - p.log_d


def _log_1ma_plus_u(alpha, parts):
    """``log(1 - G^alpha) + u``, free of the cancellation between the two terms.

    For large u, ``1 - G^alpha = alpha e^-u (1 - (alpha-1)/2 e^-u + ...)``.
    """
    u = parts.u
    with np.errstate(over="ignore", invalid="ignore"):
        big = math.log(alpha) - 0.5 * (alpha - 1.0) * np.exp(-np.maximum(u, 40.0))
        return np.where(u > 40.0, big, parts.log_1ma + u)


def log_sf_ratio(p: MoeggParams, t, w):
    """``log S(t + w) - log S(t)`` for offsets ``w >= 0``, accurate far into the tail.

    Both survival logs are near ``-u``, which for large arguments carries far
    more absolute rounding than the difference itself, so the difference of
    the ``u`` terms is formed directly as ``(beta/lam) e^(lam t) expm1(lam w)``.
    Taking the offset rather than ``t + w`` keeps steps far below the spacing
    of floats near ``t`` meaningful.
    """
    t = float(t)
    if not t >= 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    wa = _as_x(w)
    a, b, lam, th = p.alpha, p.beta, p.lam, p.theta
    pt = _parts(a, b, lam, th, np.asarray(t))
    px = _parts(a, b, lam, th, t + wa)
    with np.errstate(over="ignore", invalid="ignore"):
        if lam == 0.0:
            du = b * wa
        else:
            du = b / lam * np.exp(lam * t) * np.expm1(lam * wa)
        value = _log_1ma_plus_u(a, px) - _log_1ma_plus_u(a, pt) - du - (px.log_d - pt.log_d)
    return _out(value, w)


def _log1m_exp_neg(lt):
    """``log(1 - e^lt)`` for ``lt <= 0``."""
    return log1mexp(-np.asarray(lt, dtype=float))


def _invert(alpha, beta, lam, theta, r1):
    """Solve ``1 - G^alpha = r1`` for x, where ``r1 = (1 - u) / (1 - theta_bar u)``."""
    with np.errstate(divide="ignore"):
        log_t = np.log1p(-r1) / alpha
        log_1mt = _log1m_exp_neg(log_t)  # = -u at the solution
        if lam == 0.0:
            return -log_1mt / beta
        return np.log1p(-(lam / beta) * log_1mt) / lam


# ---------------------------------------------------------------------------
# public evaluators


def log_pdf(p: MoeggParams, x):
    """Log density; ``+inf`` at x = 0 when alpha < 1, ``-inf`` when alpha > 1."""
    xa = _as_x(x)
    return _out(_log_pdf(p.alpha, p.beta, p.lam, p.theta, xa), x)


def pdf(p: MoeggParams, x):
    """Density ``alpha beta theta e^(lam x) e^-u G^(alpha-1) / D^2``."""
    xa = _as_x(x)
    with np.errstate(over="ignore"):
        return _out(np.exp(_log_pdf(p.alpha, p.beta, p.lam, p.theta, xa)), x)


def cdf(p: MoeggParams, x):
    xa = _as_x(x)
    return _out(np.exp(_log_cdf(p.alpha, p.beta, p.lam, p.theta, xa)), x)


def sf(p: MoeggParams, x):
    """Survival ``1 - F(x) = theta (1 - G^alpha) / D``, accurate deep into the tail."""
    xa = _as_x(x)
    return _out(np.exp(_log_sf(p.alpha, p.beta, p.lam, p.theta, xa)), x)


def log_sf(p: MoeggParams, x):
    xa = _as_x(x)
    return _out(_log_sf(p.alpha, p.beta, p.lam, p.theta, xa), x)


def hazard(p: MoeggParams, x):
    """Hazard rate ``f / (1 - F)``.

    The ratio is formed in log space with the exponential tail factor
    cancelled analytically, so it stays accurate where the survival function
    itself underflows.
    """
    xa = _as_x(x)
    a, b, lam = p.alpha, p.beta, p.lam
    parts = _parts(a, b, lam, p.theta, xa)
    # h = alpha beta e^(lam x - u) G^(alpha-1) / ((1 - G^alpha) D); the -u
    # is cancelled analytically against 1 - G^alpha
    with np.errstate(over="ignore", invalid="ignore"):
        shape_term = 0.0 if a == 1.0 else (a - 1.0) * parts.log_g
        log_h = (
            math.log(a) + math.log(b) + lam * xa + shape_term
            - _log_1ma_plus_u(a, parts) - parts.log_d
        )
        value = np.exp(log_h)
    return _out(value, x)


def _check_prob(u, name="u"):
    arr = np.asarray(u, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise DomainError(f"{name} must lie strictly inside (0, 1)")
    return arr


def quantile(p: MoeggParams, u):
    """Inverse cdf.

    Inverting the cdf gives ``G^alpha = theta u / (1 - theta_bar u)``, hence
    ``x = log(1 - (lam/beta) log(1 - t)) / lam`` with ``t = G``.
    """
    ua = _check_prob(u)
    r1 = (1.0 - ua) / (1.0 - p.theta_bar * ua)
    return _out(_invert(p.alpha, p.beta, p.lam, p.theta, r1), u)


def isf(p: MoeggParams, q):
    """Inverse survival function, accurate for tail probabilities far below eps."""
    qa = _check_prob(q, "q")
    r1 = qa / (p.theta + p.theta_bar * qa)
    return _out(_invert(p.alpha, p.beta, p.lam, p.theta, r1), q)


def uniforms(n, seed) -> np.ndarray:
    """Seeded uniforms on (0, 1).

    The stream is numpy's Philox counter-based generator keyed by
    ``seed mod 2^64``; each draw is a 53-bit integer ``k`` mapped to
    ``(k + 0.5) / 2^53`` so that 0 and 1 never occur.
    """
    n = _check_count(n)
    rng = np.random.Generator(np.random.Philox(int(seed) % 2**64))
    return (rng.integers(0, 2**53, size=n, dtype=np.int64) + 0.5) / 2.0**53


def sample(p: MoeggParams, n, seed) -> np.ndarray:
    """Draw ``n`` values by inverse transform of :func:`uniforms`."""
    return np.asarray(quantile(p, uniforms(n, seed)))


def _check_count(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return int(n)


def gg_log_pdf(alpha, beta, lam, x):
    """Generalized Gompertz log density ``log(alpha beta e^(lam x) e^-u G^(alpha-1))``."""
    xa = _as_x(x)
    u = _u(beta, lam, xa)
    log_g = log1mexp(u)
    with np.errstate(invalid="ignore"):
        shape_term = 0.0 if alpha == 1.0 else (alpha - 1.0) * log_g
        value = math.log(alpha) + math.log(beta) + lam * xa - u + shape_term
    return _out(value, x)


def gg_pdf(alpha, beta, lam, x):
    with np.errstate(over="ignore"):
        return _out(np.exp(np.asarray(gg_log_pdf(alpha, beta, lam, x))), x)


def gg_cdf(alpha, beta, lam, x):
    xa = _as_x(x)
    return _out(np.exp(alpha * log1mexp(_u(beta, lam, xa))), x)


# ---------------------------------------------------------------------------
# sub-models


class SubModel(enum.Enum):
    """Special cases of the MOEGG family.

    Each member carries the parameters it pins and whether it is reached in
    the ``lam -> 0`` limit.  The limit families are evaluated as their own
    closed forms (``u = beta x``), not as MOEGG with a tiny ``lam``.
    """

    MOEGG = ("MOEGG", (), False)
    GG = ("GG", (("theta", 1.0),), False)
    GOMPERTZ = ("Gompertz", (("theta", 1.0), ("alpha", 1.0)), False)
    GENERALIZED_EXPONENTIAL = ("GE", (("theta", 1.0),), True)
    EXPONENTIAL = ("Exponential", (("theta", 1.0), ("alpha", 1.0)), True)
    MOE_GOMPERTZ = ("MOE-Gompertz", (("alpha", 1.0),), False)
    MOE_GEN_EXPONENTIAL = ("MOE-GE", (), True)
    MOE_EXPONENTIAL = ("MOE-Exponential", (("alpha", 1.0),), True)

    def __init__(self, label, fixed, lam_limit):
        self.label = label
        self.fixed = dict(fixed)
        self.lam_limit = lam_limit

    @property
    def free_parameters(self) -> tuple:
        names = ("alpha", "beta") + (() if self.lam_limit else ("lam",)) + ("theta",)
        return tuple(n for n in names if n not in self.fixed)

    @property
    def reduction(self) -> str:
        parts = [f"{k} = {v:g}" for k, v in self.fixed.items()]
        if self.lam_limit:
            parts.append("lam -> 0")
        return ", ".join(parts) if parts else "none"

    def _resolve(self, values):
        if len(values) != len(self.free_parameters):
            raise DomainError(
                f"{self.label} takes {len(self.free_parameters)} parameters "
                f"{self.free_parameters}, got {len(values)}"
            )
        full = dict(self.fixed)
        full.update(zip(self.free_parameters, (float(v) for v in values)))
        for name, value in full.items():
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a finite positive number, got {value}")
        full["lam"] = 0.0 if self.lam_limit else full["lam"]
        return full["alpha"], full["beta"], full["lam"], full["theta"]

    def to_params(self, values) -> MoeggParams:
        """Embed free parameters into a full MoeggParams (not for lam -> 0 members)."""
        if self.lam_limit:
            raise DomainError(f"{self.label} is a lam -> 0 limit and has no MOEGG parameter vector")
        return MoeggParams(*self._resolve(values))

    def log_pdf(self, values, x):
        xa = _as_x(x)
        return _out(_log_pdf(*self._resolve(values), xa), x)

    def cdf(self, values, x):
        xa = _as_x(x)
        return _out(np.exp(_log_cdf(*self._resolve(values), xa)), x)

    def sf(self, values, x):
        xa = _as_x(x)
        return _out(np.exp(_log_sf(*self._resolve(values), xa)), x)

    def quantile(self, values, u):
        ua = _check_prob(u)
        alpha, beta, lam, theta = self._resolve(values)
        r1 = (1.0 - ua) / (1.0 - (1.0 - theta) * ua)
        return _out(_invert(alpha, beta, lam, theta, r1), u)


def classify(p: MoeggParams) -> SubModel:
    """The most specific finite-``lam`` sub-model a parameter vector belongs to."""
    if p.theta == 1.0:
        return SubModel.GOMPERTZ if p.alpha == 1.0 else SubModel.GG
    return SubModel.MOE_GOMPERTZ if p.alpha == 1.0 else SubModel.MOEGG


# ---------------------------------------------------------------------------
# GG mixture representation

_INNER_TOL = 1e-15
_INNER_CAP = 10_000


class MixtureRegime(enum.Enum):
    THETA_BELOW_ONE = "theta_below_one"
    THETA_ABOVE_ONE = "theta_above_one"


@dataclass(frozen=True)
class MixtureCoefficients:
    """Weights ``c_i`` of ``f = sum_i c_i g(x; alpha (i + 1), beta, lam)`` for i < N."""

    regime: MixtureRegime
    weights: np.ndarray
    truncation: int
    inner_terms: tuple = field(default=())

    @property
    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.weights)


def _inner_series(i, theta_bar):
    """``sum_{j >= i} C(j, i) (j + 1) theta_bar^j`` summed with math.fsum.

    Terms are built in log space; the sum stops once past the peak the
    terms drop below 1e-15 relative to the running total, or at 10^4 terms.
    """
    log_tb = math.log(theta_bar)
    terms = []
    running = 0.0
    prev = -math.inf
    for j in range(i, i + _INNER_CAP):
        log_term = (
            math.lgamma(j + 1) - math.lgamma(i + 1) - math.lgamma(j - i + 1)
            + math.log(j + 1) + j * log_tb
        )
        terms.append(math.exp(log_term))
        running += terms[-1]
        if log_term < prev and terms[-1] < _INNER_TOL * running:
            break
        prev = log_term
    return math.fsum(terms), len(terms)


def mixture_coefficients(p: MoeggParams, N) -> MixtureCoefficients:
    """First N mixture weights.

    For theta > 1 the weights are ``theta^-1 (1 - theta^-1)^i``.  For theta < 1
    they are ``theta (-1)^i / (i + 1)`` times the inner series in ``theta_bar``.
    """
    N = _check_count(N)
    if p.theta == 1.0:
        raise DomainError("mixture expansion degenerates at theta = 1 (the GG sub-model)")
    if p.theta > 1.0:
        i = np.arange(N)
        weights = (1.0 / p.theta) * (1.0 - 1.0 / p.theta) ** i
        return MixtureCoefficients(MixtureRegime.THETA_ABOVE_ONE, weights, N)
    weights = np.empty(N)
    counts = []
    for i in range(N):
        inner, terms = _inner_series(i, p.theta_bar)
        weights[i] = p.theta * (-1.0) ** i / (i + 1) * inner
        counts.append(terms)
    return MixtureCoefficients(MixtureRegime.THETA_BELOW_ONE, weights, N, tuple(counts))


def mixture_pdf(p: MoeggParams, N, x):
    """Truncated mixture ``sum_{i<N} c_i g(x; alpha (i + 1), beta, lam)``."""
    coeffs = mixture_coefficients(p, N)
    xa = _as_x(x)
    total = np.zeros_like(xa, dtype=float)
    for i, c in enumerate(coeffs.weights):
        total = total + c * np.asarray(gg_pdf(p.alpha * (i + 1), p.beta, p.lam, xa))
    return _out(total, x)


def mixture_cdf(p: MoeggParams, N, x):
    coeffs = mixture_coefficients(p, N)
    xa = _as_x(x)
    total = np.zeros_like(xa, dtype=float)
    for i, c in enumerate(coeffs.weights):
        total = total + c * np.asarray(gg_cdf(p.alpha * (i + 1), p.beta, p.lam, xa))
    return _out(total, x)
