"""Analytical properties of the MOEGG distribution.

Every quantity has a quadrature evaluator, which is the authoritative one.
Where a closed-form series exists it is exposed as a ``*_series`` function
returning a :class:`SeriesResult`; those are cross-checks.  The series sum
generalized binomial coefficients with alternating signs, so their accuracy
is limited by cancellation and each result carries a roundoff estimate and
a convergence flag rather than a silently wrong value.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import distribution as dist
from .distribution import MoeggParams
from .exceptions import DomainError
from .specialfn import (
    DEFAULT_QUADRATURE,
    QuadratureConfig,
    integrate_interval,
    scaled_gen_integro_exponential,
    scaled_upper_incomplete_gamma,
)

_EPS = float(np.finfo(float).eps)
_TAIL = 1e-14
_BREAK_PROBS = (1e-6, 1e-3, 0.1, 0.5, 0.9, 0.999)
MAX_MOMENT_ORDER = 8


@dataclass(frozen=True)
class SeriesTruncation:
    """Caps for the outer and inner sums and the relative term tolerance."""

    max_outer: int = 200
    max_inner: int = 500
    term_tol: float = 1e-14

    def __post_init__(self):
        if int(self.max_outer) < 1 or int(self.max_inner) < 1 or not self.term_tol > 0:
            raise DomainError("series truncation limits must be positive")


DEFAULT_TRUNCATION = SeriesTruncation()


@dataclass(frozen=True)
class SeriesResult:
    """Value of a truncated series.

    ``converged`` is set when ``error_estimate`` is below 1e-5 of the value,
    i.e. the partial sums stabilized and the remainder is small.
    ``error_estimate`` combines the roundoff bound, the estimated
    truncation remainders and the spread of the tail extrapolation.
    """

    value: float
    converged: bool
    terms: int
    error_estimate: float


@dataclass(frozen=True)
class MomentSummary:
    raw_moments: tuple
    variance: float
    skewness: float
    kurtosis: float

    @property
    def excess_kurtosis(self) -> float:
        return self.kurtosis - 3.0


@dataclass(frozen=True)
class OrderingReport:
    """Grid checks of the orderings between two tilts of the same baseline.

    ``likelihood_ratio``: f1/f2 strictly decreasing.  ``stochastic``:
    F1 >= F2 everywhere.  ``hazard_rate``: S1/S2 nonincreasing.
    ``reversed_hazard``: F1/F2 nonincreasing.
    """

    likelihood_ratio: bool
    stochastic: bool
    hazard_rate: bool
    reversed_hazard: bool
    vacuous: bool = False

    @property
    def all_hold(self) -> bool:
        return self.likelihood_ratio and self.stochastic and self.hazard_rate and self.reversed_hazard


# ---------------------------------------------------------------------------
# quadrature plumbing


def log_isf(p: MoeggParams, log_q):
    """Upper quantile at survival probability ``e^log_q``, valid far below 1e-308."""
    if log_q >= 0:
        raise DomainError("log_q must be negative")
    if log_q > -700.0:
        return dist.isf(p, math.exp(log_q))
    # 1 - G^alpha = q / theta to leading order, and 1 - G^alpha ~ alpha e^-u
    u = math.log(p.alpha) - (log_q - math.log(p.theta))
    return math.log1p(p.lam * u / p.beta) / p.lam


def _edges(p, lo, hi):
    pts = [dist.quantile(p, q) for q in _BREAK_PROBS]
    return [lo] + sorted(x for x in pts if lo < x < hi) + [hi]


def _integrate(p, f, lo=0.0, hi=None, cfg: QuadratureConfig = DEFAULT_QUADRATURE):
    """Integrate ``f`` over [lo, hi] piecewise between quantile breakpoints.

    ``hi`` defaults to the point where the survival function reaches 1e-14;
    the doubly exponential tail makes the remainder negligible.
    """
    if hi is None:
        hi = dist.isf(p, _TAIL)
    if hi <= lo:
        return 0.0
    edges = _edges(p, lo, hi)
    if p.alpha < 1.0:
        # f ~ x^(alpha - 1) at the origin; x = s^(1/alpha) makes the integrand smooth there
        m = 1.0 / p.alpha

        def smooth(s):
            return f(s**m) * m * s ** (m - 1.0) if s > 0 else 0.0

        pieces = [integrate_interval(smooth, a**p.alpha, b**p.alpha, cfg) for a, b in zip(edges[:-1], edges[1:])]
    else:
        pieces = [integrate_interval(f, a, b, cfg) for a, b in zip(edges[:-1], edges[1:])]
    return math.fsum(pieces)


def _check_order(r, cap=MAX_MOMENT_ORDER):
    if isinstance(r, bool) or int(r) != r or not 1 <= r <= cap:
        raise DomainError(f"moment order must be an integer in [1, {cap}], got {r}")
    return int(r)


# ---------------------------------------------------------------------------
# moments


def raw_moment(p: MoeggParams, r, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """``E X^r`` by quadrature of ``x^r f(x)``."""
    r = _check_order(r)
    return _integrate(p, lambda x: x**r * dist.pdf(p, x), cfg=cfg)


def central_stats(p: MoeggParams, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> MomentSummary:
    """First four raw moments with variance, skewness and ``mu4 / mu2^2``.

    Central moments use ``mu_q = sum_m (-1)^m C(q, m) mu^m E X^(q-m)``.
    """
    m = [1.0] + [raw_moment(p, r, cfg) for r in range(1, 5)]
    mu = m[1]

    def central(q):
        return math.fsum((-1) ** k * math.comb(q, k) * mu**k * m[q - k] for k in range(q + 1))

    mu2, mu3, mu4 = central(2), central(3), central(4)
    return MomentSummary(tuple(m[1:]), mu2, mu3 / mu2**1.5, mu4 / mu2**2)


def mgf(p: MoeggParams, t, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """``E e^(tX)`` by quadrature; ``inf`` when the integral overflows."""
    t = float(t)

    def integrand(x):
        return math.exp(t * x + dist.log_pdf(p, x))

    try:
        return _integrate(p, integrand, cfg=cfg)
    except OverflowError:
        return math.inf


# ---------------------------------------------------------------------------
# series machinery


@dataclass
class _Partial:
    value: float
    roundoff: float
    converged: bool
    terms: int
    truncation: float = 0.0


def _binomial_sum(a, h, trunc: SeriesTruncation) -> _Partial:
    """``sum_j C(a, j) (-1)^j h(j)`` with an iteratively built coefficient.

    Terminates exactly when ``a`` is a nonnegative integer.  When the cap is
    hit the terms of these sums have settled into a one-signed power law, so
    the remainder is estimated by the integral test with the decay exponent
    fitted on the second half of the terms.
    """
    coef = 1.0
    terms = []
    running = 0.0
    magnitude = 0.0
    cap = int(trunc.max_inner)
    for j in range(cap):
        if j:
            coef *= (j - 1 - a) / j
            if coef == 0.0:
                return _Partial(math.fsum(terms), _roundoff(magnitude, j), True, j)
        term = coef * h(j)
        terms.append(term)
        running += term
        magnitude += abs(term)
        if j and abs(term) <= trunc.term_tol * abs(running):
            return _Partial(math.fsum(terms), _roundoff(magnitude, j + 1), True, j + 1)
    value = math.fsum(terms)
    tail, tail_err = _power_law_tail(terms)
    return _Partial(value + tail, _roundoff(magnitude, cap), False, cap, tail_err)


def _roundoff(magnitude, count):
    # each term carries a few ulps, growing slowly with the coefficient recurrence
    return 2.0 * _EPS * magnitude * math.sqrt(count)


def _power_law_tail(terms):
    """Remainder of a one-signed tail ``t_j ~ C j^-s`` after the last term."""
    n = len(terms)
    if n < 16:
        return 0.0, math.inf
    last = terms[n // 2:]
    if not (all(t > 0 for t in last) or all(t < 0 for t in last)):
        return 0.0, abs(terms[-1]) * n

    def estimate(j_lo, j_hi):
        exponent = math.log(terms[j_lo] / terms[j_hi]) / math.log(j_hi / j_lo)
        if exponent <= 1.0:
            return math.inf
        big_j = n - 1
        return terms[-1] * (big_j + 0.5) / (exponent - 1.0) * (big_j / (big_j + 0.5)) ** exponent

    fine = estimate(n // 2, n - 1)
    coarse = estimate(n // 4, n // 2)
    if not (math.isfinite(fine) and math.isfinite(coarse)):
        return 0.0, math.inf
    return fine, abs(fine - coarse)


def _cached(fn):
    return functools.lru_cache(maxsize=None)(fn)


@functools.lru_cache(maxsize=64)
def _weights(theta, n):
    return tuple(dist.mixture_coefficients(MoeggParams(1.0, 1.0, 1.0, theta), n).weights)


_NOISE_STOP = 1e-7
_FLAG_REL = 1e-5


def _outer_sum(weights, component, trunc: SeriesTruncation, total_weight=None) -> SeriesResult:
    """``sum_i w_i component(i)``.

    Stops when a contribution drops below the tolerance or at the end of
    ``weights``.  Components of high index come from alternating inner sums
    that lose digits to cancellation; once that loss passes ``_NOISE_STOP``
    the remaining components are extrapolated from the clean ones by a
    quadratic in ``log(i + 1)`` (they vary slowly, like powers of a log),
    with the linear extrapolation used as the error estimate.  If the weights
    have a known total, the mass beyond ``weights`` is carried by the last
    extrapolated component.
    """
    weights = list(weights)
    parts = []
    comps = []
    running = 0.0
    roundoff = 0.0
    truncation = 0.0
    reached_tol = False
    stop = len(weights)
    for i, w in enumerate(weights):
        if w == 0.0:
            reached_tol = True
            stop = i
            break
        comp = component(i)
        if comp.roundoff >= _NOISE_STOP * abs(comp.value):
            stop = i
            break
        contrib = w * comp.value
        parts.append(contrib)
        comps.append(comp.value)
        running += contrib
        roundoff += abs(w) * comp.roundoff
        truncation += abs(w) * comp.truncation
        if i and abs(contrib) <= trunc.term_tol * abs(running):
            reached_tol = True
            stop = i + 1
            break
    value = math.fsum(parts)
    if reached_tol:
        error = roundoff + truncation + abs(parts[-1])
        return SeriesResult(float(value), bool(error <= _FLAG_REL * abs(value)), len(parts), float(error))
    if len(comps) < 3:
        error = roundoff + truncation + (abs(parts[-1]) if parts else math.inf)
        return SeriesResult(value, False, len(parts), error)
    n = len(comps)
    xs = [math.log(n - 2), math.log(n - 1), math.log(n)]
    ys = comps[-3:]

    def quad(i):
        x = math.log(i + 1)
        total = 0.0
        for a in range(3):
            basis = 1.0
            for b in range(3):
                if b != a:
                    basis *= (x - xs[b]) / (xs[a] - xs[b])
            total += ys[a] * basis
        return total

    # a + b log(m) + c / m: the leading large-shape behaviour of the
    # components, which grow or decay slowly in the shape m
    basis = (lambda i: 1.0, lambda i: math.log(i + 1), lambda i: 1.0 / (i + 1))
    rows = [[f(i) for f in basis] for i in range(n - 3, n)]
    coef = np.linalg.solve(np.array(rows), np.array(ys))

    def model(i):
        return float(sum(c * f(i) for c, f in zip(coef, basis)))

    tail_q = []
    tail_l = []
    last = stop - 1
    for i in range(stop, len(weights)):
        w = weights[i]
        tail_q.append(w * model(i))
        tail_l.append(w * quad(i))
        last = i
        if abs(tail_q[-1]) <= trunc.term_tol * abs(running + math.fsum(tail_q)):
            total_weight = None
            break
    if total_weight is not None:
        rest = total_weight - math.fsum(weights[: last + 1])
        tail_q.append(rest * model(last))
        tail_l.append(rest * quad(last))
    extra = math.fsum(tail_q)
    error = roundoff + truncation + abs(extra - math.fsum(tail_l))
    value += extra
    return SeriesResult(float(value), bool(error <= _FLAG_REL * abs(value)), len(parts), float(error))


def _mixture_series(p: MoeggParams, trunc, gg_component) -> SeriesResult:
    """Sum a GG-component quantity over the mixture weights of ``p``.

    ``gg_component(m)`` returns a :class:`_Partial` for shape ``m``.  At
    theta = 1 there is no expansion (the law is GG itself) and the call is
    rejected, as for :func:`moegg.distribution.mixture_coefficients`.
    """
    if p.theta == 1.0:
        raise DomainError("the mixture series needs theta != 1")
    weights = _weights(p.theta, int(trunc.max_outer))
    # the weights are (-theta_bar/theta)^i / theta, summing to 1 when theta > 1/2
    total = 1.0 if p.theta > 0.5 else None
    return _outer_sum(weights, lambda i: gg_component(p.alpha * (i + 1)), trunc, total)


def raw_moment_series(p: MoeggParams, r, trunc: SeriesTruncation = DEFAULT_TRUNCATION) -> SeriesResult:
    """Double series for ``E X^r`` through the generalized integro-exponential.

    Each GG component is
    ``m r! / lam^r sum_j C(m-1, j) (-1)^j e^(c_j) E_1^(r-1)(c_j) / (j+1)``
    with ``m = alpha (i + 1)`` and ``c_j = (beta/lam)(j + 1)``.  The weights
    are w_i for theta < 1 and v_i for theta > 1.
    """
    r = _check_order(r)
    scale = math.factorial(r) / p.lam**r

    @_cached
    def h(j):
        c = p.beta / p.lam * (j + 1)
        if r == 1:
            return scaled_upper_incomplete_gamma(0.0, c) / (j + 1)
        return scaled_gen_integro_exponential(1.0, r - 1, c) / (j + 1)

    def component(m):
        s = _binomial_sum(m - 1.0, h, trunc)
        k = m * scale
        return _Partial(k * s.value, abs(k) * s.roundoff, s.converged, s.terms, abs(k) * s.truncation)

    return _mixture_series(p, trunc, component)


def mgf_series(p: MoeggParams, t, trunc: SeriesTruncation = DEFAULT_TRUNCATION) -> SeriesResult:
    """Incomplete-gamma series for the MGF.

    Each GG component is
    ``m (lam/beta)^(t/lam) sum_j C(m-1, j) (-1)^j e^(c_j) Gamma(t/lam + 1, c_j) / (j+1)^(t/lam+1)``.
    """
    t = float(t)
    s = t / p.lam + 1.0
    prefactor = (p.lam / p.beta) ** (t / p.lam)

    @_cached
    def h(j):
        c = p.beta / p.lam * (j + 1)
        return scaled_upper_incomplete_gamma(s, c) / (j + 1) ** s

    def component(m):
        b = _binomial_sum(m - 1.0, h, trunc)
        k = m * prefactor
        return _Partial(k * b.value, abs(k) * b.roundoff, b.converged, b.terms, abs(k) * b.truncation)

    return _mixture_series(p, trunc, component)


# ---------------------------------------------------------------------------
# mean deviations and residual life


def partial_first_moment(p: MoeggParams, eta, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """``T(eta) = int_eta^inf x f(x) dx``."""
    return _integrate(p, lambda x: x * dist.pdf(p, x), lo=float(eta), cfg=cfg)


def mean_deviations(p: MoeggParams, cfg: QuadratureConfig = DEFAULT_QUADRATURE):
    """``(E|X - mu|, E|X - M|)`` with M the median, both by direct quadrature."""
    mu = raw_moment(p, 1, cfg)
    median = dist.quantile(p, 0.5)
    return _abs_deviation(p, mu, cfg), _abs_deviation(p, median, cfg)


def _abs_deviation(p, center, cfg):
    # split at the kink so each piece is smooth
    hi = dist.isf(p, _TAIL)
    left = _integrate(p, lambda x: (center - x) * dist.pdf(p, x), lo=0.0, hi=min(center, hi), cfg=cfg)
    right = _integrate(p, lambda x: (x - center) * dist.pdf(p, x), lo=center, hi=hi, cfg=cfg)
    return left + right


def partial_first_moment_series(p: MoeggParams, eta, trunc: SeriesTruncation = DEFAULT_TRUNCATION) -> SeriesResult:
    """Series for ``T(eta)``.

    Each GG component is ``(m/lam) sum_j C(m-1, j) (-1)^j e^(c_j)
    [lam eta e^(-Y_j) + Gamma(0, Y_j)] / (j + 1)`` with ``Y_j = c_j e^(lam eta)``.
    """
    eta = float(eta)
    growth = math.exp(p.lam * eta)

    @_cached
    def h(j):
        c = p.beta / p.lam * (j + 1)
        y = c * growth
        damp = math.exp(c - y)
        return damp * (p.lam * eta + scaled_upper_incomplete_gamma(0.0, y)) / (j + 1)

    def component(m):
        b = _binomial_sum(m - 1.0, h, trunc)
        k = m / p.lam
        return _Partial(k * b.value, abs(k) * b.roundoff, b.converged, b.terms, abs(k) * b.truncation)

    return _mixture_series(p, trunc, component)


def mean_deviations_series(p: MoeggParams, trunc: SeriesTruncation = DEFAULT_TRUNCATION):
    """Series forms ``delta1 = 2 mu F(mu) - 2 mu + 2 T(mu)`` and ``delta2 = -mu + 2 T(M)``.

    The mean is itself taken from :func:`raw_moment_series`.  Returns two
    :class:`SeriesResult` values.
    """
    mean = raw_moment_series(p, 1, trunc)
    mu = mean.value
    if not (math.isfinite(mu) and mu > 0):
        bad = SeriesResult(math.nan, False, mean.terms, math.inf)
        return bad, bad
    median = dist.quantile(p, 0.5)
    t_mu = partial_first_moment_series(p, mu, trunc)
    t_med = partial_first_moment_series(p, median, trunc)
    d1 = 2 * mu * dist.cdf(p, mu) - 2 * mu + 2 * t_mu.value
    d2 = -mu + 2 * t_med.value
    err1 = 2 * t_mu.error_estimate + 2 * mean.error_estimate
    err2 = 2 * t_med.error_estimate + mean.error_estimate
    return (
        SeriesResult(d1, mean.converged and t_mu.converged, mean.terms + t_mu.terms, err1),
        SeriesResult(d2, mean.converged and t_med.converged, mean.terms + t_med.terms, err2),
    )


def mean_residual_life(p: MoeggParams, t, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """``int_t^inf S(x) dx / S(t)``, integrating the survival ratio ``S(x)/S(t)``.

    The integration range ends where the ratio drops below 1e-14.  Beyond ``t``
    the ratio decays like ``exp(-(beta/lam) e^(lam t) expm1(lam (x - t)))`` up to
    bounded factors, which fixes that endpoint without evaluating ``S``.
    """
    t = float(t)
    if t < 0:
        raise DomainError("t must be nonnegative")
    log_s0 = dist.log_sf(p, t)
    if not math.isfinite(log_s0):
        raise DomainError(f"survival underflows at t = {t}")
    target = -math.log(_TAIL) + abs(math.log(p.theta)) + abs(math.log(p.alpha)) + 1.0
    log_scale = math.log(p.beta / p.lam) + p.lam * t
    width = math.log1p(target * math.exp(-log_scale)) / p.lam

    def ratio(w):
        return math.exp(dist.log_sf_ratio(p, t, w))

    # tolerances are relative to the (possibly tiny) width of the range
    scaled = QuadratureConfig(cfg.abs_tol * width, cfg.rel_tol, cfg.max_subdivisions)
    edges = [0.0] + [width * f for f in (0.01, 0.1, 0.3)] + [width]
    return math.fsum(integrate_interval(ratio, a, b, scaled) for a, b in zip(edges[:-1], edges[1:]))


# ---------------------------------------------------------------------------
# entropy


def _check_renyi(p, s):
    s = float(s)
    if not s > 0 or s == 1.0 or not math.isfinite(s):
        raise DomainError(f"Renyi order must be positive and different from 1, got {s}")
    if s * (p.alpha - 1.0) <= -1.0:
        raise DomainError("integral of f^s diverges at the origin (s (alpha - 1) <= -1)")
    return s


def renyi_integral(p: MoeggParams, s, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """``int f^s dx`` by quadrature.  For s < 1 the tail of f^s is heavier,
    so the range extends to survival ``10^(-15/s)``."""
    s = _check_renyi(p, s)
    log_q = max(-15.0 / min(s, 1.0), -300.0) * math.log(10.0)
    hi = log_isf(p, log_q)

    def integrand(x):
        lp = dist.log_pdf(p, x)
        return math.exp(s * lp) if lp < math.inf else math.inf

    edges = _edges(p, 0.0, hi)
    return math.fsum(integrate_interval(integrand, a, b, cfg) for a, b in zip(edges[:-1], edges[1:]))


def renyi_entropy(p: MoeggParams, s, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """``I_R(s) = ln(int f^s) / (1 - s)``."""
    s = _check_renyi(p, s)
    return math.log(renyi_integral(p, s, cfg)) / (1.0 - s)


def shannon_entropy(p: MoeggParams, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """``-int f ln f dx``."""

    def integrand(x):
        lp = dist.log_pdf(p, x)
        return 0.0 if lp == -math.inf else -math.exp(lp) * lp

    return _integrate(p, integrand, cfg=cfg)


def renyi_integral_series(p: MoeggParams, s, trunc: SeriesTruncation = DEFAULT_TRUNCATION) -> SeriesResult:
    """Series for ``int f^s``.

    With ``K(k) = e^(c_k) Gamma(s, c_k) / (k + s)^s`` and ``c_k = (beta/lam)(k + s)``:

    theta > 1/2:
        ``lam^(s-1) alpha^s theta^-s sum_j C(2s+j-1, j) (1 - 1/theta)^j
        sum_k C(alpha j + s(alpha-1), k) (-1)^k K(k)``

    theta <= 1/2:
        ``(alpha lam theta)^s / lam sum_j C(2s+j-1, j) theta_bar^j
        sum_{i<=j} C(j, i) (-1)^i sum_k C(alpha i + s(alpha-1), k) (-1)^k K(k)``
    """
    s = _check_renyi(p, s)

    @_cached
    def kernel(k):
        c = p.beta / p.lam * (k + s)
        return scaled_upper_incomplete_gamma(s, c) / (k + s) ** s

    @_cached
    def inner(i):
        return _binomial_sum(p.alpha * i + s * (p.alpha - 1.0), kernel, trunc)

    def outer_weights(ratio):
        w = 1.0
        out = []
        for j in range(int(trunc.max_outer)):
            if j:
                w *= (2 * s + j - 1) / j * ratio
            out.append(w)
        return out

    if p.theta > 0.5:
        # for 1/2 < theta < 1 the theta < 1 double sum collapses to this form
        # (sum over j >= i of C(2s+j-1, j) C(j, i) theta_bar^j is closed form)
        prefactor = p.lam ** (s - 1) * p.alpha**s * p.theta ** (-s)
        weights = outer_weights(1.0 - 1.0 / p.theta) if p.theta != 1.0 else [1.0]
        res = _outer_sum(weights, inner, trunc, p.theta ** (2 * s))
    else:
        prefactor = (p.alpha * p.lam * p.theta) ** s / p.lam

        @_cached
        def middle(j):
            parts = []
            roundoff = 0.0
            truncation = 0.0
            ok = True
            for i in range(j + 1):
                b = inner(i)
                c = math.comb(j, i) * (-1) ** i
                parts.append(c * b.value)
                roundoff += abs(c) * b.roundoff
                truncation += abs(c) * b.truncation
                ok = ok and b.converged
            value = math.fsum(parts)
            roundoff += _EPS * math.fsum(abs(x) for x in parts)
            return _Partial(value, roundoff, ok, j + 1, truncation)

        res = _outer_sum(outer_weights(p.theta_bar), middle, trunc)
    return SeriesResult(prefactor * res.value, res.converged, res.terms, prefactor * res.error_estimate)


def renyi_entropy_series(p: MoeggParams, s, trunc: SeriesTruncation = DEFAULT_TRUNCATION) -> SeriesResult:
    s = _check_renyi(p, s)
    res = renyi_integral_series(p, s, trunc)
    if not res.value > 0:
        return SeriesResult(math.nan, False, res.terms, math.inf)
    value = math.log(res.value) / (1.0 - s)
    err = res.error_estimate / (res.value * abs(1.0 - s))
    return SeriesResult(value, res.converged, res.terms, err)


# ---------------------------------------------------------------------------
# order statistics


def _check_indices(k, n):
    for name, v in (("k", k), ("n", n)):
        if isinstance(v, bool) or int(v) != v:
            raise DomainError(f"{name} must be an integer, got {v}")
    k, n = int(k), int(n)
    if not 1 <= k <= n:
        raise DomainError(f"order statistic indices need 1 <= k <= n, got k={k}, n={n}")
    return k, n


def _log_order_const(k, n):
    return math.lgamma(n + 1) - math.lgamma(k) - math.lgamma(n - k + 1)


def order_stat_pdf(p: MoeggParams, k, n, x):
    """Density of the k-th smallest of n: ``n!/((k-1)!(n-k)!) f F^(k-1) S^(n-k)``."""
    k, n = _check_indices(k, n)
    xa = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        lf = np.asarray(dist.log_pdf(p, xa))
        lcdf = np.log(np.asarray(dist.cdf(p, xa))) if k > 1 else 0.0
        lsf = np.asarray(dist.log_sf(p, xa)) if n > k else 0.0
        value = np.exp(_log_order_const(k, n) + lf + (k - 1) * lcdf + (n - k) * lsf)
    if k == 1 and n == 1:
        value = np.asarray(dist.pdf(p, xa))
    return float(value) if np.ndim(x) == 0 else value


def order_stat_moment(p: MoeggParams, k, n, r, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """``E X_{k:n}^r`` by quadrature."""
    k, n = _check_indices(k, n)
    r = _check_order(r, cap=4)
    return _integrate(p, lambda x: x**r * order_stat_pdf(p, k, n, x), cfg=cfg)


def order_stat_pdf_series(p: MoeggParams, k, n, x, trunc: SeriesTruncation = DEFAULT_TRUNCATION) -> SeriesResult:
    """GG-mixture series for the order-statistic density at a point.

    Expanding ``(1 - F)^(n-k)`` and using ``f F^(q-1) = (1/q) d F^q / dx``
    with ``q = k + j``:

    theta >= 1:
        ``F^q = theta^-q sum_i C(q+i-1, i) (1 - 1/theta)^i G^(alpha(q+i))``
    theta < 1:
        ``F^q = sum_i C(q+i-1, i) theta_bar^i sum_{l<=i} C(i, l) (-1)^l G^(alpha(q+l))``

    and each ``d G^(alpha m) / dx`` is the GG density with shape ``alpha m``.
    """
    k, n = _check_indices(k, n)
    x = float(x)
    const = math.exp(_log_order_const(k, n))

    @_cached
    def g(m):
        return dist.gg_pdf(p.alpha * m, p.beta, p.lam, x)

    total = []
    converged = True
    terms = 0
    err = 0.0
    for j in range(n - k + 1):
        q = k + j
        sign = math.comb(n - k, j) * (-1) ** j / q
        if p.theta >= 1.0:
            rho = 1.0 - 1.0 / p.theta
            scale = p.theta ** (-q)

            def comp(i, q=q):
                return _Partial(g(q + i), 0.0, True, 1)

            if rho == 0.0:
                res = SeriesResult(g(q), True, 1, 0.0)
            else:
                res = _outer_sum(_neg_binomial_weights(q, rho, trunc), comp, trunc, p.theta**q)
        else:
            scale = 1.0

            def comp(i, q=q):
                parts = [math.comb(i, l) * (-1) ** l * g(q + l) for l in range(i + 1)]
                value = math.fsum(parts)
                return _Partial(value, _EPS * math.fsum(abs(v) for v in parts), True, i + 1)

            res = _outer_sum(_neg_binomial_weights(q, p.theta_bar, trunc), comp, trunc)
        total.append(sign * scale * res.value)
        err += abs(sign * scale) * res.error_estimate
        converged = converged and res.converged
        terms += res.terms
    value = const * math.fsum(total)
    return SeriesResult(value, converged, terms, const * err)


def _neg_binomial_weights(q, ratio, trunc):
    """``C(q+i-1, i) ratio^i`` for i < max_outer, stopping once they underflow."""
    w = 1.0
    out = [w]
    for i in range(1, int(trunc.max_outer)):
        w *= (q + i - 1) / i * ratio
        if w == 0.0:
            break
        out.append(w)
    return out


def order_stat_coefficient_c(p: MoeggParams, k, n, i, j, l, m) -> float:
    """Mixture coefficient ``c_ijlm`` of the theta < 1 order-statistic expansion, as printed.

    ``n! theta (1-theta)^j C(i,l) C(i+j+k, i) C(i+j-l+k-1, m) (-1)^(i+j-l+m)
    / ((k-1)! (n-k)! (m+1)!)``, paired with the GG shape ``alpha (m + 1)``.
    """
    k, n = _check_indices(k, n)
    top = i + j - l + k - 1
    if not (0 <= j <= n - k and 0 <= l <= i and 0 <= m <= top):
        return 0.0
    num = (
        math.factorial(n) * p.theta * (1 - p.theta) ** j * math.comb(i, l)
        * math.comb(i + j + k, i) * math.comb(top, m) * (-1) ** (i + j - l + m)
    )
    return num / (math.factorial(k - 1) * math.factorial(n - k) * math.factorial(m + 1))


def order_stat_coefficient_t(p: MoeggParams, k, n, i, j, l) -> float:
    """Mixture coefficient ``t_ijl`` of the theta > 1 expansion, as printed.

    ``n! (theta-1)^j C(i+j+k, i) C(i+j+k-1, l) (-1)^(j+l)
    / (theta^(i+j+k) (k-1)! (n-k)! (l+1)!)``, paired with the GG shape
    ``alpha (l + 1)``.  The second binomial is read with lower index l, the
    only free index in range.
    """
    k, n = _check_indices(k, n)
    top = i + j + k - 1
    if not (0 <= j <= n - k and 0 <= l <= top):
        return 0.0
    num = (
        math.factorial(n) * (p.theta - 1) ** j * math.comb(i + j + k, i)
        * math.comb(top, l) * (-1) ** (j + l)
    )
    return num / (p.theta ** (i + j + k) * math.factorial(k - 1) * math.factorial(n - k) * math.factorial(l + 1))


def order_stat_coefficient_total(p: MoeggParams, k, n, max_i) -> float:
    """Partial total of the printed coefficients over i < max_i (and every j, l, m)."""
    k, n = _check_indices(k, n)
    parts = []
    for i in range(int(max_i)):
        for j in range(n - k + 1):
            if p.theta < 1.0:
                for l in range(i + 1):
                    for m in range(i + j - l + k):
                        parts.append(order_stat_coefficient_c(p, k, n, i, j, l, m))
            else:
                for l in range(i + j + k):
                    parts.append(order_stat_coefficient_t(p, k, n, i, j, l))
    return math.fsum(parts)


def order_stat_pdf_printed(p: MoeggParams, k, n, x, max_i) -> float:
    """Truncated printed expansion ``sum c g(x; alpha(m+1))`` (or with t_ijl)."""
    k, n = _check_indices(k, n)
    parts = []
    for i in range(int(max_i)):
        for j in range(n - k + 1):
            if p.theta < 1.0:
                for l in range(i + 1):
                    for m in range(i + j - l + k):
                        c = order_stat_coefficient_c(p, k, n, i, j, l, m)
                        parts.append(c * dist.gg_pdf(p.alpha * (m + 1), p.beta, p.lam, x))
            else:
                for l in range(i + j + k):
                    c = order_stat_coefficient_t(p, k, n, i, j, l)
                    parts.append(c * dist.gg_pdf(p.alpha * (l + 1), p.beta, p.lam, x))
    return math.fsum(parts)


# ---------------------------------------------------------------------------
# stochastic orderings


def likelihood_ratio_order_check(p1: MoeggParams, p2: MoeggParams, grid) -> OrderingReport:
    """Check on a grid the orderings implied when theta1 < theta2."""
    if (p1.alpha, p1.beta, p1.lam) != (p2.alpha, p2.beta, p2.lam):
        raise DomainError("orderings compare tilts of one baseline: alpha, beta, lam must match")
    xs = np.asarray(grid, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or np.any(xs <= 0) or np.any(np.diff(xs) <= 0):
        raise DomainError("grid must be a strictly increasing sequence of positive reals")
    if p1.theta == p2.theta:
        return OrderingReport(True, True, True, True, vacuous=True)
    # with a shared baseline every ratio depends on x only through the tilt
    # denominators D = theta + theta_bar G^alpha, so all common terms cancel
    # exactly: f1/f2 = (theta1/theta2)(D2/D1)^2, S1/S2 = (theta1/theta2)(D2/D1),
    # F1/F2 = D2/D1.  The three monotonicity checks therefore all test D2/D1;
    # the stochastic check compares the cdfs directly.
    a, b, lam = p1.alpha, p1.beta, p1.lam
    log_d1 = np.asarray(dist._parts(a, b, lam, p1.theta, xs).log_d)
    log_d2 = np.asarray(dist._parts(a, b, lam, p2.theta, xs).log_d)
    shift = log_d2 - log_d1
    log_ratio = math.log(p1.theta / p2.theta) + 2.0 * shift
    # the ratio flattens in the tail, so decreasing is judged up to roundoff
    slack = 8 * _EPS * np.maximum(np.abs(log_ratio[1:]), 1.0)
    lr = bool(np.all(np.diff(log_ratio) < slack))
    st = bool(np.all(np.asarray(dist.cdf(p1, xs)) >= np.asarray(dist.cdf(p2, xs))))
    hr = bool(np.all(np.diff(shift) <= slack))
    rhr = bool(np.all(np.diff(shift) <= slack))
    return OrderingReport(lr, st, hr, rhr)
