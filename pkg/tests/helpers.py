"""Shared oracles for the test suite (mpmath densities, K-S statistic, parameter draws)."""

import mpmath as mp
import numpy as np

from moegg.distribution import MoeggParams


def random_params(rng, count):
    out = []
    for _ in range(count):
        a, b, l, t = np.exp(rng.uniform(np.log([0.3, 0.1, 0.1, 0.1]), np.log([5, 3, 3, 10])))
        out.append(MoeggParams(a, b, l, t))
    return out


RANDOM_PARAMS = random_params(np.random.default_rng(20240611), 20)


def mp_pdf(p, x):
    a, b, l, t = (mp.mpf(v) for v in (p.alpha, p.beta, p.lam, p.theta))
    x = mp.mpf(x)
    u = b / l * mp.expm1(l * x)
    g = -mp.expm1(-u)
    return a * b * t * mp.exp(l * x - u) * g ** (a - 1) / (t + (1 - t) * g**a) ** 2


def mp_cdf(p, x):
    a, b, l, t = (mp.mpf(v) for v in (p.alpha, p.beta, p.lam, p.theta))
    g = -mp.expm1(-b / l * mp.expm1(l * mp.mpf(x)))
    return g**a / (t + (1 - t) * g**a)


def ks_stat(values, cdf_fn):
    xs = np.sort(values)
    n = len(xs)
    u = cdf_fn(xs)
    i = np.arange(1, n + 1)
    return max(np.max(i / n - u), np.max(u - (i - 1) / n))
