"""Independent reference computations used by the tests.

Nothing here calls the package's quantile-process code. The stick-breaking
sampler draws random distributions from the DP posterior directly and reads
off their quantiles; the order-statistic scans enumerate ranks one by one.
"""

import math
from fractions import Fraction

import numpy as np
from scipy import special, stats


def _at_least(value, k, n, p, gamma):
    """``P(Bin(n, p) <= k) >= gamma`` given its float value.

    Within rounding distance of ``gamma`` the comparison is redone in
    integers on the exact binary values of ``p`` and ``gamma``.
    """
    if abs(value - gamma) > 1e-9:
        return value >= gamma
    p, g = Fraction(p), Fraction(gamma)
    a, d = p.numerator, p.denominator
    b = d - a
    # Horner form of sum_{j<=k} C(n, j) a^j b^(k-j), then scale by b^(n-k)
    acc, c, aj = 0, 1, 1
    for j in range(k + 1):
        acc = acc * b + c * aj
        c = c * (n - j) // (j + 1)
        aj *= a
    num = acc * b ** (n - k)
    return num * g.denominator >= g.numerator * d**n


def wilks_rank_scan(n, beta, gamma):
    """Smallest m in 1..n with P(Bin(n, beta) <= m - 1) >= gamma, else None.

    The CDF is the running sum of pmf terms computed from log-gamma.
    """
    j = np.arange(n + 1)
    logpmf = (special.gammaln(n + 1) - special.gammaln(j + 1) - special.gammaln(n - j + 1)
              + j * math.log(beta) + (n - j) * math.log1p(-beta))
    acc = np.cumsum(np.exp(logpmf))
    for m in range(1, n + 1):
        if _at_least(acc[m - 1], m - 1, n, beta, gamma):
            return m
    return None


def beta_condition_scan(n, beta, gamma, shift=1):
    """Smallest m in 1..n with ``1 - Be(beta; m + shift, n + shift - m) >= gamma``.

    ``shift=1`` is the binomial form ``P(Bin(n+1, beta) <= m) >= gamma``
    written through the Beta-Binomial identity; ``shift=0`` is the form
    obtained by inverting the ``a = 0`` quantile process directly.
    """
    m = np.arange(1, n + 1)
    b = n + shift - m
    m, b = m[b > 0], b[b > 0]
    vals = 1.0 - stats.beta.cdf(beta, m + shift, b)
    for mi, v in zip(m, vals):
        # 1 - Be(p; k + 1, N - k) = P(Bin(N, p) <= k) with N = n + 2*shift - 1
        if _at_least(v, int(mi) + shift - 1, n + 2 * shift - 1, beta, gamma):
            return int(mi)
    return None


def stick_breaking_quantiles(data, a, base, qs, draws, rng, batch=2000, leftover=1e-8):
    """Quantiles ``Q(q)``, ``q`` in ``qs``, of ``draws`` random distributions.

    Returns an array of shape ``(draws, len(qs))``. The random distributions
    are independent draws from the DP posterior.

    Each random distribution is built by stick breaking with concentration
    ``a + n`` and atoms from ``(a F0 + n Fn) / (a + n)``. Breaking stops
    once the unallocated mass is below ``leftover``; the remainder is put
    on one extra atom.
    """
    data = np.asarray(data, dtype=float)
    n = data.size
    M = a + n
    # number of sticks after which the expected leftover mass is ``leftover``
    T = int(math.ceil(math.log(leftover) / math.log(M / (M + 1.0)))) + 1
    qs = np.atleast_1d(np.asarray(qs, dtype=float))
    out = np.empty((draws, qs.size))
    done = 0
    while done < draws:
        b = min(batch, draws - done)
        v = rng.beta(1.0, M, size=(b, T))
        log_rest = np.cumsum(np.log1p(-v), axis=1)
        w = v * np.exp(np.concatenate([np.zeros((b, 1)), log_rest[:, :-1]], axis=1))
        w[:, -1] += np.exp(log_rest[:, -1])  # remaining mass on the final atom
        from_base = rng.random((b, T)) < a / M
        atoms = data[rng.integers(0, n, size=(b, T))]
        nb = int(from_base.sum())
        if nb:
            atoms[from_base] = base.sample(rng, nb)
        order = np.argsort(atoms, axis=1)
        xs = np.take_along_axis(atoms, order, axis=1)
        cw = np.cumsum(np.take_along_axis(w, order, axis=1), axis=1)
        rows = np.arange(b)
        for j, q in enumerate(qs):
            idx = np.minimum((cw < q).sum(axis=1), T - 1)
            out[done:done + b, j] = xs[rows, idx]
        done += b
    return out
