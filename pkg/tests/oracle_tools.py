"""Independent oracles for the sampler tests.

Everything here deliberately uses dense n x n linear algebra and scipy
densities, so it shares no code path with the rank-one implementation it
checks.
"""
import math
from collections import Counter
from itertools import combinations

import numpy as np
from scipy.stats import invgamma, multivariate_normal


class ScriptedRng:
    """Duck-typed stand-in for RngStream feeding prescribed normal draws."""

    def __init__(self, normal_queue):
        self._queue = [np.asarray(v, dtype=float) for v in normal_queue]

    def standard_normal(self, size=None):
        out = self._queue.pop(0)
        want = 1 if size is None else size
        assert out.size == want, f"scripted draw size {out.size} != requested {want}"
        return out.copy() if size is not None else float(out)


def zero_rng(*sizes):
    return ScriptedRng([np.zeros(s) for s in sizes])


def log_prior_model(support, p, s0):
    m = len(support)
    return m * math.log(s0 / p) + (p - m) * math.log(1.0 - s0 / p)


def dense_flip_probability(support, j, W, f_alpha, y, sigma2, s0):
    """P(Z_j = 1 | rest) from dense determinant-and-inverse evaluation.

    Builds S = W_omega W_omega' + I and S+ = S + W_j W_j' explicitly and
    takes the ratio of the two dense model-conditional densities.
    """
    n, p = W.shape
    r = np.asarray(y, dtype=float) - np.asarray(f_alpha, dtype=float)
    omega = [int(t) for t in support if int(t) != int(j)]
    s_small = np.eye(n)
    for t in omega:
        s_small = s_small + np.outer(W[:, t], W[:, t])
    s_big = s_small + np.outer(W[:, j], W[:, j])
    log_odds0 = math.log(s0 / p) - math.log(1.0 - s0 / p)
    _, logdet_small = np.linalg.slogdet(s_small)
    _, logdet_big = np.linalg.slogdet(s_big)
    quad_small = r @ np.linalg.solve(s_small, r)
    quad_big = r @ np.linalg.solve(s_big, r)
    log_ratio = (
        log_odds0
        - 0.5 * (logdet_big - logdet_small)
        + (quad_small - quad_big) / (2.0 * sigma2)
    )
    if log_ratio >= 0:
        return 1.0 / (1.0 + math.exp(-log_ratio))
    e = math.exp(log_ratio)
    return e / (1.0 + e)


def enumerate_model_posterior(f_hat, W, y, prior):
    """Exact model posterior over all 2^p supports, by dense enumeration.

    Integrates the factor coefficients, the slab coefficients and the
    noise variance out of the joint in closed form: each model's weight is

        prior(model) * det(M)^{-1/2} * (b0 + y'M^{-1}y / 2)^{-(a0 + n/2)}

    with M = F F' + W_model W_model' + I.
    """
    n, p = W.shape
    y = np.asarray(y, dtype=float)
    base = np.eye(n) + f_hat @ f_hat.T
    log_weights = {}
    for m in range(p + 1):
        for model in combinations(range(p), m):
            cols = W[:, list(model)]
            big = base + cols @ cols.T
            _, logdet = np.linalg.slogdet(big)
            quad = y @ np.linalg.solve(big, y)
            log_weights[model] = (
                log_prior_model(model, p, prior.s0)
                - 0.5 * logdet
                - (prior.a0 + n / 2.0) * math.log(prior.b0 + quad / 2.0)
            )
    peak = max(log_weights.values())
    weights = {k: math.exp(v - peak) for k, v in log_weights.items()}
    total = sum(weights.values())
    return {k: v / total for k, v in weights.items()}


def empirical_model_frequencies(chain):
    counts = Counter(tuple(int(j) for j in s.support) for s in chain.samples)
    m = len(chain.samples)
    return {model: c / m for model, c in counts.items()}


def total_variation(dist_a, dist_b):
    keys = set(dist_a) | set(dist_b)
    return 0.5 * sum(abs(dist_a.get(k, 0.0) - dist_b.get(k, 0.0)) for k in keys)


def log_joint_full(sigma2, alpha, gamma, support, f_hat, W, y, prior):
    """Log pseudo-posterior density of (sigma2, alpha, gamma, model), unnormalized
    only by the model-independent evidence term."""
    n, p = W.shape
    k = alpha.size
    idx = list(int(t) for t in support)
    gamma_xi = np.asarray(gamma)[idx]
    mean = f_hat @ alpha + (W[:, idx] @ gamma_xi if idx else np.zeros(n))
    out = invgamma.logpdf(sigma2, prior.a0, scale=prior.b0)
    out += log_prior_model(idx, p, prior.s0)
    if k:
        out += multivariate_normal.logpdf(alpha, np.zeros(k), sigma2 * np.eye(k))
    if idx:
        out += multivariate_normal.logpdf(
            gamma_xi, np.zeros(len(idx)), sigma2 * np.eye(len(idx))
        )
    out += multivariate_normal.logpdf(y, mean, sigma2 * np.eye(n))
    return out


def log_joint_marginal_beta(sigma2, alpha, support, f_hat, W, y, prior):
    """Log joint of (sigma2, alpha, model) with the slab coefficients
    integrated out."""
    n, p = W.shape
    k = alpha.size
    idx = list(int(t) for t in support)
    r = y - f_hat @ alpha
    s_mat = np.eye(n)
    for t in idx:
        s_mat = s_mat + np.outer(W[:, t], W[:, t])
    out = invgamma.logpdf(sigma2, prior.a0, scale=prior.b0)
    out += log_prior_model(idx, p, prior.s0)
    if k:
        out += multivariate_normal.logpdf(alpha, np.zeros(k), sigma2 * np.eye(k))
    out += multivariate_normal.logpdf(r, np.zeros(n), sigma2 * s_mat)
    return out
