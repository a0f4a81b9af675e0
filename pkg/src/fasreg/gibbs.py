"""Spike-and-slab Gibbs sampler for factor-adjusted sparse regression.

Model: Y = F alpha + U beta + noise, where (F, U) come from a
FactorDecomposition.  The prior puts independent Bernoulli(s0/p) mass on
each inclusion indicator, a Gaussian slab of scale tau_j * sigma on the
included coefficients, N(0, sigma^2 I) on alpha, and an inverse-gamma
(a0, b0) on sigma^2.

The sampler works in rescaled coordinates: W_j = tau_j U_j with
tau_j = sqrt(n)/||U_j||, gamma_j = beta_j / tau_j, so every rescaled
column has squared norm n and gamma has unit prior scale.  One iteration
performs (1) a random scan over the inclusion indicators with beta
integrated out, (2) a draw of gamma on the support, (3) a draw of alpha,
(4) a draw of sigma^2.

The scan never forms the n x n matrix S = W_xi W_xi' + I.  All flip
statistics come from |xi|-sized solves against G[xi, xi] + I where
G = W'W: with V = L^{-1} G[xi, :] and y = L^{-1} (W'r)[xi],

    q_j = G_jj - ||V_j||^2,      b_j = (W'r)_j - V_j'y,

give the inclusion log-odds for j outside the model (S_omega = S_xi) and,
through the rank-one downdate of S_xi, also for j inside it.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .linalg import check_vector, sample_inverse_gamma

__all__ = [
    "PriorConfig",
    "GibbsState",
    "ChainResult",
    "rescale_design",
    "flip_probability",
    "scan_support",
    "sample_beta_given",
    "sample_alpha_given",
    "sigma2_posterior_params",
    "sample_sigma2_given",
    "run_chain",
    "threshold_select",
]


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the spike-and-slab prior.

    Attributes
    ----------
    a0, b0 : float
        Shape and scale of the inverse-gamma prior on sigma^2.
    s0 : float
        Prior expected model size; each indicator is Bernoulli(s0/p).
    tau : numpy.ndarray or None
        Per-covariate slab scales.  Left as None, they are derived from
        the design by :func:`rescale_design`.
    slab : str
        Slab density family; only "gaussian" is implemented.
    """

    a0: float = 1.0
    b0: float = 1.0
    s0: float = 1.0
    tau: np.ndarray | None = None
    slab: str = "gaussian"

    def __post_init__(self):
        if not (self.a0 > 0 and self.b0 > 0):
            raise ValueError("a0 and b0 must be positive")
        if not (self.s0 > 0):
            raise ValueError("s0 must be positive")
        if self.slab != "gaussian":
            raise ValueError(f"unsupported slab density {self.slab!r}")
        if self.tau is not None:
            tau = np.asarray(self.tau, dtype=float)
            if tau.ndim != 1 or np.any(tau <= 0) or not np.all(np.isfinite(tau)):
                raise ValueError("tau must be a 1-d positive vector")
            object.__setattr__(self, "tau", tau)

    def log_prior_odds(self, p):
        """log[(s0/p) / (1 - s0/p)], the prior inclusion log-odds."""
        if not (0 < self.s0 < p):
            raise ValueError(f"s0 must lie in (0, p={p})")
        return math.log(self.s0) - math.log(p - self.s0)


@dataclass(frozen=True)
class GibbsState:
    """One sampler state.

    ``beta`` is in original coordinates and is exactly zero off the
    support.  ``residual`` caches Y - F alpha - U_xi beta_xi.
    """

    sigma2: float
    alpha: np.ndarray
    beta: np.ndarray
    support: np.ndarray
    residual: np.ndarray

    def __post_init__(self):
        if not (self.sigma2 > 0):
            raise ValueError("sigma2 must be positive")
        support = np.asarray(self.support, dtype=int)
        if support.size and (
            np.any(np.diff(support) <= 0)
            or support[0] < 0
            or support[-1] >= self.beta.size
        ):
            raise ValueError("support must be sorted, unique, within [0, p)")
        object.__setattr__(self, "support", support)
        off = np.ones(self.beta.size, dtype=bool)
        off[support] = False
        if np.any(self.beta[off] != 0.0):
            raise ValueError("beta must vanish exactly off the support")

    @property
    def model_size(self):
        return int(self.support.size)


@dataclass(frozen=True)
class ChainResult:
    """Retained samples and posterior summaries of one chain."""

    samples: tuple
    burn_in: int
    total_iters: int
    posterior_mean_beta: np.ndarray
    posterior_mean_alpha: np.ndarray
    posterior_mean_sigma2: float
    modal_model: tuple

    def __post_init__(self):
        if len(self.samples) != self.total_iters - self.burn_in:
            raise ValueError("retained sample count must equal iters - burn_in")


def rescale_design(dec, prior=None):
    """Rescale idiosyncratic columns to squared norm n.

    Parameters
    ----------
    dec : FactorDecomposition
    prior : PriorConfig, optional
        If it carries an explicit ``tau``, that is used; otherwise
        tau_j = sqrt(n) / ||U_j||.

    Returns
    -------
    (W, tau)
        W = U * tau columnwise; with derived tau, ||W_j||^2 = n for all j.
    """
    U = dec.idio
    n = U.shape[0]
    if prior is not None and prior.tau is not None:
        tau = prior.tau
        if tau.size != U.shape[1]:
            raise ValueError(f"tau length {tau.size} does not match p={U.shape[1]}")
    else:
        norms = np.linalg.norm(U, axis=0)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ValueError(
                f"idiosyncratic column {int(zero[0])} has zero norm; "
                "its slab scale is undefined"
            )
        tau = math.sqrt(n) / norms
    return U * tau, tau


def _stable_sigmoid(t):
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def flip_probability(state, j, W, f_alpha, y, prior):
    """Conditional inclusion probability P(Z_j = 1 | everything else).

    With omega = support \\ {j}, r = Y - F alpha and
    S_omega = W_omega W_omega' + I, the posterior odds of including j are

        odds0 * d_j^{-1/2} * exp( (W_j' S_omega^{-1} r)^2 / (2 sigma^2 d_j) ),

    d_j = 1 + W_j' S_omega^{-1} W_j, odds0 = (s0/p)/(1 - s0/p).  The
    computation uses only |omega|-sized solves against
    W_omega'W_omega + I; S_omega itself is never formed.

    Parameters
    ----------
    state : GibbsState
        Supplies the support and sigma^2.
    j : int
        Covariate index being flipped.
    W : numpy.ndarray
        Rescaled design, n x p.
    f_alpha : numpy.ndarray
        Current factor fit F alpha, length n.
    y : numpy.ndarray
        Response, length n.
    prior : PriorConfig

    Returns
    -------
    float
    """
    sigma2 = state.sigma2
    if not (sigma2 > 0):
        raise ValueError("sigma2 must be positive")
    p = W.shape[1]
    log_odds0 = prior.log_prior_odds(p)
    r = y - f_alpha
    w_j = W[:, j]
    omega = state.support[state.support != j]
    if omega.size == 0:
        d = 1.0 + w_j @ w_j
        num = w_j @ r
    else:
        W_om = W[:, omega]
        a = W_om.T @ W_om + np.eye(omega.size)
        L = np.linalg.cholesky(a)
        g = W_om.T @ w_j
        t = cho_solve((L, True), np.column_stack([g, W_om.T @ r]), check_finite=False)
        d = 1.0 + w_j @ w_j - g @ t[:, 0]
        num = w_j @ r - g @ t[:, 1]
    log_ratio = log_odds0 - 0.5 * math.log(d) + num * num / (2.0 * sigma2 * d)
    return _stable_sigmoid(log_ratio)


def _refresh_scan_stats(gram, diag_gram, wtr, active_idx):
    """Per-column statistics q_j, b_j for the current active set."""
    m = active_idx.size
    if m == 0:
        return diag_gram.copy(), wtr.copy()
    a = gram[np.ix_(active_idx, active_idx)] + np.eye(m)
    L = np.linalg.cholesky(a)
    v = solve_triangular(L, gram[active_idx, :], lower=True, check_finite=False)
    ysol = solve_triangular(L, wtr[active_idx], lower=True, check_finite=False)
    q = diag_gram - np.einsum("ij,ij->j", v, v)
    b = wtr - v.T @ ysol
    return q, b


def _scan_inclusions(gram, diag_gram, wtr, in_model, sigma2, log_odds0, perm, unif):
    """One random scan of all inclusion indicators; mutates in_model."""
    active_idx = np.flatnonzero(in_model)
    q, b = _refresh_scan_stats(gram, diag_gram, wtr, active_idx)
    two_s2 = 2.0 * sigma2
    for pos in range(perm.size):
        j = int(perm[pos])
        if in_model[j]:
            # remove-and-compare: S_omega comes from downdating S_xi by
            # the rank-one W_j W_j'; q_j < 1 strictly for included j
            denom = max(1.0 - q[j], 1e-15)
            log_ratio = (
                log_odds0 + 0.5 * math.log(denom) + b[j] * b[j] / (two_s2 * denom)
            )
        else:
            denom = 1.0 + q[j]
            log_ratio = (
                log_odds0 - 0.5 * math.log(denom) + b[j] * b[j] / (two_s2 * denom)
            )
        include = unif[pos] < _stable_sigmoid(log_ratio)
        if include != in_model[j]:
            in_model[j] = include
            active_idx = np.flatnonzero(in_model)
            q, b = _refresh_scan_stats(gram, diag_gram, wtr, active_idx)
    return in_model


def scan_support(state, W, f_hat, y, prior, rng, gram=None):
    """One random scan over all p inclusion indicators.

    Visits every covariate in a uniformly random permutation and redraws
    its indicator from the conditional inclusion probability (with the
    slab coefficients integrated out).  Coefficients of removed
    covariates are zeroed immediately; newly added covariates receive a
    coefficient at the next slab draw.

    Parameters
    ----------
    state : GibbsState
    W : numpy.ndarray
        Rescaled design, n x p.
    f_hat : numpy.ndarray
        Factor matrix, n x k.
    y : numpy.ndarray
        Response.
    prior : PriorConfig
        Must carry the tau used to build W (needed to express the
        retained coefficients in rescaled coordinates).
    rng : RngStream
    gram : numpy.ndarray, optional
        Precomputed W'W; supplied by the chain driver to avoid
        rebuilding it every iteration.

    Returns
    -------
    GibbsState
    """
    if prior.tau is None:
        raise ValueError("scan_support needs prior.tau (see rescale_design)")
    p = W.shape[1]
    log_odds0 = prior.log_prior_odds(p)
    if gram is None:
        gram = W.T @ W
    diag_gram = np.ascontiguousarray(np.diag(gram))
    f_alpha = f_hat @ state.alpha
    wtr = W.T @ (y - f_alpha)
    in_model = np.zeros(p, dtype=bool)
    in_model[state.support] = True
    perm = rng.permutation(p)
    unif = rng.uniform(size=p)
    _scan_inclusions(
        gram, diag_gram, wtr, in_model, state.sigma2, log_odds0, perm, unif
    )
    support = np.flatnonzero(in_model)
    beta = np.where(in_model, state.beta, 0.0)
    gamma = beta / prior.tau
    residual = y - f_alpha - W[:, support] @ gamma[support]
    return GibbsState(
        sigma2=state.sigma2,
        alpha=state.alpha,
        beta=beta,
        support=support,
        residual=residual,
    )


def sample_beta_given(support, W, f_alpha, y, sigma2, rng):
    """Draw the slab coefficients on the support, in rescaled coordinates.

    gamma_xi ~ Normal((W_xi'W_xi + I)^{-1} W_xi'(y - F alpha),
                      sigma^2 (W_xi'W_xi + I)^{-1});
    entries off the support are exactly zero.
    """
    if not (sigma2 > 0):
        raise ValueError("sigma2 must be positive")
    p = W.shape[1]
    gamma = np.zeros(p)
    idx = np.asarray(support, dtype=int)
    if idx.size == 0:
        return gamma
    W_xi = W[:, idx]
    a = W_xi.T @ W_xi + np.eye(idx.size)
    L = np.linalg.cholesky(a)
    mean = cho_solve((L, True), W_xi.T @ (y - f_alpha), check_finite=False)
    z = rng.standard_normal(idx.size)
    gamma[idx] = mean + math.sqrt(sigma2) * solve_triangular(
        L.T, z, lower=False, check_finite=False
    )
    return gamma


def sample_alpha_given(beta_part, f_hat, y, sigma2, rng):
    """Draw alpha ~ Normal(F'(y - U_xi beta_xi)/(n+1), sigma^2 I/(n+1)).

    The simple form of the mean and covariance uses F'F = n I, which the
    decomposition guarantees by construction.
    """
    if not (sigma2 > 0):
        raise ValueError("sigma2 must be positive")
    n, k = f_hat.shape
    if k == 0:
        return np.zeros(0)
    mean = f_hat.T @ (y - beta_part) / (n + 1.0)
    return mean + math.sqrt(sigma2 / (n + 1.0)) * rng.standard_normal(k)


def sigma2_posterior_params(alpha, gamma, support, residual, prior):
    """Inverse-gamma parameters of the sigma^2 conditional."""
    idx = np.asarray(support, dtype=int)
    n = residual.size
    k = alpha.size
    shape = prior.a0 + (idx.size + k + n) / 2.0
    gamma_xi = np.asarray(gamma)[idx]
    scale = prior.b0 + (
        gamma_xi @ gamma_xi + alpha @ alpha + residual @ residual
    ) / 2.0
    return shape, scale


def sample_sigma2_given(alpha, gamma, support, residual, prior, rng):
    """Draw sigma^2 from its inverse-gamma conditional."""
    shape, scale = sigma2_posterior_params(alpha, gamma, support, residual, prior)
    return sample_inverse_gamma(rng, shape, scale)


def _modal_model(supports):
    counts = Counter(tuple(int(j) for j in s) for s in supports)
    top = max(counts.values())
    candidates = [model for model, c in counts.items() if c == top]
    return min(candidates, key=lambda m: (len(m), m))


def run_chain(dec, y, prior=None, iters=20, burn_in=None, init=None, rng=None):
    """Run the Gibbs sampler and summarize the retained draws.

    Parameters
    ----------
    dec : FactorDecomposition
        Factor split of the covariate panel (k = 0 runs the chain without
        factor adjustment).
    y : array_like
        Response vector, length n.
    prior : PriorConfig, optional
        Defaults to a0 = b0 = s0 = 1 with design-derived tau.
    iters : int
        Total Gibbs iterations T.
    burn_in : int, optional
        Dropped iterations; defaults to T // 2.
    init : GibbsState, optional
        Starting state; defaults to sigma = 1, alpha = 0, beta = 0.
    rng : RngStream

    Returns
    -------
    ChainResult
        Snapshots carry beta in original coordinates (beta_j = tau_j
        gamma_j); posterior means are arithmetic averages of the retained
        samples.
    """
    if rng is None:
        raise ValueError("run_chain needs an RngStream")
    y = check_vector(y, "response")
    n, p = dec.idio.shape
    if y.size != n:
        raise ValueError(f"response length {y.size} does not match n={n}")
    if prior is None:
        prior = PriorConfig()
    W, tau = rescale_design(dec, prior)
    prior = replace(prior, tau=tau)
    iters = int(iters)
    burn_in = iters // 2 if burn_in is None else int(burn_in)
    if not (0 <= burn_in < iters):
        raise ValueError("need 0 <= burn_in < iters")

    f_hat = dec.factors
    k = dec.k
    gram = W.T @ W

    if init is None:
        state = GibbsState(
            sigma2=1.0,
            alpha=np.zeros(k),
            beta=np.zeros(p),
            support=np.zeros(0, dtype=int),
            residual=y.copy(),
        )
    else:
        state = init

    kept = []
    for t in range(iters):
        state = scan_support(state, W, f_hat, y, prior, rng, gram=gram)
        f_alpha = f_hat @ state.alpha
        gamma = sample_beta_given(state.support, W, f_alpha, y, state.sigma2, rng)
        beta_part = W[:, state.support] @ gamma[state.support]
        alpha = sample_alpha_given(beta_part, f_hat, y, state.sigma2, rng)
        residual = y - beta_part - f_hat @ alpha
        sigma2 = sample_sigma2_given(alpha, gamma, state.support, residual, prior, rng)
        state = GibbsState(
            sigma2=sigma2,
            alpha=alpha,
            beta=tau * gamma,
            support=state.support,
            residual=residual,
        )
        if t >= burn_in:
            kept.append(state)

    betas = np.stack([s.beta for s in kept])
    alphas = (
        np.stack([s.alpha for s in kept]) if k else np.zeros((len(kept), 0))
    )
    return ChainResult(
        samples=tuple(kept),
        burn_in=burn_in,
        total_iters=iters,
        posterior_mean_beta=betas.mean(axis=0),
        posterior_mean_alpha=alphas.mean(axis=0),
        posterior_mean_sigma2=float(np.mean([s.sigma2 for s in kept])),
        modal_model=_modal_model(s.support for s in kept),
    )


def threshold_select(beta, sigma2, n):
    """Indices surviving the coefficient threshold sigma sqrt(|xi| log p / n).

    |xi| is the support size of ``beta`` and p its length.  Entries
    exactly at the threshold are kept; an empty support returns the empty
    set.
    """
    beta = np.asarray(beta, dtype=float)
    p = beta.size
    size = int(np.count_nonzero(beta))
    if size == 0:
        return np.zeros(0, dtype=int)
    thr = math.sqrt(sigma2) * math.sqrt(size * math.log(p) / n)
    return np.flatnonzero(np.abs(beta) >= thr)
