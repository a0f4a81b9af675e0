"""Frequentist baselines: factor-adjusted lasso and principal component
regression.

The lasso minimizes

    (1/2n) ||Y - F alpha - U beta||^2 + lambda * sum_j (||U_j||/sqrt(n)) |beta_j|

with alpha unpenalized.  Internally the problem is rewritten in
standardized coordinates W_j = U_j * sqrt(n)/||U_j||, gamma_j =
beta_j * ||U_j||/sqrt(n), where the penalty is a plain l1 norm and every
column has squared norm n.  Cyclic coordinate descent runs on gamma with
alpha profiled out exactly (a k x k least-squares solve) once per sweep;
the gradient vector W'r/n is maintained by rank-one Gram updates so a
sweep touches no n-sized vectors except through changed coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .linalg import check_matrix, check_vector

__all__ = [
    "ConvergenceError",
    "LassoFit",
    "PcrFit",
    "default_lambda_grid",
    "lasso_fit",
    "lasso_cv",
    "pcr_fit",
    "pcr_predict",
]


class ConvergenceError(RuntimeError):
    """Coordinate descent hit its sweep cap; ``fit`` holds the last iterate."""

    def __init__(self, message, fit):
        super().__init__(message)
        self.fit = fit


@dataclass(frozen=True)
class LassoFit:
    """Solution of one penalized fit.

    Attributes
    ----------
    alpha_hat : numpy.ndarray
        Unpenalized factor coefficients, length k.
    beta_hat : numpy.ndarray
        Sparse coefficients in original coordinates, length p.
    lam : float
        Penalty level of the returned fit.
    selected : numpy.ndarray
        Indices with beta_hat != 0.
    cv_table : tuple
        (lambda, mean held-out squared error) pairs, descending lambda;
        empty unless produced by cross-validation.
    objective_history : tuple
        Penalized objective after each coordinate-descent sweep of the
        final fit.
    """

    alpha_hat: np.ndarray
    beta_hat: np.ndarray
    lam: float
    selected: np.ndarray
    cv_table: tuple = ()
    objective_history: tuple = ()

    def __post_init__(self):
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise ValueError("lambda must be finite and nonnegative")
        want = np.flatnonzero(self.beta_hat)
        if not np.array_equal(np.sort(np.asarray(self.selected)), want):
            raise ValueError("selected must be exactly the nonzero set of beta_hat")


def _soft(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


class _CdWork:
    """Mutable coordinate-descent state for one design (full data or fold)."""

    def __init__(self, f, u, y):
        n = y.size
        norms = np.linalg.norm(u, axis=0) / math.sqrt(n)
        bad = np.flatnonzero(norms == 0.0)
        if bad.size:
            raise ValueError(
                f"design column {int(bad[0])} has zero norm on this sample"
            )
        self.n = n
        self.k = f.shape[1]
        self.p = u.shape[1]
        self.f = f
        self.y = y
        self.norms = norms
        self.w = u / norms
        self.gram = self.w.T @ self.w / n
        self.ftw = f.T @ self.w
        self.fty = f.T @ y
        self.chol = cho_factor(f.T @ f) if self.k else None
        self.wty = self.w.T @ y
        self.gamma = np.zeros(self.p)
        self.q = self.fty.copy()  # F'(y - W gamma)
        self.alpha = self._profile()
        # g = W'(y - F alpha - W gamma)/n
        self.g = self.wty / n
        if self.k:
            self.g -= self.ftw.T @ self.alpha / n
        self.tol = 1e-7 * np.linalg.norm(y) / math.sqrt(n)

    def _profile(self):
        if not self.k:
            return np.zeros(0)
        return cho_solve(self.chol, self.q)

    def _refresh(self):
        """Rebuild q, alpha and g exactly from the current gamma."""
        idx = np.flatnonzero(self.gamma)
        wg = self.gram[:, idx] @ self.gamma[idx]
        if self.k:
            self.q = self.fty - self.ftw[:, idx] @ self.gamma[idx]
            self.alpha = self._profile()
            self.g = self.wty / self.n - wg - self.ftw.T @ self.alpha / self.n
        else:
            self.g = self.wty / self.n - wg

    def lambda_max(self):
        return float(np.max(np.abs(self.g))) if self.p else 0.0

    def objective(self, lam):
        idx = np.flatnonzero(self.gamma)
        r = self.y - self.w[:, idx] @ self.gamma[idx]
        if self.k:
            r = r - self.f @ self.alpha
        return r @ r / (2.0 * self.n) + lam * float(np.abs(self.gamma).sum())

    def sweep(self, indices, lam):
        """One pass of coordinate updates plus an exact alpha profile."""
        max_delta = 0.0
        for j in indices:
            z = self.gamma[j] + self.g[j]
            new = _soft(z, lam)
            delta = new - self.gamma[j]
            if delta != 0.0:
                self.gamma[j] = new
                self.g -= self.gram[:, j] * delta
                if self.k:
                    self.q -= self.ftw[:, j] * delta
            max_delta = max(max_delta, abs(delta))
        if self.k:
            new_alpha = self._profile()
            step = new_alpha - self.alpha
            if np.any(step != 0.0):
                self.g -= self.ftw.T @ step / self.n
                self.alpha = new_alpha
        return max_delta

    def _face_jump(self, lam):
        """Step toward the exact minimizer on the current sign pattern's face.

        Ill-conditioned active blocks make plain sweeps crawl; once the
        signs have settled, the face minimizer solves a linear system.
        When the active set outgrows the sample (routine at the bottom
        of the grid with p > n) the block G is singular, and the face
        may have no minimizer at all: the fixed-sign objective
        gamma'G gamma/2 - rhs'gamma falls off linearly along any null
        direction of G not orthogonal to rhs.  The least-squares
        residual is exactly that downhill direction, so the move is an
        exact line search either along it (inconsistent system) or
        toward the solution (consistent), shortened to the first zero
        crossing so the limiting coordinate lands exactly on zero and
        leaves the face.  Descent, and with it the monotone objective
        invariant, holds by construction; convergence is still
        certified by the usual coefficient-change rule on the
        following sweep.

        Returns 0 (no descent step), 1 (interior step) or 2 (boundary
        step, face shrank).
        """
        idx = np.flatnonzero(self.gamma)
        if idx.size == 0:
            return 0
        signs = np.sign(self.gamma[idx])
        gsub = self.gram[np.ix_(idx, idx)]
        rhs = self.wty[idx] / self.n - lam * signs
        if self.k:
            fw = self.ftw[:, idx]
            half = cho_solve(self.chol, fw)
            gsub = gsub - fw.T @ half / self.n
            rhs = rhs - half.T @ self.fty / self.n
        sol, *_ = np.linalg.lstsq(gsub, rhs, rcond=None)
        if not np.all(np.isfinite(sol)):
            return 0
        cur = self.gamma[idx]
        r_perp = rhs - gsub @ sol
        gap = float(np.linalg.norm(r_perp))
        cands = []
        if gap > 1e-9 * (1.0 + np.linalg.norm(rhs)):
            cands.append(r_perp / gap)
        cands.append(sol - cur)
        grad = gsub @ cur - rhs
        before = self.objective(lam)
        for d in cands:
            slope = float(grad @ d)
            if not slope < 0.0:
                continue
            quad = float(d @ gsub @ d)
            t = np.inf if quad <= 0.0 else -slope / quad
            heading = signs * d < 0.0
            partial = False
            if np.any(heading):
                t_bound = float(np.min(-cur[heading] / d[heading]))
                if t_bound <= t:
                    t = t_bound
                    partial = True
            if not np.isfinite(t) or t <= 0.0:
                continue
            new = cur + t * d
            if partial:
                new[signs * new <= 0.0] = 0.0
            self.gamma[idx] = new
            self._refresh()
            if self.objective(lam) > before + 1e-12 * (1.0 + abs(before)):
                self.gamma[idx] = cur.copy()
                self._refresh()
                continue
            return 2 if partial else 1
        return 0

    def _face_structs(self, idx):
        """Split the active Gram block for triangular-solve sweeps."""
        block = self.gram[np.ix_(idx, idx)]
        lower = np.tril(block, -1)
        np.fill_diagonal(lower, 1.0)
        rest = block - lower
        return lower, rest

    def _face_phase(self, lam, max_sweeps, sweeps, history):
        """Sweep the active coordinates to convergence at fixed lambda.

        While the sign pattern holds, a cyclic coordinate sweep is the
        Gauss-Seidel recursion gamma_j <- gamma_j + g_j - lam*sign_j, so
        one unit-lower-triangular solve reproduces the whole sweep
        exactly.  A sweep whose result would flip a sign falls back to
        the scalar soft-threshold pass, after which the face is rebuilt.

        Returns the updated sweep count once the face has converged.
        """
        while True:
            idx = np.flatnonzero(self.gamma)
            if idx.size == 0:
                return sweeps
            signs = np.sign(self.gamma[idx])
            lower, rest = self._face_structs(idx)
            base = self.wty[idx] / self.n - lam * signs
            ftw_a = self.ftw[:, idx] if self.k else None
            rebuild = False
            stalled = 0
            while not rebuild:
                if sweeps >= max_sweeps:
                    raise _CapHit()
                cur = self.gamma[idx]
                c = base - rest @ cur
                if self.k:
                    c = c - ftw_a.T @ self.alpha / self.n
                new = solve_triangular(
                    lower, c, lower=True, unit_diagonal=True, check_finite=False
                )
                if np.all(signs * new > 0.0):
                    delta = float(np.max(np.abs(new - cur)))
                    self.gamma[idx] = new
                    if self.k:
                        self.q = self.fty - ftw_a @ new
                        self.alpha = self._profile()
                    sweeps += 1
                    if history is not None:
                        history.append(self.objective(lam))
                    if delta < self.tol:
                        return sweeps
                    stalled += 1
                    if stalled % 8 == 0:
                        jump = self._face_jump(lam)
                        if jump == 2:
                            rebuild = True
                else:
                    # a sign flips somewhere mid-sweep: do it the scalar
                    # way (needs a fresh gradient), then rebuild the face
                    self._refresh()
                    delta = self.sweep(idx, lam)
                    sweeps += 1
                    if history is not None:
                        history.append(self.objective(lam))
                    if delta < self.tol and np.array_equal(
                        np.flatnonzero(self.gamma), idx
                    ):
                        return sweeps
                    rebuild = True

    def solve(self, lam, max_sweeps, history=None):
        """Run active-set coordinate descent at one penalty level."""
        everyone = np.arange(self.p)
        sweeps = 0
        while True:
            sweeps = self._face_phase(lam, max_sweeps, sweeps, history)
            if sweeps >= max_sweeps:
                raise _CapHit()
            self._refresh()
            before = self.gamma != 0.0
            delta = self.sweep(everyone, lam)
            sweeps += 1
            if history is not None:
                history.append(self.objective(lam))
            grew = np.any((self.gamma != 0.0) & ~before)
            if not grew and delta < self.tol:
                return

    def beta(self):
        return self.gamma / self.norms


class _CapHit(Exception):
    pass


def _as_fit(work, lam, history=()):
    beta = work.beta()
    return LassoFit(
        alpha_hat=work.alpha.copy(),
        beta_hat=beta,
        lam=float(lam),
        selected=np.flatnonzero(beta),
        objective_history=tuple(history),
    )


def _check_design(dec, y):
    y = check_vector(y, "response")
    n = dec.idio.shape[0]
    if y.size != n:
        raise ValueError(f"response length {y.size} does not match n={n}")
    return y


def lasso_fit(dec, y, lam, max_sweeps=20000):
    """Penalized fit at a single penalty level.

    Parameters
    ----------
    dec : FactorDecomposition
        Supplies the factor block (unpenalized) and the idiosyncratic
        block (penalized, columns weighted by ||U_j||/sqrt(n)).
    y : array_like
        Response, length n.
    lam : float
        Penalty level, >= 0.
    max_sweeps : int
        Sweep budget; exceeding it raises :class:`ConvergenceError` with
        the last iterate attached.

    Returns
    -------
    LassoFit
    """
    y = _check_design(dec, y)
    if not (lam >= 0 and np.isfinite(lam)):
        raise ValueError("lambda must be finite and nonnegative")
    work = _CdWork(dec.factors, dec.idio, y)
    history = []
    try:
        work.solve(lam, max_sweeps, history)
    except _CapHit:
        raise ConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps "
            f"at lambda={lam:g}",
            _as_fit(work, lam, history),
        ) from None
    return _as_fit(work, lam, history)


def default_lambda_grid(dec, y, size=50, min_ratio=1e-3):
    """Log-spaced penalty grid from the null-model threshold downward.

    The largest value is the smallest lambda at which every sparse
    coefficient is zero; the grid descends geometrically to
    min_ratio times that.
    """
    y = _check_design(dec, y)
    if size < 1:
        raise ValueError("grid size must be positive")
    top = _CdWork(dec.factors, dec.idio, y).lambda_max()
    if top <= 0:
        raise ValueError("null-model threshold is zero; nothing to penalize")
    if size == 1:
        return np.array([top])
    return np.geomspace(top, min_ratio * top, size)


def _path(f, u, y, grid, max_sweeps):
    """Warm-started descending-lambda path; returns per-lambda (alpha, beta)."""
    work = _CdWork(f, u, y)
    out = []
    for lam in grid:
        try:
            work.solve(lam, max_sweeps)
        except _CapHit:
            raise ConvergenceError(
                f"coordinate descent did not converge in {max_sweeps} sweeps "
                f"at lambda={lam:g}",
                _as_fit(work, lam),
            ) from None
        out.append((work.alpha.copy(), work.beta()))
    return out


def lasso_cv(dec, y, lambda_grid=None, folds=10, rng=None, max_sweeps=20000):
    """Cross-validated penalty choice plus a full-data refit.

    Parameters
    ----------
    dec : FactorDecomposition
    y : array_like
    lambda_grid : array_like, optional
        Candidate penalties; defaults to :func:`default_lambda_grid`.
        Evaluated in descending order with warm starts.
    folds : int
        Number of folds, >= 2; every fold needs at least 2 observations.
    rng : RngStream
        Drives the random fold partition.
    max_sweeps : int
        Per-penalty sweep budget.

    Returns
    -------
    LassoFit
        Fit at the penalty with smallest mean held-out squared error
        (ties go to the heavier penalty), with ``cv_table`` filled.
    """
    y = _check_design(dec, y)
    if rng is None:
        raise ValueError("lasso_cv needs an RngStream for the fold partition")
    folds = int(folds)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    n = y.size
    if n // folds < 2:
        raise ValueError(
            f"{folds} folds over {n} observations leave a fold with "
            "fewer than 2 observations"
        )
    if lambda_grid is None:
        grid = default_lambda_grid(dec, y)
    else:
        grid = np.asarray(lambda_grid, dtype=float)
        if grid.size == 0:
            raise ValueError("lambda grid is empty")
        if np.any(~np.isfinite(grid)) or np.any(grid < 0):
            raise ValueError("lambda grid must be finite and nonnegative")
        grid = np.sort(grid)[::-1]

    f, u = dec.factors, dec.idio
    parts = np.array_split(rng.permutation(n), folds)
    errors = np.zeros((folds, grid.size))
    for i, held_out in enumerate(parts):
        train = np.setdiff1d(np.arange(n), held_out)
        path = _path(f[train], u[train], y[train], grid, max_sweeps)
        f_test, u_test, y_test = f[held_out], u[held_out], y[held_out]
        for l, (alpha, beta) in enumerate(path):
            pred = u_test @ beta
            if alpha.size:
                pred = pred + f_test @ alpha
            errors[i, l] = np.mean((y_test - pred) ** 2)
    mean_error = errors.mean(axis=0)
    best = int(np.argmin(mean_error))
    fit = lasso_fit(dec, y, float(grid[best]), max_sweeps)
    return replace(fit, cv_table=tuple(zip(grid.tolist(), mean_error.tolist())))


@dataclass(frozen=True)
class PcrFit:
    """Principal component regression model.

    ``loadings`` (p x m) and ``means`` (p) turn a new covariate row into
    component scores; ``coef`` and ``intercept`` map scores to the
    prediction.
    """

    m: int
    coef: np.ndarray
    intercept: float
    loadings: np.ndarray
    means: np.ndarray

    def __post_init__(self):
        if self.m < 1 or self.coef.shape != (self.m,):
            raise ValueError("coef must have length m >= 1")
        if self.loadings.shape != (self.means.size, self.m):
            raise ValueError("loadings must be p x m")


def pcr_fit(data, y, m):
    """Regress y on the m leading principal-component scores plus intercept.

    Parameters
    ----------
    data : DataMatrix or array_like
        Covariate panel, n x p.
    y : array_like
        Response, length n.
    m : int
        Components used; 1 <= m <= min(n, p), and the m-th singular value
        must be nonnegligible (otherwise a rank error is raised).

    Returns
    -------
    PcrFit
    """
    X = data.X if hasattr(data, "X") else check_matrix(data, "covariates")
    y = check_vector(y, "response")
    n, p = X.shape
    if y.size != n:
        raise ValueError(f"response length {y.size} does not match n={n}")
    m = int(m)
    if not (1 <= m <= min(n, p)):
        raise ValueError(f"need 1 <= m <= min(n, p) = {min(n, p)}")
    means = X.mean(axis=0)
    centered = X - means
    left, sing, vt = np.linalg.svd(centered, full_matrices=False)
    if sing[m - 1] <= 1e-12 * sing[0]:
        raise np.linalg.LinAlgError(
            f"component {m} is numerically rank deficient; scores are collinear"
        )
    intercept = float(y.mean())
    # scores = left[:, :m] * sing[:m]; their Gram is diag(sing^2)
    coef = (left[:, :m].T @ (y - intercept)) / sing[:m]
    return PcrFit(
        m=m,
        coef=coef,
        intercept=intercept,
        loadings=vt[:m].T.copy(),
        means=means,
    )


def pcr_predict(fit, x_new):
    """Predict at new covariate rows.

    A single length-p vector returns a float; an r x p matrix returns a
    length-r vector.
    """
    x = np.asarray(x_new, dtype=float)
    single = x.ndim == 1
    scores = (np.atleast_2d(x) - fit.means) @ fit.loadings
    out = fit.intercept + scores @ fit.coef
    return float(out[0]) if single else out
