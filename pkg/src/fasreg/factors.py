"""Latent factor estimation for high-dimensional covariate panels.

A centered panel X (n observations, p covariates) is decomposed as
X = F B' + U via principal components of X X'/n: the estimated factor
matrix carries the sqrt(n)-scaled top eigenvectors (so F'F/n = I), the
loadings are B = X'F/n, and the idiosyncratic part is the projection
residual U = (I - F F'/n) X.  The number of factors is picked by the
largest adjacent-eigenvalue ratio.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import check_matrix, sym_eig

__all__ = [
    "DataMatrix",
    "FactorDecomposition",
    "RecoveryDiagnostics",
    "center_columns",
    "estimate_num_factors",
    "pca_decompose",
    "no_factor_decomposition",
    "recovery_diagnostics",
]


@dataclass(frozen=True)
class DataMatrix:
    """Covariate panel with column means tracked for later reuse.

    Rows are observations, columns are covariates.  When ``centered`` is
    set, every column mean must vanish to 1e-10.
    """

    X: np.ndarray
    column_means: np.ndarray
    centered: bool = True

    def __post_init__(self):
        X = check_matrix(self.X, "DataMatrix.X")
        object.__setattr__(self, "X", X)
        means = np.asarray(self.column_means, dtype=float)
        if means.shape != (X.shape[1],):
            raise ValueError(
                f"column_means length {means.shape} does not match p={X.shape[1]}"
            )
        object.__setattr__(self, "column_means", means)
        if self.centered:
            worst = np.max(np.abs(X.mean(axis=0)))
            if worst > 1e-10:
                raise ValueError(
                    f"matrix marked centered but a column mean is {worst:.3e}"
                )

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def center_columns(raw):
    """Demean each column and retain the original means.

    Parameters
    ----------
    raw : array_like
        n x p panel with n >= 2.

    Returns
    -------
    DataMatrix
    """
    arr = check_matrix(raw, "center_columns input")
    if arr.shape[0] < 2:
        raise ValueError("centering needs at least 2 rows")
    means = arr.mean(axis=0)
    return DataMatrix(X=arr - means, column_means=means, centered=True)


def _gram_spectrum(X):
    """Eigenvalues of X X'/n and X'X/n on their shared top min(n, p) slots."""
    n, p = X.shape
    if n <= p:
        gram = (X @ X.T) / n
    else:
        gram = (X.T @ X) / n
    values = np.linalg.eigvalsh(gram)
    return values[::-1]


def estimate_num_factors(data, k_max):
    """Pick the factor count by the largest adjacent-eigenvalue ratio.

    Computes the eigenvalues lam_1 >= lam_2 >= ... of X'X/n (equivalently
    X X'/n on the shared top of the spectrum) and returns the k in
    1..k_max maximizing lam_k / lam_{k+1}.  Ties go to the smallest k.

    Parameters
    ----------
    data : DataMatrix
        Centered panel.
    k_max : int
        Upper bound for the count; must satisfy 1 <= k_max <= min(n,p)-1.

    Returns
    -------
    int

    Raises
    ------
    ValueError
        If the top k_max+1 eigenvalues are not all positive relative to
        the largest (ratios would be undefined).
    """
    if not isinstance(data, DataMatrix):
        data = center_columns(data)
    if not data.centered:
        raise ValueError("estimate_num_factors expects a centered panel")
    n, p = data.X.shape
    k_max = int(k_max)
    if not (1 <= k_max <= min(n, p) - 1):
        raise ValueError(
            f"k_max must be in [1, min(n,p)-1] = [1, {min(n, p) - 1}], got {k_max}"
        )
    values = _gram_spectrum(data.X)
    top = values[: k_max + 1]
    if top[0] <= 0.0 or np.any(top <= 1e-12 * top[0]):
        raise ValueError(
            "rank-deficient panel: an eigenvalue among the top k_max+1 is "
            "numerically zero, so an adjacent ratio is undefined"
        )
    ratios = top[:-1] / top[1:]
    # floating-point eigenvalues never tie exactly; treat ratios within
    # 1e-9 relative of the max as tied and take the smallest k
    best = ratios.max()
    return int(np.argmax(ratios >= best * (1.0 - 1e-9))) + 1


@dataclass(frozen=True)
class FactorDecomposition:
    """PCA factor split of a centered panel.

    Attributes
    ----------
    k : int
        Number of factors (0 for the no-factor convention).
    factors : numpy.ndarray
        n x k matrix scaled so factors'factors / n = I.
    loadings : numpy.ndarray
        p x k loading matrix.
    idio : numpy.ndarray
        n x p idiosyncratic component, orthogonal to the factors.
    eigenvalues : numpy.ndarray
        Spectrum of X X'/n, descending.
    """

    k: int
    factors: np.ndarray
    loadings: np.ndarray
    idio: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)

    def __post_init__(self):
        n, p = self.idio.shape
        if self.factors.shape != (n, self.k) or self.loadings.shape != (p, self.k):
            raise ValueError("factor/loading shapes inconsistent with k and panel")
        if self.k > 0:
            x_scale = max(np.max(np.abs(self.reconstruct())), 1e-12)
            gram = self.factors.T @ self.factors / n
            if np.max(np.abs(gram - np.eye(self.k))) > 1e-8:
                raise ValueError("factors are not sqrt(n)-orthonormal")
            if np.max(np.abs(self.factors.T @ self.idio)) > 1e-6 * x_scale:
                raise ValueError("idiosyncratic part is not orthogonal to factors")

    @property
    def n(self):
        return self.idio.shape[0]

    @property
    def p(self):
        return self.idio.shape[1]

    def reconstruct(self):
        """The panel this decomposition represents: F B' + U."""
        if self.k == 0:
            return self.idio
        return self.factors @ self.loadings.T + self.idio


def pca_decompose(data, k):
    """Estimate factors, loadings and idiosyncratic components by PCA.

    Parameters
    ----------
    data : DataMatrix
        Centered panel.
    k : int
        Number of factors, 1 <= k < n.  For k = 0 use
        :func:`no_factor_decomposition`.

    Returns
    -------
    FactorDecomposition

    Warns
    -----
    UserWarning
        If the eigengap at k is numerically zero (the factor space is not
        identified); the decomposition is still returned.
    """
    if not isinstance(data, DataMatrix):
        data = center_columns(data)
    if not data.centered:
        raise ValueError("pca_decompose expects a centered panel")
    X = data.X
    n = X.shape[0]
    k = int(k)
    if not (1 <= k < n):
        raise ValueError(f"k must satisfy 1 <= k < n={n}, got {k}")
    values, vectors = sym_eig(X @ X.T / n)
    if k < n and values[k - 1] - values[k] <= 1e-12 * max(values[0], 0.0):
        warnings.warn(
            f"eigengap at k={k} is numerically zero; factor space not identified",
            UserWarning,
            stacklevel=2,
        )
    factors = np.sqrt(n) * vectors[:, :k]
    loadings = X.T @ factors / n
    idio = X - factors @ loadings.T
    return FactorDecomposition(
        k=k, factors=factors, loadings=loadings, idio=idio, eigenvalues=values
    )


def no_factor_decomposition(data):
    """Decomposition with an empty factor block and idio = X.

    This is the representation of "no factor adjustment" used by the
    generic (non-adjusted) regression paths; downstream code needs no
    special casing.
    """
    if not isinstance(data, DataMatrix):
        data = center_columns(data)
    X = data.X
    n = X.shape[0]
    values = _gram_spectrum(X)
    return FactorDecomposition(
        k=0,
        factors=np.zeros((n, 0)),
        loadings=np.zeros((X.shape[1], 0)),
        idio=X,
        eigenvalues=values,
    )


@dataclass(frozen=True)
class RecoveryDiagnostics:
    """Distance of an estimated decomposition from known truth.

    ``sin_theta_norm`` is the Frobenius norm of the sines of the principal
    angles between the estimated and true factor column spaces, in
    [0, sqrt(k)].  ``alignment`` is the least-squares rotation H mapping
    estimated factors onto the truth, so ``factor_error_fro`` is
    ||Fhat H - F||_F.
    """

    eigenvalue_errors: np.ndarray
    sin_theta_norm: float
    factor_error_fro: float
    max_idio_col_error: float
    alignment: np.ndarray

    def __post_init__(self):
        k = self.alignment.shape[0]
        if not (-1e-12 <= self.sin_theta_norm <= np.sqrt(max(k, 1)) + 1e-12):
            raise ValueError("sin_theta_norm outside [0, sqrt(k)]")


def recovery_diagnostics(dec, F_true, U_true, B_true):
    """Compare an estimated decomposition against simulation truth.

    Parameters
    ----------
    dec : FactorDecomposition
    F_true : array_like
        n x k true factor matrix; must have full column rank.
    U_true : array_like
        n x p true idiosyncratic matrix.
    B_true : array_like
        p x k true loading matrix.

    Returns
    -------
    RecoveryDiagnostics
    """
    n, p = dec.idio.shape
    k = dec.k
    F_true = np.asarray(F_true, dtype=float)
    U_true = check_matrix(U_true, "U_true")
    B_true = np.asarray(B_true, dtype=float)
    if F_true.shape != (n, k) or B_true.shape != (p, k):
        raise ValueError("truth dimensions do not match the decomposition")
    if U_true.shape != (n, p):
        raise ValueError("U_true shape does not match the panel")

    if k == 0:
        return RecoveryDiagnostics(
            eigenvalue_errors=np.zeros(0),
            sin_theta_norm=0.0,
            factor_error_fro=0.0,
            max_idio_col_error=float(
                np.max(np.linalg.norm(dec.idio - U_true, axis=0))
            ),
            alignment=np.zeros((0, 0)),
        )

    # orthonormalize the true factors; a rank-deficient F has no
    # well-defined column space to align against
    q, s, _ = np.linalg.svd(F_true, full_matrices=False)
    if s[-1] <= 1e-12 * s[0]:
        raise ValueError("F_true is rank-deficient; alignment undefined")
    f_tilde = np.sqrt(n) * q

    alignment = dec.factors.T @ F_true / n
    cosines = np.linalg.svd(dec.factors.T @ f_tilde / n, compute_uv=False)
    cosines = np.clip(cosines, 0.0, 1.0)
    sin_theta = float(np.sqrt(np.sum(1.0 - cosines**2)))

    true_eigs = np.linalg.eigvalsh(B_true.T @ B_true)[::-1]
    eig_errors = np.abs(dec.eigenvalues[:k] - true_eigs)

    return RecoveryDiagnostics(
        eigenvalue_errors=eig_errors,
        sin_theta_norm=sin_theta,
        factor_error_fro=float(np.linalg.norm(dec.factors @ alignment - F_true)),
        max_idio_col_error=float(np.max(np.linalg.norm(dec.idio - U_true, axis=0))),
        alignment=alignment,
    )
