"""Dense linear-algebra and random-variate primitives shared by every module.

Tolerances are relative to the max-norm of the inputs with an absolute
floor of 1e-12.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "RngStream",
    "SymEigResult",
    "check_matrix",
    "check_vector",
    "sym_eig",
    "solve_spd",
    "sample_gaussian_vec",
    "sample_inverse_gamma",
]

ABS_TOL_FLOOR = 1e-12


def check_matrix(a, name="matrix"):
    """Validate and return a 2-d float array with finite entries.

    Parameters
    ----------
    a : array_like
        Candidate matrix; must be 2-d with at least one row and column.
    name : str
        Label used in error messages.

    Returns
    -------
    numpy.ndarray
        Float64 view (or copy) of the input.
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_vector(v, name="vector", allow_empty=False):
    """Validate and return a 1-d float array with finite entries."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got ndim={arr.ndim}")
    if arr.size == 0 and not allow_empty:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


class SymEigResult(NamedTuple):
    """Spectral decomposition with eigenvalues sorted descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _fix_signs(vectors):
    # Flip each column so its largest-magnitude entry is positive; argmax
    # takes the first index on ties, which pins the convention.
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eig(a):
    """Full spectral decomposition of a symmetric matrix.

    Eigenvalues come back sorted descending.  Each eigenvector column has
    its sign fixed so the largest-magnitude entry is positive (first index
    wins on magnitude ties), making downstream factor estimates
    reproducible.

    Parameters
    ----------
    a : array_like
        Square symmetric matrix.  Asymmetry beyond 1e-12 relative to
        ``max|a|`` is rejected.

    Returns
    -------
    SymEigResult
        ``(eigenvalues, eigenvectors)`` with orthonormal columns.
    """
    arr = check_matrix(a, "sym_eig input")
    n, m = arr.shape
    if n != m:
        raise ValueError(f"sym_eig requires a square matrix, got {arr.shape}")
    scale = np.max(np.abs(arr))
    tol = max(1e-12 * scale, ABS_TOL_FLOOR)
    if np.max(np.abs(arr - arr.T)) > tol:
        raise ValueError("sym_eig input is not symmetric within tolerance")
    # numpy.linalg.eigh raises LinAlgError if the QL/QR iteration fails,
    # which serves as the convergence error for this operation.
    values, vectors = np.linalg.eigh(arr)
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = _fix_signs(vectors[:, order])
    return SymEigResult(values, vectors)


def solve_spd(a, b):
    """Solve A x = b for symmetric positive-definite A via Cholesky.

    Raises
    ------
    numpy.linalg.LinAlgError
        If a Cholesky pivot is non-positive (A not positive-definite).
    """
    arr = check_matrix(a, "solve_spd matrix")
    n, m = arr.shape
    if n != m:
        raise ValueError(f"solve_spd requires a square matrix, got {arr.shape}")
    vec = check_vector(b, "solve_spd rhs")
    if vec.size != n:
        raise ValueError(f"rhs length {vec.size} does not match matrix size {n}")
    scale = np.max(np.abs(arr))
    tol = max(1e-12 * scale, ABS_TOL_FLOOR)
    if np.max(np.abs(arr - arr.T)) > tol:
        raise ValueError("solve_spd matrix is not symmetric within tolerance")
    try:
        factor = cho_factor(arr, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise
    except Exception as exc:  # scipy.linalg raises its own LinAlgError subclass
        raise np.linalg.LinAlgError(str(exc)) from exc
    return cho_solve(factor, vec, check_finite=False)


def sample_gaussian_vec(rng, mean, cov_cholesky):
    """Draw mean + L z with z i.i.d. standard normal from the stream.

    Parameters
    ----------
    rng : RngStream
    mean : array_like
        Mean vector, length d.
    cov_cholesky : array_like
        d x d lower-triangular factor L of the covariance.  A zero matrix
        degenerates to a point mass at the mean.
    """
    mu = np.asarray(mean, dtype=float)
    if mu.ndim != 1:
        raise ValueError("mean must be 1-d")
    ell = np.asarray(cov_cholesky, dtype=float)
    if ell.shape != (mu.size, mu.size):
        raise ValueError(
            f"cov_cholesky shape {ell.shape} does not match mean length {mu.size}"
        )
    if ell.size and np.any(np.triu(ell, 1) != 0.0):
        raise ValueError("cov_cholesky must be lower-triangular")
    z = rng.standard_normal(mu.size)
    return mu + ell @ z


def sample_inverse_gamma(rng, shape, scale):
    """Draw from the inverse-gamma density proportional to x^(-shape-1) e^(-scale/x)."""
    if not (shape > 0.0):
        raise ValueError(f"shape must be positive, got {shape}")
    if not (scale > 0.0):
        raise ValueError(f"scale must be positive, got {scale}")
    g = rng.gamma(shape, 1.0)
    while g == 0.0:  # underflow guard for tiny shape parameters
        g = rng.gamma(shape, 1.0)
    return scale / g


class RngStream:
    """Seeded random stream with index-addressed child streams.

    Wraps a PCG64 generator.  Children derived via :meth:`substream` depend
    only on (seed, index), so replicate-level parallelism cannot couple or
    reorder sequences.
    """

    def __init__(self, seed):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed))
        self.seed = self._seq.entropy
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    @property
    def generator(self):
        """Underlying numpy Generator."""
        return self._gen

    def substream(self, index):
        """Deterministic child stream for a replicate/window index."""
        if index < 0:
            raise ValueError("substream index must be non-negative")
        child = np.random.SeedSequence(
            entropy=self._seq.entropy, spawn_key=self._seq.spawn_key + (int(index),)
        )
        return RngStream(child)

    def spawn(self, n):
        """First n child streams, in index order."""
        return [self.substream(i) for i in range(int(n))]

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def gamma(self, shape, scale=1.0, size=None):
        return self._gen.gamma(shape, scale, size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, spawn_key={self._seq.spawn_key})"
