import numpy as np
import pytest

from fasreg.linalg import (
    RngStream,
    sample_gaussian_vec,
    sample_inverse_gamma,
    solve_spd,
    sym_eig,
)


def random_symmetric(rng, n):
    a = rng.standard_normal((n, n))
    return (a + a.T) / 2.0


class TestSymEig:
    def test_identity(self):
        values, vectors = sym_eig(np.eye(3))
        assert np.allclose(values, [1.0, 1.0, 1.0])
        # eigenvectors of I are only determined up to column permutation
        assert np.allclose(np.abs(vectors) @ np.abs(vectors.T), np.eye(3), atol=1e-10)

    def test_diagonal(self):
        values, vectors = sym_eig(np.diag([3.0, 1.0]))
        assert np.allclose(values, [3.0, 1.0])
        assert np.allclose(vectors, np.eye(2), atol=1e-12)

    def test_two_by_two_symmetric(self):
        values, vectors = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(values, [3.0, 1.0])
        s = 1.0 / np.sqrt(2.0)
        assert np.allclose(np.abs(vectors[:, 0]), [s, s])
        assert np.allclose(np.abs(vectors[:, 1]), [s, s])
        # orthogonality of the two columns
        assert abs(vectors[:, 0] @ vectors[:, 1]) < 1e-12

    def test_descending_order(self):
        rng = np.random.default_rng(7)
        a = random_symmetric(rng, 40)
        values, _ = sym_eig(a)
        assert np.all(np.diff(values) <= 0)

    def test_sign_convention(self):
        rng = np.random.default_rng(11)
        a = random_symmetric(rng, 25)
        _, vectors = sym_eig(a)
        for col in vectors.T:
            assert col[np.argmax(np.abs(col))] > 0

    @pytest.mark.parametrize("n", [2, 10, 60, 300])
    def test_reconstruction_and_trace(self, n):
        rng = np.random.default_rng(100 + n)
        a = random_symmetric(rng, n)
        values, vectors = sym_eig(a)
        scale = np.max(np.abs(a))
        recon = vectors @ np.diag(values) @ vectors.T
        assert np.max(np.abs(recon - a)) <= 1e-8 * scale
        assert np.max(np.abs(vectors.T @ vectors - np.eye(n))) <= 1e-10
        assert np.max(np.abs(a @ vectors - vectors * values)) <= 1e-8 * scale
        assert abs(values.sum() - np.trace(a)) <= 1e-8 * max(abs(np.trace(a)), 1.0)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            sym_eig(np.ones((2, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            sym_eig(np.array([[1.0, 2.0], [0.5, 1.0]]))

    def test_rejects_nan(self):
        a = np.eye(3)
        a[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            sym_eig(a)


class TestSolveSpd:
    def test_identity(self):
        b = np.array([1.0, -2.0, 3.0])
        assert np.allclose(solve_spd(np.eye(3), b), b)

    def test_scalar_multiple(self):
        x = solve_spd(2.0 * np.eye(2), [4.0, 6.0])
        assert np.allclose(x, [2.0, 3.0])

    def test_two_by_two_cramer(self):
        # Cramer's rule on [[4,1],[1,3]] x = (1,2): det=11, x=(1/11, 7/11)
        x = solve_spd(np.array([[4.0, 1.0], [1.0, 3.0]]), [1.0, 2.0])
        assert np.allclose(x, [1.0 / 11.0, 7.0 / 11.0], rtol=1e-12)

    @pytest.mark.parametrize("n", [3, 20, 120])
    def test_roundtrip(self, n):
        rng = np.random.default_rng(n)
        m = rng.standard_normal((n, n))
        a = m @ m.T + n * np.eye(n)
        b = rng.standard_normal(n)
        x = solve_spd(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-8 * np.linalg.norm(b)

    def test_rejects_indefinite(self):
        with pytest.raises(np.linalg.LinAlgError):
            solve_spd(np.array([[1.0, 0.0], [0.0, -1.0]]), [1.0, 1.0])

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            solve_spd(np.eye(3), [1.0, 2.0])


class TestSampleGaussianVec:
    def test_zero_cholesky_returns_mean(self):
        rng = RngStream(0)
        mu = np.array([1.5, -2.0, 0.25])
        assert np.array_equal(sample_gaussian_vec(rng, mu, np.zeros((3, 3))), mu)

    def test_seed_determinism(self):
        mu = np.zeros(4)
        ell = np.tril(np.random.default_rng(5).standard_normal((4, 4)))
        np.fill_diagonal(ell, np.abs(np.diag(ell)) + 0.1)
        a = sample_gaussian_vec(RngStream(42), mu, ell)
        b = sample_gaussian_vec(RngStream(42), mu, ell)
        assert np.array_equal(a, b)

    def test_clt_mean_bound(self):
        rng = RngStream(2024)
        n_draws = 10**5
        total = np.zeros(3)
        for _ in range(n_draws):
            total += sample_gaussian_vec(rng, np.zeros(3), np.eye(3))
        assert np.all(np.abs(total / n_draws) <= 4.0 / np.sqrt(n_draws))

    def test_rejects_upper_triangle(self):
        with pytest.raises(ValueError, match="lower-triangular"):
            sample_gaussian_vec(RngStream(0), np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            sample_gaussian_vec(RngStream(0), np.zeros(3), np.eye(2))


class TestSampleInverseGamma:
    def test_seed_determinism(self):
        a = [sample_inverse_gamma(RngStream(9), 2.0, 3.0) for _ in range(5)]
        b = [sample_inverse_gamma(RngStream(9), 2.0, 3.0) for _ in range(5)]
        assert a == b

    def test_mean_matches_moment_formula(self):
        # mean of InvGamma(shape, scale) is scale/(shape-1) for shape > 1
        rng = RngStream(77)
        shape, scale = 3.0, 2.0
        n_draws = 10**5
        draws = np.array([sample_inverse_gamma(rng, shape, scale) for _ in range(n_draws)])
        true_mean = scale / (shape - 1.0)
        # variance of InvGamma(3,2): scale^2/((a-1)^2 (a-2)) = 1
        assert abs(draws.mean() - true_mean) <= 3.0 / np.sqrt(n_draws)

    def test_median_shape_one(self):
        # for shape=1, scale=1 the CDF is exp(-1/x); median = 1/ln 2
        rng = RngStream(123)
        draws = np.array([sample_inverse_gamma(rng, 1.0, 1.0) for _ in range(10**5)])
        assert abs(np.median(draws) - 1.0 / np.log(2.0)) <= 0.05 * (1.0 / np.log(2.0))

    @pytest.mark.parametrize("shape,scale", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
    def test_rejects_non_positive_parameters(self, shape, scale):
        with pytest.raises(ValueError, match="positive"):
            sample_inverse_gamma(RngStream(0), shape, scale)


class TestRngStream:
    def test_replay_is_bit_exact(self):
        a = RngStream(314).standard_normal(1000)
        b = RngStream(314).standard_normal(1000)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        assert not np.array_equal(RngStream(1).standard_normal(10), RngStream(2).standard_normal(10))

    def test_substreams_are_index_addressed(self):
        root = RngStream(55)
        third = root.substream(3).standard_normal(8)
        # deriving the same index from a fresh root replays the child stream
        again = RngStream(55).substream(3).standard_normal(8)
        assert np.array_equal(third, again)

    def test_substreams_do_not_consume_parent_state(self):
        a = RngStream(55)
        a.substream(0)
        a.substream(1)
        b = RngStream(55)
        assert np.array_equal(a.standard_normal(5), b.standard_normal(5))

    def test_spawn_matches_substream_order(self):
        root = RngStream(8)
        children = root.spawn(4)
        for i, child in enumerate(children):
            assert np.array_equal(
                child.standard_normal(3), root.substream(i).standard_normal(3)
            )

    def test_substreams_are_distinct(self):
        root = RngStream(21)
        draws = [tuple(s.standard_normal(4)) for s in root.spawn(6)]
        assert len(set(draws)) == 6

    def test_rejects_negative_index(self):
        with pytest.raises(ValueError):
            RngStream(0).substream(-1)
