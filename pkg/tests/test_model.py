import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from nlgibbs.errors import DiscretizationTooCoarse, NegativeWeight, NonPositiveOperator, NotPositive
from nlgibbs.model import (
    GridSpec,
    SpectralModel,
    TwoBodyOperator,
    build_finite_rank_interaction,
    project_multiplication_kernel,
    solve_onebody_spectrum,
    swap_pairs,
    trace_inverse_power,
    verify_assumptions,
)


def harmonic_model(K=4, points=1200):
    return solve_onebody_spectrum(GridSpec(10.0, points, 2.0), 0.0, K)


def quartic_ground_oracle(nbasis=80):
    """Lowest eigenvalue of -d2/dx2 + x^4 in a harmonic-oscillator basis."""
    # -d2/dx2 + x^2 has spectrum 2n+1 with x = (a + a^+)/sqrt(2)
    n = np.arange(nbasis + 4)
    a = np.diag(np.sqrt(n[1:]), 1)
    x = (a + a.T) / np.sqrt(2)
    p2 = -((a - a.T) @ (a - a.T)) / 2
    H = p2 + np.linalg.matrix_power(x, 4)
    return np.linalg.eigvalsh(H[:nbasis, :nbasis])[0]


class TestSpectrum:
    def test_harmonic_spectrum(self):
        model = harmonic_model()
        np.testing.assert_allclose(model.eigenvalues, [1, 3, 5, 7], atol=1e-3)

    def test_chemical_potential_shift(self):
        a = harmonic_model()
        b = solve_onebody_spectrum(GridSpec(10.0, 1200, 2.0), 0.5, 4)
        np.testing.assert_allclose(b.eigenvalues, a.eigenvalues - 0.5, atol=1e-10)

    def test_quartic_ground_state(self):
        oracle = quartic_ground_oracle()
        assert abs(oracle - 1.0604) < 1e-4
        model = solve_onebody_spectrum(GridSpec(6.0, 3000, 4.0), 0.0, 1, tol=1e-5)
        assert abs(model.eigenvalues[0] - oracle) < 1e-5

    def test_eigenfunctions_orthonormal(self):
        model = harmonic_model()
        gram = model.eigenfunctions @ model.eigenfunctions.T * model.grid.spacing
        np.testing.assert_allclose(gram, np.eye(4), atol=1e-8)

    def test_refinement_converges(self):
        errs = []
        lam = [solve_onebody_spectrum(GridSpec(8.0, n, 2.0), 0.0, 3).eigenvalues for n in (99, 199, 399)]
        errs = [np.abs(lam[0] - lam[1]).max(), np.abs(lam[1] - lam[2]).max()]
        assert errs[0] / errs[1] >= 3

    def test_nonpositive(self):
        with pytest.raises(NonPositiveOperator):
            solve_onebody_spectrum(GridSpec(8.0, 200, 2.0), 1.5, 2)

    def test_too_coarse(self):
        with pytest.raises(DiscretizationTooCoarse):
            solve_onebody_spectrum(GridSpec(8.0, 21, 2.0), 0.0, 3, tol=1e-6)

    def test_K_must_be_below_points(self):
        with pytest.raises(ValueError):
            solve_onebody_spectrum(GridSpec(8.0, 5, 2.0), 0.0, 5)

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            GridSpec(1.0, 2)

    def test_model_rejects_nonpositive(self):
        with pytest.raises(NonPositiveOperator):
            SpectralModel(np.array([-0.1, 1.0]))


class TestTraceInversePower:
    @pytest.mark.parametrize("lam,p,expected", [((1, 2, 4), 1, 1.75), ((1, 2, 4), 2, 1.3125), ((1,), 3, 1.0)])
    def test_values(self, lam, p, expected):
        assert trace_inverse_power(SpectralModel(np.array(lam, float)), p) == pytest.approx(expected)

    def test_monotone(self):
        m = SpectralModel(np.array([1.5, 2.0, 3.0]))
        vals = [trace_inverse_power(m, p) for p in (0.5, 1, 2, 3)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        bigger = SpectralModel(np.array([1.5, 2.0, 3.0, 5.0]))
        assert trace_inverse_power(bigger, 1) > trace_inverse_power(m, 1)


class TestFiniteRank:
    def test_rank_one_single_mode(self):
        w = build_finite_rank_interaction([[1.0]], [2.0])
        np.testing.assert_allclose(w.matrix, [[2.0]])

    def test_zero_weights(self):
        w = build_finite_rank_interaction([[1, 0], [0, 1]], [0, 0])
        assert not np.any(w.matrix)

    def test_negative_weight(self):
        with pytest.raises(NegativeWeight):
            build_finite_rank_interaction([[1, 0]], [-1])

    def test_two_random_vectors_psd(self, rng):
        v = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        w = build_finite_rank_interaction(v, [1, 2])
        assert np.linalg.eigvalsh(w.matrix)[0] >= -1e-10

    @settings(max_examples=40, deadline=None)
    @given(
        K=st.integers(1, 4),
        m=st.integers(1, 3),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_property_psd_exchange(self, K, m, seed):
        r = np.random.default_rng(seed)
        vecs = r.standard_normal((m, K)) + 1j * r.standard_normal((m, K))
        w = build_finite_rank_interaction(vecs, r.uniform(0, 3, m))
        assert np.linalg.eigvalsh(w.matrix)[0] >= -1e-10
        np.testing.assert_allclose(w.matrix, swap_pairs(w.matrix, K), atol=1e-12)
        np.testing.assert_allclose(w.matrix, w.matrix.conj().T, atol=1e-12)


class TestKernelProjection:
    def test_constant_kernel(self):
        model = harmonic_model(3, 600)
        w = project_multiplication_kernel(model, lambda d: np.full_like(d, 1.7))
        np.testing.assert_allclose(w.matrix, 1.7 * np.eye(9), atol=1e-8)

    def test_zero_kernel(self):
        model = harmonic_model(3, 600)
        w = project_multiplication_kernel(model, np.zeros((600, 600)))
        assert np.abs(w.matrix).max() == 0

    def test_gaussian_ground_entry(self):
        model = harmonic_model(2, 1200)
        w = project_multiplication_kernel(model, lambda d: np.exp(-(d**2)))

        def integrand(y, x):
            u0 = np.pi**-0.25 * np.exp(-x * x / 2)
            v0 = np.pi**-0.25 * np.exp(-y * y / 2)
            return u0**2 * v0**2 * np.exp(-((x - y) ** 2))

        oracle, _ = integrate.dblquad(integrand, -10, 10, -10, 10, epsabs=1e-11)
        assert abs(w.matrix[0, 0].real - oracle) < 1e-4

    def test_non_positive_kernel(self):
        model = harmonic_model(3, 600)
        # a kernel with a negative Fourier transform somewhere
        with pytest.raises(NotPositive):
            project_multiplication_kernel(model, lambda d: -np.exp(-(d**2)))


class TestAssumptions:
    def test_zero_interaction(self):
        m = SpectralModel(np.array([1.0, 2.0]))
        rep = verify_assumptions(m, TwoBodyOperator.zero(2), 1.0, 1.5)
        assert rep.w_weighted_trace == 0
        assert rep.dominated
        assert rep.trace_h_inv_p == pytest.approx(1.5)

    def test_rank_one_trace(self):
        m = SpectralModel(np.array([1.5, 2.0, 3.0]))
        w = build_finite_rank_interaction([[1, 0, 0]], [2.5])
        rep = verify_assumptions(m, w, 1.0, 2.0)
        assert rep.w_weighted_trace == pytest.approx(2.5 / 1.5**2)

    def test_not_dominated(self):
        m = SpectralModel(np.array([1.5, 2.0, 3.0]))
        p_prime = 1.5
        M = 1.01 * m.eigenvalues[-1] ** (2 * (1 - p_prime))
        w = TwoBodyOperator(M * np.eye(9) * 100)
        assert not verify_assumptions(m, w, 1.0, p_prime).dominated

    def test_requires_ordering(self):
        m = SpectralModel(np.array([1.0]))
        with pytest.raises(ValueError):
            verify_assumptions(m, TwoBodyOperator.zero(1), 2.0, 1.0)


class TestSerialization:
    def test_spectral_round_trip(self):
        m = harmonic_model(3, 300)
        back = SpectralModel.from_json(m.to_json())
        np.testing.assert_array_equal(back.eigenvalues, m.eigenvalues)
        np.testing.assert_array_equal(back.eigenfunctions, m.eigenfunctions)
        assert back.grid == m.grid

    def test_two_body_round_trip(self, rng):
        v = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        w = build_finite_rank_interaction(v, [1.0, 0.5])
        back = TwoBodyOperator.from_json(w.to_json())
        np.testing.assert_array_equal(back.matrix, w.matrix)

    def test_two_body_schema(self):
        w = build_finite_rank_interaction([[1, 0]], [2.0])
        d = w.to_dict()
        assert d["K"] == 2
        assert len(d["matrix"]) == 16 and d["matrix"][0] == [2.0, 0.0]
