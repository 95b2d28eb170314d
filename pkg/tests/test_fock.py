from math import comb

import numpy as np
import pytest
import scipy.sparse as sp

from nlgibbs.errors import DimensionOverflow
from nlgibbs.fock import (
    FockBasis,
    assemble_H,
    assemble_H0,
    assemble_W,
    enumerate_basis,
    ladder_matrix,
    number_operator,
)
from nlgibbs.model import SpectralModel, TwoBodyOperator, build_finite_rank_interaction


def random_w(rng, K, rank=2):
    v = rng.standard_normal((rank, K)) + 1j * rng.standard_normal((rank, K))
    return build_finite_rank_interaction(v, rng.uniform(0.2, 2.0, rank))


class TestBasis:
    def test_small(self):
        b = enumerate_basis(2, 1)
        assert [tuple(s) for s in b.states] == [(0, 0), (1, 0), (0, 1)]

    @pytest.mark.parametrize("K,n", [(3, 2), (1, 5), (4, 3), (2, 0)])
    def test_dimension(self, K, n):
        assert enumerate_basis(K, n).dim == comb(K + n, K)

    def test_vacuum_only(self):
        b = enumerate_basis(5, 0)
        assert b.dim == 1 and not b.states.any()

    def test_ordering_graded(self):
        b = enumerate_basis(3, 4)
        assert np.all(np.diff(b.numbers) >= 0)
        for N in range(5):
            block = [tuple(s) for s in b.states[b.sector(N)]]
            assert block == sorted(block, reverse=True)

    def test_index_bijection(self):
        b = enumerate_basis(3, 4)
        assert [b.index(s) for s in b.states] == list(range(b.dim))
        with pytest.raises(KeyError):
            b.index([5, 0, 0])

    def test_overflow(self):
        with pytest.raises(DimensionOverflow):
            FockBasis(4, 40, max_dim=1000)


class TestLadder:
    def test_vacuum(self):
        b = enumerate_basis(2, 3)
        vac = np.zeros(b.dim)
        vac[0] = 1
        assert not np.any(ladder_matrix(b, 0) @ vac)

    def test_single_particle(self):
        b = enumerate_basis(2, 2)
        v = np.zeros(b.dim)
        v[b.index([1, 0])] = 1
        out = ladder_matrix(b, 0) @ v
        expected = np.zeros(b.dim)
        expected[b.index([0, 0])] = 1
        np.testing.assert_allclose(out, expected)

    def test_amplitude(self):
        b = enumerate_basis(2, 4)
        v = np.zeros(b.dim)
        v[b.index([1, 3])] = 1
        out = ladder_matrix(b, 1) @ v
        assert out[b.index([1, 2])] == pytest.approx(np.sqrt(3))

    def test_ccr_below_cap(self):
        K, n_max = 3, 4
        b = enumerate_basis(K, n_max)
        a = [ladder_matrix(b, j) for j in range(K)]
        low = np.flatnonzero(b.numbers < n_max)
        for i in range(K):
            for j in range(K):
                c = (a[i] @ a[j].T - a[j].T @ a[i]).toarray()
                expected = np.eye(b.dim) * (i == j)
                np.testing.assert_allclose(c[np.ix_(low, low)], expected[np.ix_(low, low)], atol=1e-14)


class TestH0:
    def test_diagonal_values(self):
        b = enumerate_basis(2, 3)
        H = assemble_H0(b, SpectralModel(np.array([1.0, 2.0])))
        assert H.matrix[0, 0] == 0
        i = b.index([1, 1])
        assert H.matrix[i, i] == pytest.approx(3.0)
        assert H.is_diagonal()


class TestW:
    def test_single_mode(self):
        b = enumerate_basis(1, 6)
        W = assemble_W(b, TwoBodyOperator(np.array([[1.3]])))
        n = np.arange(7)
        np.testing.assert_allclose(W.matrix.diagonal(), 1.3 / 2 * n * (n - 1))

    def test_low_sectors_vanish(self, rng):
        b = enumerate_basis(3, 4)
        W = assemble_W(b, random_w(rng, 3)).matrix.toarray()
        low = np.flatnonzero(b.numbers <= 1)
        assert np.abs(W[low]).max() == 0 and np.abs(W[:, low]).max() == 0

    def test_two_boson_sector(self):
        # explicit symmetric two-particle isometry for K = 2
        phi = np.array([0.6, 0.8j])
        w = build_finite_rank_interaction([phi], [1.7])
        b = enumerate_basis(2, 3)
        W = assemble_W(b, w)
        # occupations (2,0), (1,1), (0,2) <-> |00>, (|01>+|10>)/sqrt2, |11>
        S = np.zeros((4, 3))
        S[0, 0] = 1
        S[1, 1] = S[2, 1] = 1 / np.sqrt(2)
        S[3, 2] = 1
        oracle = S.T @ w.matrix @ S
        np.testing.assert_allclose(W.block(2), oracle, atol=1e-12)

    def test_number_conserving(self, rng):
        b = enumerate_basis(3, 5)
        W = assemble_W(b, random_w(rng, 3)).matrix
        Nop = number_operator(b)
        comm = W @ Nop - Nop @ W
        assert (abs(comm).max() if comm.nnz else 0.0) <= 1e-10

    def test_psd_on_sectors(self, rng):
        b = enumerate_basis(3, 5)
        W = assemble_W(b, random_w(rng, 3))
        for N in range(b.n_max):
            assert np.linalg.eigvalsh(W.block(N)).min() >= -1e-10

    @pytest.mark.parametrize("lam", [-2.0, 0.0, 0.3, 5.0])
    def test_hamiltonian_hermitian(self, rng, lam):
        b = enumerate_basis(3, 4)
        H = assemble_H(b, SpectralModel(np.array([1.0, 1.5, 2.5])), random_w(rng, 3), lam)
        assert H.hermitian_defect() <= 1e-12

    def test_pair_sum_in_first_quantization(self, rng):
        """Sector N equals sum_{i<j} w_ij restricted to symmetric N-particle states."""
        K, N = 2, 3
        w = random_w(rng, K)
        b = enumerate_basis(K, N)
        block = assemble_W(b, w).block(N)
        # symmetric normalized states for each occupation, on (C^K)^N
        from itertools import product

        dim = K**N
        iso = np.zeros((dim, b.sector_sizes[N]), dtype=complex)
        for col, occ in enumerate(b.states[b.sector(N)]):
            for idx in product(range(K), repeat=N):
                if tuple(np.bincount(idx, minlength=K)) == tuple(occ):
                    iso[np.ravel_multi_index(idx, (K,) * N), col] = 1
            iso[:, col] /= np.linalg.norm(iso[:, col])
        full = np.zeros((dim, dim), dtype=complex)
        w4 = w.matrix.reshape(K, K, K, K)
        for idx in product(range(K), repeat=N):
            for jdx in product(range(K), repeat=N):
                for i in range(N):
                    for j in range(i + 1, N):
                        others = all(idx[m] == jdx[m] for m in range(N) if m not in (i, j))
                        if others:
                            full[np.ravel_multi_index(idx, (K,) * N), np.ravel_multi_index(jdx, (K,) * N)] += w4[
                                idx[i], idx[j], jdx[i], jdx[j]
                            ]
        np.testing.assert_allclose(block, iso.conj().T @ full @ iso, atol=1e-12)
