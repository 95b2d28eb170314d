"""Truncated bosonic Fock space and second-quantized operators.

States are occupation vectors ``(n_0, ..., n_{K-1})`` with total particle
number at most ``n_max``.  They are ordered by total number first, and in
descending lexicographic order inside each number sector, so that every
sector occupies a contiguous index range.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from .errors import DimensionOverflow
from .model import SpectralModel, TwoBodyOperator

DEFAULT_MAX_DIM = 2_000_000


def _compositions(total: int, parts: int) -> Iterator[tuple]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class FockBasis:
    """Occupation-number basis of the Fock space truncated at ``n_max`` particles."""

    def __init__(self, K: int, n_max: int, max_dim: int = DEFAULT_MAX_DIM):
        if K < 1 or n_max < 0:
            raise ValueError("need K >= 1 and n_max >= 0")
        dim = comb(K + n_max, K)
        if dim > max_dim:
            raise DimensionOverflow(f"Fock dimension {dim} exceeds cap {max_dim}")
        self.modes = K
        self.n_max = n_max
        self.sector_sizes = np.array([comb(N + K - 1, K - 1) for N in range(n_max + 1)])
        self.offsets = np.concatenate([[0], np.cumsum(self.sector_sizes)])
        states = np.empty((dim, K), dtype=np.int64)
        pos = 0
        for N in range(n_max + 1):
            for occ in _compositions(N, K):
                states[pos] = occ
                pos += 1
        states.setflags(write=False)
        self.states = states
        self.numbers = states.sum(axis=1)
        self._radix = n_max + 1
        self._codes = self._encode(states)
        self._order = np.argsort(self._codes, kind="stable")
        self._sorted_codes = self._codes[self._order]

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return len(self)

    def __repr__(self) -> str:
        return f"FockBasis(K={self.modes}, n_max={self.n_max}, dim={self.dim})"

    def _encode(self, occ: np.ndarray) -> np.ndarray:
        if self._radix ** self.modes < 2**62:
            weights = self._radix ** np.arange(self.modes, dtype=np.int64)
            return np.asarray(occ, dtype=np.int64) @ weights
        # wide codes fall back to object integers
        weights = [self._radix**j for j in range(self.modes)]
        return np.array([sum(int(n) * c for n, c in zip(row, weights)) for row in occ], dtype=object)

    def index(self, occupation) -> int:
        """Ordinal of an occupation vector; ``KeyError`` if it is not in the basis."""
        return int(self.indices(np.atleast_2d(occupation))[0])

    def indices(self, occupations: np.ndarray) -> np.ndarray:
        occ = np.asarray(occupations)
        if occ.ndim != 2 or occ.shape[1] != self.modes:
            raise ValueError("occupations must be (count, K)")
        if occ.size and (occ.min() < 0 or occ.sum(axis=1).max() > self.n_max):
            raise KeyError("occupation outside the truncated basis")
        codes = self._encode(occ)
        pos = np.searchsorted(self._sorted_codes, codes)
        return self._order[pos]

    def sector(self, N: int) -> slice:
        return slice(int(self.offsets[N]), int(self.offsets[N + 1]))


@dataclass(frozen=True)
class FockOperator:
    basis: FockBasis
    matrix: sp.csr_matrix

    def __post_init__(self):
        if self.matrix.shape != (self.basis.dim, self.basis.dim):
            raise ValueError("operator does not match basis dimension")

    def __add__(self, other: "FockOperator") -> "FockOperator":
        self._check(other)
        return FockOperator(self.basis, (self.matrix + other.matrix).tocsr())

    def __mul__(self, scalar: float) -> "FockOperator":
        return FockOperator(self.basis, (self.matrix * scalar).tocsr())

    __rmul__ = __mul__

    def _check(self, other):
        if other.basis is not self.basis:
            raise ValueError("operators live on different bases")

    def is_diagonal(self) -> bool:
        m = self.matrix.tocoo()
        return bool(np.all((m.row == m.col) | (m.data == 0)))

    def is_number_conserving(self) -> bool:
        m = self.matrix.tocoo()
        nums = self.basis.numbers
        return bool(np.all((nums[m.row] == nums[m.col]) | (m.data == 0)))

    def block(self, N: int) -> np.ndarray:
        s = self.basis.sector(N)
        return self.matrix[s, s].toarray()

    def hermitian_defect(self) -> float:
        d = self.matrix - self.matrix.conj().T
        return float(abs(d).max()) if d.nnz else 0.0


def enumerate_basis(K: int, n_max: int, max_dim: int = DEFAULT_MAX_DIM) -> FockBasis:
    return FockBasis(K, n_max, max_dim)


def ladder_matrix(basis: FockBasis, j: int) -> sp.csr_matrix:
    """Annihilation operator ``a_j`` (modes are 0-based); ``.T.conj()`` gives ``a_j^+``."""
    if not 0 <= j < basis.modes:
        raise IndexError(f"mode {j} out of range")
    occ = basis.states
    cols = np.flatnonzero(occ[:, j] > 0)
    lowered = occ[cols].copy()
    lowered[:, j] -= 1
    rows = basis.indices(lowered)
    vals = np.sqrt(occ[cols, j].astype(float))
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))


def number_operator(basis: FockBasis) -> sp.csr_matrix:
    return sp.diags(basis.numbers.astype(float)).tocsr()


def assemble_H0(basis: FockBasis, model: SpectralModel) -> FockOperator:
    if model.K != basis.modes:
        raise ValueError("model and basis disagree on the number of modes")
    diag = basis.states @ model.eigenvalues
    return FockOperator(basis, sp.diags(diag).tocsr())


def assemble_W(basis: FockBasis, w: TwoBodyOperator) -> FockOperator:
    """``1/2 sum w[(i,j),(k,l)] a_i^+ a_j^+ a_l a_k`` built from pair annihilators.

    Annihilators are exact on the truncated space and creators are their
    adjoints, so the normal-ordered strings carry no truncation error.
    """
    K = basis.modes
    if w.K != K:
        raise ValueError("interaction and basis disagree on the number of modes")
    a = [ladder_matrix(basis, j) for j in range(K)]
    pairs = [(a[l] @ a[k]).tocsr() for k in range(K) for l in range(K)]  # index k*K + l
    m = w.matrix
    if np.abs(m.imag).max(initial=0.0) == 0.0:
        m = m.real
    out = sp.csr_matrix((basis.dim, basis.dim), dtype=m.dtype)
    for kl in range(K * K):
        col = m[:, kl]
        if not np.any(col):
            continue
        creators = None
        for ij in np.flatnonzero(col):
            term = col[ij] * pairs[ij].conj().T
            creators = term if creators is None else creators + term
        out = out + creators @ pairs[kl]
    out = 0.5 * (out + out.conj().T)
    return FockOperator(basis, (0.5 * out).tocsr())


def assemble_H(basis: FockBasis, model: SpectralModel, w: TwoBodyOperator, coupling: float) -> FockOperator:
    """``H_0 + coupling * W``."""
    H0 = assemble_H0(basis, model)
    if coupling == 0:
        return H0
    return H0 + coupling * assemble_W(basis, w)
