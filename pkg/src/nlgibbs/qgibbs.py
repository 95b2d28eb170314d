"""Quantum Gibbs states, reduced density matrices and entropy utilities."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import factorial
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.signal import lfilter

from .errors import (
    BadDims,
    DimensionOverflow,
    NonHermitian,
    NotAState,
    OrderTooLarge,
    SupportViolation,
)
from .fock import FockBasis, FockOperator, ladder_matrix
from .model import SpectralModel

PSD_TOL = 1e-10
DENSE_MAX_DIM = 20_000
REDUCED_MAX_DIM = 4096


@dataclass
class DensityMatrix:
    """Hermitian positive matrix with an optional tensor-factor layout ``dims``.

    The trace is not forced to one: bosonic reduced matrices scale with the
    particle number.
    """

    matrix: np.ndarray
    dims: Optional[tuple] = None

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if not np.iscomplexobj(m):
            m = m.astype(float)
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if np.abs(m - m.conj().T).max(initial=0.0) > 1e-12 * scale:
            raise NonHermitian("density matrix is not Hermitian")
        self.matrix = 0.5 * (m + m.conj().T)
        if self.dims is None:
            self.dims = (m.shape[0],)
        self.dims = tuple(int(d) for d in self.dims)
        if int(np.prod(self.dims)) != m.shape[0]:
            raise BadDims(f"dims {self.dims} do not multiply to {m.shape[0]}")

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    @property
    def shape(self):
        return self.matrix.shape

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return bool(self.eigvalsh()[0] >= -tol)

    def kron(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(np.kron(self.matrix, other.matrix), self.dims + other.dims)


@dataclass
class _Block:
    rows: slice
    energies: np.ndarray
    vectors: Optional[np.ndarray]  # None when the block is diagonal
    number: Optional[int]  # particle number, None for the unsectored fallback
    probs: np.ndarray = field(default=None)


@dataclass
class ThermalResult:
    """Gibbs state ``exp(-H/T)/Z`` held as per-sector eigendecompositions."""

    basis: FockBasis
    blocks: List[_Block]
    log_partition: float
    free_energy: float
    temperature: float
    coupling: float = 0.0
    _dense: Optional[DensityMatrix] = field(default=None, repr=False)

    @property
    def state(self) -> DensityMatrix:
        """Dense Gibbs state; only for dimensions up to ``DENSE_MAX_DIM``."""
        if self._dense is None:
            dim = self.basis.dim
            if dim > DENSE_MAX_DIM:
                raise DimensionOverflow(f"dense state of dimension {dim} requested")
            full = np.zeros((dim, dim), dtype=complex if self._is_complex() else float)
            for b in self.blocks:
                full[b.rows, b.rows] = _block_matrix(b)
            self._dense = DensityMatrix(full)
        return self._dense

    def _is_complex(self) -> bool:
        return any(b.vectors is not None and np.iscomplexobj(b.vectors) for b in self.blocks)

    def sector_probabilities(self) -> np.ndarray:
        """Probability of each particle-number sector ``0..n_max``."""
        out = np.zeros(self.basis.n_max + 1)
        nums = self.basis.numbers
        for b in self.blocks:
            if b.number is not None:
                out[b.number] += b.probs.sum()
            else:
                pops = _state_populations(b)
                np.add.at(out, nums[b.rows], pops)
        return out

    def mean_number(self) -> float:
        p = self.sector_probabilities()
        return float(p @ np.arange(p.size))

    def energy(self) -> float:
        return float(sum(b.probs @ b.energies for b in self.blocks))

    def entropy(self) -> float:
        p = np.concatenate([b.probs for b in self.blocks])
        p = p[p > 0]
        return float(-(p * np.log(p)).sum())


def _block_matrix(b: _Block) -> np.ndarray:
    if b.vectors is None:
        return np.diag(b.probs)
    return (b.vectors * b.probs) @ b.vectors.conj().T


def _state_populations(b: _Block) -> np.ndarray:
    if b.vectors is None:
        return b.probs
    return (np.abs(b.vectors) ** 2) @ b.probs


def _diagonalize(block: np.ndarray):
    if np.iscomplexobj(block) and not np.any(block.imag):
        block = block.real
    return np.linalg.eigh(block)


def thermal_state(H: FockOperator, T: float, coupling: float = 0.0) -> ThermalResult:
    """Gibbs state of ``H`` at temperature ``T``.

    Number-conserving operators are diagonalized one particle-number sector
    at a time; diagonal sectors are used as they are.  Exponentials are
    shifted by the global ground energy.
    """
    if T <= 0:
        raise ValueError("temperature must be positive")
    m = H.matrix
    scale = max(1.0, float(abs(m).max())) if m.nnz else 1.0
    if H.hermitian_defect() > 1e-12 * scale:
        raise NonHermitian("Hamiltonian is not Hermitian")
    basis = H.basis
    blocks: List[_Block] = []
    if H.is_number_conserving():
        diagonal = H.is_diagonal()
        for N in range(basis.n_max + 1):
            rows = basis.sector(N)
            if diagonal:
                E = np.real(m[rows, rows].diagonal()).astype(float)
                blocks.append(_Block(rows, E, None, N))
            else:
                E, V = _diagonalize(m[rows, rows].toarray())
                blocks.append(_Block(rows, E, V, N))
    else:
        if basis.dim > DENSE_MAX_DIM:
            raise DimensionOverflow(f"dense diagonalization of dimension {basis.dim}")
        E, V = _diagonalize(m.toarray())
        blocks.append(_Block(slice(0, basis.dim), E, V, None))

    E0 = min(b.energies.min() for b in blocks)
    total = 0.0
    for b in blocks:
        b.probs = np.exp(-(b.energies - E0) / T)
        total += b.probs.sum()
    for b in blocks:
        b.probs /= total
    log_z = -E0 / T + np.log(total)
    return ThermalResult(basis, blocks, float(log_z), float(-T * log_z), float(T), float(coupling))


def free_energy_functional(H: np.ndarray, gamma: np.ndarray, T: float) -> float:
    """``tr[H Gamma] + T tr[Gamma log Gamma]`` for dense matrices."""
    p = np.linalg.eigvalsh(gamma)
    p = p[p > 0]
    return float(np.real(np.trace(H @ gamma)) + T * np.sum(p * np.log(p)))


def free_sector_sums(model: SpectralModel, T: float, n_max: int) -> np.ndarray:
    """Unnormalized free Gibbs weight of each sector ``N = 0..n_max``.

    These are complete homogeneous symmetric polynomials of the Boltzmann
    factors ``exp(-lambda_j / T)``, built one mode at a time.
    """
    c = np.zeros(n_max + 1)
    c[0] = 1.0
    for xj in np.exp(-model.eigenvalues / T):
        c = lfilter([1.0], [1.0, -xj], c)
    return c


def free_sector_weights(model: SpectralModel, T: float, n_max: int) -> np.ndarray:
    """Sector probabilities of the free Gibbs state truncated at ``n_max`` particles."""
    c = free_sector_sums(model, T, n_max)
    return c / c.sum()


def _annihilation_strings(basis: FockBasis, k: int):
    a = [ladder_matrix(basis, j) for j in range(basis.modes)]
    strings = []
    for idx in product(range(basis.modes), repeat=k):
        op = sp.identity(basis.dim, format="csr")
        for j in reversed(idx):  # a_{i1} ... a_{ik}, rightmost acts first
            op = a[j] @ op
        strings.append(op.tocsr())
    return strings


def reduced_density_matrix(result: ThermalResult, basis: FockBasis, k: int) -> DensityMatrix:
    """``G[(i..), (j..)] = tr[Gamma a_j1^+ .. a_jk^+ a_i1 .. a_ik] / k!``.

    With this normalization ``k! G / T^k`` is the object compared against the
    classical moments.
    """
    if k < 1:
        raise OrderTooLarge("order must be at least 1")
    K = basis.modes
    if K**k > REDUCED_MAX_DIM:
        raise OrderTooLarge(f"K^k = {K**k} exceeds {REDUCED_MAX_DIM}")
    strings = _annihilation_strings(basis, k)
    G = np.zeros((K**k, K**k), dtype=complex)
    for b in result.blocks:
        if b.number is not None and b.number < k:
            continue
        if b.number is not None:
            target = basis.sector(b.number - k)
        else:
            target = slice(0, basis.dim)
        sq = np.sqrt(b.probs)
        if b.vectors is None:
            ys = [s[target, b.rows] @ sp.diags(sq) for s in strings]
            Y = sp.vstack([y.reshape(1, -1) for y in ys]).tocsr()
            G += (Y @ Y.conj().T).toarray()
        else:
            W = b.vectors * sq
            Y = np.stack([(s[target, b.rows] @ W).ravel() for s in strings])
            G += Y @ Y.conj().T
    G /= factorial(k)
    if not np.any(G.imag):
        G = G.real
    return DensityMatrix(G, (K,) * k)


def truncation_adequacy(result: ThermalResult, basis: FockBasis, eps: Optional[float] = None):
    """Probability mass on the top particle-number sector ``N = n_max``.

    With ``eps`` given, returns ``(tail, tail < eps)``.
    """
    tail = float(result.sector_probabilities()[basis.n_max])
    if eps is None:
        return tail
    return tail, tail < eps


def von_neumann_entropy(rho) -> float:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if abs(np.trace(m) - 1.0) > 1e-8:
        raise NotAState(f"trace {np.real(np.trace(m)):.6g} != 1")
    p = np.linalg.eigvalsh(m)
    if p[0] < -1e-8:
        raise NotAState("density matrix has negative eigenvalues")
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def relative_entropy(rho, sigma, tol: float = 1e-12) -> float:
    """``tr[rho (log rho - log sigma)]``; raises when ``rho`` leaves the support of ``sigma``."""
    r = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    s = sigma.matrix if isinstance(sigma, DensityMatrix) else np.asarray(sigma)
    if r.shape != s.shape:
        raise BadDims("states have different shapes")
    pr, vr = np.linalg.eigh(r)
    ps, vs = np.linalg.eigh(s)
    kernel = vs[:, ps <= tol]
    if kernel.size and np.real(np.trace(kernel.conj().T @ r @ kernel)) > 1e-10:
        raise SupportViolation("support of rho is not contained in support of sigma")
    keep = pr > 0
    term1 = np.sum(pr[keep] * np.log(pr[keep]))
    log_s = np.where(ps > tol, np.log(np.clip(ps, tol, None)), 0.0)
    overlap = np.abs(vr[:, keep].conj().T @ vs) ** 2  # |<r_a|s_b>|^2
    term2 = np.sum(pr[keep] * (overlap @ log_s))
    return float(term1 - term2)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    dims = rho.dims
    n = len(dims)
    keep = sorted(set(int(i) for i in keep))
    if any(i < 0 or i >= n for i in keep):
        raise BadDims(f"subsystems {keep} out of range for dims {dims}")
    t = rho.matrix.reshape(dims + dims)
    drop = [i for i in range(n) if i not in keep]
    # contract each dropped ket index with its bra partner, highest first
    for count, i in enumerate(sorted(drop, reverse=True)):
        m = n - count
        t = np.trace(t, axis1=i, axis2=i + m)
    kd = tuple(dims[i] for i in keep)
    size = int(np.prod(kd)) if kd else 1
    return DensityMatrix(t.reshape(size, size), kd if kd else (1,))


def schatten_distance(A, B, p: float = 1.0) -> float:
    """Schatten ``p``-norm of ``A - B``; ``p = np.inf`` gives the operator norm."""
    a = A.matrix if isinstance(A, DensityMatrix) else np.asarray(A)
    b = B.matrix if isinstance(B, DensityMatrix) else np.asarray(B)
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    if p < 1:
        raise ValueError("Schatten order must be >= 1")
    s = np.linalg.svd(a - b, compute_uv=False)
    if np.isinf(p):
        return float(s.max(initial=0.0))
    return float(np.sum(s**p) ** (1.0 / p))


def permanent(M) -> complex:
    """Ryser's formula with Gray-code updates."""
    M = np.asarray(M)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return 1.0
    if n == 1:
        return M[0, 0]
    row_sums = np.zeros(n, dtype=M.dtype if np.iscomplexobj(M) else float)
    total = 0.0
    sign = -1.0 if n % 2 else 1.0  # (-1)^(n - |S|), starting from |S| = 0
    prev = 0
    for g in range(1, 2**n):
        gray = g ^ (g >> 1)
        changed = gray ^ prev
        j = changed.bit_length() - 1
        if gray & changed:
            row_sums = row_sums + M[:, j]
        else:
            row_sums = row_sums - M[:, j]
        prev = gray
        sign = -sign
        total += sign * np.prod(row_sums)
    return total


def wick_moment(gamma, rows: Sequence[int], cols: Sequence[int]):
    """Permanent of ``gamma[rows, cols]``: the Gaussian moment of matching order."""
    if len(rows) != len(cols):
        raise ValueError("rows and cols must have equal length")
    g = np.asarray(gamma)
    if len(rows) == 0:
        return 1.0
    return permanent(g[np.ix_(list(rows), list(cols))])
