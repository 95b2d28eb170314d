"""Distinguishable particles: the mean-field free energy, its self-consistent
minimizer, and the exact N-body Gibbs state on the full tensor space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .errors import BadDims, DimensionOverflow, NoConvergence, NotAState
from .model import TwoBodyOperator
from .qgibbs import DensityMatrix, partial_trace, schatten_distance

DEFAULT_MAX_DIM = 4096


@dataclass(frozen=True)
class MeanFieldProblem:
    h0: np.ndarray
    w: TwoBodyOperator
    coupling: float
    temperature: float

    def __post_init__(self):
        h0 = np.asarray(self.h0)
        if h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
            raise ValueError("h0 must be square")
        if not np.allclose(h0, h0.conj().T, atol=1e-12):
            raise ValueError("h0 must be Hermitian")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.w.K != h0.shape[0]:
            raise ValueError("h0 and w disagree on the one-body dimension")
        object.__setattr__(self, "h0", h0)

    @property
    def K(self) -> int:
        return self.h0.shape[0]


@dataclass
class SCFResult:
    gamma: DensityMatrix
    free_energy: float
    iterations: int
    residual: float
    history: List[float] = field(default_factory=list)


@dataclass
class ExactBoltzonResult:
    free_energy: float
    reduced: List[DensityMatrix]  # reduced[k - 1] is the k-body matrix
    n: int
    state: DensityMatrix


def _as_array(gamma) -> np.ndarray:
    return gamma.matrix if isinstance(gamma, DensityMatrix) else np.asarray(gamma)


def _entropy_term(gamma: np.ndarray) -> float:
    p = np.linalg.eigvalsh(gamma)
    p = p[p > 0]
    return float(np.sum(p * np.log(p)))


def mean_field_free_energy(gamma, prob: MeanFieldProblem) -> float:
    """``tr[h0 g] + (lambda/2) tr[w g(x)g] + T tr[g log g]``."""
    g = _as_array(gamma)
    if abs(np.trace(g) - 1) > 1e-8 or np.linalg.eigvalsh(g)[0] < -1e-10:
        raise NotAState("gamma must be a one-body state")
    kinetic = np.real(np.trace(prob.h0 @ g))
    pair = np.real(np.trace(prob.w.matrix @ np.kron(g, g)))
    return float(kinetic + 0.5 * prob.coupling * pair + prob.temperature * _entropy_term(g))


def mean_field_hamiltonian(gamma, prob: MeanFieldProblem) -> np.ndarray:
    """``h0 + lambda tr_2[w (1 (x) gamma)]``, the derivative of the energy terms."""
    g = _as_array(gamma)
    contraction = np.einsum("ijkl,lj->ik", prob.w.tensor(), g)
    h = prob.h0 + prob.coupling * contraction
    return 0.5 * (h + h.conj().T)


def gibbs_state(h: np.ndarray, T: float) -> np.ndarray:
    e, v = np.linalg.eigh(h)
    p = np.exp(-(e - e[0]) / T)
    p /= p.sum()
    return (v * p) @ v.conj().T


def scf_minimize(
    prob: MeanFieldProblem,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> SCFResult:
    """Damped fixed-point iteration ``g <- (1-a) g + a Gibbs(h_eff(g))``.

    A step that raises the free energy is retried with half the damping.
    ``residual`` is the trace-norm distance between the returned state and
    the Gibbs state of its own mean-field Hamiltonian.
    """
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    T = prob.temperature
    g = gibbs_state(prob.h0, T)
    F = mean_field_free_energy(g, prob)
    history = [F]
    alpha = damping
    for it in range(max_iter):
        target = gibbs_state(mean_field_hamiltonian(g, prob), T)
        residual = schatten_distance(target, g, 1)
        if residual <= tol:
            return SCFResult(DensityMatrix(g), F, it, residual, history)
        while True:
            cand = (1 - alpha) * g + alpha * target
            F_new = mean_field_free_energy(cand, prob)
            if F_new <= F + 1e-14 or alpha < 1e-12:
                break
            alpha *= 0.5
        if F_new > F:
            # no decrease possible at machine precision; stay put
            return SCFResult(DensityMatrix(g), F, it, residual, history)
        g, F = 0.5 * (cand + cand.conj().T), F_new
        history.append(F)
    residual = schatten_distance(gibbs_state(mean_field_hamiltonian(g, prob), T), g, 1)
    if residual <= tol:
        return SCFResult(DensityMatrix(g), F, max_iter, residual, history)
    raise NoConvergence(f"residual {residual:.3g} after {max_iter} iterations")


def _embed_one_body(h: np.ndarray, site: int, N: int) -> np.ndarray:
    K = h.shape[0]
    left = np.eye(K**site)
    right = np.eye(K ** (N - site - 1))
    return np.kron(np.kron(left, h), right)


def _embed_two_body(w: np.ndarray, i: int, j: int, N: int) -> np.ndarray:
    """``w`` acting on tensor factors ``i < j`` of ``(C^K)^N``."""
    K = int(round(np.sqrt(w.shape[0])))
    full = np.kron(w, np.eye(K ** (N - 2))).reshape((K,) * (2 * N))
    # factors 0, 1 of ``full`` must move to i, j; the rest keep their order
    rest = [s for s in range(N) if s not in (i, j)]
    src = [None] * N
    src[i], src[j] = 0, 1
    for pos, s in zip(rest, range(2, N)):
        src[pos] = s
    perm = src + [N + s for s in src]
    return full.transpose(perm).reshape(K**N, K**N)


def nbody_hamiltonian(prob: MeanFieldProblem, N: int) -> np.ndarray:
    """``sum_j h0_j + lambda/(N-1) sum_{i<j} w_ij`` on the unsymmetrized space."""
    K = prob.K
    dtype = complex if np.iscomplexobj(prob.h0) or np.any(prob.w.matrix.imag) else float
    H = np.zeros((K**N, K**N), dtype=dtype)
    for site in range(N):
        H += _embed_one_body(prob.h0, site, N)
    if N >= 2 and prob.coupling != 0:
        w = prob.w.matrix if dtype is complex else prob.w.matrix.real
        scale = prob.coupling / (N - 1)
        for i in range(N):
            for j in range(i + 1, N):
                H += scale * _embed_two_body(w, i, j, N)
    return 0.5 * (H + H.conj().T)


def exact_gibbs_distinguishable(
    prob: MeanFieldProblem, N: int, k_max: int = 1, max_dim: int = DEFAULT_MAX_DIM
) -> ExactBoltzonResult:
    if N < 1:
        raise ValueError("need at least one particle")
    K = prob.K
    if K**N > max_dim:
        raise DimensionOverflow(f"K^N = {K**N} exceeds cap {max_dim}")
    if not 1 <= k_max <= N:
        raise ValueError("need 1 <= k_max <= N")
    T = prob.temperature
    e, v = np.linalg.eigh(nbody_hamiltonian(prob, N))
    p = np.exp(-(e - e[0]) / T)
    Z = p.sum()
    p /= Z
    F = float(e[0] - T * np.log(Z))
    state = DensityMatrix((v * p) @ v.conj().T, (K,) * N)
    reduced = [partial_trace(state, range(k)) for k in range(1, k_max + 1)]
    return ExactBoltzonResult(F, reduced, N, state)


def permutation_conjugate(rho: DensityMatrix, sigma: Sequence[int]) -> DensityMatrix:
    """``U_s rho U_s^*`` with ``(U_s psi)(x_1..x_N) = psi(x_s(1)..x_s(N))``."""
    dims = rho.dims
    N = len(dims)
    sigma = [int(s) for s in sigma]
    if sorted(sigma) != list(range(N)):
        raise BadDims(f"{sigma} is not a permutation of {N} factors")
    if len(set(dims)) != 1:
        raise BadDims("all tensor factors must have equal dimension")
    t = rho.matrix.reshape(dims + dims)
    inv = list(np.argsort(sigma))
    perm = inv + [N + s for s in inv]
    return DensityMatrix(t.transpose(perm).reshape(rho.shape), dims)
