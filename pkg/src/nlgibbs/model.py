"""One-body spectral data and two-body interactions.

The one-body operator is ``h = -d^2/dx^2 + |x|^a - nu`` on ``[-L, L]`` with
Dirichlet walls, discretized by centered finite differences.  Everything
downstream works in the basis of its ``K`` lowest eigenfunctions, where ``h``
is ``diag(eigenvalues)`` and the two-body operator ``w`` is a ``K^2 x K^2``
matrix indexed by ordered mode pairs ``(i, j) -> i * K + j``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DiscretizationTooCoarse, NegativeWeight, NonPositiveOperator, NotPositive

PSD_TOL = 1e-10
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of ``points`` interior nodes on ``[-half_width, half_width]``."""

    half_width: float
    points: int
    exponent_a: float = 2.0

    def __post_init__(self):
        if self.points < 3:
            raise ValueError("grid needs at least 3 interior points")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.exponent_a <= 0:
            raise ValueError("exponent_a must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points + 1)

    @property
    def x(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(1, self.points + 1)


@dataclass(frozen=True)
class SpectralModel:
    """Eigenvalues of ``h`` (chemical potential already subtracted).

    ``eigenfunctions`` has shape ``(K, points)`` and is orthonormal for the
    quadrature ``sum(u_i * u_j) * dx``.
    """

    eigenvalues: np.ndarray
    nu: float = 0.0
    eigenfunctions: Optional[np.ndarray] = None
    grid: Optional[GridSpec] = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        if lam.size == 0:
            raise ValueError("at least one mode is required")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        if lam[0] <= 0:
            raise NonPositiveOperator(f"h is not positive: lowest eigenvalue {lam[0]:.6g}")
        object.__setattr__(self, "eigenvalues", lam)
        if self.eigenfunctions is not None:
            u = np.asarray(self.eigenfunctions, dtype=float)
            if u.shape[0] != lam.size:
                raise ValueError("one eigenfunction per eigenvalue is required")
            if self.grid is None:
                raise ValueError("eigenfunctions need a grid for quadrature")
            gram = u @ u.T * self.grid.spacing
            if not np.allclose(gram, np.eye(lam.size), atol=1e-8):
                raise ValueError("eigenfunctions are not quadrature-orthonormal")
            object.__setattr__(self, "eigenfunctions", u)

    @property
    def K(self) -> int:
        return self.eigenvalues.size

    def to_dict(self) -> dict:
        out = {"eigenvalues": self.eigenvalues.tolist(), "nu": float(self.nu)}
        if self.grid is not None:
            out["grid"] = {
                "half_width": self.grid.half_width,
                "points": self.grid.points,
                "exponent_a": self.grid.exponent_a,
            }
        if self.eigenfunctions is not None:
            out["eigenfunctions"] = self.eigenfunctions.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralModel":
        grid = GridSpec(**data["grid"]) if "grid" in data else None
        u = np.asarray(data["eigenfunctions"]) if "eigenfunctions" in data else None
        return cls(np.asarray(data["eigenvalues"], float), float(data.get("nu", 0.0)), u, grid)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SpectralModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TwoBodyOperator:
    """Positive exchange-symmetric operator on the two-mode space."""

    matrix: np.ndarray
    K: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = m.shape[0]
        K = int(round(np.sqrt(n)))
        if m.ndim != 2 or m.shape[1] != n or K * K != n:
            raise ValueError("two-body matrix must be K^2 x K^2")
        scale = max(1.0, np.abs(m).max(initial=0.0))
        if np.abs(m - m.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
            raise ValueError("two-body matrix is not Hermitian")
        if np.abs(m - swap_pairs(m, K)).max(initial=0.0) > HERMITIAN_TOL * scale:
            raise ValueError("two-body matrix is not exchange-symmetric")
        if n and np.linalg.eigvalsh(m)[0] < -PSD_TOL * scale:
            raise NotPositive("two-body matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "K", K)

    @classmethod
    def zero(cls, K: int) -> "TwoBodyOperator":
        return cls(np.zeros((K * K, K * K)))

    def tensor(self) -> np.ndarray:
        """Return ``w[i, j, k, l] = <u_i u_j | w | u_k u_l>``."""
        K = self.K
        return self.matrix.reshape(K, K, K, K)

    def to_dict(self) -> dict:
        m = self.matrix
        return {
            "K": self.K,
            "matrix": [[float(z.real), float(z.imag)] for z in m.ravel()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TwoBodyOperator":
        K = int(data["K"])
        pairs = np.asarray(data["matrix"], dtype=float).reshape(-1, 2)
        return cls((pairs[:, 0] + 1j * pairs[:, 1]).reshape(K * K, K * K))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TwoBodyOperator":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class AssumptionReport:
    p: float
    p_prime: float
    trace_h_inv_p: float
    w_weighted_trace: float
    dominated: bool
    domination_margin: float


def swap_pairs(m: np.ndarray, K: int) -> np.ndarray:
    """Conjugate a two-mode matrix by the swap ``(i, j) -> (j, i)``."""
    t = m.reshape(K, K, K, K).transpose(1, 0, 3, 2)
    return t.reshape(K * K, K * K)


def _fd_lowest(grid: GridSpec, nu: float, K: int):
    dx = grid.spacing
    diag = 2.0 / dx**2 + np.abs(grid.x) ** grid.exponent_a - nu
    off = np.full(grid.points - 1, -1.0 / dx**2)
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, K - 1))


def solve_onebody_spectrum(
    grid: GridSpec, nu: float, K: int, tol: Optional[float] = None
) -> SpectralModel:
    """Lowest ``K`` eigenpairs of the finite-difference one-body operator.

    With ``tol`` set, the fine-grid error is estimated from a run at half the
    resolution (second-order Richardson: ``|fine - coarse| / 3``) and
    :class:`DiscretizationTooCoarse` is raised when it exceeds ``tol``.
    """
    if K < 1 or K >= grid.points:
        raise ValueError("need 1 <= K < grid.points")
    vals, vecs = _fd_lowest(grid, nu, K)
    if vals[0] <= 0:
        raise NonPositiveOperator(
            f"lowest eigenvalue {vals[0]:.6g} <= 0; chemical potential too large"
        )
    if tol is not None:
        coarse = GridSpec(grid.half_width, (grid.points + 1) // 2 - 1, grid.exponent_a)
        if coarse.points <= K:
            raise DiscretizationTooCoarse("grid too small for a half-resolution check")
        cvals, _ = _fd_lowest(coarse, nu, K)
        err = np.abs(vals - cvals).max() / 3.0
        if err > tol:
            raise DiscretizationTooCoarse(f"estimated eigenvalue error {err:.3g} > {tol:.3g}")

    u = vecs.T / np.sqrt(grid.spacing)
    # deterministic sign: first non-negligible sample positive
    for row in u:
        big = np.flatnonzero(np.abs(row) > 1e-3 * np.abs(row).max())
        if row[big[0]] < 0:
            row *= -1
    return SpectralModel(vals, nu, u, grid)


def trace_inverse_power(model: SpectralModel, p: float) -> float:
    if p <= 0:
        raise ValueError("p must be positive")
    return float(np.sum(model.eigenvalues ** (-p)))


def build_finite_rank_interaction(
    vectors: Sequence[Sequence[complex]], weights: Sequence[float]
) -> TwoBodyOperator:
    """``w = sum_m g_m |phi_m (x) phi_m><phi_m (x) phi_m|``."""
    weights = np.asarray(weights, dtype=float)
    vecs = [np.asarray(v, dtype=complex).ravel() for v in vectors]
    if len(vecs) != weights.size:
        raise ValueError("one weight per vector is required")
    if np.any(weights < 0):
        raise NegativeWeight("interaction weights must be nonnegative")
    if not vecs:
        raise ValueError("at least one vector is required to fix K")
    K = vecs[0].size
    m = np.zeros((K * K, K * K), dtype=complex)
    for g, phi in zip(weights, vecs):
        if phi.size != K:
            raise ValueError("all vectors must have the same length")
        pp = np.kron(phi, phi)
        m += g * np.outer(pp, pp.conj())
    m = 0.5 * (m + m.conj().T)
    m = 0.5 * (m + swap_pairs(m, K))
    return TwoBodyOperator(m)


def project_multiplication_kernel(
    model: SpectralModel, kernel: Union[Callable[[np.ndarray], np.ndarray], np.ndarray]
) -> TwoBodyOperator:
    """Matrix of the multiplication operator ``w(x - y)`` in the mode basis.

    ``kernel`` is either a vectorized function of the separation or the
    ``(points, points)`` array of samples ``w(x_a - y_b)``.
    """
    if model.eigenfunctions is None or model.grid is None:
        raise ValueError("model carries no eigenfunctions")
    x = model.grid.x
    if callable(kernel):
        W = np.asarray(kernel(x[:, None] - x[None, :]), dtype=float)
        W = np.broadcast_to(W, (x.size, x.size))
    else:
        W = np.asarray(kernel, dtype=float)
        if W.shape != (x.size, x.size):
            raise ValueError("kernel samples must be (points, points)")
    u = model.eigenfunctions
    K = model.K
    dx = model.grid.spacing
    prod = (u[:, None, :] * u[None, :, :]).reshape(K * K, -1)  # (i,k) -> u_i u_k
    m_ik_jl = prod @ W @ prod.T * dx**2
    m = m_ik_jl.reshape(K, K, K, K).transpose(0, 2, 1, 3).reshape(K * K, K * K)
    m = 0.5 * (m + m.T)
    m = 0.5 * (m + swap_pairs(m, K))
    if np.linalg.eigvalsh(m)[0] < -PSD_TOL:
        raise NotPositive("projected kernel is not positive semidefinite")
    return TwoBodyOperator(m)


def verify_assumptions(
    model: SpectralModel, w: TwoBodyOperator, p: float, p_prime: float
) -> AssumptionReport:
    if not p_prime > p > 0:
        raise ValueError("need p_prime > p > 0")
    lam = model.eigenvalues
    inv = 1.0 / lam
    weight = np.kron(inv, inv)
    w_trace = float(np.real(np.sum(np.diag(w.matrix) * weight)))
    power = lam ** (1.0 - p_prime)
    bound = np.diag(np.kron(power, power))
    margin = float(np.linalg.eigvalsh(bound - w.matrix)[0])
    return AssumptionReport(
        p=p,
        p_prime=p_prime,
        trace_h_inv_p=trace_inverse_power(model, p),
        w_weighted_trace=w_trace,
        dominated=margin >= -PSD_TOL,
        domination_margin=margin,
    )
