"""
Entropies, partial traces and permanents
========================================
"""

import numpy as np

from nlgibbs.qgibbs import DensityMatrix, partial_trace, permanent, relative_entropy, von_neumann_entropy, wick_moment

rng = np.random.default_rng(0)
A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
rho = A @ A.conj().T
rho = DensityMatrix(rho / np.trace(rho).real, (2, 3))

r1, r2 = partial_trace(rho, [0]), partial_trace(rho, [1])
S, S1, S2 = (von_neumann_entropy(x) for x in (rho, r1, r2))
print(f"S(12) = {S:.4f} <= S(1) + S(2) = {S1 + S2:.4f}")
print(f"mutual information = relative entropy to the product: "
      f"{relative_entropy(rho, r1.kron(r2)):.6f} vs {S1 + S2 - S:.6f}")

# Wick: for a quasi-free state the k-point function is a permanent of gamma
gamma = np.diag([0.5, 0.25, 1.0])
print("perm(gamma) =", permanent(gamma).real, "; <a1+ a1+ a1 a1> =", wick_moment(gamma, [0, 0], [0, 0]).real)
