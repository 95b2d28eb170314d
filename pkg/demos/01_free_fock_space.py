"""
Free bosons in a truncated Fock space
=====================================

Diagonalize the free Hamiltonian sector by sector and compare the one-body
density matrix with the Bose-Einstein occupations.
"""

import numpy as np

from nlgibbs import FockBasis, SpectralModel, assemble_H0, reduced_density_matrix, thermal_state
from nlgibbs.harness import choose_truncation, truncated_free_energy

model = SpectralModel(np.array([1.0, 2.0, 4.0]))
T = 4.0

# the particle cap grows with T; the tail of the free state decides it
n_max = choose_truncation(model, T, eps=1e-8)
basis = FockBasis(model.K, n_max)
print(f"n_max = {n_max}, Fock dimension = {basis.dim}")

res = thermal_state(assemble_H0(basis, model), T)
gamma = reduced_density_matrix(res, basis, 1).matrix

print("occupations     ", np.round(np.diag(gamma).real, 10))
print("Bose-Einstein   ", np.round(1 / np.expm1(model.eigenvalues / T), 10))
print("F (diagonalized)", res.free_energy)
print("F (closed form) ", truncated_free_energy(model, T, n_max))
print("mean number", res.mean_number(), "vs", np.sum(1 / np.expm1(model.eigenvalues / T)))
