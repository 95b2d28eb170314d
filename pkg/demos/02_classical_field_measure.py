"""
Sampling the nonlinear Gibbs measure
====================================

A single mode with a quartic weight: the relative partition function and
the first moment both reduce to one-dimensional integrals, which makes a
good check on the importance-sampling estimates.
"""

import numpy as np
from scipy import integrate

from nlgibbs import SpectralModel, TwoBodyOperator, estimate_moments, estimate_partition

model = SpectralModel(np.array([1.0]))
w = TwoBodyOperator(np.array([[1.0]]))

# |alpha|^2 is exponential under the free measure, so Z_r = int exp(-t - t^2/2) dt
zr_exact = integrate.quad(lambda t: np.exp(-t - t * t / 2), 0, np.inf)[0]
m1_exact = integrate.quad(lambda t: t * np.exp(-t - t * t / 2), 0, np.inf)[0] / zr_exact

for n in (10_000, 100_000, 400_000):
    zr = estimate_partition(model, w, n, seed=1)
    m1 = estimate_moments(model, w, 1, n, seed=2)
    print(f"n={n:>7}  Z_r = {zr.value:.4f} +- {zr.stderr:.4f}   <|a|^2> = "
          f"{m1.matrix[0, 0].real:.4f} +- {m1.stderr_matrix[0, 0]:.4f}")
print(f"quadrature  Z_r = {zr_exact:.4f}               <|a|^2> = {m1_exact:.4f}")
