"""
Projection constants for small N
================================

Maximise Phi_2^N by alternating ascent and compare with 4/3.
"""

import math

import numpy as np

from grunbaum import oracle

# N = 3 has a closed form: the two largest roots of X^3 - X^2 + sigma
print("lambda_2^3 =", oracle.lambda2_3(), " 4/3 =", 4 / 3)

# the ascent alternates an eigenvector in u with a 2-frame in (x, y)
for n in range(2, 7):
    best = oracle.maximize_phi(n, restarts=40)
    print(f"N={n}  Phi max {best.value:.12f}  sweeps {best.sweeps}")

# at N = 3 the maximiser has equal weights and one negative sign pair
best = oracle.maximize_phi(3, restarts=20)
print(np.round(best.u, 6), 1 / math.sqrt(3))
print(best.sign_matrix.entries)

# the fixed point is a critical point: all residuals vanish
ab = oracle.spectral_from_fixed_point(best)
print(ab, oracle.critical_point_residuals(best.u, best.frame, ab))
