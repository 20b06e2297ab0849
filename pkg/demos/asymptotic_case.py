"""
The asymptotic case s >= 15
===========================

E(gamma, theta, nu) on the Delta domain and the certified bound mu(delta).
"""

import numpy as np

from grunbaum import asymptotic
from grunbaum.quadrature import agm_B, complete_B

# B(gamma) through the AGM and through quadrature
for g in (1 / 3, 0.414, 0.7, 1.0):
    print(g, complete_B(g), agm_B(g))

# E does not depend on theta when gamma = 1 and nu = 0
print([asymptotic.E(1.0, th, 0.0) for th in np.linspace(0, 3, 4)])

# gamma below 0.414 is ruled out
ext = asymptotic.gamma_range_reduction()
print("max gamma B(gamma) - 1 <=", ext.certified_value)

# kernel maxima at gamma = 0.414
suite = asymptotic.kernel_maxima(20000)
for name, e in suite.kernels.items():
    print(name, round(e.net_value, 5))

# a coarse mu net; the full run uses n = 6
ext = asymptotic.mu_estimate(n=2)
print("net", ext.net_value, "certified", ext.certified_value, "accepted", ext.details["accepted"])
