"""
The finite cases 2 <= s <= 14
=============================

Angle recursion, boundary condition cb, norm equation en and a coarse
certified minimum of m = max(|cb|, |en|).
"""

import math

from grunbaum import iteration

# one step from theta = 0 at u = 1, v = 0, s = 2
seq = iteration.iterate_sequence(1.0, 0.0, 0.0, 2)
print(seq.thetas, math.pi / 2 - math.asin(0.92))

# both step forms agree
u, v, th, s = 3.2, 0.7, 1.1, 6
h = 1 / (2 * s + 1)
A, B = 1 + 2 * h * h * v, 1 - 2 * h * h * v
t1 = iteration.step_closed_form(u, v, th, s)
x1, y1 = iteration.step_coordinates(u, v, A * math.cos(th), B * math.sin(th), s)
print(x1 - A * math.cos(t1), y1 - B * math.sin(t1))

# cb and en in coordinate and angle form
print(iteration.cb(u, v, th, s), iteration.cb_angles(u, v, th, s))
print(iteration.en(u, v, th, s), iteration.en_angles(u, v, th, s))

# derivative bounds and a coarse net: the net minimum is positive but
# the uncertainty is still too large at this resolution
b = iteration.derivative_bounds(5, 20)
print(b.rounded, [round(x, 3) for x in b.table])
res = iteration.min_m(5, 20, bounds=b)
print(res.extremum.net_value, res.delta_m, res.passed)
