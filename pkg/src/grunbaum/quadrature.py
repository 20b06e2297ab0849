"""Complete integral B(gamma), adaptive Simpson quadrature and ODE inversion.

All integrands use w(t) = sqrt(cos^2 t + gamma^2 sin^2 t).  The five kernels
share one evaluation of w, so several of them can be integrated in a single
adaptive pass over common nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

KERNELS = (
    "inv_sqrt",                   # 1/w
    "cos2t_weighted",             # cos 2t / w
    "cos2t_sin2_weighted_pow3",   # cos 2t sin^2 t / w^3
    "cos2t_sin4_weighted_pow5",   # 3 cos 2t sin^4 t / w^5
    "sin2_weighted_pow3",         # sin^2 t / w^3
)
NK = len(KERNELS)
DEFAULT_TOL = 1e-11
MAX_DEPTH = 50
MIN_DEPTH = 4
ROUNDING = 64 * 2.0 ** -52
MAX_EVALS = 200_000


class QuadratureError(RuntimeError):
    pass


@numba.njit(nogil=True, cache=True)
def _kernels(t, g2m, out):
    s = math.sin(t)
    s2 = s * s
    w2 = 1.0 - g2m * s2
    iw = 1.0 / math.sqrt(w2)
    iw3 = iw / w2
    c2 = 1.0 - 2.0 * s2
    out[0] = iw
    out[1] = c2 * iw
    out[2] = c2 * s2 * iw3
    out[3] = 3.0 * c2 * s2 * s2 * iw3 / w2
    out[4] = s2 * iw3


@numba.njit(nogil=True, cache=True)
def adaptive_simpson(a, b, g2m, tol, mask, res):
    """Integrate the masked kernels over [a, b]; g2m = 1 - gamma^2.

    Writes the integrals into ``res`` and returns (evaluations, converged).
    Error control is Richardson's |S2 - S1| <= 15 tol on every masked kernel,
    with the tolerance halved at each split.  Panels are always split down to
    MIN_DEPTH, since a coarse three-point estimate can agree with its halves
    by accident; differences at rounding level count as converged.
    """
    for k in range(NK):
        res[k] = 0.0
    if b == a:
        return 0, True
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    # stack rows: a, b, tol, depth | f(a) | f(m) | f(b) | S (set on pop)
    W = 4 + 4 * NK
    stack = np.empty((2 * MAX_DEPTH + 4, W))
    fa = np.empty(NK)
    fm = np.empty(NK)
    fb = np.empty(NK)
    fl = np.empty(NK)
    fr = np.empty(NK)
    _kernels(a, g2m, fa)
    _kernels(b, g2m, fb)
    m = 0.5 * (a + b)
    _kernels(m, g2m, fm)
    evals = 3
    stack[0, 0] = a
    stack[0, 1] = b
    stack[0, 2] = tol
    stack[0, 3] = 0.0
    for k in range(NK):
        stack[0, 4 + k] = fa[k]
        stack[0, 4 + NK + k] = fm[k]
        stack[0, 4 + 2 * NK + k] = fb[k]
    top = 1
    ok = True
    while top > 0:
        top -= 1
        a_ = stack[top, 0]
        b_ = stack[top, 1]
        tl = stack[top, 2]
        depth = stack[top, 3]
        m_ = 0.5 * (a_ + b_)
        _kernels(0.5 * (a_ + m_), g2m, fl)
        _kernels(0.5 * (m_ + b_), g2m, fr)
        evals += 2
        h12 = (b_ - a_) / 12.0
        # whole-panel estimate from the actual float width, so that
        # S2 - S1 carries no width mismatch from the rounded midpoint
        for k in range(NK):
            stack[top, 4 + 3 * NK + k] = 2.0 * h12 * (stack[top, 4 + k] + 4.0 * stack[top, 4 + NK + k]
                                                       + stack[top, 4 + 2 * NK + k])
        good = depth >= MIN_DEPTH
        for k in range(NK):
            if good and mask[k]:
                L = h12 * (stack[top, 4 + k] + 4.0 * fl[k] + stack[top, 4 + NK + k])
                R = h12 * (stack[top, 4 + NK + k] + 4.0 * fr[k] + stack[top, 4 + 2 * NK + k])
                err = abs(L + R - stack[top, 4 + 3 * NK + k])
                scale = h12 * (abs(stack[top, 4 + k]) + 4.0 * abs(fl[k]) + 2.0 * abs(stack[top, 4 + NK + k])
                               + 4.0 * abs(fr[k]) + abs(stack[top, 4 + 2 * NK + k]))
                if err > 15.0 * tl and err > ROUNDING * scale:
                    good = False
                    break
        if good or depth >= MAX_DEPTH or evals >= MAX_EVALS:
            if not good:
                ok = False
            for k in range(NK):
                L = h12 * (stack[top, 4 + k] + 4.0 * fl[k] + stack[top, 4 + NK + k])
                R = h12 * (stack[top, 4 + NK + k] + 4.0 * fr[k] + stack[top, 4 + 2 * NK + k])
                res[k] += L + R + (L + R - stack[top, 4 + 3 * NK + k]) / 15.0
            continue
        # split: right half stays in this slot, left half is pushed on top
        for k in range(NK):
            fa[k] = stack[top, 4 + k]
            fm[k] = stack[top, 4 + NK + k]
            fb[k] = stack[top, 4 + 2 * NK + k]
        for k in range(NK):
            stack[top, 4 + k] = fm[k]
            stack[top, 4 + NK + k] = fr[k]
            stack[top, 4 + 2 * NK + k] = fb[k]
        stack[top, 0] = m_
        stack[top, 1] = b_
        stack[top, 2] = 0.5 * tl
        stack[top, 3] = depth + 1.0
        top += 1
        stack[top, 0] = a_
        stack[top, 1] = m_
        stack[top, 2] = 0.5 * tl
        stack[top, 3] = depth + 1.0
        for k in range(NK):
            stack[top, 4 + k] = fa[k]
            stack[top, 4 + NK + k] = fl[k]
            stack[top, 4 + 2 * NK + k] = fm[k]
        top += 1
    for k in range(NK):
        res[k] *= sign
    return evals, ok


@numba.njit(nogil=True, cache=True)
def agm_B(gamma):
    """B(gamma) = pi / (2 agm(1, gamma))."""
    a = 1.0
    b = gamma
    for _ in range(64):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (a + b)


def complete_B(gamma: float) -> float:
    """Complete integral of 1/w over [0, pi/2], via the arithmetic-geometric mean."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return float(agm_B(float(gamma)))


@dataclass(frozen=True)
class IntegralSpec:
    kernel: str
    gamma: float
    lower: float
    upper: float
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.lower > self.upper:
            raise ValueError("lower must not exceed upper")


def integrate_kernels(gamma, lower, upper, kernels=KERNELS, tol=DEFAULT_TOL):
    """Integrate several kernels over a common interval; returns a dict."""
    mask = np.zeros(NK, dtype=np.bool_)
    for name in kernels:
        mask[KERNELS.index(name)] = True
    res = np.empty(NK)
    _, ok = adaptive_simpson(float(lower), float(upper), 1.0 - gamma * gamma, tol, mask, res)
    if not ok:
        raise QuadratureError(
            f"no convergence for {kernels} on [{lower}, {upper}] at gamma={gamma}")
    return {name: float(res[KERNELS.index(name)]) for name in kernels}


def integrate(spec: IntegralSpec) -> float:
    return integrate_kernels(spec.gamma, spec.lower, spec.upper, (spec.kernel,), spec.tol)[spec.kernel]


def _w(gamma, y):
    return math.sqrt(1.0 - (1.0 - gamma * gamma) * math.sin(y) ** 2)


def solve_y(gamma: float, beta: float, theta0: float, t: float) -> float:
    """Solve int_{theta0}^{y} dx / w(x) = t / beta for y.

    The integrand lies in [1, 1/gamma], so y - theta0 is bracketed by
    [gamma t / beta, t / beta].  Bisection to width 1e-12, then two Newton steps.
    """
    target = t / beta
    if target == 0.0:
        return float(theta0)

    def G(y):
        return integrate_kernels(gamma, theta0, y, ("inv_sqrt",))["inv_sqrt"] - target

    lo = theta0 + gamma * target
    hi = theta0 + target
    if G(lo) >= 0.0:
        return lo
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if G(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    y = 0.5 * (lo + hi)
    for _ in range(2):
        y -= G(y) * _w(gamma, y)
    return y
