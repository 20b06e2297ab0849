"""The regime s >= 15: theta_perp, beta(gamma, theta, nu), E and its bounds.

Notation: w(t) = sqrt(cos^2 t + gamma^2 sin^2 t) and B(gamma) is the
complete integral of 1/w over a quarter period.  E is pi-periodic in theta,
so right-open theta nets on [0, pi) cover the closed interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np
from scipy.integrate import quad

from .certgrid import (Axis, BlockResult, CertifiedExtremum, EmptyNetError, GridSpec,
                       certified_max, certified_min, merge_blocks, run_blocks)
from .constants import CONSTANTS
from .domains import FOUR_THIRDS, DomainError, alpha_beta_from_uv
from .iteration import iterate_sequence
from .quadrature import (DEFAULT_TOL, NK, QuadratureError, adaptive_simpson, agm_B,
                         integrate_kernels, solve_y)

GAMMA_LOW = CONSTANTS.gamma_low
GAMMA_SPAN = CONSTANTS.gamma_span


def w_of(gamma, t):
    return np.sqrt(np.cos(t) ** 2 + gamma * gamma * np.sin(t) ** 2)


@numba.njit(nogil=True, cache=True)
def _theta_perp(g, th):
    s = math.sin(th)
    c = math.cos(th)
    return th + 0.5 * math.pi - math.atan((1.0 - g) * s * c / (c * c + g * s * s))


def theta_perp(gamma: float, theta: float) -> float:
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    return float(_theta_perp(float(gamma), float(theta)))


def beta_of(gamma: float, theta: float, nu: float, tol: float = DEFAULT_TOL) -> float:
    upper = theta_perp(gamma, theta) + nu
    return 1.0 / integrate_kernels(gamma, theta, upper, ("inv_sqrt",), tol)["inv_sqrt"]


def E(gamma: float, theta: float, nu: float, tol: float = DEFAULT_TOL) -> float:
    upper = theta_perp(gamma, theta) + nu
    r = integrate_kernels(gamma, theta, upper, ("inv_sqrt", "cos2t_weighted"), tol)
    beta = 1.0 / r["inv_sqrt"]
    return ((1.0 - gamma) / (1.0 + gamma)
            + beta * (math.sin(2.0 * theta) / float(w_of(gamma, theta)) + r["cos2t_weighted"]))


# ---------------------------------------------------------------- gamma range

def gamma_range_reduction(n: int = CONSTANTS.n_gamma_reduce, workers=None) -> CertifiedExtremum:
    """Certified max of gamma B(gamma) - 1 on [1/3, 0.414]."""
    grid = GridSpec((Axis(1.0 / 3.0, GAMMA_LOW, n),), (CONSTANTS.gamma_reduce_bound,))

    def F(g):
        return np.array([x * agm_B(x) - 1.0 for x in g])

    return certified_max(F, grid, workers=workers, vectorized=True)


def beta_range(n: int = CONSTANTS.n_beta_range, delta: float = CONSTANTS.delta, workers=None):
    """Lower bound on D(gamma) = B (gamma B - delta) and the induced beta window."""
    grid = GridSpec((Axis(GAMMA_LOW, 1.0, n),), (CONSTANTS.beta_range_deriv,))

    def F(g):
        out = np.empty_like(g)
        for i, x in enumerate(g):
            b = agm_B(x)
            out[i] = b * (x * b - delta)
        return out

    ext = certified_min(F, grid, workers=workers, vectorized=True)
    dbeta = delta / ext.certified_value
    beta_min = 1.0 / (agm_B(GAMMA_LOW) + delta / GAMMA_LOW)
    beta_max_coarse = 1.0 / (math.pi / 2 - delta / GAMMA_LOW)
    return ext, {"delta_beta": dbeta, "beta_min": beta_min,
                 "beta_max": 2.0 / math.pi + dbeta, "beta_max_coarse": beta_max_coarse}


# ---------------------------------------------------------------- kernel maxima

def _f1(g, t):
    return np.abs(np.sin(t) * np.cos(t)) / w_of(g, t) ** 3


KERNEL_FUNCS = {
    "M0": lambda g, t: np.abs(np.sin(2 * t)) / w_of(g, t),
    "M1": _f1,
    "M2": lambda g, t: np.sin(t) * np.cos(t) ** 3 / w_of(g, t) ** 3,
    "M4": lambda g, t: np.abs(np.cos(2 * t)) / w_of(g, t),
    "M5": lambda g, t: np.abs(np.sin(2 * t)) * np.sin(t) ** 2 / w_of(g, t) ** 3,
    "M6": lambda g, t: 3 * np.abs(np.sin(2 * t)) * np.sin(t) ** 4 / w_of(g, t) ** 5,
    "M7": lambda g, t: np.abs(np.cos(2 * t)) * np.sin(t) ** 2 / w_of(g, t) ** 3,
    "M8": lambda g, t: np.abs(np.sin(t) ** 3 * np.cos(t)) / w_of(g, t) ** 4,
}


def kernel_budget(name: str, gamma: float = GAMMA_LOW) -> float:
    if name == "M0":
        return 2.0 / gamma + 1.0 / (2.0 * gamma ** 3)
    if name == "M2":
        return CONSTANTS.kernel_budget_f2
    return CONSTANTS.kernel_budget_default


@dataclass
class DerivativeBoundSuite:
    kernels: dict = field(default_factory=dict)        # name -> CertifiedExtremum
    sampled_slopes: dict = field(default_factory=dict)  # name -> max |f'| seen on the net
    M3: Optional[float] = None
    tildeE_max: Optional[tuple] = None
    grid_budgets: Optional[tuple] = None
    corrections: tuple = CONSTANTS.E_corrections
    final_bounds: Optional[tuple] = None
    argmax: Optional[tuple] = None
    evaluations: int = 0

    def M(self, name: str) -> float:
        return self.kernels[name].certified_value

    def budget_respected(self, name: str) -> bool:
        return self.sampled_slopes[name] <= self.kernels[name].details["budget"]


def kernel_maxima(n: int = CONSTANTS.n_kernel, gamma: float = GAMMA_LOW, workers=None) -> DerivativeBoundSuite:
    """Certified maxima of f0..f8 over theta in [0, pi] at fixed gamma."""
    suite = DerivativeBoundSuite()
    axis = Axis(0.0, math.pi, n)
    theta = axis.points()
    for name, f in KERNEL_FUNCS.items():
        budget = kernel_budget(name, gamma)
        grid = GridSpec((axis,), (budget,))
        ext = certified_max(lambda t, f=f: f(gamma, t), grid, workers=workers,
                            vectorized=True, block_size=max(axis.npoints, 1))
        ext.details["budget"] = budget
        suite.kernels[name] = ext
        suite.sampled_slopes[name] = float(np.max(np.abs(np.diff(f(gamma, theta)))) / axis.step)
        suite.evaluations += ext.evaluations
    suite.M3 = (1.0 - gamma * gamma) * suite.M("M1")
    return suite


def _abs_integral(f, gamma):
    pts = (math.pi / 4, math.pi / 2, 3 * math.pi / 4)
    return quad(lambda t: f(gamma, t), 0.0, math.pi, points=pts, limit=400, epsabs=1e-12)[0]


def gamma_gamma_budget(M: dict, gamma: float = GAMMA_LOW) -> float:
    """Analytic bound on the gamma-derivative of the gamma surrogate, from M0..M8."""
    g = gamma
    ic = _abs_integral(lambda g, t: abs(math.cos(2 * t)) / float(w_of(g, t)), g)
    ic3 = _abs_integral(lambda g, t: abs(math.cos(2 * t)) * math.sin(t) ** 2 / float(w_of(g, t)) ** 3, g)
    ic5 = _abs_integral(lambda g, t: 3 * abs(math.cos(2 * t)) * math.sin(t) ** 4 / float(w_of(g, t)) ** 5, g)
    pi = math.pi
    return (4 / (1 + g) ** 2
            + (8 / (pi ** 2 * g ** 3) + 4 / (pi * g ** 4)) * (M["M0"] + ic)
            + 4 / (pi * g) * (M["M5"] + ic3)
            + 2 / pi * (M["M5"] + M["M6"])
            + 2 / pi * (ic5 + ic3)
            + M["M7"] / pi + M["M4"] / (pi * g ** 4)
            + 3 * M["M0"] / (4 * pi * g * g) + 4 / pi * M["M8"])


# ---------------------------------------------------------------- surrogate partials

_MASK_E = np.array([False, True, True, False, True])


@numba.njit(nogil=True, cache=True)
def _tilde_partials(g, z, tol, mask, res):
    """Signed surrogates of dE/dnu, dE/dtheta, dE/dgamma at nu = 0."""
    g2m = 1.0 - g * g
    bt = 1.0 / agm_B(g)
    zp = _theta_perp(g, z)
    _, ok = adaptive_simpson(z, zp, g2m, tol, mask, res)
    sz = math.sin(z)
    cz = math.cos(z)
    wz = math.sqrt(1.0 - g2m * sz * sz)
    wp = math.sqrt(1.0 - g2m * math.sin(zp) ** 2)
    c2p = math.cos(2.0 * zp)
    II = res[1] + 2.0 * sz * cz / wz
    ev = -bt * bt * II / wp + bt * c2p / wp
    dphiz = g / (cz * cz + g * g * sz * sz)
    et = (bt * c2p * dphiz / wp + bt * g2m * (2.0 * sz * cz) ** 2 / (2.0 * wz ** 3)
          - bt * math.cos(2.0 * z) / wz)
    dphig = sz * cz / (cz * cz + g * g * sz * sz)
    dbg = bt * bt * g * res[4] - bt * bt * dphig / wp
    III = res[2] + 2.0 * sz * cz * sz * sz / wz ** 3
    eg = dbg * II - 2.0 / (1.0 + g) ** 2 - g * bt * III + bt * c2p * dphig / wp
    return ev, et, eg, ok


def tilde_E_partials(gamma: float, theta: float, tol: float = DEFAULT_TOL):
    res = np.empty(NK)
    ev, et, eg, ok = _tilde_partials(float(gamma), float(theta), tol, _MASK_E, res)
    if not ok:
        raise QuadratureError("surrogate integrals did not converge")
    return ev, et, eg


@numba.njit(nogil=True, cache=True)
def _e_bounds_row(g, nz, tol, mask, out):
    res = np.empty(NK)
    best = np.zeros(3)
    arg = np.zeros(3, dtype=np.int64)
    fails = 0
    for iz in range(nz):
        z = math.pi * iz / nz
        ev, et, eg, ok = _tilde_partials(g, z, tol, mask, res)
        if not ok:
            fails += 1
        vals = (abs(ev), abs(et), abs(eg))
        for k in range(3):
            if vals[k] > best[k]:
                best[k] = vals[k]
                arg[k] = iz
    for k in range(3):
        out[k] = best[k]
        out[3 + k] = arg[k]
    return fails


def E_derivative_bounds(n: int = CONSTANTS.n_e_bounds, workers=None,
                        tol: float = DEFAULT_TOL) -> DerivativeBoundSuite:
    """Maxima of the surrogate partials on the (gamma, theta) net, plus budgets and corrections."""
    nz = 2 * n

    def row(ig):
        g = GAMMA_LOW + GAMMA_SPAN * ig / n
        out = np.empty(6)
        fails = _e_bounds_row(g, nz, tol, _MASK_E, out)
        return out, fails

    rows = run_blocks(row, n + 1, workers)
    fails = sum(f for _, f in rows)
    if fails:
        raise QuadratureError(f"{fails} surrogate evaluations did not converge")
    best = [0.0, 0.0, 0.0]
    arg: list = [None, None, None]
    for ig, (out, _) in enumerate(rows):
        for k in range(3):
            if out[k] > best[k]:
                best[k] = float(out[k])
                arg[k] = (GAMMA_LOW + GAMMA_SPAN * ig / n, math.pi * out[3 + k] / nz)
    budgets = tuple(cg * GAMMA_SPAN / n + ct * math.pi / (2 * n) for cg, ct in CONSTANTS.E_grid_budgets)
    final = tuple(m + b + c for m, b, c in zip(best, budgets, CONSTANTS.E_corrections))
    return DerivativeBoundSuite(tildeE_max=tuple(best), grid_budgets=budgets, final_bounds=final,
                                argmax=tuple(arg), evaluations=(n + 1) * nz)


# ---------------------------------------------------------------- mu(delta)

_MASK_MU = np.array([True, True, False, False, False])


@numba.njit(nogil=True, cache=True)
def _mu_row(ig, n, delta, tol, mask):
    g = GAMMA_LOW + GAMMA_SPAN * ig / (64 * n)
    g2m = 1.0 - g * g
    nth = 158 * n
    nnu = 2 * n + 1
    res = np.empty(NK)
    best = np.inf
    best_i = -1
    accepted = 0
    fails = 0
    for it in range(nth):
        th = math.pi * it / nth
        tp = _theta_perp(g, th)
        s = math.sin(th)
        lead = math.sin(2.0 * th) / math.sqrt(1.0 - g2m * s * s)
        for k in range(nnu):
            y1 = tp + delta * (k - n) / n
            _, ok = adaptive_simpson(th, y1, g2m, tol, mask, res)
            if not ok:
                fails += 1
            beta = 1.0 / res[0]
            alpha = beta / g
            if alpha <= 1.0 and beta <= alpha and alpha + beta >= 4.0 / 3.0:
                accepted += 1
                e = (1.0 - g) / (1.0 + g) + beta * (lead + res[1])
                if e < best:
                    best = e
                    best_i = (ig * nth + it) * nnu + k
    return best, best_i, accepted, fails


def mu_grid(n: int, delta: float, bounds=CONSTANTS.E_derivative_bounds):
    """Axes of the mu net: gamma closed, theta right-open, nu closed.

    ``bounds`` are given as (|dE/dnu|, |dE/dtheta|, |dE/dgamma|).
    """
    b_nu, b_theta, b_gamma = bounds
    return GridSpec((Axis(GAMMA_LOW, 1.0, 64 * n), Axis(0.0, math.pi, 158 * n, right_open=True),
                     Axis(-delta, delta, 2 * n)), (b_gamma, b_theta, b_nu))


def mu_estimate(delta: float = CONSTANTS.delta, n: int = CONSTANTS.n_mu, workers=None,
                tol: float = DEFAULT_TOL, bounds=CONSTANTS.E_derivative_bounds) -> CertifiedExtremum:
    """Certified minimum of E over Delta; verdict via ``clears(mu_threshold)``."""
    if n < 1:
        raise ValueError("n must be positive")
    if delta < 0:
        raise EmptyNetError("the nu window [-delta, delta] is empty")
    grid = mu_grid(n, delta, tuple(bounds))
    fails = [0]
    accepted = [0]

    def row(ig):
        v, i, acc, f = _mu_row(ig, n, delta, tol, _MASK_MU)
        return BlockResult(float(v), int(i), 158 * n * (2 * n + 1), 158 * n * (2 * n + 1) - acc), f

    rows = run_blocks(row, 64 * n + 1, workers)
    if sum(f for _, f in rows):
        raise QuadratureError("quadrature failed inside the mu net")
    merged = merge_blocks([r for r, _ in rows], "min")
    if merged.index < 0:
        raise EmptyNetError("no net point lies in Delta")
    ig, rest = divmod(merged.index, 158 * n * (2 * n + 1))
    it, k = divmod(rest, 2 * n + 1)
    arg = (GAMMA_LOW + GAMMA_SPAN * ig / (64 * n), math.pi * it / (158 * n), delta * (k - n) / n)
    b = bounds
    coarse = (b[0] * delta / 2 + b[1] * math.pi / (2 * 79) + b[2] * GAMMA_SPAN / (2 * 64)) / n
    return CertifiedExtremum.build(
        "min", merged.value, grid.uncertainty, merged.evaluations, arg, merged.excluded,
        {"index": merged.index, "accepted": merged.evaluations - merged.excluded,
         "coarse_uncertainty": coarse, "coarse_certified": merged.value - coarse,
         "threshold": CONSTANTS.mu_threshold})


def delta_accepted_indices(n: int, delta: float = CONSTANTS.delta, tol: float = DEFAULT_TOL):
    """Flat indices of mu-net points that pass the Delta filter (small n only)."""
    out = []
    nth, nnu = 158 * n, 2 * n + 1
    for ig in range(64 * n + 1):
        g = GAMMA_LOW + GAMMA_SPAN * ig / (64 * n)
        for it in range(nth):
            th = math.pi * it / nth
            tp = theta_perp(g, th)
            for k in range(nnu):
                upper = tp + delta * (k - n) / n
                beta = 1.0 / integrate_kernels(g, th, upper, ("inv_sqrt",), tol)["inv_sqrt"]
                alpha = beta / g
                if alpha <= 1.0 and beta <= alpha and alpha + beta >= FOUR_THIRDS:
                    out.append((ig * nth + it) * nnu + k)
    return out


# ---------------------------------------------------------------- theta tracking

def theta_tracking_check(s: int, u: float, v: float, theta1: float) -> float:
    """max_k |theta_k - y(t_{2k-2})| - 4.865 h^2 (exp(2 t_{2k-2}) - 1).

    y solves y' = w(y)/beta with y(0) = theta1 and t_j = j h.  A nonpositive
    value confirms the tracking bound along the whole sequence.
    """
    if s < 15:
        raise ValueError("the tracking bound is stated for s >= 15")
    p = alpha_beta_from_uv(u, v)
    seq = iterate_sequence(u, v, theta1, s)
    h = 1.0 / (2 * s + 1)
    worst = -math.inf
    for k, th in enumerate(seq.thetas, start=1):
        t = (2 * k - 2) * h
        y = solve_y(p.gamma, p.beta, theta1, t)
        worst = max(worst, abs(th - y) - CONSTANTS.theta_track_const * h * h * math.expm1(2 * t))
    return worst
