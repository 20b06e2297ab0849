"""Finite cases 2 <= s <= 14: the angle recursion, cb, en and their bounds.

With h = 1/(2s+1), A = 1 + 2h^2 v, B = 1 - 2h^2 v and C = 1 - 2h^2 u, the
critical angles satisfy A cos(t_k) cos(t_{k+1}) + B sin(t_k) sin(t_{k+1}) = C.
Two equivalent forms of one step are provided: the closed-form angle map F
and the recursion on x_k = A cos(t_k), y_k = B sin(t_k).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, Decimal
from functools import lru_cache

import numba
import numpy as np

from .certgrid import BlockResult, CertifiedExtremum, merge_blocks, run_blocks
from .constants import CONSTANTS
from .domains import DomainError, alpha_beta_from_uv, v_lower

INDUCTION_TOL = 1e-10


class InfeasibleError(DomainError):
    """The recursion leaves its domain (arcsin argument above 1 or negative radicand)."""

    def __init__(self, msg, k=None):
        super().__init__(msg)
        self.k = k


def _abc(u, v, s):
    h = 1.0 / (2 * s + 1)
    h2 = h * h
    return h, 1 + 2 * h2 * v, 1 - 2 * h2 * v, 1 - 2 * h2 * u


def _check_s(s):
    if int(s) != s or s < 2:
        raise ValueError(f"s must be an integer >= 2, got {s!r}")


def step_closed_form(u, v, theta, s):
    _check_s(s)
    h, A, B, C = _abc(u, v, s)
    h2 = h * h
    c2 = math.cos(2 * theta)
    rad = u + v * c2 - h2 * (u * u - v * v)
    arg = C / math.sqrt(1 + 4 * h2 * h2 * v * v + 4 * h2 * v * c2)
    if not rad > 0 or abs(arg) > 1:
        raise InfeasibleError(f"no successor angle at u={u}, v={v}, theta={theta}")
    return (theta + 0.5 * math.pi - math.atan(2 * h2 * v * math.sin(2 * theta) / (1 + 2 * h2 * v * c2))
            - math.asin(arg))


def step_coordinates(u, v, x, y, s):
    _check_s(s)
    _, A, B, C = _abc(u, v, s)
    r2 = x * x + y * y
    q2 = r2 - C * C
    if q2 < 0:
        raise InfeasibleError(f"negative radicand at u={u}, v={v}")
    q = math.sqrt(q2)
    return A * (C * x - y * q) / r2, B * (C * y + x * q) / r2


@dataclass(frozen=True)
class AngleSequence:
    s: int
    thetas: tuple
    induction_residual: float = 0.0

    def is_increasing(self) -> bool:
        return all(a < b for a, b in zip(self.thetas, self.thetas[1:]))

    def within_half_turn(self) -> bool:
        return self.thetas[-1] < self.thetas[0] + math.pi


def induction_residual(u, v, s, t0, t1):
    """sin((t1 - t0)/2) - h sqrt(1/b^2 - (1/b^2 - 1/a^2) sin^2((t0 + t1)/2))."""
    h = 1.0 / (2 * s + 1)
    ib2, ia2 = u + v, u - v
    return math.sin(0.5 * (t1 - t0)) - h * math.sqrt(ib2 - (ib2 - ia2) * math.sin(0.5 * (t0 + t1)) ** 2)


def iterate_sequence(u, v, theta1, s):
    thetas = [float(theta1)]
    worst = 0.0
    for k in range(1, s + 1):
        try:
            nxt = step_closed_form(u, v, thetas[-1], s)
        except InfeasibleError as exc:
            raise InfeasibleError(str(exc), k) from None
        r = abs(induction_residual(u, v, s, thetas[-1], nxt))
        if r > INDUCTION_TOL:
            raise InfeasibleError(f"induction relation violated by {r:.3e} at step {k}", k)
        worst = max(worst, r)
        thetas.append(nxt)
    return AngleSequence(s, tuple(thetas), worst)


def _coordinate_run(u, v, theta1, s):
    _, A, B, _ = _abc(u, v, s)
    xs = [A * math.cos(theta1)]
    ys = [B * math.sin(theta1)]
    for _ in range(s):
        x, y = step_coordinates(u, v, xs[-1], ys[-1], s)
        xs.append(x)
        ys.append(y)
    return A, B, xs, ys


def _lead_term(u, v, s):
    p = alpha_beta_from_uv(u, v)
    return (s * p.alpha - (s + 1) * p.beta) / ((p.alpha + p.beta) * (2 * s + 1)), p


def cb(u, v, theta1, s):
    A, B, xs, ys = _coordinate_run(u, v, theta1, s)
    p = alpha_beta_from_uv(u, v)
    return (p.alpha / A * math.cos(theta1) * xs[-1] + p.beta / B * math.sin(theta1) * ys[-1]
            - 1.0 / (2 * s + 1))


def en(u, v, theta1, s):
    A, B, xs, ys = _coordinate_run(u, v, theta1, s)
    lead, p = _lead_term(u, v, s)
    acc = math.fsum(xs[k] * xs[k + 1] / (A * A) - ys[k] * ys[k + 1] / (B * B) for k in range(s))
    return lead + acc / (2 * s + 1) + p.beta * math.sin(theta1) * ys[-1] / B


def cb_angles(u, v, theta1, s):
    t = iterate_sequence(u, v, theta1, s).thetas
    p = alpha_beta_from_uv(u, v)
    return (p.alpha * math.cos(t[0]) * math.cos(t[-1]) + p.beta * math.sin(t[0]) * math.sin(t[-1])
            - 1.0 / (2 * s + 1))


def en_angles(u, v, theta1, s):
    """Norm equation in its summed-cosine form."""
    t = iterate_sequence(u, v, theta1, s).thetas
    sp, sm = math.sqrt(u + v), math.sqrt(u - v)
    acc = math.fsum(math.cos(t[k] + t[k + 1]) for k in range(s))
    return (acc / (2 * s + 1) + math.sin(t[0]) * math.sin(t[-1]) / sp
            + (s * sp - (s + 1) * sm) / ((sp + sm) * (2 * s + 1)))


# ---------------------------------------------------------------- nets on K

@dataclass(frozen=True)
class UVNet:
    """Rows of the (u, v) net: one u per row, v from start in count equal steps."""
    n: int
    u: np.ndarray
    vstart: np.ndarray
    vstep: np.ndarray
    vcount: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.vcount)[:-1])).astype(np.int64)

    @property
    def pairs(self) -> int:
        return int(self.vcount.sum())

    def row(self, i):
        return self.u[i], self.vstart[i] + self.vstep[i] * np.arange(self.vcount[i])


@lru_cache(maxsize=8)
def uv_net(n: int) -> UVNet:
    """u = 1 + iu/(4n); v regridded between the radical edge and u - 1 beyond u = 9/4."""
    us, vs, st, cnt = [], [], [], []
    for iu in range(16 * n + 1):
        u = 1.0 + (iu / n) / 4.0
        if iu <= 5 * n:
            us.append(u)
            vs.append(0.0)
            st.append(1.0 / (4 * n))
            cnt.append(iu + 1)
        else:
            vmin = v_lower(u)
            nv = math.ceil(4.0 * n * (u - 1.0 - vmin)) + 1
            us.append(u)
            vs.append(vmin)
            st.append((u - 1.0 - vmin) / nv)
            cnt.append(nv + 1)
    return UVNet(n, np.array(us), np.array(vs), np.array(st), np.array(cnt, dtype=np.int64))


def theta_net(n: int) -> np.ndarray:
    return math.pi * np.arange(13 * n) / (13 * n)


def _s_list(s):
    if isinstance(s, tuple):
        lo, hi = s
        out = list(range(int(lo), int(hi) + 1))
    elif isinstance(s, list):
        out = [int(x) for x in s]
    else:
        out = [int(s)]
    for x in out:
        if not 2 <= x <= 14:
            raise ValueError(f"s must lie in 2..14, got {x}")
    return out


def s_label(s) -> str:
    ss = _s_list(s)
    return str(ss[0]) if len(ss) == 1 else f"{ss[0]}-{ss[-1]}"


@numba.njit(nogil=True, cache=True)
def _m_row(s, u, vstart, vstep, vcount, cz, sz, base, nt, out):
    """Net minima of max(|cb|,|en|) and min(|cb|,|en|) over one u row.

    out = [best_max, best_min]; returns (flat index of best_max, flat index of
    best_min, infeasible count).  Flat index = (base + iv) * nt + iz.
    """
    h = 1.0 / (2 * s + 1)
    inv = h
    C = 1.0 - 2.0 * h * h * u
    C2 = C * C
    X = np.empty(nt)
    Y = np.empty(nt)
    EN = np.empty(nt)
    bad = np.zeros(nt, dtype=np.bool_)
    bmax = out[0]
    bmin = out[1]
    imax = -1
    imin = -1
    infeasible = 0
    for j in range(vcount):
        v = vstart + j * vstep
        A = 1.0 + 2.0 * h * h * v
        B = 1.0 - 2.0 * h * h * v
        a = 1.0 / math.sqrt(u - v)
        b = 1.0 / math.sqrt(u + v)
        iA2 = 1.0 / (A * A)
        iB2 = 1.0 / (B * B)
        en0 = (s * a - (s + 1) * b) / (2 * s + 1) / (a + b)
        for iz in range(nt):
            X[iz] = A * cz[iz]
            Y[iz] = B * sz[iz]
            EN[iz] = en0
            bad[iz] = False
        for k in range(s):
            for iz in range(nt):
                x = X[iz]
                y = Y[iz]
                r2 = x * x + y * y
                q2 = r2 - C2
                if q2 < 0.0:
                    bad[iz] = True
                    q2 = 0.0
                q = math.sqrt(q2)
                xx = A * (C * x - y * q) / r2
                yy = B * (C * y + x * q) / r2
                EN[iz] += (x * xx * iA2 - y * yy * iB2) * inv
                X[iz] = xx
                Y[iz] = yy
        for iz in range(nt):
            if bad[iz]:
                infeasible += 1
                continue
            e = EN[iz] + b * sz[iz] * Y[iz] / B
            c = a * cz[iz] * X[iz] / A + b * sz[iz] * Y[iz] / B - inv
            hi = max(abs(c), abs(e))
            lo = min(abs(c), abs(e))
            if hi < bmax:
                bmax = hi
                imax = (base + j) * nt + iz
            if lo < bmin:
                bmin = lo
                imin = (base + j) * nt + iz
    out[0] = bmax
    out[1] = bmin
    return imax, imin, infeasible


@numba.njit(nogil=True, cache=True)
def _fv_ft_row(s, u, vstart, vstep, vcount, c2, s2, out):
    """Maxima of |F_v| and |F_theta| (derivatives of F divided by h) over one u row."""
    c = 1.0 / (2 * s + 1)
    C = 1.0 - 2.0 * c * c * u
    mv = out[0]
    mt = out[1]
    for j in range(vcount):
        v = vstart + j * vstep
        for ix in range(c2.shape[0]):
            D = 1.0 + 4.0 * c * c * v * c2[ix] + 4.0 * c * c * c * c * v * v
            R = math.sqrt(u + v * c2[ix] - c * c * u * u + c * c * v * v)
            dfv = abs(C * (c2[ix] + 2.0 * c * c * v) / D / R - 2.0 * c * s2[ix] / D)
            dfx = abs(2.0 * v * C * s2[ix] / D / R + 4.0 * c * v * (c2[ix] + 2.0 * c * c * v) / D)
            if dfv > mv:
                mv = dfv
            if dfx > mt:
                mt = dfx
    out[0] = mv
    out[1] = mt


# ---------------------------------------------------------------- derivative bounds

def second_derivative_bounds(h: float) -> dict:
    """Bounds on the second partials of F over K as functions of h."""
    a, b, c = 1 - 9 * h * h, 1 - 8 * h * h, 1 - 2 * h * h
    ra = math.sqrt(a)
    return {
        "vu": (1 + 8 * h * h) / a ** 1.5 * h,
        "tu": 8 / a ** 1.5 * h,
        "vv": (4 * h * h * c * (1 + 8 * h * h) ** 2 / (b ** 4 * ra)
               + c * (1 + 8 * h * h) ** 2 / (2 * b * b * a ** 1.5)
               + 2 * h * h * c / (b * b * ra) + 8 * h ** 3 * (1 + 2 * h * h) / b ** 4) * h,
        "tv": (2 * c / (b * b * ra) + 32 * h * h * c * (1 + 8 * h * h) / (b ** 4 * ra)
               + 8 * c * (1 + 8 * h * h) / (b * b * a ** 1.5) + 4 * h / b ** 2 + 64 * h ** 3 / b ** 4) * h,
        "tt": (16 * c / (b * b * ra) + 1024 * h * h * c / (b ** 4 * ra) + 64 * c / (b * b * a ** 1.5)
               + 32 * h / b ** 2 + 128 * h ** 3 * (1 + 8 * h * h) / b ** 4) * h,
    }


def formula_uncertainty(s: int):
    """Per-1/n uncertainty of the m_v and m_theta net maxima from the second partials."""
    h = 1.0 / (2 * s + 1)
    d = second_derivative_bounds(h)
    du = dv = 1.0 / 8.0
    dt = math.pi / 26.0
    return ((d["vu"] * du + d["vv"] * dv + d["tv"] * dt) / h,
            (d["tu"] * du + d["tv"] * dv + d["tt"] * dt) / h)


def _table_key(smin: int) -> str:
    return "s>=4" if smin >= 4 else f"s={smin}"


def mvmt_uncertainty(ss) -> tuple:
    key = _table_key(min(ss))
    if key in CONSTANTS.mv_mt_uncertainty:
        return CONSTANTS.mv_mt_uncertainty[key]
    return formula_uncertainty(min(ss))


def round_up(x: float, digits: int) -> float:
    """Round outward (towards +inf) to the given number of significant digits."""
    d = Decimal(repr(float(x)))
    if d <= 0:
        return float(x)
    q = Decimal(1).scaleb(d.adjusted() - digits + 1)
    return float(d.quantize(q, rounding=ROUND_CEILING))


def assemble_geometric(mu, mv, mt, s):
    """Six cb/en bounds (theta, u, v for cb then en) by geometric-sum propagation."""
    E = math.exp(mt / 2)
    G = 1 + (2 / mt) * math.exp(mt / (2 * (2 * s + 1)))
    return (1 + E, 0.5 + mu / mt * E, 0.5 + mv / mt * E,
            1 + E * G, 2 / 3 + mu / mt * E * G, 7 / 4 + mv / mt * E * G)


def assemble_sharpened(Mu, Mv, Mt):
    """Finite-product bounds for s = 2 from M_u, M_v, M_theta."""
    cbt = 1 + Mt * Mt
    cbu = 0.5 + Mu * (1 + Mt)
    cbv = 0.5 + Mv * (1 + Mt)
    ent = 1 + Mt * Mt + (1 + 2 * Mt + Mt * Mt) / 5
    enu = 2 / 3 + Mu * (1 + Mt) + (1 + 2 * Mu + Mu * (1 + Mt)) / 5
    env = 7 / 4 + Mv * (1 + Mt) + (1 + 2 * Mv + Mv * (1 + Mt)) / 5
    return (cbt, cbu, cbv, ent, enu, env)


@dataclass
class IterationBounds:
    s: str
    n: int
    m_u: float
    m_v_net: float
    m_theta_net: float
    uncertainty: tuple
    m_v: float
    m_theta: float
    rounded: tuple
    table: tuple
    method: str
    M: tuple = ()
    evaluations: int = 0

    def delta_m(self, n: int) -> float:
        """Uncertainty on the min-m net: half-steps pi/(26n) in theta, 1/(8n) in u and v."""
        return grid_delta_m(self.table, n)


def grid_delta_m(table, n):
    cbt, cbu, cbv, ent, enu, env = table
    dcb = (cbt * math.pi / 26 + cbu / 8 + cbv / 8) / n
    den = (ent * math.pi / 26 + enu / 8 + env / 8) / n
    return max(dcb, den)


def published_delta_m(table, n):
    """The published budget line: theta and v divisors swapped relative to grid_delta_m."""
    cbt, cbu, cbv, ent, enu, env = table
    dcb = (cbt / 8 + cbu / 8 + cbv * math.pi / 26) / n
    den = (ent / 8 + enu / 8 + env * math.pi / 26) / n
    return max(dcb, den)


def m_u_bound(s) -> float:
    h = 1.0 / (2 * min(_s_list(s)) + 1)
    return 1.0 / math.sqrt(1 - 9 * h * h)


def net_mv_mt(s, n, workers=None):
    """Net maxima of |F_v| and |F_theta| over the K net for every s in range."""
    ss = _s_list(s)
    net = uv_net(n)
    th = theta_net(n)
    c2, s2 = np.cos(2 * th), np.sin(2 * th)

    def row(i):
        out = np.zeros(2)
        for x in ss:
            _fv_ft_row(x, net.u[i], net.vstart[i], net.vstep[i], int(net.vcount[i]), c2, s2, out)
        return out

    rows = run_blocks(row, len(net.u), workers)
    mv = max(float(r[0]) for r in rows)
    mt = max(float(r[1]) for r in rows)
    return mv, mt, net.pairs * th.size * len(ss)


def derivative_bounds(s, n=None, workers=None) -> IterationBounds:
    ss = _s_list(s)
    smin = min(ss)
    if n is None:
        n = CONSTANTS.n_iter_bounds_s2 if smin == 2 else CONSTANTS.n_iter_bounds
    mu = m_u_bound(ss)
    mv_net, mt_net, evals = net_mv_mt(ss, n, workers)
    cu_v, cu_t = mvmt_uncertainty(ss)
    mv, mt = mv_net + cu_v / n, mt_net + cu_t / n
    digits = CONSTANTS.pad_digits[_table_key(smin)]
    rmu = mu
    rmv, rmt = round_up(mv, digits), round_up(mt, digits)
    if smin == 2:
        if len(ss) != 1:
            raise ValueError("the sharpened bounds apply to s = 2 alone")
        h = 0.2
        M = (rmu * h, rmv * h, 1 + rmt * h)
        table = assemble_sharpened(*M)
        method = "sharpened"
    else:
        M = ()
        table = tuple(max(col) for col in zip(*(assemble_geometric(rmu, rmv, rmt, x) for x in ss)))
        method = "geometric"
    return IterationBounds(s_label(ss), n, mu, mv_net, mt_net, (cu_v / n, cu_t / n), mv, mt,
                           (rmu, rmv, rmt), table, method, M, evals)


# ---------------------------------------------------------------- min m

@dataclass
class MinMResult:
    extremum: CertifiedExtremum
    min_form: float
    infeasible: int
    delta_m: float
    delta_m_swapped: float
    bounds: IterationBounds = field(repr=False, default=None)

    @property
    def passed(self) -> bool:
        return self.extremum.net_value > self.delta_m


def net_min_m(s, n, workers=None):
    ss = _s_list(s)
    net = uv_net(n)
    th = theta_net(n)
    cz, sz = np.cos(th), np.sin(th)
    offs = net.offsets
    P = net.pairs
    nt = th.size

    def row(i):
        best_hi = best_lo = None
        for k, x in enumerate(ss):
            out = np.array([np.inf, np.inf])
            imax, imin, bad = _m_row(x, net.u[i], net.vstart[i], net.vstep[i], int(net.vcount[i]),
                                     cz, sz, int(offs[i]) + k * P, nt, out)
            hi = BlockResult(float(out[0]), int(imax), int(net.vcount[i]) * nt, int(bad))
            lo = BlockResult(float(out[1]), int(imin), 0, 0)
            best_hi = hi if best_hi is None else merge_blocks([best_hi, hi])
            best_lo = lo if best_lo is None else merge_blocks([best_lo, lo])
        return best_hi, best_lo

    rows = run_blocks(row, len(net.u), workers)
    hi = merge_blocks([r[0] for r in rows])
    lo = merge_blocks([r[1] for r in rows])
    return hi, lo, ss, net, th


def _decode(index, ss, net, th):
    nt = th.size
    pair, iz = divmod(index, nt)
    k, pair = divmod(pair, net.pairs)
    i = int(np.searchsorted(net.offsets, pair, side="right") - 1)
    j = pair - int(net.offsets[i])
    return (ss[k], float(net.u[i]), float(net.vstart[i] + j * net.vstep[i]), float(th[iz]))


def min_m(s, n=None, workers=None, bounds: IterationBounds = None) -> MinMResult:
    """Certified minimum of m = max(|cb|, |en|) over K; passes iff net min > delta m."""
    ss = _s_list(s)
    if n is None:
        n = CONSTANTS.n_iter_min_low if min(ss) <= 3 else CONSTANTS.n_iter_min_high
    if bounds is None:
        bounds = derivative_bounds(ss, workers=workers)
    hi, lo, ss, net, th = net_min_m(ss, n, workers)
    dm = grid_delta_m(bounds.table, n)
    key = _table_key(min(ss))
    # the published procedure applies the s >= 4 table and swapped divisors for every s
    dm_app = published_delta_m(CONSTANTS.iter_bounds["s>=4"].as_tuple(), n)
    arg = _decode(hi.index, ss, net, th)
    ext = CertifiedExtremum.build(
        "min", hi.value, dm, hi.evaluations, arg, hi.excluded,
        {"index": hi.index, "min_form": lo.value, "delta_m_swapped": dm_app,
         "published_min": CONSTANTS.min_m_published[key], "s": s_label(ss)})
    return MinMResult(ext, lo.value, hi.excluded, dm, dm_app, bounds)
