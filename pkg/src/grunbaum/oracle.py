"""Direct small-N ground truth for Phi_2^N.

Phi(u, (x, y)) = sum_ij u_i u_j |x_i x_j + y_i y_j| over unit u and an
orthonormal 2-frame (x, y).  Writing A for the sign matrix of the projection
entries (sign 0 = +1), Phi = u' D_x A D_x u + u' D_y A D_y u, which is what
the alternating ascent exploits.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .domains import SpectralParams

FRAME_TOL = 1e-12


@dataclass(frozen=True)
class Frame2:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be vectors of equal length")
        tol = FRAME_TOL
        if abs(x @ x - 1) > tol or abs(y @ y - 1) > tol or abs(x @ y) > tol:
            raise ValueError("frame is not orthonormal")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def projection(self) -> np.ndarray:
        return np.outer(self.x, self.x) + np.outer(self.y, self.y)


@dataclass(frozen=True)
class SignMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("sign matrix must be square")
        if not np.array_equal(a, a.T) or not np.all(np.diag(a) == 1) or not np.all(np.abs(a) == 1):
            raise ValueError("sign matrix must be symmetric, +-1, with unit diagonal")
        object.__setattr__(self, "entries", a.astype(np.int8))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def phi2(u, frame: Frame2) -> float:
    u = np.asarray(u, dtype=float)
    return float(u @ np.abs(frame.projection()) @ u)


def sign_matrix(frame: Frame2) -> SignMatrix:
    return SignMatrix(np.where(frame.projection() >= 0, 1, -1))


# ---------------------------------------------------------------- Jacobi eigen

@numba.njit(cache=True)
def _jacobi(a, tol, max_sweeps):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if math.sqrt(2.0 * off) < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    off = 0.0
    for p in range(n):
        for q in range(p + 1, n):
            off += a[p, q] * a[p, q]
    return np.diag(a).copy(), v, math.sqrt(2.0 * off)


def symmetric_eigen(M, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi; eigenvalues descending, eigenvectors in columns."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12):
        raise ValueError("matrix is not symmetric")
    vals, vecs, off = _jacobi(0.5 * (M + M.T), tol * max(1.0, float(np.abs(M).max())), max_sweeps)
    if off >= tol * max(1.0, float(np.abs(M).max())):
        raise ArithmeticError("Jacobi sweeps did not converge")
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order]


def B_u(u, A: SignMatrix) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return u[:, None] * A.entries * u[None, :]


def B_xy(frame: Frame2, A: SignMatrix) -> np.ndarray:
    x, y = frame.x, frame.y
    return x[:, None] * A.entries * x[None, :] + y[:, None] * A.entries * y[None, :]


# ---------------------------------------------------------------- N = 3

def _smallest_root(sigma: float) -> float:
    """Negative root of X^3 - X^2 + sigma, by bisection on [-1, 0]."""
    p = lambda X: X * X * X - X * X + sigma
    lo, hi = -1.0, 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if p(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-17:
            break
    return 0.5 * (lo + hi)


def top_two_root_sum(sigma: float) -> float:
    """b1 + b2 for the roots of X^3 - X^2 + sigma; the roots sum to 1."""
    if sigma == 0:
        return 1.0
    return 1.0 - _smallest_root(sigma)


def lambda2_3() -> float:
    """sigma = 4 u1^2 u2^2 u3^2 is at most 4/27 (equal weights); b1 + b2 then equals 4/3."""
    u = np.full(3, 1 / math.sqrt(3))
    sigma = 4.0 * float(np.prod(u * u))
    value = top_two_root_sum(sigma)
    A = SignMatrix(np.array([[1, 1, 1], [1, 1, -1], [1, -1, 1]]))
    vals, _ = symmetric_eigen(B_u(u, A))
    if abs(vals[0] + vals[1] - value) > 1e-12:
        raise ArithmeticError("cubic and eigenvalue routes disagree")
    return value


# ---------------------------------------------------------------- ascent

@dataclass
class PhiMaximum:
    value: float
    u: np.ndarray
    frame: Frame2
    sign_matrix: SignMatrix
    converged: bool
    sweeps: int
    seed: int
    min_step_gain: float = 0.0
    history: list = field(default_factory=list, repr=False)


def random_frame(n: int, rng) -> Frame2:
    g = rng.standard_normal((n, 2))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    return Frame2(q[:, 0].copy(), q[:, 1].copy())


def _orthonormalize(x, y):
    x = x / np.linalg.norm(x)
    y = y - (x @ y) * x
    return x, y / np.linalg.norm(y)


def ascend(frame: Frame2, max_sweeps: int = 500, tol: float = 1e-13, seed: int = -1,
           polish: int = 20) -> PhiMaximum:
    """Alternate exact maximisation in u and in the frame until Phi stalls.

    After the stall, ``polish`` extra sweeps tighten the fixed point itself.
    """
    n = frame.n
    u = np.full(n, 1 / math.sqrt(n))
    value = phi2(u, frame)
    history = [value]
    min_gain = math.inf
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        start = value
        A = sign_matrix(frame)
        _, vecs = symmetric_eigen(B_xy(frame, A))
        u = np.abs(vecs[:, 0])
        v1 = phi2(u, frame)
        A = sign_matrix(frame)
        _, vecs = symmetric_eigen(B_u(u, A))
        frame = Frame2(*_orthonormalize(vecs[:, 0], vecs[:, 1]))
        v2 = phi2(u, frame)
        min_gain = min(min_gain, v1 - value, v2 - v1)
        value = v2
        history.append(value)
        if converged:
            polish -= 1
            if polish <= 0:
                break
        elif abs(value - start) < tol:
            converged = True
    return PhiMaximum(value, u, frame, sign_matrix(frame), converged, sweeps, seed, min_gain, history)


def maximize_phi(n: int, restarts: int = 20, seed: int = 0, max_sweeps: int = 500) -> PhiMaximum:
    """Best alternating-ascent fixed point over seeded random frames."""
    if n < 2:
        raise ValueError("n must be at least 2")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        res = ascend(random_frame(n, rng), max_sweeps=max_sweeps, seed=r)
        if best is None or res.value > best.value:
            best = res
    return best


# ---------------------------------------------------------------- structure checks

def equivalent_sign_matrices(A: SignMatrix, B: SignMatrix) -> bool:
    """A ~ B under coordinate permutations and per-coordinate sign flips (small n)."""
    if A.n != B.n:
        return False
    a = A.entries.astype(int)
    b = B.entries.astype(int)
    for perm in itertools.permutations(range(A.n)):
        p = a[np.ix_(perm, perm)]
        # sign flips: D p D == b requires d_i d_j = b_ij p_ij; fix d_0 = 1
        d = b[0] * p[0]
        if np.array_equal(d[:, None] * p * d[None, :], b):
            return True
    return False


def critical_point_residuals(u, frame: Frame2, alphabeta: SpectralParams) -> dict:
    u = np.asarray(u, dtype=float)
    a, b = alphabeta.alpha, alphabeta.beta
    A = sign_matrix(frame)
    Bu = B_u(u, A)
    return {
        "diagonal": float(np.max(np.abs((a + b) * u * u - a * frame.x ** 2 - b * frame.y ** 2))),
        "eig_x": float(np.linalg.norm(Bu @ frame.x - a * frame.x)),
        "eig_y": float(np.linalg.norm(Bu @ frame.y - b * frame.y)),
        "eig_u": float(np.linalg.norm(B_xy(frame, A) @ u - (a + b) * u)),
    }


def spectral_from_fixed_point(res: PhiMaximum) -> SpectralParams:
    vals, _ = symmetric_eigen(B_u(res.u, res.sign_matrix))
    return SpectralParams(float(vals[0]), float(vals[1]))
