"""Parameter spaces and coordinate changes.

Three coordinate systems are used: the eigenvalue pair (alpha, beta), the
asymptotic triple (gamma, theta, nu) and the iteration triple (u, v, theta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import CONSTANTS

FOUR_THIRDS = 4.0 / 3.0


class DomainError(ValueError):
    """Raised when a point lies outside the region an operation accepts."""


@dataclass(frozen=True)
class SpectralParams:
    alpha: float
    beta: float

    @property
    def gamma(self) -> float:
        return self.beta / self.alpha

    def admissible(self, tol: float = 0.0) -> bool:
        """Check 1/3 < beta <= alpha <= 1 and alpha + beta >= 4/3."""
        a, b = self.alpha, self.beta
        return (b > 1.0 / 3.0 and b <= a + tol and a <= 1.0 + tol
                and a + b >= FOUR_THIRDS - tol)


@dataclass(frozen=True)
class AsymptoticPoint:
    gamma: float
    theta: float
    nu: float

    def in_box(self, delta: float = CONSTANTS.delta) -> bool:
        return (CONSTANTS.gamma_low <= self.gamma <= 1.0
                and 0.0 <= self.theta <= math.pi
                and -delta <= self.nu <= delta)

    def spectral(self, beta_value: float) -> SpectralParams:
        return SpectralParams(beta_value / self.gamma, beta_value)


@dataclass(frozen=True)
class IterationPoint:
    u: float
    v: float
    theta: float
    s: int

    @property
    def h(self) -> float:
        return 1.0 / (2 * self.s + 1)

    @property
    def ABC(self):
        h2 = self.h ** 2
        return 1 + 2 * h2 * self.v, 1 - 2 * h2 * self.v, 1 - 2 * h2 * self.u

    def in_K(self) -> bool:
        return self.s >= 2 and uv_domain_contains(self.u, self.v) and 0.0 <= self.theta <= math.pi


def v_lower(u: float) -> float:
    """Lower edge of the (u, v) domain; zero below u = 9/4."""
    if u < 2.25:
        return 0.0
    rad = (128.0 * u * u - 144.0 * u - 81.0 - 27.0 * math.sqrt(9.0 + 32.0 * u)) / 128.0
    return math.sqrt(max(rad, 0.0))


def alpha_beta_from_uv(u: float, v: float) -> SpectralParams:
    if not (v >= 0.0 and v < u):
        raise DomainError(f"need 0 <= v < u, got u={u!r}, v={v!r}")
    return SpectralParams(1.0 / math.sqrt(u - v), 1.0 / math.sqrt(u + v))


def uv_from_alpha_beta(p: SpectralParams):
    ia2 = 1.0 / (p.alpha * p.alpha)
    ib2 = 1.0 / (p.beta * p.beta)
    return 0.5 * (ib2 + ia2), 0.5 * (ib2 - ia2)


def uv_domain_contains(u: float, v: float) -> bool:
    if not (1.0 <= u <= 5.0 and 0.0 <= v <= u - 1.0):
        return False
    if u >= 2.25:
        return v >= v_lower(u)
    return True


def delta_domain_contains(p: AsymptoticPoint, beta_value: float) -> bool:
    alpha = beta_value / p.gamma
    return beta_value <= alpha <= 1.0 and alpha + beta_value >= FOUR_THIRDS
