"""Fixed numeric constants of the verification.

Every constant is read-only and carries a short provenance note in
``NOTES`` describing what it bounds and where it comes from.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType


@dataclass(frozen=True)
class IterationBoundTable:
    """Published derivative bounds of cb and en for a range of s."""

    cb_theta: float
    cb_u: float
    cb_v: float
    en_theta: float
    en_u: float
    en_v: float

    def as_tuple(self):
        return (self.cb_theta, self.cb_u, self.cb_v,
                self.en_theta, self.en_u, self.en_v)


@dataclass(frozen=True)
class VerificationConstants:
    delta: float = 0.0354
    mu_threshold: float = 0.0446
    mu_published: float = 0.0484
    cb_bound_const: float = 33.95
    en_bound_const: float = 41.99
    theta_track_const: float = 4.865
    E_derivative_bounds: tuple = (2.48, 4.41, 4.33)
    E_corrections: tuple = (1.04753, 1.53551, 2.26776)
    # coefficients of the second-derivative grid budgets: (gamma, theta) per bound
    E_grid_budgets: tuple = ((231.0, 107.0), (231.0, 168.0), (144.0, 453.0))
    gamma_low: float = 0.414
    gamma_span: float = 0.586
    gamma_reduce_bound: float = 5.0
    gamma_reduce_target: float = -0.0355
    beta_range_deriv: float = 29.0
    beta_min_published: float = 0.4143
    beta_max_published: float = 0.6733
    beta_max_sharp: float = 0.6531
    D_min_published: float = 2.16
    delta_beta_published: float = 0.0164
    kernel_budget_default: float = 200.0
    kernel_budget_f2: float = 250.0
    kernel_published: MappingProxyType = field(default_factory=lambda: MappingProxyType({
        "M0": 1.4145, "M1": 2.3471, "M2": 0.56, "M4": 2.419, "M5": 4.323,
        "M6": 75.277, "M7": 14.096, "M8": 0.10862}))
    gamma_gamma_budget: float = 453.0
    iter_bounds: MappingProxyType = field(default_factory=lambda: MappingProxyType({
        "s>=4": IterationBoundTable(16.5, 3.5, 3.6, 24.1, 5.15, 6.25),
        "s=3": IterationBoundTable(22.2, 4.35, 4.4, 32.9, 6.46, 6.9),
        "s=2": IterationBoundTable(7.56, 1.39, 1.39, 10.09, 2.22, 2.81),
    }))
    # uncertainty coefficients (per 1/n) on the net maxima of m_v and m_theta
    mv_mt_uncertainty: MappingProxyType = field(default_factory=lambda: MappingProxyType({
        "s>=4": (2.3, 20.2), "s=2": (9.2, 74.5)}))
    # significant digits kept when padded m-values are rounded outward
    pad_digits: MappingProxyType = field(default_factory=lambda: MappingProxyType({
        "s>=4": 4, "s=3": 3, "s=2": 2}))
    mv_mt_published: tuple = (1.042, 5.272)
    mv_mt_padded: tuple = (1.065, 5.474)
    mu_m_s3: tuple = (1.11, 1.12, 6.16)
    m_s2: tuple = (1.25, 1.2, 7.8)
    min_m_published: MappingProxyType = field(default_factory=lambda: MappingProxyType({
        "s>=4": 0.0367, "s=3": 0.0339, "s=2": 0.02725}))
    delta_m_published: MappingProxyType = field(default_factory=lambda: MappingProxyType({
        "s>=4": 0.0365, "s=3": 0.0221, "s=2": 0.02205}))
    # default resolutions
    n_mu: int = 6
    n_gamma_reduce: int = 500
    n_kernel: int = 500000
    n_beta_range: int = 50000
    n_e_bounds: int = 500
    n_iter_min_high: int = 121
    n_iter_min_low: int = 200
    n_iter_bounds: int = 100
    n_iter_bounds_s2: int = 250
    quad_tol: float = 1e-11


CONSTANTS = VerificationConstants()

NOTES = MappingProxyType({
    "delta": "half-width of the nu window; bound on |cb| for s >= 15 rescaled to angle units",
    "mu_threshold": "value mu(delta) must exceed so that the norm equation cannot hold for s >= 15",
    "mu_published": "published certified lower bound for the minimum of E over Delta",
    "cb_bound_const": "|CB| <= 33.95/(2s+1)^2 from the boundary-condition error chain",
    "en_bound_const": "|EN| <= 41.99/(2s+1)^2 from the integral-equation error chain",
    "theta_track_const": "|theta_k - y(t_{2k-2})| <= 4.865 h^2 (exp(2 t_{2k-2}) - 1) from the Gronwall step",
    "E_derivative_bounds": "published bounds on |dE/dnu|, |dE/dtheta|, |dE/dgamma| over D",
    "E_corrections": "analytic gap between the exact partials of E and their two-variable surrogates",
    "E_grid_budgets": "second-derivative bounds of the surrogates times the net half-steps",
    "gamma_reduce_bound": "bound 5 on |gamma B'(gamma) + B(gamma)| on [1/3, 0.414]",
    "beta_range_deriv": "bound 29 on |D'(gamma)| with D = B (gamma B - delta)",
    "kernel_budget_default": "theta-derivative budget for the kernels f4..f8 (and f1)",
    "kernel_budget_f2": "theta-derivative budget for f2",
    "kernel_published": "published certified maxima of f0..f8 at gamma = 0.414",
    "gamma_gamma_budget": "published bound on the gamma-derivative of the gamma surrogate",
    "iter_bounds": "published bounds on the partial derivatives of cb and en",
    "mv_mt_uncertainty": "stated grid uncertainty of the m_v and m_theta searches per 1/n",
    "pad_digits": "significant digits of the published padded m-values",
    "min_m_published": "published net minima of m = max(|cb|, |en|)",
    "delta_m_published": "published uncertainty on the minimum of m",
})
