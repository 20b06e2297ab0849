import math

import pytest
from hypothesis import given, settings, strategies as st

from grunbaum.domains import (FOUR_THIRDS, AsymptoticPoint, DomainError, IterationPoint,
                              SpectralParams, alpha_beta_from_uv, delta_domain_contains,
                              uv_domain_contains, uv_from_alpha_beta, v_lower)
from grunbaum.constants import CONSTANTS, NOTES


def test_corner_and_diagonal():
    p = alpha_beta_from_uv(1, 0)
    assert (p.alpha, p.beta) == (1.0, 1.0)
    p = alpha_beta_from_uv(4.5, 0)
    assert p.alpha == p.beta == pytest.approx(1 / math.sqrt(4.5), abs=1e-15)


def test_known_pair():
    u, v = uv_from_alpha_beta(SpectralParams(1.0, 0.5))
    assert (u, v) == pytest.approx((2.5, 1.5), abs=1e-15)
    p = alpha_beta_from_uv(u, v)
    assert (p.alpha, p.beta) == pytest.approx((1.0, 0.5), abs=1e-15)


def test_rejects_v_at_least_u():
    with pytest.raises(DomainError):
        alpha_beta_from_uv(2.0, 2.0)
    with pytest.raises(DomainError):
        alpha_beta_from_uv(2.0, 3.0)


def test_uv_domain_examples():
    assert uv_domain_contains(1, 0)
    assert not uv_domain_contains(5, 4.5)
    assert v_lower(2.25) == 0.0
    assert uv_domain_contains(2.25, 0)


def test_delta_domain_examples():
    assert not delta_domain_contains(AsymptoticPoint(1.0, 0.3, 0.0), 2 / math.pi)
    # alpha = beta / gamma > 1
    assert not delta_domain_contains(AsymptoticPoint(0.5, 0.3, 0.0), 0.6)
    assert delta_domain_contains(AsymptoticPoint(0.75, 0.3, 0.0), 0.72)


def test_iteration_point_abc():
    p = IterationPoint(2.0, 0.5, 0.1, 2)
    h, A, B, C = 0.2, 1 + 2 * 0.04 * 0.5, 1 - 2 * 0.04 * 0.5, 1 - 2 * 0.04 * 2.0
    assert p.h == pytest.approx(h)
    assert p.ABC == pytest.approx((A, B, C))
    assert p.in_K()


def test_constants_are_frozen_and_annotated():
    with pytest.raises(Exception):
        CONSTANTS.delta = 1.0
    for name in ("delta", "mu_threshold", "cb_bound_const", "en_bound_const", "theta_track_const"):
        assert name in NOTES


uv_points = st.tuples(st.floats(1.0, 5.0), st.floats(0.0, 1.0)).map(lambda t: (t[0], t[1] * (t[0] - 1.0)))


@settings(max_examples=10_000, deadline=None)
@given(uv_points)
def test_round_trip(uv):
    u, v = uv
    if v >= u:
        return
    back = uv_from_alpha_beta(alpha_beta_from_uv(u, v))
    assert back[0] == pytest.approx(u, rel=1e-12)
    assert back[1] == pytest.approx(v, rel=1e-12, abs=1e-12 * u)


@settings(max_examples=10_000, deadline=None)
@given(uv_points)
def test_constraint_equivalence(uv):
    u, v = uv
    p = alpha_beta_from_uv(u, v)
    if uv_domain_contains(u, v):
        assert p.beta <= p.alpha <= 1.0 + 1e-15
        assert p.alpha + p.beta >= FOUR_THIRDS - 1e-9
    elif u >= 2.25 and v < v_lower(u):
        assert p.alpha + p.beta < FOUR_THIRDS + 1e-9
