import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpz_exact.asymptotics import (
    airy_decay_estimate,
    airy_oscillation_estimate,
    gamma_as,
    gamma_k,
    gamma_k_critical_point,
    intermittency_report,
    laplace_estimate,
    lyapunov_profile_csv,
    stirling_estimate,
)
from kpz_exact.errors import DomainError
from kpz_exact.special import airy, polygamma


def test_laplace_gaussian_family():
    reports = laplace_estimate(lambda x: -x * x, lambda x: 1.0, -1.0, 1.0, [100])
    r = reports[0]
    assert r.approx_value == pytest.approx(math.sqrt(math.pi / 100), rel=1e-6)
    assert abs(r.ratio - 1.0) < 5e-3


def test_laplace_rejects_boundary_max_and_multimodal():
    with pytest.raises(DomainError):
        laplace_estimate(lambda x: x, lambda x: 1.0, 0.0, 1.0, [10])
    with pytest.raises(DomainError):
        laplace_estimate(lambda x: math.sin(8 * x), lambda x: 1.0, 0.0, 3.0, [10])


def test_laplace_ratio_monotone_to_one():
    reports = laplace_estimate(lambda y: math.log(y) - y, lambda y: 1.0,
                               1e-6, 12.0, [5, 10, 20, 50])
    errs = [abs(r.ratio - 1.0) for r in reports]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_stirling_at_ten():
    assert abs(stirling_estimate(10) / 3628800.0 - 1.0) < 0.01


@given(nu=st.floats(min_value=0.2, max_value=4.0))
@settings(max_examples=40, deadline=None)
def test_gamma_one_closed_form(nu):
    assert gamma_k(nu, 1) == pytest.approx(nu - 1.0 - nu * math.log(nu), abs=1e-12)


def test_gamma_two_critical_point_closed_form():
    for nu in (0.5, 1.0, 2.0):
        closed = 0.5 * (nu - 1.0 + math.sqrt(nu * nu + 1.0))
        assert abs(gamma_k_critical_point(nu, 2) - closed) <= 1e-10


def test_gamma_as_against_grid_scan():
    value, s, d = gamma_as(1.0)
    assert polygamma(s, 1) == pytest.approx(1.0, abs=1e-10)
    grid = np.linspace(0.2, 5.0, 20001)
    brute = -1.5 + np.min(grid - np.array([polygamma(g, 0) for g in grid]))
    assert value == pytest.approx(brute, abs=1e-7)
    assert d > 0.0


def test_gamma_as_s_increasing_in_nu():
    ss = [gamma_as(nu)[1] for nu in (0.5, 1.0, 2.0, 4.0)]
    assert all(b > a for a, b in zip(ss, ss[1:]))


def test_intermittency_chain_and_windows():
    profile = intermittency_report(1.0, 3)
    chain = [profile.gamma_as] + [g / (i + 1) for i, g in enumerate(profile.gamma_k)]
    assert all(b - a > 1e-6 for a, b in zip(chain, chain[1:]))
    assert profile.strict_ordering
    assert all(w > 0 for w in profile.alpha_windows)


def test_weak_ordering_across_nu():
    for nu in (0.25, 0.5, 1.0, 2.0, 4.0):
        assert intermittency_report(nu, 4).weak_ordering


def test_superlinear_growth():
    profile = intermittency_report(1.0, 6)
    assert profile.superlinear_coefficient > 0.0
    ratios = [g / (i + 1) for i, g in enumerate(profile.gamma_k)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))


def test_profile_csv_shape():
    text = lyapunov_profile_csv([0.5, 1.0], k_max=3)
    lines = text.strip().splitlines()
    assert lines[0].split(",") == ["nu", "k", "gamma_k", "gamma_k_over_k",
                                   "gamma_as", "s", "d"]
    assert len(lines) == 1 + 2 * 3


def test_airy_estimates_within_one_percent():
    assert abs(airy_decay_estimate(10.0) / airy(10.0) - 1.0) < 0.01
    assert abs(airy_oscillation_estimate(10.0) / airy(-10.0) - 1.0) < 0.01


def test_airy_leading_order_converges_from_below_accuracy():
    # the order-0 (displayed) term is less accurate but converges
    errs = [abs(airy_decay_estimate(x, order=0) / airy(x) - 1.0)
            for x in (5.0, 10.0, 20.0)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
