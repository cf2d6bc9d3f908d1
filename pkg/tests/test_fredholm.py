import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpz_exact.errors import DomainError, NonPositiveDeterminant
from kpz_exact.fredholm import (
    FREDHOLM,
    MELLIN_BARNES,
    PAINLEVE,
    SUMMED,
    airy_kernel,
    clip_probability,
    eq_laplace_invert,
    eq_laplace_transform,
    fredholm_det,
    fredholm_nystrom,
    fredholm_series,
    g_series,
    g_series_from_moments,
    glaplace_kernel_matrix,
    kpz_crossover,
    semidiscrete_laplace_det,
    tracy_widom_f2,
)
from kpz_exact.special import airy


def test_fredholm_series_matches_dense_determinant():
    rng = np.random.default_rng(0)
    A = 0.1 * (rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12)))
    series = fredholm_series(A).value
    direct = np.linalg.det(np.eye(12) + A)
    assert series == pytest.approx(direct, rel=1e-12)


def test_fredholm_det_agrees_with_series():
    rng = np.random.default_rng(1)
    A = 0.05 * rng.standard_normal((8, 8))
    assert fredholm_det(A) == pytest.approx(fredholm_series(A).value.real, rel=1e-12)


@given(p=st.floats(min_value=-5e-9, max_value=1.0))
@settings(max_examples=50, deadline=None)
def test_clip_probability_accepts_near_range(p):
    out = clip_probability(p)
    assert 0.0 <= out <= 1.0


def test_clip_probability_rejects_far_negative():
    with pytest.raises(NonPositiveDeterminant):
        clip_probability(-1e-3)


def test_kernel_methods_agree():
    # summed and Mellin-Barnes forms of the q-Laplace kernel
    q, t, n = 0.5, 1.0, 1
    for zeta in (-0.05, -0.1, complex(-0.1, 0.1)):
        a = glaplace_kernel_matrix(zeta, n, t, q, method=SUMMED)
        b = glaplace_kernel_matrix(zeta, n, t, q, method=MELLIN_BARNES)
        assert np.max(np.abs(a - b)) < 1e-8


def test_g_det_matches_moment_series():
    q, t = 0.5, 1.0
    for n in (1, 2):
        for zeta in (-0.05, -0.1, complex(-0.1, 0.1)):
            det = g_series(n, t, q, zeta).value
            ser = complex(g_series_from_moments(n, t, q, zeta))
            assert abs(det - ser) <= 1e-6


def test_laplace_transform_inversion_roundtrip():
    # transform a known finite pmf and invert it back
    q = 0.5
    pmf = np.array([0.35, 0.4, 0.2, 0.05])
    for m, p in enumerate(pmf):
        rec = eq_laplace_invert(
            lambda z: eq_laplace_transform(pmf, z, q), m, q)
        assert rec == pytest.approx(p, abs=1e-10)


def test_pmf_n1_is_poisson():
    # -x_1(t) - 1 for step q-TASEP is Poisson(t) for every q
    from kpz_exact.fredholm import qtasep_pmf

    t, q = 1.0, 0.5
    atoms = qtasep_pmf(1, t, q, m_max=8)
    for m, p in enumerate(atoms):
        poisson = math.exp(-t) * t**m / math.factorial(m)
        assert p == pytest.approx(poisson, abs=5e-8)


def test_tracy_widom_known_value_and_limits():
    # F2(0) reference value from the Painleve representation
    assert tracy_widom_f2(0.0, method=PAINLEVE) == pytest.approx(
        0.9693728283552627, abs=1e-9)
    assert tracy_widom_f2(8.0, method=PAINLEVE) == pytest.approx(1.0, abs=1e-10)
    assert tracy_widom_f2(-6.0, method=PAINLEVE) < 1e-4


def test_tracy_widom_routes_agree():
    for s in (-3.0, -1.0, 0.5, 2.0):
        a = tracy_widom_f2(s, method=FREDHOLM)
        b = tracy_widom_f2(s, method=PAINLEVE)
        assert abs(a - b) <= 1e-6


def test_airy_kernel_diagonal_limit():
    x = 0.7
    direct = airy_kernel(np.array(x), np.array(x))
    for h in (1e-3, 1e-4):
        near = airy_kernel(np.array(x), np.array(x + h))
        assert abs(near - direct) < 5e-3 * max(1.0, abs(direct))
    assert direct == pytest.approx(
        airy(x, derivative=True) ** 2 - x * airy(x) ** 2, rel=1e-12)


def test_fredholm_nystrom_doubling_guard():
    val = fredholm_nystrom(airy_kernel, -2.0, 16.0, n_nodes=80,
                           check_doubling=True)
    assert 0.0 < val < 1.0


def test_crossover_is_a_cdf_between_f2_limits():
    t = 10.0
    vals = [kpz_crossover(r, t) for r in np.arange(-3.0, 3.1, 0.75)]
    assert all(0.0 <= v <= 1.0 + 1e-8 for v in vals)
    assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))


def test_semidiscrete_det_is_probability_like():
    # u-Laplace determinant lies in (0, 1] and decreases in u
    vals = [semidiscrete_laplace_det(u, 1.0, 2).value.real
            for u in (0.1, 1.0, 5.0)]
    assert all(0.0 < v <= 1.0 + 1e-9 for v in vals)
    assert vals[0] > vals[1] > vals[2]


def test_semidiscrete_det_matches_mc():
    # E[e^{-u z(tau; n)}] against Euler-Maruyama samples
    from kpz_exact.simulate import RngStream, she_semidiscrete_simulate

    u, tau, n = 1.0, 1.0, 2
    det = semidiscrete_laplace_det(u, tau, n).value.real
    z = she_semidiscrete_simulate(n, tau, 5e-4, RngStream(8), n_samples=40_000)
    # the simulated field carries an e^{-3 tau / 2} drift relative to the
    # undrifted partition function the determinant transforms
    vals = np.exp(-u * z[:, n - 1] * math.exp(1.5 * tau))
    mc = float(np.mean(vals))
    stderr = float(np.std(vals) / math.sqrt(len(vals)))
    assert abs(mc - det) < 3.5 * stderr + 2e-3


def test_kernel_rejects_bad_domain():
    with pytest.raises(DomainError):
        glaplace_kernel_matrix(-10.0, 1, 1.0, 0.5, method=SUMMED)
