import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpz_exact.errors import DomainError
from kpz_exact.spectral import (
    LEFT,
    RIGHT,
    UNNESTED,
    biorthogonality_check,
    boundary_residual,
    cluster_weight,
    eigen_residual,
    plancherel_check,
    psi,
    pt_conjugation_residual,
    solve_qboson,
    transform_F,
    transform_J,
)


def _random_z(rng, k):
    return rng.standard_normal(k) + 1j * rng.standard_normal(k) + 2.0


def test_single_particle_closed_form():
    # psi_left reduces to (1-z)^{-n}
    assert psi(np.array([0.5]), (2,), 0.5, LEFT) == pytest.approx(4.0)
    assert psi(np.array([3.0]), (1,), 0.3, LEFT) == pytest.approx(-0.5)


def test_psi_symmetric_under_z_permutation():
    rng = np.random.default_rng(0)
    z = _random_z(rng, 3)
    n = (2, 1, 0)
    a = psi(z, n, 0.5, LEFT)
    b = psi(z[[2, 0, 1]], n, 0.5, LEFT)
    assert a == pytest.approx(b, rel=1e-12)


def test_degenerate_spectral_points_rejected():
    with pytest.raises(DomainError):
        psi(np.array([1.0, 2.0]), (1, 0), 0.5, LEFT)
    with pytest.raises(DomainError):
        psi(np.array([2.0, 2.0]), (1, 0), 0.5, LEFT)


@given(seed=st.integers(min_value=0, max_value=10_000),
       k=st.integers(min_value=1, max_value=3))
@settings(max_examples=60, deadline=None)
def test_eigen_and_pt_residuals(seed, k):
    rng = np.random.default_rng(seed)
    z = _random_z(rng, k)
    n = tuple(sorted(int(v) for v in rng.integers(-3, 4, size=k))[::-1])
    assert eigen_residual(z, n, 0.5) < 1e-10
    assert pt_conjugation_residual(z, n, 0.5) < 1e-12


def test_boundary_condition_on_clustered_configs():
    rng = np.random.default_rng(3)
    for k in (2, 3, 4):
        for _ in range(50):
            z = _random_z(rng, k)
            i = int(rng.integers(1, k))
            n = sorted((int(v) for v in rng.integers(-2, 4, size=k)), reverse=True)
            n[i] = n[i - 1]
            assert boundary_residual(z, tuple(n), 0.5, i) < 1e-12


def test_cluster_weight_k1_is_minus_one():
    assert cluster_weight((5,), 0.5) == pytest.approx(-1.0)
    assert cluster_weight((0,), 0.3) == pytest.approx(-1.0)


def test_bethe_amplitude_recursion():
    # adjacent-transposition ratio of permutation amplitudes, k=3
    q = 0.5
    rng = np.random.default_rng(9)
    z = _random_z(rng, 3)

    def amplitude(sigma):
        out = 1.0 + 0.0j
        for b in range(3):
            for a in range(b + 1, 3):
                out *= (z[sigma[a]] - q * z[sigma[b]]) / (z[sigma[a]] - z[sigma[b]])
        return out

    def S(z1, z2):
        return -(z1 - q * z2)

    for sigma in itertools.permutations(range(3)):
        for i in (0, 1):
            tau = list(sigma)
            tau[i], tau[i + 1] = tau[i + 1], tau[i]
            lhs = amplitude(tuple(tau))
            rhs = (-S(z[sigma[i]], z[sigma[i + 1]])
                   / S(z[sigma[i + 1]], z[sigma[i]]) * amplitude(sigma))
            assert lhs == pytest.approx(rhs, rel=1e-11)


def test_transform_F_linearity_and_delta():
    rng = np.random.default_rng(2)
    q = 0.5
    z = _random_z(rng, 2)
    x, y = (2, 1), (3, 0)
    fa = {x: 1.0}
    fb = {y: 1.0}
    fab = {x: 2.0, y: -1.5}
    va = transform_F(fa, z, q)
    vb = transform_F(fb, z, q)
    vab = transform_F(fab, z, q)
    assert vab == pytest.approx(2.0 * va - 1.5 * vb, rel=1e-12)
    assert va == pytest.approx(psi(z, x, q, RIGHT), rel=1e-12)


def test_transform_J_k1_constant_function():
    # (J 1)(n) integrates (1-z)^{-n-1} around 1: the residue of (1-z)^{-1}
    # at z = 1 is -1, and higher n have no pole at all
    q = 0.5
    assert transform_J(lambda z: np.ones(z.shape[:-1]), (0,), q) == pytest.approx(
        -1.0, abs=1e-10)
    for n in (1, 2, 3):
        assert abs(transform_J(lambda z: np.ones(z.shape[:-1]), (n,), q)) < 1e-10


def test_transform_J_routes_agree():
    rng = np.random.default_rng(5)
    q = 0.5
    for n in [(1, 0), (2, 2), (3, 1)]:
        def G(Z):
            s = np.sum(Z, axis=-1)
            return 1.0 + 0.3 * s + 0.1 * s * s
        a = transform_J(G, n, q)
        b = transform_J(G, n, q, route=UNNESTED)
        assert abs(a - b) <= 1e-8 * max(1.0, abs(a))


def test_plancherel_small_boxes():
    assert plancherel_check(1, 4, 0.5) <= 1e-10
    assert plancherel_check(2, 3, 0.5) <= 1e-7


def test_biorthogonality_small_boxes():
    assert biorthogonality_check(1, 3, 0.5) <= 1e-7
    assert biorthogonality_check(2, 3, 0.5) <= 1e-7


def test_solve_qboson_at_time_zero_and_derivative():
    from kpz_exact.spectral import cluster_generator_apply

    q = 0.5
    h0 = {(2, 1): 1.0, (1, 1): -0.5, (3, 2): 0.25}
    for n in [(2, 1), (1, 1)]:
        assert solve_qboson(h0, 0.0, n, q) == pytest.approx(
            h0[n], abs=1e-8)
    # d/dt at t=0 equals the backward generator applied to h0
    n = (2, 1)
    eps = 1e-5
    num = (solve_qboson(h0, eps, n, q) - solve_qboson(h0, -eps, n, q)) / (2 * eps)

    def h0_fn(parts):
        return h0.get(tuple(parts), 0.0)

    gen = cluster_generator_apply(h0_fn, n, q)
    assert num == pytest.approx(gen, abs=1e-6)


def test_solve_qboson_step_data_matches_moments():
    from itertools import combinations_with_replacement

    from kpz_exact.contours import qtasep_moment_nested

    q, t = 0.5, 1.0
    box = 30
    h0 = {tuple(sorted(p, reverse=True)): 1.0
          for p in combinations_with_replacement(range(1, box + 1), 2)}
    for n in [(1, 1), (2, 1)]:
        val = solve_qboson(h0, t, n, q)
        assert val == pytest.approx(qtasep_moment_nested(n, t, q), rel=1e-8)
