import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpz_exact.contours import (
    circle,
    circle_nodes,
    contour_quadrature,
    nested_cross_integral,
    nested_radii,
    partitions,
    qtasep_moment_nested,
    qtasep_moment_unnested,
    she_k2_terms,
    she_moment_nested,
    unnest_expand,
)
from kpz_exact.errors import NestingInfeasible
from kpz_exact.simulate import qboson_moment_exact


def test_circle_quadrature_residue():
    # (1/2pi i) closed integral of 1/(z - a) = 1 when a is inside
    z, w = circle_nodes(0.0, 1.0, 64)
    val = np.sum(w / (z - 0.3))
    assert val == pytest.approx(1.0, abs=1e-13)
    val = np.sum(w / (z - 2.0))
    assert val == pytest.approx(0.0, abs=1e-13)


def test_contour_quadrature_doubles_until_converged():
    val = contour_quadrature(lambda z: np.exp(z) / z, circle(0.0, 1.0))
    assert val == pytest.approx(1.0, abs=1e-12)


def test_nested_radii_are_nested_and_feasible():
    radii, _ = nested_radii(3, 0.5)
    assert all(a > b for a, b in zip(radii, radii[1:]))
    assert radii[0] < 1.0
    # each contour encloses q * (the next one) with clearance
    for a, b in zip(radii, radii[1:]):
        assert a > 0.5 * b


def test_nested_radii_infeasible_raises():
    with pytest.raises(NestingInfeasible):
        nested_radii(3, 0.1)


@given(k=st.integers(min_value=1, max_value=7))
@settings(max_examples=10, deadline=None)
def test_partition_counts(k):
    counts = {1: 1, 2: 2, 3: 3, 4: 5, 5: 7, 6: 11, 7: 15}
    parts = partitions(k)
    assert len(parts) == counts[k]
    assert all(sum(p) == k for p in parts)
    assert all(tuple(sorted(p, reverse=True)) == tuple(p) for p in parts)


def test_nested_moment_matches_ode_oracle():
    for q, t in [(0.3, 0.5), (0.5, 1.0)]:
        for n_vec in [(1,), (2, 1), (2, 2, 1)]:
            contour = qtasep_moment_nested(n_vec, t, q)
            ode = qboson_moment_exact(n_vec, t, q)
            assert contour == pytest.approx(ode, rel=1e-10, abs=1e-12)


def test_unnested_route_agrees_with_nested():
    for q in (0.3, 0.5, 0.8):
        for n_vec in [(1,), (2, 1), (3, 2, 2)]:
            nested = qtasep_moment_nested(n_vec, 1.0, q)
            unnested = qtasep_moment_unnested(n_vec, 1.0, q)
            assert abs(nested - unnested) <= 1e-8 * max(1.0, abs(nested))


def test_unnesting_on_random_analytic_integrands():
    # the partition expansion reproduces the nested integral for generic
    # analytic symmetric data, not only the moment integrand
    rng = np.random.default_rng(4)
    q = 0.5
    for k in (1, 2, 3):
        radii, g = nested_radii(k, q)
        m = max(96, int(26.0 / g))
        for _ in range(7):
            c = rng.uniform(-1.0, 1.0)
            pows = rng.integers(1, 4, size=k)

            def F(Z, c=c, pows=pows):
                return np.prod(np.exp(c * Z) * (1.0 - Z) ** (-pows), axis=-1)

            nodes = [circle_nodes(1.0, r, m, theta_offset=0.5 + 0.13 * a)
                     for a, r in enumerate(radii)]

            def cross(za, zb):
                return (za - zb) / (za - q * zb)

            lhs = nested_cross_integral(F, nodes, cross)
            rhs, _ = unnest_expand(F, k, q)
            assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs))


def test_she_moment_oracle_small_cases():
    # E z(tau; 1) = e^{-tau}; E z(tau; 2) = tau e^{-tau}
    tau = 0.7
    assert she_moment_nested((1,), tau) == pytest.approx(math.exp(-tau), rel=1e-10)
    assert she_moment_nested((2,), tau) == pytest.approx(tau * math.exp(-tau), rel=1e-10)


def test_she_k2_split_is_consistent():
    tau, n = 2.0, 2
    paired, split, total = she_k2_terms(tau, n, n_nodes=256)
    direct = she_moment_nested((n, n), tau)
    assert total == pytest.approx(direct, rel=1e-8)
    assert paired + split == pytest.approx(total, rel=1e-12)
