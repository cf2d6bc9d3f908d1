"""Coordinate Bethe eigenfunctions of the q-Boson generator, the direct
and inverse transforms between configuration space and spectral space,
and the spectral solver for the backward equation.

Conventions used throughout (fixed by the k = 1 algebra and validated by
the mutual-inverse and step-data tests):
  - left eigenfunctions carry exponent -n_j and cross factor with q;
  - right eigenfunctions carry exponent +n_j, cross factor with 1/q, and a
    parity factor (-1)^k, which is exactly what the PT conjugation with
    the cluster operator produces;
  - the inverse transform J integrates counterclockwise over the same
    nested circles around 1 as the moment formulas."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .contours import (circle_nodes, nested_cross_integral, nested_radii,
                       unnest_expand, _nodes_for_clearance)
from .errors import DomainError, InvalidConfig
from .special import _as_q, q_pochhammer

LEFT = "LEFT"
RIGHT = "RIGHT"
NESTED = "NESTED"
UNNESTED = "UNNESTED"

_MAX_K = 6


def _check_spectral(z):
    z = np.asarray(z, dtype=complex)
    k = z.shape[-1]
    if k > _MAX_K:
        raise DomainError(f"k = {k} exceeds the permutation-sum cap {_MAX_K}")
    if np.any(np.abs(z - 1.0) < 1e-12):
        raise DomainError("spectral points must avoid 1")
    for a in range(k):
        for b in range(a + 1, k):
            if np.any(np.abs(z[..., a] - z[..., b]) < 1e-12):
                raise DomainError("spectral points must be pairwise distinct")
    return z


def _psi_array(z, n_parts, q, side):
    """Permutation-sum eigenfunction, vectorized over leading axes of z."""
    k = z.shape[-1]
    qq = q if side == LEFT else 1.0 / q
    # The right eigenfunction carries the inverse cluster constant; this is
    # what makes the direct and inverse transforms mutual inverses.
    sgn = 1.0 if side == LEFT else 1.0 / cluster_weight(tuple(n_parts), q)
    expo = -1.0 if side == LEFT else 1.0
    n_arr = np.array(n_parts, dtype=float)
    total = np.zeros(z.shape[:-1], dtype=complex)
    for sigma in itertools.permutations(range(k)):
        zs = z[..., list(sigma)]
        fac = np.ones(z.shape[:-1], dtype=complex)
        for b in range(k):
            for a in range(b + 1, k):
                fac = fac * (zs[..., a] - qq * zs[..., b]) / (zs[..., a] - zs[..., b])
        fac = fac * np.prod((1.0 - zs) ** (expo * n_arr), axis=-1)
        total = total + fac
    return sgn * total


def psi(z, n, q, side=LEFT):
    """Bethe eigenfunction at spectral vector z and ordered configuration n."""
    from .simulate import as_config

    q = _as_q(q)
    cfg = n if isinstance(n, tuple) else tuple(as_config(n).parts)
    z = _check_spectral(z)
    if z.shape[-1] != len(cfg):
        raise DomainError("z and n must have equal length")
    if side not in (LEFT, RIGHT):
        raise InvalidConfig(f"unknown side {side!r}")
    return complex(_psi_array(z, cfg, q, side))


def _clusters(parts):
    """Run lengths of equal entries, with the index of each run's last
    element."""
    out = []
    i = 0
    k = len(parts)
    while i < k:
        j = i
        while j + 1 < k and parts[j + 1] == parts[i]:
            j += 1
        out.append((j - i + 1, j))
        i = j + 1
    return out


def cluster_weight(parts, q):
    """The conjugation constant: (-1)^k q^{-k(k-1)/2} prod over clusters of
    (q; q)_c / (1-q)^c."""
    q = _as_q(q)
    k = len(parts)
    val = (-1.0) ** k * q ** (-k * (k - 1) / 2.0)
    for c, _ in _clusters(parts):
        val *= complex(q_pochhammer(q, q, c)).real / (1.0 - q) ** c
    return val


def pt_conjugation_residual(z, n, q):
    """|psi_right - q^{-k(k-1)/2} psi_left(reflected) / cluster_weight|,
    normalized by the magnitude of psi_right."""
    q = _as_q(q)
    parts = tuple(n)
    k = len(parts)
    reflected = tuple(-p for p in reversed(parts))
    rhs = (q ** (-k * (k - 1) / 2.0)
           * _psi_array(np.asarray(z, dtype=complex), reflected, q, LEFT)
           / cluster_weight(parts, q))
    lhs = psi(z, parts, q, RIGHT)
    return abs(lhs - complex(rhs)) / max(1.0, abs(lhs))


def cluster_generator_apply(f, n, q):
    """Backward q-Boson generator in ordered coordinates: each maximal
    cluster of c equal parts lowers its last member at rate 1 - q^c."""
    q = _as_q(q)
    parts = tuple(n)
    base = f(parts)
    out = 0.0
    for c, last in _clusters(parts):
        moved = list(parts)
        moved[last] -= 1
        out += (1.0 - q**c) * (f(tuple(moved)) - base)
    return out


def eigen_residual(z, n, q):
    """|L psi_left - (q-1)(z_1+...+z_k) psi_left| at configuration n."""
    q = _as_q(q)
    z = _check_spectral(z)
    parts = tuple(n)
    val = cluster_generator_apply(lambda m: psi(z, m, q, LEFT), parts, q)
    ev = (q - 1.0) * complex(np.sum(z))
    ref = psi(z, parts, q, LEFT)
    return abs(val - ev * ref) / max(1.0, abs(ref))


def boundary_residual(z, n, q, i):
    """|(grad_i - q grad_{i+1}) psi_left| at a configuration with
    n_i = n_{i+1} (1-based i), where grad_j lowers coordinate j."""
    q = _as_q(q)
    z = _check_spectral(z)
    parts = tuple(n)
    if parts[i - 1] != parts[i]:
        raise DomainError("boundary relation needs n_i = n_(i+1)")

    def at(m):
        return psi(z, tuple(m), q, LEFT)

    lo_i = list(parts)
    lo_i[i - 1] -= 1
    lo_j = list(parts)
    lo_j[i] -= 1
    base = at(parts)
    val = (at(lo_i) - base) - q * (at(lo_j) - base)
    return abs(val) / max(1.0, abs(base))


# ---------------------------------------------------------------------------
# transforms


def transform_F(f, z, q):
    """(F f)(z) = sum over the support of f(n) psi_right(z, n)."""
    q = _as_q(q)
    z = np.asarray(z, dtype=complex)
    total = np.zeros(z.shape[:-1], dtype=complex)
    for parts, val in f.items():
        total = total + val * _psi_array(z, tuple(parts), q, RIGHT)
    return total


def transform_J(G, n, q, route=NESTED, n_nodes=None):
    """(J G)(n): the k-fold nested integral of the cross product
    prod (z_A - z_B)/(z_A - q z_B) times prod (1 - z_j)^{-n_j - 1} G(z),
    over counterclockwise circles around 1 (each enclosing q times the next
    and the point 1, excluding 0).

    G must be vectorized over a trailing axis of length k.  The UNNESTED
    route evaluates the same quantity through the partition expansion on
    small circles."""
    from .simulate import as_config

    q = _as_q(q)
    cfg = as_config(n)
    k = cfg.k
    n_arr = np.array(cfg.parts, dtype=float)

    def integrand(Z):
        return np.prod((1.0 - Z) ** (-n_arr - 1.0), axis=-1) * G(Z)

    if route == UNNESTED:
        total, _ = unnest_expand(integrand, k, q,
                                 n_nodes=64 if n_nodes is None else n_nodes)
        return complex(total)
    if route != NESTED:
        raise InvalidConfig(f"unknown route {route!r}")
    radii, g = nested_radii(k, q)
    if n_nodes is None:
        n_nodes = _nodes_for_clearance(g)
    nodes = [circle_nodes(1.0, r, n_nodes, theta_offset=0.5 + 0.13 * a)
             for a, r in enumerate(radii)]
    cross = lambda za, zb: (za - zb) / (za - q * zb)
    return complex(nested_cross_integral(integrand, nodes, cross))


def plancherel_check(k, box, q, route=NESTED):
    """max over configurations x, y with parts <= box of
    |J(F delta_x)(y) - 1_{x=y}|."""
    from itertools import combinations_with_replacement

    q = _as_q(q)
    configs = [tuple(sorted(c, reverse=True))
               for c in combinations_with_replacement(range(box + 1), k)]
    worst = 0.0
    for x in configs:
        G = lambda Z: _psi_array(Z, x, q, RIGHT)
        for y in configs:
            val = transform_J(G, y, q, route=route)
            target = 1.0 if x == y else 0.0
            worst = max(worst, abs(val - target))
    return worst


def biorthogonality_check(k, box, q, n_nodes=192):
    """max over x, y of |<psi_left(x), psi_right(y)>_C - 1_{x=y}| with the
    determinantal single-string measure and the prod 1/(1-w_j) weight on
    counterclockwise circles of radius about 1.2 around the origin."""
    from itertools import combinations_with_replacement

    q = _as_q(q)
    if q > 0.85:
        raise DomainError("pairing circles are only pole-free for q <= 0.85")
    radii = [1.2 + 0.05 * j for j in range(k)]
    nodes = [circle_nodes(0.0, r, n_nodes, theta_offset=0.5 + 0.23 * j)
             for j, r in enumerate(radii)]
    grids = np.meshgrid(*[z for z, _ in nodes], indexing="ij")
    W = np.stack(grids, axis=-1)
    weight = np.ones(W.shape[:-1], dtype=complex)
    wg = np.meshgrid(*[w for _, w in nodes], indexing="ij")
    for g in wg:
        weight = weight * g
    D = (q * W)[..., :, None] - W[..., None, :]
    det = np.linalg.det(1.0 / D)
    pref = ((1.0 - q) ** k * (-1.0) ** k * q ** (-k * (k - 1) / 2.0)
            / math.factorial(k))
    meas = pref * det * np.prod(W, axis=-1) * np.prod(1.0 / (1.0 - W), axis=-1)
    configs = [tuple(sorted(c, reverse=True))
               for c in combinations_with_replacement(range(box + 1), k)]
    worst = 0.0
    for x in configs:
        lx = _psi_array(W, x, q, LEFT)
        for y in configs:
            ry = _psi_array(W, y, q, RIGHT)
            val = np.sum(weight * meas * lx * ry)
            target = 1.0 if x == y else 0.0
            worst = max(worst, abs(val - target))
    return worst


def solve_qboson(h0, t, n, q, route=NESTED, n_nodes=None):
    """Spectral solution of the backward equation: apply F to the initial
    data, multiply by the time factor e^{t(q-1) sum z_j}, apply J."""
    q = _as_q(q)

    def G(Z):
        return (np.exp(t * (q - 1.0) * np.sum(Z, axis=-1))
                * transform_F(h0, Z, q))

    return transform_J(G, n, q, route=route, n_nodes=n_nodes)
