"""Complex contour quadrature: circle and vertical-line rules, nested
contour families with geometric feasibility checks, k-fold nested integrals
with pairwise cross factors, and the partition expansion that rewrites a
nested integral as a sum of single-contour integrals.

Conventions: every weight set here includes the 1/(2 pi i) factor, so a
plain weighted sum of integrand values returns the residue-normalized
integral.  Circles are traversed counterclockwise."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (DomainError, InvalidConfig, NestingInfeasible,
                     QuadratureNotConverged)
from .special import _as_q, q_factorial

CIRCLE = "CIRCLE"
VLINE = "VLINE"

_G_MIN = 0.01  # smallest usable pole clearance for trapezoid convergence


@dataclass(frozen=True)
class Contour:
    kind: str
    center: complex = 0.0
    radius: float = 0.0
    half_height: float = 0.0

    def __post_init__(self):
        if self.kind == CIRCLE:
            if self.radius <= 0:
                raise DomainError("circle radius must be positive")
        elif self.kind == VLINE:
            if self.half_height <= 0:
                raise DomainError("line half_height must be positive")
        else:
            raise DomainError(f"unknown contour kind {self.kind!r}")


def circle(center, radius) -> Contour:
    return Contour(CIRCLE, complex(center), float(radius))


def vline(x0, half_height) -> Contour:
    return Contour(VLINE, complex(x0), 0.0, float(half_height))


def circle_nodes(center, radius, n_nodes, theta_offset=0.5):
    """Trapezoid nodes/weights for (1/2 pi i) of a counterclockwise circle.

    The half-step angular offset keeps nodes off the real axis, where many
    integrands of interest have branch points or near-poles."""
    theta = 2.0 * math.pi * (np.arange(n_nodes) + theta_offset) / n_nodes
    z = center + radius * np.exp(1j * theta)
    w = radius * np.exp(1j * theta) / n_nodes
    return z, w


def vline_nodes(x0, half_height, n_panels, deg=24):
    """Composite Gauss-Legendre nodes/weights for int ds/(2 pi i) along
    Re s = x0, truncated to |Im s| <= half_height."""
    xg, wg = np.polynomial.legendre.leggauss(deg)
    edges = np.linspace(-half_height, half_height, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    y = (mid[:, None] + half * xg[None, :]).ravel()
    wy = (half * wg[None, :] * np.ones((n_panels, 1))).ravel()
    s = complex(x0) + 1j * y
    w = wy / (2.0 * math.pi)
    return s, w


def contour_nodes(contour: Contour, n_nodes):
    if contour.kind == CIRCLE:
        return circle_nodes(contour.center, contour.radius, n_nodes)
    n_panels = max(2, int(math.ceil(n_nodes / 24)))
    return vline_nodes(contour.center, contour.half_height, n_panels)


def contour_quadrature(f, contour: Contour, rel_tol=1e-10, n_start=64,
                       max_nodes=1 << 16):
    """(1/2 pi i) integral of a scalar-vectorized f over the contour,
    refined by node doubling until two successive levels agree."""
    n = n_start
    z, w = contour_nodes(contour, n)
    prev = np.sum(f(z) * w)
    while n < max_nodes:
        n *= 2
        z, w = contour_nodes(contour, n)
        cur = np.sum(f(z) * w)
        if abs(cur - prev) <= rel_tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureNotConverged(
        f"no convergence at {n} nodes on {contour.kind}: "
        f"last delta {abs(cur - prev):.3e}"
    )


# ---------------------------------------------------------------------------
# nested contour geometry


def nested_radii(k, q, r_inner=None):
    """Radii r_1 > ... > r_k of circles around 1 with 1 - r_1 > 0,
    r_A >= (1-q) + q r_{A+1} (contour A encloses q times contour A+1),
    and the clearance margins equalized across all constraints.

    Returns (radii, g) where g is the uniform clearance; raises
    NestingInfeasible when the geometry forces g below a usable floor."""
    q = _as_q(q)
    if k < 1:
        raise DomainError("k must be >= 1")
    if r_inner is None:
        r_inner = min(0.1, 0.8 * (1.0 - q) / (1.0 + q))
    d_k = 1.0 - r_inner
    if k == 1:
        return np.array([r_inner]), d_k
    # substitute d_A = 1 - r_A; the chain is d_A <= q d_{A+1} - g with
    # d_1 = g, so g (1 + sum_{j<k-1} q^j) = q^{k-1} d_k
    denom = 1.0 + sum(q**j for j in range(k - 1))
    g = q ** (k - 1) * d_k / denom
    if g < _G_MIN:
        r1_needed = 1.0 - g + _G_MIN  # how far past 1 the outer circle wants
        raise NestingInfeasible(
            f"nesting infeasible for k={k}, q={q}: clearance {g:.4f} below "
            f"{_G_MIN} (outer radius would need ~{r1_needed:.4f} >= 1)"
        )
    d = np.empty(k)
    d[k - 1] = d_k
    for a in range(k - 2, -1, -1):
        d[a] = q * d[a + 1] - g
    return 1.0 - d, g


def nested_radii_additive(k, r_inner=0.5, gap=0.15):
    """Radii for circles around 0 with R_A = R_{A+1} + 1 + gap (contour A
    encloses contour A+1 shifted by one)."""
    if k < 1:
        raise DomainError("k must be >= 1")
    return r_inner + (1.0 + gap) * np.arange(k - 1, -1, -1)


def _nodes_for_clearance(g, lo=64, hi=2048):
    return int(np.clip(round(26.0 / g), lo, hi))


# ---------------------------------------------------------------------------
# k-fold nested integrals


def nested_cross_integral(F, nodes, cross):
    """(1/2 pi i)^k nested integral of prod_{A<B} cross(z_A, z_B) * F(Z).

    nodes: list of (z_a, w_a) per level, outermost first; weights already
    carry 1/(2 pi i).  F is vectorized over a trailing axis of length k.
    Levels beyond the innermost two are handled by an index loop, so cost
    grows like prod(M_a) with the last two levels fully vectorized."""
    k = len(nodes)
    if k == 1:
        z, w = nodes[0]
        return np.sum(F(z[:, None]) * w)
    if k == 2:
        (z1, w1), (z2, w2) = nodes
        Z = np.empty(z1.shape + z2.shape + (2,), dtype=complex)
        Z[..., 0] = z1[:, None]
        Z[..., 1] = z2[None, :]
        integ = cross(z1[:, None], z2[None, :]) * F(Z)
        return np.sum(integ * w1[:, None] * w2[None, :])
    outer = nodes[:-2]
    (za, wa), (zb, wb) = nodes[-2], nodes[-1]
    cab = cross(za[:, None], zb[None, :])
    total = 0.0 + 0.0j
    shapes = [len(z) for z, _ in outer]
    Z = np.empty(za.shape + zb.shape + (k,), dtype=complex)
    Z[..., k - 2] = za[:, None]
    Z[..., k - 1] = zb[None, :]
    for idx in itertools.product(*[range(m) for m in shapes]):
        zf = [outer[a][0][idx[a]] for a in range(k - 2)]
        wf = 1.0 + 0.0j
        cf = 1.0 + 0.0j
        for a in range(k - 2):
            wf *= outer[a][1][idx[a]]
            for b in range(a + 1, k - 2):
                cf *= cross(zf[a], zf[b])
            Z[..., a] = zf[a]
        va = np.ones(za.shape, dtype=complex)
        vb = np.ones(zb.shape, dtype=complex)
        for a in range(k - 2):
            va *= cross(zf[a], za)
            vb *= cross(zf[a], zb)
        integ = cab * F(Z)
        total += wf * cf * np.sum((va * wa)[:, None] * integ * (vb * wb)[None, :])
    return total


def _qtasep_cross(q):
    return lambda za, zb: (za - zb) / (za - q * zb)


def _she_cross(za, zb):
    return (za - zb) / (za - zb - 1.0)


def qtasep_moment_nested(n_vec, t, q, radii=None, n_nodes=None):
    """E^step[prod_j q^{x_{n_j}(t)+n_j}] by the nested contour formula.

    Contours are circles around 1 (enclosing 1, excluding 0), the A-th
    enclosing q times the (A+1)-st.  Requires weakly decreasing n_vec with
    all parts >= 1."""
    from .simulate import as_config

    cfg = as_config(n_vec)
    if any(p < 1 for p in cfg.parts):
        raise InvalidConfig("moment indices must be >= 1")
    q = _as_q(q)
    k = cfg.k
    if radii is None:
        radii, g = nested_radii(k, q)
        if n_nodes is None:
            n_nodes = _nodes_for_clearance(g)
    elif n_nodes is None:
        n_nodes = 512
    n_arr = np.array(cfg.parts, dtype=float)

    def F(Z):
        return np.prod(
            np.exp((q - 1.0) * t * Z) * (1.0 - Z) ** (-n_arr) / Z, axis=-1
        )

    nodes = [circle_nodes(1.0, r, n_nodes, theta_offset=0.5 + 0.13 * a)
             for a, r in enumerate(radii)]
    val = nested_cross_integral(F, nodes, _qtasep_cross(q))
    val *= (-1.0) ** k * q ** (k * (k - 1) // 2)
    if abs(val.imag) > 1e-9 * max(1.0, abs(val)):
        raise QuadratureNotConverged(
            f"imaginary part {val.imag:.3e} too large for a real moment"
        )
    return float(val.real)


def she_moment_nested(n_vec, tau, radii=None, n_nodes=256):
    """E[z(tau; n_1) ... z(tau; n_k)] for the semi-discrete stochastic heat
    equation with z(0; n) = 1_{n=1}, by the nested contour formula.

    Contours are circles around 0, the A-th enclosing the (A+1)-st shifted
    right by one."""
    from .simulate import as_config

    cfg = as_config(n_vec)
    if any(p < 1 for p in cfg.parts):
        raise InvalidConfig("moment indices must be >= 1")
    k = cfg.k
    if radii is None:
        radii = nested_radii_additive(k)
    n_arr = np.array(cfg.parts, dtype=float)

    def F(Z):
        return np.prod(np.exp(tau * (Z - 1.0)) * Z ** (-n_arr), axis=-1)

    nodes = [circle_nodes(0.0, r, n_nodes, theta_offset=0.5 + 0.13 * a)
             for a, r in enumerate(radii)]
    val = nested_cross_integral(F, nodes, _she_cross)
    if abs(val.imag) > 1e-9 * max(1.0, abs(val)):
        raise QuadratureNotConverged(
            f"imaginary part {val.imag:.3e} too large for a real moment"
        )
    return float(val.real)


# ---------------------------------------------------------------------------
# partition expansion (unnesting)


def partitions(k):
    """Partitions of k in reverse lexicographic order, e.g. 3 -> (3), (2,1),
    (1,1,1)."""
    if k == 0:
        return [()]
    out = []

    def rec(remaining, cap, prefix):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for p in range(min(cap, remaining), 0, -1):
            rec(remaining - p, p, prefix + [p])

    rec(k, k, [])
    return out


def _string_specialization(w, lam, q):
    """w composed with lam: (w_1, q w_1, ..., q^{lam_1 - 1} w_1, w_2, ...).

    w has shape (..., ell); result has shape (..., k)."""
    pieces = []
    for j, lj in enumerate(lam):
        for a in range(lj):
            pieces.append(q**a * w[..., j])
    return np.stack(pieces, axis=-1)


def _eq_symmetrization(F, Z, q):
    """sum over permutations sigma of prod_{B<A} (z_sA - q z_sB)/(z_sA - z_sB)
    times F(Z_sigma), vectorized over leading axes of Z."""
    k = Z.shape[-1]
    total = np.zeros(Z.shape[:-1], dtype=complex)
    for sigma in itertools.permutations(range(k)):
        Zs = Z[..., list(sigma)]
        fac = np.ones(Z.shape[:-1], dtype=complex)
        for b in range(k):
            for a in range(b + 1, k):
                fac = fac * (Zs[..., a] - q * Zs[..., b]) / (Zs[..., a] - Zs[..., b])
        total = total + fac * F(Zs)
    return total


def unnest_expand(F, k, q, n_nodes=64, symmetric=False):
    """Evaluate the k-fold nested cross integral of F as a partition sum of
    small-contour integrals.

    Each partition lam of k contributes an ell(lam)-fold integral over small
    circles around 1 (all strictly inside |z - 1| < (1-q)/(1+q) so that the
    q-shifted circles stay disjoint) of a determinantal measure times the
    q-symmetrization of F evaluated on geometric strings.  When F is known
    to be symmetric the symmetrization collapses to k_q! F.

    Returns (total, per_partition) where per_partition maps lam to its
    contribution."""
    q = _as_q(q)
    if k < 1:
        raise DomainError("k must be >= 1")
    kq_fact = q_factorial(k, q)
    rho_max = min(0.15, 0.85 * (1.0 - q) / (1.0 + q))
    per = {}
    total = 0.0 + 0.0j
    for lam in partitions(k):
        ell = len(lam)
        mult = {}
        for p in lam:
            mult[p] = mult.get(p, 0) + 1
        msym = 1.0
        for m in mult.values():
            msym *= math.factorial(m)
        pref = ((1.0 - q) ** k * (-1.0) ** k * q ** (-k * (k - 1) // 2) / msym)
        # geometric radius spread keeps trapezoid cross-circle convergence
        # fast without letting nodes on different circles collide
        radii = [rho_max * 0.65**j for j in range(ell)]
        nodes = [circle_nodes(1.0, radii[j], n_nodes,
                              theta_offset=0.5 + 0.37 * j)
                 for j in range(ell)]
        qlam = np.array([q**lj for lj in lam])

        def G(W, lam=lam, qlam=qlam):
            D = (W * qlam)[..., :, None] - W[..., None, :]
            det = np.linalg.det(1.0 / D)
            meas = np.ones(W.shape[:-1], dtype=complex)
            for j, lj in enumerate(lam):
                meas = meas * W[..., j] ** lj * q ** (lj * (lj - 1) // 2)
            Z = _string_specialization(W, lam, q)
            if symmetric:
                val = kq_fact * F(Z)
            else:
                val = _eq_symmetrization(F, Z, q)
            return det * meas * val

        contrib = pref * nested_cross_integral(G, nodes, lambda a, b: 1.0)
        per[lam] = contrib
        total += contrib
    return total, per


def qtasep_moment_unnested(n_vec, t, q, n_nodes=64):
    """Same q-moment as qtasep_moment_nested, via the partition expansion."""
    from .simulate import as_config

    cfg = as_config(n_vec)
    if any(p < 1 for p in cfg.parts):
        raise InvalidConfig("moment indices must be >= 1")
    q = _as_q(q)
    k = cfg.k
    n_arr = np.array(cfg.parts, dtype=float)

    def F(Z):
        return np.prod(
            np.exp((q - 1.0) * t * Z) * (1.0 - Z) ** (-n_arr) / Z, axis=-1
        )

    total, _ = unnest_expand(F, k, q, n_nodes=n_nodes, symmetric=False)
    total *= (-1.0) ** k * q ** (k * (k - 1) // 2)
    if abs(total.imag) > 1e-8 * max(1.0, abs(total)):
        raise QuadratureNotConverged(
            f"imaginary part {total.imag:.3e} too large for a real moment"
        )
    return float(total.real)


# ---------------------------------------------------------------------------
# two-point partition terms for the semi-discrete second moment


def she_k2_terms(tau, n, n_nodes=512, gap=0.15):
    """Second moment E[z(tau; n)^2] split into its two partition terms.

    The paired term is a single integral of F(z) F(z+1) over a circle
    through the saddle of the combined exponent; the split term is the
    nested double integral minus the paired term.  Returns
    (paired, split, total)."""
    if n < 1 or tau <= 0:
        raise DomainError("need n >= 1 and tau > 0")
    nu = n / tau

    def F(z):
        return np.exp(tau * (z - 1.0)) * z ** (-float(n))

    # saddle of f(z) + f(z+1), f(z) = z - 1 - nu log z
    zc = 0.5 * (nu - 1.0 + math.sqrt(nu * nu + 1.0))
    paired = contour_quadrature(lambda z: F(z) * F(z + 1.0),
                                circle(0.0, zc), rel_tol=1e-12)
    # outer radius near the saddle of f itself (at z = nu) controls the
    # growth of the nested integrand; keep both exponents balanced
    r2 = zc
    r1 = max(r2 + 1.0 + gap, nu)
    total = she_moment_nested((n, n), tau, radii=np.array([r1, r2]),
                              n_nodes=n_nodes)
    return complex(paired).real, total - complex(paired).real, total
