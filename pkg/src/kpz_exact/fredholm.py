"""Fredholm determinants and the distribution-level pipeline: the
q-Laplace generating determinant for q-TASEP, its inversion to a pmf, the
semi-discrete Laplace-transform determinant, the finite-time KPZ crossover
kernel, and the GUE edge law via both a Fredholm determinant and the
Painleve II representation.

Determinant conventions: kernel matrices produced here already include the
contour quadrature weights (with their 1/(2 pi i)), so det(I + A) of the
matrix is the determinant of the integral operator."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.special import airy as _scipy_airy
from scipy.special import expit, gamma as _scipy_gamma

from .contours import circle_nodes, vline_nodes
from .errors import (DomainError, InvalidConfig, NonPositiveDeterminant,
                     QuadratureNotConverged)
from .special import _as_q, q_factorial, q_pochhammer, qpoch_inf_array

SUMMED = "SUMMED"
MELLIN_BARNES = "MELLIN_BARNES"
AUTO = "AUTO"
FREDHOLM = "FREDHOLM"
PAINLEVE = "PAINLEVE"


@dataclass(frozen=True)
class FredholmResult:
    value: complex
    terms: tuple         # elementary-symmetric series terms, order 0 upward
    error: float         # magnitude of the first neglected term
    l_max: int


def fredholm_series(A, l_max=None, rel_tol=1e-13) -> FredholmResult:
    """det(I + A) through its expansion in operator order.

    The order-l term is the l-th elementary symmetric function of the
    eigenvalues of A (identical to the l-fold quadrature sum on shared
    nodes); partial sums stop when the next term is negligible."""
    A = np.asarray(A)
    mu = np.linalg.eigvals(A)
    cap = len(mu) if l_max is None else min(l_max, len(mu))
    e = np.zeros(cap + 2, dtype=complex)
    e[0] = 1.0
    for m in mu:
        top = min(cap + 1, len(e) - 1)
        for l in range(top, 0, -1):
            e[l] += m * e[l - 1]
    terms = []
    total = 0.0 + 0.0j
    for l in range(cap + 1):
        terms.append(e[l])
        total += e[l]
        nxt = abs(e[l + 1]) if l + 1 <= cap + 1 else 0.0
        if l_max is None and l >= 1 and nxt <= rel_tol * max(1.0, abs(total)):
            return FredholmResult(total, tuple(terms), nxt, l)
    err = abs(e[min(cap + 1, len(e) - 1)])
    return FredholmResult(total, tuple(terms), err, cap)


def fredholm_det(A):
    """det(I + A) as a plain product over eigenvalues."""
    mu = np.linalg.eigvals(np.asarray(A))
    return complex(np.prod(1.0 + mu))


def clip_probability(p, clip_tol=1e-8):
    """Snap tiny numerical excursions outside [0, 1]; larger ones are a
    hard failure of the determinant evaluation."""
    p = float(p)
    if -clip_tol <= p < 0.0:
        warnings.warn(f"clipping probability {p:.3e} to 0")
        return 0.0
    if 1.0 < p <= 1.0 + clip_tol:
        warnings.warn(f"clipping probability {p:.6f} to 1")
        return 1.0
    if p < 0.0 or p > 1.0:
        raise NonPositiveDeterminant(f"probability value {p} outside [0, 1]")
    return p


# ---------------------------------------------------------------------------
# q-Laplace generating determinant


def _gamma_radius(q):
    """Radius of the base circle around 1: q times the circle must stay
    disjoint from it, and kernel poles in the line-integral form must stay
    clear of Re s = 1/2 (within distance 1/4)."""
    return min(0.8 * (1.0 - q) / (1.0 + q), math.tanh(0.125 * math.log(1.0 / q)))


def _mb_line(alpha, omega, tail=26.0, deg=24):
    """Vertical-line nodes on Re s = 1/2 sized to an integrand decaying
    like e^{-alpha |y|} and oscillating at rate ~omega."""
    if alpha <= 1e-4:
        raise DomainError(
            "line-integral form unusable this close to the positive real axis"
        )
    H = tail / alpha + 4.0
    # panels must resolve both the integrand oscillation and the recurring
    # kernel poles sitting ~1/4 away from the line
    width = min(2.0, 6.0 / (1.0 + omega))
    n_panels = min(int(math.ceil(2.0 * H / width)), 40000)
    return vline_nodes(0.5, H, n_panels, deg=deg)


def glaplace_kernel_matrix(zeta, n, t, q, method=AUTO, n_gamma=64):
    """Weighted kernel matrix A with det(I + A) = the q-Laplace generating
    function of x_n(t) + n under step initial data.

    SUMMED uses the geometric sum over shift order (needs |(1-q) zeta| < 1);
    MELLIN_BARNES uses the equivalent line integral, valid for any zeta off
    the positive real axis."""
    q = _as_q(q)
    if n < 1:
        raise InvalidConfig("n must be >= 1")
    eta = (1.0 - q) * complex(zeta)
    if method == AUTO:
        method = SUMMED if abs(eta) < 0.9 else MELLIN_BARNES
    rho = _gamma_radius(q)
    w, wk = circle_nodes(1.0, rho, n_gamma)
    M = n_gamma
    if eta == 0:
        return np.zeros((M, M), dtype=complex)
    if method == SUMMED:
        if abs(eta) >= 1.0:
            raise DomainError(
                f"summed kernel diverges at |(1-q) zeta| = {abs(eta):.3f} >= 1"
            )
        lam_max = max(8, int(math.ceil(math.log(1e-17) / math.log(abs(eta)))))
        K = np.zeros((M, M), dtype=complex)
        poch = np.ones(M, dtype=complex)  # (w; q)_lam, built factor by factor
        for lam in range(1, lam_max + 1):
            poch = poch * (1.0 - w * q ** (lam - 1))
            amp = eta**lam * np.exp((q**lam - 1.0) * t * w) / poch**n
            K += amp[:, None] / (w[:, None] * q**lam - w[None, :])
        return K * wk[None, :]
    if method != MELLIN_BARNES:
        raise InvalidConfig(f"unknown kernel method {method!r}")
    alpha = math.pi - abs(np.angle(-eta))
    omega = abs(math.log(abs(eta)))
    s, ws = _mb_line(alpha, omega)
    qs = np.exp(s * math.log(q))
    # -pi/sin(pi s) * (-eta)^s with the exponentially large sine factor
    # cancelled against the power analytically, so nothing overflows
    sgn = np.where(s.imag >= 0, 1.0, -1.0)
    expo = sgn * 1j * math.pi * s + s * np.log(-eta)
    den = np.exp(sgn * 2j * math.pi * s) - 1.0
    pref = -math.pi * (sgn * 2j) * np.exp(expo) / den
    base = qpoch_inf_array(w, q)
    P = qpoch_inf_array(np.outer(qs, w).ravel(), q).reshape(len(s), M)
    R = (P / base[None, :]) ** n
    E = np.exp((qs[:, None] - 1.0) * t * w[None, :])
    amp = (ws * pref)[:, None] * R * E
    K = np.empty((M, M), dtype=complex)
    for i in range(M):
        denom = w[i] * qs[:, None] - w[None, :]
        K[i, :] = np.sum(amp[:, i][:, None] / denom, axis=0)
    return K * wk[None, :]


def g_series(n, t, q, zeta, method=AUTO, n_gamma=64, l_max=None) -> FredholmResult:
    """The q-Laplace generating function value det(I + K_zeta)."""
    A = glaplace_kernel_matrix(zeta, n, t, q, method=method, n_gamma=n_gamma)
    return fredholm_series(A, l_max=l_max)


def g_series_from_moments(n, t, q, zeta, k_max=40, rel_tol=1e-12):
    """Independent route to the same generating function: the q-deformed
    exponential series with exact q-moments from the dual generator ODE."""
    from .simulate import qboson_moment_exact

    q = _as_q(q)
    eta = (1.0 - q) * complex(zeta)
    if abs(eta) >= 1.0:
        raise DomainError("series route needs |(1-q) zeta| < 1")
    total = 1.0 + 0.0j
    for k in range(1, k_max + 1):
        mom = qboson_moment_exact((n,) * k, t, q)
        term = mom * complex(zeta) ** k / q_factorial(k, q)
        total += term
        if abs(term) <= rel_tol * abs(total):
            return total
    raise QuadratureNotConverged(f"moment series not converged by k={k_max}")


# ---------------------------------------------------------------------------
# q-Laplace transform pair and pmf recovery


def eq_laplace_transform(pmf, zeta, q):
    """sum_m pmf[m] / ((zeta q^m; q)_infinity) for pmf supported on
    {0, 1, ...}."""
    q = _as_q(q)
    pmf = np.asarray(pmf, dtype=float)
    z = complex(zeta)
    total = 0.0 + 0.0j
    for m, fm in enumerate(pmf):
        if fm == 0.0:
            continue
        total += fm / complex(q_pochhammer(z * q**m, q))
    return total


def eq_laplace_invert(fhat, m, q, n_nodes=64):
    """Recover pmf atom m from its transform: a contour integral of
    (q^{m+1} zeta; q)_infinity fhat(zeta) over a circle enclosing exactly
    the poles q^0 .. q^{-m}, times -q^m.

    The circle is centered at the origin with radius q^{-m-1/2}, which
    encloses the same poles as any contour hugging the segment [1, q^{-m}]
    but keeps quadrature nodes far from all of them."""
    q = _as_q(q)
    if m < 0:
        raise DomainError("atom index must be >= 0")
    radius = q ** (-(m + 0.5))
    z, wz = circle_nodes(0.0, radius, n_nodes)
    pref = qpoch_inf_array(q ** (m + 1) * z, q)
    vals = np.array([fhat(zi) for zi in z], dtype=complex)
    out = -(q**m) * np.sum(wz * pref * vals)
    return float(out.real)


def qtasep_pmf(n, t, q, m_max=12, n_eta=48, n_gamma=48):
    """pmf of x_n(t) + n on {0, ..., m_max}, recovered by inverting the
    q-Laplace generating determinant (line-integral kernel form, which is
    valid on the large inversion circles)."""
    q = _as_q(q)

    def fhat(eta_pt):
        # fhat(eta) = G(eta / (1-q)); the kernel depends on eta only
        res = g_series(n, t, q, eta_pt / (1.0 - q), method=MELLIN_BARNES,
                       n_gamma=n_gamma)
        return res.value

    out = np.empty(m_max + 1)
    for m in range(m_max + 1):
        out[m] = eq_laplace_invert(fhat, m, q, n_nodes=n_eta)
    return out


# ---------------------------------------------------------------------------
# semi-discrete Laplace-transform determinant


def semidiscrete_laplace_det(u, tau, n, l_max=None, n_gamma=48, rho=0.2,
                             deg=16) -> FredholmResult:
    """E[exp(-u e^{n tau - tau^2/2 ...})]-type Laplace determinant for the
    semi-discrete stochastic heat equation: det(I + K_u) with K_u built
    from Gamma-function ratios along Re s = 1/2.

    Validated for 1 <= n <= 4, 0 < tau <= 4, u > 0; values outside that box
    are computed but flagged with a warning."""
    if u <= 0 or tau <= 0 or n < 1:
        raise InvalidConfig("need u > 0, tau > 0, n >= 1")
    if n > 4 or tau > 4:
        warnings.warn(f"(n={n}, tau={tau}) outside the validated box")
    if not rho < 0.25:
        raise InvalidConfig("contour radius must stay below 1/4")
    v, wv = circle_nodes(0.0, rho, n_gamma)
    H = max(0.0, (n / 2.0 - 1.0)) * math.pi / tau + math.sqrt(52.0 / tau) + 6.0
    n_panels = int(math.ceil(2.0 * H / 0.5))
    s, ws = vline_nodes(0.5, H, n_panels, deg=deg)
    lg = np.log(u)
    gv = _scipy_gamma(v)
    gvs = _scipy_gamma(v[None, :] + s[:, None])
    ratio = (gv[None, :] / gvs) ** n
    expo = np.exp(tau * (s[:, None] ** 2 + 2.0 * v[None, :] * s[:, None]) / 2.0
                  + s[:, None] * lg)
    pref = (-math.pi / np.sin(math.pi * s))[:, None]
    amp = ws[:, None] * pref * ratio * expo
    M = n_gamma
    K = np.empty((M, M), dtype=complex)
    for j in range(M):
        denom = v[None, :] + s[:, None] - v[j]
        K[:, j] = np.sum(amp / denom, axis=0)
    A = K * wv[None, :]
    return fredholm_series(A, l_max=l_max)


# ---------------------------------------------------------------------------
# GUE edge law


def airy_kernel(x, y, tol=1e-12):
    """(Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y) with the diagonal limit
    Ai'(x)^2 - x Ai(x)^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax, dax, _, _ = _scipy_airy(x)
    ay, day, _, _ = _scipy_airy(y)
    diff = x - y
    with np.errstate(divide="ignore", invalid="ignore"):
        off = (ax * day - dax * ay) / diff
    diag = dax * day - 0.5 * (x + y) * ax * ay
    return np.where(np.abs(diff) < tol, diag, off)


def fredholm_nystrom(kernel, lo, length, n_nodes=120, sign=-1.0,
                     check_doubling=False, rel_tol=1e-9):
    """det(I + sign * K) on L^2(lo, lo + length) by Gauss-Legendre
    discretization with symmetrized weights."""
    def det_at(m):
        xg, wg = np.polynomial.legendre.leggauss(m)
        x = lo + 0.5 * length * (xg + 1.0)
        w = 0.5 * length * wg
        sq = np.sqrt(w)
        B = sq[:, None] * kernel(x[:, None], x[None, :]) * sq[None, :]
        mu = np.linalg.eigvals(B)
        return complex(np.prod(1.0 + sign * mu)).real

    val = det_at(n_nodes)
    if check_doubling:
        val2 = det_at(2 * n_nodes)
        if abs(val2 - val) > rel_tol * max(1.0, abs(val2)):
            raise QuadratureNotConverged(
                f"node doubling moved the determinant by {abs(val2 - val):.3e}"
            )
        val = val2
    return val


@lru_cache(maxsize=8)
def _painleve_solution(x0=8.0, x_min=-12.0):
    """Backward integration of q'' = x q + 2 q^3 with q ~ Ai at +infinity,
    carrying along I1 = int q^2 and I2 = int (x - s) q^2."""
    a0, da0, _, _ = _scipy_airy(x0)
    u3 = float(da0**2 - x0 * a0**2)  # closed form for int_{x0}^inf Ai^2
    u4, _ = quad(lambda x: (x - x0) * _scipy_airy(x)[0] ** 2, x0, x0 + 30.0,
                 epsabs=1e-16, epsrel=1e-13)

    def rhs(x, y):
        qv, qp, i1, _ = y
        return [qp, x * qv + 2.0 * qv**3, -(qv**2), -i1]

    # DOP853: RK45 drifts onto a pole branch of the Painleve transcendent
    # near x = -8.3; the higher-order method tracks the pole-free solution
    # through the oscillatory region.
    sol = solve_ivp(rhs, (x0, x_min), [a0, da0, u3, u4], method="DOP853",
                    rtol=1e-13, atol=1e-16, dense_output=True)
    if not sol.success:
        raise QuadratureNotConverged("Painleve II integration failed")
    return sol


def tracy_widom_f2(s, method=PAINLEVE, painleve_x0=8.0, length=16.0,
                   n_nodes=120):
    """GUE edge distribution F2(s), by either route."""
    s = float(s)
    if method == PAINLEVE:
        sol = _painleve_solution(painleve_x0)
        if s >= painleve_x0:
            u4, _ = quad(lambda x: (x - s) * _scipy_airy(x)[0] ** 2, s,
                         s + 30.0, epsabs=1e-16, epsrel=1e-13)
            return math.exp(-u4)
        if s < sol.t[-1]:
            raise DomainError(f"s = {s} below the integrated range")
        return math.exp(-float(sol.sol(s)[3]))
    if method == FREDHOLM:
        val = fredholm_nystrom(airy_kernel, s, length, n_nodes=n_nodes,
                               sign=-1.0)
        return clip_probability(val)
    raise InvalidConfig(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# finite-time KPZ crossover distribution


def _panel_gl(lo, hi, width, deg):
    n_panels = max(1, int(math.ceil((hi - lo) / width)))
    xg, wg = np.polynomial.legendre.leggauss(deg)
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    x = (mid[:, None] + half * xg[None, :]).ravel()
    w = (half * wg[None, :] * np.ones((n_panels, 1))).ravel()
    return x, w


def kpz_crossover(r, t, deg=12, rho_width=0.5, eta_width=0.5):
    """Finite-time distribution of the scaled narrow-wedge KPZ height:
    det(I - K) on L^2(0, infinity) where K smears the squared Airy kernel
    with a Fermi factor of slope c = (t/2)^{1/3} centered at r.

    Monotone in r, bounded by [0, 1], and converging to the GUE edge law as
    t grows."""
    if t <= 0:
        raise DomainError("t must be positive")
    c = (t / 2.0) ** (1.0 / 3.0)
    rho_lo = r - 40.0 / c
    rho_hi = 12.0
    rho, wr = _panel_gl(rho_lo, rho_hi, rho_width, deg)
    sigma = expit(c * (rho - r))
    H = max(16.0, c * c / 12.0 - r + 26.0 / c)
    eta, we = _panel_gl(0.0, H, eta_width, deg)
    B = _scipy_airy(rho[:, None] + eta[None, :])[0]
    D = (sigma * wr)[:, None] * B
    K = B.T @ D
    sq = np.sqrt(we)
    Ksym = sq[:, None] * K * sq[None, :]
    mu = np.linalg.eigvalsh(Ksym)
    # the operator is a positive contraction; log-domain product avoids
    # underflow to negative zero
    if np.any(mu >= 1.0):
        val = float(np.prod(1.0 - mu))
    else:
        val = math.exp(float(np.sum(np.log1p(-np.maximum(mu, -1.0)))))
    return clip_probability(val)
