"""Laplace-method estimates and moment Lyapunov exponents.

Provides a reusable steepest-descent estimator for integrals of the form
int_a^b g(x) exp(n f(x)) dx, the moment Lyapunov exponents gamma_k of the
semidiscrete polymer free energy, the almost-sure exponent gamma_as, and an
intermittency report combining them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, InvalidConfig
from .special import polygamma


@dataclass(frozen=True)
class SaddleReport:
    """One Laplace-method comparison at a fixed large parameter n."""

    n: float
    critical_point: float
    f_at_c: float
    f2_at_c: float
    approx_value: float
    quadrature_value: float
    ratio: float


@dataclass(frozen=True)
class LyapunovProfile:
    """Moment Lyapunov exponents and intermittency diagnostics."""

    nu: float
    gamma_as: float
    gamma_k: tuple
    s_of_nu: float
    d_of_nu: float
    weak_ordering: bool
    strict_ordering: bool
    alpha_windows: tuple
    superlinear_coefficient: float


def _find_interior_max(f, a, b, n_grid=512):
    """Locate the unique interior maximum of f on (a, b).

    A grid prescan rejects multimodal profiles; golden-section narrows the
    bracket and a derivative-based Newton step polishes the result.
    """
    xs = np.linspace(a, b, n_grid)
    vals = np.array([f(x) for x in xs])
    i = int(np.argmax(vals))
    if i == 0 or i == n_grid - 1:
        raise DomainError("no interior maximum on the given interval")
    # Reject multimodality: every strict local max other than the global one.
    interior = vals[1:-1]
    local = (interior > vals[:-2]) & (interior > vals[2:])
    peaks = np.nonzero(local)[0] + 1
    if len(peaks) > 1:
        spread = xs[peaks].max() - xs[peaks].min()
        if spread > 4.0 * (b - a) / n_grid:
            raise DomainError("multiple interior maxima detected")
    lo, hi = xs[i - 1], xs[i + 1]
    res = optimize.minimize_scalar(lambda x: -f(x), bracket=None,
                                   bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    c = float(res.x)
    h = max(1e-6, 1e-6 * abs(c))
    for _ in range(8):
        d1 = (f(c + h) - f(c - h)) / (2.0 * h)
        d2 = (f(c + h) - 2.0 * f(c) + f(c - h)) / (h * h)
        if d2 >= 0.0 or not math.isfinite(d1):
            break
        step = d1 / d2
        if abs(step) > (b - a) / 8.0:
            break
        c_new = c - step
        if c_new <= a or c_new >= b:
            break
        c = c_new
        if abs(step) < 1e-13 * max(1.0, abs(c)):
            break
    return c


def laplace_estimate(f, g, a, b, n_values):
    """Compare the saddle-point estimate of int g e^{n f} with quadrature.

    The estimate is sqrt(2 pi / (n |f''(c)|)) g(c) e^{n f(c)} at the unique
    interior maximum c of f.  Returns one SaddleReport per entry of n_values.
    """
    if not b > a:
        raise InvalidConfig("interval must satisfy a < b")
    c = _find_interior_max(f, a, b)
    h = max(1e-5, 1e-5 * abs(c))
    f2 = (f(c + h) - 2.0 * f(c) + f(c - h)) / (h * h)
    if f2 >= 0.0:
        raise DomainError("second derivative at the critical point is not negative")
    fc = f(c)
    reports = []
    for n in n_values:
        n = float(n)
        approx = math.sqrt(2.0 * math.pi / (n * (-f2))) * g(c) * math.exp(n * fc)
        # Integrate g e^{n(f - f(c))} to keep the integrand O(1).
        quad, _ = integrate.quad(
            lambda x: g(x) * math.exp(n * (f(x) - fc)), a, b,
            points=[c], limit=400)
        quadrature = quad * math.exp(n * fc)
        ratio = approx / quadrature
        reports.append(SaddleReport(n=n, critical_point=c, f_at_c=fc,
                                    f2_at_c=f2, approx_value=approx,
                                    quadrature_value=quadrature, ratio=ratio))
    return reports


def stirling_estimate(n):
    """n! via the Laplace method on int_0^inf x^n e^{-x} dx.

    Substituting x = n y gives n^{n+1} int y^n e^{-n y} dy with phase
    log y - y maximized at y = 1, hence n^n e^{-n} sqrt(2 pi n).
    """
    n = float(n)
    report = laplace_estimate(lambda y: math.log(y) - y, lambda y: 1.0,
                              1e-6, 12.0, [n])[0]
    return n ** (n + 1.0) * report.approx_value


def _h_k(z, nu, k):
    i = np.arange(k)
    return k * (k - 3) / 2.0 + k * z - nu * float(np.sum(np.log(z + i)))


def _h_k_prime(z, nu, k):
    i = np.arange(k)
    return k - nu * float(np.sum(1.0 / (z + i)))


def _h_k_second(z, nu, k):
    i = np.arange(k)
    return nu * float(np.sum(1.0 / (z + i) ** 2))


def gamma_k_critical_point(nu, k):
    """Root of H_k'(z) = k - nu sum_{i<k} 1/(z+i) on (0, inf).

    H_k' is strictly increasing from -inf to k, so the root is unique;
    bracketing plus Newton polishing is unconditionally safe.
    """
    nu = float(nu)
    if nu <= 0.0:
        raise DomainError("nu must be positive")
    if not 1 <= k <= 20:
        raise DomainError("k must lie in 1..20")
    z_hi = max(1.0, nu)
    while _h_k_prime(z_hi, nu, k) <= 0.0:
        z_hi *= 2.0
    z = optimize.brentq(_h_k_prime, 1e-12, z_hi, args=(nu, k),
                        xtol=1e-15, rtol=8.9e-16)
    for _ in range(4):
        step = _h_k_prime(z, nu, k) / _h_k_second(z, nu, k)
        z_new = z - step
        if z_new <= 0.0:
            break
        z = z_new
    return float(z)


def gamma_k(nu, k):
    """Moment Lyapunov exponent gamma_k(nu) = H_k at its critical point."""
    z = gamma_k_critical_point(nu, k)
    return float(_h_k(z, nu, k))


def gamma_as(nu):
    """Almost-sure exponent and the associated scale constants.

    Returns (gamma_as, s, d) where s is the unique root of nu psi'(s) = 1
    with psi the digamma function, gamma_as = -3/2 + s - nu psi(s), and
    d = (-nu psi''(s) / 2)^{1/3}.
    """
    nu = float(nu)
    if nu <= 0.0:
        raise DomainError("nu must be positive")

    def slope(s):
        return nu * polygamma(s, 1) - 1.0

    s_hi = max(1.0, nu)
    while slope(s_hi) >= 0.0:
        s_hi *= 2.0
    s_lo = min(0.5, nu)
    while slope(s_lo) <= 0.0:
        s_lo *= 0.5
    s = optimize.brentq(slope, s_lo, s_hi, xtol=1e-15, rtol=8.9e-16)
    value = -1.5 + s - nu * polygamma(s, 0)
    d = (-nu * polygamma(s, 2) / 2.0) ** (1.0 / 3.0)
    return float(value), float(s), float(d)


def intermittency_report(nu, k_max=6):
    """Lyapunov profile with ordering and tail-window diagnostics.

    Checks the chain gamma_as <= gamma_1 <= gamma_2/2 <= ... and, for each
    adjacent pair, that the window gamma_k/k < alpha < gamma_{k+1}/(k+1)
    is nonempty.  The superlinear coefficient is the leading coefficient of
    a fit of log gamma_k against k^2 restricted to positive gamma_k.
    """
    if not 1 <= k_max <= 6:
        raise DomainError("k_max must lie in 1..6")
    gas, s, d = gamma_as(nu)
    gk = tuple(gamma_k(nu, k) for k in range(1, k_max + 1))
    normalized = [gk[k - 1] / k for k in range(1, k_max + 1)]
    chain = [gas] + normalized
    weak = all(chain[i] <= chain[i + 1] + 1e-12 for i in range(len(chain) - 1))
    strict = all(chain[i] < chain[i + 1] - 1e-6 for i in range(len(chain) - 1))
    windows = tuple(normalized[i + 1] - normalized[i]
                    for i in range(len(normalized) - 1))
    pos = [(k, g) for k, g in zip(range(1, k_max + 1), gk) if g > 0.0]
    if len(pos) >= 2:
        ks = np.array([k for k, _ in pos], dtype=float)
        logs = np.array([math.log(g) for _, g in pos])
        coeff = float(np.polyfit(ks ** 2, logs, 1)[0])
    else:
        coeff = float("nan")
    return LyapunovProfile(nu=float(nu), gamma_as=gas, gamma_k=gk,
                           s_of_nu=s, d_of_nu=d, weak_ordering=weak,
                           strict_ordering=strict, alpha_windows=windows,
                           superlinear_coefficient=coeff)


def lyapunov_profile_csv(nu_values, k_max=6):
    """CSV table of exponents over a grid of nu values.

    Columns: nu, k, gamma_k, gamma_k_over_k, gamma_as, s, d.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["nu", "k", "gamma_k", "gamma_k_over_k",
                     "gamma_as", "s", "d"])
    for nu in nu_values:
        profile = intermittency_report(nu, k_max)
        for k in range(1, k_max + 1):
            g = profile.gamma_k[k - 1]
            writer.writerow([repr(float(nu)), k, repr(g), repr(g / k),
                             repr(profile.gamma_as), repr(profile.s_of_nu),
                             repr(profile.d_of_nu)])
    return buf.getvalue()


def second_moment_growth_rate(tau_values=(36.0, 40.0, 44.0), n_nodes=384):
    """Exponential growth rate of the k=2 moment along the diagonal n = tau.

    Estimates (d/dtau) log E[z(tau, tau)^2] by a symmetric difference of the
    contour values at the ends of tau_values, with a 1/tau polynomial
    correction from the central-limit prefactor, and returns the estimate
    together with the predicted rate H_2 at the k=2 critical point (nu = 1).
    """
    from .contours import she_k2_terms

    taus = sorted(float(t) for t in tau_values)
    lo, hi = taus[0], taus[-1]
    t_lo = she_k2_terms(lo, int(round(lo)), n_nodes=n_nodes)[2]
    t_hi = she_k2_terms(hi, int(round(hi)), n_nodes=n_nodes)[2]
    rate = (math.log(abs(t_hi)) - math.log(abs(t_lo))) / (hi - lo)
    rate += 0.5 * math.log(hi / lo) / (hi - lo)
    predicted = gamma_k(1.0, 2)
    return float(rate), float(predicted)


def airy_decay_estimate(x, order=1):
    """Large-x estimate of Ai(x), x > 0.

    order=0 is the saddle-point leading term e^{-2x^{3/2}/3}/(2 sqrt(pi)
    x^{1/4}); order=1 multiplies in the first correction 1 - 5/(72 zeta)
    with zeta = 2 x^{3/2}/3.
    """
    x = float(x)
    if x <= 0.0:
        raise DomainError("requires x > 0")
    zeta = 2.0 / 3.0 * x ** 1.5
    lead = math.exp(-zeta) / (2.0 * math.sqrt(math.pi) * x ** 0.25)
    if order == 0:
        return lead
    return lead * (1.0 - 5.0 / (72.0 * zeta))


def airy_oscillation_estimate(x, order=1):
    """Large-x estimate of Ai(-x), x > 0.

    order=0 is the leading term cos(pi/4 - zeta)/(sqrt(pi) x^{1/4}); the
    leading term alone has relative error amplified near zeros of the
    phase, so order=1 adds the quadrature correction sin(zeta - pi/4) *
    5/(72 zeta), which keeps the ratio to the true value within 1% at
    moderate x.
    """
    x = float(x)
    if x <= 0.0:
        raise DomainError("requires x > 0")
    zeta = 2.0 / 3.0 * x ** 1.5
    base = math.cos(zeta - math.pi / 4.0)
    if order != 0:
        base += math.sin(zeta - math.pi / 4.0) * 5.0 / (72.0 * zeta)
    return base / (math.sqrt(math.pi) * x ** 0.25)
