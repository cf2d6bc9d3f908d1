"""Wiener-chaos variance numerics for the stochastic heat equation.

The k-th chaos coefficient of the multiplicative-noise heat equation started
from a delta has second moment

    E[I_k^2(t, x)] = t^{k/2} (4 pi)^{-k/2} Gamma(1/2)^k / Gamma(k/2) * p(t,x)^2

for k >= 1 (and p(t,x)^2 for k = 0), with p the standard heat kernel.  This
module provides that closed form, Monte Carlo and quadrature cross-checks of
the underlying simplex integral, Dirichlet integrals, and partial sums of the
second-moment series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special as sps

from .errors import DomainError, TruncationError
from .simulate import MCEstimate, RngStream, _estimate
from .special import heat_kernel

FORMULA = "FORMULA"
MC = "MC"
SIMPLEX_MC = "SIMPLEX_MC"
QUADRATURE = "QUADRATURE"

_MC_MAX_K = 8


@dataclass(frozen=True)
class ChaosVariance:
    """Second moment of one chaos coefficient."""

    k: int
    t: float
    x: float
    value: float
    stderr: float = 0.0


def _chaos_prefactor(k, t):
    """t^{k/2} (4 pi)^{-k/2} Gamma(1/2)^k / Gamma(k/2)."""
    if k == 0:
        return 1.0
    return (t / (4.0 * math.pi)) ** (k / 2.0) * math.pi ** (k / 2.0) / sps.gamma(k / 2.0)


def dirichlet_integral(alpha, mode=FORMULA, n_samples=1_000_000, rng=None):
    """Integral of prod x_i^{alpha_i - 1} over the probability simplex.

    FORMULA returns prod Gamma(alpha_i) / Gamma(sum alpha_i).  MC samples the
    simplex uniformly via sorted uniforms and returns an MCEstimate; the
    uniform density on the k-simplex is (k-1)!, hence the 1/(k-1)! factor.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size < 1:
        raise DomainError("alpha must be a nonempty vector")
    if np.any(alpha <= 0.0):
        raise DomainError("alpha entries must be positive")
    k = alpha.size
    if mode == FORMULA:
        return float(np.prod(sps.gamma(alpha)) / sps.gamma(alpha.sum()))
    if mode != MC:
        raise DomainError(f"unknown mode {mode!r}")
    if rng is None:
        rng = RngStream(0)
    gen = rng.generator()
    if k == 1:
        return MCEstimate(mean=1.0, stderr=0.0, n_samples=n_samples, seed=rng.seed)
    u = np.sort(gen.random((n_samples, k - 1)), axis=1)
    gaps = np.diff(np.concatenate(
        [np.zeros((n_samples, 1)), u, np.ones((n_samples, 1))], axis=1), axis=1)
    vals = np.prod(gaps ** (alpha - 1.0), axis=1) / math.factorial(k - 1)
    return _estimate(vals, rng)


def simplex_halfpower_integral(k, mode=FORMULA, n_samples=1_000_000, rng=None):
    """Integral of prod_j (s_j - s_{j-1})^{-1/2} over 0 < s_1 < ... < s_k < 1
    with s_k pinned by the outermost time; equals Gamma(1/2)^k / Gamma(k/2)
    by the Dirichlet formula in the k gap variables.

    The k-th gap is 1 - s_{k-1}; only k-1 coordinates are free, so the MC
    route samples k-1 sorted uniforms and weights by 1/(k-1)!.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    if mode == FORMULA:
        return float(math.pi ** (k / 2.0) / sps.gamma(k / 2.0))
    if mode != SIMPLEX_MC:
        raise DomainError(f"unknown mode {mode!r}")
    if k > _MC_MAX_K:
        raise DomainError(f"MC route capped at k = {_MC_MAX_K}")
    if rng is None:
        rng = RngStream(0)
    gen = rng.generator()
    if k == 1:
        return MCEstimate(mean=1.0, stderr=0.0, n_samples=n_samples, seed=rng.seed)
    u = np.sort(gen.random((n_samples, k - 1)), axis=1)
    gaps = np.diff(np.concatenate(
        [np.zeros((n_samples, 1)), u, np.ones((n_samples, 1))], axis=1), axis=1)
    vals = np.prod(gaps ** (-0.5), axis=1) / math.factorial(k - 1)
    return _estimate(vals, rng)


def simplex_halfpower_quadrature(k):
    """Iterated-quadrature route for the k = 2 simplex integral.

    The inner heat-kernel reduction collapses to int_0^1 s^{-1/2}(1-s)^{-1/2}
    ds, evaluated with the algebraic-singularity weight.
    """
    if k != 2:
        raise DomainError("iterated quadrature implemented for k = 2 only")
    val, _ = integrate.quad(lambda s: 1.0, 0.0, 1.0,
                            weight="alg", wvar=(-0.5, -0.5))
    return float(val)


def chaos_variance(k, t, x, mode=FORMULA, n_samples=1_000_000, rng=None):
    """Second moment of the k-th chaos coefficient at (t, x)."""
    if k < 0:
        raise DomainError("k must be >= 0")
    t = float(t)
    if t <= 0.0:
        raise DomainError("t must be positive")
    p2 = heat_kernel(t, x) ** 2
    if k == 0 or mode == FORMULA:
        value = _chaos_prefactor(k, t) * p2
        return ChaosVariance(k=k, t=t, x=float(x), value=float(value))
    if mode != SIMPLEX_MC:
        raise DomainError(f"unknown mode {mode!r}")
    est = simplex_halfpower_integral(k, SIMPLEX_MC, n_samples=n_samples, rng=rng)
    scale = (t / (4.0 * math.pi)) ** (k / 2.0) * p2
    return ChaosVariance(k=k, t=t, x=float(x), value=float(scale * est.mean),
                         stderr=float(scale * est.stderr))


def chaos_scaling_slope(k, t, x, eps_values=(1e-4, 1e-3, 1e-2, 1e-1)):
    """Fitted slope of log E[I_k^2(eps t, eps^{1/2} x)] against log eps.

    The closed form gives slope k/2 - 1 exactly: the prefactor scales like
    eps^{k/2} while p(eps t, eps^{1/2} x)^2 = eps^{-1} p(t, x)^2.
    """
    logs = []
    for eps in eps_values:
        v = chaos_variance(k, eps * t, math.sqrt(eps) * x).value
        logs.append(math.log(v))
    slope = float(np.polyfit(np.log(np.asarray(eps_values, dtype=float)),
                             np.asarray(logs), 1)[0])
    return slope


def she_second_moment(t, x, K=40):
    """Partial sum over k <= K of the chaos variances, and its ratio to p^2.

    Raises TruncationError when the Gamma(k/2) tail bound at K exceeds
    1e-12 relative to the partial sum.
    """
    t = float(t)
    if t <= 0.0:
        raise DomainError("t must be positive")
    p2 = heat_kernel(t, x) ** 2
    terms = np.array([_chaos_prefactor(k, t) for k in range(K + 1)])
    total = float(terms.sum()) * p2
    # Ratio test: successive term quotient ~ sqrt(pi t / 4) / sqrt(K/2).
    q = math.sqrt(math.pi * t / 4.0) / math.sqrt(max(K, 1) / 2.0)
    if q >= 0.9:
        raise TruncationError(f"K = {K} too small for t = {t}")
    tail = terms[-1] * q / (1.0 - q)
    if tail > 1e-12 * terms.sum():
        raise TruncationError(
            f"tail bound {tail * p2:.3e} exceeds 1e-12 of the partial sum")
    return total, total / p2
