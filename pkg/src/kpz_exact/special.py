"""q-series and classical special functions used across the package.

q-Pochhammer symbols, q-factorials, the two q-exponentials, complex gamma,
the polygamma family, the Airy function and the heat kernel.  Infinite
q-products truncate at |q^m a| < abs_tol and carry a proven tail bound in
the returned error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .errors import DomainError, TruncationError

INFINITY = -1  # sentinel order for infinite q-products

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QParam:
    """Asymmetry parameter q, restricted to the open interval (0, 1)."""

    q: float

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise DomainError(f"q must lie in (0,1), got {self.q}")


def _as_q(q) -> float:
    if isinstance(q, QParam):
        return q.q
    q = float(q)
    if not (0.0 < q < 1.0):
        raise DomainError(f"q must lie in (0,1), got {q}")
    return q


@dataclass(frozen=True)
class TruncationPolicy:
    """Controls truncation of infinite products and series."""

    abs_tol: float = 1e-15
    max_terms: int = 10000

    def __post_init__(self):
        if self.abs_tol < 2 * _EPS:
            raise DomainError("abs_tol must be at least 2 machine epsilons")
        if self.max_terms < 8:
            raise DomainError("max_terms must be at least 8")


DEFAULT_POLICY = TruncationPolicy()


class SeriesValue(complex):
    """A complex value carrying a truncation-error estimate.

    Behaves as a plain complex number in arithmetic; the ``error``
    attribute records the proven tail bound of the truncation."""

    error: float

    def __new__(cls, value, error=0.0):
        obj = super().__new__(cls, value)
        obj.error = float(error)
        return obj


def q_pochhammer(a, q, n=INFINITY, policy=DEFAULT_POLICY):
    """(a;q)_n = (1-a)(1-qa)...(1-q^{n-1}a); n = INFINITY for the full product.

    The infinite product truncates once |q^m a| < abs_tol; the logarithmic
    tail bound sum_{j>=m} |q^j a| / (1-|q^j a|) is folded into the result's
    error estimate."""
    qv = _as_q(q)
    a = complex(a)
    if n == INFINITY:
        prod = 1.0 + 0.0j
        fac = a
        for m in range(policy.max_terms):
            if abs(fac) < policy.abs_tol:
                # |log of the remaining product| <= sum |q^j a|/(1-|q^j a|)
                tail = abs(fac) / ((1.0 - qv) * (1.0 - abs(fac)))
                err = abs(prod) * math.expm1(tail)
                return SeriesValue(prod, err)
            prod *= 1.0 - fac
            fac *= qv
        raise TruncationError(
            f"q-Pochhammer tail bound not met within {policy.max_terms} factors"
        )
    n = int(n)
    if n < 0:
        raise DomainError("n must be a nonnegative integer or INFINITY")
    prod = 1.0 + 0.0j
    fac = a
    for _ in range(n):
        prod *= 1.0 - fac
        fac *= qv
    return SeriesValue(prod, 0.0)


def qpoch_inf_array(a, q, abs_tol=1e-15):
    """Vectorized (a;q)_infinity over a complex ndarray ``a``.

    Multiplies factors until |q^m a| < abs_tol uniformly over the array."""
    qv = _as_q(q)
    a = np.asarray(a, dtype=complex)
    amax = float(np.max(np.abs(a))) if a.size else 0.0
    if amax == 0.0:
        return np.ones_like(a)
    m = max(1, int(math.ceil(math.log(abs_tol / amax) / math.log(qv))) + 1)
    prod = np.ones_like(a)
    fac = a.copy()
    for _ in range(m):
        prod *= 1.0 - fac
        fac *= qv
    return prod


def q_factorial(k, q):
    """k_q! = (q;q)_k / (1-q)^k, computed as prod_{j=1..k} (1-q^j)/(1-q)."""
    qv = _as_q(q)
    k = int(k)
    if k < 0:
        raise DomainError("k must be nonnegative")
    out = 1.0
    num = 1.0  # running q^j
    for _ in range(k):
        num *= qv
        out *= (1.0 - num) / (1.0 - qv)
    return out


LITTLE_E = "LITTLE_E"
BIG_E = "BIG_E"


def q_exponential(x, q, variant=LITTLE_E, policy=DEFAULT_POLICY):
    """The q-exponentials e_q(x) = 1/((1-q)x;q)_inf and E_q(x) = (-(1-q)x;q)_inf."""
    qv = _as_q(q)
    x = complex(x)
    if variant == LITTLE_E:
        denom = q_pochhammer((1.0 - qv) * x, qv, INFINITY, policy)
        if abs(complex(denom)) < 1e-13:
            raise DomainError("e_q evaluated on its pole set (1-q)x = q^{-m}")
        val = 1.0 / complex(denom)
        return SeriesValue(val, abs(val) * denom.error / abs(complex(denom)))
    if variant == BIG_E:
        return q_pochhammer(-(1.0 - qv) * x, qv, INFINITY, policy)
    raise DomainError(f"unknown q-exponential variant {variant!r}")


def complex_gamma(z):
    """Gamma function on the complex plane (poles at nonpositive integers)."""
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == int(z.real):
        raise DomainError(f"gamma pole at z={z}")
    val = complex(sp.gamma(z))
    if not np.isfinite(val.real) or not np.isfinite(val.imag):
        raise DomainError(f"gamma not finite at z={z}")
    return val


def polygamma(s, order=0):
    """psi, psi' or psi'' at real s > 0."""
    s = float(s)
    if s <= 0.0:
        raise DomainError("polygamma requires s > 0")
    if order == 0:
        return float(sp.digamma(s))
    if order in (1, 2):
        return float(sp.polygamma(order, s))
    raise DomainError("order must be 0, 1 or 2")


def airy(x, derivative=False):
    """Ai(x), or Ai'(x) when derivative=True, for |x| <= 200."""
    x = float(x)
    if abs(x) > 200.0:
        raise DomainError("airy validated only for |x| <= 200")
    ai, aip, _, _ = sp.airy(x)
    return float(aip if derivative else ai)


def heat_kernel(t, x):
    """Gaussian heat kernel p(t,x) = exp(-x^2/2t)/sqrt(2 pi t)."""
    t = float(t)
    if t <= 0.0:
        raise DomainError("heat kernel requires t > 0")
    x = float(x)
    return math.exp(-x * x / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)
