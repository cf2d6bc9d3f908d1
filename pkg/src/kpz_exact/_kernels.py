"""Scalar hot-loop kernels for the particle-system simulators.

All kernels are written against a small counter-based RNG (splitmix64)
so that a (seed, stream, sample) triple fully determines a trajectory.
With numba available they are compiled; otherwise they run interpreted
and the Monte Carlo drivers in ``simulate`` switch to vectorized numpy
implementations of the same recursions.
"""

import numpy as np

from ._accel import njit

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True)
def rng_mix(x):
    """splitmix64 output function."""
    z = (x ^ (x >> U64(30))) * _M1
    z = (z ^ (z >> U64(27))) * _M2
    return z ^ (z >> U64(31))


@njit(cache=True)
def rng_init(seed, stream, sample):
    """Derive the per-sample RNG state from (seed, stream, sample)."""
    s = rng_mix(seed + _GAMMA * (stream + U64(1)))
    return rng_mix(s + _GAMMA * (sample + U64(1)))


@njit(cache=True)
def rng_next(state):
    """Advance the state; return (new_state, uniform in (0,1))."""
    state = state + _GAMMA
    z = rng_mix(state)
    u = (float(z >> U64(11)) + 0.5) * _INV53
    return state, u


@njit(cache=True)
def qtasep_run(qpow, x, t0, t_end, state):
    """Run q-TASEP in place from t0 to t_end; returns the final RNG state.

    qpow[g] must equal q**g (clamped beyond the table); the first particle
    has an infinite gap and jumps at rate exactly 1."""
    n = x.shape[0]
    pmax = qpow.shape[0] - 1
    rates = np.empty(n)
    t = t0
    while True:
        total = 0.0
        for i in range(n):
            if i == 0:
                r = 1.0
            else:
                gap = x[i - 1] - x[i] - 1
                if gap > pmax:
                    gap = pmax
                r = 1.0 - qpow[gap]
            rates[i] = r
            total += r
        state, u1 = rng_next(state)
        dt = -np.log(u1) / total
        if t + dt > t_end:
            return state
        t = t + dt
        state, u2 = rng_next(state)
        target = u2 * total
        acc = 0.0
        for i in range(n):
            acc += rates[i]
            if target < acc:
                x[i] += 1
                break
    return state


@njit(cache=True)
def qtasep_mc_positions(qpow, n_particles, t_end, seed, stream, n_samples):
    """Final position matrix of n_samples independent step-data runs."""
    out = np.empty((n_samples, n_particles), dtype=np.int64)
    x = np.empty(n_particles, dtype=np.int64)
    for j in range(n_samples):
        for i in range(n_particles):
            x[i] = -(i + 1)
        state = rng_init(seed, stream, U64(j))
        qtasep_run(qpow, x, 0.0, t_end, state)
        for i in range(n_particles):
            out[j, i] = x[i]
    return out


@njit(cache=True)
def qboson_run(qpow, y, source, t0, t_end, state):
    """Run the q-Boson process in place (sites 0..N); returns final state.

    A particle leaves site i >= 1 at rate 1-q^{y_i} and lands on i-1.
    With source=True an external unit-rate source feeds the top site
    (the image of the infinite q-TASEP virtual gap)."""
    n_sites = y.shape[0]
    pmax = qpow.shape[0] - 1
    rates = np.empty(n_sites)
    t = t0
    while True:
        total = 1.0 if source else 0.0
        for i in range(1, n_sites):
            occ = y[i]
            if occ > pmax:
                occ = pmax
            r = 1.0 - qpow[occ]
            rates[i] = r
            total += r
        if total <= 0.0:
            return state
        state, u1 = rng_next(state)
        dt = -np.log(u1) / total
        if t + dt > t_end:
            return state
        t = t + dt
        state, u2 = rng_next(state)
        target = u2 * total
        if source and target < 1.0:
            y[n_sites - 1] += 1
            continue
        acc = 1.0 if source else 0.0
        for i in range(1, n_sites):
            acc += rates[i]
            if target < acc:
                y[i] -= 1
                y[i - 1] += 1
                break
    return state


@njit(cache=True)
def qboson_mc_occupations(qpow, y0, source, t_end, seed, stream, n_samples):
    """Final occupation matrix of n_samples independent q-Boson runs."""
    n_sites = y0.shape[0]
    out = np.empty((n_samples, n_sites), dtype=np.int64)
    y = np.empty(n_sites, dtype=np.int64)
    for j in range(n_samples):
        for i in range(n_sites):
            y[i] = y0[i]
        state = rng_init(seed, stream, U64(j))
        qboson_run(qpow, y, source, 0.0, t_end, state)
        for i in range(n_sites):
            out[j, i] = y[i]
    return out
