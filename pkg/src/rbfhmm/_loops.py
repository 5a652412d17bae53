"""Hot inner loops of the blocked sampler.

The backward recursion and the forward state sampler are sequential in time,
so they run as explicit loops; numba compiles them when available and a
numpy implementation of the same arithmetic serves as fallback.  Both paths
draw exactly one uniform per time step from the supplied generator.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _backward_jit(ll, trans):
    n, n_states = ll.shape
    logm = np.zeros((n, n_states))
    log_norm = np.zeros(n)
    v = np.empty(n_states)
    for t in range(n - 2, -1, -1):
        vmax = -np.inf
        for q in range(n_states):
            v[q] = ll[t + 1, q] + logm[t + 1, q]
            if v[q] > vmax:
                vmax = v[q]
        shift = -np.inf
        for k in range(n_states):
            acc = 0.0
            for q in range(n_states):
                acc += trans[k, q] * np.exp(v[q] - vmax)
            raw = np.log(acc) + vmax
            logm[t, k] = raw
            if raw > shift:
                shift = raw
        if not np.isfinite(shift):
            return logm, log_norm, t
        for k in range(n_states):
            logm[t, k] -= shift
        log_norm[t] = log_norm[t + 1] + shift
    return logm, log_norm, -1


def _backward_numpy(ll, trans):
    n, n_states = ll.shape
    logm = np.zeros((n, n_states))
    log_norm = np.zeros(n)
    with np.errstate(divide="ignore"):
        for t in range(n - 2, -1, -1):
            v = ll[t + 1] + logm[t + 1]
            vmax = v.max()
            raw = np.log(trans @ np.exp(v - vmax)) + vmax
            shift = raw.max()
            if not np.isfinite(shift):
                return logm, log_norm, t
            logm[t] = raw - shift
            log_norm[t] = log_norm[t + 1] + shift
    return logm, log_norm, -1


@njit(cache=True)
def _forward_jit(score, log_trans, log_init, rng):
    n, n_states = score.shape
    z = np.empty(n, dtype=np.int64)
    p = np.empty(n_states)
    for t in range(n):
        vmax = -np.inf
        for k in range(n_states):
            base = log_init[k] if t == 0 else log_trans[z[t - 1], k]
            p[k] = base + score[t, k]
            if p[k] > vmax:
                vmax = p[k]
        if not np.isfinite(vmax):
            return z, t
        total = 0.0
        for k in range(n_states):
            p[k] = np.exp(p[k] - vmax)
            total += p[k]
        u = rng.random() * total
        acc = 0.0
        pick = n_states - 1
        for k in range(n_states):
            acc += p[k]
            if u < acc:
                pick = k
                break
        z[t] = pick
    return z, -1


def _forward_numpy(score, log_trans, log_init, rng):
    n, n_states = score.shape
    z = np.empty(n, dtype=np.int64)
    for t in range(n):
        base = log_init if t == 0 else log_trans[z[t - 1]]
        logp = base + score[t]
        m = logp.max()
        if not np.isfinite(m):
            return z, t
        p = np.exp(logp - m)
        c = np.cumsum(p)
        u = rng.random() * c[-1]
        z[t] = min(int(np.searchsorted(c, u, side="right")), n_states - 1)
    return z, -1


backward_pass = _backward_jit if HAVE_NUMBA else _backward_numpy
forward_pass = _forward_jit if HAVE_NUMBA else _forward_numpy
