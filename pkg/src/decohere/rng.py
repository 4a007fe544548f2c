"""Counter-based random numbers keyed on ``(seed, trial_index)``.

Every variate is a pure function of the 64-bit seed, the 64-bit trial index,
a stream word (which quantity is being drawn) and a position word (attempt
number inside a rejection loop). Nothing is carried between calls, so the
numbers assigned to a trial do not depend on batch size, ordering or the
number of workers.

The block cipher is Philox4x32-10 (Salmon et al., SC'11), evaluated
vectorised over numpy ``uint64`` lanes holding 32-bit words.
"""

from __future__ import annotations

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_ROUNDS = 10

# stream words; coordinate index goes in the low 16 bits
STREAM_CATEGORICAL = 1 << 16
STREAM_PHASE = 2 << 16
STREAM_GAMMA_NORMAL = 3 << 16
STREAM_GAMMA_ACCEPT = 4 << 16


def philox4x32(counter, key):
    """Philox4x32-10 block function.

    ``counter`` is a sequence of four arrays (or ints) of 32-bit words and
    ``key`` a pair of 32-bit words; they broadcast against each other.
    Returns four ``uint64`` arrays holding the 32-bit output words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for r in range(_ROUNDS):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> np.uint64(32)) ^ c1 ^ np.uint64(k0),
            p1 & _MASK32,
            (p0 >> np.uint64(32)) ^ c3 ^ np.uint64(k1),
            p0 & _MASK32,
        )
    return c0, c1, c2, c3


def _to_open_unit(hi, lo):
    # 53 random bits, shifted half an ulp off zero so log() is always finite
    a = (hi >> np.uint64(5)).astype(np.float64)
    b = (lo >> np.uint64(6)).astype(np.float64)
    return (a * 67108864.0 + b + 0.5) / 9007199254740992.0


def uniform_pair(seed: int, trial, stream, position=0):
    """Two independent uniforms on the open interval (0, 1).

    ``trial``, ``stream`` and ``position`` broadcast; ``seed`` is a single
    unsigned 64-bit integer.
    """
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    trial = np.asarray(trial, dtype=np.uint64)
    key = (seed & 0xFFFFFFFF, seed >> 32)
    w0, w1, w2, w3 = philox4x32(
        (position, stream, trial & _MASK32, trial >> np.uint64(32)), key
    )
    return _to_open_unit(w0, w1), _to_open_unit(w2, w3)


def uniform(seed: int, trial, stream, position=0):
    return uniform_pair(seed, trial, stream, position)[0]


def standard_normal(seed: int, trial, stream, position=0):
    u1, u2 = uniform_pair(seed, trial, stream, position)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def log_standard_gamma(shape, seed: int, trials):
    """Logarithms of unit-scale gamma variates, one row per trial.

    ``shape`` holds one positive shape parameter per coordinate. Uses the
    Marsaglia-Tsang squeeze for shape >= 1 and the ``G(a+1) * U**(1/a)``
    boost for shape < 1; the boost is applied in log space so very small
    shapes do not underflow to zero.
    """
    shape = np.asarray(shape, dtype=np.float64)
    if np.any(shape <= 0) or not np.all(np.isfinite(shape)):
        raise ValueError("gamma shape parameters must be finite and positive")
    trials = np.asarray(trials, dtype=np.uint64)
    n_trials, n = trials.shape[0], shape.shape[0]

    boosted = shape < 1.0
    a = np.where(boosted, shape + 1.0, shape)
    d = a - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)

    out = np.empty((n_trials, n), dtype=np.float64)
    tt, cc = np.meshgrid(np.arange(n_trials), np.arange(n), indexing="ij")
    pend_t, pend_c = tt.ravel(), cc.ravel()
    attempt = 0
    while pend_t.size:
        t = trials[pend_t]
        z = standard_normal(seed, t, STREAM_GAMMA_NORMAL + pend_c, attempt)
        u_acc, u_boost = uniform_pair(seed, t, STREAM_GAMMA_ACCEPT + pend_c, attempt)
        dk, ck = d[pend_c], c[pend_c]
        v = 1.0 + ck * z
        ok = v > 0.0
        v3 = np.where(ok, v * v * v, 1.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            ok &= np.log(u_acc) < 0.5 * z * z + dk - dk * v3 + dk * np.log(v3)
        if np.any(ok):
            lg = np.log(dk[ok] * v3[ok])
            sk = shape[pend_c[ok]]
            lg = np.where(boosted[pend_c[ok]], lg + np.log(u_boost[ok]) / sk, lg)
            out[pend_t[ok], pend_c[ok]] = lg
        pend_t, pend_c = pend_t[~ok], pend_c[~ok]
        attempt += 1
    return out


def dirichlet(alpha, seed: int, trials):
    """Dirichlet(alpha) draws via normalised gamma variates, one row per trial."""
    lg = log_standard_gamma(alpha, seed, trials)
    lg -= lg.max(axis=1, keepdims=True)
    g = np.exp(lg)
    return g / g.sum(axis=1, keepdims=True)
