"""Brute-force reference computations, deliberately written without the library.

Everything loops over atoms with plain floats; no partitions-as-blocks
shortcut, no numpy vectorisation, no fsum.
"""

import cmath
import math


def conditional_pis(weights, x, blocks):
    """pi[atom][i] by direct counting inside the atom's block."""
    n_levels = sorted(set(x))
    owner = {}
    for b in blocks:
        for a in b:
            owner[a] = b
    out = []
    for atom in range(len(weights)):
        b = owner[atom]
        pb = sum(weights[a] for a in b)
        out.append([sum(weights[a] for a in b if x[a] == lv) / pb for lv in n_levels])
    return out


def partition_ensemble(weights, x, blocks, theta, xs=None):
    """(rho, cross, expected shannon, expected variance) summed atom by atom."""
    pis = conditional_pis(weights, x, blocks)
    n = len(theta)
    rho = [[0j] * n for _ in range(n)]
    cross = [[0.0] * n for _ in range(n)]
    h = 0.0
    v = 0.0
    for atom, w in enumerate(weights):
        pi = pis[atom]
        for i in range(n):
            for j in range(n):
                amp = math.sqrt(pi[i] * pi[j])
                cross[i][j] += w * amp
                rho[i][j] += w * amp * cmath.exp(1j * (theta[i] - theta[j]))
        h += w * -sum(q * math.log(q) for q in pi if q > 0)
        if xs is not None:
            m = sum(q * xv for q, xv in zip(pi, xs))
            v += w * sum(q * (xv - m) ** 2 for q, xv in zip(pi, xs))
    return rho, cross, h, v


def restricted_growth_strings(m, n):
    """Assignments of m atoms onto exactly n levels, up to relabelling."""

    def rec(prefix, top):
        if len(prefix) == m:
            if top + 1 == n:
                yield list(prefix)
            return
        for lv in range(min(top + 2, n)):
            yield from rec(prefix + [lv], max(top, lv))

    yield from rec([0], 0)


def hermitian_from_spectrum(spectrum, rng, rotations=None):
    """U diag(spectrum) U^H with U a product of random complex Givens rotations."""
    import numpy as np

    n = len(spectrum)
    a = np.diag(np.asarray(spectrum, dtype=complex))
    for _ in range(rotations or 3 * n):
        i, j = rng.choice(n, size=2, replace=False)
        t = rng.uniform(0, 2 * math.pi)
        ph = rng.uniform(0, 2 * math.pi)
        c, s = math.cos(t), math.sin(t) * cmath.exp(1j * ph)
        ri, rj = a[i].copy(), a[j].copy()
        a[i], a[j] = c * ri - s.conjugate() * rj, s * ri + c * rj
        ci, cj = a[:, i].copy(), a[:, j].copy()
        a[:, i], a[:, j] = c * ci - s * cj, s.conjugate() * ci + c * cj
    return a
