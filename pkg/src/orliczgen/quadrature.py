"""Quadrature helpers: QUADPACK for improper pieces, vectorized Gauss-Legendre
for many short segments."""


import numpy as np
from scipy.integrate import quad

QUAD_ABS = 1e-12
QUAD_REL = 1e-11

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def split_quad(f, a, b, points=(), epsabs=QUAD_ABS, epsrel=QUAD_REL):
    """``int_a^b f`` with the integration range cut at ``points``.

    ``b`` may be ``inf``; each finite cut is integrated separately so kinks of
    the integrand never sit inside a QUADPACK panel.
    """
    g = lambda x: float(f(np.asarray(x, dtype=float)))
    cuts = [a] + sorted(p for p in set(points) if a < p < b) + [b]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi == lo:
            continue
        val, _ = quad(g, lo, hi, limit=400, epsabs=epsabs, epsrel=epsrel)
        total += val
    return total


def integrate_to_infinity(f, a, points=(), epsabs=QUAD_ABS, epsrel=QUAD_REL):
    """``int_a^inf f`` for a vectorized, eventually power-decaying ``f``.

    QUADPACK covers ``[a, start]`` (``start`` = last cut point). Past it a
    geometric Gauss-Legendre ladder runs decade by decade until ``R f(R)`` is
    negligible; the remainder is closed with the local power law.
    """
    pts = sorted(p for p in set(points) if p > a)
    start = pts[-1] if pts else a
    if start <= 0:
        start = 1.0
    total = split_quad(f, a, start, pts, epsabs, epsrel) if start > a else 0.0
    lo = start
    for _ in range(30):
        rungs = lo * np.power(10.0, np.arange(0, 11))
        total += segment_sum(f, rungs, refine=32)
        lo = rungs[-1]
        r = float(f(np.asarray(lo)))
        if r * lo <= 1e-16 * max(abs(total), 1e-300) or lo > 1e280:
            break
    f1 = float(f(np.asarray(lo / 10.0)))
    f2 = float(f(np.asarray(lo)))
    if f1 > 0 and f2 > 0:
        k = np.log10(f2 / f1)
        if k < -1:
            total += f2 * lo / (-k - 1)
    return total


def segment_integrals(f, edges):
    """Per-segment 16-point Gauss-Legendre integrals over consecutive edges."""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    return (np.asarray(f(x), dtype=float) @ _GL_W) * half


def segment_sum(f, edges, refine=1):
    """Integral over ``[edges[0], edges[-1]]``, each gap split geometrically."""
    edges = np.asarray(edges, dtype=float)
    if refine > 1:
        fine = [np.geomspace(lo, hi, refine + 1)[:-1] for lo, hi in zip(edges[:-1], edges[1:])]
        edges = np.concatenate(fine + [edges[-1:]])
    return float(segment_integrals(f, edges).sum())
