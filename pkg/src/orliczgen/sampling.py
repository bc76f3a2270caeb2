"""Seeded inverse-CDF sampling from tail functions, and MC estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .tails import TailFunction

TABLE_SIZE = 4096
# probabilities below EPS (or above 1 - EPS) use the end segments of the table
EPS = 1e-15
REFINE_RTOL = 1e-10
# rows of a replication matrix generated per chunk
CHUNK_CELLS = 1 << 21


def make_rng(seed, *keys):
    """Generator for the substream ``(seed, *keys)``; independent of call order."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) % 2**64, *keys])))


def _quantiles(D: TailFunction, u, rtol=REFINE_RTOL):
    """``Q(u) = inf{t : P(X > t) <= u}`` by vectorized bisection in log t."""
    u = np.asarray(u, dtype=float)
    floor = D.support_floor
    lo = np.full_like(u, math.log(floor) if floor > 0 else 0.0)
    if floor > 0:
        lo = lo + math.log1p(-1e-12)
    else:
        # walk down until the tail exceeds u everywhere
        while np.any(np.asarray(D(np.exp(lo))) <= u):
            lo = np.where(np.asarray(D(np.exp(lo))) <= u, lo - 5.0, lo)
    hi = lo + 1.0
    for _ in range(400):
        done = np.asarray(D(np.exp(hi))) <= u
        if done.all():
            break
        hi = np.where(done, hi, hi + 2.0)
    while np.max(hi - lo) > rtol:
        mid = 0.5 * (lo + hi)
        below = np.asarray(D(np.exp(mid))) <= u
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    return hi


@dataclass(frozen=True)
class QuantileTable:
    """``log Q`` at probabilities spaced uniformly in ``log(u / (1 - u))``.

    The grid spans ``[EPS, 1 - EPS]`` so both the heavy upper tail and the
    neighbourhood of the support floor are resolved. Draws landing in an
    atom's probability band return the atom's location exactly.
    """

    w0: float
    dw: float
    logq: np.ndarray
    atom_bands: tuple

    @classmethod
    def build(cls, D: TailFunction, size=TABLE_SIZE):
        W = math.log((1 - EPS) / EPS)
        w = np.linspace(-W, W, size)
        u = 1.0 / (1.0 + np.exp(-w))
        bands = []
        for a, m in D.atoms:
            lo = float(D(a))
            bands.append((lo, lo + m, a))
        return cls(float(w[0]), float(w[1] - w[0]), _quantiles(D, u), tuple(bands))

    def __call__(self, u):
        u = np.clip(u, EPS * 1e-3, 1 - EPS)
        w = np.log(u) - np.log1p(-u)
        pos = (w - self.w0) / self.dw
        i = np.clip(pos.astype(np.int64), 0, len(self.logq) - 2)
        frac = pos - i
        L = self.logq
        out = np.exp(L[i] + frac * (L[i + 1] - L[i]))
        for lo, hi, a in self.atom_bands:
            out[(u >= lo) & (u < hi)] = a
        return out


@dataclass(frozen=True)
class Sampler:
    """Draws from ``source`` on the substream ``(seed, stream_id)``."""

    source: TailFunction
    seed: int = 0
    stream_id: int = 0
    table: QuantileTable = None

    def __post_init__(self):
        if self.table is None:
            object.__setattr__(self, "table", QuantileTable.build(self.source))

    def with_stream(self, stream_id):
        return replace(self, stream_id=stream_id)

    def rng(self, *keys):
        return make_rng(self.seed, self.stream_id, *keys)

    def draw(self, n, rng):
        return self.table(rng.random(n))


def sample(S: Sampler, n: int) -> np.ndarray:
    """First ``n`` draws of the sampler's ``(seed, stream_id)`` stream."""
    if n < 1:
        raise ValueError("need n >= 1")
    return S.draw(int(n), S.rng())


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n_samples: int

    def to_dict(self):
        return {"mean": self.mean, "stderr": self.stderr, "n_samples": self.n_samples}


def _estimate(values_fn, n_mc, width, rng):
    """Mean/stderr of ``values_fn(rows)`` over ``n_mc`` rows, built chunkwise."""
    chunk = max(1, CHUNK_CELLS // max(width, 1))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_mc:
        k = min(chunk, n_mc - done)
        v = values_fn(k, rng)
        total += float(v.sum())
        total_sq += float(np.dot(v, v))
        done += k
    mean = total / n_mc
    var = max(total_sq / n_mc - mean**2, 0.0) * n_mc / (n_mc - 1)
    return MCEstimate(mean, math.sqrt(var / n_mc), n_mc)


def _check_mc(n_mc):
    if n_mc < 100:
        raise ValueError("n_mc must be at least 100")


def expected_max(x, S: Sampler, n_mc: int, rng=None) -> MCEstimate:
    """MC estimate of ``E max_i |x_i X_i|``."""
    _check_mc(n_mc)
    ax = np.abs(np.asarray(x, dtype=float))
    rng = S.rng() if rng is None else rng
    fn = lambda k, g: (S.draw(k * len(ax), g).reshape(k, len(ax)) * ax).max(axis=1)
    return _estimate(fn, n_mc, len(ax), rng)


def expected_norm_p(x, S: Sampler, p: float, n_mc: int, rng=None) -> MCEstimate:
    """MC estimate of ``E (sum_i |x_i X_i|^p)^(1/p)``."""
    _check_mc(n_mc)
    ax = np.abs(np.asarray(x, dtype=float))
    rng = S.rng() if rng is None else rng

    def fn(k, g):
        v = S.draw(k * len(ax), g).reshape(k, len(ax)) * ax
        if p == 2:
            return np.sqrt(np.einsum("ij,ij->i", v, v))
        if p == 1:
            return v.sum(axis=1)
        # scale by the row max to keep huge heavy-tailed draws finite
        top = v.max(axis=1, keepdims=True)
        top[top == 0] = 1.0
        return top[:, 0] * np.power(np.power(v / top, p).sum(axis=1), 1.0 / p)

    return _estimate(fn, n_mc, len(ax), rng)


def expected_abs_signed_sum(a, S: Sampler, n_mc: int, rng=None, sign_rng=None) -> MCEstimate:
    """MC estimate of ``E |sum_i a_i r_i X_i|`` with independent random signs."""
    _check_mc(n_mc)
    a = np.asarray(a, dtype=float)
    rng = S.rng() if rng is None else rng
    sign_rng = S.rng(1) if sign_rng is None else sign_rng

    def fn(k, g):
        v = S.draw(k * len(a), g).reshape(k, len(a))
        signs = 1.0 - 2.0 * sign_rng.integers(0, 2, size=(k, len(a)))
        return np.abs((v * signs) @ a)

    return _estimate(fn, n_mc, len(a), rng)
