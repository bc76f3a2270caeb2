"""Monte Carlo equivalence experiments: ratios of MC expectations to norms
over a fixed vector suite."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import OrliczFunction, check_two_concave, orlicz_norm
from .generators import (
    density_from_orlicz_2,
    orlicz_from_distribution_max,
    orlicz_from_distribution_p,
    tail_from_orlicz_max,
    tail_from_orlicz_p,
)
from .sampling import (
    MCEstimate,
    Sampler,
    expected_abs_signed_sum,
    expected_max,
    expected_norm_p,
    make_rng,
)
from .tails import log_gamma_tail

SUITE_VERSION = 1
SUITE_SEED = 1729
DEFAULT_N_MC = 200_000
KHINTCHINE_EXACT_MAX = 20


class TwoConcavityError(ValueError):
    pass


def default_suite(n: int):
    """Versioned suite: e_1, all-ones, 2^-i, 1/i and four random unit vectors.

    The random vectors depend only on ``n`` (not on the experiment seed), so
    spreads are comparable across runs.
    """
    if n < 1:
        raise ValueError("dimension must be positive")
    i = np.arange(n)
    suite = [
        ("e1", np.eye(1, n)[0]),
        ("ones", np.ones(n)),
        ("geometric", 2.0 ** -i),
        ("harmonic", 1.0 / (i + 1)),
    ]
    for k in range(4):
        g = make_rng(SUITE_SEED, n, k).standard_normal(n)
        suite.append((f"random{k}", g / np.linalg.norm(g)))
    return suite


@dataclass(frozen=True)
class RatioEntry:
    label: str
    norm: float
    estimate: MCEstimate
    ratio: float


@dataclass(frozen=True)
class EquivalenceReport:
    entries: tuple
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.entries:
            raise ValueError("empty report")
        if any(not e.ratio > 0 for e in self.entries):
            raise ValueError("ratios must be positive")

    @property
    def ratios(self):
        return np.array([e.ratio for e in self.entries])

    @property
    def ratio_min(self):
        return float(self.ratios.min())

    @property
    def ratio_max(self):
        return float(self.ratios.max())

    @property
    def spread(self):
        return self.ratio_max / self.ratio_min

    def ratio(self, label):
        return next(e for e in self.entries if e.label == label)

    def to_dict(self):
        return {
            "config": self.config,
            "suite_version": SUITE_VERSION,
            "seed": self.config.get("seed"),
            "entries": [
                {
                    "label": e.label,
                    "norm": e.norm,
                    "mc_mean": e.estimate.mean,
                    "mc_stderr": e.estimate.stderr,
                    "n_samples": e.estimate.n_samples,
                    "ratio": e.ratio,
                }
                for e in self.entries
            ],
            "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max,
            "spread": self.spread,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, default=_jsonable)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "norm", "mc_mean", "mc_stderr", "ratio"])
        for e in self.entries:
            w.writerow([e.label] + [f"{v:.12g}" for v in (e.norm, e.estimate.mean, e.estimate.stderr, e.ratio)])
        return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _run(suite, norm_fn, estimate_fn, config):
    entries = []
    for idx, (label, x) in enumerate(suite):
        nrm = float(norm_fn(x))
        est = estimate_fn(idx, x)
        entries.append(RatioEntry(label, nrm, est, float(est.mean / nrm)))
    return EquivalenceReport(tuple(entries), config)


def _suite(suite, n):
    return default_suite(n) if suite is None else [(lab, np.asarray(x, dtype=float)) for lab, x in suite]


def max_equivalence_experiment(M: OrliczFunction, n: int, suite=None, n_mc=DEFAULT_N_MC, seed=0):
    """Ratios ``E max |x_i X_i| / ||x||_M`` with X generated from M."""
    S = Sampler(tail_from_orlicz_max(M), seed)
    suite = _suite(suite, n)
    config = {"experiment": "max", "n": n, "n_mc": n_mc, "seed": seed}
    return _run(suite, lambda x: orlicz_norm(M, x),
                lambda i, x: expected_max(x, S.with_stream(i), n_mc), config)


def p_equivalence_experiment(M: OrliczFunction, p: float, n: int, suite=None, n_mc=DEFAULT_N_MC, seed=0):
    """Ratios ``E ||(x_i X_i)||_p / ||x||_M`` with X from the l_p formula."""
    S = Sampler(tail_from_orlicz_p(M, p), seed)
    suite = _suite(suite, n)
    config = {"experiment": "lp", "p": p, "n": n, "n_mc": n_mc, "seed": seed,
              "lower_bound_factor": (p - 1) ** (1 / p)}
    return _run(suite, lambda x: orlicz_norm(M, x),
                lambda i, x: expected_norm_p(x, S.with_stream(i), p, n_mc), config)


def embedding_experiment(M: OrliczFunction, n: int = 64, suite=None, n_mc=DEFAULT_N_MC, seed=0):
    """Ratios ``E |sum a_i r_i X_i| / ||a||_M`` (random signs r_i, p = 2 law for X)."""
    if not check_two_concave(M):
        raise TwoConcavityError("M''' > 0 somewhere: t M'(t) - M(t) is not 2-concave")
    density_from_orlicz_2(M)
    S = Sampler(tail_from_orlicz_p(M, 2.0), seed)
    suite = _suite(suite, n)
    config = {"experiment": "embedding", "n": n, "n_mc": n_mc, "seed": seed}

    def est(i, a):
        sub = S.with_stream(i)
        return expected_abs_signed_sum(a, sub, n_mc, sub.rng(0), sub.rng(1))

    return _run(suite, lambda a: orlicz_norm(M, a), est, config)


def pareto_generates_lp(p: float, n: int, suite=None, n_mc=DEFAULT_N_MC, seed=0):
    """Ratios ``E max |x_i xi_i| / ||x||_p`` for log-gamma(1, p) weights."""
    S = Sampler(log_gamma_tail(p), seed)
    suite = _suite(suite, n)
    config = {"experiment": "pareto", "p": p, "n": n, "n_mc": n_mc, "seed": seed}
    return _run(suite, lambda x: float(np.sum(np.abs(x) ** p) ** (1 / p)),
                lambda i, x: expected_max(x, S.with_stream(i), n_mc), config)


def roundtrip_grid(M: OrliczFunction, n=1001):
    T = M.t_lin
    return np.union1d(np.linspace(0.0, T, n), np.geomspace(1e-6 * T, T, n))


def roundtrip_error(M: OrliczFunction, p=None):
    """Sup error on ``[0, T]`` of M rebuilt from the law it generates.

    ``p=None`` uses the max-norm law, otherwise the l_p law.
    """
    if p is None:
        R = orlicz_from_distribution_max(tail_from_orlicz_max(M))
    else:
        R = orlicz_from_distribution_p(tail_from_orlicz_p(M, p), p)
    t = roundtrip_grid(M)
    return float(np.max(np.abs(np.asarray(R(t)) - np.asarray(M(t)))))


def khintchine_ratio(a, n_mc=1_000_000, seed=0):
    """``E|sum a_i eps_i| / ||a||_2`` over random signs.

    Exact enumeration of all sign vectors up to 20 coordinates (with the first
    sign fixed by symmetry), MC beyond.
    """
    a = np.asarray(a, dtype=float)
    norm2 = float(np.linalg.norm(a))
    if norm2 == 0:
        raise ValueError("vector must be nonzero")
    n = len(a)
    if n <= KHINTCHINE_EXACT_MAX:
        rest = a[1:]
        total = 0.0
        count = 0
        block = 1 << min(n - 1, 16)
        # rows of sign patterns for the trailing coordinates, in blocks
        bits = np.arange(block)[:, None] >> np.arange(min(n - 1, 16))[None, :] & 1
        low = (1 - 2 * bits) @ rest[: bits.shape[1]] if n > 1 else np.zeros(1)
        high_dims = rest[bits.shape[1]:]
        for hs in itertools.product((1.0, -1.0), repeat=len(high_dims)):
            shift = float(np.dot(hs, high_dims)) if len(high_dims) else 0.0
            total += float(np.abs(a[0] + low + shift).sum())
            count += len(low)
        return total / count / norm2
    rng = make_rng(seed, 7)
    signs = 1.0 - 2.0 * rng.integers(0, 2, size=(n_mc, n))
    return float(np.abs(signs @ a).mean()) / norm2


def khintchine_check(a):
    """Khintchine ratio, which must lie in ``[1/sqrt(2), 1]``."""
    r = khintchine_ratio(a)
    if not (1 / math.sqrt(2) - 1e-12 <= r <= 1 + 1e-12):
        raise ArithmeticError(f"Khintchine ratio {r} outside [1/sqrt(2), 1]")
    return r
