"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict in ``RESULTS``; the conftest prints them
in the terminal summary. Running this file directly prints the same lines.
"""

import time

import numpy as np
import pytest

from orliczgen.core import approx_smooth_kink, check_second_derivative_decreasing, normalize, power, smooth_normalized
from orliczgen.experiments import (
    embedding_experiment,
    khintchine_ratio,
    max_equivalence_experiment,
    p_equivalence_experiment,
    roundtrip_error,
)
from orliczgen.generators import (
    NegativeDensity,
    density_from_orlicz_p,
    product_tail,
    tail_from_orlicz_max,
    tail_from_orlicz_p,
)
from orliczgen.sampling import Sampler, sample
from orliczgen.tails import log_gamma_tail

RESULTS = {}


def record(number, ok, detail):
    RESULTS[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, RESULTS[number]


def _smoothed_q15():
    return smooth_normalized(normalize(power(1.5)), 1.1)


def test_criterion_01_roundtrip_max():
    start = time.perf_counter()
    errors = {q: roundtrip_error(normalize(power(q))) for q in (1.2, 1.5, 2.0, 3.0)}
    elapsed = time.perf_counter() - start
    worst = max(errors.values())
    record(1, worst <= 1e-6 and elapsed < 5,
           f"roundtrip-max sup error {worst:.2e} (<= 1e-6), {elapsed:.2f} s (< 5 s)")


def test_criterion_02_product_tail_identity():
    start = time.perf_counter()
    M = _smoothed_q15()
    mu = tail_from_orlicz_p(M, 2.0)
    target = tail_from_orlicz_max(M)
    z = np.geomspace(0.5 * target.support_floor, 1e6 * target.support_floor, 512)
    prod = product_tail(mu, log_gamma_tail(2.0), z)
    u = 1.0 / z
    closed = np.where(z < target.support_floor, 1.0, u * M(np.minimum(u, M.t_lin), 1) - M(np.minimum(u, M.t_lin)))
    err = float(np.max(np.abs(np.asarray(prod(z)) - closed)))
    elapsed = time.perf_counter() - start
    record(2, err <= 1e-4 and elapsed < 10,
           f"product-tail sup error {err:.2e} (<= 1e-4) on 512 points, {elapsed:.2f} s (< 10 s)")


def test_criterion_03_pareto_formula():
    D = tail_from_orlicz_max(normalize(power(2.0)))
    t = np.geomspace(0.05, 1e4, 100)
    err = float(np.max(np.abs(np.asarray(D(t)) - np.minimum(1.0, t**-2.0))))
    record(3, err <= 1e-10, f"max-generated tail of normalized t^2 vs min(1, t^-2): {err:.2e} (<= 1e-10)")


def _fidelity(D, seed, n):
    x = np.sort(sample(Sampler(D, seed=seed), n))
    floor = D.support_floor
    probes = np.geomspace(floor * 1.001, floor * 1e3, 20)
    emp = 1.0 - np.searchsorted(x, probes, side="right") / n
    dev = float(np.max(np.abs(emp - np.asarray(D(probes)))))
    for loc, mass in D.atoms:
        dev = max(dev, abs(float(np.mean(x == loc)) - mass))
    return dev


def test_criterion_04_sampler_fidelity():
    n = 1_000_000
    bound = 4 / np.sqrt(n)
    mixed = tail_from_orlicz_p(normalize(power(1.5)), 2.0)
    atom_ok = len(mixed.atoms) == 1 and abs(mixed.atoms[0][1] - 0.75) < 1e-12
    devs = [_fidelity(D, seed, n) for D in (log_gamma_tail(2.0), mixed) for seed in (1, 2, 3)]
    worst = max(devs)
    record(4, atom_ok and worst <= bound,
           f"worst tail/atom deviation {worst:.2e} (<= {bound:.0e}) over 2 laws x seeds 1,2,3")


def test_criterion_05_lp_equivalence():
    start = time.perf_counter()
    M = _smoothed_q15()
    r64 = p_equivalence_experiment(M, 2.0, 64, n_mc=200_000, seed=7)
    r128 = p_equivalence_experiment(M, 2.0, 128, n_mc=200_000, seed=7)
    change = float(np.max(np.abs(r128.ratios / r64.ratios - 1)))
    elapsed = time.perf_counter() - start
    record(5, r64.spread <= 8 and change < 0.2 and elapsed < 60,
           f"l_p spread {r64.spread:.3f} (<= 8), max ratio change 64->128 {change:.1%} (< 20%), "
           f"{elapsed:.1f} s (< 60 s)")


def test_criterion_06_max_equivalence():
    M = normalize(power(2.0))
    rep = max_equivalence_experiment(M, 64, n_mc=200_000, seed=7)
    single = max_equivalence_experiment(M, 1, suite=[("e1", np.array([1.0]))], n_mc=200_000, seed=7)
    e = single.entries[0]
    z = abs(e.ratio - 2.0) / (e.estimate.stderr / e.norm)
    record(6, rep.spread <= 8 and z <= 3,
           f"max spread {rep.spread:.3f} (<= 8), single-coordinate ratio {e.ratio:.4f} vs 2 ({z:.2f} sigma)")


def test_criterion_07_khintchine():
    vectors = [[1.0], [1.0, 1.0], [1.0, 1.0, 1.0, 1.0], np.random.default_rng(8).standard_normal(8)]
    ratios = [khintchine_ratio(a) for a in vectors]
    ok = all(0.70710 <= r <= 1.0 for r in ratios)
    record(7, ok, "exact ratios " + ", ".join(f"{r:.6f}" for r in ratios) + " in [0.70710, 1]")


def test_criterion_08_embedding():
    start = time.perf_counter()
    rep = embedding_experiment(_smoothed_q15(), 64, n_mc=200_000, seed=7)
    elapsed = time.perf_counter() - start
    record(8, rep.spread <= 8 and elapsed < 60,
           f"embedding spread {rep.spread:.3f} (<= 8), {elapsed:.1f} s (< 60 s)")


def test_criterion_09_kink_smoothing():
    notes = []
    ok = True
    for q in (1.2, 1.5):
        M = normalize(power(q))
        N, delta = approx_smooth_kink(M, 1.1)
        T = M.t_lin
        grid = np.geomspace(1e-6 * T, 4 * T, 512)
        m, n = M(grid), N(grid)
        sandwich = bool(np.all(n <= m) and np.all(m <= 1.1 * n))
        flat = N(T, 2) == 0.0
        monotone = check_second_derivative_decreasing(N, grid)
        ok &= sandwich and flat and monotone
        notes.append(f"q={q}: delta={delta:.3f} N''(T)={N(T, 2):g} sandwich={sandwich} N''-monotone={monotone}")
    record(9, ok, "; ".join(notes))


def test_criterion_10_density_hypothesis():
    M = normalize(power(3.0))
    try:
        density_from_orlicz_p(M, 2.0)
        rejected = False
    except NegativeDensity:
        rejected = True
    try:
        mass = density_from_orlicz_p(M, 4.0).total_mass()
        p4 = f"p=4 total mass {mass:.9f}"
        p4_ok = abs(mass - 1.0) <= 1e-6
    except NegativeDensity as exc:
        p4, p4_ok = f"p=4 flagged ({exc})", True
    record(10, rejected and p4_ok, f"q=3/p=2 rejected={rejected}; {p4}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
