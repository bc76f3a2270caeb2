import numpy as np
import pytest
from scipy.integrate import quad

from orliczgen.core import normalize, power
from orliczgen.generators import tail_from_orlicz_max, tail_from_orlicz_p
from orliczgen.sampling import Sampler, expected_abs_signed_sum, expected_max, expected_norm_p, make_rng, sample
from orliczgen.tails import log_gamma_tail, point_mass

N = 1_000_000


def _ks(D, draws, n_probes=20):
    lo = D.support_floor
    probes = np.geomspace(lo * 1.001, lo * 1e3, n_probes)
    draws = np.sort(draws)
    emp = 1.0 - np.searchsorted(draws, probes, side="right") / len(draws)
    return float(np.max(np.abs(emp - np.asarray(D(probes)))))


def test_point_mass_draws():
    np.testing.assert_array_equal(sample(Sampler(point_mass(2.5)), 1000), 2.5)


def test_log_gamma_tail_frequency():
    x = sample(Sampler(log_gamma_tail(2.0), seed=11), N)
    sigma = np.sqrt(0.25 * 0.75 / N)
    assert abs(np.mean(x > 2.0) - 0.25) <= 3 * sigma
    assert x.min() >= 1.0


def test_atom_frequency(q15):
    D = tail_from_orlicz_p(q15, 2.0)
    x = sample(Sampler(D, seed=5), N)
    loc, mass = D.atoms[0]
    assert abs(np.mean(x == loc) - mass) <= 3 * np.sqrt(mass * (1 - mass) / N)


@pytest.mark.parametrize("make", [
    lambda: tail_from_orlicz_max(normalize(power(1.2))),
    lambda: tail_from_orlicz_max(normalize(power(3.0))),
    lambda: log_gamma_tail(1.5),
])
def test_kolmogorov_deviation(make):
    D = make()
    assert _ks(D, sample(Sampler(D, seed=2), N)) <= 4 / np.sqrt(N)


def test_kolmogorov_deviation_smoothed_lp(q15_smooth):
    D = tail_from_orlicz_p(q15_smooth, 2.0)
    assert _ks(D, sample(Sampler(D, seed=3), N)) <= 4 / np.sqrt(N)


def test_reproducible_streams():
    S = Sampler(log_gamma_tail(2.0), seed=42)
    a, b = sample(S, 1000), sample(S, 1000)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample(S.with_stream(1), 1000))
    assert not np.array_equal(a, sample(Sampler(log_gamma_tail(2.0), seed=43), 1000))
    np.testing.assert_array_equal(make_rng(1, 2).random(5), make_rng(1, 2).random(5))


def test_product_law_matches_max_generated(q15_smooth):
    X = sample(Sampler(tail_from_orlicz_p(q15_smooth, 2.0), seed=9), N)
    xi = sample(Sampler(log_gamma_tail(2.0), seed=9, stream_id=1), N)
    assert _ks(tail_from_orlicz_max(q15_smooth), X * xi) <= 4 / np.sqrt(N)


def test_expected_max_constant():
    est = expected_max([1.0, 0.0, 0.0], Sampler(point_mass(3.0)), 500)
    assert est.mean == 3.0 and est.stderr == 0.0 and est.n_samples == 500


def test_expected_max_order_statistics():
    # E max of 4 iid Pareto(2) = int_0^inf 1 - (1 - min(1, t^-2))^4 dt
    exact = 1.0 + quad(lambda t: 1 - (1 - t**-2.0) ** 4, 1, np.inf, epsabs=1e-13)[0]
    est = expected_max(np.ones(4), Sampler(log_gamma_tail(2.0), seed=1), 400_000)
    assert abs(est.mean - exact) <= 3 * est.stderr


def test_expected_max_homogeneous():
    S = Sampler(log_gamma_tail(2.5), seed=4)
    x = np.array([0.3, 1.0, 2.0])
    a, b = expected_max(x, S, 20_000), expected_max(2 * x, S, 20_000)
    assert b.mean == pytest.approx(2 * a.mean, rel=1e-14)


def test_expected_norm_p():
    x = np.array([3.0, -4.0, 1.0])
    est = expected_norm_p(x, Sampler(point_mass(1.0)), 3.0, 200)
    assert est.mean == pytest.approx(np.sum(np.abs(x) ** 3) ** (1 / 3), rel=1e-14)
    assert est.stderr == pytest.approx(0.0, abs=1e-12)
    D = log_gamma_tail(3.0)
    e1 = expected_norm_p([2.0, 0.0], Sampler(D, seed=1), 2.0, 200_000)
    assert abs(e1.mean - 2.0 * D.mean()) <= 3 * e1.stderr
    sums = expected_norm_p([1.0, 1.0], Sampler(D, seed=2), 1.0, 200_000)
    assert abs(sums.mean - 2.0 * D.mean()) <= 3 * sums.stderr
    odd = expected_norm_p([1.0, 1.0], Sampler(point_mass(2.0)), 1.5, 100)
    assert odd.mean == pytest.approx(2.0 * 2 ** (1 / 1.5))


def test_signed_sum():
    S = Sampler(point_mass(1.0), seed=3)
    est = expected_abs_signed_sum([1.0, 1.0], S, 100_000)
    assert abs(est.mean - 1.0) <= 3 * est.stderr


def test_mc_size_validated():
    S = Sampler(point_mass(1.0))
    for fn in (lambda: expected_max([1.0], S, 99), lambda: expected_norm_p([1.0], S, 2, 10)):
        with pytest.raises(ValueError):
            fn()
    with pytest.raises(ValueError):
        sample(S, 0)
