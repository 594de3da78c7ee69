import math

import numpy as np
import pytest
from scipy.integrate import quad

from kacrice.basis import chebyshev_t_coeffs, make_basis
from kacrice.charfn import make_cf
from kacrice.errors import DegeneratePolynomialError, InvalidArgumentError
from kacrice.intensity import intensity_nongaussian
from kacrice.montecarlo import (
    batch_real_roots,
    empirical_density,
    make_distribution,
    real_roots,
    scan_real_roots,
    to_monomial,
    trial_stream,
)


def test_real_roots_examples():
    m = make_basis("monomial", 2)
    np.testing.assert_allclose(real_roots(m, [-1, 0, 1], (-2, 2)), [-1, 1])
    np.testing.assert_allclose(real_roots(make_basis("bergman", 1), [1, 1]), [-1 / math.sqrt(2)])
    assert real_roots(m, [1, 0, 1]).size == 0


def test_real_roots_trims_leading_zeros():
    np.testing.assert_allclose(real_roots(make_basis("monomial", 3), [-2, 1, 0, 0]), [2.0])


def test_zero_polynomial():
    with pytest.raises(DegeneratePolynomialError):
        real_roots(make_basis("monomial", 3), [0, 0, 0, 0])


def test_chebyshev_roots():
    n = 9
    b = make_basis("recurrence", n, chebyshev_t_coeffs(n))
    e = np.zeros(n + 1)
    e[n] = 1
    k = np.arange(n)
    np.testing.assert_allclose(real_roots(b, e), np.sort(np.cos((2 * k + 1) * math.pi / (2 * n))), atol=1e-12)


def test_companion_vs_scan(rng):
    bad = 0
    for _ in range(1000):
        deg = int(rng.integers(1, 11))
        c = rng.standard_normal(deg + 1)
        r = real_roots(make_basis("monomial", deg), c, (-3, 3))
        s = scan_real_roots(c, (-3, 3))
        if r.size != s.size:
            bad += 1
            continue
        np.testing.assert_allclose(r, s, atol=1e-7)
    # a grid of 1e4 cells can miss a pair closer than the spacing
    assert bad == 0


def test_parity(rng):
    b = make_basis("monomial", 9)
    for _ in range(300):
        c = rng.standard_normal(10)
        u, v = -1.3, 0.8
        pu, pv = np.polynomial.polynomial.polyval([u, v], c)
        if min(abs(pu), abs(pv)) < 1e-10:
            continue
        n = real_roots(b, c, (u, v)).size
        assert (n % 2 == 0) == (pu * pv > 0)


def test_batch_matches_single(rng):
    b = make_basis("elliptic", 7)
    eta = rng.standard_normal((50, 8))
    roots, degenerate = batch_real_roots(to_monomial(b, eta))
    assert not degenerate.any()
    for row, r in zip(eta, roots):
        np.testing.assert_array_equal(r, real_roots(b, row))


@pytest.mark.parametrize("kind", ["gaussian", "laplace", "uniform", "rademacher"])
def test_distribution_moments(kind):
    d = make_distribution(kind, 0.5 if kind == "gaussian" else None)
    x = d.sample(7, 0, 1000, 1000).ravel()
    se_mean = math.sqrt(d.variance / x.size)
    assert abs(x.mean()) <= 5 * se_mean
    fourth = np.mean(x**4)
    se_var = math.sqrt((fourth - d.variance**2) / x.size)
    assert abs(np.mean(x * x) - d.variance) <= max(5 * se_var, 1e-12)


def test_gaussian_variance_is_2a():
    assert make_distribution("gaussian", 0.25).variance == 0.5
    assert make_distribution("laplace").variance == 1.0


def test_streams_depend_only_on_seed_and_trial():
    whole = trial_stream(99, 0, 10, 7)
    np.testing.assert_array_equal(whole[3:8], trial_stream(99, 3, 5, 7))
    assert not np.array_equal(whole, trial_stream(100, 0, 10, 7))


def test_mean_count_examples():
    g = make_distribution("gaussian", 0.5)
    r = empirical_density(make_basis("monomial", 1), g, 100_000, 60, seed=3)
    assert abs(r.mean_count - 1) <= 3 * max(r.mean_count_stderr, 1e-12)
    r = empirical_density(make_basis("elliptic", 9), g, 100_000, 60, seed=3)
    assert abs(r.mean_count - 3) <= 3 * r.mean_count_stderr


def test_report_invariants():
    r = empirical_density(make_basis("monomial", 4), make_distribution("uniform"), 5000, 20, (-2, 2), seed=5)
    assert r.bin_counts.sum() == round(r.mean_count * r.trials)
    width = 4 / 20
    np.testing.assert_allclose(r.density_estimate, r.bin_counts / (r.trials * width))
    assert np.all(r.stderr >= 0)
    assert r.bin_edges[0] == -2 and r.bin_edges[-1] == 2


def test_laplace_histogram_bin_averaged():
    lap = make_cf("laplace")
    b = make_basis("monomial", 2)
    r = empirical_density(b, make_distribution("laplace"), 100_000, 12, (-3, 3), seed=11)
    for i in range(r.bins):
        lo, hi = r.bin_edges[i], r.bin_edges[i + 1]
        ref = quad(lambda x: intensity_nongaussian(b, lap, x).rho, lo, hi, epsabs=1e-8)[0] / (hi - lo)
        assert abs(r.density_estimate[i] - ref) <= 4 * r.stderr[i]


def test_threads_do_not_change_results():
    b = make_basis("monomial", 5)
    d = make_distribution("laplace")
    r1 = empirical_density(b, d, 10_000, 30, seed=8, threads=1)
    r3 = empirical_density(b, d, 10_000, 30, seed=8, threads=3)
    assert r1.to_dict() == r3.to_dict()


def test_rademacher_trials_are_counted():
    r = empirical_density(make_basis("monomial", 3), make_distribution("rademacher"), 2000, 10, seed=1)
    assert r.trials == 2000 and r.degenerate_trials == 0


def test_validation():
    b = make_basis("monomial", 2)
    d = make_distribution("laplace")
    with pytest.raises(InvalidArgumentError):
        empirical_density(b, d, 0, 10)
    with pytest.raises(InvalidArgumentError):
        empirical_density(b, d, 10, 10, (1, 0))
    with pytest.raises(InvalidArgumentError):
        make_distribution("cauchy")
