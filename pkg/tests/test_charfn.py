import math

import numpy as np
import pytest

from kacrice.charfn import (
    cf_report,
    derivative_consistency,
    dominates_gaussian,
    estimate_derivative_bounds,
    make_cf,
    make_custom_cf,
    verify_decay,
)
from kacrice.errors import InvalidArgumentError, UnsupportedError

LAWS = [("gaussian", 0.5), ("gaussian", 0.25), ("laplace", None), ("uniform", None), ("rademacher", None)]


def law(kind, a):
    return make_cf(kind, a)


def test_values():
    assert make_cf("gaussian", 0.5)(1.0).real == pytest.approx(math.exp(-0.5))
    assert make_cf("laplace")(0.0) == 1.0
    assert make_cf("laplace").derivative(0.0, 2).real == pytest.approx(-1.0)


def test_uniform_removable_singularity():
    cf = make_cf("uniform")
    assert cf(0.0).real == 1.0
    s = np.array([1e-9, 1e-3, 0.5, 3.0])
    np.testing.assert_allclose(cf(s).real, np.sin(math.sqrt(3) * s) / (math.sqrt(3) * s), rtol=1e-14)
    for order in (1, 2, 3):
        # continuity across the series cutoff
        lo = cf.derivative(np.array([0.0099999]), order).real
        hi = cf.derivative(np.array([0.0100001]), order).real
        assert abs(lo - hi) < 1e-5


@pytest.mark.parametrize("kind,a", LAWS)
def test_structural_invariants(kind, a):
    cf = law(kind, a)
    s = np.linspace(-20, 20, 4001)
    assert cf(0.0) == 1.0
    assert np.all(np.abs(cf(s)) <= 1 + 1e-15)
    np.testing.assert_allclose(cf(-s), np.conj(cf(s)), atol=1e-15)
    assert abs(cf.derivative(0.0, 1)) < 1e-15
    assert cf.derivative(0.0, 2).real == pytest.approx(-cf.variance, rel=1e-12)


@pytest.mark.parametrize("kind,a", LAWS)
def test_derivatives_vs_finite_differences(kind, a):
    res = derivative_consistency(law(kind, a), np.linspace(-10, 10, 100))
    assert res.passed, res


def test_verify_decay_examples():
    lap = verify_decay(make_cf("laplace"), 0.5, 1, 50)
    assert lap.passed and lap.worst_margin <= 1e-12
    g = verify_decay(make_cf("gaussian", 0.5), 0.5, 1, 50)
    assert g.passed and g.worst_margin == pytest.approx(0.0, abs=1e-15)
    r = verify_decay(make_cf("rademacher"), 1, 1, 10)
    assert not r.passed


@pytest.mark.parametrize("a", [0.1, 0.5, 2.0])
@pytest.mark.parametrize("q", [1, 1.5, 3])
def test_gaussian_decay_q(a, q):
    # exp(-u) <= (1 + u / q)^(-q), so the matching envelope is (a/q, q)
    assert verify_decay(make_cf("gaussian", a), a / q, q, 30).passed
    if q == 1:
        assert verify_decay(make_cf("gaussian", a), a, 1, 30).passed


def test_uniform_fails_decay():
    assert not verify_decay(make_cf("uniform"), 0.5, 1, 50).passed


def test_laplace_bounds():
    C2, C3 = estimate_derivative_bounds(make_cf("laplace"))
    assert C2 == pytest.approx(1.0, abs=1e-3)
    assert C3 == pytest.approx(1.650, abs=5e-3)


def test_gaussian_bounds():
    C2, C3 = estimate_derivative_bounds(make_cf("gaussian", 0.5))
    assert C2 == pytest.approx(1.0, abs=1e-6)
    v2 = (3 - math.sqrt(6)) / 2
    exact = 0.5**1.5 * (12 * math.sqrt(v2) - 8 * v2**1.5) * math.exp(-v2)
    assert C3 == pytest.approx(exact, abs=1e-4)


def test_rademacher_bounds_need_window():
    with pytest.raises(UnsupportedError):
        estimate_derivative_bounds(make_cf("rademacher"))
    C2, C3 = estimate_derivative_bounds(make_cf("rademacher"), s_max=10.0)
    assert C2 == pytest.approx(1.0, abs=1e-9) and C3 == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("kind,a", [("gaussian", 0.5), ("laplace", None), ("uniform", None)])
def test_variance_one_c2(kind, a):
    cf = law(kind, a)
    C2, _ = estimate_derivative_bounds(cf, s_max=60.0)
    assert C2 <= 1 + 1e-6


def test_laplace_dominates_gaussian():
    assert dominates_gaussian(make_cf("laplace"), 0.5, 30).passed


def test_report_flags_contradicted_declaration():
    rows = {r.check: r for r in cf_report(make_cf("laplace"), C3=1.6)}
    assert not rows["C3_bound"].passed
    assert rows["C3_bound"].location == pytest.approx(0.4595, abs=1e-3)
    assert all(r.passed for r in cf_report(make_cf("laplace")))


def test_custom_cf():
    cf = make_custom_cf(
        lambda s: 1 / (1 + s * s / 2),
        (lambda s: -s / (1 + s * s / 2) ** 2, None, None),
        1.0,
        0.5,
        1.0,
    )
    assert cf.has_decay
    with pytest.raises(UnsupportedError):
        cf.derivative(0.0, 2)


def test_invalid():
    with pytest.raises(InvalidArgumentError):
        make_cf("gaussian", -1)
    with pytest.raises(InvalidArgumentError):
        make_cf("cauchy")
    with pytest.raises(InvalidArgumentError):
        make_cf("laplace", 0.3)
