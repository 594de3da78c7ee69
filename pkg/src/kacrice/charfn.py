"""Characteristic functions of the i.i.d. coefficients and their hypothesis checks.

A characteristic function phi(s) = E[exp(i s eta)] is carried together with
analytic derivatives up to order three. The intensity bound needs

    |phi(s)| <= (1 + a s^2)^(-q)            (decay, a > 0, q >= 1)
    sup |phi''| <= C2,  sup |phi'''| <= C3  (derivative bounds)

which are either declared on the object or checked/estimated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidArgumentError, UnsupportedError

Evaluator = Callable[[np.ndarray], np.ndarray]

CF_KINDS = ("gaussian", "laplace", "uniform", "rademacher", "custom")

_SQRT3 = math.sqrt(3.0)
_SINC_SERIES_CUTOFF = 1e-2


@dataclass(frozen=True)
class CharacteristicFunction:
    kind: str
    params: tuple[float, ...]
    value: Evaluator
    derivs: tuple[Evaluator | None, Evaluator | None, Evaluator | None]
    variance: float
    decay_a: float | None = None
    decay_q: float | None = None
    C2: float | None = None
    C3: float | None = None

    def __call__(self, s) -> np.ndarray:
        return np.asarray(self.value(np.asarray(s, dtype=float)), dtype=complex)

    def derivative(self, s, order: int) -> np.ndarray:
        if order == 0:
            return self(s)
        if order not in (1, 2, 3):
            raise InvalidArgumentError(f"derivative order must be 0..3, got {order}")
        fn = self.derivs[order - 1]
        if fn is None:
            raise UnsupportedError(f"{self.kind} cf has no order-{order} derivative evaluator")
        return np.asarray(fn(np.asarray(s, dtype=float)), dtype=complex)

    @property
    def has_decay(self) -> bool:
        return self.decay_a is not None and self.decay_q is not None

    def describe(self) -> str:
        if self.params:
            return f"{self.kind}({', '.join(f'{p:g}' for p in self.params)})"
        return self.kind


def make_cf(kind: str, a: float | None = None) -> CharacteristicFunction:
    """Built-in laws; ``a`` is the Gaussian parameter in exp(-a s^2).

    gaussian(a)  exp(-a s^2)             variance 2a
    laplace      1 / (1 + s^2 / 2)       variance 1
    uniform      sin(sqrt3 s)/(sqrt3 s)  variance 1
    rademacher   cos(s)                  variance 1
    """
    if kind == "gaussian":
        if a is None or not math.isfinite(a) or a <= 0:
            raise InvalidArgumentError(f"gaussian cf requires a > 0, got {a!r}")
        return _gaussian(float(a))
    if a is not None and kind != "gaussian":
        raise InvalidArgumentError(f"parameter a is only meaningful for gaussian, not {kind!r}")
    if kind == "laplace":
        return _laplace()
    if kind == "uniform":
        return _uniform()
    if kind == "rademacher":
        return _rademacher()
    if kind == "custom":
        raise InvalidArgumentError("use make_custom_cf for user-supplied evaluators")
    raise InvalidArgumentError(f"unknown cf kind {kind!r}; expected one of {CF_KINDS}")


def make_custom_cf(
    value: Evaluator,
    derivs: tuple[Evaluator | None, Evaluator | None, Evaluator | None],
    variance: float,
    decay_a: float | None = None,
    decay_q: float | None = None,
    C2: float | None = None,
    C3: float | None = None,
) -> CharacteristicFunction:
    if not (math.isfinite(variance) and variance > 0):
        raise InvalidArgumentError("variance must be positive")
    return CharacteristicFunction(
        "custom", (), value, tuple(derivs), float(variance), decay_a, decay_q, C2, C3
    )


def _gaussian(a: float) -> CharacteristicFunction:
    def value(s):
        return np.exp(-a * s * s)

    def d1(s):
        return -2.0 * a * s * np.exp(-a * s * s)

    def d2(s):
        return (4.0 * a * a * s * s - 2.0 * a) * np.exp(-a * s * s)

    def d3(s):
        return (12.0 * a * a * s - 8.0 * a**3 * s**3) * np.exp(-a * s * s)

    # sup |phi'''| at a s^2 = (3 - sqrt 6) / 2
    v = math.sqrt((3.0 - math.sqrt(6.0)) / 2.0)
    c3 = a**1.5 * (12.0 * v - 8.0 * v**3) * math.exp(-v * v)
    # exp(-u) <= 1 / (1 + u) gives the decay hypothesis with q = 1
    return CharacteristicFunction(
        "gaussian", (a,), value, (d1, d2, d3), 2.0 * a, a, 1.0, 2.0 * a, c3
    )


def _laplace() -> CharacteristicFunction:
    def value(s):
        return 1.0 / (1.0 + 0.5 * s * s)

    def d1(s):
        return -4.0 * s / (s * s + 2.0) ** 2

    def d2(s):
        return 4.0 * (3.0 * s * s - 2.0) / (s * s + 2.0) ** 3

    def d3(s):
        return -48.0 * s * (s * s - 2.0) / (s * s + 2.0) ** 4

    return CharacteristicFunction("laplace", (), value, (d1, d2, d3), 1.0, 0.5, 1.0, 1.0, None)


def _uniform() -> CharacteristicFunction:
    # uniform on [-sqrt3, sqrt3]; g(y) = sin(y)/y with y = sqrt3 s
    def _sinc_derivative(order):
        series = {
            0: (1.0, -1.0 / 6, 1.0 / 120, -1.0 / 5040),
            1: (-1.0 / 3, 1.0 / 30, -1.0 / 840, 1.0 / 45360),
            2: (-1.0 / 3, 1.0 / 10, -1.0 / 168, 1.0 / 6480),
            3: (1.0 / 5, -1.0 / 42, 1.0 / 1080, -1.0 / 55440),
        }[order]

        def exact(y):
            sy, cy = np.sin(y), np.cos(y)
            if order == 0:
                return sy / y
            if order == 1:
                return (y * cy - sy) / y**2
            if order == 2:
                return (-(y**2) * sy - 2.0 * y * cy + 2.0 * sy) / y**3
            return (-(y**3) * cy + 3.0 * y**2 * sy + 6.0 * y * cy - 6.0 * sy) / y**4

        def fn(s):
            s = np.asarray(s, dtype=float)
            y = _SQRT3 * s
            small = np.abs(y) < _SINC_SERIES_CUTOFF
            y2 = y * y
            # odd-order derivatives are odd in y
            lead = y if order % 2 == 1 else np.ones_like(y)
            approx = lead * (series[0] + y2 * (series[1] + y2 * (series[2] + y2 * series[3])))
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(small, approx, exact(np.where(small, 1.0, y)))
            return _SQRT3**order * out

        return fn

    return CharacteristicFunction(
        "uniform",
        (),
        _sinc_derivative(0),
        (_sinc_derivative(1), _sinc_derivative(2), _sinc_derivative(3)),
        1.0,
    )


def _rademacher() -> CharacteristicFunction:
    return CharacteristicFunction(
        "rademacher",
        (),
        np.cos,
        (lambda s: -np.sin(s), lambda s: -np.cos(s), np.sin),
        1.0,
        None,
        None,
        1.0,
        1.0,
    )


# -- hypothesis checks ------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    check: str
    passed: bool
    worst_margin: float
    location: float

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))
        object.__setattr__(self, "worst_margin", float(self.worst_margin))
        object.__setattr__(self, "location", float(self.location))


def verify_decay(
    cf: CharacteristicFunction, a: float, q: float, s_max: float, grid: int = 10_001
) -> CheckResult:
    """Check |phi(s)| (1 + a s^2)^q <= 1 + 1e-12 on a uniform grid over [0, s_max].

    |phi(-s)| = |phi(s)|, so the negative half-line is covered. The margin
    is max(|phi| (1 + a s^2)^q - 1); zero means equality somewhere.
    """
    if not (a > 0 and q >= 1 and grid >= 100 and s_max > 0):
        raise InvalidArgumentError("verify_decay needs a > 0, q >= 1, grid >= 100, s_max > 0")
    s = np.linspace(0.0, s_max, int(grid))
    ratio = np.abs(cf(s)) * (1.0 + a * s * s) ** q
    i = int(np.argmax(ratio))
    margin = float(ratio[i] - 1.0)
    return CheckResult("decay", margin <= 1e-12, margin, float(s[i]))


def decay_window(a: float, q: float, tail: float = 1e-6) -> float:
    """Smallest s_max with (1 + a s_max^2)^(-q) < tail."""
    return math.sqrt((tail ** (-1.0 / q) - 1.0) / a) * (1.0 + 1e-12)


def estimate_derivative_bounds(
    cf: CharacteristicFunction, s_max: float | None = None, grid: int = 200_001
) -> tuple[float, float]:
    """Suprema of |phi''| and |phi'''| over [0, s_max] (grid scan + golden section).

    ``s_max`` defaults to the window outside which the declared decay
    envelope is below 1e-6; laws without decay parameters must pass it.
    """
    if cf.derivs[1] is None or cf.derivs[2] is None:
        raise UnsupportedError(f"{cf.kind} cf lacks second/third derivative evaluators")
    if s_max is None:
        if not cf.has_decay:
            raise UnsupportedError(
                f"{cf.kind} cf has no decay parameters; pass s_max explicitly"
            )
        s_max = decay_window(cf.decay_a, cf.decay_q)
    return (sup_abs_derivative(cf, 2, s_max, grid)[0], sup_abs_derivative(cf, 3, s_max, grid)[0])


def sup_abs_derivative(
    cf: CharacteristicFunction, order: int, s_max: float, grid: int = 200_001
) -> tuple[float, float]:
    """(sup |phi^(order)|, argmax) over [0, s_max]."""
    s = np.linspace(0.0, s_max, grid)
    mag = np.abs(cf.derivative(s, order))
    i = int(np.argmax(mag))
    best, where = float(mag[i]), float(s[i])
    if 0 < i < grid - 1 and mag[i] > max(mag[i - 1], mag[i + 1]):

        def neg(t):
            return -float(np.abs(cf.derivative(np.array([t]), order))[0])

        res = minimize_scalar(neg, bracket=(s[i - 1], s[i], s[i + 1]), method="golden", tol=1e-10)
        if s[i - 1] <= res.x <= s[i + 1] and -res.fun > best:
            best, where = float(-res.fun), float(res.x)
    return best, where


def derivative_consistency(
    cf: CharacteristicFunction, points: np.ndarray, step: float = 1e-5
) -> CheckResult:
    """Largest deviation between analytic derivatives and central differences."""
    worst, where = 0.0, float("nan")
    for order in (1, 2, 3):
        lower = cf.derivative(points - step, order - 1)
        upper = cf.derivative(points + step, order - 1)
        fd = (upper - lower) / (2.0 * step)
        err = np.abs(fd - cf.derivative(points, order))
        i = int(np.argmax(err))
        if err[i] > worst:
            worst, where = float(err[i]), float(points[i])
    return CheckResult("derivative_consistency", worst <= 1e-6, worst, where)


def dominates_gaussian(cf: CharacteristicFunction, a: float, s_max: float, grid: int = 10_001):
    """Check Re phi(s) >= exp(-a s^2) on [0, s_max]; margin is the largest shortfall."""
    s = np.linspace(0.0, s_max, grid)
    gap = np.exp(-a * s * s) - cf(s).real
    i = int(np.argmax(gap))
    return CheckResult("dominates_gaussian", gap[i] <= 1e-15, float(gap[i]), float(s[i]))


def cf_report(
    cf: CharacteristicFunction,
    a: float | None = None,
    q: float | None = None,
    C2: float | None = None,
    C3: float | None = None,
    s_max: float | None = None,
    grid: int = 10_001,
) -> list[CheckResult]:
    """Structural checks plus decay and derivative-bound checks.

    Declared (a, q, C2, C3) default to those carried by ``cf``; a declared
    C2/C3 fails when the numerical supremum exceeds it by more than 1e-4.
    """
    a = cf.decay_a if a is None else a
    q = cf.decay_q if q is None else q
    C2 = cf.C2 if C2 is None else C2
    C3 = cf.C3 if C3 is None else C3
    if s_max is None:
        s_max = decay_window(a, q) if (a and q) else 50.0
    zero = np.zeros(1)
    out = []
    d = abs(complex(cf(zero)[0]) - 1.0)
    out.append(CheckResult("phi0_equals_1", d <= 1e-14, d, 0.0))
    s = np.linspace(-s_max, s_max, 2 * grid + 1)
    vals = cf(s)
    mod = np.abs(vals) - 1.0
    i = int(np.argmax(mod))
    out.append(CheckResult("modulus_le_1", mod[i] <= 1e-14, float(mod[i]), float(s[i])))
    asym = np.abs(cf(-s) - np.conj(vals))
    i = int(np.argmax(asym))
    out.append(CheckResult("conjugate_symmetry", asym[i] <= 1e-14, float(asym[i]), float(s[i])))
    d = abs(complex(cf.derivative(zero, 1)[0]))
    out.append(CheckResult("mean_zero", d <= 1e-14, d, 0.0))
    d = abs(complex(cf.derivative(zero, 2)[0]) + cf.variance)
    out.append(CheckResult("second_derivative_is_minus_variance", d <= 1e-12, d, 0.0))
    out.append(derivative_consistency(cf, np.linspace(-10.0, 10.0, 101)))
    if a is not None and q is not None:
        out.append(verify_decay(cf, a, q, s_max, grid))
    for name, order, declared in (("C2_bound", 2, C2), ("C3_bound", 3, C3)):
        if declared is None:
            continue
        est, where = sup_abs_derivative(cf, order, s_max)
        out.append(CheckResult(name, est <= declared + 1e-4, est - declared, where))
    return out
