"""Spanning-function families f_0, ..., f_n of the random sum P_n = sum eta_k f_k.

Four families are supported, all polynomial:

    monomial     f_k(x) = x^k
    elliptic     f_k(x) = sqrt(C(n, k)) x^k
    bergman      f_k(x) = sqrt((k + 1) / pi) x^k
    recurrence   p_{k+1} = (a_k x + b_k) p_k - c_k p_{k-1},  p_{-1} = 0, p_0 = const

The first three are "power" families, f_k = w_k x^k, which lets evaluation far
from the origin be done in a rescaled form without overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, WeightOverflowError

FAMILIES = ("monomial", "elliptic", "bergman", "recurrence")
POWER_FAMILIES = ("monomial", "elliptic", "bergman")

# log2 headroom for direct evaluation; squares and kernel sums must stay finite
_SAFE_LOG2 = 480.0
_RESCALE_LOG2 = 400


@dataclass(frozen=True)
class BasisFamily:
    """Immutable description of f_0, ..., f_n.

    ``scale`` multiplies every member; it exists so that scale invariance of
    the intensity can be checked without a separate family type.
    """

    kind: str
    n: int
    recurrence_coeffs: tuple[tuple[float, float, float], ...] | None = None
    p0: float = 1.0
    scale: float = 1.0
    _weights: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def is_power(self) -> bool:
        return self.kind in POWER_FAMILIES

    @property
    def weights(self) -> np.ndarray:
        """w_k with f_k = w_k x^k (power families only)."""
        if self._weights is None:
            raise InvalidArgumentError(f"{self.kind} family has no power weights")
        return self._weights

    def describe(self) -> str:
        return f"{self.kind}(n={self.n})"

    # -- evaluation -------------------------------------------------------

    def evaluate(self, x: float) -> tuple[np.ndarray, np.ndarray]:
        """Return (f_k(x), f_k'(x)) for k = 0..n, without rescaling."""
        x = _check_finite(x)
        if self.is_power:
            return _power_eval(self.weights, x)
        vals, ders, exps = _recurrence_eval(self, x, rescale=False)
        return vals, ders

    def scaled_evaluate(self, x: float) -> tuple[np.ndarray, np.ndarray, float]:
        """Return (values, derivatives, log_scale) with f_k = values_k * exp(log_scale).

        The common factor is chosen so that nothing overflows; log_scale is
        0.0 whenever direct evaluation is safe, in which case the arrays are
        bit-identical to :meth:`evaluate`.
        """
        x = _check_finite(x)
        if not self.is_power:
            vals, ders, e = _recurrence_eval(self, x, rescale=True)
            return vals, ders, e * math.log(2.0)
        w = self.weights
        wmax = float(np.max(np.abs(w)))
        ax = abs(x)
        log2_peak = math.log2(wmax) + self.n * max(0.0, math.log2(ax) if ax > 0 else 0.0)
        log2_peak += math.log2(self.n + 1)
        if log2_peak < _SAFE_LOG2:
            vals, ders = _power_eval(w, x)
            return vals, ders, 0.0
        k = np.arange(self.n + 1)
        wn = w / wmax
        if ax <= 1.0:
            vals, ders = _power_eval(wn, x)
            return vals, ders, math.log(wmax)
        # f_k = w_k x^k = (w_k / W) x^n r^(n-k), r = 1/x; x^n kept as sign * exp(log_scale)
        r = 1.0 / x
        sign = -1.0 if (x < 0 and self.n % 2 == 1) else 1.0
        with np.errstate(under="ignore"):
            vals = sign * wn * np.power(r, self.n - k)
            ders = sign * wn * k * np.power(r, self.n - k + 1)
        return vals, ders, self.n * math.log(ax) + math.log(wmax)

    def monomial_coefficients(self) -> np.ndarray:
        """Matrix C with f_k(x) = sum_j C[k, j] x^j."""
        size = self.n + 1
        if self.is_power:
            return np.diag(self.weights)
        C = np.zeros((size, size))
        C[0, 0] = self.p0 * self.scale
        prev = np.zeros(size)
        for k in range(self.n):
            a, b, c = self.recurrence_coeffs[k]
            cur = C[k]
            nxt = b * cur - c * prev
            nxt[1:] += a * cur[:-1]
            C[k + 1] = nxt
            prev = cur
        return C


def make_basis(
    kind: str,
    n: int,
    recurrence_coeffs: Sequence[Sequence[float]] | None = None,
    p0: float = 1.0,
    scale: float = 1.0,
) -> BasisFamily:
    """Build one of the supported families.

    Elliptic weights are computed as exp(0.5 * log C(n, k)) via log-Gamma, so
    they stay finite until sqrt(C(n, n/2)) itself leaves double range.
    """
    if kind not in FAMILIES:
        raise InvalidArgumentError(f"unknown basis family {kind!r}; expected one of {FAMILIES}")
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise InvalidArgumentError(f"n must be a non-negative integer, got {n!r}")
    n = int(n)
    if not (math.isfinite(scale) and scale > 0):
        raise InvalidArgumentError(f"scale must be positive and finite, got {scale!r}")
    if kind == "recurrence":
        if recurrence_coeffs is None:
            raise InvalidArgumentError("recurrence family requires recurrence_coeffs")
        coeffs = tuple(tuple(float(v) for v in row) for row in recurrence_coeffs)
        if len(coeffs) < n:
            raise InvalidArgumentError(
                f"need at least n={n} recurrence coefficient triples, got {len(coeffs)}"
            )
        if any(len(row) != 3 for row in coeffs):
            raise InvalidArgumentError("recurrence coefficients must be (a, b, c) triples")
        if not all(math.isfinite(v) for row in coeffs for v in row) or not math.isfinite(p0):
            raise InvalidArgumentError("recurrence coefficients must be finite")
        return BasisFamily(kind, n, coeffs[:n], float(p0), float(scale))
    if recurrence_coeffs is not None:
        raise InvalidArgumentError(f"recurrence_coeffs given for non-recurrence family {kind!r}")
    return BasisFamily(kind, n, None, 1.0, float(scale), _power_weights(kind, n) * scale)


def eval_with_derivative(basis: BasisFamily, x: float) -> np.ndarray:
    """Array of shape (n + 1, 2) holding (f_k(x), f_k'(x)) row by row."""
    vals, ders = basis.evaluate(x)
    return np.column_stack([vals, ders])


def chebyshev_t_coeffs(n: int) -> list[tuple[float, float, float]]:
    """Recurrence triples for Chebyshev polynomials of the first kind."""
    return [(1.0, 0.0, 0.0)] + [(2.0, 0.0, 1.0)] * max(n - 1, 0)


def _power_weights(kind: str, n: int) -> np.ndarray:
    k = np.arange(n + 1)
    if kind == "monomial":
        return np.ones(n + 1)
    if kind == "bergman":
        return np.sqrt((k + 1) / math.pi)
    log_binom = np.array(
        [math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1) for j in range(n + 1)]
    )
    half = 0.5 * log_binom
    if half.max() >= math.log(np.finfo(float).max):
        raise WeightOverflowError(f"elliptic weights sqrt(C({n}, k)) overflow double precision")
    w = np.exp(half)
    # exact ends; lgamma rounding would otherwise leave 1 +- ulp
    w[0] = w[-1] = 1.0
    return w


def _power_eval(w: np.ndarray, x: float) -> tuple[np.ndarray, np.ndarray]:
    n = len(w) - 1
    k = np.arange(n + 1)
    vals = w * np.power(x, k)
    ders = np.zeros(n + 1)
    if n >= 1:
        ders[1:] = w[1:] * k[1:] * np.power(x, k[1:] - 1)
    return vals, ders


def _recurrence_eval(basis: BasisFamily, x: float, rescale: bool):
    n = basis.n
    vals = np.empty(n + 1)
    ders = np.empty(n + 1)
    exps = np.zeros(n + 1, dtype=np.int64)
    p_prev, d_prev = 0.0, 0.0
    p, d = basis.p0 * basis.scale, 0.0
    e = 0
    vals[0], ders[0] = p, d
    limit = 2.0**_RESCALE_LOG2
    for k in range(n):
        a, b, c = basis.recurrence_coeffs[k]
        lin = a * x + b
        p_next = lin * p - c * p_prev
        d_next = a * p + lin * d - c * d_prev
        p_prev, d_prev, p, d = p, d, p_next, d_next
        if rescale and max(abs(p), abs(d)) > limit:
            p_prev = math.ldexp(p_prev, -_RESCALE_LOG2)
            d_prev = math.ldexp(d_prev, -_RESCALE_LOG2)
            p = math.ldexp(p, -_RESCALE_LOG2)
            d = math.ldexp(d, -_RESCALE_LOG2)
            e += _RESCALE_LOG2
        vals[k + 1], ders[k + 1], exps[k + 1] = p, d, e
    if e == 0:
        return vals, ders, 0
    with np.errstate(under="ignore"):
        shift = (exps - e).astype(np.int64)
        return np.ldexp(vals, shift), np.ldexp(ders, shift), e


def _check_finite(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise InvalidArgumentError(f"evaluation point must be finite, got {x!r}")
    return x
