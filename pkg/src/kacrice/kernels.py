"""Diagonal covariance kernels of P_n and the intensity factor calK_n(x).

    K(x)   = sum f_j(x)^2
    K01(x) = sum f_j(x) f_j'(x)
    K11(x) = sum f_j'(x)^2
    calK   = sqrt(K K11 - K01^2) / K
    tau    = sqrt((K K11 - K01^2) / (K K11))

plus closed forms for the Bergman family on the unit disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import BasisFamily, make_basis
from .errors import BoundaryError, DegeneratePointError, InvalidArgumentError

# tau^2 below which the two-pass determinant is replaced by the
# (cancellation-free) Lagrange identity
_CANCEL_THRESHOLD = 1e-8
# closed form loses ~eps/|1-t|^4 near t = 1; measured <= 2e-11 relative outside this band
_SINGULAR_BAND = 0.1


@dataclass(frozen=True)
class KernelDiagonal:
    """Kernel values at one point.

    ``K``, ``K01`` and ``K11`` are stored divided by ``exp(2 * log_scale)``;
    ``log_scale`` is 0 unless the true values would overflow. ``calK`` and
    ``tau`` are ratios and carry no scale.
    """

    x: float
    K: float
    K01: float
    K11: float
    calK: float
    tau: float
    log_scale: float = 0.0

    @property
    def gram_det(self) -> float:
        """K K11 - K01^2 in the stored (scaled) units, floored at 0."""
        return max(self.K * self.K11 - self.K01 * self.K01, 0.0)

    def true_kernels(self) -> tuple[float, float, float]:
        s = math.exp(2.0 * self.log_scale)
        return self.K * s, self.K01 * s, self.K11 * s


def kernel_diagonal(basis: BasisFamily, x: float) -> KernelDiagonal:
    """Kernels at ``x`` by compensated summation over the family members."""
    vals, ders, log_scale = basis.scaled_evaluate(x)
    K = math.fsum(vals * vals)
    K01 = math.fsum(vals * ders)
    K11 = math.fsum(ders * ders)
    if K == 0.0:
        raise DegeneratePointError(float(x))
    calK, tau = _ratios(K, K01, K11, vals, ders)
    return KernelDiagonal(float(x), K, K01, K11, calK, tau, log_scale)


def bergman_kernel_closed(n: int, x: float) -> KernelDiagonal:
    """Bergman kernels from the closed form of sum (k + 1) t^k / pi, t = x^2.

    With S(t) = sum_{k<=n} (k+1) t^k = N(t) / (1-t)^2,
    N(t) = 1 - (n+2) t^(n+1) + (n+1) t^(n+2):

        K   = S / pi
        K01 = x S'(t) / pi
        K11 = (S'(t) + t S''(t)) / pi

    Direct summation takes over inside |1 - t| < 0.1 (removable
    singularity) and where t^(n+2) would overflow.
    """
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise InvalidArgumentError(f"n must be a non-negative integer, got {n!r}")
    n = int(n)
    x = float(x)
    if not math.isfinite(x):
        raise InvalidArgumentError(f"evaluation point must be finite, got {x!r}")
    if n == 0:
        return KernelDiagonal(x, 1.0 / math.pi, 0.0, 0.0, 0.0, 0.0)
    t = x * x
    u = 1.0 - t
    if abs(u) < _SINGULAR_BAND or (t > 1.0 and (n + 2) * math.log2(t) > 480.0):
        return kernel_diagonal(make_basis("bergman", n), x)
    c = (n + 1.0) * (n + 2.0)
    tn = t**n
    N = 1.0 - (n + 2.0) * tn * t + (n + 1.0) * tn * t * t
    S = N / u**2
    S1 = -c * tn / u + 2.0 * N / u**3
    # N'' = c t^(n-1) (t - n u),  N' = -c t^n u
    S2 = c * t ** (n - 1) * (t - n * u) / u**2 - 4.0 * c * tn / u**2 + 6.0 * N / u**4
    K = S / math.pi
    K01 = x * S1 / math.pi
    K11 = (S1 + t * S2) / math.pi
    det = K * K11 - K01 * K01
    if det < _CANCEL_THRESHOLD * K * K11:
        return kernel_diagonal(make_basis("bergman", n), x)
    calK = math.sqrt(det) / K
    tau = math.sqrt(det / (K * K11))
    return KernelDiagonal(x, K, K01, K11, calK, min(tau, 1.0))


def bergman_calK_limit(x: float) -> float:
    """n -> infinity limit of calK_n(x) for the Bergman family, |x| != 1."""
    x = float(x)
    t = x * x
    if t == 1.0:
        raise BoundaryError(
            "no finite limit at |x| = 1; use calK_n(+-1) = sqrt(n (n + 3) / 2) / 3"
        )
    if t < 1.0:
        return math.sqrt(2.0) / (1.0 - t)
    return 1.0 / (t - 1.0)


def bergman_calK_boundary(n: int) -> float:
    """calK_n(+-1) for the Bergman family."""
    return math.sqrt(n * (n + 3) / 2.0) / 3.0


def _ratios(K, K01, K11, vals=None, ders=None) -> tuple[float, float]:
    if K11 == 0.0:
        return 0.0, 0.0
    if vals is not None:
        # K K11 - K01^2 = K sum (f'_k - (K01/K) f_k)^2: relative error ~eps/tau
        # instead of ~eps/tau^2 for the direct difference
        r = ders - (K01 / K) * vals
        S = math.fsum(r * r)
        if S < _CANCEL_THRESHOLD * K11:
            total, ev = _lagrange_det(vals, ders)
            # S = det / K with det = total * 2^(4 ev)
            S = total / math.ldexp(K, -4 * ev) if total else 0.0
        return math.sqrt(S / K), min(math.sqrt(S / K11), 1.0)
    # power-of-two normalisation keeps the products finite and exact
    _, e = math.frexp(max(K, K11))
    k = math.ldexp(K, -e)
    k01 = math.ldexp(K01, -e)
    k11 = math.ldexp(K11, -e)
    det = max(k * k11 - k01 * k01, 0.0)
    calK = math.sqrt(det) / k
    tau = math.sqrt(det / (k * k11))
    return calK, min(tau, 1.0)


def _lagrange_det(vals: np.ndarray, ders: np.ndarray) -> tuple[float, int]:
    """K K11 - K01^2 as sum_{j<k} (f_j f_k' - f_k f_j')^2, returned as (m, e) = m * 2^(4e)."""
    peak = float(max(np.max(np.abs(vals)), np.max(np.abs(ders))))
    if peak == 0.0:
        return 0.0, 0
    _, e = math.frexp(peak)
    v = np.ldexp(vals, -e)
    d = np.ldexp(ders, -e)
    minors = np.outer(v, d) - np.outer(d, v)
    return 0.5 * float(np.sum(minors * minors)), e
