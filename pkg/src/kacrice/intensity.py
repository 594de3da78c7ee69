"""Real-zero intensity rho_n(x) of P_n = sum eta_k f_k.

Three ways to get at rho_n:

* ``gaussian_intensity``: rho_n = calK_n / pi, exact for any exp(-a s^2) law.
* ``intensity_nongaussian``: rho_n = calK_n * int |eta| D(0, eta; x) d eta, where
  D is the joint density of g_n = sum mu_k eta_k and h_n = sum lambda_k eta_k,
  recovered by Fourier inversion of Phi_n(alpha, beta) = prod phi(mu_k alpha + lambda_k beta).
* ``intensity_upper_bound``: calK_n times an explicit factor depending only on
  (a, q, C2, C3).

Inversion details. Writing F(beta) = (1/2pi) int Phi_n(alpha, beta) d alpha for
the Fourier transform (in eta) of D(0, .; x), the |eta|-moment is evaluated
with |eta| = (1/pi) int (1 - cos(beta eta)) / beta^2 d beta:

    int |eta| D(0, eta) d eta = (2/pi) int_0^inf (F(0) - Re F(beta)) / beta^2 d beta

Both integrals run over unbounded ranges and are mapped onto finite ones
by t = c tan(theta) before Gauss-Legendre quadrature; the map scale c is
``QuadratureSpec.gamma_radius``. The slice route (``route="slices"``)
instead tabulates D(0, eta) on an eta grid and integrates |eta| D directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .basis import BasisFamily
from .charfn import CharacteristicFunction
from .errors import (
    DegenerateFrameError,
    DegenerateIntervalError,
    DegeneratePointError,
    HypothesisViolationError,
    InvalidArgumentError,
    InversionInconsistencyError,
)
from .kernels import KernelDiagonal, kernel_diagonal

# tau below this is treated as a degenerate frame
_TAU_FLOOR = 1e-13
_MINOR_THRESHOLD = 1e-4
_PHI_CHUNK = 1 << 21

_LOG8 = math.log(8.0)
_PI_SQRT3 = math.pi * math.sqrt(3.0)


@dataclass(frozen=True)
class NormalizedFrame:
    """Unit vectors mu (along P_n) and lambda (along P_n', orthogonalised)."""

    x: float
    mu: np.ndarray
    nu: np.ndarray
    lam: np.ndarray
    tau: float
    kd: KernelDiagonal

    @property
    def mu_dot_nu(self) -> float:
        return math.fsum(self.mu * self.nu)

    def omega(self, alpha, beta) -> np.ndarray:
        """omega_k = mu_k alpha + lambda_k beta, broadcast over a trailing k axis."""
        alpha = np.asarray(alpha, dtype=float)[..., None]
        beta = np.asarray(beta, dtype=float)[..., None]
        return alpha * self.mu + beta * self.lam


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature controls for the Fourier-inversion path.

    gamma_radius  scale c of the tangent map t = c tan(theta) on each gamma axis;
                  None picks sqrt(2 / variance) of the cf
    gamma_nodes   Gauss-Legendre nodes for the alpha integral
    eta_radius    truncation of the eta grid (slice route only); None picks
                  16 standard deviations
    eta_nodes     nodes for the beta integral (moment route) or per eta half-line
                  (slice route)
    target_tol    tolerance used for the imaginary-residual check and by
                  ``expected_count``
    """

    gamma_radius: float | None = None
    gamma_nodes: int = 128
    eta_radius: float | None = None
    eta_nodes: int = 256
    target_tol: float = 1e-6

    def __post_init__(self):
        for name in ("gamma_radius", "eta_radius"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise InvalidArgumentError(f"{name} must be positive, got {v!r}")
        for name in ("gamma_nodes", "eta_nodes"):
            v = getattr(self, name)
            if int(v) != v or v < 32:
                raise InvalidArgumentError(f"{name} must be an integer >= 32, got {v!r}")
        if not (math.isfinite(self.target_tol) and self.target_tol > 0):
            raise InvalidArgumentError(f"target_tol must be positive, got {self.target_tol!r}")

    def halved(self) -> "QuadratureSpec":
        return replace(
            self, gamma_nodes=max(self.gamma_nodes // 2, 16), eta_nodes=max(self.eta_nodes // 2, 16)
        )

    def doubled(self) -> "QuadratureSpec":
        return replace(self, gamma_nodes=2 * self.gamma_nodes, eta_nodes=2 * self.eta_nodes)


@dataclass(frozen=True)
class BoundConstants:
    k1: float
    k2: float
    k3: float
    k4: float
    K1: float
    K2: float


@dataclass(frozen=True)
class IntensityResult:
    x: float
    rho: float
    method: str
    error_estimate: float = 0.0
    spec: QuadratureSpec | None = None


@dataclass(frozen=True)
class PartitionReport:
    feasible: bool
    min_ratio: float
    groups: tuple[tuple[int, ...], ...]
    exact: bool


# -- frame ----------------------------------------------------------------------


def normalized_frame(basis: BasisFamily, x: float) -> NormalizedFrame:
    """mu = f / sqrt(K), nu = f' / sqrt(K11), lambda = (K f' - K01 f) / norm.

    Where tau is small the numerator K f'_k - K01 f_k is formed as
    sum_j f_j (f_j f'_k - f_k f'_j), which avoids the cancellation.
    """
    kd = kernel_diagonal(basis, x)
    vals, ders, _ = basis.scaled_evaluate(x)
    if kd.K11 == 0.0 or kd.tau < _TAU_FLOOR:
        raise DegenerateFrameError(float(x))
    mu = vals / math.sqrt(kd.K)
    nu = ders / math.sqrt(kd.K11)
    if kd.tau < _MINOR_THRESHOLD:
        peak = float(max(np.max(np.abs(vals)), np.max(np.abs(ders))))
        v = vals / peak
        d = ders / peak
        num = v @ (np.outer(v, d) - np.outer(d, v))
    else:
        num = nu - math.fsum(nu * mu) * mu
    norm = math.sqrt(math.fsum(num * num))
    if norm == 0.0:
        raise DegenerateFrameError(float(x))
    lam = num / norm
    # one reorthogonalisation pass pins sum(lam mu) at rounding level
    lam = lam - math.fsum(lam * mu) * mu
    lam = lam / math.sqrt(math.fsum(lam * lam))
    return NormalizedFrame(float(x), mu, nu, lam, kd.tau, kd)


def phi_n(frame: NormalizedFrame, cf: CharacteristicFunction, alpha, beta) -> np.ndarray:
    """Joint characteristic function prod_k phi(mu_k alpha + lambda_k beta).

    ``alpha`` and ``beta`` broadcast against each other; the product runs
    over k in index order.
    """
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(beta, float))
    flat_a = alpha.ravel()
    flat_b = beta.ravel()
    out = np.empty(flat_a.shape, dtype=complex)
    size = frame.mu.size
    step = max(1, _PHI_CHUNK // size)
    for start in range(0, flat_a.size, step):
        sl = slice(start, start + step)
        w = frame.omega(flat_a[sl], flat_b[sl])
        out[sl] = np.prod(cf(w), axis=-1)
    if alpha.ndim == 0:
        return out[0]
    return out.reshape(alpha.shape)


# -- quadrature helpers -------------------------------------------------------------


@lru_cache(maxsize=32)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _tan_nodes(n: int, scale: float, half: bool) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for int over R (or (0, inf) if ``half``) via t = scale tan(theta)."""
    z, w = _gauss_legendre(n)
    lo, hi = (0.0, math.pi / 2) if half else (-math.pi / 2, math.pi / 2)
    theta = 0.5 * (hi - lo) * z + 0.5 * (hi + lo)
    wt = 0.5 * (hi - lo) * w
    c = np.cos(theta)
    return scale * np.tan(theta), wt * scale / (c * c)


def _gamma_scale(cf: CharacteristicFunction, spec: QuadratureSpec) -> float:
    if spec.gamma_radius is not None:
        return spec.gamma_radius
    return math.sqrt(2.0 / cf.variance)


def _marginal(frame, cf, betas, spec) -> np.ndarray:
    """F(beta) = (1/2pi) int Phi_n(alpha, beta) d alpha on the given betas."""
    alphas, wa = _tan_nodes(spec.gamma_nodes, _gamma_scale(cf, spec), half=False)
    values = phi_n(frame, cf, alphas[None, :], np.asarray(betas)[:, None])
    return values @ wa / (2.0 * math.pi)


def _abs_moment(frame, cf, spec) -> float:
    """int |eta| D(0, eta) d eta through the (1 - cos) representation of |eta|."""
    betas, wb = _tan_nodes(spec.eta_nodes, _gamma_scale(cf, spec), half=True)
    F = _marginal(frame, cf, np.concatenate([[0.0], betas]), spec)
    f0 = F[0].real
    integrand = (f0 - F[1:].real) / (betas * betas)
    return 2.0 / math.pi * float(integrand @ wb)


def _slice_values(frame, cf, etas, spec) -> np.ndarray:
    betas, wb = _tan_nodes(spec.gamma_nodes, _gamma_scale(cf, spec), half=False)
    F = _marginal(frame, cf, betas, spec)
    kernel = np.exp(-1j * np.outer(np.asarray(etas, float), betas))
    out = kernel @ (F * wb) / (2.0 * math.pi)
    residual = float(np.max(np.abs(out.imag))) if out.size else 0.0
    if residual > 10.0 * spec.target_tol:
        raise InversionInconsistencyError(
            f"imaginary residual {residual:.3g} of the inverted density at x={frame.x!r} "
            f"exceeds 10 x target_tol"
        )
    return out.real


def _slice_moment(frame, cf, spec) -> float:
    radius = spec.eta_radius or 16.0 * math.sqrt(cf.variance)
    z, w = _gauss_legendre(spec.eta_nodes)
    # split at 0: D(0, eta) may have a kink there
    half = 0.5 * radius * (z + 1.0)
    wh = 0.5 * radius * w
    etas = np.concatenate([-half, half])
    weights = np.concatenate([wh, wh])
    D = _slice_values(frame, cf, etas, spec)
    return float((np.abs(etas) * D) @ weights)


# -- public intensity operations ----------------------------------------------------


def gaussian_intensity(basis: BasisFamily, x: float) -> IntensityResult:
    """rho_n(x) = calK_n(x) / pi for exp(-a s^2) coefficients, any a > 0."""
    kd = kernel_diagonal(basis, x)
    return IntensityResult(float(x), kd.calK / math.pi, "gaussian-closed-form")


def joint_density_slice(
    frame: NormalizedFrame, cf: CharacteristicFunction, eta: float, spec: QuadratureSpec | None = None
) -> float:
    """D(0, eta; x): joint density of (g_n, h_n) at (0, eta), by 2-D Fourier inversion."""
    spec = spec or QuadratureSpec()
    _require_decay(cf)
    return float(_slice_values(frame, cf, np.array([float(eta)]), spec)[0])


def intensity_nongaussian(
    basis: BasisFamily,
    cf: CharacteristicFunction,
    x: float,
    spec: QuadratureSpec | None = None,
    route: str = "moment",
) -> IntensityResult:
    """rho_n(x) by numerical Fourier inversion of Phi_n.

    ``route="moment"`` (default) uses the (1 - cos) identity and needs no
    truncation. ``route="slices"`` tabulates D(0, eta) on [-eta_radius,
    eta_radius]; it is only accurate when phi decays fast enough for the
    oscillatory beta integral to be resolved (e.g. Gaussian laws), and is
    kept as an independent cross-check.

    ``error_estimate`` is |rho(nodes) - rho(nodes / 2)|.
    """
    spec = spec or QuadratureSpec()
    _require_decay(cf)
    if route == "moment":
        moment = _abs_moment
    elif route == "slices":
        moment = _slice_moment
    else:
        raise InvalidArgumentError(f"unknown inversion route {route!r}")
    frame = normalized_frame(basis, x)
    calK = frame.kd.calK
    fine = calK * moment(frame, cf, spec)
    coarse = calK * moment(frame, cf, spec.halved())
    err = max(abs(fine - coarse), 4.0 * np.finfo(float).eps * abs(fine))
    return IntensityResult(float(x), fine, "fourier-inversion", err, spec)


def bound_constants(a: float, q: float, C2: float, C3: float) -> BoundConstants:
    """Constants of the explicit intensity bound.

    k1 = (1 - ln 2 + (pi sqrt3 + ln 8) / 9) / pi     k2 = (pi sqrt3 + ln 8) / (9 pi)
    k3 = (1 - ln 2) / sqrt2                          k4 = sqrt2 (pi sqrt3 + ln 8) / 9
    K1 = 1/(2 pi a q) + C2 / (2 a q)^(3/2)
    K2 = 1/(2 pi a q) + C2^2 / (sqrt2 (a q)^(3/2)) + C3 / (2 pi a q)
    """
    _check_bound_inputs(a, q, C2, C3)
    tail = _PI_SQRT3 + _LOG8
    one_minus_ln2 = 1.0 - math.log(2.0)
    k1 = (one_minus_ln2 + tail / 9.0) / math.pi
    k2 = tail / (9.0 * math.pi)
    k3 = one_minus_ln2 / math.sqrt(2.0)
    k4 = math.sqrt(2.0) * tail / 9.0
    aq = a * q
    K1 = 1.0 / (2.0 * math.pi * aq) + C2 / (2.0 * aq) ** 1.5
    K2 = 1.0 / (2.0 * math.pi * aq) + C2 * C2 / (math.sqrt(2.0) * aq**1.5) + C3 / (2.0 * math.pi * aq)
    return BoundConstants(k1, k2, k3, k4, K1, K2)


def bound_factor(a: float, q: float, C2: float, C3: float) -> float:
    """(1/(a q)) [k1 + C3 k2 + C2 (k3 + C2 k4) / sqrt(a q)]."""
    c = bound_constants(a, q, C2, C3)
    aq = a * q
    return (c.k1 + C3 * c.k2 + C2 * (c.k3 + C2 * c.k4) / math.sqrt(aq)) / aq


def intensity_upper_bound(
    basis: BasisFamily, x: float, a: float, q: float, C2: float, C3: float
) -> IntensityResult:
    factor = bound_factor(a, q, C2, C3)
    kd = kernel_diagonal(basis, x)
    return IntensityResult(float(x), kd.calK * factor, "upper-bound")


def _check_bound_inputs(a, q, C2, C3):
    for name, v in (("a", a), ("q", q), ("C2", C2), ("C3", C3)):
        if not math.isfinite(v):
            raise InvalidArgumentError(f"{name} must be finite, got {v!r}")
    if q < 1:
        raise HypothesisViolationError(f"the bound requires q >= 1, got q={q!r}")
    if a <= 0 or C2 <= 0 or C3 <= 0:
        raise InvalidArgumentError("the bound requires a > 0, C2 > 0, C3 > 0")


def _require_decay(cf: CharacteristicFunction):
    if not cf.has_decay:
        raise InvalidArgumentError(
            f"{cf.describe()} carries no decay parameters (a, q); Fourier inversion needs them"
        )


# -- partition diagnostic -----------------------------------------------------------


def partition_feasibility(weights: Sequence[float], T: int) -> PartitionReport:
    """Best split of the indices into T groups, maximising the smallest group sum.

    ``min_ratio`` is that smallest sum divided by S / T; the split is
    feasible when the ratio reaches 1 - 1e-9. Exact search up to 20
    weights, longest-processing-time greedy beyond.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidArgumentError("weights must be a finite non-negative vector")
    if int(T) != T or T < 2:
        raise InvalidArgumentError(f"T must be an integer >= 2, got {T!r}")
    T = int(T)
    S = math.fsum(w)
    if S <= 0:
        raise InvalidArgumentError("weights must have a positive sum")
    if T > int(np.count_nonzero(w)):
        return PartitionReport(False, 0.0, (), True)
    target = S / T
    exact = w.size <= 20
    best, groups = (_maxmin_exact if exact else _maxmin_greedy)(w, T, target)
    ratio = float(best / target)
    return PartitionReport(bool(ratio >= 1.0 - 1e-9), ratio, groups, exact)


def _maxmin_greedy(w, T, target):
    order = np.argsort(-w, kind="stable")
    sums = [0.0] * T
    groups = [[] for _ in range(T)]
    for i in order:
        g = min(range(T), key=lambda j: sums[j])
        sums[g] += w[i]
        groups[g].append(int(i))
    return min(sums), tuple(tuple(sorted(g)) for g in groups)


def _maxmin_exact(w, T, target):
    order = [int(i) for i in np.argsort(-w, kind="stable")]
    vals = [float(w[i]) for i in order]
    suffix = np.concatenate([np.cumsum(vals[::-1])[::-1], [0.0]])
    best_val, best_assign = _maxmin_greedy(w, T, target)
    best = [best_val, None]
    assign = [0] * len(vals)
    sums = [0.0] * T
    stop = target * (1.0 - 1e-12)

    def dfs(i):
        if best[0] >= stop:
            return
        if i == len(vals):
            m = min(sums)
            if m > best[0]:
                best[0], best[1] = m, list(assign)
            return
        if min(min(sums) + suffix[i], target) <= best[0]:
            return
        seen = set()
        for g in range(T):
            if sums[g] in seen:
                continue
            seen.add(sums[g])
            sums[g] += vals[i]
            assign[i] = g
            dfs(i + 1)
            sums[g] -= vals[i]

    dfs(0)
    if best[1] is None:
        return best_val, best_assign
    groups = [[] for _ in range(T)]
    for pos, g in enumerate(best[1]):
        groups[g].append(order[pos])
    return best[0], tuple(tuple(sorted(g)) for g in groups)


# -- expected counts ----------------------------------------------------------------


@dataclass(frozen=True)
class CountResult:
    u: float
    v: float
    expected_count: float
    abserr: float
    tol: float


def intensity_function(
    basis: BasisFamily,
    method: str = "gaussian",
    cf: CharacteristicFunction | None = None,
    bound: tuple[float, float, float, float] | None = None,
    spec: QuadratureSpec | None = None,
) -> Callable[[float], float]:
    """x -> rho_n(x) for one of the methods gaussian / fourier / bound."""
    if method == "gaussian":
        return lambda x: gaussian_intensity(basis, x).rho
    if method == "fourier":
        if cf is None:
            raise InvalidArgumentError("fourier method needs a characteristic function")
        return lambda x: intensity_nongaussian(basis, cf, x, spec).rho
    if method == "bound":
        if bound is None:
            raise InvalidArgumentError("bound method needs (a, q, C2, C3)")
        factor = bound_factor(*bound)
        return lambda x: kernel_diagonal(basis, x).calK * factor
    raise InvalidArgumentError(f"unknown intensity method {method!r}")


def expected_count(
    basis: BasisFamily,
    u: float,
    v: float,
    method: str = "gaussian",
    cf: CharacteristicFunction | None = None,
    bound: tuple[float, float, float, float] | None = None,
    spec: QuadratureSpec | None = None,
    tol: float | None = None,
) -> CountResult:
    """E[N_n([u, v])] = int_u^v rho_n(x) dx by adaptive Gauss-Kronrod quadrature.

    The integral is taken in theta = arctan(x), so infinite endpoints are
    allowed, and is split at x = -1, 0, 1 where Kac- and Bergman-type
    intensities have boundary layers.
    """
    u, v = float(u), float(v)
    if not u < v or math.isnan(u) or math.isnan(v):
        raise InvalidArgumentError(f"need u < v, got [{u}, {v}]")
    spec = spec or QuadratureSpec()
    tol = spec.target_tol if tol is None else tol
    rho = intensity_function(basis, method, cf, bound, spec)
    degenerate: set[float] = set()

    def integrand(theta):
        x = math.tan(theta)
        try:
            r = rho(x)
        except (DegenerateFrameError, DegeneratePointError):
            degenerate.add(x)
            return 0.0
        c = math.cos(theta)
        return r / (c * c)

    lo, hi = math.atan(u), math.atan(v)
    cuts = [lo] + [t for t in (-math.pi / 4, 0.0, math.pi / 4) if lo < t < hi] + [hi]
    total = 0.0
    abserr = 0.0
    share = tol / (len(cuts) - 1)
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, err = quad(integrand, a, b, epsabs=share, epsrel=0.0, limit=2000)
        total += val
        abserr += err
    if degenerate:
        raise DegenerateIntervalError(degenerate)
    return CountResult(u, v, total, abserr, tol)
