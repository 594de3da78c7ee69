"""Monte Carlo estimates of the real-zero density and expected count.

Each trial draws eta_0..eta_n, converts sum eta_k f_k to monomial form, finds
the real roots from companion-matrix eigenvalues (polished by Newton) and
histograms them.

Randomness: trial t of a run with seed s reads its own block of Philox
output, keyed by s, starting at counter t * m / 4 where m is the block
length (n + 1 rounded up to a multiple of 4). A trial's draws therefore
depend only on (s, t), not on chunking or thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtri

from .basis import BasisFamily
from .errors import DegeneratePolynomialError, InvalidArgumentError

DISTRIBUTIONS = ("gaussian", "laplace", "uniform", "rademacher")

THREADS_ENV = "KACRICE_THREADS"
CHUNK_TRIALS = 4096
_TRIM = 1e-300
_DEDUP = 1e-9
_NEWTON_STEPS = 8
_DEFAULT_HIST = (-3.0, 3.0)


@dataclass(frozen=True)
class CoefficientDistribution:
    """Law of each coefficient; gaussian(a) has variance 2a, the others 1."""

    kind: str
    a: float = 0.5

    @property
    def variance(self) -> float:
        return 2.0 * self.a if self.kind == "gaussian" else 1.0

    def describe(self) -> str:
        return f"gaussian(a={self.a!r})" if self.kind == "gaussian" else self.kind

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms in (0, 1) to draws by inverse CDF."""
        if self.kind == "gaussian":
            return ndtri(u) * math.sqrt(2.0 * self.a)
        if self.kind == "laplace":
            # scale 1/sqrt2 gives unit variance
            c = u - 0.5
            return -np.sign(c) * np.log1p(-2.0 * np.abs(c)) / math.sqrt(2.0)
        if self.kind == "uniform":
            return math.sqrt(3.0) * (2.0 * u - 1.0)
        return np.where(u < 0.5, -1.0, 1.0)

    def sample(self, seed: int, trial_start: int, trials: int, size: int) -> np.ndarray:
        """Draws for trials [trial_start, trial_start + trials), shape (trials, size)."""
        raw = trial_stream(seed, trial_start, trials, size)
        return self.from_uniform(_to_unit(raw))


def make_distribution(kind: str, a: float | None = None) -> CoefficientDistribution:
    if kind not in DISTRIBUTIONS:
        raise InvalidArgumentError(f"unknown distribution {kind!r}; expected one of {DISTRIBUTIONS}")
    if kind == "gaussian":
        a = 0.5 if a is None else float(a)
        if not (math.isfinite(a) and a > 0):
            raise InvalidArgumentError(f"gaussian parameter a must be positive, got {a!r}")
        return CoefficientDistribution(kind, a)
    return CoefficientDistribution(kind)


def _block(size: int) -> int:
    return -(-size // 4) * 4


def trial_stream(seed: int, trial_start: int, trials: int, size: int) -> np.ndarray:
    """Raw uint64 words for a run of consecutive trials, shape (trials, size)."""
    if int(seed) != seed or not 0 <= seed < 2**64:
        raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    m = _block(size)
    gen = np.random.Philox(key=int(seed), counter=trial_start * m // 4)
    return gen.random_raw(trials * m).reshape(trials, m)[:, :size]


def _to_unit(raw: np.ndarray) -> np.ndarray:
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class SimulationReport:
    """Histogram of real roots over ``hist_range``; counts over ``interval``.

    ``trials`` excludes degenerate draws (reported separately). density and
    stderr are per unit length.
    """

    basis: str
    distribution: str
    trials: int
    seed: int
    interval: tuple[float, float]
    hist_range: tuple[float, float]
    bins: int
    bin_edges: np.ndarray
    bin_counts: np.ndarray
    density_estimate: np.ndarray
    stderr: np.ndarray
    mean_count: float
    mean_count_stderr: float
    degenerate_trials: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("bin_edges", "bin_counts", "density_estimate", "stderr"):
            d[k] = d[k].tolist()
        d["interval"] = list(self.interval)
        d["hist_range"] = list(self.hist_range)
        return d


# -- root finding ---------------------------------------------------------------------


def to_monomial(basis: BasisFamily, coeffs: np.ndarray) -> np.ndarray:
    """Monomial coefficients (lowest degree first) of sum eta_k f_k, row-wise."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != basis.size:
        raise InvalidArgumentError(f"need {basis.size} coefficients, got {coeffs.shape[-1]}")
    if basis.is_power:
        return coeffs * basis.weights
    return coeffs @ basis.monomial_coefficients()


def real_roots(basis: BasisFamily, coeffs, interval=(-math.inf, math.inf)) -> np.ndarray:
    """Sorted real roots of sum coeffs_k f_k inside [u, v]."""
    u, v = _check_interval(interval)
    c = to_monomial(basis, np.asarray(coeffs, dtype=float))
    roots = _roots_of(c)
    return roots[(roots >= u) & (roots <= v)]


def _roots_of(c: np.ndarray) -> np.ndarray:
    deg = _effective_degree(c)
    if deg < 0:
        raise DegeneratePolynomialError("all coefficients vanish")
    if deg == 0:
        return np.empty(0)
    c = c[: deg + 1]
    eig = np.linalg.eigvals(_companion(c[None, :]))[0]
    r = _polish(np.real(eig[np.imag(eig) == 0.0]), c)
    return _dedup(np.sort(r))


def _effective_degree(c: np.ndarray) -> int:
    nz = np.nonzero(np.abs(c) >= _TRIM)[0]
    return int(nz[-1]) if nz.size else -1


def _companion(c: np.ndarray) -> np.ndarray:
    """Batched companion matrices for rows c (lowest degree first, c[:, -1] != 0)."""
    B, size = c.shape
    n = size - 1
    M = np.zeros((B, n, n))
    M[:, 0, :] = -c[:, -2::-1] / c[:, -1:]
    if n > 1:
        idx = np.arange(n - 1)
        M[:, idx + 1, idx] = 1.0
    return M


def _horner(c: np.ndarray, x: np.ndarray):
    """p(x), p'(x) and sum |c_k| |x|^k for coefficient rows c[i] at points x[i]."""
    p = np.zeros_like(x)
    dp = np.zeros_like(x)
    mag = np.zeros_like(x)
    ax = np.abs(x)
    for k in range(c.shape[-1] - 1, -1, -1):
        dp = dp * x + p
        p = p * x + c[..., k]
        mag = mag * ax + np.abs(c[..., k])
    return p, dp, mag


def _polish(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Newton steps, each kept only if it lowers |p|; c is one row or one row per x."""
    if x.size == 0:
        return x
    cc = np.broadcast_to(c, x.shape + (c.shape[-1],)) if c.ndim == 1 else c
    p, dp, mag = _horner(cc, x)
    for _ in range(_NEWTON_STEPS):
        # converged once the residual is at rounding level for the evaluation
        active = (np.abs(p) > 1e-15 * mag) & (dp != 0.0)
        if not np.any(active):
            break
        step = np.where(active, p / np.where(dp == 0.0, 1.0, dp), 0.0)
        trial = x - step
        tp, tdp, tmag = _horner(cc, trial)
        better = active & np.isfinite(tp) & (np.abs(tp) < np.abs(p))
        if not np.any(better):
            break
        x = np.where(better, trial, x)
        p = np.where(better, tp, p)
        dp = np.where(better, tdp, dp)
        mag = np.where(better, tmag, mag)
    return x


def _dedup(r: np.ndarray) -> np.ndarray:
    if r.size < 2:
        return r
    keep = np.concatenate([[True], np.diff(r) > _DEDUP])
    return r[keep]


def batch_real_roots_flat(c: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Real roots of every row of monomial coefficients c (shape (B, n+1)).

    Returns (owner, roots, degenerate): roots[i] belongs to row owner[i],
    sorted by (owner, root) with near-duplicates removed. Rows are grouped
    by effective degree so each group shares one batched eigenvalue call.
    """
    big = np.abs(c) >= _TRIM
    deg = np.where(big.any(axis=1), c.shape[1] - 1 - np.argmax(big[:, ::-1], axis=1), -1)
    owners, roots = [np.empty(0, dtype=np.int64)], [np.empty(0)]
    for d in np.unique(deg):
        if d <= 0:
            continue
        rows = np.nonzero(deg == d)[0]
        cd = c[rows, : d + 1]
        eig = np.linalg.eigvals(_companion(cd))
        idx, col = np.nonzero(np.imag(eig) == 0.0)
        owners.append(rows[idx])
        roots.append(_polish(np.real(eig[idx, col]), cd[idx]))
    owner = np.concatenate(owners)
    x = np.concatenate(roots)
    order = np.lexsort((x, owner))
    owner, x = owner[order], x[order]
    if x.size > 1:
        keep = np.concatenate([[True], (np.diff(owner) != 0) | (np.diff(x) > _DEDUP)])
        owner, x = owner[keep], x[keep]
    return owner, x, deg < 0


def batch_real_roots(c: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Per-row version of :func:`batch_real_roots_flat`: (roots per row, degenerate mask)."""
    owner, x, degenerate = batch_real_roots_flat(c)
    split = np.searchsorted(owner, np.arange(1, c.shape[0]))
    return np.split(x, split), degenerate


def scan_real_roots(c, interval, grid: int = 10_000) -> np.ndarray:
    """Sign-scan plus Brent refinement on a uniform grid; a slow test oracle."""
    u, v = _check_interval(interval)
    if not (math.isfinite(u) and math.isfinite(v)):
        raise InvalidArgumentError("scan needs a finite interval")
    c = np.asarray(c, dtype=float)
    xs = np.linspace(u, v, grid + 1)
    ps = np.polynomial.polynomial.polyval(xs, c)
    f = lambda t: float(np.polynomial.polynomial.polyval(t, c))
    roots = []
    for i in range(grid):
        if ps[i] == 0.0:
            roots.append(xs[i])
        elif ps[i] * ps[i + 1] < 0:
            roots.append(brentq(f, xs[i], xs[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps))
    if ps[-1] == 0.0:
        roots.append(xs[-1])
    return np.array(roots)


# -- simulation -------------------------------------------------------------------------


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    if threads < 1:
        raise InvalidArgumentError(f"threads must be >= 1, got {threads}")
    return int(threads)


def _chunk_stats(basis, dist, seed, start, count, interval, hist_range, bins):
    eta = dist.sample(seed, start, count, basis.size)
    owner, x, degenerate = batch_real_roots_flat(to_monomial(basis, eta))
    u, v = interval
    lo, hi = hist_range
    width = (hi - lo) / bins
    inside = (x >= u) & (x <= v)
    n_in = np.bincount(owner[inside], minlength=count)
    h = inside & (x >= lo) & (x <= hi)
    b = np.minimum(((x[h] - lo) / width).astype(np.int64), bins - 1)
    per_trial = np.bincount(owner[h] * bins + b, minlength=count * bins).reshape(count, bins)
    return (
        per_trial.sum(axis=0),
        (per_trial * per_trial).sum(axis=0),
        int(n_in.sum()),
        int((n_in * n_in).sum()),
        int(degenerate.sum()),
    )


def empirical_density(
    basis: BasisFamily,
    dist: CoefficientDistribution,
    trials: int,
    bins: int,
    interval=(-math.inf, math.inf),
    seed: int = 42,
    hist_range=None,
    threads: int | None = None,
) -> SimulationReport:
    """Histogram of real zeros over ``trials`` independent draws.

    ``hist_range`` defaults to ``interval`` when that is finite, otherwise
    to [-3, 3]. Results do not depend on ``threads``: trials are split into
    fixed-size chunks whose integer tallies are summed in chunk order.
    """
    if int(trials) != trials or trials < 1:
        raise InvalidArgumentError(f"trials must be a positive integer, got {trials!r}")
    if int(bins) != bins or bins < 1:
        raise InvalidArgumentError(f"bins must be a positive integer, got {bins!r}")
    trials, bins = int(trials), int(bins)
    interval = _check_interval(interval)
    if hist_range is None:
        hist_range = interval if all(map(math.isfinite, interval)) else _DEFAULT_HIST
    hist_range = _check_interval(hist_range)
    if not all(map(math.isfinite, hist_range)):
        raise InvalidArgumentError("hist_range must be finite")
    # the histogram only sees roots inside the counting interval
    hist_range = (max(hist_range[0], interval[0]), min(hist_range[1], interval[1]))
    if not hist_range[0] < hist_range[1]:
        raise InvalidArgumentError("hist_range does not overlap the interval")

    starts = list(range(0, trials, CHUNK_TRIALS))
    job = lambda s: _chunk_stats(
        basis, dist, seed, s, min(CHUNK_TRIALS, trials - s), interval, hist_range, bins
    )
    nthreads = min(resolve_threads(threads), len(starts))
    if nthreads == 1:
        parts = [job(s) for s in starts]
    else:
        with ThreadPoolExecutor(nthreads) as ex:
            parts = list(ex.map(job, starts))

    S1 = np.zeros(bins, dtype=np.int64)
    S2 = np.zeros(bins, dtype=np.int64)
    N1 = N2 = degenerate = 0
    for s1, s2, n1, n2, dg in parts:
        S1 += s1
        S2 += s2
        N1 += n1
        N2 += n2
        degenerate += dg
    used = trials - degenerate
    if used == 0:
        raise DegeneratePolynomialError("every trial drew the zero polynomial")
    width = (hist_range[1] - hist_range[0]) / bins
    edges = hist_range[0] + width * np.arange(bins + 1)
    edges[-1] = hist_range[1]
    density = S1 / (used * width)
    stderr = _mean_stderr(S1, S2, used) / width
    mean = N1 / used
    mean_se = float(_mean_stderr(np.array([N1]), np.array([N2]), used)[0])
    return SimulationReport(
        basis.describe(),
        dist.describe(),
        used,
        int(seed),
        interval,
        hist_range,
        bins,
        edges,
        S1,
        density,
        stderr,
        mean,
        mean_se,
        degenerate,
    )


def _mean_stderr(s1: np.ndarray, s2: np.ndarray, T: int) -> np.ndarray:
    """Standard error of a per-trial mean from integer sums of x and x^2."""
    s1 = s1.astype(float)
    s2 = s2.astype(float)
    if T < 2:
        p = s1 / T
        return np.sqrt(np.maximum(p * (1.0 - p), 0.0) / T)
    var = np.maximum(s2 - s1 * s1 / T, 0.0) / (T - 1)
    return np.sqrt(var / T)


def _check_interval(interval) -> tuple[float, float]:
    try:
        u, v = (float(t) for t in interval)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"interval must be a pair (u, v), got {interval!r}") from None
    if math.isnan(u) or math.isnan(v) or not u < v:
        raise InvalidArgumentError(f"need u < v, got [{u}, {v}]")
    return u, v
