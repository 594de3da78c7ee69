"""Command-line front end: one subcommand per computation, CSV or JSON out.

Exit status: 0 on success, 1 on usage or validation errors, 2 when an inner
computation fails (the diagnostic names the module and the x value).
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import charfn, intensity, kernels, montecarlo
from .basis import FAMILIES, BasisFamily, chebyshev_t_coeffs, make_basis
from .errors import InvalidArgumentError, KacRiceError

COMMANDS = ("density", "bound", "simulate", "bergman", "count", "constants", "cfcheck")
CF_CHOICES = ("gaussian", "laplace", "uniform", "rademacher")

COLUMNS = {
    "density": ("x", "rho", "method", "error_estimate"),
    "bound": ("x", "rho_bound", "calK", "factor"),
    "simulate": ("bin_left", "bin_right", "density", "stderr"),
    "bergman": ("x", "calK_n", "calK_limit", "abs_diff"),
    "count": ("u", "v", "expected_count", "tol"),
    "constants": ("name", "value"),
    "cfcheck": ("check", "pass", "worst_margin", "location"),
}
SIMULATE_TRAILER = ("mean_count", "mean_count_stderr", "seed")

# option names whose values may start with '-' (e.g. --x-grid -2:2:9)
_SIGNED_VALUE_FLAGS = ("--x-grid", "--x", "--interval", "--hist-range")


class UsageError(Exception):
    pass


class ComputationError(Exception):
    def __init__(self, module: str, x, err: Exception):
        self.module, self.x, self.err = module, x, err
        where = "" if x is None else f" at x={x!r}"
        super().__init__(f"{module}: {type(err).__name__}{where}: {err}")


# -- configuration --------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    command: str
    family: str = "monomial"
    n: int = 10
    recurrence: str | None = None
    p0: float = 1.0
    cf: str | None = "gaussian"
    a: float = 0.5
    q: float | None = 1.0
    C2: float | None = None
    C3: float | None = None
    x_grid: tuple[float, float, int] | None = None
    x: float | None = None
    interval: tuple[float, float] | None = None
    hist_range: tuple[float, float] | None = None
    method: str = "auto"
    route: str = "moment"
    trials: int = 100_000
    bins: int = 60
    seed: int = 42
    gamma_radius: float | None = None
    gamma_nodes: int = 128
    eta_radius: float | None = None
    eta_nodes: int = 256
    target_tol: float = 1e-6
    out: str | None = None
    format: str = "csv"
    plot: str | None = None
    threads: int | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown subcommand {self.command!r}")
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise UsageError(f"{f.name} must be finite, got {v!r}")
        if self.x_grid is not None:
            lo, hi, pts = self.x_grid
            if pts < 1 or not lo < hi or not (math.isfinite(lo) and math.isfinite(hi)):
                raise UsageError("x-grid needs min < max (finite) and points >= 1")
        if self.interval is not None and not self.interval[0] < self.interval[1]:
            raise UsageError("interval needs u < v")
        if self.n < 0:
            raise UsageError("n must be >= 0")
        if self.trials < 1 or self.bins < 1:
            raise UsageError("trials and bins must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be an unsigned 64-bit integer")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.threads is not None and self.threads < 1:
            raise UsageError("threads must be >= 1")

    def grid(self) -> np.ndarray:
        if self.x_grid is not None:
            lo, hi, pts = self.x_grid
            return np.array([lo]) if pts == 1 else np.linspace(lo, hi, pts)
        if self.x is not None:
            return np.array([self.x])
        raise UsageError(f"{self.command} needs --x or --x-grid")

    def quadrature(self) -> intensity.QuadratureSpec:
        try:
            return intensity.QuadratureSpec(
                self.gamma_radius, self.gamma_nodes, self.eta_radius, self.eta_nodes, self.target_tol
            )
        except InvalidArgumentError as e:
            raise UsageError(str(e)) from None


def _parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected min:max:points, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected min:max:points, got {text!r}") from None


def _parse_pair(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected u:v, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected u:v, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="kacrice", description="Real-zero intensities of random sums.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, basis=True, cf=True, out=True):
        if basis:
            p.add_argument("--family", choices=FAMILIES, default="monomial", help="spanning family")
            p.add_argument("--n", type=int, default=10, help="degree index (family has n+1 members)")
            p.add_argument(
                "--recurrence",
                default=None,
                help="recurrence family coefficients: 'chebyshev' or a JSON file of [a,b,c] triples",
            )
            p.add_argument("--p0", type=float, default=1.0, help="p_0 of a recurrence family")
        if cf:
            p.add_argument("--cf", choices=CF_CHOICES, default="gaussian", help="coefficient law")
            p.add_argument("--a", type=float, default=0.5, help="gaussian parameter in exp(-a s^2)")
        if out:
            p.add_argument("--out", default=None, help="output file (stdout if omitted)")
            p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")
        p.add_argument("--config", default=None, help="JSON file of option values")

    def quad(p):
        p.add_argument("--gamma-radius", type=float, default=None, help="tangent-map scale (auto)")
        p.add_argument("--gamma-nodes", type=int, default=128, help="alpha quadrature nodes")
        p.add_argument("--eta-radius", type=float, default=None, help="eta range, slices route (auto)")
        p.add_argument("--eta-nodes", type=int, default=256, help="beta/eta quadrature nodes")
        p.add_argument("--target-tol", type=float, default=1e-6, help="quadrature tolerance")

    def points(p):
        p.add_argument("--x-grid", type=_parse_grid, default=None, help="min:max:points, inclusive")
        p.add_argument("--x", type=float, default=None, help="single evaluation point")

    def bound_params(p):
        p.add_argument("--q", type=float, default=1.0, help="decay exponent q")
        p.add_argument("--C2", type=float, default=None, help="bound on |phi''| (estimated if omitted)")
        p.add_argument("--C3", type=float, default=None, help="bound on |phi'''| (estimated if omitted)")

    p = sub.add_parser("density", help="intensity rho_n on an x grid", formatter_class=fmt)
    common(p)
    points(p)
    quad(p)
    p.add_argument(
        "--method", choices=("auto", "gaussian", "fourier"), default="auto",
        help="auto: closed form for gaussian cf, Fourier inversion otherwise",
    )
    p.add_argument("--route", choices=("moment", "slices"), default="moment", help="inversion route")
    p.add_argument("--plot", default=None, help="write an SVG plot here")

    p = sub.add_parser("bound", help="explicit upper bound on rho_n", formatter_class=fmt)
    common(p)
    points(p)
    bound_params(p)

    p = sub.add_parser("simulate", help="Monte Carlo zero histogram", formatter_class=fmt)
    common(p)
    p.add_argument("--interval", type=_parse_pair, default=None, help="u:v counting interval (R)")
    p.add_argument("--hist-range", type=_parse_pair, default=None, help="u:v histogram range")
    p.add_argument("--trials", type=int, default=100_000, help="number of trials")
    p.add_argument("--bins", type=int, default=60, help="histogram bins")
    p.add_argument("--seed", type=int, default=42, help="64-bit seed")
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (${montecarlo.THREADS_ENV})")
    p.add_argument("--plot", default=None, help="write an SVG plot here")

    p = sub.add_parser("bergman", help="Bergman calK_n against its limit", formatter_class=fmt)
    p.add_argument("--n", type=int, default=10, help="degree index")
    points(p)
    common(p, basis=False, cf=False)

    p = sub.add_parser("count", help="expected number of zeros in an interval", formatter_class=fmt)
    common(p)
    p.add_argument("--interval", type=_parse_pair, default=None, help="u:v, inf allowed (R)")
    p.add_argument(
        "--method", choices=("auto", "gaussian", "fourier", "bound"), default="auto",
        help="intensity used inside the integral",
    )
    bound_params(p)
    quad(p)

    p = sub.add_parser("constants", help="bound constants k1..k4, K1, K2", formatter_class=fmt)
    p.add_argument("--cf", choices=CF_CHOICES, default=None, help="estimate C2, C3 from this law")
    p.add_argument("--a", type=float, default=0.5, help="decay parameter a")
    bound_params(p)
    common(p, basis=False, cf=False)

    p = sub.add_parser("cfcheck", help="check a coefficient law's hypotheses", formatter_class=fmt)
    common(p, basis=False)
    p.add_argument("--q", type=float, default=None, help="declared decay exponent (law's own)")
    p.add_argument("--C2", type=float, default=None, help="declared C2 (law's own)")
    p.add_argument("--C3", type=float, default=None, help="declared C3 (law's own)")
    p.add_argument("--s-max", type=float, default=None, help="scan window (auto)")
    return parser


def _normalise_argv(argv: list[str]) -> list[str]:
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _SIGNED_VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def parse_config(argv: list[str]) -> tuple[RunConfig, dict]:
    """Parse argv (applying --config defaults); returns the config and extra options."""
    parser = build_parser()
    argv = _normalise_argv(argv)
    ns = parser.parse_args(argv)
    if ns.config:
        try:
            loaded = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {ns.config}: {e}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        known = {k for k in vars(ns) if k not in ("command", "config")}
        unknown = sorted(set(k.replace("-", "_") for k in loaded) - known)
        if unknown:
            raise UsageError(f"unknown config keys for {ns.command}: {', '.join(unknown)}")
        sub = parser._subparsers._group_actions[0].choices[ns.command]
        sub.set_defaults(**{k.replace("-", "_"): _config_value(k, v) for k, v in loaded.items()})
        ns = parser.parse_args(argv)
    names = {f.name for f in fields(RunConfig)}
    values = {k: v for k, v in vars(ns).items() if k in names}
    extra = {k: v for k, v in vars(ns).items() if k not in names and k != "config"}
    return RunConfig(**values), extra


def _config_value(key: str, value: Any):
    key = key.replace("-", "_")
    if key == "x_grid" and isinstance(value, str):
        return _parse_grid(value)
    if key in ("interval", "hist_range") and isinstance(value, str):
        return _parse_pair(value)
    if key in ("x_grid", "interval", "hist_range") and isinstance(value, list):
        return tuple(value)
    return value


# -- building blocks ---------------------------------------------------------------------


def _basis(cfg: RunConfig) -> BasisFamily:
    coeffs = None
    if cfg.family == "recurrence":
        if cfg.recurrence is None:
            raise UsageError("recurrence family needs --recurrence")
        if cfg.recurrence == "chebyshev":
            coeffs = chebyshev_t_coeffs(cfg.n)
        else:
            try:
                coeffs = json.loads(Path(cfg.recurrence).read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise UsageError(f"cannot read recurrence file: {e}") from None
    try:
        return make_basis(cfg.family, cfg.n, coeffs, p0=cfg.p0)
    except InvalidArgumentError as e:
        raise UsageError(str(e)) from None


def _cf(kind: str, a: float) -> charfn.CharacteristicFunction:
    try:
        return charfn.make_cf(kind, a if kind == "gaussian" else None)
    except InvalidArgumentError as e:
        raise UsageError(str(e)) from None


def _at(module: str, x, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except InvalidArgumentError as e:
        raise UsageError(str(e)) from None
    except KacRiceError as e:
        raise ComputationError(getattr(e, "module", module), x, e) from None


def _derivative_bounds(cfg: RunConfig) -> tuple[float, float]:
    C2, C3 = cfg.C2, cfg.C3
    if C2 is None or C3 is None:
        if cfg.cf is None:
            raise UsageError("need --C2 and --C3, or --cf to estimate them")
        cf = _cf(cfg.cf, cfg.a)
        if cf.C2 is not None and cf.C3 is not None:
            est = (cf.C2, cf.C3)
        else:
            est = _at("charfn", None, charfn.estimate_derivative_bounds, cf)
        C2 = est[0] if C2 is None else C2
        C3 = est[1] if C3 is None else C3
    return C2, C3


# -- subcommands -----------------------------------------------------------------------------


def cmd_density(cfg: RunConfig, extra: dict):
    basis = _basis(cfg)
    cf = _cf(cfg.cf, cfg.a)
    method = cfg.method
    if method == "auto":
        method = "gaussian" if cfg.cf == "gaussian" else "fourier"
    if method == "gaussian" and cfg.cf != "gaussian":
        raise UsageError("the closed form only applies to gaussian coefficients")
    spec = cfg.quadrature()
    rows = []
    for x in cfg.grid():
        x = float(x)
        if method == "gaussian":
            r = _at("intensity", x, intensity.gaussian_intensity, basis, x)
        else:
            r = _at("intensity", x, intensity.intensity_nongaussian, basis, cf, x, spec, cfg.route)
        rows.append((x, r.rho, r.method, r.error_estimate))
    return rows, {}


def cmd_bound(cfg: RunConfig, extra: dict):
    basis = _basis(cfg)
    C2, C3 = _derivative_bounds(cfg)
    factor = _at("intensity", None, intensity.bound_factor, cfg.a, cfg.q, C2, C3)
    rows = []
    for x in cfg.grid():
        x = float(x)
        r = _at("intensity", x, intensity.intensity_upper_bound, basis, x, cfg.a, cfg.q, C2, C3)
        calK = r.rho / factor
        # factor relative to the Gaussian intensity calK / pi
        rows.append((x, r.rho, calK, factor * math.pi))
    return rows, {}


def cmd_simulate(cfg: RunConfig, extra: dict):
    basis = _basis(cfg)
    dist = montecarlo.make_distribution(cfg.cf, cfg.a if cfg.cf == "gaussian" else None)
    interval = cfg.interval or (-math.inf, math.inf)
    rep = _at(
        "montecarlo", None, montecarlo.empirical_density,
        basis, dist, cfg.trials, cfg.bins, interval, cfg.seed, cfg.hist_range, cfg.threads,
    )
    rows = [
        (float(rep.bin_edges[i]), float(rep.bin_edges[i + 1]), float(rep.density_estimate[i]),
         float(rep.stderr[i]))
        for i in range(rep.bins)
    ]
    summary = {
        "mean_count": rep.mean_count,
        "mean_count_stderr": rep.mean_count_stderr,
        "seed": rep.seed,
        "trials": rep.trials,
        "degenerate_trials": rep.degenerate_trials,
    }
    return rows, {"summary": summary, "report": rep}


def cmd_bergman(cfg: RunConfig, extra: dict):
    rows = []
    for x in cfg.grid():
        x = float(x)
        kd = _at("kernels", x, kernels.bergman_kernel_closed, cfg.n, x)
        if abs(x) == 1.0:
            limit, diff = math.nan, math.nan
        else:
            limit = kernels.bergman_calK_limit(x)
            diff = abs(kd.calK - limit)
        rows.append((x, kd.calK, limit, diff))
    return rows, {}


def cmd_count(cfg: RunConfig, extra: dict):
    basis = _basis(cfg)
    method = cfg.method
    if method == "auto":
        method = "gaussian" if cfg.cf == "gaussian" else "fourier"
    if method == "gaussian" and cfg.cf != "gaussian":
        raise UsageError("the closed form only applies to gaussian coefficients")
    u, v = cfg.interval or (-math.inf, math.inf)
    cf = _cf(cfg.cf, cfg.a)
    bound = None
    if method == "bound":
        bound = (cfg.a, cfg.q, *_derivative_bounds(cfg))
    res = _at(
        "intensity", None, intensity.expected_count,
        basis, u, v, method, cf, bound, cfg.quadrature(), cfg.target_tol,
    )
    return [(u, v, res.expected_count, res.tol)], {}


def cmd_constants(cfg: RunConfig, extra: dict):
    c = _at("intensity", None, intensity.bound_constants, cfg.a, cfg.q, 1.0, 1.0)
    rows = [("k1", c.k1), ("k2", c.k2), ("k3", c.k3), ("k4", c.k4)]
    if (cfg.C2 is not None and cfg.C3 is not None) or cfg.cf is not None:
        C2, C3 = _derivative_bounds(cfg)
        c = _at("intensity", None, intensity.bound_constants, cfg.a, cfg.q, C2, C3)
        factor = intensity.bound_factor(cfg.a, cfg.q, C2, C3)
        rows += [("C2", C2), ("C3", C3), ("K1", c.K1), ("K2", c.K2), ("factor", factor)]
    return rows, {}


def cmd_cfcheck(cfg: RunConfig, extra: dict):
    cf = _cf(cfg.cf, cfg.a)
    a = cfg.a if cfg.cf == "gaussian" else None
    results = _at(
        "charfn", None, charfn.cf_report,
        cf, a, cfg.q, cfg.C2, cfg.C3, extra.get("s_max"),
    )
    return [(r.check, r.passed, r.worst_margin, r.location) for r in results], {}


HANDLERS = {
    "density": cmd_density,
    "bound": cmd_bound,
    "simulate": cmd_simulate,
    "bergman": cmd_bergman,
    "count": cmd_count,
    "constants": cmd_constants,
    "cfcheck": cmd_cfcheck,
}


# -- output ----------------------------------------------------------------------------------


def _csv_field(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def render(command: str, rows: list[tuple], summary: dict | None, fmt: str) -> str:
    cols = COLUMNS[command]
    if fmt == "json":
        doc = {"command": command, "rows": [dict(zip(cols, map(_json_value, r))) for r in rows]}
        if summary:
            doc.update({k: _json_value(v) for k, v in summary.items()})
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for r in rows:
        buf.write(",".join(_csv_field(v) for v in r) + "\n")
    if command == "simulate" and summary:
        buf.write(",".join(SIMULATE_TRAILER) + "\n")
        buf.write(",".join(_csv_field(summary[k]) for k in SIMULATE_TRAILER) + "\n")
    return buf.getvalue()


def write_plot(path: str, cfg: RunConfig, rows: list[tuple], extra: dict) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "kacrice"
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    if cfg.command == "density":
        ax.plot([r[0] for r in rows], [r[1] for r in rows], "-", label="rho_n")
    else:
        rep = extra["report"]
        ax.stairs(rep.density_estimate, rep.bin_edges, label="empirical")
        if cfg.cf == "gaussian":
            basis = _basis(cfg)
            xs = np.linspace(rep.bin_edges[0], rep.bin_edges[-1], 801)
            try:
                ys = [intensity.gaussian_intensity(basis, float(x)).rho for x in xs]
                ax.plot(xs, ys, "-", label="calK_n / pi")
            except KacRiceError:
                pass
    ax.set_xlabel("x")
    ax.set_ylabel("density of real zeros")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def run(cfg: RunConfig, extra: dict | None = None) -> int:
    extra = extra or {}
    rows, info = HANDLERS[cfg.command](cfg, extra)
    text = render(cfg.command, rows, info.get("summary"), cfg.format)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.plot:
        if cfg.command not in ("density", "simulate"):
            raise UsageError("--plot is available for density and simulate")
        write_plot(cfg.plot, cfg, rows, info)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg, extra = parse_config(argv)
        return run(cfg, extra)
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except UsageError as e:
        print(f"kacrice: error: {e}", file=sys.stderr)
        return 1
    except ComputationError as e:
        print(f"kacrice: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
