"""``ptspec`` command line: spectra, sweeps, shifts, fits and figure data."""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from . import io as pio
from .analysis import ShrinkModel, compute_shifts, detect_outliers, fit_shrink_rate
from .basis import ms_bound_scan
from .continuation import ContinuationPath, sweep_gamma
from .errors import ConfigError, PathLost, PtSpecError
from .model import ProblemParams
from .oracle import secular_spectrum, truncation_check

LEVEL_CAP = 89
COMMANDS = ("spectrum", "sweep", "shifts", "fit", "msbound", "oracle-compare", "figure")
FIGURES = ("fig2", "fig3a", "fig3b", "fig4", "fig5", "fig6a", "fig6b", "fig7", "fig8a", "fig8b")


@dataclass
class RunConfig:
    command: str
    b_values: list[float]
    g_values: list[float]
    level_range: tuple[int, int]
    gamma_grid: list[float]
    x_max: float | None = None
    basis_dim: int | None = None
    output: str | None = None
    fmt: str = "csv"
    figure: str | None = None
    abscissa: str = "n"
    extra: dict = field(default_factory=dict)

    def params(self, b: float, g: float, gamma: float = 0.0) -> ProblemParams:
        dim = self.basis_dim or max(120, 2 * self.level_range[1])
        return ProblemParams(gamma=gamma, b=b, g=g, basis_cutoff=dim, x_max=self.x_max)

    def echo(self) -> dict:
        return asdict(self)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _levels(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(t) for t in text.split(":"))
    except ValueError:
        raise ConfigError(f"--levels expects n_min:n_max, got {text!r}") from None
    if lo < 0 or hi < lo:
        raise ConfigError(f"invalid level range {text!r}")
    return lo, hi


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ptspec", description=__doc__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("figure_id", nargs="?", help="figure identifier for the figure command")
    p.add_argument("--gamma", type=float)
    p.add_argument("--gamma-start", type=float)
    p.add_argument("--gamma-stop", type=float)
    p.add_argument("--gamma-step", type=float)
    p.add_argument("--g", type=float)
    p.add_argument("--g-list", type=_floats)
    p.add_argument("--b", type=_floats, help="one value or a comma-separated list")
    p.add_argument("--levels", type=_levels)
    p.add_argument("--allow-high-levels", action="store_true",
                   help=f"permit level indices above {LEVEL_CAP}")
    p.add_argument("--x-max", type=float)
    p.add_argument("--basis-dim", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--figure", dest="figure_opt")
    p.add_argument("--n-axis", choices=("n", "N"), default=None,
                   help="abscissa of shift output: n or N = 2n + 1")
    p.add_argument("--quiet", action="store_true")
    return p


def _grid(args) -> list[float]:
    ranged = (args.gamma_start, args.gamma_stop, args.gamma_step)
    if args.gamma is not None and any(v is not None for v in ranged):
        raise ConfigError("use either --gamma or --gamma-start/--gamma-stop/--gamma-step")
    if args.gamma is not None:
        return [args.gamma]
    if all(v is None for v in ranged):
        return [0.0]
    if any(v is None for v in ranged):
        raise ConfigError("--gamma-start, --gamma-stop and --gamma-step go together")
    start, stop, step = ranged
    if step <= 0 or stop < start:
        raise ConfigError("gamma range needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _preset(fig: str) -> dict:
    if fig not in FIGURES:
        raise ConfigError(f"unknown figure {fig!r}; choose from {', '.join(FIGURES)}")
    text = resources.files("ptspec").joinpath("presets", f"{fig}.json").read_text()
    return json.loads(text)


def _preset_grid(spec: dict) -> list[float]:
    if "values" in spec:
        return [float(v) for v in spec["values"]]
    start, stop, step = spec["start"], spec["stop"], spec["step"]
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    fig = args.figure_id or args.figure_opt
    if args.command == "figure":
        if fig is None:
            raise ConfigError("figure needs an identifier, e.g. `ptspec figure fig2`")
        pre = _preset(fig)
        cfg = RunConfig("figure", [float(v) for v in pre["b"]], [float(v) for v in pre["g"]],
                        tuple(pre["levels"]), _preset_grid(pre["gamma"]), args.x_max,
                        args.basis_dim, args.out, args.format, fig,
                        args.n_axis or pre.get("abscissa", "n"), {"kind": pre["kind"]})
    else:
        if fig is not None:
            raise ConfigError("a figure identifier is only valid with the figure command")
        if args.g is not None and args.g_list is not None:
            raise ConfigError("use either --g or --g-list")
        g_values = args.g_list if args.g_list is not None else [args.g or 0.0]
        b_values = args.b if args.b is not None else [1.0]
        levels = args.levels or (0, 9)
        cfg = RunConfig(args.command, b_values, g_values, levels, _grid(args), args.x_max,
                        args.basis_dim, args.out, args.format, None, args.n_axis or "n")
    if cfg.level_range[1] > LEVEL_CAP and not args.allow_high_levels:
        raise ConfigError(f"levels above {LEVEL_CAP} need --allow-high-levels")
    if any(g < 0 for g in cfg.g_values):
        raise ConfigError("g must be >= 0")
    if any(v < 0 for v in cfg.gamma_grid):
        raise ConfigError("gamma must be >= 0")
    for b in cfg.b_values:
        for g in cfg.g_values:
            cfg.params(b, g)  # validates b, x_max, basis size
    cfg.extra["quiet"] = args.quiet
    return cfg


# ------------------------------------------------------------------ pipelines

def _labels(cfg: RunConfig) -> range:
    return range(cfg.level_range[0], cfg.level_range[1] + 1)


def _sweep(cfg: RunConfig, b: float, g: float, grid, log) -> list[ContinuationPath]:
    full = sorted(set([0.0] + list(grid)))
    params = cfg.params(b, g)
    params.check_levels(cfg.level_range[1])
    log(f"b={b:g} g={g:g}: {len(_labels(cfg))} levels, gamma up to {full[-1]:g}")
    return sweep_gamma(_labels(cfg), full, params, progress=log)


def _failures(paths, b, g) -> list[str]:
    return [f"n={p.n_label} branch={p.branch} gamma={gam:g} g={g:g} b={b:g}: no converged point"
            for p in paths for gam in p.failures]


def _point_rows(paths, b, g, grid) -> list[dict]:
    keep = set(grid)
    rows = []
    for p in paths:
        for pt in p.points:
            if pt.gamma not in keep:
                continue
            kind = "complex" if abs(pt.mu.imag) > 1e-8 else "real"
            rows.append(dict(b=b, g=g, n_label=p.n_label, branch=p.branch, gamma=pt.gamma,
                             mu=complex(pt.mu), kind=kind, residual_norm=pt.residual_norm))
    rows.sort(key=lambda r: (r["n_label"], r["branch"], r["gamma"]))
    return rows


def _shift_rows(paths, b, g, gamma, abscissa) -> list[dict]:
    recs = compute_shifts(paths, gamma)
    if len(recs) >= 12:
        recs = detect_outliers(recs)
    rows = []
    for r in recs:
        row = dict(b=b, g=g, gamma=gamma, n=r.n)
        if abscissa == "N":
            row["N"] = 2 * r.n + 1
        row.update(delta_mu_abs=r.delta_mu_abs, is_complex=r.is_complex, outlier=r.outlier,
                   mu=r.mu)
        rows.append(row)
    return rows


def _run_sweep(cfg, log, fails):
    rows = []
    for b in cfg.b_values:
        for g in cfg.g_values:
            paths = _sweep(cfg, b, g, cfg.gamma_grid, log)
            fails += _failures(paths, b, g)
            rows += _point_rows(paths, b, g, cfg.gamma_grid)
    return rows


def _run_shifts(cfg, log, fails):
    rows = []
    for b in cfg.b_values:
        for g in cfg.g_values:
            paths = _sweep(cfg, b, g, cfg.gamma_grid, log)
            fails += _failures(paths, b, g)
            for gamma in cfg.gamma_grid:
                rows += _shift_rows(paths, b, g, gamma, cfg.abscissa)
    return rows


def _run_fit(cfg, log, fails):
    rows = []
    lo = max(cfg.level_range[0], 1)
    for b in cfg.b_values:
        for g in cfg.g_values:
            paths = _sweep(cfg, b, g, cfg.gamma_grid, log)
            fails += _failures(paths, b, g)
            for gamma in cfg.gamma_grid:
                recs = compute_shifts(paths, gamma)
                for model in ShrinkModel:
                    fr = fit_shrink_rate(recs, model, (lo, cfg.level_range[1]))
                    rows.append(dict(b=b, g=g, gamma=gamma, model=model.value, slope=fr.slope,
                                     amplitude=fr.amplitude, r_squared=fr.r_squared,
                                     n_min=fr.n_range[0], n_max=fr.n_range[1],
                                     n_points=fr.n_points))
    return rows


def _run_spectrum(cfg, log, fails):
    if len(cfg.gamma_grid) != 1:
        raise ConfigError("spectrum takes a single --gamma")
    return _run_sweep(cfg, log, fails)


def _run_msbound(cfg, log, fails):
    rows = []
    gamma = cfg.gamma_grid[-1]
    for b in cfg.b_values:
        rep = ms_bound_scan(cfg.level_range[1], cfg.params(b, 0.0, gamma))
        log(f"b={b:g}: C~={rep.C_tilde:.6g} M={rep.M_const:.6g} "
            f"valid pairs satisfied={rep.all_valid_satisfied} parity zero={rep.parity_zero}")
        bound = rep.M_const * np.outer(rep.indices, rep.indices).astype(float) ** -rep.alpha
        for i, m in enumerate(rep.indices):
            for j, n in enumerate(rep.indices):
                rows.append(dict(b=b, gamma=gamma, m=int(m), n=int(n),
                                 abs_element=float(rep.magnitudes[i, j]),
                                 bound=float(bound[i, j]), valid=bool(rep.validity[i, j]),
                                 satisfied=bool(rep.satisfied[i, j])))
    return rows


def _run_oracle_compare(cfg, log, fails):
    if any(g != 0 for g in cfg.g_values):
        raise ConfigError("oracle-compare applies to g = 0 only")
    if len(cfg.gamma_grid) != 1:
        raise ConfigError("oracle-compare takes a single --gamma")
    gamma = cfg.gamma_grid[0]
    rows = []
    labels = _labels(cfg)
    for b in cfg.b_values:
        params = cfg.params(b, 0.0, gamma)
        drift = truncation_check(params, params.basis_cutoff, labels[-1] + 1)
        log(f"b={b:g}: truncation drift {drift:.3g}")
        ref = secular_spectrum(params, labels[-1] + 1, params.basis_cutoff)
        paths = _sweep(cfg, b, 0.0, [gamma], log)
        fails += _failures(paths, b, 0.0)
        for p in paths:
            pt = p.at(gamma)
            if pt is None or p.branch != "main":
                continue
            k = int(np.argmin(np.abs(ref - pt.mu)))
            rows.append(dict(b=b, gamma=gamma, n_label=p.n_label, mu=complex(pt.mu),
                             mu_oracle=complex(ref[k]), abs_diff=float(abs(ref[k] - pt.mu)),
                             drift=drift))
    return rows


def _run_figure(cfg, log, fails):
    kind = cfg.extra["kind"]
    rows = _run_sweep(cfg, log, fails) if kind == "sweep" else _run_shifts(cfg, log, fails)
    for r in rows:
        r["figure"] = cfg.figure
    return rows


RUNNERS: dict[str, Callable] = {
    "spectrum": _run_spectrum, "sweep": _run_sweep, "shifts": _run_shifts, "fit": _run_fit,
    "msbound": _run_msbound, "oracle-compare": _run_oracle_compare, "figure": _run_figure,
}


def run(cfg: RunConfig) -> int:
    quiet = cfg.extra.get("quiet", False)

    def log(msg: str) -> None:
        if not quiet:
            print(msg, file=sys.stderr, flush=True)

    fails: list[str] = []
    rows = RUNNERS[cfg.command](cfg, log, fails)
    echo = {k: v for k, v in cfg.echo().items() if k != "output"}
    if cfg.output:
        pio.write(cfg.output, rows, cfg.fmt, echo)
    else:
        data = pio.serialize(rows, cfg.fmt, echo)
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    if fails:
        print(f"{len(fails)} point(s) failed:", file=sys.stderr)
        for f in fails:
            print("  " + f, file=sys.stderr)
        return 2
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        print(f"ptspec: configuration error: {exc}", file=sys.stderr)
        return 1
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"ptspec: configuration error: {exc}", file=sys.stderr)
        return 1
    except PathLost as exc:
        print(f"ptspec: computation failed at n={exc.n_label} gamma={exc.gamma} g={exc.g}: {exc}",
              file=sys.stderr)
        return 2
    except PtSpecError as exc:
        print(f"ptspec: computation failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
