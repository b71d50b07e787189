"""Command-line surface: flat run configs, run directories and CSV artifacts.

Exit codes: 0 on success (a detected blow-up is a successful measurement),
1 on configuration errors (bad flags, bad config keys or values), 2 on
numerical failure (step underflow, non-finite values in the outputs).

Every CSV float is written with 17 significant digits so a round trip
through the file reproduces the double exactly; reruns with the same
config, seed and thread count produce byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .inequalities import run_campaign
from .initial_data import DataSpec
from .lab import (
    blowup_functional,
    build_test_functions,
    exponent_table,
    exponent_table_values,
    fit_decay,
    lifespan_sweep,
    weak_identity,
)
from .norms import ModelParams
from .propagator import khat
from .spectral import make_grid
from .timestepper import SimConfig, SimResult, simulate


class ConfigError(Exception):
    """Flag or config-file problem; maps to exit code 1."""


class NumericalError(Exception):
    """The run produced no usable numbers; maps to exit code 2."""


# ------------------------- config file parsing -------------------------

_REQUIRED = object()


def parse_config_text(text: str) -> dict[str, str]:
    """key=value pairs, one per line, `#` starts a comment."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(
                f"config line {lineno}: expected key=value, got {body!r}"
            )
        key, value = body.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"config line {lineno}: empty key")
        if key in pairs:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def _load_config_file(path: Path) -> dict[str, str]:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text())


def _as_int(text: str) -> int:
    return int(text, 10)


def _as_float(text: str) -> float:
    value = float(text)
    return value


def _as_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _as_floats(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(float(p) for p in parts)


def _as_ints(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of integers")
    return tuple(int(p, 10) for p in parts)


def _as_center(text: str) -> Optional[tuple[float, ...]]:
    if text.lower() == "none":
        return None
    return _as_floats(text)


def _as_str(text: str) -> str:
    return text


_Schema = dict[str, tuple[Callable[[str], object], object]]


def _resolve(raw: dict[str, str], schema: _Schema) -> dict[str, object]:
    """Apply the schema: reject unknown keys, fill defaults, name gaps."""
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError("unknown config key(s): " + ", ".join(unknown))
    values: dict[str, object] = {}
    for name, (parse, default) in schema.items():
        if name in raw:
            try:
                values[name] = parse(raw[name])
            except ValueError as exc:
                raise ConfigError(f"config key {name}: {exc}") from exc
        elif default is _REQUIRED:
            raise ConfigError(f"missing required config key: {name}")
        else:
            values[name] = default
    return values


_SIM_SCHEMA: _Schema = {
    "n": (_as_int, _REQUIRED),
    "m": (_as_float, _REQUIRED),
    "gamma": (_as_float, _REQUIRED),
    "p": (_as_float, _REQUIRED),
    "s": (_as_float, 2.0),
    "eps": (_as_float, _REQUIRED),
    "points": (_as_int, _REQUIRED),
    "box_length": (_as_float, _REQUIRED),
    "data_kind": (_as_str, _REQUIRED),
    "data_center": (_as_center, None),
    "data_width": (_as_float, 1.0),
    "data_lowfreq_power": (_as_float, 0.0),
    "data_amplitude_c0": (_as_float, 1.0),
    "dt": (_as_float, _REQUIRED),
    "t_max": (_as_float, _REQUIRED),
    "blowup_factor": (_as_float, 1e6),
    "output_stride": (_as_int, 1),
    "adaptive": (_as_bool, True),
    "nonlinearity": (_as_float, 1.0),
}

_DECAY_FIT_SCHEMA: _Schema = dict(
    _SIM_SCHEMA,
    fit_series=(_as_str, "l2"),
    fit_t_a=(_as_float, None),
    fit_t_b=(_as_float, None),
    fit_target=(_as_float, None),
)

_SWEEP_SCHEMA: _Schema = {
    k: v for k, v in _SIM_SCHEMA.items() if k != "eps"
}
_SWEEP_SCHEMA.update(
    eps_min=(_as_float, _REQUIRED),
    eps_max=(_as_float, _REQUIRED),
    eps_count=(_as_int, _REQUIRED),
    dt_min_target=(_as_float, None),
)

_FUNCTIONAL_SCHEMA: _Schema = dict(
    _SIM_SCHEMA,
    r_values=(_as_floats, _REQUIRED),
)

_VERIFY_SCHEMA: _Schema = {
    "samples": (_as_int, 200),
    "eps_star": (_as_float, 0.25),
    "dim": (_as_int, 1),
    "box_length": (_as_float, 40.0),
    "grid_points": (_as_ints, (256, 512)),
    "cap": (_as_float, math.inf),
}


def _sim_config(
    values: dict[str, object], store_snapshots: bool = False
) -> SimConfig:
    params = ModelParams(
        n=values["n"],
        m=values["m"],
        gamma=values["gamma"],
        p=values["p"],
        s=values["s"],
        eps=values["eps"],
    )
    grid = make_grid(values["n"], values["points"], values["box_length"])
    data = DataSpec(
        kind=values["data_kind"],
        center=values["data_center"],
        width=values["data_width"],
        lowfreq_power=values["data_lowfreq_power"],
        amplitude_c0=values["data_amplitude_c0"],
    )
    return SimConfig(
        params=params,
        grid=grid,
        data=data,
        dt=values["dt"],
        t_max=values["t_max"],
        blowup_factor=values["blowup_factor"],
        output_stride=values["output_stride"],
        adaptive=values["adaptive"],
        nonlinearity=values["nonlinearity"],
        store_snapshots=store_snapshots,
    )


# ------------------------- run directories -------------------------


@dataclass(frozen=True)
class RunConfig:
    """One resolved invocation: experiment selector, plumbing and setup.

    resolved holds every key=value pair needed to reproduce the run; it
    is echoed, sorted, into resolved_config.txt in the output directory.
    """

    subcommand: str
    out_dir: Optional[Path]
    seed: int
    threads: int
    verbose: bool
    resolved: dict[str, str]
    sim: Optional[SimConfig] = None


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def _run_config(
    args: argparse.Namespace,
    values: dict[str, object],
    sim: Optional[SimConfig] = None,
) -> RunConfig:
    threads = _thread_count(args)
    resolved = {name: _fmt(v) for name, v in values.items()}
    resolved["subcommand"] = args.subcommand
    resolved["seed"] = _fmt(args.seed)
    resolved["threads"] = _fmt(threads)
    resolved["verbose"] = _fmt(args.verbose)
    if args.out is not None:
        resolved["out"] = str(args.out)
    return RunConfig(
        subcommand=args.subcommand,
        out_dir=Path(args.out) if args.out is not None else None,
        seed=args.seed,
        threads=threads,
        verbose=args.verbose,
        resolved=resolved,
        sim=sim,
    )


def _atomic_write_text(path: Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see halves."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(
        dir=str(path.parent), prefix=path.name + ".", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def _write_run_dir(run: RunConfig) -> Path:
    if run.out_dir is None:
        raise ConfigError(f"{run.subcommand} requires --out DIR")
    lines = "".join(
        f"{key}={value}\n" for key, value in sorted(run.resolved.items())
    )
    _atomic_write_text(run.out_dir / "resolved_config.txt", lines)
    return run.out_dir


def _csv_field(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _csv_text(header: str, rows: Iterable[Sequence]) -> str:
    lines = [header]
    lines.extend(",".join(_csv_field(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


_NORMS_HEADER = "t,l2,hs_dot,lm,w_l2,w_hs,w_lm,supnorm"
_FIT_HEADER = "experiment,slope,intercept,r2,t_a,t_b,target,target_source"
_LIFESPAN_HEADER = "eps,p,t_lo,t_hi,status"
_INEQ_HEADER = "name,seed,samples,max_ratio,refined_ratio"
_FUNCTIONAL_HEADER = "R,i_r,data_term,rhs_bound,identity_lhs,identity_rhs"
_KERNEL_HEADER = "t,xi,k,dk"


def _write_norms_csv(path: Path, result: SimResult) -> None:
    series = result.norms
    weighted = series.x_weighted
    if weighted is None:
        raise NumericalError("norm series carries no weighted components")
    rows = zip(
        series.times,
        series.l2,
        series.hs_dot,
        series.lm,
        weighted[0],
        weighted[1],
        weighted[2],
        series.supnorm,
    )
    _atomic_write_text(path, _csv_text(_NORMS_HEADER, rows))


def _check_finite(result: SimResult) -> None:
    if result.status == "step_underflow":
        raise NumericalError(
            "step_underflow: the time step collapsed below its floor"
        )
    series = result.norms
    blocks = [series.times, series.l2, series.hs_dot, series.lm, series.supnorm]
    if series.x_weighted is not None:
        blocks.append(series.x_weighted)
    for block in blocks:
        if not np.all(np.isfinite(block)):
            raise NumericalError("non-finite value in the recorded norm series")


# ------------------------- plumbing helpers -------------------------


def _thread_count(args: argparse.Namespace) -> int:
    if args.threads < 0:
        raise ConfigError(f"--threads must be >= 0, got {args.threads}")
    if args.threads == 0:
        return os.cpu_count() or 1
    return args.threads


def _require_config(args: argparse.Namespace) -> dict[str, str]:
    if args.config is None:
        raise ConfigError(f"{args.subcommand} requires --config PATH")
    return _load_config_file(Path(args.config))


def _forbid_config(args: argparse.Namespace) -> None:
    if args.config is not None:
        raise ConfigError(
            f"{args.subcommand} takes direct flags; --config is not accepted"
        )


def _note(args: argparse.Namespace, message: str) -> None:
    if args.verbose:
        print(message, file=sys.stderr)


# ------------------------- subcommands -------------------------


def _cmd_simulate(args: argparse.Namespace) -> int:
    values = _resolve(_require_config(args), _SIM_SCHEMA)
    sim = _sim_config(values)
    run = _run_config(args, values, sim)
    _note(args, f"simulate: t_max={sim.t_max:g} on {sim.grid.points_per_axis}^{sim.grid.dim}")
    result = simulate(sim)
    _check_finite(result)
    out = _write_run_dir(run)
    _write_norms_csv(out / "norms.csv", result)
    print(f"status={result.status}")
    if result.lifespan is not None:
        print(f"lifespan_lo={_fmt(result.lifespan[0])}")
        print(f"lifespan_hi={_fmt(result.lifespan[1])}")
    return 0


_DECAY_TARGETS = {"l2": "decay_l2", "hs_dot": "decay_hs", "lm": "decay_lm"}


def _cmd_decay_fit(args: argparse.Namespace) -> int:
    values = _resolve(_require_config(args), _DECAY_FIT_SCHEMA)
    sim = _sim_config(values)
    run = _run_config(args, values, sim)
    which = values["fit_series"]
    if values["fit_target"] is not None:
        target = values["fit_target"]
        target_source = "config"
    else:
        field = _DECAY_TARGETS.get(which)
        if field is None:
            raise ConfigError(
                f"fit_target is required for series {which!r}: no closed-form rate"
            )
        target = getattr(exponent_table(sim.params), field)
        target_source = "exponent_table"
    t_a, t_b = values["fit_t_a"], values["fit_t_b"]
    if (t_a is None) != (t_b is None):
        raise ConfigError("fit_t_a and fit_t_b must be given together")
    _note(args, f"decay-fit: series={which} target={target:g}")
    result = simulate(sim)
    _check_finite(result)
    if t_a is None:
        # same default as the library fit: skip transients and the tail
        t_a = result.norms.times[-1] / 10.0
        t_b = 0.8 * result.norms.times[-1]
    slope, intercept, r2 = fit_decay(result.norms, which, (t_a, t_b))
    out = _write_run_dir(run)
    _write_norms_csv(out / "norms.csv", result)
    fit_rows = [
        (f"decay_{which}", slope, intercept, r2, t_a, t_b, target, target_source)
    ]
    _atomic_write_text(out / "fit.csv", _csv_text(_FIT_HEADER, fit_rows))
    print(
        f"experiment=decay_{which} slope={_fmt(slope)} "
        f"target={_fmt(target)} r2={_fmt(r2)}"
    )
    return 0


def _cmd_lifespan_sweep(args: argparse.Namespace) -> int:
    values = _resolve(_require_config(args), _SWEEP_SCHEMA)
    if values["eps_count"] < 2:
        raise ConfigError(f"eps_count must be >= 2, got {values['eps_count']}")
    eps_list = np.geomspace(
        values["eps_min"], values["eps_max"], values["eps_count"]
    )
    template_values = dict(values, eps=float(eps_list[0]))
    for name in ("eps_min", "eps_max", "eps_count", "dt_min_target"):
        template_values.pop(name)
    sim = _sim_config(template_values)
    run = _run_config(args, values, sim)
    _note(args, f"lifespan-sweep: {len(eps_list)} amplitudes, threads={run.threads}")
    sweep = lifespan_sweep(
        sim,
        eps_list,
        dt_min_target=values["dt_min_target"],
        threads=run.threads,
    )
    usable = [
        r
        for r in sweep.records
        if r.status == "blew_up" and r.eps not in sweep.excluded_eps
    ]
    eps_lo = min(r.eps for r in usable)
    eps_hi = max(r.eps for r in usable)
    out = _write_run_dir(run)
    lifespan_rows = [
        (r.eps, r.p, r.t_lo, r.t_hi, r.status) for r in sweep.records
    ]
    _atomic_write_text(
        out / "lifespan.csv", _csv_text(_LIFESPAN_HEADER, lifespan_rows)
    )
    fit_rows = [
        (
            "lifespan_power",
            sweep.slope,
            sweep.intercept,
            sweep.r2,
            eps_lo,
            eps_hi,
            sweep.target,
            "exponent_table",
        ),
        (
            "lifespan_logcorrected",
            sweep.log_corrected_slope,
            sweep.log_corrected_intercept,
            math.nan,
            eps_lo,
            eps_hi,
            sweep.target,
            "exponent_table",
        ),
    ]
    _atomic_write_text(out / "fit.csv", _csv_text(_FIT_HEADER, fit_rows))
    print(
        f"slope={_fmt(sweep.slope)} target={_fmt(sweep.target)} "
        f"r2={_fmt(sweep.r2)} usable={len(usable)}"
    )
    if sweep.excluded_eps:
        print(f"excluded_eps={_fmt(sweep.excluded_eps)}")
    return 0


def _cmd_blowup_functional(args: argparse.Namespace) -> int:
    values = _resolve(_require_config(args), _FUNCTIONAL_SCHEMA)
    sim = _sim_config(values, store_snapshots=True)
    run = _run_config(args, values, sim)
    _note(args, f"blowup-functional: {len(values['r_values'])} cutoff scales")
    result = simulate(sim)
    _check_finite(result)
    rows = []
    for R in values["r_values"]:
        pair = build_test_functions(sim.params.p, R, sim.grid, sim.t_max)
        i_r, data_term, rhs_bound = blowup_functional(result, pair, sim.params)
        lhs, rhs = weak_identity(result, pair, sim.params)
        rows.append((R, i_r, data_term, rhs_bound, lhs, rhs))
        print(
            f"R={_fmt(R)} i_r={_fmt(i_r)} data_term={_fmt(data_term)} "
            f"rhs_bound={_fmt(rhs_bound)}"
        )
    out = _write_run_dir(run)
    _atomic_write_text(
        out / "functional.csv", _csv_text(_FUNCTIONAL_HEADER, rows)
    )
    return 0


def _cmd_verify_inequalities(args: argparse.Namespace) -> int:
    raw = _load_config_file(Path(args.config)) if args.config is not None else {}
    values = _resolve(raw, _VERIFY_SCHEMA)
    grids = tuple(
        make_grid(values["dim"], points, values["box_length"])
        for points in values["grid_points"]
    )
    run = _run_config(args, values)
    _note(
        args,
        f"verify-inequalities: {values['samples']} samples on "
        f"{len(grids)} grid levels, threads={run.threads}",
    )
    reports = run_campaign(
        seed=args.seed,
        count=values["samples"],
        grids=grids,
        threads=run.threads,
        eps_star=values["eps_star"],
        cap=values["cap"],
    )
    for report in reports:
        if not (
            math.isfinite(report.max_ratio)
            and math.isfinite(report.ratio_at_refined_grid)
        ):
            raise NumericalError(
                f"non-finite ratio in inequality campaign: {report.name}"
            )
    out = _write_run_dir(run)
    rows = [
        (r.name, r.seed, r.samples, r.max_ratio, r.ratio_at_refined_grid)
        for r in reports
    ]
    _atomic_write_text(out / "inequalities.csv", _csv_text(_INEQ_HEADER, rows))
    for report in reports:
        print(
            f"name={report.name} max_ratio={_fmt(report.max_ratio)} "
            f"refined_ratio={_fmt(report.ratio_at_refined_grid)} "
            f"violations={report.violation_count}"
        )
    return 0


def _cmd_kernel_table(args: argparse.Namespace) -> int:
    _forbid_config(args)
    try:
        t_values = _as_floats(args.t)
        xi_values = _as_floats(args.xi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    xi_arr = np.asarray(xi_values, dtype=float)
    rows = []
    for t in t_values:
        kv = khat(t, xi_arr * xi_arr)
        k = np.atleast_1d(kv.k)
        dk = np.atleast_1d(kv.dk)
        rows.extend(
            (t, xi, k[j], dk[j]) for j, xi in enumerate(xi_values)
        )
    print(_KERNEL_HEADER)
    for row in rows:
        print(",".join(format(float(v), ".7g") for v in row))
    if args.out is not None:
        run = _run_config(args, {"t": t_values, "xi": xi_values})
        out = _write_run_dir(run)
        _atomic_write_text(out / "kernel.csv", _csv_text(_KERNEL_HEADER, rows))
    return 0


def _cmd_exponent_table(args: argparse.Namespace) -> int:
    _forbid_config(args)
    table = exponent_table_values(args.n, args.m, args.gamma, args.p, args.s)
    entries = {
        "n": args.n,
        "m": args.m,
        "gamma": args.gamma,
        "p": args.p,
        "s": args.s,
        "p_crit": table.p_crit,
        "p1": table.p1,
        "gamma_bar": table.gamma_bar,
        "beta_m": table.beta_m,
        "decay_l2": table.decay_l2,
        "decay_hs": table.decay_hs,
        "decay_lm": table.decay_lm,
        "lifespan_exp": table.lifespan_exp,
    }
    for key, value in entries.items():
        print(f"{key}={_fmt(value)}")
    if args.out is not None:
        run = _run_config(args, entries)
        _write_run_dir(run)
    return 0


# ------------------------- argument parsing -------------------------


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit 2; here they are config errors."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, metavar="PATH",
                        help="flat key=value run configuration file")
    common.add_argument("--out", type=Path, default=None, metavar="DIR",
                        help="output directory for CSV artifacts")
    common.add_argument("--seed", type=int, default=0, metavar="N",
                        help="base seed for randomized campaigns")
    common.add_argument("--threads", type=int, default=0, metavar="N",
                        help="worker threads for sweeps and campaigns (0 = auto)")
    common.add_argument("--verbose", action="store_true",
                        help="progress notes on standard error")

    parser = _Parser(
        prog="dampedwave",
        description="Numerical experiments for a damped nonlinear wave model.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                metavar="SUBCOMMAND")

    p = sub.add_parser("simulate", parents=[common],
                       help="run one simulation and record the norm series")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("decay-fit", parents=[common],
                       help="run one simulation and fit a decay slope")
    p.set_defaults(handler=_cmd_decay_fit)

    p = sub.add_parser("lifespan-sweep", parents=[common],
                       help="bracket blow-up times across an amplitude sweep")
    p.set_defaults(handler=_cmd_lifespan_sweep)

    p = sub.add_parser("blowup-functional", parents=[common],
                       help="pairing functional and data term on stored snapshots")
    p.set_defaults(handler=_cmd_blowup_functional)

    p = sub.add_parser("verify-inequalities", parents=[common],
                       help="randomized stress test of the inequality checks")
    p.set_defaults(handler=_cmd_verify_inequalities)

    p = sub.add_parser("kernel-table", parents=[common],
                       help="print the kernel multiplier on a (t, xi) lattice")
    p.add_argument("--t", required=True, metavar="LIST",
                   help="comma-separated times")
    p.add_argument("--xi", required=True, metavar="LIST",
                   help="comma-separated frequencies")
    p.set_defaults(handler=_cmd_kernel_table)

    p = sub.add_parser("exponent-table", parents=[common],
                       help="print the closed-form exponent table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--s", type=float, default=2.0)
    p.set_defaults(handler=_cmd_exponent_table)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
