"""Command-line front end: ``ramanmem <subcommand> ...``.

Exit status 0 on success, 2 for configuration or input errors, 3 for
numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import counting, stattests
from .params import MemoryParams, derive_couplings, load_params
from .photonstats import (
    InputState,
    ScanPoint,
    channel_moments,
    channels,
    memory_efficiency_model,
    noise_g2,
    scan_input_number,
    scan_ratio_R,
)
from .propagator import Discretization, cached_greens, check_commutators, check_convergence, save_greens
from .uncertainty import ParamUncertainty, SampleError, ScanTask, mc_band

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
ALLOWED_N = (16, 32, 64, 128, 256, 512)

log = logging.getLogger("ramanmem")


class ConfigError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def table_text(header, rows, fmt_fn=repr) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_fn(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def emit_table(header, rows, args) -> None:
    rows = [list(r) for r in rows]
    if args.format == "json":
        emit(dumps_json([dict(zip(header, r)) for r in rows]), args.output)
    else:
        emit(table_text(header, rows), args.output)


# -- configuration -----------------------------------------------------------

_PARAM_FIELDS = [f.name for f in dataclasses.fields(MemoryParams)]


def _opt_float(text: str):
    return None if text.lower() in ("none", "null", "") else float(text)


def add_param_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("memory parameters")
    g.add_argument("--params", default="paper-nominal", help="preset name or key=value parameter file")
    for name in _PARAM_FIELDS:
        g.add_argument(f"--{name}", dest=f"param_{name}", type=_opt_float, default=argparse.SUPPRESS)
    g.add_argument("--n", type=int, default=None, help="grid size for both z and eps")
    g.add_argument("--nz", type=int, default=None)
    g.add_argument("--neps", type=int, default=None)
    g.add_argument("--cache-dir", default=None, help="Green's function cache (default $RAMANMEM_CACHE_DIR)")


def add_output_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("-o", "--output", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def params_from_args(args) -> MemoryParams:
    overrides = {k[len("param_"):]: v for k, v in vars(args).items() if k.startswith("param_")}
    # setting one occupation implies the other
    if "p3" in overrides and "p1" not in overrides and overrides["p3"] is not None:
        overrides["p1"] = 1.0 - overrides["p3"]
    elif "p1" in overrides and "p3" not in overrides and overrides["p1"] is not None:
        overrides["p3"] = 1.0 - overrides["p1"]
    try:
        return load_params(args.params, **overrides)
    except (FileNotFoundError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def disc_from_args(args, default: int = 128) -> Discretization:
    nz = args.nz or args.n or default
    ne = args.neps or args.n or default
    for v in (nz, ne):
        if v not in ALLOWED_N:
            raise ConfigError(f"grid sizes must be powers of two between 16 and 512, got {v}")
    return Discretization(nz, ne)


def parse_grid(text: str) -> list[float]:
    text = (text or "").strip()
    if not text:
        raise ConfigError("empty grid")
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("range grids are start:stop:count")
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValueError("grid count must be positive")
            return [float(x) for x in np.linspace(start, stop, count)]
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc
    if not values:
        raise ConfigError("empty grid")
    return values


def parse_input(text: str) -> InputState:
    kind, _, arg = text.partition(":")
    try:
        if kind == "vacuum":
            return InputState.vacuum()
        if kind == "coherent":
            return InputState.coherent(float(arg))
        if kind == "thermal":
            return InputState.thermal(float(arg))
        if kind in ("fock", "fock_with_loss"):
            return InputState.fock_with_loss(float(arg) if arg else 1.0)
        if kind == "custom":
            return InputState.custom([float(v) for v in arg.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad input state {text!r}: {exc}") from exc
    raise ConfigError(f"unknown input state {text!r} (vacuum, coherent:N, thermal:N, fock:eta, custom:p0,p1,...)")


# -- commands ----------------------------------------------------------------


def cmd_derive(args) -> int:
    params = params_from_args(args)
    disc_from_args(args)  # the grid is unused here but still validated
    c = derive_couplings(params)
    values = dataclasses.asdict(c)
    if args.format == "json":
        emit(dumps_json(values), args.output)
    else:
        emit("".join(f"{k} = {fmt(v)}\n" for k, v in values.items()), args.output)
    return 0


def cmd_greens(args) -> int:
    params = params_from_args(args)
    disc = disc_from_args(args)
    c = derive_couplings(params)
    g = cached_greens(c, disc, args.cache_dir)
    report = {"N_z": disc.N_z, "N_eps": disc.N_eps}
    if args.save:
        save_greens(g, args.save)
        report["saved"] = args.save
    if args.check:
        report["commutator_residual"] = check_commutators(g)
    if args.convergence:
        N = disc.N_eps
        conv = check_convergence(c, sizes=(N // 4, N // 2, N), coarse=min(16, N // 4))
        report.update(convergence_sizes=conv["sizes"], convergence_changes=conv["changes"],
                      convergence_ratios=conv["ratios"])
    if args.format == "json":
        emit(dumps_json(report), args.output)
    else:
        emit("".join(f"{k} = {fmt(v)}\n" for k, v in report.items()), args.output)
    if args.check and report["commutator_residual"] > args.tol:
        log.error("commutator residual %.3g exceeds tolerance %.3g", report["commutator_residual"], args.tol)
        return EXIT_NUMERIC
    return 0


def cmd_g2(args) -> int:
    params = params_from_args(args)
    disc = disc_from_args(args)
    state = parse_input(args.input)
    g = cached_greens(derive_couplings(params), disc, args.cache_dir)
    trans, ret = channels(g, g, decay=params.decay_factor())
    eff = memory_efficiency_model(g, g)
    selected = {"transmission": [trans], "retrieval": [ret], "both": [trans, ret]}[args.channel]
    report = {"input": args.input, "eta_read_in": eff.eta_read_in, "eta_tot": eff.eta_tot}
    for ch in selected:
        m = channel_moments(ch, state)
        report[ch.label] = {
            "mean_photons": m.mean_photons,
            "second_normal": m.second_normal,
            "g2": m.g2,
            "noise_photons": ch.noise_photons,
            "noise_g2": noise_g2(ch) if ch.noise_photons > 0 else None,
        }
    if args.format == "json":
        emit(dumps_json(report), args.output)
    else:
        lines = [f"input = {args.input}", f"eta_read_in = {fmt(eff.eta_read_in)}", f"eta_tot = {fmt(eff.eta_tot)}"]
        for ch in selected:
            for k, v in report[ch.label].items():
                lines.append(f"{ch.label}.{k} = {fmt(v)}")
        emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_scan_n(args) -> int:
    params = params_from_args(args)
    disc = disc_from_args(args)
    grid = parse_grid(args.grid)
    g = cached_greens(derive_couplings(params), disc, args.cache_dir)
    try:
        points = scan_input_number(g, g, args.family, grid, decay=params.decay_factor())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    emit_table(ScanPoint.FIELDS, (p.row() for p in points), args)
    return 0


def cmd_scan_r(args) -> int:
    params = params_from_args(args)
    disc = disc_from_args(args)
    grid = parse_grid(args.grid)
    try:
        state = parse_input(args.input)
        points = scan_ratio_R(params, grid, state, disc, args.cache_dir)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    emit_table(ScanPoint.FIELDS, (p.row() for p in points), args)
    return 0


def cmd_mc(args) -> int:
    params = params_from_args(args)
    disc = disc_from_args(args, default=64)
    grid = parse_grid(args.grid)
    try:
        u = ParamUncertainty(n_samples=args.samples, rng_seed=args.seed).scaled(args.sigma_scale)
        task = ScanTask(params, tuple(grid), args.family, args.channel, disc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    band = mc_band(task, u, workers=args.workers)
    emit_table(band.FIELDS, band.rows(), args)
    return 0


def _analysis_report(records, args) -> dict:
    report = {"groups": {}}
    for group in counting.groups(records):
        entry = {}
        mine = [r for r in records if r.group == group]
        for setting in counting.SETTINGS:
            if not any(r.setting == setting for r in mine):
                continue
            for b in counting.BINS:
                try:
                    est = counting.pooled_g2(mine, setting, b)
                except (counting.RecordError, ZeroDivisionError):
                    continue
                item = {"g2": est.value, "error": est.error, "runs": est.counts["runs"],
                        "duration_s": est.counts["duration"]}
                try:
                    runs = counting.per_run_values(mine, setting, b)
                except ZeroDivisionError:
                    # runs without pair counts have no per-run g2
                    runs = np.empty(0)
                if runs.size >= 2 and runs.std() > 0:
                    t = stattests.t_test_one_sample_two_sided(runs, est.value)
                    item["t_test"] = {"t": t.statistic, "p": t.p_value}
                if 3 <= runs.size <= 5000 and runs.std() > 0:
                    sw = stattests.shapiro_wilk(runs)
                    item["shapiro_wilk"] = {"W": sw.statistic, "p": sw.p_value}
                entry[f"{setting}/{b}"] = item
        try:
            eta, err = counting.efficiency_from_counts(mine)
            entry["efficiency"] = {"eta_tot": eta, "error": err}
        except counting.RecordError:
            if args.efficiency:
                raise
        report["groups"][group] = entry
    if args.welch:
        ga, gb = args.welch
        a = counting.per_run_values([r for r in records if r.group == ga], args.setting, args.bin)
        b = counting.per_run_values([r for r in records if r.group == gb], args.setting, args.bin)
        res = stattests.welch_test_one_sided(a, b)
        report["welch"] = {"a": ga, "b": gb, "setting": args.setting, "bin": args.bin,
                           "t": res.statistic, "dof": res.dof, "p": res.p_value}
    return report


def cmd_analyze(args) -> int:
    try:
        records = counting.read_records(args.records)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        report = _analysis_report(records, args)
    except (counting.RecordError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    emit(dumps_json(report), args.output)
    return 0


def _column(path: str, name: str) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if name not in (reader.fieldnames or []):
            raise ConfigError(f"{path}: no column {name!r}")
        return np.array([float(row[name]) for row in reader if row[name].strip()])


def cmd_stats_test(args) -> int:
    try:
        a = _column(args.file, args.a)
        if args.test == "welch":
            if not args.b:
                raise ConfigError("welch needs --b")
            res = stattests.welch_test_one_sided(a, _column(args.file, args.b))
        elif args.test == "ttest":
            res = stattests.t_test_one_sample_two_sided(a, args.mu0)
        else:
            res = stattests.shapiro_wilk(a)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = {"test": args.test, "statistic": res.statistic, "p_value": res.p_value}
    if res.dof is not None:
        out["dof"] = res.dof
    emit(dumps_json(out), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ramanmem", description="Raman quantum memory noise and photon statistics")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="print the dimensionless couplings")
    add_param_options(p)
    add_output_options(p)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("greens", help="build Green's functions; check commutators")
    add_param_options(p)
    add_output_options(p)
    p.add_argument("--check", action="store_true")
    p.add_argument("--convergence", action="store_true")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--save", default=None, help="write the Green's functions to this .npz file")
    p.set_defaults(func=cmd_greens)

    p = sub.add_parser("g2", help="photon statistics of one input state")
    add_param_options(p)
    add_output_options(p)
    p.add_argument("--input", default="fock:0.22")
    p.add_argument("--channel", choices=("transmission", "retrieval", "both"), default="both")
    p.set_defaults(func=cmd_g2)

    p = sub.add_parser("scan-n", help="g2 versus input photon number")
    add_param_options(p)
    add_output_options(p)
    p.add_argument("--family", choices=("coherent", "fock", "thermal"), default="coherent")
    p.add_argument("--grid", default="0:2.5:26")
    p.set_defaults(func=cmd_scan_n)

    p = sub.add_parser("scan-r", help="retrieved g2 versus anti-Stokes coupling ratio C'/C")
    add_param_options(p)
    add_output_options(p)
    p.add_argument("--input", default="fock:0.22")
    p.add_argument("--grid", default="0:1:21")
    p.set_defaults(func=cmd_scan_r)

    p = sub.add_parser("mc", help="Monte-Carlo uncertainty band of a photon-number scan")
    add_param_options(p)
    add_output_options(p)
    p.add_argument("--family", choices=("coherent", "fock", "thermal"), default="coherent")
    p.add_argument("--channel", choices=("transmission", "retrieval"), default="retrieval")
    p.add_argument("--grid", default="0:2.5:11")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-scale", type=float, default=1.0, help="multiply all parameter sigmas")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("analyze", help="g2 and efficiency estimators from run-record CSV")
    p.add_argument("records")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--efficiency", action="store_true", help="require settings scd, cd, sd for every group")
    p.add_argument("--welch", nargs=2, metavar=("GROUP_A", "GROUP_B"),
                   help="one-sided Welch test on per-run g2, H1: mean(A) > mean(B)")
    p.add_argument("--setting", default="scd")
    p.add_argument("--bin", default="out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("stats-test", help="Welch, one-sample t or Shapiro-Wilk test on CSV columns")
    p.add_argument("test", choices=("welch", "ttest", "shapiro"))
    p.add_argument("--file", required=True)
    p.add_argument("--a", required=True, help="sample column")
    p.add_argument("--b", default=None, help="second sample column (welch)")
    p.add_argument("--mu0", type=float, default=0.0)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_stats_test)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ZeroDivisionError, FloatingPointError, SampleError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
