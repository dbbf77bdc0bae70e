"""Command-line entry point: ``znqed quench|string|sweep|analyze|plot``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, persist, svg
from .config import PRESETS, RunConfig
from .errors import ConfigurationError, ZnQedError
from .protocols import SCALAR_PROBES, run_string, run_sweep, run_vacuum_quench

log = logging.getLogger("znqed")

OUTPUT_ROOT_ENV = "ZNQED_OUTPUT_ROOT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _out_dir(args, command: str, cfg: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / f"{command}_{cfg.label}"


def _load_config(args) -> RunConfig:
    if not (args.config or args.preset):
        raise ConfigurationError("give --config and/or --preset")
    return RunConfig.load(args.config, args.preset, args.set)


def _run_header(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "label": cfg.label, "config": cfg.manifest_config()}


def _maybe_svg(directory: Path, bundle, enabled: bool) -> None:
    if not enabled:
        return
    for name, values in bundle.scalars.items():
        text = svg.line_plot(bundle.sample_times, {name: values}, title=name, ylabel=name)
        (directory / f"{name}.svg").write_text(text, encoding="utf-8")


def cmd_quench(args) -> int:
    cfg = _load_config(args)
    if cfg.is_sweep:
        raise ConfigurationError("config defines sweep axes; use the 'sweep' command")
    spec = cfg.quench_spec()
    if spec.string is not None:
        raise ConfigurationError("config defines run.string; use the 'string' command")
    bundle = run_vacuum_quench(spec)
    target = _out_dir(args, "quench", cfg)
    with persist.atomic_directory(target) as tmp:
        persist.write_bundle(bundle, tmp, _run_header(cfg, "quench"))
        _maybe_svg(tmp, bundle, args.svg or cfg.get("output.svg"))
    print(target)
    return EXIT_OK


def cmd_string(args) -> int:
    cfg = _load_config(args)
    if cfg.is_sweep:
        raise ConfigurationError("config defines sweep axes; use the 'sweep' command")
    spec = cfg.quench_spec()
    if spec.string is None:
        raise ConfigurationError("string command needs run.string (separation in sites)")
    s_bundle, v_bundle = run_string(spec)
    target = _out_dir(args, "string", cfg)
    with persist.atomic_directory(target) as tmp:
        persist.write_bundle(s_bundle, tmp, _run_header(cfg, "string"))
        (tmp / "vacuum").mkdir()
        persist.write_bundle(v_bundle, tmp / "vacuum", _run_header(cfg, "string"))
        _maybe_svg(tmp, s_bundle, args.svg or cfg.get("output.svg"))
    print(target)
    return EXIT_OK


def _summary(bundle) -> dict:
    out = {}
    for name, values in bundle.scalars.items():
        out[f"{name}_final"] = float(values[-1])
        out[f"{name}_max"] = float(np.max(values))
    return out


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    names, points, specs = cfg.grid()
    cells = run_sweep(specs, args.workers)
    target = _out_dir(args, "sweep", cfg)
    rows = []
    with persist.atomic_directory(target) as tmp:
        for cell, point in zip(cells, points):
            cell_name = f"cell_{cell.index:03d}"
            row = {"cell": cell_name, **dict(zip(names, point)), "status": "ok" if cell.ok else "failed"}
            if cell.ok:
                d = tmp / cell_name
                d.mkdir()
                header = {**_run_header(cfg, "sweep"), "sweep_point": dict(zip(names, point))}
                persist.write_bundle(cell.bundle, d, header)
                if cell.vacuum is not None:
                    (d / "vacuum").mkdir()
                    persist.write_bundle(cell.vacuum, d / "vacuum", header)
                row.update(_summary(cell.bundle))
            else:
                row["error"] = cell.error.splitlines()[0]
                log.error("%s failed: %s", cell_name, row["error"])
            rows.append(row)
        fields = []
        for r in rows:
            fields += [k for k in r if k not in fields]
        with open(tmp / "sweep_index.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: (persist.fmt(v) if isinstance(v, float) else v) for k, v in r.items()})
        persist.write_json(tmp / persist.MANIFEST, {
            **_run_header(cfg, "sweep"),
            "kind": "sweep",
            "axes": names,
            "cells": rows,
            "code_version": __version__,
            "series": {},
        })
    print(target)
    failed = sum(1 for c in cells if not c.ok)
    if failed:
        log.warning("%d of %d sweep cells failed", failed, len(cells))
        return EXIT_NUMERIC
    return EXIT_OK


# analysis ----------------------------------------------------------------


def _window(text: str | None):
    if not text:
        return analysis.DEFAULT_RATE_WINDOW
    lo, hi = (float(v) for v in text.split(","))
    return lo, hi


def _value_at(times, values, t0: float) -> float:
    i = int(np.argmin(np.abs(times - t0)))
    if abs(times[i] - t0) <= 1e-9:
        return float(values[i])
    if not times[0] <= t0 <= times[-1]:
        raise ConfigurationError(f"t0={t0} outside sampled range")
    return float(np.interp(t0, times, values))


def _sweep_cells(run_dir: Path, manifest: dict):
    if manifest.get("kind") != "sweep":
        raise ConfigurationError(f"{run_dir} is not a sweep directory")
    return [c for c in manifest["cells"] if c["status"] == "ok"]


def analyze(run_dir: Path, task: str, series: str = "rho", window=None, t0: float | None = None,
            prominence: float = analysis.DEFAULT_PROMINENCE, axis: str | None = None) -> dict:
    run_dir = Path(run_dir)
    manifest = persist.read_manifest(run_dir)
    if task in ("peaks", "period", "rate", "logfit"):
        times, values = persist.read_series(run_dir, series)
        if values.ndim != 1:
            raise ConfigurationError(f"{series} is not a scalar series")
        if task == "peaks":
            peaks = analysis.find_peaks(values, times, prominence)
            return {"task": task, "series": series, "peaks": [p.__dict__ for p in peaks]}
        if task == "period":
            return {"task": task, "series": series,
                    "period": analysis.oscillation_period(values, times, prominence)}
        if task == "rate":
            return {"task": task, "series": series, "window": list(window),
                    "fit": analysis.rate_from_series(times, values, window).as_dict()}
        sel = (times >= window[0]) & (times <= window[1]) & (times > 0)
        fit = analysis.curve_fit("logarithmic", times[sel], values[sel])
        return {"task": task, "series": series, "window": list(window), "fit": fit.as_dict()}

    cells = _sweep_cells(run_dir, manifest)
    axes = manifest.get("axes", [])
    axis = axis or (axes[0] if axes else None)
    if axis not in axes:
        raise ConfigurationError(f"axis {axis!r} not among sweep axes {axes}")
    xs, ys = [], []
    for c in cells:
        times, values = persist.read_series(run_dir / c["cell"], series)
        if task == "extrapolate":
            if t0 is None:
                raise ConfigurationError("extrapolate needs --t0")
            ys.append(_value_at(times, values, t0))
        elif task == "peak-fit":
            peaks = analysis.find_peaks(values, times, prominence)
            if not peaks:
                continue
            ys.append(peaks[0].value)
        elif task == "period-fit":
            try:
                ys.append(analysis.oscillation_period(values, times, prominence))
            except analysis.NotEstimable:
                continue
        elif task == "rate-fit":
            ys.append(analysis.rate_from_series(times, values, window)["slope"])
        else:
            raise ConfigurationError(f"unknown task {task!r}")
        xs.append(float(c[axis]))
    report = {"task": task, "series": series, "axis": axis, "x": xs, "y": ys}
    if task == "extrapolate":
        ex = analysis.finite_size_extrapolation(zip(xs, ys))
        report.update(t0=t0, rho_inf=ex.rho_inf, beta=ex.beta,
                      rho_inf_err=ex.rho_inf_err, beta_err=ex.beta_err)
    elif task == "peak-fit":
        report["lorentzian"] = analysis.curve_fit("lorentzian", xs, ys).as_dict()
        report["gaussian"] = analysis.curve_fit("gaussian", xs, ys).as_dict()
    elif task == "period-fit":
        report["reciprocal_linear"] = analysis.curve_fit("reciprocal_linear", xs, ys).as_dict()
    elif task == "rate-fit" and axis == "epsilon":
        m = persist.read_manifest(run_dir / cells[0]["cell"])["spec"]["params"]["m"]
        report["schwinger"] = [analysis.schwinger_rate(e, m) if e > 0 else 0.0 for e in xs]
    return report


def cmd_analyze(args) -> int:
    report = analyze(args.run_dir, args.task, args.series, _window(args.window), args.t0,
                     args.prominence, args.axis)
    out = Path(args.report) if args.report else Path(args.run_dir) / f"analysis_{args.task}.json"
    persist.write_json(out, report)
    print(json.dumps(report, indent=2, sort_keys=True, default=persist._json_default))
    return EXIT_OK


# plotting ----------------------------------------------------------------


def plot(run_dir: Path, series: list[str], kind: str = "auto", metric: str | None = None) -> str:
    run_dir = Path(run_dir)
    manifest = persist.read_manifest(run_dir)
    if manifest.get("kind") == "sweep":
        cells = _sweep_cells(run_dir, manifest)
        axes = manifest["axes"]
        metric = metric or (series[0] + "_final" if series else "rho_max")
        if len(axes) == 1:
            xs = [c[axes[0]] for c in cells]
            return svg.line_plot(xs, {metric: [c[metric] for c in cells]},
                                 title=metric, xlabel=axes[0], ylabel=metric)
        ax_x, ax_y = axes[0], axes[1]
        xs = sorted({c[ax_x] for c in cells})
        ys = sorted({c[ax_y] for c in cells})
        Z = np.full((len(ys), len(xs)), np.nan)
        for c in cells:
            Z[ys.index(c[ax_y]), xs.index(c[ax_x])] = c[metric]
        return svg.heatmap(Z, xs, ys, title=metric, xlabel=ax_x, ylabel=ax_y)
    if not series:
        raise ConfigurationError("name at least one --series")
    data = {name: persist.read_series(run_dir, name) for name in series}
    times = next(iter(data.values()))[0]
    if kind == "auto":
        kind = "heatmap" if data[series[0]][1].ndim == 2 else "line"
    if kind == "heatmap":
        name = series[0]
        _, mat = data[name]
        if mat.ndim != 2:
            raise ConfigurationError(f"{name} is not a matrix series")
        return svg.heatmap(mat, np.arange(1, mat.shape[1] + 1), times, title=name,
                           xlabel="link" if name in persist.LINK_SERIES else "x", ylabel="t")
    for name, (_, vals) in data.items():
        if vals.ndim != 1:
            raise ConfigurationError(f"{name} is a matrix series; use --kind heatmap")
    return svg.line_plot(times, {k: v for k, (_, v) in data.items()}, title=", ".join(series),
                         ylabel=series[0] if len(series) == 1 else "")


def cmd_plot(args) -> int:
    text = plot(args.run_dir, args.series or [], args.kind, args.metric)
    out = Path(args.out) if args.out else Path(args.run_dir) / (
        "_".join(args.series or [args.metric or "plot"]) + ".svg")
    out.write_text(text, encoding="utf-8")
    print(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="znqed", description="Z_n Schwinger model real-time simulator")
    parser.add_argument("--version", action="version", version=f"znqed {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_args(p):
        p.add_argument("--config", help="key = value config file, or a run manifest.json")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one key")
        p.add_argument("--out", help=f"run directory (default ${OUTPUT_ROOT_ENV}/<command>_<label>)")
        p.add_argument("--svg", action="store_true", help="also render scalar series as SVG")

    p = sub.add_parser("quench", help="Dirac-sea quench, optionally in an external field")
    run_args(p)
    p.set_defaults(func=cmd_quench)
    p = sub.add_parser("string", help="string and matched vacuum evolution")
    run_args(p)
    p.set_defaults(func=cmd_string)
    p = sub.add_parser("sweep", help="grid of runs over sweep.* axes")
    run_args(p)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="peaks, periods, fits and extrapolations on saved runs")
    p.add_argument("run_dir")
    p.add_argument("--task", required=True, choices=[
        "peaks", "period", "rate", "logfit", "extrapolate", "peak-fit", "period-fit", "rate-fit"])
    p.add_argument("--series", default="rho")
    p.add_argument("--window", help="t_lo,t_hi for rate and log fits")
    p.add_argument("--t0", type=float)
    p.add_argument("--axis", help="sweep axis used as abscissa")
    p.add_argument("--prominence", type=float, default=analysis.DEFAULT_PROMINENCE)
    p.add_argument("--report", help="report path (default RUN_DIR/analysis_<task>.json)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plot", help="render saved series as SVG")
    p.add_argument("run_dir")
    p.add_argument("--series", action="append")
    p.add_argument("--kind", choices=["auto", "line", "heatmap"], default="auto")
    p.add_argument("--metric", help="sweep summary column, e.g. central_field_sum_final")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ZnQedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, FileExistsError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
