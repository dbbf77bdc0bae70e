"""On-disk layout of runs: manifest.json plus one CSV per series."""

from __future__ import annotations

import contextlib
import csv
import json
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .protocols import TimeSeriesBundle

MANIFEST = "manifest.json"
LINK_SERIES = ("field_profile", "subtracted_profile")


def fmt(value: float) -> str:
    return "%.17g" % value


def _column_prefix(name: str) -> str:
    return "link" if name in LINK_SERIES else "x"


def write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_scalar_csv(path: Path, times, name: str, values) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", name])
        for t, v in zip(times, values):
            w.writerow([fmt(t), fmt(v)])


def write_matrix_csv(path: Path, times, name: str, matrix) -> None:
    matrix = np.asarray(matrix)
    prefix = _column_prefix(name)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time"] + [f"{prefix}={j}" for j in range(1, matrix.shape[1] + 1)])
        for t, row in zip(times, matrix):
            w.writerow([fmt(t)] + [fmt(v) for v in row])


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "time":
        raise ConfigurationError(f"{path} is not a time-series CSV")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
    return rows[0], data.reshape(len(rows) - 1, len(rows[0]))


def write_bundle(bundle: TimeSeriesBundle, directory: Path, extra_manifest: dict | None = None) -> None:
    """Write the bundle into an existing, empty directory."""
    directory = Path(directory)
    files = {}
    for name, values in bundle.scalars.items():
        write_scalar_csv(directory / f"{name}.csv", bundle.sample_times, name, values)
        files[name] = {"file": f"{name}.csv", "kind": "scalar"}
    for name, matrix in bundle.vectors.items():
        write_matrix_csv(directory / f"{name}.csv", bundle.sample_times, name, matrix)
        files[name] = {"file": f"{name}.csv", "kind": "vector"}
    manifest = dict(bundle.manifest)
    manifest["series"] = files
    if extra_manifest:
        manifest.update(extra_manifest)
    write_json(directory / MANIFEST, manifest)


def read_manifest(directory: Path) -> dict:
    path = Path(directory) / MANIFEST
    if not path.is_file():
        raise ConfigurationError(f"{directory} has no {MANIFEST}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def read_bundle(directory: Path) -> TimeSeriesBundle:
    directory = Path(directory)
    manifest = read_manifest(directory)
    series = manifest.get("series", {})
    times = None
    scalars, vectors = {}, {}
    for name, info in series.items():
        _, data = read_csv(directory / info["file"])
        if times is None:
            times = data[:, 0]
        elif not np.array_equal(times, data[:, 0]):
            raise ConfigurationError(f"{info['file']} has different sample times")
        if info["kind"] == "scalar":
            scalars[name] = data[:, 1]
        else:
            vectors[name] = data[:, 1:]
    return TimeSeriesBundle(
        sample_times=np.zeros(0) if times is None else times,
        scalars=scalars,
        vectors=vectors,
        manifest=manifest,
    )


def read_series(directory: Path, name: str) -> tuple[np.ndarray, np.ndarray]:
    """(times, values) of one named series of a run directory."""
    manifest = read_manifest(directory)
    info = manifest.get("series", {}).get(name)
    if info is None:
        raise ConfigurationError(
            f"series {name!r} not in {directory}; available: {sorted(manifest.get('series', {}))}"
        )
    _, data = read_csv(Path(directory) / info["file"])
    values = data[:, 1] if info["kind"] == "scalar" else data[:, 1:]
    return data[:, 0], values


@contextlib.contextmanager
def atomic_directory(target: Path):
    """Yield a scratch directory that replaces ``target`` only on success.

    An existing target is replaced only if it holds a manifest (a previous
    run); anything else is left alone and reported.
    """
    target = Path(target)
    if target.exists() and not (target / MANIFEST).is_file():
        raise FileExistsError(f"{target} exists and is not a run directory")
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if target.exists():
        old = target.with_name(f".{target.name}.old")
        shutil.rmtree(old, ignore_errors=True)
        os.replace(target, old)
        os.replace(tmp, target)
        shutil.rmtree(old, ignore_errors=True)
    else:
        os.replace(tmp, target)
