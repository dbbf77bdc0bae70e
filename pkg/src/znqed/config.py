"""Flat ``section.key = value`` run configuration and built-in presets."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigurationError
from .evolve import IntegratorSpec
from .model import ModelParams
from .protocols import QuenchSpec


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "none") else int(text)


def _coupling(text: str):
    t = text.strip().lower()
    return "standard" if t == "standard" else float(t)


def _str(text: str) -> str:
    return text.strip()


def _probe_list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


KEYS = {
    "model.n": int,
    "model.N": int,
    "model.m": float,
    "model.g": _coupling,
    "model.t_hop": float,
    "model.phi": float,
    "model.boundary_level": int,
    "run.t_max": float,
    "run.sample_every": int,
    "run.probes": _probe_list,
    "run.epsilon": _opt_float,
    "run.string": _opt_int,
    "run.ec_formula": _str,
    "run.central_links": int,
    "run.correlation_ref": _opt_int,
    "integrator.method": _str,
    "integrator.dt": float,
    "integrator.krylov_dim": int,
    "integrator.krylov_tol": float,
    "integrator.renormalize": _bool,
    "sweep.m": _float_list,
    "sweep.g": _float_list,
    "sweep.N": _int_list,
    "sweep.n": _int_list,
    "sweep.epsilon": _float_list,
    "output.svg": _bool,
}

DEFAULTS = {
    "model.n": 3,
    "model.N": 12,
    "model.m": 0.5,
    "model.g": "standard",
    "model.t_hop": 1.0,
    "model.phi": 0.0,
    "model.boundary_level": 0,
    "run.t_max": 5.0,
    "run.sample_every": 5,
    "run.probes": ("rho", "entropy", "mean_field", "field_profile"),
    "run.epsilon": None,
    "run.string": None,
    "run.ec_formula": "lattice_g",
    "run.central_links": 12,
    "run.correlation_ref": None,
    "integrator.method": "krylov",
    "integrator.dt": 0.01,
    "integrator.krylov_dim": 20,
    "integrator.krylov_tol": 1e-10,
    "integrator.renormalize": False,
    "output.svg": False,
}

SWEEP_AXES = {"sweep.m": "m", "sweep.g": "g", "sweep.N": "N", "sweep.n": "n", "sweep.epsilon": "epsilon"}


def parse_text(text: str, source: str = "<config>") -> dict:
    """Parse key = value lines; ``[section]`` headers prefix following keys."""
    out = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if section and "." not in key:
            key = f"{section}.{key}"
        out[key] = _convert(key, value, f"{source}:{lineno}")
    return out


def _convert(key: str, value, where: str):
    if key not in KEYS:
        raise ConfigurationError(f"{where}: unknown key {key!r}")
    if not isinstance(value, str):
        value = _to_text(value)
    try:
        return KEYS[key](value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: bad value for {key}: {exc}") from None


def _to_text(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, (list, tuple)):
        return ",".join(_to_text(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


PRESETS = {
    "fig3": "model.N = 4\nmodel.m = 0.5\nrun.t_max = 5\n",
    "fig4": (
        "model.N = 12\nrun.t_max = 4\nrun.probes = rho, entropy\n"
        "sweep.m = 5.0, 2.0, 1.0, -0.5\n"
    ),
    "fig4a": "model.N = 12\nmodel.m = 5.0\nrun.t_max = 4\n",
    "fig4c": "model.N = 12\nmodel.m = -0.5\nrun.t_max = 4\n",
    "fig7-free": "model.N = 12\nmodel.m = 0\nmodel.g = 0\nrun.t_max = 4\n",
    "fig8": (
        "model.N = 12\nmodel.m = -0.5\nrun.t_max = 4\n"
        "run.probes = rho, entropy, correlation\n"
    ),
    "fig9a": "model.N = 16\nmodel.m = 0.1\nmodel.g = 0.1\nrun.string = 6\nrun.t_max = 4\n",
    "fig9b": "model.N = 16\nmodel.m = 0.3\nmodel.g = 0.8\nrun.string = 6\nrun.t_max = 4\n",
    "fig9c": "model.N = 16\nmodel.m = 3.0\nmodel.g = 1.42\nrun.string = 6\nrun.t_max = 4\n",
    "fig6": (
        "model.N = 12\nrun.t_max = 4\nrun.probes = rho, entropy\n"
        "sweep.m = -5, -4, -3, -2, -1, -0.5, 0, 0.5, 1, 2, 3, 4, 5\n"
    ),
    "fig10": (
        "model.N = 16\nrun.string = 6\nrun.t_max = 4\nrun.probes = field_profile\n"
        "sweep.m = 0.1, 1.0, 2.0, 3.0\nsweep.g = 0.1, 0.5, 1.0, 1.42\n"
    ),
    "fig12": (
        "model.N = 12\nmodel.m = 4.5\nrun.t_max = 2\nrun.probes = rho\n"
        "sweep.epsilon = 0.1, 0.2, 0.3, 0.4, 0.5, 1, 2\n"
    ),
    "fig13": (
        "model.m = 2.0\nrun.t_max = 1\nrun.sample_every = 1\nrun.probes = rho\n"
        "sweep.N = 8, 10, 12, 14, 16\n"
    ),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    label: str = "run"

    @classmethod
    def load(cls, path: str | Path | None = None, preset: str | None = None,
             overrides: list[str] | None = None) -> "RunConfig":
        values = {}
        label = "run"
        if preset:
            if preset not in PRESETS:
                raise ConfigurationError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
            values.update(parse_text(PRESETS[preset], f"<preset {preset}>"))
            label = preset
        if path:
            path = Path(path)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigurationError(f"cannot read config {path}: {exc}") from None
            if path.suffix == ".json":
                values.update(cls.from_manifest(json.loads(text), str(path)).values)
            else:
                values.update(parse_text(text, str(path)))
            label = path.stem if label == "run" else label
        for i, item in enumerate(overrides or [], start=1):
            values.update(parse_text(item, f"<--set #{i}>"))
        return cls(values, label)

    @classmethod
    def from_manifest(cls, manifest: dict, source: str = "<manifest>") -> "RunConfig":
        cfg = manifest.get("config")
        if not isinstance(cfg, dict):
            raise ConfigurationError(f"{source}: manifest has no 'config' section")
        return cls({k: _convert(k, v, source) for k, v in cfg.items()}, manifest.get("label", "run"))

    def get(self, key: str):
        return self.values.get(key, DEFAULTS.get(key))

    def resolved(self) -> dict:
        """Every key with its effective value, for the manifest."""
        out = {k: self.get(k) for k in DEFAULTS}
        out.update({k: v for k, v in self.values.items() if k.startswith("sweep.")})
        return out

    def manifest_config(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(self.resolved().items())}

    @property
    def is_sweep(self) -> bool:
        return any(k in self.values for k in SWEEP_AXES)

    def quench_spec(self, **overrides) -> QuenchSpec:
        unknown = set(overrides) - set(SWEEP_AXES.values())
        if unknown:
            raise ConfigurationError(f"cannot override {sorted(unknown)}")

        def get(key):
            axis = key.split(".", 1)[1]
            return overrides[axis] if axis in overrides else self.get(key)

        n = int(get("model.n"))
        g = get("model.g")
        g = math.sqrt(n / math.pi) if g == "standard" else float(g)
        params = ModelParams(
            n=n,
            N=int(get("model.N")),
            m=float(get("model.m")),
            g=g,
            t_hop=float(self.get("model.t_hop")),
            phi=float(self.get("model.phi")),
            boundary_level=int(self.get("model.boundary_level")),
        )
        integ = IntegratorSpec(
            method=self.get("integrator.method"),
            dt=self.get("integrator.dt"),
            krylov_dim=self.get("integrator.krylov_dim"),
            krylov_tol=self.get("integrator.krylov_tol"),
            renormalize=self.get("integrator.renormalize"),
        )
        eps = overrides.get("epsilon", self.get("run.epsilon"))
        return QuenchSpec(
            params=params,
            t_max=float(self.get("run.t_max")),
            integrator=integ,
            probes=tuple(self.get("run.probes")),
            epsilon=eps,
            string=self.get("run.string"),
            sample_every=int(self.get("run.sample_every")),
            ec_formula=self.get("run.ec_formula"),
            central_links=int(self.get("run.central_links")),
            correlation_ref=self.get("run.correlation_ref"),
        )

    def grid(self) -> tuple[list[str], list[tuple], list[QuenchSpec]]:
        """(axis names, axis values per cell, specs) in row-major order."""
        axes = [(SWEEP_AXES[k], self.values[k]) for k in SWEEP_AXES if k in self.values]
        if not axes or any(len(vals) == 0 for _, vals in axes):
            raise ConfigurationError("empty sweep grid")
        names = [a for a, _ in axes]
        points = list(itertools.product(*(vals for _, vals in axes)))
        specs = [self.quench_spec(**dict(zip(names, pt))) for pt in points]
        return names, points, specs

    def with_values(self, **kv) -> "RunConfig":
        return replace(self, values={**self.values, **kv})
