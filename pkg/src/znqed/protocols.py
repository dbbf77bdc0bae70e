"""Quench drivers: vacuum quench, external-field quench, string dynamics, sweeps."""

from __future__ import annotations

import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__, _accel
from .errors import ConfigurationError
from .evolve import IntegratorSpec, evolve
from .model import (
    ModelParams,
    build_basis,
    build_hamiltonian,
    centered_string_sites,
    dirac_vacuum,
    string_state,
)
from .observe import (
    central_field_sum,
    connected_correlation,
    field_profile,
    half_chain_entropy,
    mean_field,
    particle_density,
    site_densities,
    vacuum_subtracted_profile,
)

__all__ = [
    "QuenchSpec",
    "TimeSeriesBundle",
    "SweepCell",
    "critical_field",
    "background_angle",
    "run_vacuum_quench",
    "run_string",
    "run_spec",
    "run_sweep",
    "string_breaking",
]

SCALAR_PROBES = ("rho", "entropy", "mean_field")
VECTOR_PROBES = ("field_profile", "correlation", "site_density")
EC_FORMULAS = ("lattice_g", "g_n")


def critical_field(m: float, g: float, n: int, formula: str = "lattice_g") -> float:
    """E_c = m^2 / g; ``g_n`` uses g*sqrt(2 pi/n) instead of g."""
    if formula == "lattice_g":
        return m * m / g
    if formula == "g_n":
        return m * m / (g * math.sqrt(2 * math.pi / n))
    raise ConfigurationError(f"unknown E_c formula {formula!r}; choose from {EC_FORMULAS}")


def background_angle(epsilon: float, params: ModelParams, formula: str = "lattice_g") -> float:
    """Angle phi realizing a uniform field E_0 = epsilon * E_c."""
    if epsilon == 0:
        return 0.0
    if params.g == 0:
        raise ConfigurationError("external field needs g != 0 to define E_c")
    e0 = epsilon * critical_field(params.m, params.g, params.n, formula)
    return e0 / params.field_unit


@dataclass(frozen=True)
class QuenchSpec:
    params: ModelParams
    t_max: float = 5.0
    integrator: IntegratorSpec = field(default_factory=IntegratorSpec)
    probes: tuple[str, ...] = ("rho", "entropy", "mean_field", "field_profile")
    epsilon: float | None = None
    string: int | None = None
    sample_every: int = 5
    ec_formula: str = "lattice_g"
    central_links: int = 12
    correlation_ref: int | None = None
    allow_combined: bool = False

    def __post_init__(self):
        unknown = set(self.probes) - set(SCALAR_PROBES) - set(VECTOR_PROBES)
        if unknown:
            raise ConfigurationError(f"unknown probes {sorted(unknown)}")
        if self.epsilon is not None and self.string is not None and not self.allow_combined:
            raise ConfigurationError("epsilon and string both set; pass allow_combined=True to combine")
        if self.epsilon is not None and self.epsilon < 0:
            raise ConfigurationError("epsilon must be >= 0")
        if self.ec_formula not in EC_FORMULAS:
            raise ConfigurationError(f"ec_formula must be one of {EC_FORMULAS}")
        if not self.t_max > 0:
            raise ConfigurationError("t_max must be positive")

    def effective_params(self) -> ModelParams:
        if not self.epsilon:
            return self.params
        phi = self.params.phi + background_angle(self.epsilon, self.params, self.ec_formula)
        return self.params.replace(phi=phi)

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "t_max": self.t_max,
            "integrator": self.integrator.as_dict(),
            "probes": list(self.probes),
            "epsilon": self.epsilon,
            "string": self.string,
            "sample_every": self.sample_every,
            "ec_formula": self.ec_formula,
            "central_links": self.central_links,
            "correlation_ref": self.correlation_ref,
            "allow_combined": self.allow_combined,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuenchSpec":
        d = dict(d)
        d["params"] = ModelParams(**d["params"])
        d["integrator"] = IntegratorSpec(**d["integrator"])
        d["probes"] = tuple(d["probes"])
        return cls(**d)


@dataclass
class TimeSeriesBundle:
    sample_times: np.ndarray
    scalars: dict[str, np.ndarray]
    vectors: dict[str, np.ndarray]
    manifest: dict

    @property
    def records(self) -> dict:
        return {**self.scalars, **self.vectors}

    @property
    def meta(self) -> dict:
        return {"params": self.manifest.get("params")}

    def same_data(self, other: "TimeSeriesBundle") -> bool:
        """Bitwise equality of every series (manifest timings ignored)."""
        if not np.array_equal(self.sample_times, other.sample_times):
            return False
        for mine, theirs in ((self.scalars, other.scalars), (self.vectors, other.vectors)):
            if mine.keys() != theirs.keys():
                return False
            if any(not np.array_equal(mine[k], theirs[k]) for k in mine):
                return False
        return True


def _probe_functions(spec: QuenchSpec, basis, phi: float) -> dict:
    ref = spec.correlation_ref
    table = {
        "rho": lambda s: particle_density(s, basis),
        "entropy": lambda s: half_chain_entropy(s, basis),
        "mean_field": lambda s: mean_field(s, basis, phi),
        "field_profile": lambda s: field_profile(s, basis, phi),
        "correlation": lambda s: connected_correlation(s, basis, ref),
        "site_density": lambda s: site_densities(s, basis),
    }
    return {name: table[name] for name in spec.probes}


def _manifest(spec: QuenchSpec, params: ModelParams, kind: str, wall: float, extra=None) -> dict:
    out = {
        "schema_version": 1,
        "kind": kind,
        "spec": spec.as_dict(),
        "params": params.as_dict(),
        "integrator": spec.integrator.as_dict(),
        "code_version": __version__,
        "backend": _accel.backend(),
        "numpy_version": np.__version__,
        "wall_time_s": wall,
    }
    if extra:
        out.update(extra)
    return out


def _bundle(traj, spec, params, kind, wall, extra=None) -> TimeSeriesBundle:
    scalars = {"norm": np.asarray(traj.norm_history), "energy": np.asarray(traj.energy_history)}
    vectors = {}
    for name in spec.probes:
        arr = np.asarray(traj.records[name], dtype=np.float64)
        (scalars if name in SCALAR_PROBES else vectors)[name] = arr
    return TimeSeriesBundle(
        sample_times=np.asarray(traj.sample_times),
        scalars=scalars,
        vectors=vectors,
        manifest=_manifest(spec, params, kind, wall, extra),
    )


def _setup(spec: QuenchSpec):
    params = spec.effective_params()
    basis = build_basis(params)
    H = build_hamiltonian(params, basis)
    return params, basis, H


def run_vacuum_quench(spec: QuenchSpec) -> TimeSeriesBundle:
    """Evolve the Dirac sea under the quenched Hamiltonian."""
    if spec.string is not None:
        raise ConfigurationError("run_vacuum_quench does not take a string; use run_string")
    t0 = time.perf_counter()
    params, basis, H = _setup(spec)
    traj = evolve(
        H, dirac_vacuum(basis), spec.t_max, spec.integrator, spec.sample_every,
        _probe_functions(spec, basis, params.phi),
    )
    return _bundle(traj, spec, params, "quench", time.perf_counter() - t0)


def run_string(spec: QuenchSpec) -> tuple[TimeSeriesBundle, TimeSeriesBundle]:
    """Evolve a centered string and the matched Dirac sea on one basis and H.

    The string bundle carries the vacuum-subtracted profile and its central
    sum as extra series.
    """
    if spec.string is None:
        raise ConfigurationError("run_string needs a string separation")
    if "field_profile" not in spec.probes:
        spec = replace(spec, probes=tuple(spec.probes) + ("field_profile",))
    t0 = time.perf_counter()
    params, basis, H = _setup(spec)
    x_left, x_right = centered_string_sites(params.N, spec.string)
    probes = _probe_functions(spec, basis, params.phi)
    s_traj = evolve(H, string_state(basis, x_left, x_right), spec.t_max, spec.integrator,
                    spec.sample_every, probes)
    v_traj = evolve(H, dirac_vacuum(basis), spec.t_max, spec.integrator, spec.sample_every, probes)
    if s_traj.meta["basis_tag"] != v_traj.meta["basis_tag"]:
        raise ConfigurationError("paired runs ended up on different bases")
    wall = time.perf_counter() - t0
    extra = {"string_sites": [x_left, x_right], "basis_tag": list(map(str, basis.tag))}
    s_bundle = _bundle(s_traj, spec, params, "string", wall, extra)
    v_bundle = _bundle(v_traj, spec, params, "string_vacuum", wall, extra)
    sub = vacuum_subtracted_profile(s_bundle, v_bundle)
    s_bundle.vectors["subtracted_profile"] = sub
    s_bundle.scalars["central_field_sum"] = np.asarray(
        central_field_sum(sub, min(spec.central_links, params.N - 1))
    )
    return s_bundle, v_bundle


def string_breaking(string_bundle: TimeSeriesBundle) -> np.ndarray:
    """Central-field sum relative to its t=0 value."""
    c = string_bundle.scalars["central_field_sum"]
    return c / c[0]


@dataclass
class SweepCell:
    index: int
    spec: QuenchSpec
    bundle: TimeSeriesBundle | None = None
    vacuum: TimeSeriesBundle | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def run_spec(spec: QuenchSpec):
    if spec.string is not None:
        return run_string(spec)
    return run_vacuum_quench(spec), None


def _run_cell(args) -> SweepCell:
    index, spec = args
    try:
        main, vac = run_spec(spec)
        return SweepCell(index, spec, main, vac)
    except Exception as exc:  # recorded per cell, sweep continues
        return SweepCell(index, spec, error=f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}")


def run_sweep(grid: list[QuenchSpec], parallelism: int = 1) -> list[SweepCell]:
    """Run every spec; results come back in grid order whatever the scheduling."""
    if not grid:
        raise ConfigurationError("empty sweep grid")
    jobs = list(enumerate(grid))
    if parallelism <= 1 or len(jobs) == 1:
        return [_run_cell(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_cell, jobs))
