"""Real-time propagation under a fixed Hamiltonian: classical RK4 and Lanczos-Krylov."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import _accel
from .errors import ConfigurationError, NumericalFailure
from .model import SparseOperator, StateVector

__all__ = ["Method", "IntegratorSpec", "Trajectory", "step", "evolve", "krylov_expmv", "rk4_step"]

Probe = Callable[[StateVector], object]


class Method(str, enum.Enum):
    RK4 = "rk4"
    KRYLOV = "krylov"


@dataclass(frozen=True)
class IntegratorSpec:
    method: Method = Method.KRYLOV
    dt: float = 0.01
    krylov_dim: int = 20
    krylov_tol: float = 1e-10
    renormalize: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", Method(str(self.method).lower().split(".")[-1]))
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.krylov_dim < 2:
            raise ConfigurationError(f"krylov_dim must be >= 2, got {self.krylov_dim}")
        if not self.krylov_tol > 0:
            raise ConfigurationError("krylov_tol must be positive")

    def as_dict(self) -> dict:
        return {
            "method": self.method.value,
            "dt": self.dt,
            "krylov_dim": self.krylov_dim,
            "krylov_tol": self.krylov_tol,
            "renormalize": self.renormalize,
        }


@dataclass
class Trajectory:
    sample_times: np.ndarray
    records: dict[str, list] = field(default_factory=dict)
    norm_history: np.ndarray = None
    energy_history: np.ndarray = None
    snapshots: list[StateVector] | None = None
    final_state: StateVector | None = None
    meta: dict = field(default_factory=dict)

    def series(self, name: str) -> np.ndarray:
        return np.asarray(self.records[name])

    def __len__(self):
        return len(self.sample_times)


def rk4_step(H: SparseOperator, a: np.ndarray, dt: float) -> np.ndarray:
    k1 = -1j * H.matvec(a)
    k2 = -1j * H.matvec(a + 0.5 * dt * k1)
    k3 = -1j * H.matvec(a + 0.5 * dt * k2)
    k4 = -1j * H.matvec(a + dt * k3)
    return a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _expm_tridiag_e1(alpha, beta, dt):
    if len(alpha) == 1:
        return np.array([np.exp(-1j * dt * alpha[0])])
    w, S = eigh_tridiagonal(np.asarray(alpha), np.asarray(beta))
    return S @ (np.exp(-1j * dt * w) * S[0].conj())


def krylov_expmv(H: SparseOperator, a: np.ndarray, dt: float, krylov_dim: int = 20,
                 tol: float = 1e-10, _depth: int = 0) -> np.ndarray:
    """exp(-i H dt) a by Lanczos with full reorthogonalization.

    The subspace grows until the a posteriori error estimate
    beta_m |[exp(-i dt T_m) e1]_m| drops below ``tol``; if ``krylov_dim``
    vectors do not suffice the step is split in two.
    """
    beta0 = float(np.linalg.norm(a))
    if beta0 == 0.0:
        return np.zeros_like(a)
    dim = a.shape[0]
    kmax = min(krylov_dim, dim)
    V = np.empty((kmax, dim), dtype=np.complex128)
    V[0] = a / beta0
    alpha: list[float] = []
    beta: list[float] = []
    w = np.empty(dim, dtype=np.complex128)
    coeffs = None
    for j in range(kmax):
        H.matvec(V[j], w)
        alpha.append(float(np.vdot(V[j], w).real))
        _accel.mgs(V, j + 1, w)
        b = float(np.linalg.norm(w))
        coeffs = _expm_tridiag_e1(alpha, beta, dt)
        if b < 1e-13 or b * abs(coeffs[-1]) * beta0 < tol:
            return beta0 * (coeffs @ V[: j + 1])
        if j + 1 < kmax:
            beta.append(b)
            V[j + 1] = w / b
    if _depth > 30:
        raise NumericalFailure("Krylov step did not converge", {"dt": dt, "krylov_dim": krylov_dim})
    half = krylov_expmv(H, a, 0.5 * dt, krylov_dim, 0.5 * tol, _depth + 1)
    return krylov_expmv(H, half, 0.5 * dt, krylov_dim, 0.5 * tol, _depth + 1)


def _advance(H: SparseOperator, a: np.ndarray, spec: IntegratorSpec) -> np.ndarray:
    if spec.method is Method.RK4:
        out = rk4_step(H, a, spec.dt)
    else:
        out = krylov_expmv(H, a, spec.dt, spec.krylov_dim, spec.krylov_tol)
    nrm = float(np.linalg.norm(out))
    if not math.isfinite(nrm):
        raise NumericalFailure(
            "non-finite amplitudes after step",
            {"method": spec.method.value, "dt": spec.dt, "input_norm": float(np.linalg.norm(a))},
        )
    if spec.renormalize and nrm > 0:
        out /= nrm
    return out


def step(H: SparseOperator, psi: StateVector, spec: IntegratorSpec) -> StateVector:
    """Advance ``psi`` by ``spec.dt`` under d psi/dt = -i H psi."""
    H.check_tag(psi.basis_tag)
    return StateVector.from_array(_advance(H, psi.amplitudes, spec), psi.basis_tag)


def evolve(
    H: SparseOperator,
    psi0: StateVector,
    t_max: float,
    spec: IntegratorSpec = IntegratorSpec(),
    sample_every: int = 5,
    probes: Mapping[str, Probe] | None = None,
    keep_states: bool = False,
) -> Trajectory:
    """Step from t=0 to ``t_max``, evaluating probes every ``sample_every`` steps.

    Sample times are ``k * dt`` for integer k, never accumulated sums.
    The recorded energy is <H> / <psi|psi>.
    """
    if not t_max > 0:
        raise ConfigurationError(f"t_max must be positive, got {t_max}")
    if sample_every < 1:
        raise ConfigurationError("sample_every must be >= 1")
    H.check_tag(psi0.basis_tag)
    probes = dict(probes or {})
    nsteps = int(round(t_max / spec.dt))
    if abs(nsteps * spec.dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ConfigurationError(f"t_max={t_max} is not a multiple of dt={spec.dt}")

    times, norms, energies = [], [], []
    records = {name: [] for name in probes}
    snaps = [] if keep_states else None
    Ha = np.empty(psi0.dim, dtype=np.complex128)

    def sample(k, a):
        psi = StateVector.from_array(a, psi0.basis_tag)
        times.append(k * spec.dt)
        norms.append(psi.recorded_norm)
        H.matvec(a, Ha)
        energies.append(float(np.vdot(a, Ha).real) / psi.recorded_norm ** 2)
        for name, fn in probes.items():
            records[name].append(fn(psi))
        if snaps is not None:
            snaps.append(psi.copy())

    a = psi0.amplitudes.copy()
    sample(0, a)
    for k in range(1, nsteps + 1):
        try:
            a = _advance(H, a, spec)
        except NumericalFailure as exc:
            exc.diagnostics["time"] = k * spec.dt
            raise
        if k % sample_every == 0 or k == nsteps:
            sample(k, a)
    return Trajectory(
        sample_times=np.asarray(times),
        records=records,
        norm_history=np.asarray(norms),
        energy_history=np.asarray(energies),
        snapshots=snaps,
        final_state=StateVector.from_array(a, psi0.basis_tag),
        meta={"basis_tag": psi0.basis_tag, "integrator": spec.as_dict()},
    )
