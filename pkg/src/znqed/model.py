"""Gauge-invariant basis, Hamiltonian and initial states of the Z_n Schwinger model.

Sites are numbered 1..N and carry staggered mass (-1)**x * m.  Link (x, x+1)
holds an electric-field level; the level on the virtual link left of site 1
labels the boundary sector.  Occupation patterns are stored as integers with
site 1 as the most significant bit, so ``0b1010`` is the N=4 Dirac sea.

Gauss's law is imposed on integer link levels modulo n,

    level(x, x+1) = fold(level(x-1, x) - q_x),   q_x = n_x + ((-1)**x - 1) / 2,

with ``fold`` mapping into the centered range.  With this orientation the
hopping term psi^dag_{x+1} U psi_x (U raises the level by one) maps physical
states onto physical states, and a fermion moved rightwards leaves a +1 link
behind it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from . import _accel
from .errors import ConfigurationError, ContractViolation, DomainError

__all__ = [
    "ModelParams",
    "FermionConfig",
    "GaugeInvariantBasis",
    "SparseOperator",
    "StateVector",
    "field_eigenvalue",
    "build_basis",
    "build_hamiltonian",
    "dirac_vacuum",
    "string_state",
    "string_config",
    "config_link_levels",
    "centered_string_sites",
    "count_wrap_elements",
]

MAX_BASIS_DIM = 1 << 24


def level_offset(n: int) -> int:
    """Index k of the level called 0; levels run from -offset to n-1-offset."""
    return (n - 1) // 2


def field_eigenvalue(k: int, n: int, phi: float = 0.0) -> float:
    """Electric field on a link in eigenstate k (0 <= k < n)."""
    if not 0 <= k <= n - 1:
        raise DomainError(f"level index k={k} outside 0..{n - 1}")
    return math.sqrt(2.0 * math.pi / n) * (k - (n - 1) / 2.0 + phi)


@dataclass(frozen=True)
class ModelParams:
    """Couplings and lattice geometry.

    ``g`` is the lattice coupling; the field quantum sqrt(2 pi / n) enters
    only through the electric energy.  ``boundary_level`` is a centered level
    (-(n-1)//2 .. n-1-(n-1)//2).
    """

    n: int = 3
    N: int = 4
    m: float = 0.5
    g: float = 1.0
    t_hop: float = 1.0
    phi: float = 0.0
    boundary_level: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ConfigurationError(f"group order n must be an integer >= 2, got {self.n}")
        if int(self.N) != self.N or self.N < 2:
            raise ConfigurationError(f"number of sites N must be an integer >= 2, got {self.N}")
        if self.N % 2:
            raise ConfigurationError(f"number of sites N must be even, got {self.N}")
        lo, hi = self.level_range
        if not lo <= self.boundary_level <= hi:
            raise ConfigurationError(
                f"boundary_level {self.boundary_level} outside {lo}..{hi} for n={self.n}"
            )
        for name in ("m", "g", "t_hop", "phi"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")

    @classmethod
    def standard_coupling(cls, n: int = 3, N: int = 4, m: float = 0.5, **kwargs) -> "ModelParams":
        """Parameters with g = sqrt(n / pi), the a=1 normalization."""
        return cls(n=n, N=N, m=m, g=math.sqrt(n / math.pi), **kwargs)

    @property
    def level_range(self) -> tuple[int, int]:
        off = level_offset(self.n)
        return -off, self.n - 1 - off

    @property
    def field_unit(self) -> float:
        return math.sqrt(2.0 * math.pi / self.n)

    @property
    def g_n(self) -> float:
        return self.g * self.field_unit

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "m": self.m,
            "g": self.g,
            "t_hop": self.t_hop,
            "phi": self.phi,
            "boundary_level": self.boundary_level,
        }


@dataclass(frozen=True)
class FermionConfig:
    occupation: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.occupation):
            raise DomainError("occupations must be 0 or 1")

    @classmethod
    def from_string(cls, bits: str) -> "FermionConfig":
        return cls(tuple(int(c) for c in bits))

    @classmethod
    def from_int(cls, value: int, N: int) -> "FermionConfig":
        return cls(tuple((value >> (N - x)) & 1 for x in range(1, N + 1)))

    @classmethod
    def dirac(cls, N: int) -> "FermionConfig":
        return cls(tuple(x % 2 for x in range(1, N + 1)))

    @property
    def N(self) -> int:
        return len(self.occupation)

    def to_int(self) -> int:
        value = 0
        for b in self.occupation:
            value = (value << 1) | b
        return value

    def __str__(self):
        return "".join(str(b) for b in self.occupation)


def occupation_table(occ: np.ndarray, N: int) -> np.ndarray:
    """(len(occ), N) uint8 matrix; column x-1 is the occupation of site x."""
    shifts = np.arange(N - 1, -1, -1, dtype=np.int64)
    return ((occ[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def staggered_charge(bits: np.ndarray) -> np.ndarray:
    N = bits.shape[-1]
    odd = (np.arange(1, N + 1) % 2).astype(np.int64)
    return bits.astype(np.int64) - odd


def fold_levels(levels: np.ndarray, n: int) -> np.ndarray:
    lo = -level_offset(n)
    return (levels - lo) % n + lo


def link_profile(bits: np.ndarray, boundary: np.ndarray | int, n: int) -> np.ndarray:
    """Interior link levels (N-1 of them) for occupation rows ``bits``."""
    q = staggered_charge(bits)
    raw = np.asarray(boundary, dtype=np.int64)[..., None] - np.cumsum(q, axis=-1)
    return fold_levels(raw[..., :-1], n)


@dataclass(frozen=True, eq=False)
class GaugeInvariantBasis:
    """Physical states ordered by (boundary level, occupation integer)."""

    params: ModelParams
    sectors: tuple[int, ...]
    occupations: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)
    bits: np.ndarray = field(repr=False)
    link_levels: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def dim(self) -> int:
        return self.occupations.shape[0]

    @property
    def tag(self) -> tuple:
        return ("znqed-basis", self.params.n, self.params.N, self.sectors)

    def __len__(self):
        return self.dim

    def index_of(self, config: FermionConfig | int | str, boundary_level: int | None = None) -> int:
        if boundary_level is None:
            boundary_level = self.params.boundary_level
        if isinstance(config, str):
            config = FermionConfig.from_string(config)
        if isinstance(config, FermionConfig):
            if config.N != self.N:
                raise DomainError(f"configuration has {config.N} sites, basis has {self.N}")
            config = config.to_int()
        if not 0 <= config < (1 << self.N):
            raise DomainError(f"occupation {config} out of range")
        try:
            s = self.sectors.index(boundary_level)
        except ValueError:
            raise ConfigurationError(f"boundary sector {boundary_level} not in basis") from None
        return s * (1 << self.N) + int(config)

    def state(self, index: int) -> tuple[FermionConfig, int]:
        return FermionConfig.from_int(int(self.occupations[index]), self.N), int(self.boundary[index])

    def field_values(self, phi: float | None = None) -> np.ndarray:
        """(dim, N-1) electric field on every link of every basis state."""
        if phi is None:
            phi = self.params.phi
        n = self.n
        k = self.link_levels.astype(np.float64) + level_offset(n)
        return math.sqrt(2.0 * math.pi / n) * (k - (n - 1) / 2.0 + phi)

    def compatible(self, params: ModelParams) -> bool:
        return (
            params.n == self.params.n
            and params.N == self.params.N
            and params.boundary_level in self.sectors
        )


def build_basis(params: ModelParams, all_sectors: bool = False) -> GaugeInvariantBasis:
    """Enumerate every physical state of the chain."""
    N, n = params.N, params.n
    if N % 2:
        raise ConfigurationError(f"N must be even, got {N}")
    lo, hi = params.level_range
    sectors = tuple(range(lo, hi + 1)) if all_sectors else (params.boundary_level,)
    per = 1 << N
    if per * len(sectors) > MAX_BASIS_DIM:
        raise ConfigurationError(f"basis dimension {per * len(sectors)} exceeds {MAX_BASIS_DIM}")
    occ = np.tile(np.arange(per, dtype=np.int64), len(sectors))
    boundary = np.repeat(np.asarray(sectors, dtype=np.int64), per)
    bits = occupation_table(occ, N)
    levels = link_profile(bits, boundary, n).astype(np.int8 if n < 128 else np.int32)
    for arr in (occ, boundary, bits, levels):
        arr.setflags(write=False)
    return GaugeInvariantBasis(params, sectors, occ, boundary, bits, levels)


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Hermitian CSR matrix on a basis identified by ``basis_tag``."""

    matrix: sp.csr_matrix
    basis_tag: tuple

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def check_tag(self, tag) -> None:
        if tag != self.basis_tag:
            raise ContractViolation(f"operator basis {self.basis_tag} does not match state basis {tag}")

    def matvec(self, x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty(self.dim, dtype=np.complex128)
        m = self.matrix
        return _accel.csr_matvec(m.indptr, m.indices, m.data, x, out)

    def apply(self, psi: "StateVector") -> "StateVector":
        self.check_tag(psi.basis_tag)
        return StateVector.from_array(self.matvec(psi.amplitudes), psi.basis_tag)

    def expectation(self, psi: "StateVector") -> float:
        self.check_tag(psi.basis_tag)
        a = psi.amplitudes
        return float(np.vdot(a, self.matvec(a)).real)

    def hermiticity_defect(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def scaled(self, factor: float) -> "SparseOperator":
        return SparseOperator((self.matrix * factor).tocsr(), self.basis_tag)


@dataclass(eq=False)
class StateVector:
    amplitudes: np.ndarray
    basis_tag: tuple
    recorded_norm: float

    @classmethod
    def from_array(cls, amplitudes, basis_tag) -> "StateVector":
        a = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        return cls(a, basis_tag, float(np.linalg.norm(a)))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def probabilities(self) -> np.ndarray:
        a = self.amplitudes
        p = a.real * a.real + a.imag * a.imag
        total = p.sum()
        if total == 0:
            raise DomainError("zero state has no probabilities")
        return p / total

    def normalized(self) -> "StateVector":
        nrm = np.linalg.norm(self.amplitudes)
        if nrm == 0:
            raise DomainError("cannot normalize the zero vector")
        return StateVector.from_array(self.amplitudes / nrm, self.basis_tag)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.basis_tag, self.recorded_norm)

    def overlap(self, other: "StateVector") -> complex:
        if other.basis_tag != self.basis_tag:
            raise ContractViolation("overlap between states on different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _hopping_pairs(basis: GaugeInvariantBasis) -> Iterable[tuple[int, np.ndarray, np.ndarray]]:
    """Yield (x, source, target) for every move of a fermion from x to x+1."""
    N = basis.N
    bits = basis.bits
    idx = np.arange(basis.dim, dtype=np.int64)
    for x in range(1, N):
        can = (bits[:, x - 1] == 1) & (bits[:, x] == 0)
        src = idx[can]
        flip = (1 << (N - x)) | (1 << (N - x - 1))
        yield x, src, src ^ flip


def build_hamiltonian(params: ModelParams, basis: GaugeInvariantBasis) -> SparseOperator:
    """Sparse Z_n Schwinger Hamiltonian restricted to ``basis``.

    Adjacent-site hopping carries no Jordan-Wigner sign with sites ordered
    1..N.  Flipping the two occupation bits keeps the sector block, so source
    and target indices differ only in the low N bits.
    """
    if not basis.compatible(params):
        raise ContractViolation("basis was built for a different (n, N, boundary) geometry")
    N = params.N
    sign = np.where(np.arange(1, N + 1) % 2 == 1, -1.0, 1.0)
    diag = params.m * (basis.bits @ sign)
    E = basis.field_values(params.phi)
    diag = diag + 0.5 * params.g ** 2 * np.einsum("ij,ij->i", E, E)

    rows = [np.arange(basis.dim, dtype=np.int64)]
    cols = [rows[0]]
    vals = [diag]
    if params.t_hop != 0.0:
        for _, src, dst in _hopping_pairs(basis):
            amp = np.full(src.shape[0], -params.t_hop)
            rows += [dst, src]
            cols += [src, dst]
            vals += [amp, amp]
    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dim, basis.dim),
    ).tocsr()
    H.sum_duplicates()
    H.sort_indices()
    H.indptr = H.indptr.astype(np.int64)
    H.indices = H.indices.astype(np.int64)
    return SparseOperator(H, basis.tag)


def count_wrap_elements(basis: GaugeInvariantBasis) -> int:
    """Number of rightward hopping elements whose link level wraps hi -> lo.

    Nonzero counts mark transitions an exact-integer Gauss law would forbid.
    """
    _, hi = basis.params.level_range
    total = 0
    for x, src, _ in _hopping_pairs(basis):
        total += int(np.count_nonzero(basis.link_levels[src, x - 1] == hi))
    return total


def _basis_vector(basis: GaugeInvariantBasis, index: int) -> StateVector:
    a = np.zeros(basis.dim, dtype=np.complex128)
    a[index] = 1.0
    return StateVector(a, basis.tag, 1.0)


def dirac_vacuum(basis: GaugeInvariantBasis) -> StateVector:
    """Odd sites filled, even sites empty, zero field on every link."""
    if basis.n % 2 == 0:
        raise ConfigurationError("even n has no zero-field level; the Dirac sea is not a physical state")
    if 0 not in basis.sectors:
        raise ConfigurationError("basis lacks the boundary_level=0 sector")
    return _basis_vector(basis, basis.index_of(FermionConfig.dirac(basis.N), 0))


def string_config(N: int, x_left: int, x_right: int) -> FermionConfig:
    """Occupations of the Dirac sea with a charge pair at ``x_left``/``x_right``.

    Odd ``x_left`` / even ``x_right`` empties the odd site and fills the even
    one, leaving level +1 on links x_left..x_right-1.  The mirrored parities
    (even left, odd right) give the level -1 string.
    """
    if not 1 <= x_left < x_right <= N:
        raise DomainError(f"need 1 <= x_left < x_right <= {N}, got ({x_left}, {x_right})")
    if x_left % 2 == x_right % 2:
        raise DomainError("string endpoints must sit on sites of opposite parity")
    occ = list(FermionConfig.dirac(N).occupation)
    occ[x_left - 1] ^= 1
    occ[x_right - 1] ^= 1
    return FermionConfig(tuple(occ))


def config_link_levels(config: FermionConfig, n: int, boundary_level: int = 0) -> np.ndarray:
    """Interior link levels Gauss's law assigns to one occupation pattern."""
    bits = np.asarray(config.occupation, dtype=np.uint8)[None, :]
    return link_profile(bits, np.array([boundary_level]), n)[0]


def string_state(basis: GaugeInvariantBasis, x_left: int, x_right: int) -> StateVector:
    """Unit vector on the string configuration of :func:`string_config`."""
    config = string_config(basis.N, x_left, x_right)
    if 0 not in basis.sectors:
        raise ConfigurationError("basis lacks the boundary_level=0 sector")
    return _basis_vector(basis, basis.index_of(config, 0))


def centered_string_sites(N: int, separation: int) -> tuple[int, int]:
    """Endpoints of a +field string spanning ``separation`` sites, centered.

    When the centered left endpoint would be even it is moved one site left so
    the antiparticle stays on an odd site.
    """
    if separation < 2 or separation % 2:
        raise DomainError(f"separation must be an even number >= 2, got {separation}")
    if separation > N:
        raise DomainError(f"separation {separation} exceeds chain length {N}")
    x_left = (N - separation) // 2 + 1
    if x_left % 2 == 0:
        x_left -= 1
    return x_left, x_left + separation - 1
