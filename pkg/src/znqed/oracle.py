"""Brute-force tensor-product construction used to cross-check the physical basis.

The full space interleaves sites and interior links as
site1 (x) link12 (x) site2 (x) ... (x) siteN, with explicit Jordan-Wigner
fermions and cyclic n x n comparators.  Nothing here reuses the
constrained-basis code path.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError
from .model import GaugeInvariantBasis, ModelParams

MAX_FULL_DIM = 2_000_000


def _kron_all(ops):
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), ops)


def _local_ops(n: int, phi: float):
    a = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))  # |1> -> |0>
    z = sp.csr_matrix(np.diag([1.0, -1.0]))
    num = sp.csr_matrix(np.diag([0.0, 1.0]))
    U = sp.csr_matrix(np.roll(np.eye(n), 1, axis=0))  # |k> -> |k+1 mod n>
    ks = np.arange(n)
    E = sp.diags(np.sqrt(2 * np.pi / n) * (ks - (n - 1) / 2 + phi)).tocsr()
    return a, z, num, U, E


def full_shape(N: int, n: int) -> tuple[int, ...]:
    shape = []
    for x in range(1, N + 1):
        shape.append(2)
        if x < N:
            shape.append(n)
    return tuple(shape)


class FullSpace:
    """Operators on the unconstrained space for one (N, n, phi)."""

    def __init__(self, N: int, n: int, phi: float = 0.0):
        dim = 2 ** N * n ** (N - 1)
        if dim > MAX_FULL_DIM:
            raise ConfigurationError(f"full tensor dimension {dim} exceeds {MAX_FULL_DIM}")
        self.N, self.n, self.dim = N, n, dim
        self.shape = full_shape(N, n)
        self._a, self._z, self._num, self._U, self._E = _local_ops(n, phi)

    def _factors(self):
        I2 = sp.identity(2, format="csr")
        In = sp.identity(self.n, format="csr")
        out = []
        for x in range(1, self.N + 1):
            out.append(I2)
            if x < self.N:
                out.append(In)
        return out

    def _slot_site(self, x):
        return 2 * (x - 1)

    def _slot_link(self, x):
        return 2 * (x - 1) + 1

    def annihilator(self, x: int):
        f = self._factors()
        for y in range(1, x):
            f[self._slot_site(y)] = self._z
        f[self._slot_site(x)] = self._a
        return _kron_all(f)

    def number(self, x: int):
        f = self._factors()
        f[self._slot_site(x)] = self._num
        return _kron_all(f)

    def comparator(self, x: int):
        f = self._factors()
        f[self._slot_link(x)] = self._U
        return _kron_all(f)

    def field(self, x: int):
        f = self._factors()
        f[self._slot_link(x)] = self._E
        return _kron_all(f)

    def hamiltonian(self, params: ModelParams):
        N = self.N
        H = sp.csr_matrix((self.dim, self.dim))
        c = [None] + [self.annihilator(x) for x in range(1, N + 1)]
        for x in range(1, N):
            hop = c[x + 1].T @ self.comparator(x) @ c[x]
            H = H - params.t_hop * (hop + hop.T)
        for x in range(1, N + 1):
            H = H + params.m * (-1) ** x * self.number(x)
        for x in range(1, N):
            Ex = self.field(x)
            H = H + 0.5 * params.g ** 2 * (Ex @ Ex)
        return H.tocsr()

    def decode(self) -> tuple[np.ndarray, np.ndarray]:
        """(occupations (dim, N), link indices k (dim, N-1)) of every full state."""
        digits = np.array(np.unravel_index(np.arange(self.dim), self.shape)).T
        return digits[:, 0::2], digits[:, 1::2]

    def gauss_mask(self, boundary_level: int) -> np.ndarray:
        n, N = self.n, self.N
        occ, k = self.decode()
        k0 = boundary_level + (n - 1) // 2
        left = np.concatenate([np.full((self.dim, 1), k0), k], axis=1)
        odd = (np.arange(1, N + 1) % 2)
        q = occ - odd
        # sites 1..N-1 own a right link; site N is unconstrained on an open chain
        resid = (left[:, 1:] - left[:, :-1] + q[:, :-1]) % n
        return np.all(resid == 0, axis=1)

    def embed_indices(self, basis: GaugeInvariantBasis) -> np.ndarray:
        """Full-space index of each constrained basis state."""
        off = (self.n - 1) // 2
        cols = []
        for x in range(1, self.N + 1):
            cols.append(basis.bits[:, x - 1].astype(np.int64))
            if x < self.N:
                cols.append(basis.link_levels[:, x - 1].astype(np.int64) + off)
        return np.ravel_multi_index(tuple(cols), self.shape)


def build_full_oracle(params: ModelParams):
    """(H on the full tensor space, diagonal Gauss projector) for ``params``."""
    space = FullSpace(params.N, params.n, params.phi)
    H = space.hamiltonian(params)
    P = sp.diags(space.gauss_mask(params.boundary_level).astype(float)).tocsr()
    return H, P


def projected_spectrum(params: ModelParams, all_sectors: bool = False) -> np.ndarray:
    """Sorted eigenvalues of P H P restricted to range(P)."""
    lo, hi = params.level_range
    levels = range(lo, hi + 1) if all_sectors else [params.boundary_level]
    space = FullSpace(params.N, params.n, params.phi)
    H = space.hamiltonian(params)
    evs = []
    for b in levels:
        keep = np.flatnonzero(space.gauss_mask(b))
        block = H[keep][:, keep].toarray()
        evs.append(np.linalg.eigvalsh(block))
    return np.sort(np.concatenate(evs))
