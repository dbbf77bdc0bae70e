"""Measurements on states of the physical basis.

Everything except the entanglement entropy is diagonal in the occupation
basis, so it reduces to a probability-weighted sum over per-state tables
that are built once per basis.
"""

from __future__ import annotations

import math
import weakref

import numpy as np

from . import _accel
from .errors import ContractViolation, DomainError
from .model import GaugeInvariantBasis, StateVector

__all__ = [
    "particle_density",
    "site_densities",
    "field_profile",
    "mean_field",
    "half_chain_entropy",
    "connected_correlation",
    "vacuum_subtracted_profile",
    "central_field_sum",
    "central_window",
]

EIGEN_FLOOR = 1e-14

_TABLES: "weakref.WeakKeyDictionary[GaugeInvariantBasis, dict]" = weakref.WeakKeyDictionary()


def _tables(basis: GaugeInvariantBasis) -> dict:
    tab = _TABLES.get(basis)
    if tab is None:
        N = basis.N
        odd = (np.arange(1, N + 1) % 2).astype(np.float64)
        occ = np.ascontiguousarray(basis.bits, dtype=np.float64)
        # per-site particle/antiparticle indicator: 1 - n on odd sites, n on even
        excit = np.abs(occ - odd)
        tab = {
            "occ": occ,
            "rho": np.ascontiguousarray(excit.mean(axis=1)[:, None]),
            "fields": {},
        }
        _TABLES[basis] = tab
    return tab


def _prob(psi: StateVector, basis: GaugeInvariantBasis) -> np.ndarray:
    if psi.basis_tag != basis.tag:
        raise ContractViolation(f"state basis {psi.basis_tag} does not match {basis.tag}")
    return psi.probabilities()


def particle_density(psi: StateVector, basis: GaugeInvariantBasis) -> float:
    """Mean density of particles plus antiparticles, 0 on the Dirac sea."""
    return float(_accel.diag_expect(_prob(psi, basis), _tables(basis)["rho"])[0])


def site_densities(psi: StateVector, basis: GaugeInvariantBasis) -> np.ndarray:
    """<psi^dag_x psi_x> for x = 1..N."""
    return _accel.diag_expect(_prob(psi, basis), _tables(basis)["occ"])


def field_profile(psi: StateVector, basis: GaugeInvariantBasis, phi: float | None = None) -> np.ndarray:
    """<E_{x,x+1}> on the N-1 interior links, in physical field units."""
    if phi is None:
        phi = basis.params.phi
    cache = _tables(basis)["fields"]
    table = cache.get(phi)
    if table is None:
        table = cache[phi] = np.ascontiguousarray(basis.field_values(phi))
    return _accel.diag_expect(_prob(psi, basis), table)


def mean_field(psi: StateVector, basis: GaugeInvariantBasis, phi: float | None = None) -> float:
    """Average of the link fields over the N-1 interior links."""
    return float(np.mean(field_profile(psi, basis, phi)))


def _schmidt_matrix(psi: StateVector, basis: GaugeInvariantBasis, cut: int) -> np.ndarray:
    N = basis.N
    if not 1 <= cut < N:
        raise DomainError(f"cut must satisfy 1 <= cut < {N}, got {cut}")
    if psi.basis_tag != basis.tag:
        raise ContractViolation("state and basis disagree")
    a = psi.amplitudes / np.linalg.norm(psi.amplitudes)
    # index = (sector * 2**cut + left) * 2**(N-cut) + right
    return a.reshape(len(basis.sectors) * (1 << cut), 1 << (N - cut))


def _entropy_from_eigs(lam: np.ndarray, base2: bool) -> float:
    lam = lam[lam > EIGEN_FLOOR]
    s = -float(np.sum(lam * np.log(lam)))
    return max(s / math.log(2.0), 0.0) if base2 else max(s, 0.0)


def half_chain_entropy(
    psi: StateVector,
    basis: GaugeInvariantBasis,
    cut: int | None = None,
    base2: bool = True,
    side: str = "left",
) -> float:
    """Von Neumann entropy of sites 1..cut (bits by default).

    The link between ``cut`` and ``cut+1`` is fixed by the left occupations
    and the boundary sector, so it belongs to the left block.  ``side``
    selects which reduced density matrix is diagonalized.
    """
    if cut is None:
        cut = basis.N // 2
    M = _schmidt_matrix(psi, basis, cut)
    if side == "left":
        rho = M @ M.conj().T
    elif side == "right":
        rho = M.T @ M.conj()
    else:
        raise DomainError("side must be 'left' or 'right'")
    return _entropy_from_eigs(np.linalg.eigvalsh(rho), base2)


def connected_correlation(psi: StateVector, basis: GaugeInvariantBasis, ref: int | None = None) -> np.ndarray:
    """<n_ref n_x> - <n_ref><n_x> for x = 1..N."""
    N = basis.N
    if ref is None:
        ref = N // 2
    if not 1 <= ref <= N:
        raise DomainError(f"reference site {ref} outside 1..{N}")
    p = _prob(psi, basis)
    occ = _tables(basis)["occ"]
    n = _accel.diag_expect(p, occ)
    pref = p * occ[:, ref - 1]
    nn = pref @ occ
    return nn - n[ref - 1] * n


def vacuum_subtracted_profile(traj_string, traj_vacuum, key: str = "field_profile") -> np.ndarray:
    """Per-time, per-link difference of the string and vacuum field profiles."""
    ts, tv = np.asarray(traj_string.sample_times), np.asarray(traj_vacuum.sample_times)
    if ts.shape != tv.shape or not np.array_equal(ts, tv):
        raise ContractViolation("string and vacuum trajectories have different sample times")
    ms, mv = getattr(traj_string, "meta", None), getattr(traj_vacuum, "meta", None)
    if ms and mv and ms.get("params") != mv.get("params"):
        raise ContractViolation("string and vacuum runs used different parameters")
    s = np.asarray(traj_string.records[key], dtype=np.float64)
    v = np.asarray(traj_vacuum.records[key], dtype=np.float64)
    if s.shape != v.shape:
        raise ContractViolation("profile shapes differ")
    return s - v


def central_window(n_total: int, n_links: int) -> slice:
    if not 1 <= n_links <= n_total:
        raise DomainError(f"n_links must be in 1..{n_total}, got {n_links}")
    # an odd surplus leaves the extra link on the right
    start = (n_total - n_links) // 2
    return slice(start, start + n_links)


def central_field_sum(profile: np.ndarray, n_links: int = 12) -> float | np.ndarray:
    """Sum of the field over the ``n_links`` links around the chain midpoint.

    Accepts a single profile or a (time, link) matrix.
    """
    profile = np.asarray(profile, dtype=np.float64)
    window = central_window(profile.shape[-1], n_links)
    out = profile[..., window].sum(axis=-1)
    return float(out) if out.ndim == 0 else out
