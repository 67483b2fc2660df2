"""Reduced density matrices of a cut and their spin-resolved entanglement spectrum.

The global state lives in a fixed-Sz sector, so the reduced density matrix
is block diagonal in the subsystem magnetization ``m``. Inside each block,
levels are labeled with the subsystem total spin by exact polynomial
projectors on ``S_A^2`` rather than by clustering degenerate eigenvalues.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .eigensolver import dense_sym_eig
from .errors import LabelingError, NumericalError
from .hamiltonian import sector_matrix, total_spin_terms
from .hilbert import SectorBasis, popcount, sublattice_split
from .lattice import Cut

LAMBDA_FLOOR = 1e-12
COMMUTATOR_TOL = 1e-8


@dataclass
class RdmBlocks:
    """``blocks[m]`` is rho_A restricted to subsystem configurations with Sz_A = m.

    ``configs[m]`` lists those configurations (bit k = site ``a_sites[k]``) in
    ascending order, which is the row order of the block.
    """

    blocks: Dict[float, np.ndarray]
    configs: Dict[float, np.ndarray]
    size_a: int

    def trace(self) -> float:
        return float(sum(np.trace(b) for b in self.blocks.values()))


@dataclass(frozen=True)
class EsLevel:
    lam: float
    xi: float
    sz: float
    spin: float
    vector: np.ndarray = field(default=None, repr=False, compare=False)


def _magnetization(n_up: int, size: int) -> float:
    return n_up - size / 2


def reduced_density_matrix(psi: np.ndarray, basis: SectorBasis, cut: Cut) -> RdmBlocks:
    psi = np.asarray(psi, dtype=np.float64)
    if psi.shape != (len(basis),):
        raise ValueError("state length does not match basis")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-8:
        raise NumericalError(f"state is not normalized (|psi| = {norm:.12g})")
    size_a, size_b = cut.size_a, len(cut.b_sites)
    a_conf, b_conf = sublattice_split(basis.states, cut)
    a_up = popcount(a_conf)
    blocks, configs = {}, {}
    for p in np.unique(a_up):
        p = int(p)
        sel = a_up == p
        a_basis = SectorBasis(size_a, p)
        b_basis = SectorBasis(size_b, basis.n_up - p) if size_b else None
        rows = a_basis.lookup(a_conf[sel])
        cols = b_basis.lookup(b_conf[sel]) if size_b else np.zeros(sel.sum(), dtype=np.int64)
        coeff = np.zeros((len(a_basis), len(b_basis) if size_b else 1))
        coeff[rows, cols] = psi[sel]
        m = _magnetization(p, size_a)
        blocks[m] = coeff @ coeff.T
        configs[m] = a_basis.states
    return RdmBlocks(dict(sorted(blocks.items())), dict(sorted(configs.items())), size_a)


@functools.lru_cache(maxsize=64)
def _spin_matrix(size_a: int, n_up: int) -> np.ndarray:
    basis = SectorBasis(size_a, n_up)
    mat = sector_matrix(total_spin_terms(size_a), basis).toarray()
    mat.setflags(write=False)
    return mat


def subsystem_spin_matrix(cut: Cut, m: float) -> np.ndarray:
    """``S_A^2`` over the subsystem configurations with Sz_A = m, in block order."""
    n_up = m + cut.size_a / 2
    if n_up != int(n_up) or not 0 <= n_up <= cut.size_a:
        raise ValueError(f"magnetization {m} impossible for {cut.size_a} sites")
    return np.array(_spin_matrix(cut.size_a, int(n_up)))


def admissible_spins(size_a: int, m: float) -> List[float]:
    top = size_a / 2
    return [abs(m) + k for k in range(int(round(top - abs(m))) + 1)]


def spin_projector(s2: np.ndarray, spin: float, spins: List[float]) -> np.ndarray:
    """Lagrange-interpolation projector onto the ``S^2 = spin(spin+1)`` eigenspace."""
    target = spin * (spin + 1)
    proj = np.eye(len(s2))
    for other in spins:
        if other == spin:
            continue
        c = other * (other + 1)
        proj = proj @ (s2 - c * np.eye(len(s2))) / (target - c)
    return proj


def spin_resolved_spectrum(rdm: RdmBlocks, cut: Cut, lambda_floor: float = LAMBDA_FLOOR,
                           keep_vectors: bool = False) -> List[EsLevel]:
    """Levels of every block labeled by (Sz_A, S_A), sorted by entanglement energy.

    Raises
    ------
    NumericalError
        On an eigenvalue below -1e-10.
    LabelingError
        If a block does not commute with ``S_A^2`` (the state breaks spin
        symmetry, so no spin label exists), or a level's ``<S^2>`` misses
        ``S(S+1)`` by more than 1e-6.
    """
    levels = []
    for m, rho in rdm.blocks.items():
        s2 = subsystem_spin_matrix(cut, m)
        comm = float(np.abs(rho @ s2 - s2 @ rho).max()) if rho.size else 0.0
        if comm > COMMUTATOR_TOL:
            raise LabelingError(
                f"RDM block m={m} does not commute with S_A^2 (max |[rho, S^2]| = {comm:.2e})")
        spins = admissible_spins(rdm.size_a, m)
        for spin in spins:
            proj = spin_projector(s2, spin, spins)
            pvals, pvecs = dense_sym_eig(proj, atol=1e-8)
            frame = pvecs[:, pvals > 0.5]
            if frame.shape[1] == 0:
                continue
            lam, y = dense_sym_eig(frame.T @ rho @ frame)
            if lam.size and lam[0] < -1e-10:
                raise NumericalError(
                    f"negative RDM eigenvalue {lam[0]:.3e} in block m={m}, S={spin}")
            vecs = frame @ y
            expect = np.einsum("ik,ij,jk->k", vecs, s2, vecs)
            bad = np.abs(expect - spin * (spin + 1)) > 1e-6
            if bad.any():
                raise LabelingError(
                    f"<S^2> = {expect[bad][0]:.8g} for a level labeled S={spin} in block m={m}")
            for k in np.flatnonzero(lam > lambda_floor):
                levels.append(EsLevel(float(lam[k]), float(-np.log(lam[k])), m, spin,
                                      vecs[:, k] if keep_vectors else None))
    levels.sort(key=lambda lv: (lv.xi, lv.sz, lv.spin))
    return levels


def block_eigenvalues(rdm: RdmBlocks) -> np.ndarray:
    return np.concatenate([dense_sym_eig(b)[0] for b in rdm.blocks.values()])


def discarded_weight(rdm: RdmBlocks, lambda_floor: float = LAMBDA_FLOOR) -> float:
    """Total RDM weight in eigenvalues at or below the floor (not emitted as levels)."""
    lam = block_eigenvalues(rdm)
    return float(lam[lam <= lambda_floor].sum())


def entanglement_entropy(rdm: RdmBlocks, lambda_floor: float = LAMBDA_FLOOR) -> float:
    lam = block_eigenvalues(rdm)
    lam = lam[lam > lambda_floor]
    return float(-(lam * np.log(lam)).sum())


def levels_to_csv(levels: List[EsLevel]) -> str:
    lines = ["sz,spin,lambda,xi"]
    for lv in levels:
        lines.append(f"{lv.sz:.17g},{lv.spin:.17g},{lv.lam:.17g},{lv.xi:.17g}")
    return "\n".join(lines) + "\n"
