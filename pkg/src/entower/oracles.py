"""Brute-force references that bypass the sector machinery entirely.

The Hamiltonian is rebuilt in the full 2^n space from Kronecker products of
spin matrices, and reduced density matrices come from reshaping the full
state tensor. Only meant for small systems (``--dense-check`` and tests).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .lattice import STRONG, Lattice, cbjq_plaquettes, dimer_bonds, jq3_plaquettes, nn_bonds

# single-site basis (down, up), so bit value 1 means up
SX = sp.csr_matrix(np.array([[0.0, 0.5], [0.5, 0.0]]))
SY_IM = sp.csr_matrix(np.array([[0.0, 0.5], [-0.5, 0.0]]))  # S^y / i
SZ = sp.csr_matrix(np.array([[-0.5, 0.0], [0.0, 0.5]]))


def site_operator(op, site: int, n: int) -> sp.csr_matrix:
    """``op`` on ``site`` embedded in 2^n; site b is bit b, i.e. the (n-1-b)-th kron factor."""
    left = sp.identity(1 << (n - 1 - site), format="csr")
    right = sp.identity(1 << site, format="csr")
    return sp.kron(sp.kron(left, op), right, format="csr")


def spin_dot(i: int, j: int, n: int) -> sp.csr_matrix:
    # S^y_i S^y_j = -(S^y_i/i)(S^y_j/i)
    return (site_operator(SX, i, n) @ site_operator(SX, j, n)
            - site_operator(SY_IM, i, n) @ site_operator(SY_IM, j, n)
            + site_operator(SZ, i, n) @ site_operator(SZ, j, n))


def singlet_projector(i: int, j: int, n: int) -> sp.csr_matrix:
    return 0.25 * sp.identity(1 << n, format="csr") - spin_dot(i, j, n)


def full_hamiltonian(spec, lat: Lattice) -> sp.csr_matrix:
    n = lat.n
    h = sp.csr_matrix((1 << n, 1 << n))
    if spec.model == "dimer":
        for bond in dimer_bonds(lat):
            coupling = spec.J2 if bond.kind == STRONG else spec.J1
            h = h + coupling * spin_dot(bond.i, bond.j, n)
        return h
    for bond in nn_bonds(lat):
        h = h - spec.J * singlet_projector(bond.i, bond.j, n)
    plaqs = (jq3_plaquettes(lat) if spec.model == "jq3"
             else cbjq_plaquettes(lat, single_pairing=spec.cbjq_single_pairing))
    for plaq in plaqs:
        prod = sp.identity(1 << n, format="csr")
        for i, j in plaq.pairing:
            prod = prod @ singlet_projector(i, j, n)
        h = h - spec.Q * prod
    return h


def full_total_spin_squared(n: int) -> sp.csr_matrix:
    sx = sum(site_operator(SX, i, n) for i in range(n))
    sy = sum(site_operator(SY_IM, i, n) for i in range(n))
    sz = sum(site_operator(SZ, i, n) for i in range(n))
    return (sx @ sx - sy @ sy + sz @ sz).tocsr()


def embed(psi: np.ndarray, states: np.ndarray, n: int) -> np.ndarray:
    full = np.zeros(1 << n)
    full[states] = psi
    return full


def partial_trace(psi_full: np.ndarray, n: int, a_sites) -> np.ndarray:
    """rho_A over 2^|A| with local bit k = site a_sites[k]."""
    # axis t of the reshaped tensor is the (n-1-t)-th bit
    tensor = np.asarray(psi_full).reshape((2,) * n)
    a_axes = [n - 1 - s for s in reversed(a_sites)]
    b_axes = [ax for ax in range(n) if ax not in a_axes]
    mat = tensor.transpose(a_axes + b_axes).reshape(1 << len(a_sites), -1)
    return mat @ mat.T
