"""Model compilation into local dense blocks and matrix-free application.

A :class:`TermList` holds ``(sites, block)`` pairs. The block acts on the
local basis in which bit ``b`` of the local index is the spin on
``sites[b]`` (1 = up). Application runs in gather form: every output
amplitude is accumulated independently over terms in a fixed order, so the
result does not depend on how output entries are split among threads.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numba
import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .hilbert import SectorBasis
from .lattice import (STRONG, Lattice, cbjq_plaquettes, dimer_bonds,
                      jq3_plaquettes, nn_bonds)

# TBB is tried first by default and warns on older runtimes
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

MODELS = ("dimer", "jq3", "cbjq")

# two-site operators in the local basis c = bit0 | bit1 << 1
HEISENBERG_PAIR = np.array([
    [0.25, 0.0, 0.0, 0.0],
    [0.0, -0.25, 0.5, 0.0],
    [0.0, 0.5, -0.25, 0.0],
    [0.0, 0.0, 0.0, 0.25],
])
SINGLET_PROJECTOR = 0.25 * np.eye(4) - HEISENBERG_PAIR


@dataclass(frozen=True)
class ModelSpec:
    model: str
    J1: float = 1.0
    J2: float = 1.0
    J: float = 1.0
    Q: float = 0.0
    cbjq_single_pairing: bool = False

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        couplings = self.couplings()
        for name, value in couplings.items():
            if not math.isfinite(value):
                raise ConfigError(f"coupling {name} is not finite")
        if not any(couplings.values()):
            raise ConfigError("all couplings are zero")

    def couplings(self) -> dict:
        if self.model == "dimer":
            return {"J1": self.J1, "J2": self.J2}
        return {"J": self.J, "Q": self.Q}


@dataclass
class TermList:
    terms: List[Tuple[Tuple[int, ...], np.ndarray]] = field(default_factory=list)
    constant: float = 0.0

    def add(self, sites: Sequence[int], block: np.ndarray) -> None:
        sites = tuple(int(s) for s in sites)
        block = np.asarray(block, dtype=np.float64)
        if block.shape != (1 << len(sites),) * 2:
            raise ValueError(f"block shape {block.shape} does not match {len(sites)} sites")
        self.terms.append((sites, block))

    def __len__(self) -> int:
        return len(self.terms)

    def check(self, atol: float = 1e-14) -> None:
        """Assert local symmetry and local magnetization conservation."""
        for sites, block in self.terms:
            if not np.allclose(block, block.T, atol=atol, rtol=0):
                raise ValueError(f"term on {sites} is not symmetric")
            k = len(sites)
            pc = np.array([bin(c).count("1") for c in range(1 << k)])
            leak = block[pc[:, None] != pc[None, :]]
            if np.any(np.abs(leak) > atol):
                raise ValueError(f"term on {sites} does not conserve Sz")

    def packed(self) -> "PackedTerms":
        return PackedTerms.from_terms(self)


def pair_product_block(k: int, pairs: Sequence[Tuple[int, int]], op: np.ndarray = SINGLET_PROJECTOR) -> np.ndarray:
    """Product of a two-site operator over disjoint local pairs, as a 2^k x 2^k block."""
    dim = 1 << k
    c = np.arange(dim)
    block = np.ones((dim, dim))
    for a, b in pairs:
        sub = ((c >> a) & 1) | (((c >> b) & 1) << 1)
        block *= op[sub[:, None], sub[None, :]]
    used = 0
    for a, b in pairs:
        used |= (1 << a) | (1 << b)
    spectator = ~used & (dim - 1)
    block *= ((c[:, None] & spectator) == (c[None, :] & spectator))
    return block


def compile_model(spec: ModelSpec, lat: Lattice) -> TermList:
    terms = TermList()
    if spec.model == "dimer":
        for bond in dimer_bonds(lat):
            coupling = spec.J2 if bond.kind == STRONG else spec.J1
            terms.add((bond.i, bond.j), coupling * HEISENBERG_PAIR)
        return terms

    for bond in nn_bonds(lat):
        terms.add((bond.i, bond.j), -spec.J * SINGLET_PROJECTOR)
    if spec.model == "jq3":
        plaqs = jq3_plaquettes(lat)
    else:
        plaqs = cbjq_plaquettes(lat, single_pairing=spec.cbjq_single_pairing)
    for plaq in plaqs:
        local = {s: b for b, s in enumerate(plaq.sites)}
        pairs = [(local[i], local[j]) for i, j in plaq.pairing]
        terms.add(plaq.sites, -spec.Q * pair_product_block(len(plaq.sites), pairs))
    return terms


def total_spin_terms(n: int) -> TermList:
    """S_tot^2 = 3n/4 + 2 sum_{i<j} S_i.S_j as a TermList."""
    terms = TermList(constant=0.75 * n)
    for i in range(n):
        for j in range(i + 1, n):
            terms.add((i, j), 2.0 * HEISENBERG_PAIR)
    return terms


@dataclass
class PackedTerms:
    """Flat arrays with one CSR row table per term, consumed by the numba kernels."""

    site_ptr: np.ndarray
    sites: np.ndarray
    row_base: np.ndarray
    row_ptr: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    constant: float

    @classmethod
    def from_terms(cls, terms: TermList) -> "PackedTerms":
        site_ptr, sites, row_base, row_ptr, cols, vals = [0], [], [], [], [], []
        for t_sites, block in terms.terms:
            sites.extend(t_sites)
            site_ptr.append(len(sites))
            row_base.append(len(row_ptr))
            for row in block:
                row_ptr.append(len(cols))
                nz = np.flatnonzero(row)
                cols.extend(nz.tolist())
                vals.extend(row[nz].tolist())
            row_ptr.append(len(cols))
        as_int = lambda x: np.asarray(x, dtype=np.int64)
        return cls(as_int(site_ptr), as_int(sites), as_int(row_base), as_int(row_ptr),
                   as_int(cols), np.asarray(vals, dtype=np.float64), float(terms.constant))


@numba.njit(cache=True)
def _row_entries(s, site_ptr, sites, row_base, row_ptr, cols, vals, t):
    """Local row index, first/last entry and the mask of a term at configuration s."""
    c = 0
    mask = 0
    for b in range(site_ptr[t + 1] - site_ptr[t]):
        site = sites[site_ptr[t] + b]
        c |= ((s >> site) & 1) << b
        mask |= np.int64(1) << site
    rp = row_base[t] + c
    return c, mask, row_ptr[rp], row_ptr[rp + 1]


@numba.njit(cache=True)
def _replace_bits(s, mask, cin, sites, start, k):
    s2 = s & ~mask
    for b in range(k):
        if (cin >> b) & 1:
            s2 |= np.int64(1) << sites[start + b]
    return s2


@numba.njit(parallel=True, cache=True)
def _apply_kernel(states, lo_rank, hi_offset, n_lo, site_ptr, sites, row_base, row_ptr,
                  cols, vals, constant, v, out):
    lo_mask = (np.int64(1) << n_lo) - 1
    n_terms = len(site_ptr) - 1
    for i in numba.prange(len(states)):
        s = states[i]
        acc = constant * v[i]
        for t in range(n_terms):
            c, mask, e0, e1 = _row_entries(s, site_ptr, sites, row_base, row_ptr, cols, vals, t)
            start = site_ptr[t]
            k = site_ptr[t + 1] - start
            for e in range(e0, e1):
                cin = cols[e]
                if cin == c:
                    acc += vals[e] * v[i]
                else:
                    s2 = _replace_bits(s, mask, cin, sites, start, k)
                    j = hi_offset[s2 >> n_lo] + lo_rank[s2 & lo_mask]
                    acc += vals[e] * v[j]
        out[i] = acc


@numba.njit(cache=True)
def _count_kernel(states, site_ptr, sites, row_base, row_ptr, cols, vals):
    total = 0
    for i in range(len(states)):
        for t in range(len(site_ptr) - 1):
            c, mask, e0, e1 = _row_entries(states[i], site_ptr, sites, row_base, row_ptr, cols, vals, t)
            total += e1 - e0
    return total


@numba.njit(cache=True)
def _coo_kernel(states, lo_rank, hi_offset, n_lo, site_ptr, sites, row_base, row_ptr,
                cols, vals, rows_out, cols_out, vals_out):
    lo_mask = (np.int64(1) << n_lo) - 1
    pos = 0
    for i in range(len(states)):
        s = states[i]
        for t in range(len(site_ptr) - 1):
            c, mask, e0, e1 = _row_entries(s, site_ptr, sites, row_base, row_ptr, cols, vals, t)
            start = site_ptr[t]
            k = site_ptr[t + 1] - start
            for e in range(e0, e1):
                s2 = _replace_bits(s, mask, cols[e], sites, start, k)
                rows_out[pos] = i
                cols_out[pos] = hi_offset[s2 >> n_lo] + lo_rank[s2 & lo_mask]
                vals_out[pos] = vals[e]
                pos += 1


def _packed(terms) -> PackedTerms:
    return terms if isinstance(terms, PackedTerms) else terms.packed()


def apply_h(terms, basis: SectorBasis, v: np.ndarray) -> np.ndarray:
    """Matrix-free ``H @ v`` on the sector. ``terms`` may be a TermList or PackedTerms."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.shape != (len(basis),):
        raise ValueError(f"vector length {v.shape} does not match basis size {len(basis)}")
    p = _packed(terms)
    out = np.empty_like(v)
    _apply_kernel(basis.states, basis.lo_rank, basis.hi_offset, basis.n_lo, p.site_ptr,
                  p.sites, p.row_base, p.row_ptr, p.cols, p.vals, p.constant, v, out)
    return out


@functools.lru_cache(maxsize=8)
def _total_spin_packed(n: int) -> PackedTerms:
    return total_spin_terms(n).packed()


def apply_total_spin_squared(n: int, basis: SectorBasis, v: np.ndarray) -> np.ndarray:
    if n != basis.n:
        raise ValueError(f"n={n} does not match basis with {basis.n} sites")
    return apply_h(_total_spin_packed(n), basis, v)


def sector_matrix(terms, basis: SectorBasis) -> sp.csr_matrix:
    """Assemble the sector Hamiltonian as a sparse matrix (duplicates summed)."""
    p = _packed(terms)
    nnz = _count_kernel(basis.states, p.site_ptr, p.sites, p.row_base, p.row_ptr, p.cols, p.vals)
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    _coo_kernel(basis.states, basis.lo_rank, basis.hi_offset, basis.n_lo, p.site_ptr, p.sites,
                p.row_base, p.row_ptr, p.cols, p.vals, rows, cols, vals)
    dim = len(basis)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    if p.constant:
        mat = mat + p.constant * sp.identity(dim, format="csr")
    mat.sum_duplicates()
    return mat
