"""Fixed-magnetization spin-1/2 bases.

A configuration is an integer whose bit ``b`` is set when site ``b`` is up.
States are stored in ascending numeric order, so the ordinal of a
configuration can be found by binary search. For the hot loop of the
Hamiltonian a two-level table (Lin tables) gives the same ordinal in O(1):
``index = hi_offset[s >> n_lo] + lo_rank[s & lo_mask]``.
"""

from __future__ import annotations

from math import comb

import numba
import numpy as np

from .errors import ConfigError

MAX_SITES = 32


@numba.njit(cache=True)
def _enumerate(n, n_up, count):
    out = np.empty(count, dtype=np.int64)
    if n_up == 0:
        out[0] = 0
        return out
    s = (np.int64(1) << n_up) - 1
    for k in range(count):
        out[k] = s
        # Gosper's hack: next integer with the same popcount
        c = s & -s
        r = s + c
        s = (((r ^ s) >> 2) // c) | r
    return out


def popcount(x):
    """Vectorized population count for non-negative int64 arrays or Python ints."""
    if isinstance(x, (int, np.integer)):
        return int(x).bit_count() if hasattr(int, "bit_count") else bin(int(x)).count("1")
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros(x.shape, dtype=np.int64)
    for b in range(64):
        count += (x >> b) & 1
        if not (x >> (b + 1)).any():
            break
    return count


class SectorBasis:
    """All ``n``-site configurations with ``n_up`` up spins, in ascending order."""

    def __init__(self, n: int, n_up: int):
        if n > MAX_SITES:
            raise ConfigError(f"capacity exceeded: n={n} > {MAX_SITES} sites")
        if not 0 <= n_up <= n or n < 1:
            raise ConfigError(f"invalid sector n={n}, n_up={n_up}")
        self.n = n
        self.n_up = n_up
        self.states = _enumerate(n, n_up, comb(n, n_up))
        self.states.setflags(write=False)
        self.n_lo = n // 2
        self.lo_rank, self.hi_offset = _lin_tables(self.states, n, self.n_lo)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def sz(self) -> float:
        return self.n_up - self.n / 2

    def lookup(self, config):
        """Ordinal(s) of configuration(s) by binary search; -1 where absent."""
        config = np.asarray(config, dtype=np.int64)
        idx = np.searchsorted(self.states, config)
        idx = np.minimum(idx, len(self.states) - 1)
        found = self.states[idx] == config
        out = np.where(found, idx, -1)
        return int(out) if out.ndim == 0 else out

    def table_lookup(self, config):
        """Ordinal(s) from the two-level table; only valid for in-sector configurations."""
        config = np.asarray(config, dtype=np.int64)
        lo_mask = (1 << self.n_lo) - 1
        out = self.hi_offset[config >> self.n_lo] + self.lo_rank[config & lo_mask]
        return int(out) if out.ndim == 0 else out


def _lin_tables(states, n, n_lo):
    lo = np.arange(1 << n_lo, dtype=np.int64)
    pc = popcount(lo)
    lo_rank = np.empty_like(lo)
    for p in range(n_lo + 1):
        sel = pc == p
        lo_rank[sel] = np.arange(sel.sum())
    hi_offset = np.full(1 << (n - n_lo), -(1 << 40), dtype=np.int64)
    his, first = np.unique(states >> n_lo, return_index=True)
    hi_offset[his] = first
    return lo_rank, hi_offset


def build_sector_basis(n: int, n_up: int) -> SectorBasis:
    return SectorBasis(n, n_up)


def extract_bits(config, sites):
    """Pack the bits of ``config`` at ``sites`` into a new integer (bit k <- sites[k])."""
    config = np.asarray(config, dtype=np.int64)
    out = np.zeros(config.shape, dtype=np.int64)
    for k, s in enumerate(sites):
        out |= ((config >> s) & 1) << k
    return int(out) if out.ndim == 0 else out


def scatter_bits(packed, sites):
    """Inverse of :func:`extract_bits`."""
    packed = np.asarray(packed, dtype=np.int64)
    out = np.zeros(packed.shape, dtype=np.int64)
    for k, s in enumerate(sites):
        out |= ((packed >> k) & 1) << s
    return int(out) if out.ndim == 0 else out


def sublattice_split(config, cut):
    """Split configuration(s) into subsystem A and B parts following the cut's site order."""
    return extract_bits(config, cut.a_sites), extract_bits(config, cut.b_sites)


def sublattice_join(a_config, b_config, cut):
    return scatter_bits(a_config, cut.a_sites) | scatter_bits(b_config, cut.b_sites)
