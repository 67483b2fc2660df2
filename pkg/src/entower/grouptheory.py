"""SO(N) fully symmetric irreps and their content under the spin SO(3) subgroup.

The SO(N) vector is taken to restrict to one spin-1 triplet plus N-3 spin
singlets. Its weights under the SO(3) Cartan generator are therefore
``{+1, -1}`` and ``N-2`` zeros. Everything here is exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Dict, List, Union

from .errors import ConfigError

Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class BranchingTable:
    N: int
    J: int
    mult: Dict[int, int]
    dim: int

    def state_counts(self) -> List[int]:
        """``(2S+1) * mult(S)`` for S = 0..J."""
        return [(2 * s + 1) * self.mult.get(s, 0) for s in range(self.J + 1)]


def _check_N(N: int) -> None:
    if N < 3:
        raise ConfigError(f"SO(N) needs N >= 3, got {N}")


def casimir(N: int, J: Number) -> Number:
    """Quadratic Casimir ``J (J + N - 2)`` of the rank-J symmetric traceless irrep."""
    _check_N(N)
    if J < 0:
        raise ConfigError(f"superspin must be >= 0, got {J}")
    return J * (J + N - 2)


def symrep_dimension(N: int, J: int) -> int:
    """Dimension of the traceless symmetric rank-J tensors of SO(N)."""
    _check_N(N)
    lower = comb(J + N - 3, N - 1) if J >= 2 else 0
    return comb(J + N - 1, N - 1) - lower


def _symmetric_power_weights(N: int, J: int) -> Dict[int, int]:
    """Multiplicity of each Sz weight in Sym^J of the N-dim vector."""
    if J < 0:
        return {}
    # choose a copies of +1 and b copies of -1; the rest go to the N-2 zero weights
    weights: Dict[int, int] = {}
    zeros = N - 2
    for a in range(J + 1):
        for b in range(J - a + 1):
            rest = J - a - b
            ways = comb(rest + zeros - 1, zeros - 1) if zeros > 0 else int(rest == 0)
            weights[a - b] = weights.get(a - b, 0) + ways
    return weights


def branch_to_so3(N: int, J: int) -> BranchingTable:
    """Multiplets of each spin S inside the SO(N) irrep with superspin J."""
    _check_N(N)
    if J < 0:
        raise ConfigError(f"superspin must be >= 0, got {J}")
    full = _symmetric_power_weights(N, J)
    trace = _symmetric_power_weights(N, J - 2)
    w = {k: full.get(k, 0) - trace.get(k, 0) for k in range(-J, J + 1)}
    mult = {}
    for s in range(J + 1):
        count = w.get(s, 0) - w.get(s + 1, 0)
        if count:
            mult[s] = count
    dim = sum(w.values())
    return BranchingTable(N, J, mult, dim)


def table_rows(N: int, j_max: int) -> List[BranchingTable]:
    return [branch_to_so3(N, J) for J in range(j_max + 1)]


def format_table(N: int, j_max: int) -> str:
    """Aligned text table: irrep dimension, then state counts per SO(3) spin sector."""
    rows = table_rows(N, j_max)
    header = [f"SO({N}) IREP"] + [f"S={s}" for s in range(j_max + 1)]
    body = [[str(r.dim)] + [str(c) if c else "" for c in r.state_counts()]
            + [""] * (j_max - r.J) for r in rows]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    fmt = lambda row: "  ".join(cell.rjust(w) for cell, w in zip(row, widths)).rstrip()
    return "\n".join([fmt(header)] + [fmt(row) for row in body]) + "\n"


def table_csv(N: int, j_max: int) -> str:
    lines = ["N,J,dim,S,multiplets,states"]
    for r in table_rows(N, j_max):
        for s in range(r.J + 1):
            m = r.mult.get(s, 0)
            lines.append(f"{N},{r.J},{r.dim},{s},{m},{(2 * s + 1) * m}")
    return "\n".join(lines) + "\n"
