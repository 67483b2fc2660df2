"""Tower-of-states extraction and SO(N) classification of an entanglement spectrum.

The lowest entanglement energy in each spin sector is compared against the
Casimir law: gaps ``xi_min(S) - xi_min(S_min)`` should be proportional to
``S(S+N-2) - S_min(S_min+N-2)``. Each candidate N gets a through-origin
least-squares slope and a normalized RMS residual; the smallest residual
wins.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import AnalysisError, InsufficientDataError, TowerTruncationError
from .grouptheory import branch_to_so3, casimir

DEFAULT_WINDOW_FRACTION = 0.05
TIE_TOL = 1e-12
DISAGREEMENT = 0.75


@dataclass(frozen=True)
class TowerPoint:
    spin: float
    xi_min: float
    count_near: int


@dataclass
class Tower:
    points: List[TowerPoint]
    block: float
    window: float

    @property
    def spins(self) -> np.ndarray:
        return np.array([p.spin for p in self.points])

    @property
    def xi(self) -> np.ndarray:
        return np.array([p.xi_min for p in self.points])

    @property
    def gaps(self) -> np.ndarray:
        xi = self.xi
        return xi - xi[0]


@dataclass
class CandidateFit:
    N: int
    slope: float
    residual: float


@dataclass
class TowerFit:
    candidates: Dict[int, CandidateFit]
    chosen_N: int
    alpha: float
    beta: float
    N_est: Optional[float]
    warnings: List[str] = field(default_factory=list)


def extract_tower(levels, s_max: float, block: Optional[float] = None,
                  window: Optional[float] = None) -> Tower:
    """Lowest entanglement energy per spin in one magnetization block.

    ``block`` defaults to the smallest ``|sz|`` present. ``window`` (the
    degeneracy window) defaults to 5% of the full xi span of ``levels``.
    """
    levels = list(levels)
    if not levels:
        raise TowerTruncationError("no entanglement levels to build a tower from")
    if block is None:
        block = min((lv.sz for lv in levels), key=lambda m: (abs(m), m))
    if window is None:
        xis = [lv.xi for lv in levels]
        window = DEFAULT_WINDOW_FRACTION * (max(xis) - min(xis))
    in_block = [lv for lv in levels if lv.sz == block]
    s_min = abs(block)
    points = []
    spin = s_min
    while spin <= s_max + 1e-9:
        sector = [lv.xi for lv in in_block if lv.spin == spin]
        if not sector:
            raise TowerTruncationError(
                f"spin sector S={spin:g} is empty in block sz={block:g} (s_max={s_max:g})")
        lo = min(sector)
        near = sum(1 for xi in sector if xi - lo <= window)
        points.append(TowerPoint(spin, lo, near))
        spin += 1
    return Tower(points, block, window)


def _casimir_offsets(spins: np.ndarray, N: int) -> np.ndarray:
    x = np.array([float(casimir(N, float(s))) for s in spins])
    return x - x[0]


def fit_candidate(tower: Tower, N: int) -> Tuple[float, float]:
    """Through-origin fit of tower gaps against Casimir offsets: ``(slope, residual)``.

    A tower with identically zero gaps returns ``(0.0, 0.0)`` and warns.
    """
    if len(tower.points) < 3:
        raise InsufficientDataError(
            f"tower fit needs at least 3 points, got {len(tower.points)}")
    x = _casimir_offsets(tower.spins, N)
    y = tower.gaps
    slope = float(x @ y / (x @ x))
    syy = float(y @ y)
    if syy == 0.0:
        warnings.warn("degenerate tower: all gaps are zero", RuntimeWarning, stacklevel=2)
        return slope, 0.0
    resid = y - slope * x
    return slope, float(np.sqrt(resid @ resid / syy))


def free_fit(tower: Tower) -> Tuple[float, float]:
    """Two-parameter fit ``gap = alpha (S^2 - S0^2) + beta (S - S0)``."""
    s = tower.spins
    s0 = s[0]
    design = np.column_stack([s ** 2 - s0 ** 2, s - s0])
    coef, *_ = np.linalg.lstsq(design, tower.gaps, rcond=None)
    return float(coef[0]), float(coef[1])


def classify(tower: Tower, candidates: Iterable[int]) -> TowerFit:
    cands = sorted(set(int(n) for n in candidates))
    if not cands:
        raise AnalysisError("no candidate N given")
    if cands[0] < 3:
        raise AnalysisError(f"candidate N must be >= 3, got {cands[0]}")
    notes: List[str] = []
    results = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for n in cands:
            slope, residual = fit_candidate(tower, n)
            results[n] = CandidateFit(n, slope, residual)
    if caught:
        notes.append("degenerate tower: all gaps are zero")
    for fit in results.values():
        if fit.slope < 0:
            notes.append(f"negative slope {fit.slope:.6g} for N={fit.N}")

    best = min(fit.residual for fit in results.values())
    tied = [n for n in cands if results[n].residual - best <= TIE_TOL]
    chosen = tied[0]
    if len(tied) > 1:
        notes.append(f"residual tie between N={tied}; chose smaller N={chosen}")

    alpha, beta = free_fit(tower)
    n_est = None
    if alpha <= 0:
        notes.append(f"free fit curvature alpha={alpha:.6g} <= 0; N_est undefined")
    else:
        n_est = beta / alpha + 2
        if abs(n_est - chosen) > DISAGREEMENT:
            notes.append(f"free-fit N_est={n_est:.4g} disagrees with chosen N={chosen}")
    return TowerFit(results, chosen, alpha, beta, n_est, notes)


@dataclass
class RungReport:
    rung: int
    xi: float
    expected: Dict[int, int]
    observed: Dict[int, int]

    @property
    def matches(self) -> bool:
        return self.expected == self.observed


def degeneracy_report(levels, tower: Tower, chosen_N: int) -> List[RungReport]:
    """Compare multiplet counts near each rung with the SO(N) -> SO(3) branching.

    For rung J (located at ``xi_min(S=J)``) the observed count for spin S is
    the number of multiplets of that spin in the tower's block whose xi lies
    within the tower window of the rung. Advisory only.
    """
    reports = []
    in_block = [lv for lv in levels if lv.sz == tower.block]
    for point in tower.points:
        if point.spin != int(point.spin):
            continue
        rung = int(point.spin)
        expected = {s: m for s, m in branch_to_so3(chosen_N, rung).mult.items()
                    if s >= abs(tower.block)}
        observed: Dict[int, int] = {}
        for lv in in_block:
            if abs(lv.xi - point.xi_min) <= tower.window and lv.spin <= rung:
                observed[int(lv.spin)] = observed.get(int(lv.spin), 0) + 1
        reports.append(RungReport(rung, point.xi_min, expected, dict(sorted(observed.items()))))
    return reports


def tower_csv(tower: Tower) -> str:
    lines = ["S,xi_min,gap,count_near"]
    for p, gap in zip(tower.points, tower.gaps):
        lines.append(f"{p.spin:.17g},{p.xi_min:.17g},{gap:.17g},{p.count_near}")
    return "\n".join(lines) + "\n"


def scatter_csv(tower: Tower, N: int) -> str:
    lines = ["x,y"]
    for x, y in zip(_casimir_offsets(tower.spins, N), tower.gaps):
        lines.append(f"{x:.17g},{y:.17g}")
    return "\n".join(lines) + "\n"
