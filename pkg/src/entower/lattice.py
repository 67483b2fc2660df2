"""Periodic square-lattice geometry: bonds, Q-term plaquettes and subsystem cuts.

Sites are numbered ``i = x + Lx * y``. All boundaries are periodic; on a
2-wide direction the forward and backward neighbor coincide and the bond is
kept twice, matching the formal bond sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

from .errors import ConfigError

STRONG = "strong"
WEAK = "weak"
PLAIN = "plain"


@dataclass(frozen=True)
class Lattice:
    Lx: int
    Ly: int
    d: int = field(default=2, init=False)

    def __post_init__(self):
        for name, value in (("Lx", self.Lx), ("Ly", self.Ly)):
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            if value < 2 or value % 2:
                raise ConfigError(f"{name} must be even and >= 2, got {value}")

    @property
    def n(self) -> int:
        return self.Lx * self.Ly

    def site(self, x: int, y: int) -> int:
        return (x % self.Lx) + self.Lx * (y % self.Ly)

    def coords(self, i: int) -> Tuple[int, int]:
        return i % self.Lx, i // self.Lx

    def neighbors(self, i: int) -> List[int]:
        """Right, up, left, down neighbors (with multiplicity on 2-wide directions)."""
        x, y = self.coords(i)
        return [self.site(x + 1, y), self.site(x, y + 1),
                self.site(x - 1, y), self.site(x, y - 1)]


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    kind: str = PLAIN

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("bond endpoints must differ")
        if self.i > self.j:
            # canonical order i < j
            a, b = self.j, self.i
            object.__setattr__(self, "i", a)
            object.__setattr__(self, "j", b)


@dataclass(frozen=True)
class Plaquette:
    """A Q-term support: ``sites`` plus the disjoint pairs whose projectors are multiplied."""

    sites: Tuple[int, ...]
    pairing: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if len(set(self.sites)) != len(self.sites):
            raise ValueError(f"plaquette sites not distinct: {self.sites}")
        flat = [s for pair in self.pairing for s in pair]
        if len(set(flat)) != len(flat):
            raise ValueError(f"plaquette pairs not disjoint: {self.pairing}")
        if not set(flat) <= set(self.sites):
            raise ValueError("pairing refers to sites outside the plaquette")


@dataclass(frozen=True)
class Cut:
    a_sites: Tuple[int, ...]
    b_sites: Tuple[int, ...]
    descriptor: str = ""

    @property
    def size_a(self) -> int:
        return len(self.a_sites)

    @property
    def n(self) -> int:
        return len(self.a_sites) + len(self.b_sites)


def build_lattice(Lx: int, Ly: int) -> Lattice:
    return Lattice(Lx, Ly)


def nn_bonds(lat: Lattice) -> List[Bond]:
    """All ``2 * n`` nearest-neighbor bonds, one rightward and one upward per site."""
    bonds = []
    for y in range(lat.Ly):
        for x in range(lat.Lx):
            i = lat.site(x, y)
            bonds.append(Bond(i, lat.site(x + 1, y)))
            bonds.append(Bond(i, lat.site(x, y + 1)))
    return bonds


def dimer_bonds(lat: Lattice) -> List[Bond]:
    """Columnar dimerization: horizontal bonds starting at even ``x`` are strong."""
    bonds = []
    for y in range(lat.Ly):
        for x in range(lat.Lx):
            i = lat.site(x, y)
            kind = STRONG if x % 2 == 0 else WEAK
            bonds.append(Bond(i, lat.site(x + 1, y), kind))
            bonds.append(Bond(i, lat.site(x, y + 1), WEAK))
    return bonds


def _check_nn(lat: Lattice, pairs) -> None:
    for a, b in pairs:
        if b not in lat.neighbors(a):
            raise ValueError(f"pair ({a}, {b}) is not a nearest-neighbor bond")


def jq3_plaquettes(lat: Lattice) -> List[Plaquette]:
    """Columnar triples of parallel bonds in both orientations.

    The horizontal orientation stacks bonds ``(x,y)-(x+1,y)`` for rows
    ``y, y+1, y+2``; the vertical one places bonds ``(x,y)-(x,y+1)`` side by
    side at ``x, x+1, x+2``. Lattices with a 2-wide direction make the three
    pairs overlap and are rejected.
    """
    if lat.Lx < 3 or lat.Ly < 3:
        raise ConfigError(
            f"J-Q3 six-spin terms need Lx, Ly >= 3 (got {lat.Lx}x{lat.Ly})")
    plaqs = []
    for y in range(lat.Ly):
        for x in range(lat.Lx):
            pairs = tuple((lat.site(x, y + r), lat.site(x + 1, y + r)) for r in range(3))
            plaqs.append(Plaquette(tuple(s for p in pairs for s in p), pairs))
    for y in range(lat.Ly):
        for x in range(lat.Lx):
            pairs = tuple((lat.site(x + r, y), lat.site(x + r, y + 1)) for r in range(3))
            plaqs.append(Plaquette(tuple(s for p in pairs for s in p), pairs))
    for p in plaqs:
        _check_nn(lat, p.pairing)
    return plaqs


def cbjq_plaquettes(lat: Lattice, single_pairing: bool = False) -> List[Plaquette]:
    """Checkerboard squares (lower-left corner with ``x + y`` even).

    Every square appears once per pairing: first the horizontal pairs
    ``{(ll, lr), (ul, ur)}``, then the vertical pairs ``{(ll, ul), (lr, ur)}``
    unless ``single_pairing`` is set. Squares with ``x`` even and those with
    ``x`` odd form two disjoint covers of the lattice.
    """
    plaqs = []
    for y in range(lat.Ly):
        for x in range(lat.Lx):
            if (x + y) % 2:
                continue
            ll, lr = lat.site(x, y), lat.site(x + 1, y)
            ul, ur = lat.site(x, y + 1), lat.site(x + 1, y + 1)
            sites = (ll, lr, ul, ur)
            plaqs.append(Plaquette(sites, ((ll, lr), (ul, ur))))
            if not single_pairing:
                plaqs.append(Plaquette(sites, ((ll, ul), (lr, ur))))
    for p in plaqs:
        _check_nn(lat, p.pairing)
    return plaqs


def make_cut(lat: Lattice, spec: str) -> Cut:
    """Parse a cut descriptor: ``row:<y>`` or ``sites:<i,j,...>``."""
    kind, sep, arg = spec.strip().partition(":")
    if not sep:
        raise ConfigError(f"bad cut descriptor {spec!r}; expected row:<y> or sites:<list>")
    kind = kind.strip().lower()
    try:
        if kind == "row":
            y = int(arg)
            if not 0 <= y < lat.Ly:
                raise ConfigError(f"cut row {y} out of range for Ly={lat.Ly}")
            a_sites = [lat.site(x, y) for x in range(lat.Lx)]
        elif kind == "sites":
            a_sites = [int(tok) for tok in arg.replace(" ", "").split(",") if tok]
        else:
            raise ConfigError(f"unknown cut kind {kind!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad cut descriptor {spec!r}: {exc}") from None
    if any(not 0 <= s < lat.n for s in a_sites):
        raise ConfigError(f"cut site out of range in {spec!r} (n={lat.n})")
    if len(set(a_sites)) != len(a_sites):
        raise ConfigError(f"duplicate sites in cut {spec!r}")
    if not 1 <= len(a_sites) <= lat.n - 1:
        raise ConfigError(f"cut must leave both subsystems non-empty: {spec!r}")
    chosen = set(a_sites)
    b_sites = tuple(s for s in range(lat.n) if s not in chosen)
    return Cut(tuple(a_sites), b_sites, spec.strip())
