"""Lattice geometry, spin magnitude, and magnon-sector occupation bases.

The ferromagnetic Heisenberg chain conserves the total magnon number
(the number of spin deviations above the fully polarized state), so every
operator in this package is assembled block by block on a fixed-number
sector.  A sector basis is the lexicographically ordered list of
occupation vectors (n_1, ..., n_M) with sum n and a per-site cap, which
is 2S for the physical spin system and n (i.e. no constraint) for free
bosons.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np


@dataclass(frozen=True)
class SpinMagnitude:
    """Spin S stored as the integer 2S so half-integer spins stay exact."""

    two_s: int

    def __post_init__(self):
        if self.two_s < 1:
            raise ValueError(f"two_s must be >= 1, got {self.two_s}")

    @property
    def s(self) -> float:
        return self.two_s / 2.0

    @property
    def s_exact(self) -> Fraction:
        return Fraction(self.two_s, 2)

    @property
    def site_dim(self) -> int:
        return self.two_s + 1


BOUNDARIES = ("free-chain", "dirichlet-pinned", "free-2d-grid")


@dataclass(frozen=True)
class SpinLattice:
    """Open-boundary chain or square grid on which the spins live.

    Parameters
    ----------
    dimension : 1 or 2
    extents : tuple of per-axis site counts (each >= 2)
    boundary : "free-chain" (open 1d), "dirichlet-pinned" (1d or 2d box
        whose boundary spins are forced maximally down), or
        "free-2d-grid" (open 2d).
    """

    dimension: int
    extents: tuple
    boundary: str = "free-chain"

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))
        if len(self.extents) != self.dimension:
            raise ValueError(
                f"need {self.dimension} extents, got {len(self.extents)}"
            )
        if any(e < 2 for e in self.extents):
            raise ValueError(f"every extent must be >= 2, got {self.extents}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(
                f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}"
            )
        if self.boundary == "free-chain" and self.dimension != 1:
            raise ValueError("free-chain boundary requires dimension 1")
        if self.boundary == "free-2d-grid" and self.dimension != 2:
            raise ValueError("free-2d-grid boundary requires dimension 2")

    @classmethod
    def chain(cls, length: int, boundary: str = "free-chain") -> "SpinLattice":
        return cls(1, (length,), boundary)

    @classmethod
    def square(cls, side: int, boundary: str = "free-2d-grid") -> "SpinLattice":
        return cls(2, (side, side), boundary)

    @property
    def nsites(self) -> int:
        n = 1
        for e in self.extents:
            n *= e
        return n

    def site_index(self, coords) -> int:
        """Row-major site index of a 1-based coordinate tuple."""
        if self.dimension == 1:
            (x,) = coords if isinstance(coords, tuple) else (coords,)
            return x - 1
        x, y = coords
        return (x - 1) * self.extents[1] + (y - 1)

    def bonds(self):
        """Nearest-neighbor site-index pairs, open boundaries."""
        out = []
        if self.dimension == 1:
            (ell,) = self.extents
            out = [(x, x + 1) for x in range(ell - 1)]
        else:
            lx, ly = self.extents
            for x in range(lx):
                for y in range(ly):
                    i = x * ly + y
                    if x + 1 < lx:
                        out.append((i, i + ly))
                    if y + 1 < ly:
                        out.append((i, i + 1))
        return out

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.nsites, dtype=int)
        for i, j in self.bonds():
            deg[i] += 1
            deg[j] += 1
        return deg


def _bounded_compositions(total, nsites, cap):
    """Yield occupation tuples summing to `total`, each entry in [0, cap],
    in ascending lexicographic order."""
    state = [0] * nsites

    def rec(pos, remaining):
        if pos == nsites - 1:
            if remaining <= cap:
                state[pos] = remaining
                yield tuple(state)
                state[pos] = 0
            return
        lo = max(0, remaining - cap * (nsites - 1 - pos))
        hi = min(cap, remaining)
        for k in range(lo, hi + 1):
            state[pos] = k
            yield from rec(pos + 1, remaining - k)
        state[pos] = 0

    yield from rec(0, total)


def sector_dimension(nsites: int, n: int, cap: int) -> int:
    """Number of occupation vectors with sum n and per-site cap, by
    inclusion-exclusion over sites forced above the cap."""
    if n < 0 or n > cap * nsites:
        return 0
    total = 0
    for j in range(0, n // (cap + 1) + 1):
        total += (-1) ** j * comb(nsites, j) * comb(
            n - j * (cap + 1) + nsites - 1, nsites - 1
        )
    return total


@dataclass
class MagnonSectorBasis:
    """Ordered occupation-number basis of a fixed-magnon-number block.

    `capped=True` enforces n_x <= 2S (the physical spin space); with
    `capped=False` the per-site occupation is unconstrained within the
    sector (free bosons), i.e. the effective cap is n itself.
    """

    lattice: SpinLattice
    spin: SpinMagnitude
    n: int
    capped: bool
    states: np.ndarray
    index: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def cap(self) -> int:
        return self.spin.two_s if self.capped else self.n

    def state_index(self, occ) -> int:
        return self.index[tuple(int(v) for v in occ)]


def enumerate_sector_basis(
    lattice: SpinLattice,
    spin: SpinMagnitude,
    n: int,
    capped: bool = True,
) -> MagnonSectorBasis:
    """Enumerate the n-magnon occupation basis on a lattice.

    Parameters
    ----------
    lattice, spin : geometry and spin magnitude.
    n : total magnon number; equals S*M + (total 3-component of spin)
        on an M-site lattice.
    capped : enforce the hard-core cap n_x <= 2S when True; otherwise
        enumerate unconstrained bosons (cap n), as needed by the free
        hopping operator.

    Returns
    -------
    MagnonSectorBasis with states in ascending lexicographic order.
    """
    nsites = lattice.nsites
    cap = spin.two_s if capped else n
    if n < 0 or n > cap * nsites:
        raise ValueError(
            f"magnon number n={n} outside [0, {cap * nsites}] "
            f"(cap {cap} per site on {nsites} sites)"
        )
    states = np.array(
        list(_bounded_compositions(n, nsites, cap)), dtype=np.int64
    ).reshape(-1, nsites)
    index = {tuple(row): i for i, row in enumerate(states.tolist())}
    return MagnonSectorBasis(lattice, spin, n, capped, states, index)
