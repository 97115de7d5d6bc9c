from __future__ import annotations

import logging
from dataclasses import dataclass
from types import MappingProxyType
from typing import Dict, List, Mapping, Tuple

import numpy as np

from ..errors import DimensionMismatch

LOGGER = logging.getLogger(__name__)

LatticeSite = Tuple[int, ...]


def _as_site(site, dimension: int | None = None) -> LatticeSite:
    coords = tuple(int(v) for v in np.atleast_1d(site))
    if dimension is not None and len(coords) != dimension:
        raise DimensionMismatch(f"site {coords} does not have dimension {dimension}")
    return coords


@dataclass(frozen=True, slots=True)
class LatticeFunction:
    """Finitely supported complex function on Z^d, stored without zero entries."""

    entries: Mapping[LatticeSite, complex]
    dimension: int

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise DimensionMismatch("dimension must be at least 1")
        cleaned: Dict[LatticeSite, complex] = {}
        for site, value in self.entries.items():
            key = _as_site(site, self.dimension)
            value = complex(value)
            if value != 0:
                cleaned[key] = value
        object.__setattr__(self, "entries", MappingProxyType(cleaned))

    @classmethod
    def delta(cls, site, value: complex = 1.0) -> "LatticeFunction":
        key = _as_site(site)
        return cls({key: value}, len(key))

    @classmethod
    def from_dense(cls, array: np.ndarray, origin: LatticeSite) -> "LatticeFunction":
        """Build from a dense array whose index 0 sits at lattice site `origin`."""
        dimension = array.ndim
        entries = {
            tuple(int(i) + int(o) for i, o in zip(index, origin)): complex(array[index])
            for index in zip(*np.nonzero(array))
        }
        return cls(entries, dimension)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.items())

    def __getitem__(self, site) -> complex:
        return self.entries.get(_as_site(site, self.dimension), 0j)

    @property
    def support(self) -> List[LatticeSite]:
        return sorted(self.entries)

    def is_real(self) -> bool:
        return all(v.imag == 0 for v in self.entries.values())

    def conj(self) -> "LatticeFunction":
        return LatticeFunction({s: v.conjugate() for s, v in self.entries.items()}, self.dimension)

    def scaled(self, factor: complex) -> "LatticeFunction":
        return LatticeFunction({s: factor * v for s, v in self.entries.items()}, self.dimension)

    def __add__(self, other: "LatticeFunction") -> "LatticeFunction":
        check_dimensions(self, other)
        merged = dict(self.entries)
        for site, value in other.entries.items():
            merged[site] = merged.get(site, 0j) + value
        return LatticeFunction(merged, self.dimension)

    def __sub__(self, other: "LatticeFunction") -> "LatticeFunction":
        return self + other.scaled(-1.0)

    def l1_norm(self) -> float:
        return float(sum(abs(v) for v in self.entries.values()))

    def sup_norm(self) -> float:
        return float(max((abs(v) for v in self.entries.values()), default=0.0))

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        if not self.entries:
            zero = np.zeros(self.dimension, dtype=int)
            return zero, zero
        coords = np.array(list(self.entries), dtype=int)
        return coords.min(axis=0), coords.max(axis=0)

    def extent(self) -> int:
        """Largest ||x||_inf over the support."""
        return int(max((max(abs(c) for c in s) for s in self.entries), default=0))

    def to_dense(self) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = self.bounds()
        array = np.zeros(tuple(hi - lo + 1), dtype=complex)
        for site, value in self.entries.items():
            array[tuple(np.asarray(site) - lo)] = value
        return array, lo

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Support sites as an (n, d) integer array and the matching values."""
        sites = self.support
        coords = np.array(sites, dtype=int).reshape(len(sites), self.dimension)
        values = np.array([self.entries[s] for s in sites], dtype=complex)
        return coords, values


def check_dimensions(*functions: LatticeFunction, d: int | None = None) -> int:
    dims = {f.dimension for f in functions}
    if d is not None:
        dims.add(d)
    if len(dims) > 1:
        raise DimensionMismatch(f"incompatible dimensions {sorted(dims)}")
    return dims.pop()


def inner_product(f: LatticeFunction, g: LatticeFunction) -> complex:
    """<f, g> = sum_x conj(f(x)) g(x); conjugate-linear in the first argument."""
    check_dimensions(f, g)
    small, large = (f, g) if len(f) <= len(g) else (g, f)
    total = 0j
    for site in sorted(small.entries):
        if site in large.entries:
            total += f.entries[site].conjugate() * g.entries[site]
    return total


def symplectic_form(f: LatticeFunction, g: LatticeFunction) -> float:
    return inner_product(f, g).imag


def sup_distance(f: LatticeFunction, g: LatticeFunction) -> int:
    """max ||y - x||_inf over x in supp f, y in supp g."""
    check_dimensions(f, g)
    if not f.entries or not g.entries:
        return 0
    fx, _ = f.arrays()
    gy, _ = g.arrays()
    return int(np.abs(gy[:, None, :] - fx[None, :, :]).max())


def random_function(
    d: int, size: int, rng: np.random.Generator, spread: int = 3
) -> LatticeFunction:
    """Random complex function with at most `size` sites and entries in the unit disk."""
    entries: Dict[LatticeSite, complex] = {}
    for _ in range(size):
        site = tuple(int(v) for v in rng.integers(-spread, spread + 1, size=d))
        radius = np.sqrt(rng.uniform(0.0, 1.0))
        angle = rng.uniform(0.0, 2.0 * np.pi)
        entries[site] = radius * np.exp(1j * angle)
    return LatticeFunction(entries, d)


@dataclass(frozen=True, slots=True)
class TruncationPolicy:
    tolerance: float = 1e-12
    margin: int = 8
    growth: float = 1.5
    max_radius: int = 2048


@dataclass(frozen=True, slots=True)
class EvolutionResult:
    function: LatticeFunction
    truncation_radius: int
    tail_bound: float
    resolution: int | None = None
    est_error: float = 0.0

