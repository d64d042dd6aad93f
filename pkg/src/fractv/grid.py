"""Lattice domains, pixel sets and scalar fields.

Everything in this package lives on a finite rectangular window of the
plane (or the line): a uniform grid of square cells with spacing ``h``.
A measurable set is represented by a bitmap over the window together
with a *background* bit that tells whether every point outside the
window belongs to the set.  This makes complements first-class: the
complement of a bounded set is an unbounded set with background 1, and
``complement(complement(E)) == E`` holds bit-exactly.

A scalar field carries one value per cell and is identically zero
outside the window, so its superlevel sets ``{f > t}`` automatically
pick up background 1 for negative thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainMismatchError",
    "GridDomain",
    "PixelSet",
    "ScalarField",
    "level_set",
    "set_algebra",
    "measure",
    "symm_diff_measure",
]


class DomainMismatchError(ValueError):
    """Raised when two grid objects do not share the same domain."""


@dataclass(frozen=True)
class GridDomain:
    """Finite rectangular lattice in dimension 1 or 2.

    ``shape`` gives the extent in cells per axis, ``spacing`` the cell
    side length (same along all axes) and ``origin`` the physical
    coordinate of the center of cell ``(0, ..., 0)``.
    """

    shape: tuple[int, ...]
    spacing: float = 1.0
    origin: tuple[float, ...] = ()

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        object.__setattr__(self, "shape", shape)
        if len(shape) not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got shape {shape}")
        if any(n < 1 for n in shape):
            raise ValueError(f"every extent must be >= 1, got {shape}")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        origin = tuple(float(x) for x in self.origin) if self.origin else (0.0,) * len(shape)
        if len(origin) != len(shape):
            raise ValueError("origin length must match dimension")
        object.__setattr__(self, "origin", origin)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def diameter(self) -> float:
        """Largest center-to-center distance inside the window."""
        return self.spacing * math.sqrt(sum((n - 1) ** 2 for n in self.shape))

    def cell_centers(self) -> np.ndarray:
        """Physical coordinates of cell centers, shape ``(*shape, dim)``."""
        axes = [self.origin[a] + self.spacing * np.arange(n) for a, n in enumerate(self.shape)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack(grids, axis=-1)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(eq=False)
class PixelSet:
    """A measurable-set surrogate: window bitmap plus background bit.

    The set represented is the union of the cells whose bit is on,
    together with the whole exterior of the window when ``background``
    is true.  Instances are immutable (the mask array is frozen).
    """

    domain: GridDomain
    interior_mask: np.ndarray
    background: bool = False

    def __post_init__(self):
        mask = np.asarray(self.interior_mask, dtype=bool)
        if mask.shape != self.domain.shape:
            raise ValueError(f"mask shape {mask.shape} != domain shape {self.domain.shape}")
        self.interior_mask = _frozen(mask)
        self.background = bool(self.background)

    @property
    def cell_count(self) -> int:
        return int(self.interior_mask.sum())

    @property
    def is_finite(self) -> bool:
        return not self.background

    def complement(self) -> "PixelSet":
        return PixelSet(self.domain, ~self.interior_mask, not self.background)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PixelSet):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.background == other.background
            and np.array_equal(self.interior_mask, other.interior_mask)
        )

    @staticmethod
    def empty(domain: GridDomain) -> "PixelSet":
        return PixelSet(domain, np.zeros(domain.shape, dtype=bool), False)

    @staticmethod
    def full_space(domain: GridDomain) -> "PixelSet":
        return PixelSet(domain, np.ones(domain.shape, dtype=bool), True)

    @staticmethod
    def from_indices(domain: GridDomain, indices, background: bool = False) -> "PixelSet":
        mask = np.zeros(domain.shape, dtype=bool)
        for idx in indices:
            mask[tuple(np.atleast_1d(idx))] = True
        return PixelSet(domain, mask, background)


@dataclass(eq=False)
class ScalarField:
    """Real-valued function sampled at cell centers, zero outside the window."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.domain.shape:
            raise ValueError(f"values shape {vals.shape} != domain shape {self.domain.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        self.values = _frozen(vals)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScalarField):
            return NotImplemented
        return self.domain == other.domain and np.array_equal(self.values, other.values)

    @staticmethod
    def zeros(domain: GridDomain) -> "ScalarField":
        return ScalarField(domain, np.zeros(domain.shape))

    @staticmethod
    def indicator(pset: PixelSet) -> "ScalarField":
        if pset.background:
            raise ValueError("indicator of an unbounded set is not a window field")
        return ScalarField(pset.domain, pset.interior_mask.astype(np.float64))


def level_set(f: ScalarField, t: float, strict: bool = True) -> PixelSet:
    """Superlevel set ``{f > t}`` (strict) or ``{f >= t}``.

    Since ``f`` vanishes outside the window, the exterior belongs to the
    set exactly when ``0 > t`` (strict) or ``0 >= t``; that decides the
    background bit.  Superlevel sets are nested: ``t1 >= t2`` implies
    ``level_set(f, t1) <= level_set(f, t2)``.
    """
    if not math.isfinite(t):
        raise ValueError("threshold must be finite")
    if strict:
        mask = f.values > t
        background = 0.0 > t
    else:
        mask = f.values >= t
        background = 0.0 >= t
    return PixelSet(f.domain, mask, background)


def _check_same_domain(a: PixelSet, b: PixelSet) -> None:
    if a.domain != b.domain:
        raise DomainMismatchError(f"domains differ: {a.domain} vs {b.domain}")


def set_algebra(a: PixelSet, b: PixelSet | None, op: str) -> PixelSet:
    """Pointwise set operation with correct background-bit combination.

    ``op`` is one of ``union``, ``intersection``, ``difference``,
    ``symmetric_difference``, ``complement``.  ``complement`` ignores
    ``b`` (pass ``None``).
    """
    if op == "complement":
        return a.complement()
    if b is None:
        raise ValueError(f"operation {op!r} needs two operands")
    _check_same_domain(a, b)
    ma, mb = a.interior_mask, b.interior_mask
    ba, bb = a.background, b.background
    if op == "union":
        return PixelSet(a.domain, ma | mb, ba or bb)
    if op == "intersection":
        return PixelSet(a.domain, ma & mb, ba and bb)
    if op == "difference":
        return PixelSet(a.domain, ma & ~mb, ba and not bb)
    if op == "symmetric_difference":
        return PixelSet(a.domain, ma ^ mb, ba != bb)
    raise ValueError(f"unknown set operation {op!r}")


def measure(e: PixelSet) -> float:
    """Lebesgue measure: ``count * h^dim`` for finite sets, ``inf`` otherwise."""
    if e.background:
        return math.inf
    return e.cell_count * e.domain.cell_volume


def symm_diff_measure(e: PixelSet, u: PixelSet) -> float:
    """``|E symmdiff U|``; infinite exactly when the background bits differ."""
    _check_same_domain(e, u)
    if e.background != u.background:
        return math.inf
    count = int(np.count_nonzero(e.interior_mask ^ u.interior_mask))
    return count * e.domain.cell_volume
