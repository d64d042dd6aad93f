"""Tabulated fractional interaction kernel.

The nonlocal functionals in this package integrate ``1/|x-y|^(n+s)``
over pairs of points.  On the lattice this becomes a table of weights
per integer offset ``o != 0``:

    w(o) = h^(2*dim) / |h*o|^(dim+s)

which is the midpoint quadrature of the kernel over a pair of cells.
Offsets are enumerated up to a physical truncation radius ``rho``;
interactions beyond ``rho`` are priced per cell by the closed-form
radial integral

    tail_per_cell = h^dim * dim * omega_dim * rho^(-s) / s,

with ``omega_1 = 2`` and ``omega_2 = pi``, which equals the exact
integral of the kernel over ``{|z| > rho}`` times one cell volume.
By default ``rho`` is the window diameter, so every in-window pair is
tabulated and only window-to-far-exterior interactions use the tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridDomain

__all__ = ["Kernel", "build_kernel", "tail_mass", "unit_ball_volume"]

_BALL_VOLUME = {1: 2.0, 2: math.pi}


def unit_ball_volume(dim: int) -> float:
    """Volume of the unit ball: 2 in 1D, pi in 2D."""
    return _BALL_VOLUME[dim]


@dataclass(frozen=True, eq=False)
class Kernel:
    """Fractional interaction weights on lattice offsets.

    ``table`` is a centered array of shape ``(2R+1,) * dim`` holding
    ``w(o)`` at index ``o + R``; the center entry and entries beyond the
    truncation radius are zero.  Instances are immutable and safe for
    shared concurrent reads.
    """

    dim: int
    s: float
    spacing: float
    trunc_radius: float
    radius_cells: int
    table: np.ndarray
    tail_per_cell: float
    total_weight: float

    def weight(self, offset) -> float:
        """Weight of one integer offset vector (0.0 beyond the radius)."""
        off = np.atleast_1d(np.asarray(offset, dtype=np.int64))
        if off.shape != (self.dim,):
            raise ValueError(f"offset must have {self.dim} components")
        if np.all(off == 0):
            return 0.0
        if np.any(np.abs(off) > self.radius_cells):
            return 0.0
        return float(self.table[tuple(off + self.radius_cells)])

    def cropped_table(self, shape: tuple[int, ...]) -> np.ndarray:
        """Table restricted to offsets that can connect two cells of a window."""
        slices = tuple(
            slice(max(0, self.radius_cells - (n - 1)), self.radius_cells + min(self.radius_cells, n - 1) + 1)
            for n in shape
        )
        return self.table[slices]

    def compatible_domain(self, domain: GridDomain) -> None:
        if domain.dim != self.dim or domain.spacing != self.spacing:
            raise ValueError(
                f"kernel built for dim={self.dim}, h={self.spacing}; "
                f"domain has dim={domain.dim}, h={domain.spacing}"
            )


def build_kernel(domain: GridDomain, s: float, trunc_radius: float | None = None) -> Kernel:
    """Tabulate the fractional kernel for a domain.

    Parameters
    ----------
    domain : GridDomain
        Supplies dimension and spacing (the table does not depend on the
        window extents beyond the default truncation radius).
    s : float
        Fractional order, strictly between 0 and 1.
    trunc_radius : float, optional
        Physical truncation radius ``rho``; defaults to the window
        diameter so all in-window pairs are tabulated exactly.
    """
    if not (0.0 < s < 1.0):
        raise ValueError(f"s must lie in (0, 1), got {s}")
    h = domain.spacing
    if trunc_radius is None:
        trunc_radius = max(domain.diameter, h)
    if trunc_radius < h:
        raise ValueError(f"trunc_radius must be >= spacing {h}, got {trunc_radius}")

    dim = domain.dim
    # |h*o| <= rho, with a tiny relative slack against float noise
    r_cells = int(math.floor(trunc_radius / h * (1.0 + 1e-12)))
    if (2 * r_cells + 1) ** dim > 2**24:
        raise ValueError(
            f"truncation radius {trunc_radius} needs {(2 * r_cells + 1) ** dim} table entries; "
            "reduce it or coarsen the grid"
        )
    axes = [np.arange(-r_cells, r_cells + 1)] * dim
    grids = np.meshgrid(*axes, indexing="ij")
    dist2 = sum(g.astype(np.float64) ** 2 for g in grids)
    inside = dist2 * h * h <= trunc_radius * trunc_radius * (1.0 + 1e-12)
    inside[(r_cells,) * dim] = False
    table = np.zeros_like(dist2)
    table[inside] = h ** (2 * dim) * (np.sqrt(dist2[inside]) * h) ** (-(dim + s))
    table.flags.writeable = False

    tail = h**dim * dim * unit_ball_volume(dim) * trunc_radius ** (-s) / s
    return Kernel(
        dim=dim,
        s=s,
        spacing=h,
        trunc_radius=float(trunc_radius),
        radius_cells=r_cells,
        table=table,
        tail_per_cell=tail,
        total_weight=float(table.sum()),
    )


def tail_mass(kernel: Kernel) -> float:
    """Per-cell interaction mass beyond the truncation radius.

    Decays like ``rho^(-s)``: doubling ``rho`` multiplies it by ``2^(-s)``.
    """
    return kernel.tail_per_cell
