"""Shared brute-force oracles, written directly from the model definition.

Everything here is built from the raw formula ``h^(2*dim) / |h*o|^(dim+s)``
plus the closed-form tail, independently of the package's FFT and
min-cut machinery, so tests compare two genuinely different routes.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from fractv import GridDomain, PixelSet


def all_offsets(dim: int, r_cells: int, h: float, rho: float):
    """Nonzero integer offsets with |h*o| <= rho."""
    rng = range(-r_cells, r_cells + 1)
    if dim == 1:
        offs = [(o,) for o in rng if o != 0]
    else:
        offs = [(a, b) for a in rng for b in rng if (a, b) != (0, 0)]
    return [o for o in offs if math.sqrt(sum(x * x for x in o)) * h <= rho * (1 + 1e-12)]


def direct_weight(dim: int, s: float, h: float, off) -> float:
    d = math.sqrt(sum(x * x for x in off)) * h
    return h ** (2 * dim) / d ** (dim + s)


def tail_closed_form(dim: int, s: float, h: float, rho: float) -> float:
    omega = 2.0 if dim == 1 else math.pi
    return h**dim * dim * omega * rho ** (-s) / s


def brute_exposure(domain: GridDomain, s: float, rho: float) -> np.ndarray:
    """Per-cell exterior exposure by direct offset scan."""
    h, dim = domain.spacing, domain.dim
    r_cells = int(math.floor(rho / h * (1 + 1e-12)))
    offs = all_offsets(dim, r_cells, h, rho)
    shape = domain.shape
    ext = np.full(shape, tail_closed_form(dim, s, h, rho))
    for idx in np.ndindex(*shape):
        for off in offs:
            tgt = tuple(i + o for i, o in zip(idx, off))
            if any(t < 0 or t >= n for t, n in zip(tgt, shape)):
                ext[idx] += direct_weight(dim, s, h, off)
    return ext


def brute_perimeter(e: PixelSet, s: float, rho: float) -> float:
    """Double-sum fractional perimeter straight from the definition."""
    domain = e.domain
    h, dim = domain.spacing, domain.dim
    mask = ~e.interior_mask if e.background else e.interior_mask
    r_cells = int(math.floor(rho / h * (1 + 1e-12)))
    offs = all_offsets(dim, r_cells, h, rho)
    ext = brute_exposure(domain, s, rho)
    total = 0.0
    members = [tuple(i) for i in np.argwhere(mask)]
    for x in members:
        for off in offs:
            y = tuple(i + o for i, o in zip(x, off))
            if all(0 <= t < n for t, n in zip(y, domain.shape)) and not mask[y]:
                total += direct_weight(dim, s, h, off)
        total += ext[x]
    return total


def brute_total_variation(values: np.ndarray, domain: GridDomain, s: float, rho: float) -> float:
    """Double-sum total variation straight from the definition."""
    h, dim = domain.spacing, domain.dim
    r_cells = int(math.floor(rho / h * (1 + 1e-12)))
    offs = all_offsets(dim, r_cells, h, rho)
    ext = brute_exposure(domain, s, rho)
    total = 0.0
    for x in np.ndindex(*domain.shape):
        for off in offs:
            y = tuple(i + o for i, o in zip(x, off))
            if all(0 <= t < n for t, n in zip(y, domain.shape)):
                total += 0.5 * direct_weight(dim, s, h, off) * abs(values[x] - values[y])
        total += abs(values[x]) * ext[x]
    return total


class GeometricEnumerator:
    """Vectorized exhaustive minimizer of the geometric energy.

    Pair weights and exposures come from the direct formulas above; the
    search covers every window labeling.
    """

    def __init__(self, domain: GridDomain, s: float, rho: float):
        self.domain = domain
        h, dim = domain.spacing, domain.dim
        r_cells = int(math.floor(rho / h * (1 + 1e-12)))
        shape = domain.shape
        flat = np.arange(domain.num_cells).reshape(shape)
        pu, pv, w = [], [], []
        for off in all_offsets(dim, r_cells, h, rho):
            if off > tuple(0 for _ in off):  # half enumeration
                lens = [max(0, n - abs(o)) for o, n in zip(off, shape)]
                if any(l == 0 for l in lens):
                    continue
                sl_a = tuple(
                    slice(0, l) if o >= 0 else slice(n - l, n)
                    for o, n, l in zip(off, shape, lens)
                )
                sl_b = tuple(
                    slice(n - l, n) if o >= 0 else slice(0, l)
                    for o, n, l in zip(off, shape, lens)
                )
                pu.extend(flat[sl_a].ravel())
                pv.extend(flat[sl_b].ravel())
                w.extend([direct_weight(dim, s, h, off)] * flat[sl_a].size)
        self.pu, self.pv, self.w = np.array(pu, int), np.array(pv, int), np.array(w)
        self.ext = brute_exposure(domain, s, rho).ravel()

    def masks(self) -> np.ndarray:
        n = self.domain.num_cells
        return ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(bool)

    def energies(self, masks: np.ndarray, datum: PixelSet, lam: float) -> np.ndarray:
        per = (masks[:, self.pu] != masks[:, self.pv]) @ self.w if len(self.pu) else np.zeros(len(masks))
        per = per + ((~masks) if datum.background else masks) @ self.ext
        fid = (masks != datum.interior_mask.ravel()).sum(axis=1) * self.domain.cell_volume
        return per + lam * fid

    def optimum(self, datum: PixelSet, lam: float, rtol: float = 1e-9):
        masks = self.masks()
        tot = self.energies(masks, datum, lam)
        best = float(tot.min())
        fam = masks[tot <= best + rtol * (1.0 + abs(best))]
        return best, np.logical_and.reduce(fam, 0), np.logical_or.reduce(fam, 0)

    def perimeters(self, masks: np.ndarray) -> np.ndarray:
        per = (masks[:, self.pu] != masks[:, self.pv]) @ self.w if len(self.pu) else np.zeros(len(masks))
        return per + masks @ self.ext


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
