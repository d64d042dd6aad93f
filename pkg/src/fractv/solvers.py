"""Layered solution of the denoising model and the fidelity-threshold toolbox.

The functional problem decomposes across superlevel sets: quantize the
datum to finitely many values, solve one geometric problem per gap
between consecutive values (the datum of the gap is the superlevel set
there), and stack the solutions.  Nested data have nested minimal (and
nested maximal) solutions, so picking one variant consistently makes
the stack a well-defined field, and the layer-cake identity makes it
optimal among all fields quantized to the same values.

On top of the layered solver sit:

* ``cheeger`` -- Dinkelbach iteration for the ratio
  ``min P(U)/|U|`` over subsets of a finite set, each inner step a
  min-cut restricted to the set's cells;
* ``zero_threshold`` / ``low_fidelity_certificate`` -- the largest
  fidelity weight at which the empty set (resp. the zero field) stays
  optimal;
* ``high_fidelity_threshold`` -- the ball-based sufficient fidelity
  weight for exact datum recovery, using the cached perimeter constant
  of the unit ball;
* ``trichotomy`` -- the below/at/above classification for convex data;
* ``truncation_checks`` -- re-solve verification of the translation,
  contrast, sign-part and truncation identities (cell-exact, because
  layered cuts commute with these operations once thresholds are
  mapped accordingly).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .energy import (
    EnergyBreakdown,
    frac_perimeter,
    functional_energy,
    geometric_energy,
    value_levels,
)
from .grid import GridDomain, PixelSet, ScalarField, level_set, measure
from .kernel import Kernel, build_kernel, unit_ball_volume
from .mincut import _structure_for, build_cut_problem, pick_scale, solve_cut

__all__ = [
    "LayeredSolution",
    "SolveReport",
    "CheegerResult",
    "IdentityCheck",
    "TrichotomyReport",
    "solve_functional",
    "truncation_checks",
    "cheeger",
    "zero_threshold",
    "low_fidelity_certificate",
    "high_fidelity_threshold",
    "ball_perimeter_constant",
    "trichotomy",
    "is_discrete_convex",
    "make_disk",
    "make_rectangle",
]

VARIANTS = ("minimal", "maximal")


@dataclass
class SolveReport:
    """Diagnostics for one layered solve."""

    lam: float
    s: float
    spacing: float
    trunc_radius: float
    variant: str
    n_levels_requested: int
    quantized: bool
    value_levels: tuple[float, ...]
    layer_stats: list[dict]
    energy: EnergyBreakdown
    energy_vs_input: EnergyBreakdown
    layered_energy_sum: float
    runtime_s: float

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "s": self.s,
            "spacing": self.spacing,
            "trunc_radius": self.trunc_radius,
            "variant": self.variant,
            "n_levels_requested": self.n_levels_requested,
            "quantized": self.quantized,
            "value_levels": list(self.value_levels),
            "layers": self.layer_stats,
            "energy": self.energy.to_dict(),
            "energy_vs_input": self.energy_vs_input.to_dict(),
            "layered_energy_sum": self.layered_energy_sum,
            "runtime_s": self.runtime_s,
        }


@dataclass
class LayeredSolution:
    """Stacked solution field with its per-threshold level sets."""

    u: ScalarField
    levels: list[tuple[float, PixelSet]]
    variant: str
    report: SolveReport


def _quantize(values: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Snap each value to the nearest level (levels sorted ascending)."""
    idx = np.searchsorted(levels, values)
    idx = np.clip(idx, 1, len(levels) - 1)
    lower = levels[idx - 1]
    upper = levels[idx]
    return np.where(values - lower <= upper - values, lower, upper)


def _solve_layers(
    f_work: ScalarField,
    lam: float,
    kernel: Kernel,
    levels: np.ndarray,
    gap_backgrounds: list[bool],
    variant: str,
) -> tuple[ScalarField, list[tuple[float, PixelSet]], list[dict], float]:
    """Solve one geometric problem per value gap and stack the results."""
    domain = f_work.domain
    st = _structure_for(kernel, domain, None)
    scale = pick_scale(kernel, domain, lam, st.small)
    if any(b2 > b1 for b1, b2 in zip(gap_backgrounds, gap_backgrounds[1:])):
        raise ValueError("gap backgrounds must be nonincreasing")

    rank = np.zeros(domain.shape, dtype=np.int64)
    levels_out: list[tuple[float, PixelSet]] = []
    stats: list[dict] = []
    layered_sum = 0.0
    prev: PixelSet | None = None
    for lo, hi, bg in zip(levels[:-1], levels[1:], gap_backgrounds):
        mid = 0.5 * (lo + hi)
        datum = PixelSet(domain, f_work.values > mid, bg)
        sol = solve_cut(build_cut_problem(datum, lam, kernel, scale=scale))
        chosen = sol.minimal_set if variant == "minimal" else sol.maximal_set
        if prev is not None:
            nested = np.all(prev.interior_mask | ~chosen.interior_mask) and (
                prev.background or not chosen.background
            )
            if not nested:
                raise RuntimeError(
                    "layer nesting violated; this indicates a tie-breaking bug"
                )
        prev = chosen
        rank += chosen.interior_mask
        layer_energy = geometric_energy(chosen, datum, lam, kernel).total
        layered_sum += (hi - lo) * layer_energy
        levels_out.append((float(mid), chosen))
        stats.append(
            {
                "threshold": float(mid),
                "background": bg,
                "datum_cells": datum.cell_count,
                "solution_cells": chosen.cell_count,
                "optimal_value": sol.optimal_value,
                "layer_energy": layer_energy,
                "tie": not sol.unique,
                "backend": sol.flow_stats.get("backend"),
            }
        )
    u = ScalarField(domain, levels[rank])
    return u, levels_out, stats, layered_sum


def solve_functional(
    f: ScalarField,
    lam: float,
    kernel: Kernel,
    n_levels: int = 64,
    variant: str = "minimal",
) -> LayeredSolution:
    """Solve the denoising model exactly on the quantized value range.

    The datum is kept at its own distinct values when there are at most
    ``n_levels`` of them, otherwise snapped to ``n_levels`` uniform
    levels.  The result takes values among those levels (plus 0) and no
    other field with the same quantization has lower energy.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if n_levels < 1:
        raise ValueError("n_levels must be at least 1")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    kernel.compatible_domain(f.domain)
    t0 = time.perf_counter()

    distinct = np.unique(f.values)
    if len(distinct) > n_levels:
        levels = np.linspace(distinct[0], distinct[-1], n_levels)
        f_work = ScalarField(f.domain, _quantize(f.values, levels))
        quantized = True
    else:
        f_work = f
        quantized = False
    levels = value_levels(f_work.values)
    gap_bgs = [0.5 * (lo + hi) < 0 for lo, hi in zip(levels[:-1], levels[1:])]

    u, levels_out, stats, layered_sum = _solve_layers(
        f_work, lam, kernel, levels, gap_bgs, variant
    )
    report = SolveReport(
        lam=lam,
        s=kernel.s,
        spacing=kernel.spacing,
        trunc_radius=kernel.trunc_radius,
        variant=variant,
        n_levels_requested=n_levels,
        quantized=quantized,
        value_levels=tuple(float(v) for v in levels),
        layer_stats=stats,
        energy=functional_energy(u, f_work, lam, kernel),
        energy_vs_input=functional_energy(u, f, lam, kernel),
        layered_energy_sum=layered_sum,
        runtime_s=time.perf_counter() - t0,
    )
    return LayeredSolution(u, levels_out, variant, report)


@dataclass(frozen=True)
class IdentityCheck:
    """Outcome of one re-solve identity: largest per-cell deviation."""

    name: str
    max_abs_dev: float

    @property
    def exact(self) -> bool:
        return self.max_abs_dev == 0.0


def _opposite(variant: str) -> str:
    return "maximal" if variant == "minimal" else "minimal"


def truncation_checks(
    sol: LayeredSolution, f: ScalarField, c: float, kernel: Kernel | None = None
) -> list[IdentityCheck]:
    """Re-solve verification of the four solution identities.

    * translation: solving the shifted datum with thresholds mapped by
      ``+c`` (backgrounds carried over) reproduces ``u + c`` per cell;
    * contrast: solving ``|c| * f`` reproduces ``|c| * u``;
    * sign parts: the positive part of ``u`` solves the positive part
      of ``f`` (and the negative part with the opposite variant);
    * truncation: solving ``min(f, |c|)`` reproduces ``min(u, |c|)``
      and solving ``max(f, -|c|)`` reproduces ``max(u, -|c|)``.

    Truncation from above uses a positive cutoff and truncation from
    below a negative one so the truncated data keep vanishing exterior.
    """
    lam, variant = sol.report.lam, sol.variant
    domain = f.domain
    distinct = np.unique(f.values)
    if sol.report.quantized:
        raise ValueError("identity checks need an unquantized solve (n_levels >= distinct values)")
    if kernel is None:
        kernel = build_kernel(domain, sol.report.s, sol.report.trunc_radius)
    levels = np.array(sol.report.value_levels)
    gap_bgs = [0.5 * (lo + hi) < 0 for lo, hi in zip(levels[:-1], levels[1:])]
    checks = []

    # translation with mapped thresholds
    shifted = ScalarField(domain, f.values + c)
    u_shift, _, _, _ = _solve_layers(shifted, lam, kernel, levels + c, gap_bgs, variant)
    checks.append(
        IdentityCheck("translation", float(np.max(np.abs(u_shift.values - (sol.u.values + c))) if domain.num_cells else 0.0))
    )

    # contrast invariance (positive scaling)
    scale_c = abs(c) if c != 0 else 1.0
    u_scaled = solve_functional(
        ScalarField(domain, scale_c * f.values), lam, kernel, n_levels=max(64, len(distinct) + 1), variant=variant
    ).u
    checks.append(
        IdentityCheck("contrast", float(np.max(np.abs(u_scaled.values - scale_c * sol.u.values))))
    )

    # sign parts
    n_lv = max(64, len(distinct) + 1)
    u_pos = solve_functional(ScalarField(domain, np.maximum(f.values, 0.0)), lam, kernel, n_lv, variant).u
    checks.append(IdentityCheck("positive_part", float(np.max(np.abs(u_pos.values - np.maximum(sol.u.values, 0.0))))))
    u_neg = solve_functional(ScalarField(domain, np.maximum(-f.values, 0.0)), lam, kernel, n_lv, _opposite(variant)).u
    checks.append(IdentityCheck("negative_part", float(np.max(np.abs(u_neg.values - np.maximum(-sol.u.values, 0.0))))))

    # truncations that keep the exterior at zero
    hi_cut = abs(c)
    u_hi = solve_functional(ScalarField(domain, np.minimum(f.values, hi_cut)), lam, kernel, n_lv, variant).u
    checks.append(IdentityCheck("truncate_above", float(np.max(np.abs(u_hi.values - np.minimum(sol.u.values, hi_cut))))))
    lo_cut = -abs(c)
    u_lo = solve_functional(ScalarField(domain, np.maximum(f.values, lo_cut)), lam, kernel, n_lv, variant).u
    checks.append(IdentityCheck("truncate_below", float(np.max(np.abs(u_lo.values - np.maximum(sol.u.values, lo_cut))))))
    return checks


@dataclass
class CheegerResult:
    """Ratio minimizer over subsets: constant, achieving set, iteration count."""

    constant: float
    cheeger_set: PixelSet
    iterations: int
    calibrable: bool

    def to_dict(self) -> dict:
        return {
            "constant": self.constant,
            "cheeger_cells": self.cheeger_set.cell_count,
            "iterations": self.iterations,
            "calibrable": self.calibrable,
        }


def cheeger(e: PixelSet, kernel: Kernel, tol: float = 1e-12) -> CheegerResult:
    """Dinkelbach iteration for ``min P(U)/|U|`` over subsets of ``e``.

    Each inner problem ``min P(U) - lam |U|`` is a min-cut restricted to
    the cells of ``e``; the maximal optimizer feeds the next ratio.
    Iterates decrease strictly and terminate at the exact discrete
    optimum (the inner minimum reaching ``[-tol, 0]``).
    """
    if e.background:
        raise ValueError("cheeger needs a finite set")
    if e.cell_count == 0:
        raise ValueError("cheeger needs a nonempty set")
    if not tol > 0:
        raise ValueError("tol must be positive")
    kernel.compatible_domain(e.domain)
    domain = e.domain
    st = _structure_for(kernel, domain, e.interior_mask)
    p_e = frac_perimeter(e, kernel)
    lam0 = p_e / measure(e)
    scale = pick_scale(kernel, domain, lam0, st.small)
    quant = st.quantized(scale)
    base = quant.ext_int + quant.fence_int

    def subset(local_mask: np.ndarray) -> PixelSet:
        grid = np.zeros(domain.num_cells, dtype=bool)
        grid[st.cells] = local_mask
        return PixelSet(domain, grid.reshape(domain.shape), False)

    lam_k = lam0
    best_set = e
    best_ratio = lam0
    iterations = 0
    for _ in range(60):
        iterations += 1
        lam_int = quant.lam_int(lam_k)
        u1 = base - lam_int
        shift = np.minimum(u1, 0)
        res = quant.solve(-shift, u1 - shift)
        inner = (res.flow_int + int(shift.sum())) / scale
        cand = res.maximal
        if cand.any():
            cand_set = subset(cand)
            ratio = frac_perimeter(cand_set, kernel) / measure(cand_set)
            if ratio < best_ratio:
                best_ratio, best_set = ratio, cand_set
        if inner >= -tol or not cand.any():
            break
        if not best_ratio < lam_k * (1.0 - 1e-15):
            break
        lam_k = best_ratio
    calibrable = abs(lam0 - best_ratio) <= 1e-9 * (1.0 + best_ratio)
    return CheegerResult(best_ratio, best_set, iterations, calibrable)


def zero_threshold(e: PixelSet, kernel: Kernel, tol: float = 1e-12) -> float:
    """Largest fidelity weight at which the empty set stays optimal.

    Dinkelbach on ``min P(U) / (|E| - |E symmdiff U|)`` over sets with
    positive mass gain; below the returned value the empty set is the
    unique optimum of the geometric problem with datum ``e``.
    """
    if e.background:
        raise ValueError("zero_threshold needs a finite datum")
    if e.cell_count == 0:
        return math.inf
    kernel.compatible_domain(e.domain)
    domain = e.domain
    st = _structure_for(kernel, domain, None)
    lam_k = frac_perimeter(e, kernel) / measure(e)
    scale = pick_scale(kernel, domain, lam_k, st.small)
    h_d = domain.cell_volume
    e_count = e.cell_count
    for _ in range(60):
        problem = build_cut_problem(e, lam_k, kernel, scale=scale)
        sol = solve_cut(problem)
        lam_int = problem._quant.lam_int(lam_k)
        inner = (sol.flow_stats["flow_int"] - lam_int * e_count) / scale
        m = sol.maximal_set
        gain = (2 * np.count_nonzero(m.interior_mask & e.interior_mask) - m.cell_count) * h_d
        if inner >= -tol or m.cell_count == 0 or gain <= 0:
            break
        ratio = frac_perimeter(m, kernel) / gain
        if not ratio < lam_k * (1.0 - 1e-15):
            break
        lam_k = ratio
    return lam_k


def low_fidelity_certificate(f: ScalarField, kernel: Kernel) -> float:
    """Instance certificate: below it the zero field is the unique solution.

    Minimum of the empty-set thresholds over the level data of both
    sign parts of ``f``; ``inf`` for the zero field.
    """
    kernel.compatible_domain(f.domain)
    best = math.inf
    for part in (np.maximum(f.values, 0.0), np.maximum(-f.values, 0.0)):
        if not part.any():
            continue
        levels = value_levels(part)
        g = ScalarField(f.domain, part)
        for lo, hi in zip(levels[:-1], levels[1:]):
            mid = 0.5 * (lo + hi)
            if mid <= 0:
                continue
            datum = level_set(g, mid, strict=True)
            if datum.cell_count == 0:
                continue
            best = min(best, zero_threshold(datum, kernel))
    return best


@lru_cache(maxsize=32)
def ball_perimeter_constant(dim: int, s: float, reference_cells: int = 64) -> float:
    """Perimeter of the unit ball: analytic in 1D, discrete reference in 2D.

    In 1D the unit ball is the interval (-1, 1), with perimeter
    ``2 * 2^(1-s) / (s (1-s))``.  In 2D the constant is the perimeter of
    a rasterized unit disk at the reference resolution, cached per
    ``(dim, s)``.
    """
    if dim == 1:
        return 2.0 * 2.0 ** (1.0 - s) / (s * (1.0 - s))
    n = 2 * reference_cells + 1
    h = 1.0 / reference_cells
    domain = GridDomain((n, n), h, origin=(-1.0, -1.0))
    kern = build_kernel(domain, s)
    return frac_perimeter(make_disk(domain, 1.0), kern)


def make_disk(domain: GridDomain, radius: float, center: tuple[float, ...] | None = None) -> PixelSet:
    """Cells whose centers lie within ``radius`` of ``center`` (window middle by default)."""
    centers = domain.cell_centers()
    if center is None:
        center = tuple(
            domain.origin[a] + domain.spacing * (domain.shape[a] - 1) / 2.0
            for a in range(domain.dim)
        )
    d2 = np.zeros(domain.shape)
    for a in range(domain.dim):
        d2 += (centers[..., a] - center[a]) ** 2
    return PixelSet(domain, d2 <= radius * radius * (1 + 1e-12), False)


def make_rectangle(domain: GridDomain, lo: tuple[int, ...], hi: tuple[int, ...]) -> PixelSet:
    """Axis-aligned block of cells with index corners ``lo`` (incl.) and ``hi`` (excl.)."""
    mask = np.zeros(domain.shape, dtype=bool)
    mask[tuple(slice(a, b) for a, b in zip(lo, hi))] = True
    return PixelSet(domain, mask, False)


def is_discrete_convex(e: PixelSet) -> bool:
    """True when ``e`` equals the rasterization of the hull of its cell centers.

    Exact integer test: a cell belongs to the hull of the member cell
    centers iff it is on the inner side of every hull edge (1D: the
    member cells form one contiguous run).
    """
    if e.background or e.cell_count == 0:
        return False
    if e.domain.dim == 1:
        idx = np.flatnonzero(e.interior_mask)
        return len(idx) == idx[-1] - idx[0] + 1
    pts = np.argwhere(e.interior_mask).astype(np.int64)
    hull = _convex_hull(pts)
    grid = np.argwhere(np.ones(e.domain.shape, dtype=bool)).astype(np.int64)
    inside = _points_in_hull(grid, hull).reshape(e.domain.shape)
    return bool(np.array_equal(inside, e.interior_mask))


def _convex_hull(pts: np.ndarray) -> np.ndarray:
    """Monotone-chain hull of integer points, counterclockwise."""
    pts = np.unique(pts, axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(points):
        out = []
        for p in points:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1], dtype=np.int64)


def _cross(o, a, b) -> int:
    return int((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def _points_in_hull(points: np.ndarray, hull: np.ndarray) -> np.ndarray:
    if len(hull) == 1:
        return np.all(points == hull[0], axis=1)
    if len(hull) == 2:
        a, b = hull[0], hull[1]
        d = b - a
        rel = points - a
        on_line = rel[:, 0] * d[1] - rel[:, 1] * d[0] == 0
        t = rel[:, 0] * d[0] + rel[:, 1] * d[1]
        return on_line & (t >= 0) & (t <= d[0] * d[0] + d[1] * d[1])
    inside = np.ones(len(points), dtype=bool)
    for a, b in zip(hull, np.roll(hull, -1, axis=0)):
        cross = (b[0] - a[0]) * (points[:, 1] - a[1]) - (b[1] - a[1]) * (points[:, 0] - a[0])
        inside &= cross >= 0
    return inside


@dataclass
class TrichotomyReport:
    """Below/at/above classification of a convex datum along a lambda list."""

    h_s: float
    calibrable: bool
    cheeger_cells: int
    rows: list[dict]
    violations: list[str]

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "h_s": self.h_s,
            "calibrable": self.calibrable,
            "cheeger_cells": self.cheeger_cells,
            "rows": self.rows,
            "violations": self.violations,
            "passed": self.passed,
        }


def trichotomy(e: PixelSet, kernel: Kernel, lambdas) -> TrichotomyReport:
    """Classify the geometric problem with convex datum across fidelity weights.

    Below the ratio constant the empty set must be the unique optimum;
    above it, a calibrable datum must be recovered exactly (and the
    empty set must stop being optimal regardless); within the tie band
    the bracket of co-optimal sets is reported without any uniqueness
    claim.  All solutions must stay inside the datum.
    """
    if not is_discrete_convex(e):
        raise ValueError("trichotomy needs a discrete-convex datum (rectangle or disk)")
    lambdas = [float(l) for l in lambdas]
    if any(l <= 0 for l in lambdas):
        raise ValueError("lambdas must be positive")
    ch = cheeger(e, kernel)
    h_s = ch.constant
    st = _structure_for(kernel, e.domain, None)
    scale = pick_scale(kernel, e.domain, max(lambdas + [h_s]), st.small)
    band = 1e-9 * (1.0 + h_s)
    rows, violations = [], []
    for lam in lambdas:
        sol = solve_cut(build_cut_problem(e, lam, kernel, scale=scale))
        mn, mx = sol.minimal_set, sol.maximal_set
        contained = bool(np.all(e.interior_mask | ~mx.interior_mask))
        if not contained:
            violations.append(f"lam={lam}: maximal solution leaves the datum")
        if lam < h_s - band:
            regime = "below"
            if mx.cell_count != 0:
                violations.append(f"lam={lam}: expected unique empty optimum below the constant")
        elif lam <= h_s + band:
            regime = "at"
        else:
            regime = "above"
            if ch.calibrable:
                if not (mn == e and mx == e):
                    violations.append(f"lam={lam}: calibrable datum not recovered above the constant")
            elif mn.cell_count == 0:
                violations.append(f"lam={lam}: empty set still optimal above the constant")
        rows.append(
            {
                "lambda": lam,
                "regime": regime,
                "minimal_cells": mn.cell_count,
                "maximal_cells": mx.cell_count,
                "equals_datum": bool(mn == e and mx == e),
                "contained_in_datum": contained,
                "optimal_value": sol.optimal_value,
            }
        )
    return TrichotomyReport(h_s, ch.calibrable, ch.cheeger_set.cell_count, rows, violations)


def high_fidelity_threshold(e: PixelSet, kernel: Kernel, r0: float, validate: bool = False) -> float:
    """Fidelity weight above which a ball-regular datum is recovered exactly.

    ``r0`` is the ball radius with which the datum and its complement
    can be swept (caller-asserted; ``validate=True`` runs a discrete
    morphological opening/closing check instead of trusting the caller).
    The constant is the cached unit-ball perimeter, so the threshold is
    ``c / (omega_dim * r0^s)`` and scales like ``r0^(-s)``.
    """
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    if validate and not _ball_regular(e, r0):
        raise ValueError(f"set is not a union of radius-{r0} balls (opening/closing check)")
    c = ball_perimeter_constant(e.domain.dim, kernel.s)
    return c / (unit_ball_volume(e.domain.dim) * r0**kernel.s)


def _ball_regular(e: PixelSet, r0: float) -> bool:
    from scipy.ndimage import binary_closing, binary_opening

    h = e.domain.spacing
    r_cells = max(1, int(round(r0 / h)))
    if e.domain.dim == 1:
        elem = np.ones(2 * r_cells + 1, dtype=bool)
    else:
        yy, xx = np.mgrid[-r_cells : r_cells + 1, -r_cells : r_cells + 1]
        elem = yy * yy + xx * xx <= r_cells * r_cells
    mask = e.interior_mask
    return bool(
        np.array_equal(binary_opening(mask, elem), mask)
        and np.array_equal(binary_closing(mask, elem), mask)
    )
