"""Orchestrated verification suite.

Each check exercises one verified claim of the discrete model --
perimeter identities, min-cut exactness against exhaustive enumeration,
monotonicity of solutions, threshold behavior for convex data -- on
deterministic random instances, and yields one report with the worst
residual observed.  A nonzero failure count anywhere makes the whole
suite fail.

The enumeration oracles here are built directly from the kernel table
and the public energy evaluators; they never touch the min-cut
pipeline they audit.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from . import __version__
from .energy import (
    _half_offsets,
    _shift_views,
    coarea_decompose,
    exterior_exposure,
    frac_perimeter,
    frac_total_variation,
    functional_energy,
    geometric_energy,
)
from .grid import GridDomain, PixelSet, ScalarField, level_set, measure, set_algebra
from .kernel import Kernel, build_kernel
from .mincut import build_cut_problem, parametric_sweep, solve_cut
from .netpbm import write_pbm
from .solvers import (
    cheeger,
    high_fidelity_threshold,
    low_fidelity_certificate,
    make_disk,
    make_rectangle,
    solve_functional,
    trichotomy,
    truncation_checks,
)

__all__ = ["VerifyConfig", "TheoremReport", "run_suite", "CHECKS"]


@dataclass
class VerifyConfig:
    """Deterministic configuration of the verification suite."""

    seed: int = 7
    s_values: tuple[float, ...] = (0.3, 0.5, 0.7)
    resolutions: tuple[int, ...] = (128, 256, 512)
    window_cells: int = 24
    out_dir: str | None = None
    tolerances: dict = dc_field(default_factory=dict)
    instances: dict = dc_field(default_factory=dict)

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def count(self, name: str, default: int) -> int:
        return int(self.instances.get(name, default))

    def build_id(self) -> str:
        digest = hashlib.sha1(repr(self).encode()).hexdigest()[:8]
        return f"fractv-{__version__}+cfg.{digest}"


@dataclass
class TheoremReport:
    """Outcome of one verified claim."""

    anchor: str
    instances: int
    failures: int
    worst_residual: float
    runtime_s: float
    details: dict = dc_field(default_factory=dict)
    artifacts: list = dc_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor,
            "instances": self.instances,
            "failures": self.failures,
            "worst_residual": self.worst_residual,
            "runtime_s": self.runtime_s,
            "passed": self.passed,
            "details": self.details,
        }


# ---------------------------------------------------------------------------
# enumeration oracles (kernel table + energy evaluators only)


def _pair_arrays(kernel: Kernel, domain: GridDomain):
    idx = np.arange(domain.num_cells).reshape(domain.shape)
    pu, pv, w = [], [], []
    for off, wt in _half_offsets(kernel, domain.shape):
        a, b = _shift_views(idx, off)
        pu.append(a.ravel())
        pv.append(b.ravel())
        w.append(np.full(a.size, wt))
    if pu:
        return np.concatenate(pu), np.concatenate(pv), np.concatenate(w)
    return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)


def _all_masks(n: int) -> np.ndarray:
    return ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(bool)


def enumerate_geometric(e: PixelSet, lam: float, kernel: Kernel, rtol: float = 1e-9):
    """Exhaustive optimum of the geometric energy over all window labelings.

    Returns (best value, intersection, union) of the argmin family
    within relative tie tolerance ``rtol``.
    """
    domain = e.domain
    n = domain.num_cells
    if n > 16:
        raise ValueError("enumeration limited to 16 cells")
    masks = _all_masks(n)
    pu, pv, w = _pair_arrays(kernel, domain)
    ext = exterior_exposure(kernel, domain).ravel()
    per = (masks[:, pu] != masks[:, pv]) @ w if len(pu) else np.zeros(len(masks))
    per = per + ((~masks) if e.background else masks) @ ext
    fid = (masks != e.interior_mask.ravel()).sum(axis=1) * domain.cell_volume
    tot = per + lam * fid
    best = float(tot.min())
    fam = masks[tot <= best + rtol * (1.0 + abs(best))]
    return best, np.logical_and.reduce(fam, 0), np.logical_or.reduce(fam, 0)


def enumerate_cheeger(e: PixelSet, kernel: Kernel):
    """Exhaustive minimum of P(U)/|U| over nonempty subsets of ``e``."""
    domain = e.domain
    cells = np.flatnonzero(e.interior_mask.ravel())
    k = len(cells)
    if k > 14:
        raise ValueError("enumeration limited to 14 member cells")
    sub = _all_masks(k)[1:]
    masks = np.zeros((len(sub), domain.num_cells), dtype=bool)
    masks[:, cells] = sub
    pu, pv, w = _pair_arrays(kernel, domain)
    ext = exterior_exposure(kernel, domain).ravel()
    per = (masks[:, pu] != masks[:, pv]) @ w if len(pu) else np.zeros(len(masks))
    per = per + masks @ ext
    ratio = per / (sub.sum(axis=1) * domain.cell_volume)
    i = int(np.argmin(ratio))
    return float(ratio[i]), masks[i].reshape(domain.shape)


def enumerate_layered(f: ScalarField, lam: float, kernel: Kernel):
    """Exhaustive minimum energy over fields quantized to the datum's values."""
    domain = f.domain
    n = domain.num_cells
    levels = np.unique(np.concatenate([f.values.ravel(), [0.0]]))
    k = len(levels)
    if k**n > 600_000:
        raise ValueError("layered enumeration too large")
    digits = np.indices((k,) * n).reshape(n, -1).T
    fields = levels[digits]
    pu, pv, w = _pair_arrays(kernel, domain)
    ext = exterior_exposure(kernel, domain).ravel()
    tv = np.abs(fields[:, pu] - fields[:, pv]) @ w if len(pu) else np.zeros(len(fields))
    tv = tv + np.abs(fields) @ ext
    fid = np.abs(fields - f.values.ravel()).sum(axis=1) * domain.cell_volume
    tot = tv + lam * fid
    return float(tot.min())


# ---------------------------------------------------------------------------
# individual checks


def _report(anchor, t0, instances, failures, worst, **details) -> TheoremReport:
    return TheoremReport(anchor, instances, failures, float(worst), time.perf_counter() - t0, details)


def check_interval_analytic(cfg: VerifyConfig, rng) -> TheoremReport:
    """1D unit interval perimeter converges to 2/(s(1-s))."""
    t0 = time.perf_counter()
    s = 0.5
    worst, failures, inst = 0.0, 0, 0
    finest = max(cfg.resolutions)
    errs = []
    for n in cfg.resolutions:
        domain = GridDomain((n,), 1.0 / n)
        kern = build_kernel(domain, s)
        p = frac_perimeter(PixelSet(domain, np.ones(n, bool)), kern)
        exact = 2.0 / (s * (1 - s))
        rel = abs(p - exact) / exact
        errs.append(rel)
        inst += 1
        worst = max(worst, rel)
        if n == finest and rel > cfg.tol("interval_analytic", 0.02):
            failures += 1
    if errs != sorted(errs, reverse=True):
        failures += 1
    return _report("interval_analytic_perimeter", t0, inst, failures, worst, s=s)


def check_kernel_quadrature(cfg: VerifyConfig, rng) -> TheoremReport:
    """Offset sums converge to the radial kernel integral under refinement."""
    t0 = time.perf_counter()
    failures, worst, inst = 0, 0.0, 0
    for dim in (1, 2):
        for s in cfg.s_values:
            a, rho = 0.25, 1.0
            sphere = 2.0 if dim == 1 else 2 * math.pi
            exact = quad(lambda r: sphere * r ** (dim - 1) * r ** (-(dim + s)), a, rho)[0]
            rels = []
            for cells in [max(32, r // 2) for r in cfg.resolutions]:
                h = 1.0 / cells
                domain = GridDomain((8,) * dim, h)
                kern = build_kernel(domain, s, trunc_radius=rho)
                r_idx = np.arange(-kern.radius_cells, kern.radius_cells + 1)
                grids = np.meshgrid(*([r_idx] * dim), indexing="ij")
                dist = np.sqrt(sum(g.astype(float) ** 2 for g in grids)) * h
                sel = (dist >= a) & (dist <= rho * (1 + 1e-12))
                approx = float((kern.table[sel] / h**dim).sum())
                rels.append(abs(approx - exact) / exact)
            inst += 1
            worst = max(worst, rels[-1])
            if not (rels[-1] <= rels[0] + 1e-12 and rels[-1] < 0.02):
                failures += 1
    return _report("kernel_quadrature_refinement", t0, inst, failures, worst)


def check_scaling_law(cfg: VerifyConfig, rng) -> TheoremReport:
    """log P(lam E) vs log lam has slope dim - s.

    The quadrature bias of the lattice perimeter decays like
    ``h^(1-s)``, so the grid is refined with growing ``s`` to keep the
    slope band meaningful.
    """
    t0 = time.perf_counter()
    failures, worst, inst = 0, 0.0, 0
    lams = np.array([1.0, 2.0, 3.0, 4.0])
    for dim in (1, 2):
        for s in cfg.s_values:
            if dim == 1:
                n, base = (256, 0.06) if s <= 0.5 else (512, 0.1)
            else:
                n, base = (128, 0.07) if s <= 0.35 else ((192, 0.09) if s <= 0.55 else (512, 0.11))
            domain = GridDomain((n,) * dim, 1.0 / n)
            kern = build_kernel(domain, s)
            ps = [frac_perimeter(make_disk(domain, base * lam), kern) for lam in lams]
            slope = float(np.polyfit(np.log(lams), np.log(ps), 1)[0])
            resid = abs(slope - (dim - s))
            inst += 1
            worst = max(worst, resid)
            if resid > cfg.tol("scaling_slope", 0.05):
                failures += 1
    return _report("perimeter_scaling_law", t0, inst, failures, worst)


def _random_set(rng, domain, density=0.5, background_frac=0.0) -> PixelSet:
    bg = bool(rng.random() < background_frac)
    return PixelSet(domain, rng.random(domain.shape) < density, bg)


def check_submodularity(cfg: VerifyConfig, rng) -> TheoremReport:
    """P(E int F) + P(E un F) <= P(E) + P(F)."""
    t0 = time.perf_counter()
    failures, worst, inst = 0, 0.0, 0
    count = cfg.count("submodularity", 200)
    for dim in (1, 2):
        domain = GridDomain((36,) if dim == 1 else (8, 8), 1.0)
        for _ in range(count):
            s = float(rng.uniform(0.15, 0.9))
            kern = build_kernel(domain, s)
            e, f = _random_set(rng, domain), _random_set(rng, domain)
            lhs = frac_perimeter(set_algebra(e, f, "intersection"), kern) + frac_perimeter(
                set_algebra(e, f, "union"), kern
            )
            rhs = frac_perimeter(e, kern) + frac_perimeter(f, kern)
            viol = (lhs - rhs) / (1.0 + rhs)
            inst += 1
            worst = max(worst, viol)
            if viol > 1e-12:
                failures += 1
    return _report("perimeter_submodularity", t0, inst, failures, worst)


def check_complement_invariance(cfg: VerifyConfig, rng) -> TheoremReport:
    """P(E) == P(complement E) to 1e-12 relative."""
    t0 = time.perf_counter()
    failures, worst, inst = 0, 0.0, 0
    for dim in (1, 2):
        domain = GridDomain((40,) if dim == 1 else (9, 7), 1.0)
        for _ in range(cfg.count("complement_invariance", 200)):
            kern = build_kernel(domain, float(rng.uniform(0.1, 0.95)))
            e = _random_set(rng, domain, background_frac=0.5)
            p, pc = frac_perimeter(e, kern), frac_perimeter(e.complement(), kern)
            rel = abs(p - pc) / (1.0 + p)
            inst += 1
            worst = max(worst, rel)
            if rel > 1e-12:
                failures += 1
    return _report("perimeter_complement_invariance", t0, inst, failures, worst)


def check_convex_truncation(cfg: VerifyConfig, rng) -> TheoremReport:
    """P(E int K) <= P(E) for axis-aligned rectangles K and finite E."""
    t0 = time.perf_counter()
    failures, worst, inst = 0, 0.0, 0
    for dim in (1, 2):
        domain = GridDomain((32,) if dim == 1 else (8, 8), 0.5)
        for _ in range(cfg.count("convex_truncation", 100)):
            kern = build_kernel(domain, float(rng.uniform(0.2, 0.9)))
            e = _random_set(rng, domain)
            lo = [int(rng.integers(0, n // 2)) for n in domain.shape]
            hi = [int(rng.integers(n // 2, n + 1)) for n in domain.shape]
            k = make_rectangle(domain, tuple(lo), tuple(hi))
            viol = (frac_perimeter(set_algebra(e, k, "intersection"), kern) - frac_perimeter(e, kern)) / (
                1.0 + frac_perimeter(e, kern)
            )
            inst += 1
            worst = max(worst, viol)
            if viol > 1e-12:
                failures += 1
    return _report("convex_truncation_monotone", t0, inst, failures, worst)


def check_coarea(cfg: VerifyConfig, rng) -> TheoremReport:
    """Layer-cake reconstruction equals the total variation exactly."""
    t0 = time.perf_counter()
    failures, worst, inst = 0, 0.0, 0
    for dim in (1, 2):
        domain = GridDomain((48,) if dim == 1 else (10, 9), 1.0)
        for _ in range(cfg.count("coarea", 50)):
            kern = build_kernel(domain, float(rng.uniform(0.1, 0.95)))
            levels = rng.normal(size=int(rng.integers(2, 7)))
            u = ScalarField(domain, rng.choice(levels, domain.shape))
            tv = frac_total_variation(u, kern)
            rec = coarea_decompose(u, kern).reconstruction
            rel = abs(tv - rec) / (1.0 + tv)
            inst += 1
            worst = max(worst, rel)
            if rel > cfg.tol("coarea", 1e-10):
                failures += 1
    return _report("coarea_identity", t0, inst, failures, worst)


def check_homogeneity(cfg: VerifyConfig, rng) -> TheoremReport:
    """sTV(c u) == |c| sTV(u) and sTV(indicator) == perimeter."""
    t0 = time.perf_counter()
    failures, worst, inst = 0, 0.0, 0
    domain = GridDomain((7, 6), 1.0)
    for _ in range(cfg.count("homogeneity", 50)):
        kern = build_kernel(domain, float(rng.uniform(0.1, 0.95)))
        u = ScalarField(domain, rng.normal(size=domain.shape))
        c = float(rng.uniform(-4, 4))
        a = frac_total_variation(ScalarField(domain, c * u.values), kern)
        b = abs(c) * frac_total_variation(u, kern)
        rel = abs(a - b) / (1.0 + b)
        e = _random_set(rng, domain)
        ind = abs(
            frac_total_variation(ScalarField.indicator(e), kern) - frac_perimeter(e, kern)
        ) / (1.0 + frac_perimeter(e, kern))
        inst += 1
        worst = max(worst, max(rel, ind))
        if rel > 1e-12 or ind > 1e-12:
            failures += 1
    return _report("tv_homogeneity_indicator", t0, inst, failures, worst)


def check_mincut_oracle(cfg: VerifyConfig, rng) -> TheoremReport:
    """Cut optimum and extreme argmins match exhaustive enumeration."""
    t0 = time.perf_counter()
    failures, worst, inst = 0, 0.0, 0
    for _ in range(cfg.count("mincut_oracle", 60)):
        dim = int(rng.integers(1, 3))
        domain = GridDomain((int(rng.integers(4, 13)),) if dim == 1 else (3, int(rng.integers(2, 5))), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.15, 0.9)))
        e = _random_set(rng, domain, background_frac=0.25)
        lam = float(rng.uniform(0.05, 4.0))
        sol = solve_cut(build_cut_problem(e, lam, kern))
        best, lo, hi = enumerate_geometric(e, lam, kern)
        rel = abs(sol.optimal_value - best) / (1.0 + abs(best))
        ok_sets = np.array_equal(sol.minimal_set.interior_mask.ravel(), lo) and np.array_equal(
            sol.maximal_set.interior_mask.ravel(), hi
        )
        inst += 1
        worst = max(worst, rel)
        if rel > cfg.tol("mincut_value", 1e-9) or not ok_sets:
            failures += 1
    return _report("mincut_enumeration_exactness", t0, inst, failures, worst)


def check_lattice(cfg: VerifyConfig, rng) -> TheoremReport:
    """Optima form a lattice and the solver brackets constructed ties."""
    t0 = time.perf_counter()
    failures = 0

    # exact integer tie: one cell at lam*h == its full kernel mass
    domain1 = GridDomain((1,), 0.5)
    kern1 = build_kernel(domain1, 0.5)
    lam_tie = float(exterior_exposure(kern1, domain1)[0]) / domain1.cell_volume
    sol = solve_cut(build_cut_problem(PixelSet(domain1, np.ones(1, bool)), lam_tie, kern1))
    if not (sol.minimal_set.cell_count == 0 and sol.maximal_set.cell_count == 1):
        failures += 1

    # two mirror cells, lam*h = mass - pair weight: family {empty, both cells}
    domain = GridDomain((9,), 0.5)
    kern = build_kernel(domain, 0.5)
    ext = exterior_exposure(kern, domain).ravel()
    mask = np.zeros(9, bool)
    mask[1] = mask[7] = True
    e = PixelSet(domain, mask)
    lam2 = (kern.total_weight + kern.tail_per_cell - kern.weight((6,))) / domain.cell_volume
    masks = _all_masks(9)
    pu, pv, w = _pair_arrays(kern, domain)
    per = (masks[:, pu] != masks[:, pv]) @ w + masks @ ext
    tot = per + lam2 * (masks != mask).sum(1) * domain.cell_volume
    best = float(tot.min())
    fam = masks[tot <= best + 1e-9 * (1 + abs(best))]
    n_opt = len(fam)
    if n_opt < 2:
        failures += 1
    for a in fam:
        for b in fam:
            for op in (np.logical_and, np.logical_or):
                m = op(a, b)
                val = float(((m[pu] != m[pv]) @ w) + m @ ext + lam2 * (m != mask).sum() * domain.cell_volume)
                if val > best + 1e-9 * (1 + abs(best)):
                    failures += 1
    # solver extremes must sit inside the tolerance family's bracket
    sol2 = solve_cut(build_cut_problem(e, lam2, kern))
    lo = np.logical_and.reduce(fam, 0)
    hi = np.logical_or.reduce(fam, 0)
    mn, mx = sol2.minimal_set.interior_mask, sol2.maximal_set.interior_mask
    if not (np.all(mn | ~lo) and np.all(hi | ~mx)):
        failures += 1
    return _report("optima_lattice_structure", t0, 2, failures, 0.0, optima_two_cell=n_opt)


def check_comparison(cfg: VerifyConfig, rng) -> TheoremReport:
    """Nested data give nested minimal and nested maximal solutions."""
    t0 = time.perf_counter()
    failures, inst = 0, 0
    from .mincut import _structure_for, pick_scale

    for _ in range(cfg.count("comparison", 100)):
        dim = int(rng.integers(1, 3))
        domain = GridDomain((12,) if dim == 1 else (4, 4), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.2, 0.9)))
        m1 = rng.random(domain.shape) < 0.6
        m2 = m1 & (rng.random(domain.shape) < 0.6)
        lam = float(rng.uniform(0.1, 4.0))
        st = _structure_for(kern, domain, None)
        scale = pick_scale(kern, domain, lam, st.small)
        s1 = solve_cut(build_cut_problem(PixelSet(domain, m1), lam, kern, scale=scale))
        s2 = solve_cut(build_cut_problem(PixelSet(domain, m2), lam, kern, scale=scale))
        ok = np.all(s1.minimal_set.interior_mask | ~s2.minimal_set.interior_mask) and np.all(
            s1.maximal_set.interior_mask | ~s2.maximal_set.interior_mask
        )
        inst += 1
        if not ok:
            failures += 1
    return _report("comparison_nested_data", t0, inst, failures, 0.0)


def check_duality(cfg: VerifyConfig, rng) -> TheoremReport:
    """Solutions for the complement datum are the swapped complements."""
    t0 = time.perf_counter()
    failures, inst = 0, 0
    for _ in range(cfg.count("duality", 50)):
        dim = int(rng.integers(1, 3))
        domain = GridDomain((14,) if dim == 1 else (4, 5), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.2, 0.9)))
        e = _random_set(rng, domain)
        lam = float(rng.uniform(0.1, 4.0))
        s1 = solve_cut(build_cut_problem(e, lam, kern))
        s2 = solve_cut(build_cut_problem(e.complement(), lam, kern))
        ok = s2.minimal_set == s1.maximal_set.complement() and s2.maximal_set == s1.minimal_set.complement()
        inst += 1
        if not ok:
            failures += 1
    return _report("complement_datum_duality", t0, inst, failures, 0.0)


def check_distance_monotone(cfg: VerifyConfig, rng) -> TheoremReport:
    """Distance to the datum is nonincreasing along every fidelity sweep."""
    t0 = time.perf_counter()
    failures, inst = 0, 0
    for _ in range(cfg.count("distance_monotone", 20)):
        dim = int(rng.integers(1, 3))
        domain = GridDomain((16,) if dim == 1 else (5, 5), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.2, 0.9)))
        e = _random_set(rng, domain, density=0.6)
        p_ref = frac_perimeter(e, kern) / max(measure(e), domain.cell_volume)
        lams = np.linspace(0.2, 3.0, 12) * max(p_ref, 0.5)
        sweep = parametric_sweep(e, lams, kern)
        inst += 1
        if sweep.monotonicity_violations:
            failures += 1
    return _report("datum_distance_monotone", t0, inst, failures, 0.0)


def check_trichotomy(cfg: VerifyConfig, rng) -> TheoremReport:
    """Below/at/above classification for convex data (disk and rectangle)."""
    t0 = time.perf_counter()
    failures, inst = 0, 0
    artifacts = []
    n = cfg.window_cells
    domain = GridDomain((n, n), 1.0)
    kern = build_kernel(domain, 0.5)
    for e in (
        make_disk(domain, 0.3 * n - 0.1),
        make_rectangle(domain, (n // 5, n // 4), (3 * n // 4, 2 * n // 3)),
    ):
        ch = cheeger(e, kern)
        rep = trichotomy(
            e, kern, [0.5 * ch.constant, 0.95 * ch.constant, 1.05 * ch.constant, 2.0 * ch.constant]
        )
        inst += 1
        if not rep.passed:
            failures += 1
            artifacts.append((f"trichotomy_datum_{inst}", e))
    out = _report("convex_trichotomy", t0, inst, failures, 0.0)
    out.artifacts = artifacts
    return out


def check_calibrable_recovery(cfg: VerifyConfig, rng) -> TheoremReport:
    """A calibrable disk is recovered exactly just above its ratio constant."""
    t0 = time.perf_counter()
    n = cfg.window_cells
    domain = GridDomain((n, n), 1.0)
    kern = build_kernel(domain, 0.5)
    d = make_disk(domain, 0.3 * n - 0.1)
    ch = cheeger(d, kern)
    sol = solve_cut(build_cut_problem(d, 1.05 * ch.constant, kern))
    ok = ch.calibrable and sol.minimal_set == d and sol.maximal_set == d
    return _report("calibrable_disk_recovery", t0, 1, 0 if ok else 1, 0.0, calibrable=ch.calibrable)


def check_high_fidelity(cfg: VerifyConfig, rng) -> TheoremReport:
    """Ball data are unique solutions above the radius-based threshold."""
    t0 = time.perf_counter()
    failures, inst = 0, 0
    band = []
    for r_cells in (6, 10):
        n = 3 * r_cells
        domain = GridDomain((n, n), 1.0)
        kern = build_kernel(domain, 0.5)
        e = make_disk(domain, r_cells + 0.3)
        thr = high_fidelity_threshold(e, kern, float(r_cells))
        sol2 = solve_cut(build_cut_problem(e, 2.0 * thr, kern))
        inst += 1
        if not (sol2.minimal_set == e and sol2.maximal_set == e):
            failures += 1
        sol1 = solve_cut(build_cut_problem(e, 1.0 * thr, kern))
        band.append({"r": r_cells, "recovered_at_1x": bool(sol1.minimal_set == e and sol1.maximal_set == e)})
    return _report("high_fidelity_recovery", t0, inst, failures, 0.0, one_x_band=band)


def check_low_fidelity(cfg: VerifyConfig, rng) -> TheoremReport:
    """Below the instance certificate the solution is identically zero."""
    t0 = time.perf_counter()
    failures, inst, worst = 0, 0, 0.0
    for _ in range(cfg.count("low_fidelity", 10)):
        dim = int(rng.integers(1, 3))
        domain = GridDomain((12,) if dim == 1 else (5, 4), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.25, 0.85)))
        f = ScalarField(domain, rng.choice([0.0, 0.5, 1.0, -0.7], domain.shape))
        cert = low_fidelity_certificate(f, kern)
        inst += 1
        if math.isinf(cert):
            continue
        sol = solve_functional(f, 0.9 * cert, kern)
        if np.any(sol.u.values != 0.0):
            failures += 1
    # convex binary datum: certificate equals the ratio constant
    domain = GridDomain((9, 9), 1.0)
    kern = build_kernel(domain, 0.5)
    r = make_rectangle(domain, (2, 2), (7, 6))
    cert = low_fidelity_certificate(ScalarField.indicator(r), kern)
    h = cheeger(r, kern).constant
    rel = abs(cert - h) / h
    worst = max(worst, rel)
    inst += 1
    if rel > cfg.tol("certificate_vs_cheeger", 1e-9):
        failures += 1
    return _report("low_fidelity_zero_solution", t0, inst, failures, worst)


def check_cheeger_oracle(cfg: VerifyConfig, rng) -> TheoremReport:
    """Dinkelbach ratio equals the exhaustive subset minimum."""
    t0 = time.perf_counter()
    failures, inst, worst = 0, 0, 0.0
    for _ in range(cfg.count("cheeger_oracle", 40)):
        dim = int(rng.integers(1, 3))
        domain = GridDomain((12,) if dim == 1 else (4, 4), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.2, 0.9)))
        mask = rng.random(domain.shape) < 0.6
        if mask.sum() == 0 or mask.sum() > 12:
            continue
        e = PixelSet(domain, mask)
        got = cheeger(e, kern).constant
        want, _ = enumerate_cheeger(e, kern)
        rel = abs(got - want) / (1.0 + want)
        inst += 1
        worst = max(worst, rel)
        if rel > cfg.tol("cheeger", 1e-9):
            failures += 1
    return _report("cheeger_enumeration_exactness", t0, inst, failures, worst)


def check_identities(cfg: VerifyConfig, rng) -> TheoremReport:
    """Translation, contrast, sign-part and truncation identities, cell-exact."""
    t0 = time.perf_counter()
    failures, inst, worst = 0, 0, 0.0
    for _ in range(cfg.count("identities", 20)):
        dim = int(rng.integers(1, 3))
        domain = GridDomain((10,) if dim == 1 else (4, 4), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.25, 0.85)))
        levels = np.round(rng.normal(size=4), 3)
        f = ScalarField(domain, rng.choice(levels, domain.shape))
        lam = float(rng.uniform(0.3, 6.0))
        variant = "minimal" if rng.random() < 0.5 else "maximal"
        sol = solve_functional(f, lam, kern, n_levels=64, variant=variant)
        checks = truncation_checks(sol, f, float(rng.uniform(0.1, 2.0)), kern)
        dev = max(c.max_abs_dev for c in checks)
        inst += 1
        worst = max(worst, dev)
        if dev != 0.0:
            failures += 1
    return _report("solution_property_identities", t0, inst, failures, worst)


def check_layered_optimality(cfg: VerifyConfig, rng) -> TheoremReport:
    """Layered solve matches the exhaustive co-quantized minimum."""
    t0 = time.perf_counter()
    failures, inst, worst = 0, 0, 0.0
    for _ in range(cfg.count("layered", 25)):
        dim = int(rng.integers(1, 3))
        domain = GridDomain((6,) if dim == 1 else (3, 2), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.25, 0.85)))
        levels = np.round(rng.normal(scale=1.2, size=int(rng.integers(2, 4))), 3)
        f = ScalarField(domain, rng.choice(levels, domain.shape))
        lam = float(rng.uniform(0.2, 8.0))
        sol = solve_functional(f, lam, kern, n_levels=16)
        best = enumerate_layered(f, lam, kern)
        gap = (sol.report.energy.total - best) / (1.0 + abs(best))
        inst += 1
        worst = max(worst, gap)
        if gap > cfg.tol("layered", 1e-9):
            failures += 1
    return _report("layered_solve_optimality", t0, inst, failures, worst)


def check_level_equivalence(cfg: VerifyConfig, rng) -> TheoremReport:
    """Each level of a layered solution solves its own geometric problem."""
    t0 = time.perf_counter()
    failures, inst, worst = 0, 0, 0.0
    for _ in range(cfg.count("level_equivalence", 10)):
        domain = GridDomain((12,), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.3, 0.8)))
        levels = np.round(rng.normal(size=3), 3)
        f = ScalarField(domain, rng.choice(levels, domain.shape))
        lam = float(rng.uniform(0.5, 6.0))
        sol = solve_functional(f, lam, kern)
        for t, u_level in sol.levels:
            datum = level_set(f, t, True)
            ref = solve_cut(build_cut_problem(datum, lam, kern))
            got = geometric_energy(u_level, datum, lam, kern).total
            gap = (got - ref.optimal_value) / (1.0 + abs(ref.optimal_value))
            inst += 1
            worst = max(worst, gap)
            if gap > 1e-9:
                failures += 1
    return _report("level_set_equivalence", t0, inst, failures, worst)


def check_stability(cfg: VerifyConfig, rng) -> TheoremReport:
    """Solutions of perturbed data are near-optimal for the limit problem."""
    t0 = time.perf_counter()
    failures, inst, worst = 0, 0, 0.0
    domain = GridDomain((10,), 1.0)
    kern = build_kernel(domain, 0.5)
    f = ScalarField(domain, rng.choice([0.0, 1.0, 2.0], 10))
    g = rng.normal(size=10)
    lam = 2.0
    u_star = solve_functional(f, lam, kern)
    e_star = u_star.report.energy.total
    for k in (2, 4, 8):
        fk = ScalarField(domain, f.values + g / 2.0**k)
        uk = solve_functional(fk, lam, kern, n_levels=64)
        drift = lam * float(np.abs(fk.values - f.values).sum()) * domain.cell_volume
        ek = functional_energy(uk.u, f, lam, kern).total
        gap = (ek - e_star - 2 * drift) / (1.0 + abs(e_star))
        inst += 1
        worst = max(worst, gap)
        if gap > 1e-9:
            failures += 1
    return _report("stability_spot_check", t0, inst, failures, worst)


CHECKS = [
    ("interval_analytic_perimeter", check_interval_analytic),
    ("kernel_quadrature_refinement", check_kernel_quadrature),
    ("perimeter_scaling_law", check_scaling_law),
    ("perimeter_submodularity", check_submodularity),
    ("perimeter_complement_invariance", check_complement_invariance),
    ("convex_truncation_monotone", check_convex_truncation),
    ("coarea_identity", check_coarea),
    ("tv_homogeneity_indicator", check_homogeneity),
    ("mincut_enumeration_exactness", check_mincut_oracle),
    ("optima_lattice_structure", check_lattice),
    ("comparison_nested_data", check_comparison),
    ("complement_datum_duality", check_duality),
    ("datum_distance_monotone", check_distance_monotone),
    ("convex_trichotomy", check_trichotomy),
    ("calibrable_disk_recovery", check_calibrable_recovery),
    ("high_fidelity_recovery", check_high_fidelity),
    ("low_fidelity_zero_solution", check_low_fidelity),
    ("cheeger_enumeration_exactness", check_cheeger_oracle),
    ("solution_property_identities", check_identities),
    ("layered_solve_optimality", check_layered_optimality),
    ("level_set_equivalence", check_level_equivalence),
    ("stability_spot_check", check_stability),
]


def run_suite(cfg: VerifyConfig) -> list[TheoremReport]:
    """Run every check deterministically and emit reports.

    Writes one JSON file per check plus a CSV summary into
    ``cfg.out_dir`` when set.  Any failure is also dumped as PBM/PGM
    artifacts where a mask is available.
    """
    reports = []
    out = Path(cfg.out_dir) if cfg.out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    for idx, (name, fn) in enumerate(CHECKS):
        rng = np.random.default_rng([cfg.seed, idx])
        rep = fn(cfg, rng)
        rep.details.setdefault("build_id", cfg.build_id())
        rep.details.setdefault("seed", cfg.seed)
        reports.append(rep)
        if out:
            with open(out / f"{name}.json", "w") as fh:
                json.dump(rep.to_dict(), fh, indent=2)
            if not rep.passed and rep.artifacts:
                fail_dir = out / "failures"
                fail_dir.mkdir(exist_ok=True)
                for label, obj in rep.artifacts:
                    if isinstance(obj, PixelSet):
                        write_pbm(obj, fail_dir / f"{name}_{label}.pbm")
    if out:
        with open(out / "summary.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["anchor", "instances", "failures", "worst_residual", "runtime_s", "passed"])
            for rep in reports:
                w.writerow(
                    [rep.anchor, rep.instances, rep.failures, f"{rep.worst_residual:.3e}", f"{rep.runtime_s:.2f}", rep.passed]
                )
    return reports
