"""Layered solver, identities, Cheeger machinery and thresholds."""

import math
from itertools import product

import numpy as np
import pytest

from fractv import (
    GridDomain,
    PixelSet,
    ScalarField,
    ball_perimeter_constant,
    build_cut_problem,
    build_kernel,
    cheeger,
    frac_perimeter,
    functional_energy,
    high_fidelity_threshold,
    is_discrete_convex,
    level_set,
    low_fidelity_certificate,
    make_disk,
    make_rectangle,
    solve_cut,
    solve_functional,
    trichotomy,
    truncation_checks,
    zero_threshold,
)

from conftest import GeometricEnumerator


# --- layered solve ----------------------------------------------------------


def test_validation_errors():
    domain = GridDomain((4,), 1.0)
    kern = build_kernel(domain, 0.5)
    f = ScalarField.zeros(domain)
    with pytest.raises(ValueError):
        solve_functional(f, -1.0, kern)
    with pytest.raises(ValueError):
        solve_functional(f, 1.0, kern, n_levels=0)
    with pytest.raises(ValueError):
        solve_functional(f, 1.0, kern, variant="middle")


def test_zero_field_solves_to_zero():
    domain = GridDomain((5, 5), 1.0)
    kern = build_kernel(domain, 0.5)
    sol = solve_functional(ScalarField.zeros(domain), 2.0, kern)
    assert not sol.u.values.any()
    assert sol.levels == []
    assert sol.report.energy.total == 0.0


def test_binary_datum_single_layer(rng):
    domain = GridDomain((6, 6), 1.0)
    kern = build_kernel(domain, 0.5)
    e = make_rectangle(domain, (1, 1), (5, 4))
    f = ScalarField.indicator(e)
    lam = 2.0 * frac_perimeter(e, kern) / e.cell_count
    sol = solve_functional(f, lam, kern)
    assert len(sol.levels) == 1
    ref = solve_cut(build_cut_problem(e, lam, kern))
    assert PixelSet(domain, sol.u.values > 0.5) == ref.minimal_set
    assert set(np.unique(sol.u.values)) <= {0.0, 1.0}


def test_levels_are_nested_and_consistent(rng):
    domain = GridDomain((12,), 1.0)
    kern = build_kernel(domain, 0.45)
    f = ScalarField(domain, rng.choice([-1.2, -0.3, 0.0, 0.8, 1.7], 12))
    for variant in ("minimal", "maximal"):
        sol = solve_functional(f, 1.5, kern, variant=variant)
        prev = None
        for t, u_t in sol.levels:
            assert level_set(sol.u, t, strict=True) == u_t
            if prev is not None:
                assert np.all(prev.interior_mask | ~u_t.interior_mask)
                assert prev.background or not u_t.background
            prev = u_t


def test_layered_energy_identity(rng):
    domain = GridDomain((10,), 1.0)
    kern = build_kernel(domain, 0.6)
    f = ScalarField(domain, rng.choice([-0.5, 0.4, 1.1], 10))
    sol = solve_functional(f, 2.2, kern)
    assert sol.report.layered_energy_sum == pytest.approx(sol.report.energy.total, rel=1e-11)


def test_layered_optimality_exhaustive(rng):
    for _ in range(12):
        dim = int(rng.integers(1, 3))
        domain = GridDomain((6,) if dim == 1 else (2, 3), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.3, 0.8)))
        levels = np.round(rng.normal(size=3), 2)
        f = ScalarField(domain, rng.choice(levels, domain.shape))
        lam = float(rng.uniform(0.3, 6.0))
        sol = solve_functional(f, lam, kern)
        grid_vals = np.unique(np.concatenate([f.values.ravel(), [0.0]]))
        n = domain.num_cells
        best = math.inf
        for combo in product(range(len(grid_vals)), repeat=n):
            v = ScalarField(domain, grid_vals[np.array(combo)].reshape(domain.shape))
            best = min(best, functional_energy(v, f, lam, kern).total)
        assert sol.report.energy.total <= best + 1e-9 * (1 + abs(best))


def test_quantization_budget(rng):
    domain = GridDomain((9,), 1.0)
    kern = build_kernel(domain, 0.5)
    f = ScalarField(domain, rng.normal(size=9))
    sol = solve_functional(f, 3.0, kern, n_levels=4)
    assert sol.report.quantized
    assert len(np.unique(sol.u.values)) <= 5  # 4 levels plus 0
    full = solve_functional(f, 3.0, kern, n_levels=64)
    assert not full.report.quantized


def test_variants_bracket(rng):
    domain = GridDomain((10,), 1.0)
    kern = build_kernel(domain, 0.5)
    f = ScalarField(domain, rng.choice([0.0, 1.0], 10))
    lo = solve_functional(f, 1.0, kern, variant="minimal")
    hi = solve_functional(f, 1.0, kern, variant="maximal")
    assert np.all(lo.u.values <= hi.u.values + 1e-15)
    assert lo.report.energy.total == pytest.approx(hi.report.energy.total, rel=1e-9)


# --- solution identities -----------------------------------------------------


def test_identity_checks_exact(rng):
    for _ in range(8):
        dim = int(rng.integers(1, 3))
        domain = GridDomain((9,) if dim == 1 else (3, 4), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.3, 0.8)))
        f = ScalarField(domain, rng.choice(np.round(rng.normal(size=4), 2), domain.shape))
        lam = float(rng.uniform(0.4, 5.0))
        variant = "minimal" if rng.random() < 0.5 else "maximal"
        sol = solve_functional(f, lam, kern, variant=variant)
        for check in truncation_checks(sol, f, float(rng.uniform(0.1, 1.5)), kern):
            assert check.exact, check


def test_identity_contrast_example(rng):
    # doubling a binary datum doubles the solution
    domain = GridDomain((8,), 1.0)
    kern = build_kernel(domain, 0.5)
    e = PixelSet(domain, np.array([0, 1, 1, 1, 1, 0, 0, 0], bool))
    f = ScalarField.indicator(e)
    lam = 1.2 * zero_threshold(e, kern)
    u1 = solve_functional(f, lam, kern).u
    u2 = solve_functional(ScalarField(domain, 2.0 * f.values), lam, kern).u
    assert np.array_equal(u2.values, 2.0 * u1.values)
    assert u1.values.any()


def test_identity_requires_unquantized(rng):
    domain = GridDomain((9,), 1.0)
    kern = build_kernel(domain, 0.5)
    f = ScalarField(domain, rng.normal(size=9))
    sol = solve_functional(f, 2.0, kern, n_levels=3)
    with pytest.raises(ValueError):
        truncation_checks(sol, f, 0.5, kern)


# --- cheeger -----------------------------------------------------------------


def test_cheeger_single_cell():
    domain = GridDomain((5,), 0.5)
    kern = build_kernel(domain, 0.5)
    e = PixelSet.from_indices(domain, [2])
    res = cheeger(e, kern)
    assert res.constant == pytest.approx(
        frac_perimeter(e, kern) / domain.cell_volume, rel=1e-12
    )
    assert res.cheeger_set == e
    assert res.calibrable


def test_cheeger_oracle_1d(rng):
    for _ in range(10):
        n = int(rng.integers(4, 13))
        domain = GridDomain((n,), 1.0)
        kern = build_kernel(domain, float(rng.uniform(0.2, 0.9)))
        mask = rng.random(n) < 0.7
        if not mask.any():
            continue
        e = PixelSet(domain, mask)
        res = cheeger(e, kern)
        enum = GeometricEnumerator(domain, kern.s, kern.trunc_radius)
        sub = enum.masks()[1:]
        keep = ~np.any(sub & ~mask.ravel(), axis=1)
        sub = sub[keep]
        ratios = enum.perimeters(sub) / (sub.sum(1) * domain.cell_volume)
        best = float(ratios.min())
        assert abs(res.constant - best) <= 1e-9 * (1 + best)
        assert np.all(e.interior_mask | ~res.cheeger_set.interior_mask)
        got_ratio = frac_perimeter(res.cheeger_set, kern) / (
            res.cheeger_set.cell_count * domain.cell_volume
        )
        assert got_ratio == pytest.approx(res.constant, rel=1e-9)


def test_cheeger_interval_is_calibrable():
    # finite 1D intervals: the whole interval attains the minimal ratio
    domain = GridDomain((12,), 1.0)
    kern = build_kernel(domain, 0.5)
    e = make_rectangle(domain, (2,), (10,))
    res = cheeger(e, kern)
    assert res.calibrable
    assert res.cheeger_set == e


def test_cheeger_errors():
    domain = GridDomain((4,), 1.0)
    kern = build_kernel(domain, 0.5)
    with pytest.raises(ValueError):
        cheeger(PixelSet.empty(domain), kern)
    with pytest.raises(ValueError):
        cheeger(PixelSet.full_space(domain), kern)
    with pytest.raises(ValueError):
        cheeger(PixelSet(domain, np.ones(4, bool)), kern, tol=0.0)


def test_cheeger_subset_ratio_bound(rng):
    domain = GridDomain((4, 4), 1.0)
    kern = build_kernel(domain, 0.5)
    e = PixelSet(domain, rng.random((4, 4)) < 0.7)
    if e.cell_count == 0:
        return
    res = cheeger(e, kern)
    for _ in range(50):
        sub = e.interior_mask & (rng.random((4, 4)) < 0.6)
        if not sub.any():
            continue
        ratio = frac_perimeter(PixelSet(domain, sub), kern) / sub.sum()
        assert ratio >= res.constant - 1e-9


# --- thresholds ----------------------------------------------------------------


def test_ball_constant_1d_analytic():
    s = 0.5
    assert ball_perimeter_constant(1, s) == pytest.approx(2 * 2 ** (1 - s) / (s * (1 - s)))
    # discrete refinement approaches the analytic value
    for cells in (256,):
        n = 2 * cells + 1
        domain = GridDomain((n,), 1.0 / cells, origin=(-1.0,))
        kern = build_kernel(domain, s)
        disk = make_disk(domain, 1.0, center=(0.0,))
        p = frac_perimeter(disk, kern)
        assert p == pytest.approx(ball_perimeter_constant(1, s), rel=0.02)


def test_ball_constant_2d_refinement_consistency():
    a = ball_perimeter_constant(2, 0.5, reference_cells=32)
    b = ball_perimeter_constant(2, 0.5, reference_cells=64)
    assert a == pytest.approx(b, rel=0.02)


def test_high_fidelity_threshold_formula():
    domain = GridDomain((32,), 1.0 / 8)
    kern = build_kernel(domain, 0.5)
    e = make_disk(domain, 1.0)
    thr = high_fidelity_threshold(e, kern, 1.0)
    assert thr == pytest.approx(2**0.5 * 8 / 2, rel=1e-12)  # = c_{1,s} / (omega_1 * 1)
    assert high_fidelity_threshold(e, kern, 2.0) == pytest.approx(thr * 2**-0.5, rel=1e-12)
    with pytest.raises(ValueError):
        high_fidelity_threshold(e, kern, 0.0)


def test_high_fidelity_validate_flag():
    domain = GridDomain((24, 24), 1.0)
    kern = build_kernel(domain, 0.5)
    disk = make_disk(domain, 6.2)
    assert high_fidelity_threshold(disk, kern, 2.0, validate=True) > 0
    ragged = PixelSet.from_indices(domain, [(3, 3)])
    with pytest.raises(ValueError):
        high_fidelity_threshold(ragged, kern, 3.0, validate=True)


def test_high_fidelity_recovery_2d():
    r = 6
    domain = GridDomain((3 * r, 3 * r), 1.0)
    kern = build_kernel(domain, 0.5)
    e = make_disk(domain, r + 0.3)
    thr = high_fidelity_threshold(e, kern, float(r))
    sol = solve_cut(build_cut_problem(e, 2.0 * thr, kern))
    assert sol.minimal_set == e and sol.maximal_set == e


def test_zero_threshold_and_certificate(rng):
    domain = GridDomain((8, 8), 1.0)
    kern = build_kernel(domain, 0.5)
    rect = make_rectangle(domain, (2, 2), (6, 7))
    zt = zero_threshold(rect, kern)
    h = cheeger(rect, kern).constant
    assert zt == pytest.approx(h, rel=1e-9)
    # strictly below: empty is the unique optimum; strictly above: it is not
    below = solve_cut(build_cut_problem(rect, 0.9 * zt, kern))
    assert below.maximal_set.cell_count == 0
    above = solve_cut(build_cut_problem(rect, 1.5 * zt, kern))
    assert above.minimal_set.cell_count > 0

    f = ScalarField.indicator(rect)
    assert low_fidelity_certificate(f, kern) == pytest.approx(h, rel=1e-9)
    assert low_fidelity_certificate(ScalarField.zeros(domain), kern) == math.inf


def test_certificate_guarantee_general_field(rng):
    domain = GridDomain((10,), 1.0)
    kern = build_kernel(domain, 0.5)
    f = ScalarField(domain, rng.choice([-1.0, 0.0, 0.5, 2.0], 10))
    cert = low_fidelity_certificate(f, kern)
    sol = solve_functional(f, 0.9 * cert, kern)
    assert not sol.u.values.any()
    sol_hi = solve_functional(f, 3.0 * cert, kern)
    assert sol_hi.u.values.any()


# --- convexity and trichotomy ---------------------------------------------------


def test_discrete_convexity():
    domain = GridDomain((12, 12), 1.0)
    assert is_discrete_convex(make_disk(domain, 4.2))
    assert is_discrete_convex(make_rectangle(domain, (2, 3), (7, 9)))
    assert is_discrete_convex(PixelSet.from_indices(domain, [(4, 4)]))
    # diagonal line of cells is hull-convex, an L-shape is not
    diag = PixelSet.from_indices(domain, [(2, 2), (3, 3), (4, 4)])
    assert is_discrete_convex(diag)
    ell = PixelSet.from_indices(domain, [(2, 2), (3, 2), (3, 3), (2, 4)])
    assert not is_discrete_convex(ell)
    holed = make_rectangle(domain, (2, 2), (6, 6))
    mask = holed.interior_mask.copy()
    mask[3, 3] = False
    assert not is_discrete_convex(PixelSet(domain, mask))
    assert not is_discrete_convex(PixelSet.empty(domain))
    d1 = GridDomain((9,), 1.0)
    assert is_discrete_convex(make_rectangle(d1, (2,), (7,)))
    gap = np.zeros(9, bool)
    gap[1] = gap[4] = True
    assert not is_discrete_convex(PixelSet(d1, gap))


def test_trichotomy_rejects_nonconvex():
    domain = GridDomain((10, 10), 1.0)
    kern = build_kernel(domain, 0.5)
    mask = np.zeros((10, 10), bool)
    mask[2, 2] = mask[7, 7] = True
    with pytest.raises(ValueError):
        trichotomy(PixelSet(domain, mask), kern, [1.0])


def test_trichotomy_small_disk():
    domain = GridDomain((20, 20), 1.0)
    kern = build_kernel(domain, 0.5)
    disk = make_disk(domain, 5.7)
    ch = cheeger(disk, kern)
    rep = trichotomy(disk, kern, [0.5 * ch.constant, 0.97 * ch.constant, ch.constant, 1.03 * ch.constant, 2.0 * ch.constant])
    assert rep.passed, rep.violations
    regimes = [row["regime"] for row in rep.rows]
    assert regimes[0] == "below" and regimes[-1] == "above"
    assert "at" in regimes
    below_rows = [row for row in rep.rows if row["regime"] == "below"]
    assert all(row["maximal_cells"] == 0 for row in below_rows)
    if rep.calibrable:
        above_rows = [row for row in rep.rows if row["regime"] == "above"]
        assert all(row["equals_datum"] for row in above_rows)
    assert all(row["contained_in_datum"] for row in rep.rows)


def test_stability_under_data_perturbation(rng):
    domain = GridDomain((10,), 1.0)
    kern = build_kernel(domain, 0.5)
    f = ScalarField(domain, rng.choice([0.0, 1.0, 2.0], 10))
    lam = 2.0
    base = solve_functional(f, lam, kern).report.energy.total
    for k in (2, 4, 8):
        fk = ScalarField(domain, f.values + rng.normal(size=10) / 2.0**k)
        uk = solve_functional(fk, lam, kern)
        drift = lam * float(np.abs(fk.values - f.values).sum())
        assert functional_energy(uk.u, f, lam, kern).total <= base + 2 * drift + 1e-9
