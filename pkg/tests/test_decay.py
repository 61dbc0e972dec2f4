import math

import numpy as np
import pytest

from hypgrowth.decay import (
    default_hr_sampler,
    estimate_boundary_point_prob,
    estimate_gp,
    estimate_pc,
    estimate_thick_origin_tail,
    fit_decay,
    functional_inequality_check,
    menshikov_recursion,
    recursion_budget,
    renewal_wald_check,
    synthetic_curve,
    two_point_curve,
)
from hypgrowth.graphs import (
    GuardBandError,
    LatticeFamily,
    TilingFamily,
    clip_to_slab,
    slab_lattice,
    tiling_graph,
)

FAM = TilingFamily(5, 4)
ONE_CELL = [(1.0, np.eye(2))]


class TestSampler:
    def test_heights_in_range(self):
        cells = default_hr_sampler(2, 40, 7)
        for h, rot in cells:
            assert 2.0 ** -6 <= h <= 1.0
            assert np.allclose(rot.T @ rot, np.eye(2), atol=1e-9)

    def test_deterministic(self):
        a = default_hr_sampler(2, 5, 3)
        b = default_hr_sampler(2, 5, 3)
        for (ha, ra), (hb, rb) in zip(a, b):
            assert ha == hb
            assert np.array_equal(ra, rb)

    def test_bad_range(self):
        with pytest.raises(ValueError):
            default_hr_sampler(2, 4, 0, h_range=(0.0, 1.0))
        with pytest.raises(ValueError):
            default_hr_sampler(2, 4, 0, h_range=(0.5, 1.5))


class TestGpCurve:
    def test_p_zero(self):
        curve = estimate_gp(FAM, 0.0, [0.5, 1.0], trials=64, seed=1, hr_samples=ONE_CELL)
        assert np.all(curve.estimates == 0.0)

    def test_p_one_reaches(self):
        curve = estimate_gp(FAM, 1.0, [0.5, 1.0], trials=64, seed=1, hr_samples=ONE_CELL)
        assert np.all(curve.estimates == 1.0)

    def test_per_cell_monotone_in_r(self):
        curve = estimate_gp(
            FAM, 0.4, [0.5, 1.0, 1.5, 2.0], trials=256, seed=5, hr_samples=4
        )
        diffs = np.diff(curve.per_cell, axis=1)
        assert np.all(diffs <= 1e-12)
        assert np.allclose(curve.estimates, curve.per_cell.max(axis=0))

    def test_monotone_in_p_with_shared_cells(self):
        cells = default_hr_sampler(2, 3, 11)
        grid = [0.5, 1.0, 1.5]
        lo = estimate_gp(FAM, 0.2, grid, trials=256, seed=9, hr_samples=cells)
        hi = estimate_gp(FAM, 0.5, grid, trials=256, seed=9, hr_samples=cells)
        assert np.all(lo.per_cell <= hi.per_cell + 1e-12)

    def test_guard_band(self):
        with pytest.raises(GuardBandError):
            estimate_gp(
                FAM, 0.3, [0.5], trials=16, seed=1,
                hr_samples=[(2.0 ** -9, np.eye(2))], delta=2.0 ** -7,
            )

    def test_bad_p(self):
        with pytest.raises(ValueError):
            estimate_gp(FAM, 1.5, [0.5], trials=16, seed=1, hr_samples=ONE_CELL)

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            estimate_gp(FAM, 0.5, [0.0, 1.0], trials=16, seed=1, hr_samples=ONE_CELL)


class TestFit:
    def test_exact_exponential(self):
        r = np.arange(1.0, 9.0)
        curve = synthetic_curve(r, np.exp(-0.7 * r))
        fit = fit_decay(curve)
        assert fit.psi == pytest.approx(0.7, abs=1e-6)
        assert fit.r_squared >= 1.0 - 1e-12

    def test_constant_curve(self):
        r = np.arange(1.0, 6.0)
        fit = fit_decay(synthetic_curve(r, np.full(5, 0.5)))
        assert fit.psi == pytest.approx(0.0, abs=1e-12)

    def test_too_few_positive(self):
        curve = synthetic_curve([1.0, 2.0, 3.0, 4.0], [0.5, 0.2, 0.0, 0.0])
        with pytest.raises(ValueError):
            fit_decay(curve)

    def test_noise_floor_excludes_cells(self):
        r = np.arange(1.0, 6.0)
        vals = np.exp(-r)
        vals[-1] = 1e-9
        fit = fit_decay(synthetic_curve(r, vals, trials=10 ** 6))
        assert fit.n_points == 4
        assert fit.psi == pytest.approx(1.0, abs=1e-9)

    def test_alpha_prefactor(self):
        r = np.arange(1.0, 7.0)
        fit = fit_decay(synthetic_curve(r, 0.8 * np.exp(-0.5 * r)))
        assert fit.alpha == pytest.approx(0.8, rel=1e-9)


class TestThickOrigin:
    def test_small_run(self):
        rep = estimate_thick_origin_tail(
            FAM, 0.15, r0=0.5, r_grid=[0.0, 0.5, 1.0, 1.5],
            trials=256, seed=21, hr_samples=2,
        )
        est = rep.curve.estimates
        assert est[0] == 1.0
        assert np.all((0.0 <= est) & (est <= 1.0))
        assert np.all(np.diff(est) <= 1e-12)
        assert rep.reduction_violations == 0

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            estimate_thick_origin_tail(
                FAM, 0.1, r0=0.5, r_grid=[-1.0], trials=16, seed=1, hr_samples=1
            )


class TestRecursion:
    def test_scale_doubles_at_half(self):
        trace = menshikov_recursion(5.0, 1.0, lambda p, r: 0.5, p_floor=0.0)
        assert trace.steps[1][1] == pytest.approx(2.0)

    def test_density_step_at_one_over_e(self):
        g = 1.0 / math.e
        trace = menshikov_recursion(3.0, 1.0, lambda p, r: g, p_floor=0.0)
        assert trace.steps[1][0] == pytest.approx(3.0 - 6.0 / math.e, abs=1e-12)

    def test_squaring_budget(self):
        state = {"x": 0.1}

        def g_eval(p, r):
            x = state["x"]
            state["x"] = x * x
            return x

        trace = menshikov_recursion(2.0, 1.0, g_eval, p_floor=0.0)
        assert trace.status == "completed"
        assert all(trace.squaring_holds)
        assert trace.final_p == pytest.approx(2.0 - recursion_budget(0.1), abs=1e-10)
        assert trace.final_p > 2.0 - recursion_budget(0.1) - 1e-12

    def test_monotone_iterates(self):
        state = {"x": 0.3}

        def g_eval(p, r):
            x = state["x"]
            state["x"] = x * x
            return x

        trace = menshikov_recursion(2.5, 1.0, g_eval, p_floor=0.0)
        ps = [s[0] for s in trace.steps]
        rs = [s[1] for s in trace.steps]
        assert all(b < a for a, b in zip(ps, ps[1:]))
        assert all(b > a for a, b in zip(rs, rs[1:]))

    def test_abort_at_floor(self):
        trace = menshikov_recursion(0.5, 1.0, lambda p, r: 0.5, p_floor=0.4)
        assert trace.status == "aborted"

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            menshikov_recursion(0.9, 0.0, lambda p, r: 0.5)
        with pytest.raises(ValueError):
            menshikov_recursion(0.9, 0.5, lambda p, r: 0.5, a=1.0)
        with pytest.raises(ValueError):
            menshikov_recursion(0.9, 1.0, lambda p, r: 1.5)
        with pytest.raises(ValueError):
            menshikov_recursion(0.9, 1.0, lambda p, r: 0.0)


class TestBudgetSeries:
    def test_reference_value(self):
        assert recursion_budget(0.1) == pytest.approx(1.1625, abs=1e-3)

    def test_vanishes_at_zero(self):
        assert recursion_budget(1e-8) < 1e-6

    def test_strictly_increasing(self):
        xs = np.linspace(0.01, 0.95, 20)
        vals = [recursion_budget(float(x)) for x in xs]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                recursion_budget(bad)


class TestWald:
    def test_constant_step_exact(self):
        # M = 2 surely: M' = 0.5 + min(2, 3) = 2.5, K = ceil(3.5/2.5) = 2
        curve = synthetic_curve([2.0], [1.0])
        rep = renewal_wald_check(curve, a=0.5, r=3.0, n_samples=2000, seed=3)
        assert rep.e_m_prime == pytest.approx(2.5)
        assert rep.mean_k == pytest.approx(2.0)
        assert rep.mean_s_k == pytest.approx(5.0)
        assert rep.wald_gap == pytest.approx(0.0, abs=1e-12)
        assert rep.wald_ok
        assert rep.k_bound_ok

    def test_tiny_r_single_step(self):
        curve = synthetic_curve([2.0], [1.0])
        rep = renewal_wald_check(curve, a=0.5, r=0.01, n_samples=500, seed=3)
        assert rep.mean_k == pytest.approx(1.0)
        assert rep.mean_s_k == pytest.approx(rep.e_m_prime)

    def test_random_tail_wald_holds(self):
        r = np.arange(1.0, 6.0)
        curve = synthetic_curve(r, np.exp(-0.6 * r))
        rep = renewal_wald_check(curve, a=0.8, r=4.0, n_samples=200_000, seed=11)
        assert rep.wald_ok
        assert rep.k_bound_ok

    def test_degenerate_tail(self):
        curve = synthetic_curve([1.0], [0.0])
        with pytest.raises(ValueError):
            renewal_wald_check(curve, a=0.5, r=1.0, n_samples=100, seed=1)

    def test_positivity_requirements(self):
        curve = synthetic_curve([1.0], [0.5])
        with pytest.raises(ValueError):
            renewal_wald_check(curve, a=0.0, r=1.0, n_samples=10, seed=1)
        with pytest.raises(ValueError):
            renewal_wald_check(curve, a=0.5, r=0.0, n_samples=10, seed=1)


class TestFunctional:
    def test_equal_densities(self):
        r = [0.5, 1.0, 1.5]
        curve = estimate_gp(FAM, 0.3, r, trials=128, seed=2, hr_samples=ONE_CELL)
        rep = functional_inequality_check(curve, curve, a=1.0)
        assert rep.failures == 0
        assert rep.warnings == 0

    def test_saturated_beta_closed_form(self):
        r = np.array([0.5, 1.0, 2.0])
        ca = synthetic_curve(r, [0.2, 0.1, 0.05], p=0.1)
        cb = synthetic_curve(r, [1.0, 1.0, 1.0], p=0.9)
        rep = functional_inequality_check(ca, cb, a=0.7)
        want = np.exp(-(0.9 - 0.1) * (r / (0.7 + r) - 1.0))
        assert np.allclose(rep.rhs, want, atol=1e-12)
        assert rep.failures == 0

    def test_coupled_family_run(self):
        cells = default_hr_sampler(2, 3, 17)
        grid = [0.5, 1.0, 1.5, 2.0]
        ca = estimate_gp(FAM, 0.05, grid, trials=512, seed=23, hr_samples=cells)
        cb = estimate_gp(FAM, 0.15, grid, trials=512, seed=23, hr_samples=cells)
        rep = functional_inequality_check(ca, cb, a=FAM.edge_length)
        assert rep.failures == 0

    def test_grid_mismatch(self):
        ca = synthetic_curve([1.0, 2.0], [0.5, 0.2], p=0.1)
        cb = synthetic_curve([1.0, 3.0], [0.5, 0.2], p=0.2)
        with pytest.raises(ValueError):
            functional_inequality_check(ca, cb, a=1.0)

    def test_density_order(self):
        ca = synthetic_curve([1.0], [0.5], p=0.5)
        cb = synthetic_curve([1.0], [0.5], p=0.1)
        with pytest.raises(ValueError):
            functional_inequality_check(ca, cb, a=1.0)


class TestBoundaryPoint:
    def test_depth_zero_certain(self):
        g = tiling_graph(5, 4, 2.0)
        rep = estimate_boundary_point_prob(g, 0.3, [0.5], 0, trials=10, seed=1)
        assert rep.freq.tolist() == [1.0]
        assert math.isinf(rep.radii[0])

    def test_p_zero_far_point(self):
        g = tiling_graph(5, 4, 3.0)
        rep = estimate_boundary_point_prob(g, 0.0, [1.5], 1, trials=50, seed=1)
        assert rep.probability == 0.0

    def test_monotone_in_depth(self):
        g = tiling_graph(5, 4, 4.0)
        rep = estimate_boundary_point_prob(g, 0.4, [0.8], 3, trials=2000, seed=7)
        assert rep.monotone_violations == 0
        assert np.all(np.diff(rep.freq) <= 1e-12)

    def test_guard_band(self):
        g = tiling_graph(5, 4, 3.0)
        with pytest.raises(GuardBandError):
            estimate_boundary_point_prob(g, 0.3, [3.0], 4, trials=10, seed=1)

    def test_dimension_check(self):
        g = tiling_graph(5, 4, 2.0)
        with pytest.raises(ValueError):
            estimate_boundary_point_prob(g, 0.3, [0.5, 0.5], 1, trials=10, seed=1)


class TestControlLattice:
    def test_pc_smoke(self):
        rep = estimate_pc(
            LatticeFamily(3, 1.0),
            p_grid=[0.3, 0.45, 0.55, 0.7],
            size_threshold=4.0,
            trials=160,
            seed=13,
        )
        lo, hi = rep.interval
        assert lo < rep.estimate < hi
        assert 0.3 <= rep.estimate <= 0.7

    def test_two_point_extremes(self):
        clip = clip_to_slab(slab_lattice(2, 1.0, 2.0), None, h=1.0)
        sv0 = clip.vertex_index_of_original(clip.base.origin_index)
        others = [v for v in range(clip.n_vertices) if v != sv0]
        ones = two_point_curve(clip, 1.0, [sv0] + others, 64, seed=5)
        assert np.all(ones == 1.0)
        zeros = two_point_curve(clip, 0.0, [sv0] + others, 64, seed=5)
        assert zeros[0] == 1.0
        assert np.all(zeros[1:] == 0.0)
