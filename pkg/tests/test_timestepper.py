"""Tests for the exponential time stepper and blow-up machinery.

The integrator propagates the linear part exactly, so several contracts
can be checked to near machine precision; the genuinely discrete parts
(Duhamel quadrature, blow-up detection) are checked by convergence-order
and sensitivity oracles.
"""

import numpy as np
import pytest

from dampedwave.initial_data import DataSpec, generate
from dampedwave.norms import ModelParams
from dampedwave.propagator import khat, linear_solution
from dampedwave.spectral import (
    SpectralField,
    from_spectral,
    make_grid,
    spectral_l2_norm,
)
from dampedwave.timestepper import (
    BoxSizeWarning,
    LifespanRefinementWarning,
    SimConfig,
    SimResult,
    SpectralState,
    refine_lifespan,
    simulate,
    step,
)

trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _initial_state(grid, params, data):
    u0, u1 = generate(data, params, grid)
    return SpectralState(
        0.0,
        SpectralField(grid, params.eps * np.fft.fftn(u0.values)),
        SpectralField(grid, params.eps * np.fft.fftn(u1.values)),
    )


def _rel_coeff_error(a: SpectralField, b: SpectralField) -> float:
    diff = spectral_l2_norm(SpectralField(a.grid, a.coeffs - b.coeffs))
    return diff / spectral_l2_norm(b)


class TestStep:
    def test_dt_must_be_positive(self):
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=2.0)
        state = _initial_state(grid, params, DataSpec(kind="gaussian", width=0.8))
        with pytest.raises(ValueError, match="dt"):
            step(state, 0.0, params)

    def test_nonlinearity_zero_matches_linear_solution(self):
        """With the Duhamel term switched off a step is the exact flow."""
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=3.0, eps=0.7)
        state = _initial_state(grid, params, DataSpec(kind="gaussian", width=0.8))
        new = step(state, 0.3, params, nonlinearity=0.0)
        ref_u, ref_ut = linear_solution(state.uhat, state.uthat, 0.3)
        assert _rel_coeff_error(new.uhat, ref_u) <= 1e-12
        assert _rel_coeff_error(new.uthat, ref_ut) <= 1e-12

    def test_u1_only_data_single_step_uhat(self):
        """u0 = 0 kills both Duhamel contributions to u after one step.

        N(0) vanishes with u(0) and the endpoint weight K(0) is zero, so
        u(dt) = K(dt) u1 holds exactly even with the nonlinearity on.
        """
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=2.0)
        u1_spec = DataSpec(kind="gaussian", width=0.8)
        u1, _ = generate(u1_spec, params, grid)
        zero = SpectralField(grid, np.zeros(grid.shape, dtype=complex))
        state = SpectralState(0.0, zero, SpectralField(grid, np.fft.fftn(u1.values)))
        dt = 0.2
        new = step(state, dt, params, nonlinearity=1.0)
        kv = khat(dt, grid.wavenumber_sq)
        expected = SpectralField(grid, kv.k * state.uthat.coeffs)
        assert _rel_coeff_error(new.uhat, expected) <= 1e-13

    def test_conjugate_symmetry_preserved(self):
        """Several nonlinear steps keep the fields real-valued."""
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=3.0, eps=0.5)
        state = _initial_state(grid, params, DataSpec(kind="gaussian", width=0.8))
        for _ in range(5):
            state = step(state, 0.1, params)
        u = np.fft.ifftn(state.uhat.coeffs)
        ut = np.fft.ifftn(state.uthat.coeffs)
        assert np.max(np.abs(u.imag)) <= 1e-12 * max(np.max(np.abs(u.real)), 1e-30)
        assert np.max(np.abs(ut.imag)) <= 1e-12 * max(np.max(np.abs(ut.real)), 1e-30)

    def test_richardson_terminal_error_ratio(self):
        """Halving dt divides the terminal error by about four (order 2).

        Errors are measured against a dt/8 reference, which shifts the
        ideal ratio from 4 to (1 - 1/64)/(1/4 - 1/64) = 4.2.
        """
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=3.0, eps=0.5)
        state0 = _initial_state(grid, params, DataSpec(kind="gaussian", width=0.8))

        def march(dt, t_end):
            st = state0
            for _ in range(round(t_end / dt)):
                st = step(st, dt, params)
            return st

        t_end = 2.0
        ref = march(t_end / 64, t_end)
        errors = {}
        for k in (8, 16):
            st = march(t_end / k, t_end)
            errors[k] = spectral_l2_norm(
                SpectralField(grid, st.uhat.coeffs - ref.uhat.coeffs)
            )
        ratio = errors[8] / errors[16]
        assert 3.5 <= ratio <= 4.5


class TestSimulateLinear:
    def test_eps_zero_solution_identically_zero(self):
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=2.0, eps=0.0)
        cfg = SimConfig(
            params=params,
            grid=grid,
            data=DataSpec(kind="gaussian", width=0.8),
            dt=0.1,
            t_max=2.0,
        )
        res = simulate(cfg)
        assert res.status == "completed"
        assert np.all(res.norms.l2 == 0.0)
        assert np.all(res.norms.hs_dot == 0.0)
        assert np.all(res.norms.lm == 0.0)
        assert np.all(res.norms.supnorm == 0.0)
        assert res.x_value == 0.0

    def test_linear_limit_matches_one_shot_solution(self):
        """Many steps with the nonlinearity off equal a single exact hop.

        t_max is not a multiple of dt, so the final partial step (and the
        kernel-table refresh it forces) is also exercised.
        """
        grid = make_grid(1, 64, 30.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=2.0, eps=0.7)
        data = DataSpec(kind="gaussian", width=0.8)
        cfg = SimConfig(
            params=params,
            grid=grid,
            data=data,
            dt=0.37,
            t_max=5.0,
            nonlinearity=0.0,
            output_stride=100,
        )
        res = simulate(cfg)
        assert res.status == "completed"
        state0 = _initial_state(grid, params, data)
        ref_u, ref_ut = linear_solution(state0.uhat, state0.uthat, 5.0)
        assert res.final_state.t == pytest.approx(5.0, abs=1e-12)
        assert _rel_coeff_error(res.final_state.uhat, ref_u) <= 1e-10
        assert _rel_coeff_error(res.final_state.uthat, ref_ut) <= 1e-10
        ref_l2 = spectral_l2_norm(ref_u)
        assert abs(res.norms.l2[-1] - ref_l2) <= 1e-10 * ref_l2

    def test_linear_energy_law_residual_second_order(self):
        """E' = -||u_t||^2 holds with an O(dt^2) sampling residual.

        States along the run are exact, so the only error in the discrete
        balance E(T) - E(0) + trapz(||u_t||^2) is the trapezoid rule's.
        """
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=2.0, eps=0.5)
        state0 = _initial_state(grid, params, DataSpec(kind="gaussian", width=0.8))
        scale = grid.box_length**grid.dim / grid.points_per_axis ** (2 * grid.dim)

        def residual(dt, t_end=3.0):
            st = state0
            ts, damp, energy = [], [], []
            for _ in range(round(t_end / dt) + 1):
                ut2 = np.sum(np.abs(st.uthat.coeffs) ** 2) * scale
                gu2 = np.sum(grid.wavenumber_sq * np.abs(st.uhat.coeffs) ** 2) * scale
                ts.append(st.t)
                damp.append(ut2)
                energy.append(0.5 * (ut2 + gu2))
                st = step(st, dt, params, nonlinearity=0.0)
            return abs(energy[-1] - energy[0] + trapezoid(np.array(damp), np.array(ts)))

        r_coarse = residual(0.05)
        r_fine = residual(0.025)
        assert r_fine < 1e-6
        order = np.log2(r_coarse / r_fine)
        assert 1.7 <= order <= 2.4

    def test_small_eps_linearity_order(self):
        """u(2 eps) - 2 u(eps) shrinks like eps^p at fixed short horizon."""
        grid = make_grid(1, 64, 20.0)
        data = DataSpec(kind="gaussian", width=0.8)
        p = 2.0

        def terminal(eps):
            cfg = SimConfig(
                params=ModelParams(n=1, m=2.0, gamma=0.0, p=p, eps=eps),
                grid=grid,
                data=data,
                dt=0.05,
                t_max=2.0,
                adaptive=False,
                output_stride=1000,
            )
            return simulate(cfg).final_state

        defect = {}
        for eps in (2e-3, 1e-3, 5e-4):
            a = terminal(2 * eps)
            b = terminal(eps)
            defect[eps] = spectral_l2_norm(
                SpectralField(grid, a.uhat.coeffs - 2.0 * b.uhat.coeffs)
            )
        order_hi = np.log2(defect[2e-3] / defect[1e-3])
        order_lo = np.log2(defect[1e-3] / defect[5e-4])
        assert order_hi >= p - 0.2
        assert order_lo >= p - 0.2


class TestSimulateRecording:
    def test_output_stride_sample_times(self):
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=2.0, eps=0.1)
        cfg = SimConfig(
            params=params,
            grid=grid,
            data=DataSpec(kind="gaussian", width=0.8),
            dt=0.1,
            t_max=1.0,
            output_stride=5,
            adaptive=False,
        )
        res = simulate(cfg)
        np.testing.assert_allclose(res.norms.times, [0.0, 0.5, 1.0], atol=1e-12)

    def test_deterministic_for_fixed_config(self):
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=3.0, eps=0.4)
        cfg = SimConfig(
            params=params,
            grid=grid,
            data=DataSpec(kind="gaussian", width=0.8),
            dt=0.1,
            t_max=2.0,
            store_snapshots=True,
        )
        a = simulate(cfg)
        b = simulate(cfg)
        assert np.array_equal(a.final_state.uhat.coeffs, b.final_state.uhat.coeffs)
        assert np.array_equal(a.final_state.uthat.coeffs, b.final_state.uthat.coeffs)
        assert np.array_equal(a.norms.times, b.norms.times)
        assert np.array_equal(a.norms.l2, b.norms.l2)
        assert len(a.snapshots) == len(b.snapshots)
        for (ta, ua), (tb, ub) in zip(a.snapshots, b.snapshots):
            assert ta == tb
            assert np.array_equal(ua, ub)

    def test_snapshots_match_initial_data(self):
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=2.0, eps=0.3)
        data = DataSpec(kind="gaussian", width=0.8)
        cfg = SimConfig(
            params=params,
            grid=grid,
            data=data,
            dt=0.1,
            t_max=1.0,
            store_snapshots=True,
        )
        res = simulate(cfg)
        assert res.snapshots is not None
        t0, snap0 = res.snapshots[0]
        assert t0 == 0.0
        u0, _ = generate(data, params, grid)
        np.testing.assert_allclose(snap0, params.eps * u0.values, atol=1e-14)

    def test_box_size_warning(self):
        """A box shorter than the light-cone bound is flagged, once."""
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=2.0, eps=0.1)
        data = DataSpec(kind="gaussian", width=1.0)
        small = SimConfig(
            params=params, grid=grid, data=data, dt=0.1, t_max=10.0,
            nonlinearity=0.0,
        )
        with pytest.warns(BoxSizeWarning):
            res = simulate(small)
        assert any("box" in w for w in res.warnings)

        ample = SimConfig(
            params=params, grid=grid, data=data, dt=0.1, t_max=2.0,
            nonlinearity=0.0,
        )
        res2 = simulate(ample)
        assert not any("box" in w for w in res2.warnings)

    def test_weighted_series_attached(self):
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=2.0, eps=0.2)
        cfg = SimConfig(
            params=params,
            grid=grid,
            data=DataSpec(kind="gaussian", width=0.8),
            dt=0.1,
            t_max=2.0,
        )
        res = simulate(cfg)
        assert res.x_value is not None and res.x_value > 0.0
        assert res.norms.x_weighted is not None
        assert res.norms.x_weighted.shape == (3, res.norms.times.size)


class TestBlowup:
    @pytest.fixture()
    def blowup_setup(self):
        grid = make_grid(1, 256, 40.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=2.0, eps=0.5)
        data = DataSpec(kind="theorem2_profile", amplitude_c0=1.0)
        return grid, params, data

    def test_subcritical_profile_blows_up(self, blowup_setup):
        """p = 2 below the critical exponent 5: finite-time blow-up.

        A dt-halved control run must agree on the verdict and closely on
        the time.
        """
        grid, params, data = blowup_setup
        cfg = SimConfig(
            params=params, grid=grid, data=data, dt=0.05, t_max=200.0,
            output_stride=10,
        )
        res = simulate(cfg)
        assert res.status == "blew_up"
        t_lo, t_hi = res.lifespan
        assert 0.0 < t_lo < t_hi <= 200.0

        half = SimConfig(
            params=params, grid=grid, data=data, dt=0.025, t_max=200.0,
            output_stride=10,
        )
        res_half = simulate(half)
        assert res_half.status == "blew_up"
        mid = 0.5 * (t_lo + t_hi)
        mid_half = 0.5 * (res_half.lifespan[0] + res_half.lifespan[1])
        assert abs(mid - mid_half) <= 0.01 * mid

    def test_threshold_sensitivity_under_two_percent(self, blowup_setup):
        """Raising the detection factor 1e6 -> 1e8 barely moves T.

        Growth is superlinear near the singularity, so the time spent
        between the two thresholds is tiny.
        """
        grid, params, data = blowup_setup
        mids = {}
        for factor in (1e6, 1e8):
            cfg = SimConfig(
                params=params, grid=grid, data=data, dt=0.05, t_max=200.0,
                blowup_factor=factor, output_stride=10,
            )
            res = simulate(cfg)
            assert res.status == "blew_up"
            mids[factor] = 0.5 * (res.lifespan[0] + res.lifespan[1])
        assert abs(mids[1e8] - mids[1e6]) <= 0.02 * mids[1e6]

    def test_nonfinite_state_reported_as_blowup(self, blowup_setup):
        """With a huge threshold the state overflows before crossing it.

        The non-adaptive path must classify the resulting Inf/NaN as
        blow-up with a bracket instead of raising.
        """
        grid, params, data = blowup_setup
        cfg = SimConfig(
            params=params, grid=grid, data=data, dt=0.05, t_max=200.0,
            blowup_factor=1e300, adaptive=False, output_stride=10,
        )
        with np.errstate(over="ignore", invalid="ignore"):
            res = simulate(cfg)
        assert res.status == "blew_up"
        t_lo, t_hi = res.lifespan
        assert t_lo < t_hi <= 200.0
        assert t_hi - t_lo <= 0.05 + 1e-12


class TestRefineLifespan:
    @pytest.fixture()
    def coarse_run(self):
        grid = make_grid(1, 256, 40.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=2.0, eps=0.5)
        data = DataSpec(kind="theorem2_profile", amplitude_c0=1.0)
        cfg = SimConfig(
            params=params, grid=grid, data=data, dt=0.05, t_max=200.0,
            output_stride=10, adaptive=False,
        )
        return cfg, simulate(cfg)

    def test_requires_blown_up_base(self):
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=6.0, eps=1e-3)
        cfg = SimConfig(
            params=params,
            grid=grid,
            data=DataSpec(kind="gaussian", width=0.8),
            dt=0.1,
            t_max=1.0,
        )
        with pytest.raises(ValueError, match="blown-up"):
            refine_lifespan(cfg, (0.5, 0.6))

    def test_width_contract_and_schedule(self, coarse_run):
        """Each refinement target is met; finer targets give nested-size
        detection intervals, which converge near the coarse bracket."""
        cfg, res = coarse_run
        t_lo, t_hi = res.lifespan
        width0 = t_hi - t_lo
        widths = []
        for target in (cfg.dt / 4, cfg.dt / 16, cfg.dt / 64):
            lo, hi = refine_lifespan(cfg, res.lifespan, dt_min_target=target,
                                     base_result=res)
            widths.append(hi - lo)
            assert hi - lo <= 2.0 * target
            # crossing times shift by O(dt^2) trajectory bias, so demand
            # containment only up to a couple of coarse widths
            mid = 0.5 * (lo + hi)
            coarse_mid = 0.5 * (t_lo + t_hi)
            assert abs(mid - coarse_mid) <= 2.0 * width0
        assert widths[0] > widths[1] > widths[2]

    def test_default_target(self, coarse_run):
        cfg, res = coarse_run
        lo, hi = refine_lifespan(cfg, res.lifespan, base_result=res)
        assert hi - lo <= 2.0 * cfg.dt / 64.0

    def test_widened_bracket_and_warning_when_not_reproduced(self):
        """If the finer run never crosses, the bracket widens and warns."""
        grid = make_grid(1, 64, 20.0)
        params = ModelParams(n=1, m=2.0, gamma=0.0, p=6.0, eps=1e-3)
        cfg = SimConfig(
            params=params,
            grid=grid,
            data=DataSpec(kind="gaussian", width=0.8),
            dt=0.05,
            t_max=2.0,
        )
        res = simulate(cfg)
        assert res.status == "completed"
        forged = SimResult(
            status="blew_up",
            norms=res.norms,
            lifespan=(1.5, 1.6),
            final_state=res.final_state,
            initial_supnorm=res.initial_supnorm,
            checkpoint=res.checkpoint,
        )
        with pytest.warns(LifespanRefinementWarning):
            lo, hi = refine_lifespan(cfg, (1.5, 1.6), dt_min_target=cfg.dt / 8,
                                     base_result=forged)
        assert (lo, hi) == (1.5, pytest.approx(1.7))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
