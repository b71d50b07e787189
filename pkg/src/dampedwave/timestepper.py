"""Exponential-integrator time stepping for u_tt - lap(u) + u_t = |u|^p.

The linear part is propagated exactly per Fourier mode by the closed-form
kernel, so the step size is limited only by how fast the nonlinearity
varies; stiff high-frequency damping and oscillation cost nothing. The
Duhamel integral over one step is approximated by a two-stage (predictor
corrector) rule that is second order:

    predictor:  u* = L(dt) u(t) + dt K(dt) N(t)
    corrector:  u(t+dt)  = L(dt) u(t) + dt/2 [K(dt) N(t) + K(0) N*]
                ut(t+dt) = Lt(dt) u(t) + dt/2 [K'(dt) N(t) + K'(0) N*]

with N = |u|^p evaluated dealiased, K(0) = 0 and K'(0) = 1. Blow-up is
detected as the sup-norm crossing blowup_factor times its initial value,
and the crossing step provides the lifespan bracket.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .initial_data import DataSpec, generate
from .norms import ModelParams, NormSeries, lp_norm, sobolev_norm, weighted_tracker
from .propagator import khat, linear_solution
from .spectral import Grid, RealField, SpectralField, from_spectral, power_dealiased

__all__ = [
    "SpectralState",
    "SimConfig",
    "SimResult",
    "step",
    "simulate",
    "refine_lifespan",
    "LifespanRefinementWarning",
    "BoxSizeWarning",
]

_DT_FLOOR_FACTOR = 1e-12
_GROWTH_LIMIT = 1.25
_QUIET_STEPS_TO_DOUBLE = 50

# effective support radius per data kind, in multiples of the width
# (gaussian tails below 1e-8 of peak outside 6 widths; other kinds fill
# the box, so no finite-speed containment claim is made for them)
_SUPPORT_RADIUS_WIDTHS = {"gaussian": 6.0, "bump": 1.0}


class LifespanRefinementWarning(UserWarning):
    """A refinement round failed to reproduce the blow-up."""


class BoxSizeWarning(UserWarning):
    """Box too small to contain the light cone up to t_max."""


@dataclass(frozen=True)
class SpectralState:
    """Solution pair (u, u_t) in spectral representation at one time."""

    t: float
    uhat: SpectralField
    uthat: SpectralField

    def is_finite(self) -> bool:
        return self.uhat.is_finite() and self.uthat.is_finite()


@dataclass
class SimConfig:
    params: ModelParams
    grid: Grid
    data: DataSpec
    dt: float
    t_max: float
    blowup_factor: float = 1e6
    output_stride: int = 1
    adaptive: bool = True
    # test hook: 0 disables the nonlinearity, any other value scales it
    nonlinearity: float = 1.0
    store_snapshots: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got dt={self.dt}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got t_max={self.t_max}")
        if not self.blowup_factor > 1:
            raise ValueError(
                f"blowup_factor must exceed 1, got blowup_factor={self.blowup_factor}"
            )
        if self.output_stride < 1:
            raise ValueError(
                f"output_stride must be >= 1, got output_stride={self.output_stride}"
            )


@dataclass
class SimResult:
    status: str  # completed | blew_up | step_underflow
    norms: NormSeries
    lifespan: Optional[tuple[float, float]]
    final_state: SpectralState
    initial_supnorm: float
    x_value: Optional[float] = None
    warnings: list[str] = field(default_factory=list)
    snapshots: Optional[list[tuple[float, np.ndarray]]] = None
    checkpoint: Optional[SpectralState] = None
    config: Optional[SimConfig] = None


def _nonlinearity_hat(u_phys: RealField, p: float, scale: float) -> np.ndarray:
    return scale * np.fft.fftn(power_dealiased(u_phys, p).values)


def _advance(
    state: SpectralState,
    dt: float,
    params: ModelParams,
    nonlinearity: float,
    kv,
    u_phys: RealField,
) -> tuple[SpectralState, RealField]:
    """One step with a precomputed kernel table; returns state and field."""
    grid = state.uhat.grid
    lin_u, lin_ut = linear_solution(state.uhat, state.uthat, dt)
    if nonlinearity == 0.0:
        new = SpectralState(state.t + dt, lin_u, lin_ut)
        return new, from_spectral(new.uhat)
    n0 = _nonlinearity_hat(u_phys, params.p, nonlinearity)
    pred = SpectralField(grid, lin_u.coeffs + dt * kv.k * n0)
    n1 = _nonlinearity_hat(from_spectral(pred), params.p, nonlinearity)
    new_u = SpectralField(grid, lin_u.coeffs + 0.5 * dt * kv.k * n0)
    new_ut = SpectralField(grid, lin_ut.coeffs + 0.5 * dt * (kv.dk * n0 + n1))
    new = SpectralState(state.t + dt, new_u, new_ut)
    return new, from_spectral(new.uhat)


def step(
    state: SpectralState, dt: float, params: ModelParams, nonlinearity: float = 1.0
) -> SpectralState:
    """Single ETD2 predictor-corrector step.

    NaN/Inf in the result is not raised here; callers watch is_finite()
    (a diverging state is how blow-up announces itself).
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got dt={dt}")
    kv = khat(dt, state.uhat.grid.wavenumber_sq)
    new, _ = _advance(
        state, dt, params, nonlinearity, kv, from_spectral(state.uhat)
    )
    return new


def _record(series_rows, snapshots, state, u_phys, params, store):
    l2 = lp_norm(u_phys, 2)
    hs = sobolev_norm(u_phys, params.s, 2)
    lm = lp_norm(u_phys, params.m)
    sup = lp_norm(u_phys, np.inf)
    series_rows.append((state.t, l2, hs, lm, sup))
    if store:
        snapshots.append((state.t, u_phys.values.copy()))


def simulate(config: SimConfig) -> SimResult:
    """Integrate to t_max, blow-up or step underflow.

    Deterministic for a fixed config. Records norms every output_stride
    accepted steps. The adaptive policy halves dt when the sup-norm grows
    more than 25% in one accepted step and doubles it back (never past the
    initial dt) after 50 quiet steps.
    """
    params, grid = config.params, config.grid
    captured: list[str] = []
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        u0, u1 = generate(config.data, params, grid)
    captured.extend(str(w.message) for w in wlist)

    # propagation speed 1: wrap-around reaches the data support once
    # box < 2 (t_max + radius), contaminating long-time decay readings
    width_factor = _SUPPORT_RADIUS_WIDTHS.get(config.data.kind)
    if width_factor is not None:
        radius = width_factor * config.data.width
        needed = 2.0 * (config.t_max + radius)
        if grid.box_length < needed:
            msg = (
                f"box {grid.box_length:g} is below 2*(t_max + data radius) = "
                f"{needed:g}; periodic wrap-around can contaminate decay"
            )
            warnings.warn(msg, BoxSizeWarning, stacklevel=2)
            captured.append(msg)

    eps = params.eps
    state = SpectralState(
        0.0,
        SpectralField(grid, eps * np.fft.fftn(u0.values)),
        SpectralField(grid, eps * np.fft.fftn(u1.values)),
    )
    u_phys = RealField(grid, eps * u0.values)
    initial_sup = lp_norm(u_phys, np.inf)
    threshold = config.blowup_factor * initial_sup if initial_sup > 0 else np.inf

    xi2 = grid.wavenumber_sq
    dt = config.dt
    dt_floor = _DT_FLOOR_FACTOR * config.t_max
    kv = khat(dt, xi2)
    kv_dt = dt

    rows: list[tuple] = []
    snapshots: list[tuple[float, np.ndarray]] = []
    recent_records: deque[SpectralState] = deque(maxlen=3)
    _record(rows, snapshots, state, u_phys, params, config.store_snapshots)
    recent_records.append(state)

    status = "completed"
    lifespan = None
    accepted = 0
    quiet = 0
    prev_sup = initial_sup

    while state.t < config.t_max * (1.0 - 1e-12):
        dt_eff = min(dt, config.t_max - state.t)
        if dt_eff != kv_dt:
            kv = khat(dt_eff, xi2)
            kv_dt = dt_eff
        new_state, new_phys = _advance(
            state, dt_eff, params, config.nonlinearity, kv, u_phys
        )

        finite = new_state.is_finite()
        sup = lp_norm(new_phys, np.inf) if finite else np.inf

        if not finite:
            if config.adaptive and dt > 2 * dt_floor:
                dt = 0.5 * dt
                quiet = 0
                continue
            # non-finite at the smallest step: the state diverged
            status = "blew_up"
            lifespan = (state.t, new_state.t)
            state = new_state
            break

        if sup > threshold:
            status = "blew_up"
            lifespan = (state.t, new_state.t)
            state, u_phys = new_state, new_phys
            _record(rows, snapshots, state, u_phys, params, config.store_snapshots)
            break

        if (
            config.adaptive
            and sup > _GROWTH_LIMIT * prev_sup
            and prev_sup > 0
        ):
            if dt <= 2 * dt_floor:
                status = "step_underflow"
                state, u_phys = new_state, new_phys
                break
            dt = 0.5 * dt
            quiet = 0
            continue

        state, u_phys = new_state, new_phys
        prev_sup = sup
        accepted += 1
        quiet += 1
        if config.adaptive and quiet >= _QUIET_STEPS_TO_DOUBLE and dt < config.dt:
            dt = min(2.0 * dt, config.dt)
            quiet = 0
        if accepted % config.output_stride == 0:
            _record(rows, snapshots, state, u_phys, params, config.store_snapshots)
            recent_records.append(state)

    if rows[-1][0] < state.t and state.is_finite():
        _record(rows, snapshots, state, u_phys, params, config.store_snapshots)

    arr = np.array(rows, dtype=float)
    series = NormSeries(
        times=arr[:, 0], l2=arr[:, 1], hs_dot=arr[:, 2], lm=arr[:, 3], supnorm=arr[:, 4]
    )
    x_value, _ = weighted_tracker(series, params)
    return SimResult(
        status=status,
        norms=series,
        lifespan=lifespan,
        final_state=state,
        initial_supnorm=initial_sup,
        x_value=x_value,
        warnings=captured,
        snapshots=snapshots if config.store_snapshots else None,
        checkpoint=recent_records[0] if recent_records else None,
        config=config,
    )


def refine_lifespan(
    config: SimConfig,
    coarse_bracket: tuple[float, float],
    dt_min_target: Optional[float] = None,
    base_result: Optional[SimResult] = None,
) -> tuple[float, float]:
    """Shrink a blow-up bracket by re-running the final stretch at finer dt.

    Each round restarts from a checkpoint a few records before the coarse
    crossing and marches with dt halved again, until the detection
    interval is at most 2*dt_min_target (default: initial dt / 64). If a
    finer round never reproduces the blow-up, the last good bracket is
    returned widened by one detection interval and a
    LifespanRefinementWarning is emitted.
    """
    if dt_min_target is None:
        dt_min_target = config.dt / 64.0
    if base_result is None:
        base_result = simulate(config)
    if base_result.status != "blew_up" or base_result.checkpoint is None:
        raise ValueError("refine_lifespan needs a blown-up base run")

    params = config.params
    xi2 = config.grid.wavenumber_sq
    threshold = config.blowup_factor * base_result.initial_supnorm
    t_lo, t_hi = coarse_bracket
    horizon = t_hi + max(10 * config.dt, 0.05 * t_hi)

    dt = config.dt
    rounds = 0
    while (t_hi - t_lo) > 2.0 * dt_min_target and rounds < 60:
        dt = 0.5 * dt
        rounds += 1
        state = base_result.checkpoint
        u_phys = from_spectral(state.uhat)
        step_dt = dt
        kv = khat(step_dt, xi2)
        crossed = False
        dt_floor = _DT_FLOOR_FACTOR * config.t_max
        while state.t < horizon:
            new_state, new_phys = _advance(
                state, step_dt, params, config.nonlinearity, kv, u_phys
            )
            finite = new_state.is_finite()
            sup = lp_norm(new_phys, np.inf) if finite else np.inf
            if not finite and step_dt > 2 * dt_floor:
                step_dt *= 0.5
                kv = khat(step_dt, xi2)
                continue
            if sup > threshold or not finite:
                t_lo, t_hi = state.t, new_state.t
                crossed = True
                break
            if config.adaptive and sup > _GROWTH_LIMIT * lp_norm(u_phys, np.inf):
                if step_dt > 2 * dt_floor:
                    step_dt *= 0.5
                    kv = khat(step_dt, xi2)
                    continue
            state, u_phys = new_state, new_phys
        if not crossed:
            widened = (t_lo, t_hi + (t_hi - t_lo))
            warnings.warn(
                f"refinement round with dt={dt:g} did not reproduce blow-up "
                f"before t={horizon:g}; returning widened bracket",
                LifespanRefinementWarning,
                stacklevel=2,
            )
            return widened
    return (t_lo, t_hi)
