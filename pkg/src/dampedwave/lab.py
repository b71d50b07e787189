"""Experiment layer built on the integrator.

Four jobs live here: closed-form exponent tables for the model, power-law
fits of recorded norm histories, lifespan sweeps over the data amplitude,
and the compactly supported space-time test functions whose pairing with
the solution certifies the blow-up scaling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .initial_data import generate
from .norms import ModelParams, NormSeries
from .spectral import Grid, RealField
from .timestepper import SimConfig, SimResult, refine_lifespan, simulate

__all__ = [
    "ExponentTable",
    "exponent_table",
    "exponent_table_values",
    "gamma_bar",
    "fit_decay",
    "LifespanRecord",
    "SweepResult",
    "lifespan_sweep",
    "TestFunctionPair",
    "build_test_functions",
    "property3_constants",
    "blowup_functional",
    "weak_identity",
    "data_term_profile",
]


# ------------------------- exponent formulas -------------------------


def gamma_bar(m: float, n: int) -> float:
    """Positive root of m x^2 + n x - 2n = 0.

    Below this value of gamma the critical exponent sits strictly above
    the secondary threshold p1 = 1 + m gamma / n; at it they coincide.
    """
    if not (1.0 < m <= 2.0):
        raise ValueError(f"m must lie in (1, 2], got m={m}")
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError(f"n must be a positive integer, got n={n}")
    return (math.sqrt(n * n + 8.0 * m * n) - n) / (2.0 * m)


@dataclass(frozen=True)
class ExponentTable:
    """The model's closed-form exponents for one parameter point.

    lifespan_exp is None at or above the critical exponent, where no
    finite lifespan scaling is predicted.
    """

    p_crit: float
    p1: float
    gamma_bar: float
    beta_m: float
    decay_l2: float
    decay_hs: float
    decay_lm: float
    lifespan_exp: Optional[float]


def exponent_table_values(
    n: int, m: float, gamma: float, p: float, s: float = 2.0
) -> ExponentTable:
    """Exponent table from raw numbers.

    Unlike ModelParams this accepts any spatial dimension n >= 1, so the
    formulas can be tabulated beyond the simulable range.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError(f"n must be a positive integer, got n={n}")
    if not (1.0 < m <= 2.0):
        raise ValueError(f"m must lie in (1, 2], got m={m}")
    bound = n * (m - 1.0) / m
    if not (0.0 <= gamma < bound):
        raise ValueError(
            f"gamma must lie in [0, n(m-1)/m) = [0, {bound:g}), got gamma={gamma}"
        )
    if not p > 1.0:
        raise ValueError(f"p must exceed 1, got p={p}")
    if not (1.0 < s <= 2.0):
        raise ValueError(f"s must lie in (1, 2], got s={s}")
    p_crit = 1.0 + 2.0 * m / (n + m * gamma)
    p1 = 1.0 + m * gamma / n
    beta_m = (n - 1.0) * (1.0 / m - 0.5)
    decay_l2 = -0.5 * n * (1.0 / m - 0.5) - 0.5 * gamma
    decay_hs = decay_l2 - 0.5 * s
    decay_lm = -0.5 * gamma
    if p < p_crit:
        denom = 2.0 - (n / m + gamma) * (p - 1.0)
        lifespan_exp = -2.0 * (p - 1.0) / denom
    else:
        lifespan_exp = None
    return ExponentTable(
        p_crit=p_crit,
        p1=p1,
        gamma_bar=gamma_bar(m, n),
        beta_m=beta_m,
        decay_l2=decay_l2,
        decay_hs=decay_hs,
        decay_lm=decay_lm,
        lifespan_exp=lifespan_exp,
    )


def exponent_table(params: ModelParams) -> ExponentTable:
    return exponent_table_values(params.n, params.m, params.gamma, params.p, params.s)


# ------------------------- decay fitting -------------------------

_FIT_SERIES = ("l2", "hs_dot", "lm", "supnorm")


def fit_decay(
    series: NormSeries,
    which: str,
    window: Optional[tuple[float, float]] = None,
) -> tuple[float, float, float]:
    """Least-squares line through (log(1+t), log norm) inside the window.

    Returns (slope, intercept, r_squared). The default window skips the
    first tenth of the run (transients) and the last fifth (when the box
    era begins to matter).
    """
    if which not in _FIT_SERIES:
        raise ValueError(f"which must be one of {_FIT_SERIES}, got {which!r}")
    t = series.times
    values = getattr(series, which)
    if window is None:
        window = (t[-1] / 10.0, 0.8 * t[-1])
    t_a, t_b = window
    if not t_a < t_b:
        raise ValueError(f"window must satisfy t_a < t_b, got ({t_a}, {t_b})")
    mask = (t >= t_a) & (t <= t_b)
    if int(mask.sum()) < 10:
        raise ValueError(
            f"need at least 10 samples in window ({t_a:g}, {t_b:g}), "
            f"got {int(mask.sum())}"
        )
    vals = values[mask]
    if np.any(vals <= 0.0):
        raise ValueError("norm values in the fit window must be positive")
    x = np.log1p(t[mask])
    y = np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)


# ------------------------- lifespan sweeps -------------------------


@dataclass(frozen=True)
class LifespanRecord:
    eps: float
    p: float
    t_lo: float
    t_hi: float
    status: str

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.t_lo + self.t_hi)

    @property
    def width(self) -> float:
        return self.t_hi - self.t_lo


@dataclass
class SweepResult:
    """Lifespan sweep with its two fits.

    slope compares against target (the closed-form lifespan exponent).
    log_corrected_slope regresses log T on log(eps) - log(log(1/eps)),
    the upper-bound shape, and is also comparable to target; it is
    reported, never asserted.
    """

    records: list[LifespanRecord]
    slope: float
    intercept: float
    r2: float
    target: float
    log_corrected_slope: float
    log_corrected_intercept: float
    excluded_eps: list[float]


def lifespan_sweep(
    template: SimConfig,
    eps_list: Sequence[float],
    dt_min_target: Optional[float] = None,
    threads: Optional[int] = None,
) -> SweepResult:
    """Run one simulation per amplitude and fit log T against log eps.

    Amplitudes must span at least a decade with at least five points and
    a subcritical exponent. Runs that complete without blow-up are kept
    in the records (censored at t_max) but excluded from the fit, as is
    the largest amplitude when its bracket is wider than 5% of T.
    """
    table = exponent_table(template.params)
    if table.lifespan_exp is None:
        raise ValueError(
            f"lifespan sweep needs a subcritical exponent, got p={template.params.p}"
            f" >= p_crit={table.p_crit:g}"
        )
    eps = sorted(float(e) for e in eps_list)
    if len(eps) < 5:
        raise ValueError(f"need at least 5 amplitudes, got {len(eps)}")
    if not eps[0] > 0:
        raise ValueError(f"amplitudes must be positive, got {eps[0]}")
    if eps[-1] / eps[0] < 10.0 * (1.0 - 1e-12):
        raise ValueError(
            f"amplitudes must span at least one decade, got ratio "
            f"{eps[-1] / eps[0]:g}"
        )

    def run_one(e: float) -> LifespanRecord:
        cfg = replace(template, params=replace(template.params, eps=e))
        res = simulate(cfg)
        if res.status != "blew_up":
            return LifespanRecord(e, cfg.params.p, cfg.t_max, cfg.t_max, res.status)
        t_lo, t_hi = refine_lifespan(
            cfg, res.lifespan, dt_min_target=dt_min_target, base_result=res
        )
        return LifespanRecord(e, cfg.params.p, t_lo, t_hi, "blew_up")

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run_one, eps))
    else:
        records = [run_one(e) for e in eps]

    excluded = [r.eps for r in records if r.status != "blew_up"]
    fit_records = [r for r in records if r.status == "blew_up"]
    if fit_records and fit_records[-1].width > 0.05 * fit_records[-1].midpoint:
        excluded.append(fit_records[-1].eps)
        fit_records = fit_records[:-1]
    if len(fit_records) < 3:
        raise ValueError(
            f"only {len(fit_records)} usable blow-up points; cannot fit"
        )

    le = np.log([r.eps for r in fit_records])
    lt = np.log([r.midpoint for r in fit_records])
    slope, intercept = np.polyfit(le, lt, 1)
    fitted = slope * le + intercept
    ss_res = float(np.sum((lt - fitted) ** 2))
    ss_tot = float(np.sum((lt - lt.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    x_lc = le - np.log(np.log(1.0 / np.exp(le)))
    lc_slope, lc_intercept = np.polyfit(x_lc, lt, 1)
    return SweepResult(
        records=records,
        slope=float(slope),
        intercept=float(intercept),
        r2=float(r2),
        target=table.lifespan_exp,
        log_corrected_slope=float(lc_slope),
        log_corrected_intercept=float(lc_intercept),
        excluded_eps=excluded,
    )


# ------------------------- test functions -------------------------


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def _smoothstep_d1(x: np.ndarray) -> np.ndarray:
    inside = (x > 0.0) & (x < 1.0)
    xc = np.clip(x, 0.0, 1.0)
    return np.where(inside, 30.0 * xc * xc * (1.0 - xc) ** 2, 0.0)


def _smoothstep_d2(x: np.ndarray) -> np.ndarray:
    inside = (x > 0.0) & (x < 1.0)
    xc = np.clip(x, 0.0, 1.0)
    return np.where(inside, 60.0 * xc * (2.0 * xc - 1.0) * (xc - 1.0), 0.0)


@dataclass(frozen=True)
class TimeProfile:
    """eta(t): 1 on [0, R^2/2], smoothstep^ell ramp down to 0 at R^2."""

    R: float
    ell: int

    def _base(self, t: np.ndarray) -> np.ndarray:
        return (self.R**2 - np.asarray(t, dtype=float)) / (0.5 * self.R**2)

    def value(self, t) -> np.ndarray:
        return _smoothstep(self._base(t)) ** self.ell

    def d1(self, t) -> np.ndarray:
        arg = self._base(t)
        y = _smoothstep(arg)
        darg = -2.0 / self.R**2
        return self.ell * y ** (self.ell - 1) * _smoothstep_d1(arg) * darg

    def d2(self, t) -> np.ndarray:
        arg = self._base(t)
        y = _smoothstep(arg)
        darg = -2.0 / self.R**2
        first = _smoothstep_d1(arg) * darg
        return self.ell * (self.ell - 1) * y ** (self.ell - 2) * first**2 + (
            self.ell * y ** (self.ell - 1) * _smoothstep_d2(arg) * darg**2
        )


@dataclass(frozen=True)
class TestFunctionPair:
    """Space-time cutoff Phi(t,x) = eta(t) phi(x) and its pieces.

    phi_lap holds the analytically computed Laplacian of phi, so the
    pairing integrals never need a discrete derivative of the cutoff.
    """

    ell: int
    R: float
    eta: TimeProfile
    phi: RealField
    phi_lap: RealField


def build_test_functions(
    p: float, R: float, grid: Grid, horizon: float
) -> TestFunctionPair:
    """Construct the cutoff pair at scale R on the given grid.

    The smoothstep power ell = ceil(2 p') + 1 makes the negative-power
    expressions of the pairing argument bounded (the -2 in the exponent
    budget comes from the two derivatives).
    """
    if not p > 1.0:
        raise ValueError(f"p must exceed 1, got p={p}")
    if not R >= 1.0:
        raise ValueError(f"R must be at least 1, got R={R}")
    if R > grid.box_length / 4.0:
        raise ValueError(
            f"R={R:g} too large for box {grid.box_length:g}; need R <= box/4"
        )
    if horizon < R * R:
        raise ValueError(
            f"time horizon {horizon:g} shorter than R^2 = {R * R:g}"
        )
    p_prime = p / (p - 1.0)
    ell = int(math.ceil(2.0 * p_prime)) + 1

    center = (grid.box_length / 2.0,) * grid.dim
    r = grid.periodic_distance(center)
    arg = (R - r) / (0.5 * R)
    y = _smoothstep(arg)
    phi = y**ell
    darg = -2.0 / R
    g1 = ell * y ** (ell - 1) * _smoothstep_d1(arg) * darg
    g2 = ell * (ell - 1) * y ** (ell - 2) * (_smoothstep_d1(arg) * darg) ** 2 + (
        ell * y ** (ell - 1) * _smoothstep_d2(arg) * darg**2
    )
    ramp = (arg > 0.0) & (arg < 1.0)
    # radial Laplacian; the ramp sits at r in (R/2, R), so r never vanishes
    with np.errstate(divide="ignore", invalid="ignore"):
        lap = np.where(ramp, g2 + (grid.dim - 1.0) * g1 / np.where(ramp, r, 1.0), 0.0)
    return TestFunctionPair(
        ell=ell,
        R=float(R),
        eta=TimeProfile(R=float(R), ell=ell),
        phi=RealField(grid, phi),
        phi_lap=RealField(grid, lap),
    )


def property3_constants(pair: TestFunctionPair, p: float) -> tuple[float, float]:
    """Max of the two negative-power boundedness expressions.

    Returns (time constant, space constant): the grid maxima of
    eta^(-p'/p) (|eta'|^p' + |eta''|^p') and phi^(-p'/p) |lap phi|^p'.
    Both tend to 0 at the support edge by the choice of ell, so the max
    is attained inside and is refinement-stable.
    """
    p_prime = p / (p - 1.0)
    t = np.linspace(0.0, pair.R**2, 4001)
    eta = pair.eta.value(t)
    d1 = np.abs(pair.eta.d1(t)) ** p_prime
    d2 = np.abs(pair.eta.d2(t)) ** p_prime
    with np.errstate(divide="ignore", invalid="ignore"):
        eta_expr = np.where(eta > 0.0, eta ** (-p_prime / p) * (d1 + d2), 0.0)
    phi = pair.phi.values
    lap = np.abs(pair.phi_lap.values) ** p_prime
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_expr = np.where(phi > 0.0, phi ** (-p_prime / p) * lap, 0.0)
    return float(np.max(eta_expr)), float(np.max(phi_expr))


# ------------------------- pairing functionals -------------------------


def _snapshot_sums(result: SimResult, pair: TestFunctionPair, p: float):
    """Per-snapshot space integrals against phi and lap(phi)."""
    if result.snapshots is None:
        raise ValueError("run stored no snapshots; set store_snapshots")
    grid = pair.phi.grid
    r_sq = pair.R**2
    if result.final_state.t + 1e-9 < r_sq:
        raise ValueError(
            f"run covers t up to {result.final_state.t:g}, "
            f"but the functional needs [0, R^2] = [0, {r_sq:g}]"
        )
    times = []
    pow_sums = []
    phi_sums = []
    lap_sums = []
    vol = grid.cell_volume
    phi = pair.phi.values
    lap = pair.phi_lap.values
    for t_k, u_k in result.snapshots:
        if t_k > r_sq + 1e-12:
            break
        times.append(t_k)
        pow_sums.append(float(np.sum(np.abs(u_k) ** p * phi)) * vol)
        phi_sums.append(float(np.sum(u_k * phi)) * vol)
        lap_sums.append(float(np.sum(u_k * lap)) * vol)
    times = np.array(times)
    gaps = np.diff(times)
    required = r_sq / 200.0
    if gaps.size == 0 or np.max(gaps) > required + 1e-12:
        worst = float(np.max(gaps)) if gaps.size else float("inf")
        raise ValueError(
            f"snapshot stride {worst:g} too coarse for R={pair.R:g}; "
            f"need stride <= R^2/200 = {required:g}"
        )
    if times[-1] < r_sq:
        # all three time weights vanish at R^2, so close the lattice
        # with an exact zero row
        times = np.append(times, r_sq)
        pow_sums.append(0.0)
        phi_sums.append(0.0)
        lap_sums.append(0.0)
    return times, np.array(pow_sums), np.array(phi_sums), np.array(lap_sums)


def _trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def _holder_factor(pair: TestFunctionPair, p: float, nt: int = 801) -> float:
    """(Integral of Phi^(-p'/p) |(d_t^2 - d_t - lap) Phi|^p')^(1/p')."""
    p_prime = p / (p - 1.0)
    grid = pair.phi.grid
    vol = grid.cell_volume
    phi = pair.phi.values
    lap = pair.phi_lap.values
    t = np.linspace(0.0, pair.R**2, nt)
    space = np.zeros(nt)
    for k, t_k in enumerate(t):
        eta = float(pair.eta.value(t_k))
        e1 = float(pair.eta.d1(t_k))
        e2 = float(pair.eta.d2(t_k))
        big_phi = eta * phi
        operator = (e2 - e1) * phi - eta * lap
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = np.where(
                big_phi > 0.0,
                big_phi ** (-p_prime / p) * np.abs(operator) ** p_prime,
                0.0,
            )
        space[k] = float(np.sum(integrand)) * vol
    return _trapezoid(space, t) ** (1.0 / p_prime)


def blowup_functional(
    result: SimResult, pair: TestFunctionPair, params: ModelParams
) -> tuple[float, float, float]:
    """Pairing functional, data term and its Holder majorant.

    Returns (I_R, data_term, rhs_bound) with
      I_R       = integral of |u|^p Phi over [0, R^2] x box,
      data_term = eps * integral of (u0 + u1) phi,
      rhs_bound = I_R^(1/p) * H(Phi),
    H(Phi) being the full quadrature of the negative-power pairing
    constant (it scales like R^((n+2)/p' - 2) by construction).
    """
    p = params.p
    times, pow_sums, _, _ = _snapshot_sums(result, pair, p)
    eta = pair.eta.value(times)
    i_r = _trapezoid(pow_sums * eta, times)

    if result.config is None:
        raise ValueError("result carries no config; cannot rebuild the data")
    u0, u1 = generate(result.config.data, params, pair.phi.grid)
    vol = pair.phi.grid.cell_volume
    data_term = params.eps * float(
        np.sum((u0.values + u1.values) * pair.phi.values)
    ) * vol

    rhs_bound = i_r ** (1.0 / p) * _holder_factor(pair, p)
    return float(i_r), float(data_term), float(rhs_bound)


def weak_identity(
    result: SimResult, pair: TestFunctionPair, params: ModelParams
) -> tuple[float, float]:
    """Both sides of the integrated pairing identity.

    lhs = I_R + data_term, rhs = integral of u (d_t^2 - d_t - lap) Phi,
    both from the same stored snapshots, so agreement is limited only by
    the scheme and quadrature orders.
    """
    p = params.p
    times, pow_sums, phi_sums, lap_sums = _snapshot_sums(result, pair, p)
    eta = pair.eta.value(times)
    e1 = pair.eta.d1(times)
    e2 = pair.eta.d2(times)
    i_r = _trapezoid(pow_sums * eta, times)

    if result.config is None:
        raise ValueError("result carries no config; cannot rebuild the data")
    u0, u1 = generate(result.config.data, params, pair.phi.grid)
    vol = pair.phi.grid.cell_volume
    data_term = params.eps * float(
        np.sum((u0.values + u1.values) * pair.phi.values)
    ) * vol

    rhs = _trapezoid((e2 - e1) * phi_sums - eta * lap_sums, times)
    return float(i_r + data_term), float(rhs)


def data_term_profile(
    params: ModelParams,
    data,
    grid: Grid,
    r_values: Sequence[float],
    horizon: Optional[float] = None,
) -> np.ndarray:
    """data_term as a function of the cutoff scale R (no simulation)."""
    u0, u1 = generate(data, params, grid)
    combined = u0.values + u1.values
    vol = grid.cell_volume
    out = []
    for r_val in r_values:
        h = horizon if horizon is not None else r_val * r_val
        pair = build_test_functions(params.p, r_val, grid, h)
        out.append(params.eps * float(np.sum(combined * pair.phi.values)) * vol)
    return np.array(out)
