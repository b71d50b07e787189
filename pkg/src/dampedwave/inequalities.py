"""Randomized stress tests of the interpolation and kernel estimates.

Each check computes the ratio LHS/RHS of one estimate on one sample
field, using the package norms throughout. A campaign draws a
reproducible family of random fields, records the worst ratio, and
repeats on a refined grid: a genuine hidden constant shows up as a
bounded, grid-stable ratio, while a discretization artifact moves with
the grid.

The checks cover the fractional Gagliardo-Nirenberg interpolation, the
fractional chain rule for |u|^p, the Hardy-Littlewood-Sobolev bound for
negative-order norms, and the low-frequency kernel decay estimate with
its smooth cutoff chi_L.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .norms import ModelParams, lp_norm, sobolev_norm, weighted_tracker, y_functional
from .spectral import (
    Grid,
    RealField,
    apply_multiplier,
    from_spectral,
    make_grid,
    power_dealiased,
    to_spectral,
)
from .timestepper import SimResult

__all__ = [
    "InequalityReport",
    "BumpSum",
    "draw_sample",
    "check_gn",
    "check_chain_rule",
    "check_hls",
    "check_kernel_decay",
    "composite_trajectory",
    "run_campaign",
]


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def _low_cutoff(eps_star: float):
    """chi_L(rho): 1 below eps_star/2, 0 above eps_star, C^2 ramp."""
    if not eps_star > 0.0:
        raise ValueError(f"eps_star must be positive, got {eps_star}")
    return lambda rho: _smoothstep((eps_star - rho) / (0.5 * eps_star))


def _ratio(lhs: float, rhs: float) -> float:
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else math.inf
    return lhs / rhs


def check_gn(
    u: RealField, theta: float, a: float, p: float, p0: float, p1: float
) -> float:
    """Interpolation ratio |u|_{H^theta_p} / (|u|_{p0}^(1-w) |u|_{H^a_p1}^w).

    The weight w = (1/p0 - 1/p + theta/n)/(1/p0 - 1/p1 + a/n) must land
    in [theta/a, 1]; outside that window the estimate does not apply and
    the exponent set is rejected.
    """
    n = u.grid.dim
    for name, val in (("p", p), ("p0", p0), ("p1", p1)):
        if not (1.0 < val < math.inf):
            raise ValueError(f"{name} must lie in (1, inf), got {val}")
    if not a > 0.0:
        raise ValueError(f"a must be positive, got a={a}")
    if not 0.0 <= theta < a:
        raise ValueError(f"theta must lie in [0, a), got theta={theta}, a={a}")
    omega = (1.0 / p0 - 1.0 / p + theta / n) / (1.0 / p0 - 1.0 / p1 + a / n)
    if not (theta / a <= omega <= 1.0):
        raise ValueError(
            f"exponent configuration gives weight {omega:g} outside "
            f"[theta/a, 1] = [{theta / a:g}, 1]"
        )
    lhs = sobolev_norm(u, theta, p)
    low = lp_norm(u, p0)
    if omega == 0.0:
        rhs = low
    elif omega == 1.0:
        rhs = sobolev_norm(u, a, p1)
    else:
        rhs = low ** (1.0 - omega) * sobolev_norm(u, a, p1) ** omega
    return _ratio(lhs, rhs)


def check_chain_rule(
    u: RealField, p: float, s: float, r: float, r1: float, r2: float
) -> float:
    """Chain-rule ratio ||u|^p|_{H^s_r} / (|u|_{r1}^(p-1) |u|_{H^s_r2})."""
    if not s > 0.0:
        raise ValueError(f"s must be positive, got s={s}")
    if not p > math.ceil(s):
        raise ValueError(f"p must exceed ceil(s) = {math.ceil(s)}, got p={p}")
    for name, val in (("r", r), ("r1", r1), ("r2", r2)):
        if not (1.0 < val < math.inf):
            raise ValueError(f"{name} must lie in (1, inf), got {val}")
    if abs(1.0 / r - ((p - 1.0) / r1 + 1.0 / r2)) > 1e-12:
        raise ValueError(
            f"exponents must satisfy 1/r = (p-1)/r1 + 1/r2, got "
            f"1/{r:g} vs (p-1)/{r1:g} + 1/{r2:g}"
        )
    big_f = power_dealiased(u, p)
    lhs = sobolev_norm(big_f, s, r)
    rhs = lp_norm(u, r1) ** (p - 1.0) * sobolev_norm(u, s, r2)
    return _ratio(lhs, rhs)


def check_hls(u: RealField, gamma: float, theta1: float) -> float:
    """Negative-order ratio |u|_{H^-gamma_theta2} / |u|_{theta1}.

    theta2 comes from 1/theta2 = 1/theta1 - gamma/n. The sample must be
    zero-mean: the negative-order norm is defined modulo constants, so a
    nonzero mean would make the comparison meaningless.
    """
    n = u.grid.dim
    if not 0.0 <= gamma < n:
        raise ValueError(f"gamma must lie in [0, n) = [0, {n}), got {gamma}")
    if not (1.0 < theta1 < math.inf):
        raise ValueError(f"theta1 must lie in (1, inf), got {theta1}")
    inv = 1.0 / theta1 - gamma / n
    if not inv > 0.0:
        raise ValueError(
            f"exponent relation gives 1/theta2 = {inv:g} <= 0; "
            f"reduce gamma or theta1"
        )
    scale = float(np.max(np.abs(u.values)))
    mean = float(np.mean(u.values))
    if scale > 0.0 and abs(mean) > 1e-10 * scale:
        raise ValueError(
            f"sample must be zero-mean, got mean {mean:g} at scale {scale:g}"
        )
    theta2 = 1.0 / inv
    lhs = sobolev_norm(u, -gamma, theta2)
    rhs = lp_norm(u, theta1)
    return _ratio(lhs, rhs)


def check_kernel_decay(
    h: RealField,
    alpha: float,
    beta: float,
    m: float,
    q: float,
    t_values: Sequence[float],
    eps_star: float = 0.25,
) -> np.ndarray:
    """Ratios of the low-frequency kernel norm to its decay envelope.

    For each t the LHS is |F^-1(|xi|^alpha e^(-|xi|^beta t) h^ chi_L)|_q
    and the envelope is (1+t)^(-n/beta (1/m - 1/q) - alpha/beta) times
    |chi_L(|D|) h|_m. Disallowed exponent combinations (m = q with
    alpha = 0; insufficient integrability for alpha in (-1, 0)) are
    rejected.
    """
    n = h.grid.dim
    if not alpha > -1.0:
        raise ValueError(f"alpha must exceed -1, got alpha={alpha}")
    if not beta > 0.0:
        raise ValueError(f"beta must be positive, got beta={beta}")
    if not (1.0 <= m <= q):
        raise ValueError(f"need 1 <= m <= q, got m={m}, q={q}")
    if alpha == 0.0 and not m < q:
        raise ValueError(f"m < q is required when alpha = 0, got m={m}, q={q}")
    inv_m = 0.0 if m == math.inf else 1.0 / m
    inv_q = 0.0 if q == math.inf else 1.0 / q
    if alpha < 0.0 and inv_m - inv_q < -alpha / n - 1e-12:
        raise ValueError(
            f"alpha in (-1, 0) needs 1/m - 1/q >= {-alpha / n:g}, "
            f"got {inv_m - inv_q:g}"
        )
    t_arr = np.asarray(t_values, dtype=float)
    if t_arr.size == 0 or np.any(t_arr < 0.0):
        raise ValueError("t_values must be nonempty and nonnegative")

    chi = _low_cutoff(eps_star)
    hhat = to_spectral(h)
    rhs = lp_norm(from_spectral(apply_multiplier(hhat, chi)), m)
    env_exp = -n / beta * (inv_m - inv_q) - alpha / beta
    ratios = np.empty(t_arr.size)
    for i, t in enumerate(t_arr):
        lhs = lp_norm(
            from_spectral(
                apply_multiplier(
                    hhat,
                    lambda rho: rho**alpha * np.exp(-(rho**beta) * t) * chi(rho),
                )
            ),
            q,
        )
        ratios[i] = _ratio(lhs, (1.0 + t) ** env_exp * rhs)
    return ratios


def composite_trajectory(
    result: SimResult, params: ModelParams
) -> tuple[np.ndarray, np.ndarray]:
    """Composite-estimate ratios Y(|u|^p)(t) / X(t)^p along a stored run.

    Diagnostic only: the constant in the composite estimate depends on
    interpolation choices internal to the proofs, so no bound is
    asserted on this ratio anywhere in the suite.
    """
    if result.snapshots is None:
        raise ValueError("run stored no snapshots; set store_snapshots")
    if len(result.snapshots) != len(result.norms):
        raise ValueError("snapshot and norm records disagree; cannot align")
    grid = result.final_state.uhat.grid
    _, weighted = weighted_tracker(result.norms, params)
    x_running = np.maximum.accumulate(weighted.sum(axis=0))
    times = np.array([t for t, _ in result.snapshots])
    ratios = np.empty(times.size)
    for k, (t_k, u_k) in enumerate(result.snapshots):
        big_f = power_dealiased(RealField(grid, u_k), params.p)
        ratios[k] = _ratio(
            y_functional(big_f, t_k, params), x_running[k] ** params.p
        )
    return times, ratios


# ------------------------- sample family -------------------------


@dataclass(frozen=True)
class BumpSum:
    """Parameters of one random sample: a sum of modulated Gaussians.

    Parameters live in physical units, so the same sample renders on
    every level of a grid ladder sharing a box.
    """

    amplitudes: tuple[float, ...]
    centers: tuple[tuple[float, ...], ...]
    widths: tuple[float, ...]
    wavevectors: tuple[tuple[float, ...], ...]
    phases: tuple[float, ...]

    def render(self, grid: Grid) -> RealField:
        total = np.zeros(grid.shape)
        for amp, center, width, wavevec, phase in zip(
            self.amplitudes, self.centers, self.widths, self.wavevectors, self.phases
        ):
            deltas = grid.periodic_deltas(center)
            r_sq = sum(d**2 for d in deltas)
            carrier = sum(k * d for k, d in zip(wavevec, deltas)) + phase
            total = total + amp * np.cos(carrier) * np.exp(-r_sq / (2.0 * width**2))
        # zero-mean corrected: the negative-order norms need a vanishing
        # zero mode
        return RealField(grid, total - np.mean(total))


def draw_sample(rng: np.random.Generator, box_length: float, dim: int) -> BumpSum:
    """1-5 randomly placed, scaled, modulated Gaussians."""
    count = int(rng.integers(1, 6))
    k_max = 32.0 * math.pi / box_length
    amplitudes = []
    centers = []
    widths = []
    wavevectors = []
    phases = []
    for _ in range(count):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        amplitudes.append(sign * float(rng.uniform(0.2, 2.0)))
        centers.append(tuple(float(c) for c in rng.uniform(0.0, box_length, dim)))
        # narrow enough to be periodization-safe, wide enough to resolve
        widths.append(float(rng.uniform(box_length / 50.0, box_length / 12.0)))
        wavevectors.append(tuple(float(k) for k in rng.uniform(-k_max, k_max, dim)))
        phases.append(float(rng.uniform(0.0, 2.0 * math.pi)))
    return BumpSum(
        amplitudes=tuple(amplitudes),
        centers=tuple(centers),
        widths=tuple(widths),
        wavevectors=tuple(wavevectors),
        phases=tuple(phases),
    )


# ------------------------- campaign -------------------------


@dataclass(frozen=True)
class InequalityReport:
    name: str
    samples: int
    max_ratio: float
    ratio_at_refined_grid: float
    violation_count: int
    seed: int


_CHECK_NAMES = ("gn", "chain_rule", "hls", "kernel_decay")
_CAMPAIGN_T = (1.0, 3.0, 10.0, 30.0)


def _campaign_ratios(u: RealField, eps_star: float) -> tuple[float, ...]:
    """The four canonical check ratios for one rendered sample."""
    return (
        check_gn(u, theta=0.5, a=1.0, p=2.0, p0=2.0, p1=2.0),
        check_chain_rule(u, p=2.0, s=1.0, r=2.0, r1=4.0, r2=4.0),
        check_hls(u, gamma=0.5, theta1=1.5),
        float(
            np.max(
                check_kernel_decay(
                    u, alpha=0.0, beta=2.0, m=1.0, q=2.0,
                    t_values=_CAMPAIGN_T, eps_star=eps_star,
                )
            )
        ),
    )


def run_campaign(
    seed: int,
    count: int,
    grids: Optional[Sequence[Grid]] = None,
    threads: Optional[int] = None,
    eps_star: float = 0.25,
    cap: float = math.inf,
) -> list[InequalityReport]:
    """Worst check ratios over a reproducible random sample family.

    Sample i is drawn from a generator seeded by (seed, i), so growing
    count extends the family instead of reshuffling it, and reports are
    identical for a fixed seed regardless of thread count. max_ratio is
    taken on the first grid of the ladder, ratio_at_refined_grid on the
    last; violation_count counts first-grid ratios above cap.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if grids is None:
        grids = (make_grid(1, 256, 40.0), make_grid(1, 512, 40.0))
    grids = tuple(grids)
    if not grids:
        raise ValueError("grid ladder must contain at least one grid")
    box, dim = grids[0].box_length, grids[0].dim
    if any(g.box_length != box or g.dim != dim for g in grids):
        raise ValueError("grid ladder must share box length and dimension")

    def run_one(i: int) -> np.ndarray:
        sample = draw_sample(np.random.default_rng([seed, i]), box, dim)
        out = np.empty((len(_CHECK_NAMES), len(grids)))
        for level, grid in enumerate(grids):
            out[:, level] = _campaign_ratios(sample.render(grid), eps_star)
        return out

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_sample = list(pool.map(run_one, range(count)))
    else:
        per_sample = [run_one(i) for i in range(count)]
    ratios = np.stack(per_sample)  # (sample, check, level)

    reports = []
    for j, name in enumerate(_CHECK_NAMES):
        base = ratios[:, j, 0]
        reports.append(
            InequalityReport(
                name=name,
                samples=count,
                max_ratio=float(np.max(base)),
                ratio_at_refined_grid=float(np.max(ratios[:, j, -1])),
                violation_count=int(np.sum(base > cap)),
                seed=seed,
            )
        )
    return reports
