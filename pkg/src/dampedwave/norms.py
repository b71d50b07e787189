"""Lebesgue and homogeneous Sobolev norms, plus weighted decay functionals.

The weighted functionals implement the solution-space bookkeeping used for
decay tracking: at each sample time the L^2, homogeneous H^s and L^m norms
are multiplied by powers of (1+t) whose exponents are the model's predicted
decay rates, so a solution decaying at exactly the predicted rate produces
flat weighted series and a finite sup.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .spectral import RealField, apply_multiplier, from_spectral, to_spectral

__all__ = [
    "ModelParams",
    "NormSeries",
    "lp_norm",
    "sobolev_norm",
    "weighted_tracker",
    "decay_weight_exponents",
    "y_functional",
]


@dataclass(frozen=True)
class ModelParams:
    """Model and data-class parameters.

    n: spatial dimension (1..3)
    m: Lebesgue regularity exponent of the data, in (1, 2]
    gamma: negative-order regularity, in [0, n(m-1)/m)
    p: nonlinearity exponent, > 1
    s: energy regularity, in (1, 2]
    eps: data amplitude, >= 0 (0 is the degenerate zero-data control)
    """

    n: int
    m: float
    gamma: float
    p: float
    s: float = 2.0
    eps: float = 1.0

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"n must be 1, 2 or 3, got n={self.n}")
        if not (1.0 < self.m <= 2.0):
            raise ValueError(f"m must lie in (1, 2], got m={self.m}")
        bound = self.n * (self.m - 1.0) / self.m
        if not (0.0 <= self.gamma < bound):
            raise ValueError(
                f"gamma must lie in [0, n(m-1)/m) = [0, {bound:g}), got gamma={self.gamma}"
            )
        if not self.p > 1.0:
            raise ValueError(f"p must exceed 1, got p={self.p}")
        if not (1.0 < self.s <= 2.0):
            raise ValueError(f"s must lie in (1, 2], got s={self.s}")
        if not self.eps >= 0.0:
            raise ValueError(f"eps must be nonnegative, got eps={self.eps}")


@dataclass
class NormSeries:
    """Norm histories sampled along a run.

    x_weighted holds the three decay-weighted series (rows: L^2, H^s-dot,
    L^m) once weighted_tracker has run; it stays None before that.
    """

    times: np.ndarray
    l2: np.ndarray
    hs_dot: np.ndarray
    lm: np.ndarray
    supnorm: np.ndarray
    x_weighted: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        for name in ("l2", "hs_dot", "lm", "supnorm"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != self.times.shape:
                raise ValueError(f"{name} length does not match times")
            setattr(self, name, arr)
        if self.times.size and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size


def lp_norm(f: RealField, q: float) -> float:
    """Quadrature-weighted L^q norm; q = inf gives max |value|."""
    if q == np.inf:
        return float(np.max(np.abs(f.values)))
    if not q >= 1.0:
        raise ValueError(f"q must be >= 1 or inf, got q={q}")
    total = np.sum(np.abs(f.values) ** q) * f.grid.cell_volume
    return float(total ** (1.0 / q))


def sobolev_norm(f: RealField, a: float, q: float) -> float:
    """Homogeneous Sobolev norm |||D|^a f||_{L^q}.

    Negative orders drop the zero mode (the norm is defined modulo
    constants); a = 0 short-circuits so the identity with lp_norm is exact
    rather than up-to-roundtrip.
    """
    if a == 0.0:
        return lp_norm(f, q)
    filtered = apply_multiplier(to_spectral(f), lambda r: r**a)
    return lp_norm(from_spectral(filtered), q)


def decay_weight_exponents(params: ModelParams) -> tuple[float, float, float]:
    """(1+t) exponents for the weighted L^2, H^s-dot and L^m series."""
    base = 0.5 * params.n * (1.0 / params.m - 0.5)
    return (
        base + 0.5 * params.gamma,
        base + 0.5 * (params.s + params.gamma),
        0.5 * params.gamma,
    )


def weighted_tracker(
    series: NormSeries, params: ModelParams
) -> tuple[float, np.ndarray]:
    """Decay-weighted norm series and their running sup.

    Returns (X_value, weighted) where weighted[0..2] are the per-time
    products weight*norm for the L^2, H^s-dot and L^m entries, and X_value
    is the sup over samples of their sum. The weighted array is also
    attached to the series.
    """
    if len(series) == 0:
        raise ValueError("series is empty")
    e_l2, e_hs, e_lm = decay_weight_exponents(params)
    grow = 1.0 + series.times
    weighted = np.vstack(
        [
            grow**e_l2 * series.l2,
            grow**e_hs * series.hs_dot,
            grow**e_lm * series.lm,
        ]
    )
    x_value = float(np.max(weighted.sum(axis=0)))
    series.x_weighted = weighted
    return x_value, weighted


def y_functional(phi: RealField, t: float, params: ModelParams) -> float:
    """Weighted composite norm of a nonlinearity snapshot, diagnostic only.

    Mirrors the companion space to the X-weights: a weighted homogeneous
    H^{s-1} term plus the worst weighted L^eta term over the finite lattice
    {eta1, (eta1+2)/2, 2} with eta1 = max(1, m/p). The continuum sup over
    eta is out of numeric reach.
    """
    n, m, gamma, p, s = params.n, params.m, params.gamma, params.p, params.s
    grow = 1.0 + t
    hs_exp = 0.5 * n * (p / m - 0.5) + 0.5 * p * gamma + 0.5 * (s - 1.0)
    total = grow**hs_exp * sobolev_norm(phi, s - 1.0, 2)
    eta1 = max(1.0, m / p)
    lattice = (eta1, 0.5 * (eta1 + 2.0), 2.0)
    lp_terms = [
        grow ** (0.5 * n * (p / m - 1.0 / eta) + 0.5 * p * gamma) * lp_norm(phi, eta)
        for eta in lattice
    ]
    return float(total + max(lp_terms))
