"""Initial data generators for the model's data classes.

Four kinds:

    gaussian          smooth localized bump, unit L^2 norm, u1 = 0
    bump              compactly supported C-infinity bump, unit L^2, u1 = 0
    theorem2_profile  slowly decaying positive profile with the pointwise
                      lower bound (c0) <x>^{-(n/m+gamma)} log(e+|x|)^{-1}
                      shared by u0 and u1; drives finite-time blow-up in
                      the subcritical range
    lowfreq_weighted  spectrally defined data |xi|^a e^{-|xi|^2 w^2} with
                      a = lowfreq_power, zero mode dropped; realizes data
                      whose negative-order norm of order -a is finite and
                      box-stable

The amplitude eps is applied by the simulation, not here. Profiles that
decay too slowly for truncation are periodized: evaluated at the distance
to the nearest periodic image of the center.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .norms import ModelParams, lp_norm
from .spectral import Grid, RealField, SpectralField, from_spectral

__all__ = ["DataSpec", "DataSupportWarning", "generate"]

_KINDS = ("gaussian", "theorem2_profile", "lowfreq_weighted", "bump")


class DataSupportWarning(UserWarning):
    """Profile does not fit the box to the required tolerance."""


@dataclass(frozen=True)
class DataSpec:
    """Recipe for one (u0, u1) pair; interpreted by generate()."""

    kind: str
    center: Optional[tuple[float, ...]] = None
    width: float = 1.0
    lowfreq_power: float = 0.0
    amplitude_c0: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got kind={self.kind!r}")
        if not self.width > 0:
            raise ValueError(f"width must be positive, got width={self.width}")
        if self.lowfreq_power < 0:
            raise ValueError(
                f"lowfreq_power must be >= 0, got lowfreq_power={self.lowfreq_power}"
            )
        if not self.amplitude_c0 > 0:
            raise ValueError(
                f"amplitude_c0 must be positive, got amplitude_c0={self.amplitude_c0}"
            )


def _resolved_center(spec: DataSpec, grid: Grid) -> tuple[float, ...]:
    if spec.center is None:
        return (0.5 * grid.box_length,) * grid.dim
    if len(spec.center) != grid.dim:
        raise ValueError(
            f"center has {len(spec.center)} components, grid dim is {grid.dim}"
        )
    return tuple(float(c) for c in spec.center)


def _check_support(kind: str, boundary_ratio: float) -> None:
    # localized kinds must be < 1e-8 of peak at the far point of the box
    if boundary_ratio >= 1e-8:
        warnings.warn(
            f"{kind} profile is {boundary_ratio:.2e} of its peak at the box "
            "boundary (tolerance 1e-8); enlarge the box or shrink the width",
            DataSupportWarning,
            stacklevel=3,
        )


def _zero_like(grid: Grid) -> RealField:
    return RealField(grid, np.zeros(grid.shape))


def _gaussian(spec: DataSpec, grid: Grid) -> tuple[RealField, RealField]:
    center = _resolved_center(spec, grid)
    r = grid.periodic_distance(center)
    vals = np.exp(-(r**2) / spec.width**2)
    far = np.sqrt(grid.dim) * 0.5 * grid.box_length
    _check_support("gaussian", float(np.exp(-(far**2) / spec.width**2)))
    u0 = RealField(grid, vals)
    u0 = RealField(grid, vals / lp_norm(u0, 2))
    return u0, _zero_like(grid)


def _bump(spec: DataSpec, grid: Grid) -> tuple[RealField, RealField]:
    center = _resolved_center(spec, grid)
    r = grid.periodic_distance(center) / spec.width
    vals = np.zeros(grid.shape)
    inside = r < 1.0
    vals[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    if spec.width >= 0.5 * grid.box_length:
        _check_support("bump", 1.0)
    u0 = RealField(grid, vals)
    u0 = RealField(grid, vals / lp_norm(u0, 2))
    return u0, _zero_like(grid)


def _theorem2_profile(
    spec: DataSpec, params: ModelParams, grid: Grid
) -> tuple[RealField, RealField]:
    center = _resolved_center(spec, grid)
    r = grid.periodic_distance(center)
    exponent = params.n / params.m + params.gamma
    vals = (
        0.5
        * spec.amplitude_c0
        * (1.0 + r**2) ** (-0.5 * exponent)
        / np.log(np.e + r)
    )
    u0 = RealField(grid, vals)
    u1 = RealField(grid, vals.copy())
    return u0, u1


def _lowfreq_weighted(spec: DataSpec, grid: Grid) -> tuple[RealField, RealField]:
    rmag = grid.wavenumber_mag
    with np.errstate(divide="ignore", invalid="ignore"):
        envelope = rmag**spec.lowfreq_power * np.exp(-(rmag**2) * spec.width**2)
    envelope[(0,) * grid.dim] = 0.0
    # real, even in xi => exactly conjugate-symmetric coefficients
    u0 = from_spectral(SpectralField(grid, envelope.astype(complex)))
    u0 = RealField(grid, u0.values / lp_norm(u0, 2))
    return u0, _zero_like(grid)


def generate(
    spec: DataSpec, params: ModelParams, grid: Grid
) -> tuple[RealField, RealField]:
    """Build (u0, u1) on the grid; unit amplitude, eps is the caller's.

    A profile that violates its support precondition (localized kinds
    reaching the boundary above 1e-8 of peak) emits DataSupportWarning
    rather than failing; run records capture the warning.
    """
    if spec.kind == "gaussian":
        return _gaussian(spec, grid)
    if spec.kind == "bump":
        return _bump(spec, grid)
    if spec.kind == "theorem2_profile":
        return _theorem2_profile(spec, params, grid)
    if spec.kind == "lowfreq_weighted":
        return _lowfreq_weighted(spec, grid)
    raise ValueError(f"unhandled kind {spec.kind!r}")
