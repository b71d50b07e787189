"""Closed-form Fourier propagator for u_tt - lap(u) + u_t = 0.

Per mode, v(t) = K_hat(t, xi) solves v'' + v' + |xi|^2 v = 0 with v(0) = 0,
v'(0) = 1. The two frequency branches

    K_hat = e^{-t/2} sinh(t sqrt(1/4 - |xi|^2)) / sqrt(1/4 - |xi|^2)   (|xi| <= 1/2)
    K_hat = e^{-t/2} sin(t sqrt(|xi|^2 - 1/4)) / sqrt(|xi|^2 - 1/4)    (|xi| >  1/2)

are unified through z = t^2 (1/4 - |xi|^2):

    K_hat      = t e^{-t/2} S(z)
    dK_hat/dt  = e^{-t/2} (C(z) - (t/2) S(z))

with S(z) = sinh(sqrt(z))/sqrt(z) continued through z <= 0 and C its cosh
companion. Near z = 0 both are evaluated by Taylor series; for large
positive z the decaying prefactor is fused into a single exponent
exp(t(sqrt(1/4 - |xi|^2) - 1/2)) so nothing overflows at large times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import SpectralField

__all__ = ["KernelValue", "stable_sc", "khat", "linear_solution"]

_TAYLOR_Z = 1e-4
# switch to the fused-exponent form once sqrt(z) = t*sqrt(1/4-|xi|^2) > 30
_FUSED_Z = 900.0


@dataclass(frozen=True)
class KernelValue:
    """Kernel multiplier K_hat and its time derivative at one (t, xi2) set."""

    k: float | np.ndarray
    dk: float | np.ndarray


def stable_sc(z):
    """S(z) = sinh(sqrt(z))/sqrt(z) and C(z) = cosh(sqrt(z)), branch-unified.

    For z < 0 these continue to sin(sqrt(-z))/sqrt(-z) and cos(sqrt(-z)).
    |z| < 1e-4 is evaluated by 5-term Taylor series (truncation below
    1e-15), which keeps the branch seam at z = 0 exact to rounding.
    Accepts scalars or arrays; relative error <= 1e-13.
    """
    z_arr = np.asarray(z, dtype=float)
    s = np.empty_like(z_arr)
    c = np.empty_like(z_arr)

    small = np.abs(z_arr) < _TAYLOR_Z
    if np.any(small):
        zs = z_arr[small]
        # sum(z^j / (2j+1)!) and sum(z^j / (2j)!), j = 0..4
        s[small] = 1.0 + zs * (1 / 6 + zs * (1 / 120 + zs * (1 / 5040 + zs / 362880)))
        c[small] = 1.0 + zs * (1 / 2 + zs * (1 / 24 + zs * (1 / 720 + zs / 40320)))

    pos = ~small & (z_arr > 0)
    if np.any(pos):
        w = np.sqrt(z_arr[pos])
        s[pos] = np.sinh(w) / w
        c[pos] = np.cosh(w)

    neg = ~small & (z_arr < 0)
    if np.any(neg):
        w = np.sqrt(-z_arr[neg])
        s[neg] = np.sin(w) / w
        c[neg] = np.cos(w)

    if np.isscalar(z) or z_arr.ndim == 0:
        return float(s), float(c)
    return s, c


def khat(t: float, xi2) -> KernelValue:
    """Kernel multiplier K_hat(t, |xi|^2) and dK_hat/dt, all branches.

    xi2 may be a scalar or an array of squared frequencies.
    """
    if not (np.isfinite(t) and t >= 0):
        raise ValueError(f"t must be finite and nonnegative, got t={t}")
    xi2_arr = np.asarray(xi2, dtype=float)
    z = t * t * (0.25 - xi2_arr)

    k = np.empty_like(z)
    dk = np.empty_like(z)

    plain = z <= _FUSED_Z
    if np.any(plain):
        s, c = stable_sc(z[plain])
        damp = np.exp(-0.5 * t)
        k[plain] = t * damp * s
        dk[plain] = damp * (c - 0.5 * t * s)

    fused = ~plain
    if np.any(fused):
        # w = t*sqrt(1/4 - xi2) <= t/2, so both exponents below are <= 0
        xf = xi2_arr[fused]
        root = np.sqrt(0.25 - xf)
        w = t * root
        grow = np.exp(w - 0.5 * t)
        rebound = np.exp(-2.0 * w)
        k[fused] = t * grow * (1.0 - rebound) / (2.0 * w)
        # C - (t/2) S = e^w [ (1/2 - t/(4w)) + e^{-2w} (1/2 + t/(4w)) ] with
        # 1/2 - t/(4w) = -xi2 / (root (2 root + 1)), written to avoid the
        # cancellation that appears as xi2 -> 0
        lead = -xf / (root * (2.0 * root + 1.0))
        dk[fused] = grow * (lead + rebound * (0.5 + t / (4.0 * w)))

    if np.isscalar(xi2) or xi2_arr.ndim == 0:
        return KernelValue(float(k), float(dk))
    return KernelValue(k, dk)


def linear_solution(
    u0hat: SpectralField, u1hat: SpectralField, t: float
) -> tuple[SpectralField, SpectralField]:
    """Exact linear evolution from data (u0, u1) to time t, per mode.

    u_hat(t)  = (K_hat + dK_hat) u0_hat + K_hat u1_hat
    ut_hat(t) = -|xi|^2 K_hat u0_hat + dK_hat u1_hat

    where the second line uses d2K_hat/dt2 = -dK_hat - |xi|^2 K_hat. The
    data amplitude eps is the caller's business.
    """
    if u0hat.grid != u1hat.grid:
        raise ValueError("grid mismatch between u0hat and u1hat")
    grid = u0hat.grid
    xi2 = grid.wavenumber_sq
    kv = khat(t, xi2)
    uhat = (kv.k + kv.dk) * u0hat.coeffs + kv.k * u1hat.coeffs
    uthat = -xi2 * kv.k * u0hat.coeffs + kv.dk * u1hat.coeffs
    return SpectralField(grid, uhat), SpectralField(grid, uthat)
