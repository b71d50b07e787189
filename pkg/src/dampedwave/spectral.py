"""Periodic Fourier pseudospectral grid and transform layer.

Everything downstream (propagation, norms, nonlinear powers) runs through
this module. Fields live on a uniform periodic grid on [0, L)^d, and the
spectral representation uses the unnormalized forward DFT convention of
``numpy.fft.fftn``. Continuous wavenumbers are

    xi = 2*pi*k/L,   k = -N/2, ..., N/2 - 1  (per axis)

so that physical-space quadrature with the rectangle rule weight (L/N)^d is
spectrally accurate for smooth periodic integrands.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

__all__ = [
    "Grid",
    "RealField",
    "SpectralField",
    "make_grid",
    "to_spectral",
    "from_spectral",
    "apply_multiplier",
    "power_dealiased",
    "spectral_l2_norm",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, box_length)^dim.

    Wavenumber arrays are cached on first access; instances are cheap to
    pass around and compare by (dim, points_per_axis, box_length).
    """

    dim: int
    points_per_axis: int
    box_length: float

    @cached_property
    def spacing(self) -> float:
        return self.box_length / self.points_per_axis

    @cached_property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @cached_property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @cached_property
    def coords_1d(self) -> np.ndarray:
        return np.arange(self.points_per_axis) * self.spacing

    @cached_property
    def frequencies_1d(self) -> np.ndarray:
        """Signed wavenumbers 2*pi*k/L in fftn ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)

    @cached_property
    def wavenumber_sq(self) -> np.ndarray:
        """|xi|^2 on the full spectral grid."""
        total = np.zeros(self.shape)
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = self.points_per_axis
            total = total + (self.frequencies_1d**2).reshape(shape)
        return total

    @cached_property
    def wavenumber_mag(self) -> np.ndarray:
        """|xi| on the full spectral grid."""
        return np.sqrt(self.wavenumber_sq)

    def periodic_deltas(self, center: tuple[float, ...]) -> list[np.ndarray]:
        """Signed per-axis distance to the nearest periodic image of center.

        Returned arrays are open-mesh (broadcastable) views, one per axis,
        each in [-L/2, L/2).
        """
        if len(center) != self.dim:
            raise ValueError(
                f"center has {len(center)} components, grid dim is {self.dim}"
            )
        out = []
        half = 0.5 * self.box_length
        for axis in range(self.dim):
            d = np.mod(self.coords_1d - center[axis] + half, self.box_length) - half
            shape = [1] * self.dim
            shape[axis] = self.points_per_axis
            out.append(d.reshape(shape))
        return out

    def periodic_distance(self, center: tuple[float, ...]) -> np.ndarray:
        """|x - c| to the nearest periodic image, on the full grid."""
        total = np.zeros(self.shape)
        for d in self.periodic_deltas(center):
            total = total + d**2
        return np.sqrt(total)


@dataclass(frozen=True)
class RealField:
    """Real-valued samples on a Grid.

    NaN or Inf values are allowed to flow through (a diverging time step
    produces them); callers detect them via is_finite rather than relying
    on constructors to reject bad states.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"field shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "values", vals)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())


@dataclass(frozen=True)
class SpectralField:
    """Complex DFT coefficients on a Grid (numpy fftn layout, unnormalized)."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {coeffs.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.coeffs).all())


def make_grid(dim: int, points_per_axis: int, box_length: float) -> Grid:
    """Validated Grid constructor.

    points_per_axis must be a power of two (>= 8) so that transform sizes
    stay fast and the dealiasing pad keeps exact mode alignment.
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got dim={dim}")
    n = points_per_axis
    if not isinstance(n, (int, np.integer)) or n < 8 or (n & (n - 1)) != 0:
        raise ValueError(
            f"points_per_axis must be a power of two >= 8, got points_per_axis={n}"
        )
    if not (np.isfinite(box_length) and box_length > 0):
        raise ValueError(f"box_length must be positive and finite, got box_length={box_length}")
    return Grid(dim=dim, points_per_axis=int(n), box_length=float(box_length))


def to_spectral(f: RealField) -> SpectralField:
    return SpectralField(f.grid, np.fft.fftn(f.values))


def from_spectral(f: SpectralField) -> RealField:
    """Inverse transform, discarding the (roundoff-level) imaginary part."""
    return RealField(f.grid, np.fft.ifftn(f.coeffs).real)


def apply_multiplier(
    f: SpectralField, symbol: Callable[[np.ndarray], np.ndarray]
) -> SpectralField:
    """Apply a radial Fourier multiplier symbol(|xi|).

    The zero mode is multiplied by symbol(0) when that value is finite and
    dropped otherwise, which realizes homogeneous norms of either sign
    modulo constants. A non-finite symbol value at any nonzero frequency is
    a hard error: it would silently corrupt the field.
    """
    grid = f.grid
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        sym = np.asarray(symbol(grid.wavenumber_mag), dtype=float)
    if sym.shape != grid.shape:
        sym = np.broadcast_to(sym, grid.shape).copy()
    else:
        sym = sym.copy()
    zero_mode = (0,) * grid.dim
    if not np.isfinite(sym[zero_mode]):
        sym[zero_mode] = 0.0
    if not np.isfinite(sym).all():
        bad = np.argwhere(~np.isfinite(sym))[0]
        raise ValueError(
            f"multiplier symbol is not finite at nonzero frequency index {tuple(bad)}"
        )
    return SpectralField(grid, f.coeffs * sym)


def _pad_centered(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Embed an N^d spectrum into the center of a (2N)^d spectrum."""
    n = grid.points_per_axis
    m = 2 * n
    shifted = np.fft.fftshift(coeffs)
    padded = np.zeros((m,) * grid.dim, dtype=complex)
    sl = tuple(slice(n // 2, n // 2 + n) for _ in range(grid.dim))
    padded[sl] = shifted
    return np.fft.ifftshift(padded)


def _truncate_folded(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Restrict a (2N)^d spectrum to N^d modes, folding the +N/2 plane.

    Folding the dropped +N/2 hyperplane onto -N/2 reproduces exactly what
    direct subsampling of the fine-grid field would alias into the coarse
    Nyquist bin, so band-limited powers agree with pointwise evaluation.
    """
    n = grid.points_per_axis
    block = np.fft.fftshift(coeffs)
    for axis in range(grid.dim):
        center = block.shape[axis] // 2
        sl = [slice(None)] * grid.dim
        sl[axis] = slice(center - n // 2, center + n // 2 + 1)
        block = block[tuple(sl)].copy()
        lo = [slice(None)] * grid.dim
        lo[axis] = 0
        hi = [slice(None)] * grid.dim
        hi[axis] = n
        block[tuple(lo)] += block[tuple(hi)]
        keep = [slice(None)] * grid.dim
        keep[axis] = slice(0, n)
        block = block[tuple(keep)]
    return np.fft.ifftshift(block)


def power_dealiased(f: RealField, p: float) -> RealField:
    """Pointwise |u|^p with aliasing removed by a 2x zero-padded transform.

    |u|^p is evaluated as (u^2)^(p/2), which keeps negative field values
    well-defined for non-integer p and is even in u, matching the
    nonlinearity of the model.
    """
    if p <= 0:
        raise ValueError(f"power must be positive, got p={p}")
    grid = f.grid
    ratio = 2.0**grid.dim
    fine = np.fft.ifftn(_pad_centered(np.fft.fftn(f.values), grid)).real * ratio
    powered = (fine * fine) ** (0.5 * p)
    truncated = _truncate_folded(np.fft.fftn(powered) / ratio, grid)
    return RealField(grid, np.fft.ifftn(truncated).real)


def spectral_l2_norm(f: SpectralField) -> float:
    """L^2 norm computed from DFT coefficients (Parseval)."""
    grid = f.grid
    n = grid.points_per_axis
    total = float(np.sum(np.abs(f.coeffs) ** 2))
    return np.sqrt(total * grid.box_length**grid.dim) / n**grid.dim
