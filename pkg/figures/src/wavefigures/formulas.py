"""Closed-form exponent curves for the regime diagram.

These mirror the solver package's exponent-table definitions exactly.
Keeping a copy here is deliberate: the figure scripts depend on the
solver only through its CSV artifacts, never as an import.
"""

from __future__ import annotations

import math


def _validate(n: int, m: float) -> None:
    if not (isinstance(n, int) and n >= 1):
        raise ValueError(f"n must be a positive integer, got n={n}")
    if not (1.0 < m <= 2.0):
        raise ValueError(f"m must lie in (1, 2], got m={m}")


def critical_exponent(n: int, m: float, gamma: float) -> float:
    """Blow-up/global-existence threshold p = 1 + 2m/(n + m*gamma)."""
    _validate(n, m)
    if gamma < 0.0:
        raise ValueError(f"gamma must be nonnegative, got gamma={gamma}")
    return 1.0 + 2.0 * m / (n + m * gamma)


def secondary_exponent(n: int, m: float, gamma: float) -> float:
    """Lower admissibility line p = 1 + m*gamma/n."""
    _validate(n, m)
    if gamma < 0.0:
        raise ValueError(f"gamma must be nonnegative, got gamma={gamma}")
    return 1.0 + m * gamma / n


def gamma_boundary(n: int, m: float) -> float:
    """Right edge of the admissible regularity range, n(m-1)/m."""
    _validate(n, m)
    return n * (m - 1.0) / m


def gamma_crossing(m: float, n: int) -> float:
    """Where the two exponent curves meet: (sqrt(n^2+8mn) - n)/(2m)."""
    _validate(n, m)
    return (math.sqrt(n * n + 8.0 * m * n) - n) / (2.0 * m)
