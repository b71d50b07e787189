"""The four figure kinds: regime diagram, decay, lifespan, inequality.

All plotting is read-only presentation of CSV artifacts plus the
mirrored closed-form curves. Each data figure writes a sidecar caption
file (same stem, `.caption.txt`) with the numbers drawn, so agreement
between fitted and reference lines can be checked without parsing the
image.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .formulas import (
    critical_exponent,
    gamma_boundary,
    gamma_crossing,
    secondary_exponent,
)
from .schema import (
    FIT_COLUMNS,
    INEQUALITY_COLUMNS,
    LIFESPAN_COLUMNS,
    NORMS_COLUMNS,
    SchemaError,
    load_table,
)

KINDS = ("regime_diagram", "decay", "lifespan", "inequality")


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: inputs, kind, output image path."""

    kind: str
    inputs: tuple[Path, ...]
    output: Path

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


def _caption_path(output: Path) -> Path:
    return output.with_name(output.stem + ".caption.txt")


def _finish(fig, output: Path) -> None:
    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output)
    plt.close(fig)


# ------------------------- regime diagram -------------------------


@dataclass(frozen=True)
class RegimeDiagramData:
    """Numbers behind one regime diagram, for assertions and captions."""

    n: int
    m: float
    gamma: np.ndarray
    critical: np.ndarray
    secondary: Optional[np.ndarray]
    crossing: Optional[float]
    boundary: float
    output: Path


def regime_diagram(n: int, m: float, output: Path) -> RegimeDiagramData:
    """Exponent-plane diagram: threshold curves and shaded regions.

    The second threshold line and the crossing marker appear only when
    the crossing frequency is admissible (it is not in low dimension).
    """
    output = Path(output)
    boundary = gamma_boundary(n, m)
    gamma = np.linspace(0.0, boundary, 512)
    critical = np.array([critical_exponent(n, m, g) for g in gamma])
    crossing = gamma_crossing(m, n)
    has_secondary = crossing < boundary
    secondary = (
        np.array([secondary_exponent(n, m, g) for g in gamma])
        if has_secondary
        else None
    )

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    top = critical[0] + 0.5
    ax.fill_between(gamma, 1.0, critical, color="tab:red", alpha=0.18,
                    linewidth=0, label="finite-time blow-up")
    ax.fill_between(gamma, critical, top, color="tab:blue", alpha=0.12,
                    linewidth=0, label="global existence (small data)")
    # the threshold itself belongs to the global-existence side, so it
    # is drawn in that side's color
    ax.plot(gamma, critical, color="tab:blue", linewidth=2.0,
            label="p = 1+2m/(n+mγ)")
    if has_secondary:
        ax.plot(gamma, secondary, color="tab:red", linewidth=1.5,
                label="p = 1+mγ/n")
        ax.plot([crossing], [critical_exponent(n, m, crossing)], "ko",
                markersize=5, zorder=5)
    ax.axvline(boundary, color="0.4", linestyle="--", linewidth=1.0)
    ax.text(boundary, 1.02, " γ = n(m-1)/m", rotation=90,
            va="bottom", ha="right", fontsize=8, color="0.3")
    ax.annotate("1+2m/n", xy=(0.0, critical[0]),
                xytext=(0.02 * boundary, critical[0] + 0.08), fontsize=9)
    ax.set_xlim(0.0, boundary * 1.02)
    ax.set_ylim(1.0, top)
    ax.set_xlabel("γ")
    ax.set_ylabel("p")
    ax.set_title(f"n={n}, m={m:g}")
    ax.legend(loc="upper right", fontsize=8)
    _finish(fig, output)
    return RegimeDiagramData(
        n=n,
        m=m,
        gamma=gamma,
        critical=critical,
        secondary=secondary,
        crossing=crossing if has_secondary else None,
        boundary=boundary,
        output=output,
    )


# ------------------------- decay -------------------------


@dataclass(frozen=True)
class DecayPlotData:
    series: str
    slope: float
    target: float
    window: tuple[float, float]
    output: Path
    caption: Path


def decay_plot(norms_csv: Path, fit_csv: Path, output: Path) -> DecayPlotData:
    """Log-log norm decay with the fitted and reference slope lines."""
    output = Path(output)
    norms = load_table(Path(norms_csv), NORMS_COLUMNS)
    fits = load_table(Path(fit_csv), FIT_COLUMNS)

    experiments = fits.strings("experiment")
    row = next(
        (j for j, name in enumerate(experiments) if name.startswith("decay_")),
        None,
    )
    if row is None:
        raise SchemaError(f"{fit_csv}: no decay_* experiment row")
    series = experiments[row][len("decay_"):]
    if series not in NORMS_COLUMNS[1:]:
        raise SchemaError(
            f"{fit_csv}: experiment names unknown series {series!r}"
        )
    slope = fits.floats("slope")[row]
    intercept = fits.floats("intercept")[row]
    target = fits.floats("target")[row]
    t_a = fits.floats("t_a")[row]
    t_b = fits.floats("t_b")[row]
    source = fits.strings("target_source")[row]

    grow = 1.0 + norms.floats("t")
    values = norms.floats(series)
    keep = values > 0.0
    if not np.any(keep):
        raise SchemaError(f"{norms_csv}: column {series!r} has no positive values")

    window_x = np.geomspace(1.0 + t_a, 1.0 + t_b, 64)
    fitted = np.exp(intercept) * window_x**slope
    anchor = np.sqrt((1.0 + t_a) * (1.0 + t_b))
    anchor_y = np.exp(intercept) * anchor**slope
    reference = anchor_y * (window_x / anchor) ** target

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(grow[keep], values[keep], ".", color="0.5", markersize=3,
              label=series)
    ax.loglog(window_x, fitted, "-", color="tab:blue",
              label=f"fit slope {slope:.3f}")
    ax.loglog(window_x, reference, "--", color="tab:red",
              label=f"reference (1+t)^{target:.3g}")
    ax.set_xlabel("1+t")
    ax.set_ylabel(series)
    ax.legend(fontsize=8)
    _finish(fig, output)

    caption = _caption_path(output)
    caption.write_text(
        f"series = {series}\n"
        f"fitted slope = {slope:.12g}\n"
        f"reference slope = {target:.12g}\n"
        f"gap = {abs(slope - target):.6g}\n"
        f"window t in [{t_a:g}, {t_b:g}]\n"
        f"target source = {source}\n"
    )
    return DecayPlotData(
        series=series,
        slope=float(slope),
        target=float(target),
        window=(float(t_a), float(t_b)),
        output=output,
        caption=caption,
    )


# ------------------------- lifespan -------------------------


@dataclass(frozen=True)
class LifespanPlotData:
    power_slope: float
    corrected_slope: Optional[float]
    target: float
    output: Path
    caption: Path


def lifespan_plot(
    lifespan_csv: Path, fit_csv: Path, output: Path
) -> LifespanPlotData:
    """Blow-up time vs amplitude with power-law and corrected curves."""
    output = Path(output)
    records = load_table(Path(lifespan_csv), LIFESPAN_COLUMNS)
    fits = load_table(Path(fit_csv), FIT_COLUMNS)

    experiments = fits.strings("experiment")
    try:
        power_row = experiments.index("lifespan_power")
    except ValueError as exc:
        raise SchemaError(f"{fit_csv}: no lifespan_power row") from exc
    slope = fits.floats("slope")[power_row]
    intercept = fits.floats("intercept")[power_row]
    target = fits.floats("target")[power_row]

    corrected_slope = corrected_intercept = None
    if "lifespan_logcorrected" in experiments:
        row = experiments.index("lifespan_logcorrected")
        corrected_slope = fits.floats("slope")[row]
        corrected_intercept = fits.floats("intercept")[row]

    eps = records.floats("eps")
    t_lo = records.floats("t_lo")
    t_hi = records.floats("t_hi")
    status = records.strings("status")
    mid = 0.5 * (t_lo + t_hi)
    blew = np.array([s == "blew_up" for s in status])

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if np.any(blew):
        ax.loglog(eps[blew], mid[blew], "o", color="tab:blue",
                  label="measured T")
    if np.any(~blew):
        ax.loglog(eps[~blew], mid[~blew], "^", mfc="none", color="0.5",
                  label="censored (no blow-up)")
    curve_eps = np.geomspace(eps.min(), eps.max(), 128)
    ax.loglog(curve_eps, np.exp(intercept) * curve_eps**slope, "-",
              color="tab:blue", label=f"power law, slope {slope:.3f}")
    if corrected_slope is not None:
        small = curve_eps < 1.0
        if np.any(small):
            x_lc = np.log(curve_eps[small]) - np.log(
                np.log(1.0 / curve_eps[small])
            )
            ax.loglog(
                curve_eps[small],
                np.exp(corrected_intercept + corrected_slope * x_lc),
                "--",
                color="tab:red",
                label=f"log-corrected, slope {corrected_slope:.3f}",
            )
    ax.loglog(
        curve_eps,
        np.exp(intercept) * (curve_eps / curve_eps[0]) ** target
        * curve_eps[0] ** slope,
        ":",
        color="0.3",
        label=f"reference eps^{target:.3g}",
    )
    ax.set_xlabel("eps")
    ax.set_ylabel("T")
    ax.legend(fontsize=8)
    _finish(fig, output)

    caption = _caption_path(output)
    corrected_text = (
        f"{corrected_slope:.12g}" if corrected_slope is not None else "none"
    )
    caption.write_text(
        f"power-law slope = {slope:.12g}\n"
        f"log-corrected slope = {corrected_text}\n"
        f"reference slope = {target:.12g}\n"
        f"gap = {abs(slope - target):.6g}\n"
    )
    return LifespanPlotData(
        power_slope=float(slope),
        corrected_slope=(
            float(corrected_slope) if corrected_slope is not None else None
        ),
        target=float(target),
        output=output,
        caption=caption,
    )


# ------------------------- inequality -------------------------


@dataclass(frozen=True)
class InequalityPlotData:
    names: list[str]
    output: Path


def inequality_plot(inequalities_csv: Path, output: Path) -> InequalityPlotData:
    """Paired bars: campaign max ratio vs its refined-grid value."""
    output = Path(output)
    table = load_table(Path(inequalities_csv), INEQUALITY_COLUMNS)
    names = table.strings("name")
    max_ratio = table.floats("max_ratio")
    refined = table.floats("refined_ratio")

    positions = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(positions - 0.18, max_ratio, width=0.36, color="tab:blue",
           label="max ratio")
    ax.bar(positions + 0.18, refined, width=0.36, color="tab:orange",
           label="refined grid")
    ax.set_xticks(positions)
    ax.set_xticklabels(names, fontsize=8)
    ax.set_ylabel("worst ratio")
    ax.legend(fontsize=8)
    _finish(fig, output)
    return InequalityPlotData(names=list(names), output=output)


# ------------------------- dispatch -------------------------


def render(spec: FigureSpec):
    """Run the figure a FigureSpec describes; returns its data object."""
    if spec.kind == "decay":
        norms_csv, fit_csv = spec.inputs
        return decay_plot(norms_csv, fit_csv, spec.output)
    if spec.kind == "lifespan":
        lifespan_csv, fit_csv = spec.inputs
        return lifespan_plot(lifespan_csv, fit_csv, spec.output)
    if spec.kind == "inequality":
        (inequalities_csv,) = spec.inputs
        return inequality_plot(inequalities_csv, spec.output)
    raise ValueError(
        f"render() handles CSV-backed kinds, got {spec.kind!r}; "
        "call regime_diagram(n, m, output) directly"
    )
