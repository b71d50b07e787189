"""Figure scripts for the damped-wave experiment artifacts.

Everything here is presentation: numbers come from the experiment CSVs
or from the closed-form exponent curves, never from rerunning physics.
"""

from .formulas import (
    critical_exponent,
    gamma_boundary,
    gamma_crossing,
    secondary_exponent,
)
from .plots import (
    FigureSpec,
    decay_plot,
    inequality_plot,
    lifespan_plot,
    regime_diagram,
    render,
)
from .schema import SchemaError, Table, load_table

__all__ = [
    "FigureSpec",
    "SchemaError",
    "Table",
    "critical_exponent",
    "decay_plot",
    "gamma_boundary",
    "gamma_crossing",
    "inequality_plot",
    "lifespan_plot",
    "load_table",
    "regime_diagram",
    "render",
    "secondary_exponent",
]
