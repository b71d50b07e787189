"""CSV loading with strict schema checks.

The experiment CLI documents exact column lists for each artifact; a
file that does not match is rejected outright rather than coerced, so a
schema drift upstream surfaces as a loud error here.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

NORMS_COLUMNS = ["t", "l2", "hs_dot", "lm", "w_l2", "w_hs", "w_lm", "supnorm"]
FIT_COLUMNS = ["experiment", "slope", "intercept", "r2", "t_a", "t_b",
               "target", "target_source"]
LIFESPAN_COLUMNS = ["eps", "p", "t_lo", "t_hi", "status"]
INEQUALITY_COLUMNS = ["name", "seed", "samples", "max_ratio",
                      "refined_ratio"]


class SchemaError(Exception):
    """Input CSV missing, empty, or shaped differently than documented."""


@dataclass(frozen=True)
class Table:
    """Parsed CSV: column-name -> list of raw string cells."""

    path: Path
    columns: dict[str, list[str]]

    def __len__(self) -> int:
        first = next(iter(self.columns.values()))
        return len(first)

    def floats(self, name: str) -> np.ndarray:
        cells = self.columns[name]
        try:
            return np.array([float(cell) for cell in cells])
        except ValueError as exc:
            raise SchemaError(
                f"{self.path}: column {name!r} is not numeric: {exc}"
            ) from exc

    def strings(self, name: str) -> list[str]:
        return self.columns[name]


def load_table(path: Path, expected_columns: list[str]) -> Table:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"input CSV not found: {path}")
    lines = path.read_text().splitlines()
    if not lines:
        raise SchemaError(f"{path}: file is empty")
    header = lines[0].split(",")
    if header != expected_columns:
        raise SchemaError(
            f"{path}: expected columns {expected_columns}, got {header}"
        )
    rows = [line.split(",") for line in lines[1:] if line]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    for index, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise SchemaError(
                f"{path}: line {index} has {len(row)} cells, "
                f"expected {len(header)}"
            )
    columns = {
        name: [row[j] for row in rows] for j, name in enumerate(header)
    }
    return Table(path=path, columns=columns)
