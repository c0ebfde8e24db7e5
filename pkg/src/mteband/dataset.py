"""Observation container and CSV ingestion.

A Dataset carries the outcome Y, binary treatment D, covariates X entering the
outcome equations, and instruments Z entering the propensity score. By
convention Z contains every column of X.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .exceptions import EmptyData, MissingColumn, NonBinaryTreatment


@dataclass(frozen=True)
class Dataset:
    y: np.ndarray
    d: np.ndarray
    x: np.ndarray  # (n, d)
    z: np.ndarray  # (n, m)
    x_names: tuple = ()
    z_names: tuple = ()
    dropped_rows: int = 0

    def __post_init__(self):
        n = len(self.y)
        if not (len(self.d) == n and self.x.shape[0] == n and self.z.shape[0] == n):
            raise ValueError("column lengths disagree")
        if n == 0:
            raise EmptyData("dataset has no rows")
        vals = np.unique(self.d)
        if not np.all(np.isin(vals, (0.0, 1.0))):
            raise NonBinaryTreatment(
                "treatment column takes values outside {0,1}: %s" % vals[:5]
            )

    @property
    def n(self) -> int:
        return len(self.y)

    def subset(self, mask: np.ndarray) -> "Dataset":
        return replace(
            self,
            y=self.y[mask],
            d=self.d[mask],
            x=self.x[mask],
            z=self.z[mask],
        )


def _resolve_column(df: pd.DataFrame, spec: str) -> pd.Series:
    """Resolve a column spec: either a plain name, or 'name^2/100' for the
    derived squared-and-scaled column used in quadratic outcome models."""
    if spec.endswith("^2/100"):
        base = spec[: -len("^2/100")]
        if base not in df.columns:
            raise MissingColumn("column %r not in file" % base)
        return df[base].astype(float) ** 2 / 100.0
    if spec not in df.columns:
        raise MissingColumn("column %r not in file" % spec)
    return df[spec].astype(float)


def load_csv(path, y: str, d: str, x: list[str], z: list[str]) -> Dataset:
    """Parse a headered CSV into a Dataset.

    Rows with a missing value in any mapped field are dropped; the count is
    recorded on the returned Dataset. D must be coercible to {0,1}.
    """
    df = pd.read_csv(path)
    cols = {}
    cols["__y"] = _resolve_column(df, y)
    cols["__d"] = _resolve_column(df, d)
    for name in x:
        cols["x:" + name] = _resolve_column(df, name)
    for name in z:
        cols["z:" + name] = _resolve_column(df, name)
    frame = pd.DataFrame(cols)
    kept = frame.dropna()
    dropped = len(frame) - len(kept)
    if len(kept) == 0:
        raise EmptyData("no complete rows in %s" % path)
    return Dataset(
        y=kept["__y"].to_numpy(),
        d=kept["__d"].to_numpy(),
        x=kept[["x:" + name for name in x]].to_numpy(),
        z=kept[["z:" + name for name in z]].to_numpy(),
        x_names=tuple(x),
        z_names=tuple(z),
        dropped_rows=dropped,
    )
