"""Column map and loader for the NLSYM returns-to-schooling extract.

The extract itself is not shipped. When the user supplies the CSV (the
Card 1976 excerpt distributed with Hansen's *Econometrics*), this module
derives the analysis columns: treatment is university enrollment
(education >= 13), the covariates are experience = age - education - 6 and
experience^2/100, and the instruments are parental education and the
college-proximity dummies.
"""

from __future__ import annotations

import os

import numpy as np
import pandas as pd

from .dataset import Dataset
from .exceptions import MissingColumn

ENV_VAR = "MTEBAND_NLSYM"

# raw column names in the distributed extract
COLUMN_MAP = {
    "log_wage": "lwage76",
    "education": "ed76",
    "age": "age76",
    "mother_education": "momed",
    "father_education": "daded",
    "nearc2": "nearc2",
    "nearc4": "nearc4",
}

X_NAMES = ("experience", "experience^2/100")
Z_NAMES = X_NAMES + ("momed", "daded", "nearc2", "nearc4")


def default_path() -> str | None:
    """Path of the user-supplied extract, if any."""
    p = os.environ.get(ENV_VAR)
    if p and os.path.exists(p):
        return p
    for cand in ("data/nlsym.csv", "data/card1995.csv"):
        if os.path.exists(cand):
            return cand
    return None


def load(path, column_map: dict | None = None) -> Dataset:
    cm = dict(COLUMN_MAP)
    if column_map:
        cm.update(column_map)
    df = pd.read_csv(path)
    missing = [v for v in cm.values() if v not in df.columns]
    if missing:
        raise MissingColumn("extract lacks columns: %s" % missing)
    sub = df[list(cm.values())].apply(pd.to_numeric, errors="coerce").dropna()
    edu = sub[cm["education"]].to_numpy(dtype=float)
    age = sub[cm["age"]].to_numpy(dtype=float)
    experience = age - edu - 6.0
    expsq = experience ** 2 / 100.0
    x = np.column_stack([experience, expsq])
    z = np.column_stack(
        [
            experience,
            expsq,
            sub[cm["mother_education"]].to_numpy(dtype=float),
            sub[cm["father_education"]].to_numpy(dtype=float),
            sub[cm["nearc2"]].to_numpy(dtype=float),
            sub[cm["nearc4"]].to_numpy(dtype=float),
        ]
    )
    return Dataset(
        y=sub[cm["log_wage"]].to_numpy(dtype=float),
        d=(edu >= 13).astype(float),
        x=x,
        z=z,
        x_names=X_NAMES,
        z_names=Z_NAMES,
        dropped_rows=len(df) - len(sub),
    )
