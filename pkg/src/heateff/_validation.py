from __future__ import annotations

from typing import Sequence

import numpy as np
import pandas as pd

from .core import DailySeries
from .exceptions import DataValidationError

# positional column order used when callers pass bare arrays
INPUT_ORDER = ("t_out", "phi_rad", "t_in")


def as_frame(X, required: Sequence[str] = (), optional: Sequence[str] = ()) -> pd.DataFrame:
    """Coerce estimator input to a float DataFrame with named columns.

    Accepts a :class:`DailySeries`, a DataFrame, a mapping of arrays, or a 2-D
    array whose columns follow ``t_out, phi_rad[, t_in]``.
    """
    if isinstance(X, DailySeries):
        frame = X.frame
    elif isinstance(X, pd.DataFrame):
        frame = X
    elif isinstance(X, dict):
        frame = pd.DataFrame({k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in X.items()})
    else:
        arr = np.asarray(X, dtype=float)
        if arr.ndim != 2 or arr.shape[1] > len(INPUT_ORDER):
            raise DataValidationError(f"expected 2-D input with <= {len(INPUT_ORDER)} columns, got {arr.shape}")
        frame = pd.DataFrame(arr, columns=list(INPUT_ORDER[: arr.shape[1]]))
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise DataValidationError(f"missing required columns: {missing}")
    cols = list(required) + [c for c in optional if c in frame.columns and c not in required]
    out = frame[cols].astype(float)
    bad = [c for c in required if not np.all(np.isfinite(out[c].to_numpy()))]
    if bad:
        raise DataValidationError(f"non-finite values in required columns: {bad}")
    return out


def check_vector(y, n: int | None = None, name: str = "y") -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if n is not None and y.shape[0] != n:
        raise DataValidationError(f"{name} has {y.shape[0]} rows, expected {n}")
    if not np.all(np.isfinite(y)):
        raise DataValidationError(f"{name} contains NaN or inf")
    return y
