"""Piecewise-linear basis families and the stacked GAM design matrix.

Two families are provided:

* ``hinge`` -- ``h_k(x) = max(0, x - c_k)`` on the indoor-outdoor temperature
  difference. On the outdoor-temperature axis this is a "flipped ReLU": linear
  on the cold side of the knot, zero on the warm side.
* ``ramp_step`` -- on outdoor temperature, function ``k`` equals 1 below knot
  ``a_k``, falls linearly to 0 at ``a_{k+1}`` and stays 0 above. ``K`` knots give
  ``K - 1`` functions.

The model built from them is::

    q = f1(t_base - t_out) - f2(t_out) * phi_rad + q0   [+ C * dT_in/dt]

with ``t_base`` either a fixed temperature or the measured indoor temperature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_frame
from .exceptions import DataValidationError

#: ``"measured"`` or a fixed base temperature in degC.
TBasePolicy = Union[str, float]

DEFAULT_F1_KNOTS = (0.0, 2.0, 4.0, 6.0, 10.0, 15.0, 20.0, 30.0, 45.0)
DEFAULT_F2_KNOTS = (-20.0, -10.0, 0.0, 5.0, 10.0, 15.0, 20.0)

FAMILIES = ("hinge", "ramp_step", "constant")


@dataclass(frozen=True)
class BasisSpec:
    family: str
    knots: tuple[float, ...] = ()
    # (lo, hi, step): extra knots merged into the grid
    refinement: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DataValidationError(f"unknown basis family {self.family!r}")
        knots = np.asarray(self.knots, dtype=float)
        if self.refinement is not None:
            lo, hi, step = self.refinement
            if step <= 0 or hi < lo:
                raise DataValidationError("refinement needs lo <= hi and step > 0")
            extra = np.arange(lo, hi + step / 2, step)
            knots = np.union1d(knots, np.round(extra, 12))
        if not np.all(np.isfinite(knots)):
            raise DataValidationError("knots must be finite")
        if np.any(np.diff(knots) <= 0):
            raise DataValidationError("knots must be strictly increasing")
        need = {"hinge": 1, "ramp_step": 2, "constant": 0}[self.family]
        if len(knots) < need:
            raise DataValidationError(f"{self.family} basis needs >= {need} knots")
        object.__setattr__(self, "knots", tuple(float(k) for k in knots))

    @property
    def n_functions(self) -> int:
        if self.family == "hinge":
            return len(self.knots)
        if self.family == "ramp_step":
            return len(self.knots) - 1
        return 1

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        k = np.asarray(self.knots)
        if self.family == "hinge":
            return np.maximum(0.0, x - k[None, :])
        if self.family == "ramp_step":
            lo, hi = k[:-1][None, :], k[1:][None, :]
            return np.clip((hi - x) / (hi - lo), 0.0, 1.0)
        return np.ones((x.shape[0], 1))

    def to_dict(self) -> dict:
        return {"family": self.family, "knots": list(self.knots)}

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSpec":
        return cls(d["family"], tuple(d["knots"]))


def make_hinge_basis(knots=DEFAULT_F1_KNOTS, refinement=None) -> BasisSpec:
    return BasisSpec("hinge", tuple(knots), refinement)


def make_ramp_step_basis(knots=DEFAULT_F2_KNOTS, refinement=None) -> BasisSpec:
    return BasisSpec("ramp_step", tuple(knots), refinement)


@dataclass(frozen=True)
class DesignMatrix:
    matrix: np.ndarray
    blocks: dict[str, slice]
    index: pd.Index | None = field(default=None, compare=False)
    f1: BasisSpec | None = None
    f2: BasisSpec | None = None
    t_base: TBasePolicy | None = None

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def block(self, name: str) -> np.ndarray:
        return self.matrix[:, self.blocks[name]]


def storage_derivative(t_in, dates) -> np.ndarray:
    """Central-difference dT_in/dt in K/day; one-sided next to gaps, NaN if isolated."""
    t = np.asarray(t_in, dtype=float)
    days = np.asarray(pd.DatetimeIndex(dates).asi8 // 86_400_000_000_000, dtype=np.int64)
    n = len(t)
    out = np.full(n, np.nan)
    for i in range(n):
        has_prev = i > 0 and days[i] - days[i - 1] == 1 and np.isfinite(t[i - 1])
        has_next = i < n - 1 and days[i + 1] - days[i] == 1 and np.isfinite(t[i + 1])
        if has_prev and has_next:
            out[i] = 0.5 * (t[i + 1] - t[i - 1])
        elif has_next:
            out[i] = t[i + 1] - t[i]
        elif has_prev:
            out[i] = t[i] - t[i - 1]
    return out


def build_design_matrix(
    series,
    f1: BasisSpec,
    f2: BasisSpec,
    t_base: TBasePolicy = 21.0,
    include_storage: bool = False,
) -> DesignMatrix:
    """Evaluate the stacked basis for every row of ``series``.

    The f2 block holds ``-p_k(t_out) * phi_rad`` so that its weights are the
    values of the radiation coefficient itself (radiation lowers power).
    """
    measured = t_base == "measured"
    if not measured and not isinstance(t_base, (int, float)):
        raise DataValidationError(f"t_base must be 'measured' or a number, got {t_base!r}")
    required = ["t_out", "phi_rad"] + (["t_in"] if measured or include_storage else [])
    frame = as_frame(series, required=required)
    t_out = frame["t_out"].to_numpy()
    phi = frame["phi_rad"].to_numpy()
    t_ref = frame["t_in"].to_numpy() if measured else np.full_like(t_out, float(t_base))

    cols = [f1.evaluate(t_ref - t_out), -f2.evaluate(t_out) * phi[:, None], np.ones((len(t_out), 1))]
    k1, k2 = f1.n_functions, f2.n_functions
    blocks = {"f1": slice(0, k1), "f2": slice(k1, k1 + k2), "intercept": slice(k1 + k2, k1 + k2 + 1)}
    if include_storage:
        if not isinstance(frame.index, pd.DatetimeIndex):
            raise DataValidationError("storage term needs a date index")
        deriv = storage_derivative(frame["t_in"].to_numpy(), frame.index)
        if not np.all(np.isfinite(deriv)):
            raise DataValidationError("storage term undefined for isolated days; drop them first")
        cols.append(deriv[:, None])
        blocks["storage"] = slice(k1 + k2 + 1, k1 + k2 + 2)
    return DesignMatrix(np.hstack(cols), blocks, frame.index, f1, f2, t_base)


class GamFeatures(TransformerMixin, BaseEstimator):
    """Transformer wrapper around :func:`build_design_matrix`.

    Stateless; ``fit`` only records the number of output columns.
    """

    def __init__(self, f1_knots=DEFAULT_F1_KNOTS, f2_knots=DEFAULT_F2_KNOTS, t_base=21.0, include_storage=False):
        self.f1_knots = f1_knots
        self.f2_knots = f2_knots
        self.t_base = t_base
        self.include_storage = include_storage

    def _specs(self):
        return make_hinge_basis(self.f1_knots), make_ramp_step_basis(self.f2_knots)

    def fit(self, X, y=None):
        f1, f2 = self._specs()
        self.n_features_out_ = f1.n_functions + f2.n_functions + 1 + int(self.include_storage)
        return self

    def transform(self, X):
        f1, f2 = self._specs()
        return np.array(build_design_matrix(X, f1, f2, self.t_base, self.include_storage).matrix)
