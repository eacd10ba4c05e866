"""Vapor-pressure helpers (Magnus approximation over water)."""

from __future__ import annotations

import numpy as np

from .exceptions import DataValidationError

MAGNUS_A = 6.112  # hPa
MAGNUS_B = 17.62
MAGNUS_C = 243.12  # degC

T_RANGE = (-60.0, 60.0)


def saturation_vapor_pressure(t):
    """Saturation vapor pressure in hPa at temperature ``t`` (degC)."""
    t = np.asarray(t, dtype=float)
    return MAGNUS_A * np.exp(MAGNUS_B * t / (MAGNUS_C + t))


def replacement_air_rh(t_out, rh_out, t_in):
    """Relative humidity (%) of outdoor air once heated to ``t_in``.

    The vapor pressure of the outdoor air is conserved while heating, so the
    result is ``rh_out * e_sat(t_out) / e_sat(t_in)``, clipped to [0, 100].

    Raises
    ------
    DataValidationError
        If a temperature is outside [-60, 60] degC or ``rh_out`` outside
        [0, 100] %.
    """
    t_out = np.asarray(t_out, dtype=float)
    rh_out = np.asarray(rh_out, dtype=float)
    t_in = np.asarray(t_in, dtype=float)
    lo, hi = T_RANGE
    for name, arr in (("t_out", t_out), ("t_in", t_in)):
        if np.any(~np.isfinite(arr) | (arr < lo) | (arr > hi)):
            raise DataValidationError(f"{name} must lie in [{lo}, {hi}] degC")
    if np.any(~np.isfinite(rh_out) | (rh_out < 0) | (rh_out > 100)):
        raise DataValidationError("rh_out must lie in [0, 100] %")
    # equal temperatures cancel exactly instead of going through exp twice
    ratio = np.where(t_out == t_in, 1.0, saturation_vapor_pressure(t_out) / saturation_vapor_pressure(t_in))
    out = np.clip(rh_out * ratio, 0.0, 100.0)
    return out if out.ndim else float(out)
