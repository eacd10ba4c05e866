"""Reference computations written independently of the package internals.

Each function here recomputes a quantity by the most direct route available
(scalar loops, dense solves, table values) so tests can compare the
vectorized implementation against it.
"""

from __future__ import annotations

import math

import numpy as np

# Saturation vapour pressure over water in hPa, from standard psychrometric
# tables (not the Magnus fit used by the package).
SATURATION_TABLE_HPA = {0: 6.112, 5: 8.725, 10: 12.28, 15: 17.05, 20: 23.39, 21: 24.88, 25: 31.69}


def hinge_scalar(x: float, knot: float) -> float:
    return x - knot if x > knot else 0.0


def ramp_step_scalar(x: float, lo: float, hi: float) -> float:
    if x <= lo:
        return 1.0
    if x >= hi:
        return 0.0
    return (hi - x) / (hi - lo)


def design_row(t_out: float, phi: float, t_ref: float, f1_knots, f2_knots) -> list[float]:
    row = [hinge_scalar(t_ref - t_out, c) for c in f1_knots]
    row += [-ramp_step_scalar(t_out, a, b) * phi for a, b in zip(f2_knots[:-1], f2_knots[1:])]
    row.append(1.0)
    return row


def second_difference_rows(k: int) -> np.ndarray:
    rows = []
    for i in range(k - 2):
        r = np.zeros(k)
        r[i], r[i + 1], r[i + 2] = 1.0, -2.0, 1.0
        rows.append(r)
    return np.array(rows).reshape(-1, k)


def augmented_posterior_mean(A, y, sigma, B, mu, gamma_diag) -> np.ndarray:
    """Minimize ``|[A/s; G^-1/2 B] theta - [y/s; G^-1/2 mu]|^2`` with a dense lstsq."""
    g = 1.0 / np.sqrt(np.asarray(gamma_diag, dtype=float))
    M = np.vstack([A / sigma, B * g[:, None]])
    rhs = np.concatenate([y / sigma, mu * g])
    theta, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return theta


def prior_rows(blocks: dict[str, slice], p: int, smooth: dict, coeff_std: dict):
    """Stacked prior rows built from block slices, mirroring the documented prior."""
    B, mu, gam = [], [], []
    for name in ("f1", "f2"):
        if name in blocks:
            sl = blocks[name]
            d2 = second_difference_rows(sl.stop - sl.start)
            for r in d2:
                row = np.zeros(p)
                row[sl] = r
                B.append(row)
                mu.append(0.0)
                gam.append(1.0 / smooth[name])
    for name, sl in blocks.items():
        for j in range(sl.start, sl.stop):
            row = np.zeros(p)
            row[j] = 1.0
            B.append(row)
            mu.append(0.0)
            gam.append(coeff_std[name] ** 2)
    return np.array(B), np.array(mu), np.array(gam)


def hdd_loop(dates, t_out, t_base, spring_cutoff=10.0, autumn_cutoff=12.0, spring_last_month=6):
    """Monthly degree days by a plain loop: ``{(year, month): K day}``."""
    out: dict[tuple[int, int], float] = {}
    for d, t in zip(dates, t_out):
        key = (d.year, d.month)
        out.setdefault(key, 0.0)
        if not math.isfinite(t):
            continue
        cutoff = spring_cutoff if d.month <= spring_last_month else autumn_cutoff
        if t <= cutoff:
            out[key] += max(0.0, t_base - t)
    return out


def heating_season_loop(dates, t_out, spring_cutoff=10.0, autumn_cutoff=12.0) -> list[bool]:
    keep = []
    for d, t in zip(dates, t_out):
        cutoff = spring_cutoff if d.month <= 6 else autumn_cutoff
        keep.append(bool(math.isfinite(t) and t <= cutoff))
    return keep


def setback_hourly_mean(setbacks, day) -> float:
    """Daily-mean setback depth by summing one-minute slots."""
    import datetime as dt

    start = dt.datetime.combine(day, dt.time())
    total = 0.0
    for minute in range(24 * 60):
        t = start + dt.timedelta(minutes=minute, seconds=30)
        for s in setbacks:
            if s.start <= t < s.end:
                total += s.depth
    return total / (24 * 60)
