"""Gaussian-posterior GAM calibration.

The model is linear in its basis weights, ``y = A theta + eps`` with
``eps ~ N(0, sigma^2 I)``, and the prior is placed on linear combinations of the
weights, ``B theta ~ N(mu_pr, Gamma_pr)`` with diagonal ``Gamma_pr``. ``B``
stacks three kinds of rows:

* second differences of the weights within the f1 and f2 blocks (``mu = 0``),
* identity rows per block with a prior standard deviation (``mu = 0``),
* optionally one "cold anchor" row fixing the value of f2 at a cold outdoor
  temperature (``mu = target``).

The posterior is Gaussian with precision ``A'A / sigma^2 + B' Gamma^-1 B``.
"""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import pandas as pd
from scipy import linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_frame, check_vector
from .basis import (
    DEFAULT_F1_KNOTS,
    DEFAULT_F2_KNOTS,
    BasisSpec,
    DesignMatrix,
    TBasePolicy,
    build_design_matrix,
    make_hinge_basis,
    make_ramp_step_basis,
)
from .exceptions import DataValidationError, NumericalError

DEFAULT_SMOOTHNESS = {"f1": 1.0, "f2": 1.0}
DEFAULT_COEFF_STD = {"f1": 10.0, "f2": 1.0, "intercept": 1000.0, "storage": 100.0}
CONDITION_WARN = 1e10
NOISE_MAX_ITER = 50
NOISE_RTOL = 1e-6


class ConditioningWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ColdAnchor:
    """Gaussian prior on the f2 value at a cold outdoor temperature."""

    t_out: float
    target: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise DataValidationError("cold anchor std must be positive")


@dataclass(frozen=True)
class PriorSpec:
    """Prior configuration.

    ``smoothness_weight`` multiplies the squared second differences of each
    block's weights; ``coeff_std`` is the prior standard deviation of raw
    weights per block. ``noise_std`` is a fixed value in kW or ``"estimate"``.
    """

    smoothness_weight: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_SMOOTHNESS))
    coeff_std: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_COEFF_STD))
    cold_anchor: ColdAnchor | None = None
    noise_std: float | str = "estimate"

    def __post_init__(self):
        sw = {**DEFAULT_SMOOTHNESS, **dict(self.smoothness_weight)}
        cs = {**DEFAULT_COEFF_STD, **dict(self.coeff_std)}
        if any(not v > 0 for v in sw.values()) or any(not v > 0 for v in cs.values()):
            raise DataValidationError("prior weights and standard deviations must be positive")
        if self.noise_std != "estimate" and not float(self.noise_std) > 0:
            raise DataValidationError("noise_std must be positive or 'estimate'")
        object.__setattr__(self, "smoothness_weight", sw)
        object.__setattr__(self, "coeff_std", cs)

    def replace(self, **changes) -> "PriorSpec":
        d = {
            "smoothness_weight": self.smoothness_weight,
            "coeff_std": self.coeff_std,
            "cold_anchor": self.cold_anchor,
            "noise_std": self.noise_std,
        }
        d.update(changes)
        return PriorSpec(**d)

    def to_dict(self) -> dict:
        a = self.cold_anchor
        return {
            "smoothness_weight": dict(self.smoothness_weight),
            "coeff_std": dict(self.coeff_std),
            "cold_anchor": None if a is None else {"t_out": a.t_out, "target": a.target, "std": a.std},
            "noise_std": self.noise_std,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PriorSpec":
        a = d.get("cold_anchor")
        return cls(
            smoothness_weight=d.get("smoothness_weight", DEFAULT_SMOOTHNESS),
            coeff_std=d.get("coeff_std", DEFAULT_COEFF_STD),
            cold_anchor=None if a is None else ColdAnchor(**a),
            noise_std=d.get("noise_std", "estimate"),
        )


def second_difference(k: int) -> np.ndarray:
    if k < 3:
        return np.zeros((0, k))
    return np.diff(np.eye(k), n=2, axis=0)


def prior_system(design: DesignMatrix, prior: PriorSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(B, mu, gamma_diag)`` for the stacked prior."""
    p = design.shape[1]
    rows, mus, gammas = [], [], []
    for name in ("f1", "f2"):
        if name not in design.blocks:
            continue
        sl = design.blocks[name]
        d2 = second_difference(sl.stop - sl.start)
        if d2.shape[0]:
            r = np.zeros((d2.shape[0], p))
            r[:, sl] = d2
            rows.append(r)
            mus.append(np.zeros(d2.shape[0]))
            gammas.append(np.full(d2.shape[0], 1.0 / prior.smoothness_weight[name]))
    for name, sl in design.blocks.items():
        k = sl.stop - sl.start
        r = np.zeros((k, p))
        r[:, sl] = np.eye(k)
        rows.append(r)
        mus.append(np.zeros(k))
        gammas.append(np.full(k, prior.coeff_std[name] ** 2))
    anchor = prior.cold_anchor
    if anchor is not None:
        if design.f2 is None:
            raise DataValidationError("cold anchor needs the f2 basis spec on the design matrix")
        if anchor.t_out > design.f2.knots[0]:
            raise DataValidationError("cold anchor must sit at or below the smallest f2 knot")
        r = np.zeros((1, p))
        r[0, design.blocks["f2"]] = design.f2.evaluate([anchor.t_out])[0]
        rows.append(r)
        mus.append(np.array([anchor.target]))
        gammas.append(np.array([anchor.std**2]))
    return np.vstack(rows), np.concatenate(mus), np.concatenate(gammas)


def _solve_posterior(A: np.ndarray, y: np.ndarray, sigma: float, B, mu, gamma):
    # scaled by sigma^2 so that tiny noise levels keep the prior numerically alive
    W = 1.0 / gamma
    s2 = sigma**2
    N = A.T @ A + s2 * (B.T * W) @ B
    rhs = A.T @ y + s2 * (B.T @ (W * mu))
    d = np.sqrt(np.diag(N))
    if not np.all(d > 0):
        raise NumericalError("posterior precision has a zero diagonal")
    Ns = N / np.outer(d, d)
    try:
        factor = linalg.cho_factor(Ns, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise NumericalError("regularized normal matrix is not positive definite") from exc
    ev = np.linalg.eigvalsh(Ns)
    cond = ev[-1] / ev[0] if ev[0] > 0 else np.inf
    if cond > CONDITION_WARN:
        warnings.warn(f"normal matrix condition number {cond:.3g} exceeds {CONDITION_WARN:.0e}", ConditioningWarning)
    mean = linalg.cho_solve(factor, rhs / d) / d
    inv = linalg.cho_solve(factor, np.eye(len(d)))
    cov = s2 * inv / np.outer(d, d)
    cov = 0.5 * (cov + cov.T)
    return mean, cov


def _sigma_floor(y: np.ndarray) -> float:
    scale = float(np.sqrt(np.mean(y**2))) if len(y) else 1.0
    return 1e-7 * max(scale, 1.0)


def estimate_noise_std(design: DesignMatrix, y, prior: PriorSpec | None = None, *,
                       max_iter: int = NOISE_MAX_ITER, rtol: float = NOISE_RTOL) -> float:
    """Residual noise scale at the fixed point ``sigma = rms(y - A theta(sigma))``.

    Starts from unit sigma and refits until sigma changes by less than
    ``rtol`` (relative). Noisy data settle in a few refits; on exactly
    representable data the residual shrinks with sigma, so the estimate
    falls to the numerical floor.
    """
    prior = prior or PriorSpec()
    A = np.asarray(design.matrix)
    y = check_vector(y, A.shape[0])
    if A.shape[0] < 10:
        raise DataValidationError("need at least 10 rows to estimate the noise level")
    B, mu, gamma = prior_system(design, prior)
    floor = _sigma_floor(y)
    sigma = 1.0
    rms = np.inf
    for _ in range(max_iter):
        mean, _ = _solve_posterior(A, y, max(sigma, floor), B, mu, gamma)
        rms = float(np.sqrt(np.mean((y - A @ mean) ** 2)))
        if sigma <= floor and rms <= floor:
            break
        done = abs(rms - sigma) <= rtol * sigma
        sigma = rms
        if done:
            break
    return max(rms, 1e-12)


@dataclass(frozen=True)
class GamPosterior:
    """A calibrated model: Gaussian posterior over stacked basis weights."""

    theta_mean: np.ndarray
    theta_cov: np.ndarray
    noise_std: float
    f1: BasisSpec
    f2: BasisSpec
    t_base: TBasePolicy
    blocks: dict[str, slice]
    include_storage: bool = False
    prior: PriorSpec = field(default_factory=PriorSpec)
    training_span: tuple[dt.date, dt.date] | None = None
    n_train: int = 0
    t_out_range: tuple[float, float] | None = None

    def __post_init__(self):
        for arr in (self.theta_mean, self.theta_cov):
            arr.setflags(write=False)

    @property
    def uses_measured_t_in(self) -> bool:
        return self.t_base == "measured"

    @property
    def intercept(self) -> float:
        return float(self.theta_mean[self.blocks["intercept"]][0])

    def design(self, X) -> DesignMatrix:
        return build_design_matrix(X, self.f1, self.f2, self.t_base, self.include_storage)

    def predict(self, X, return_std: bool = False):
        A = self.design(X).matrix
        mean = A @ self.theta_mean
        if not return_std:
            return mean
        var = np.einsum("ij,jk,ik->i", A, self.theta_cov, A) + self.noise_std**2
        return mean, np.sqrt(var)

    def f1_values(self, delta_t) -> np.ndarray:
        return self.f1.evaluate(delta_t) @ self.theta_mean[self.blocks["f1"]]

    def f2_values(self, t_out) -> np.ndarray:
        return self.f2.evaluate(t_out) @ self.theta_mean[self.blocks["f2"]]

    def to_dict(self) -> dict:
        span = None if self.training_span is None else [d.isoformat() for d in self.training_span]
        return {
            "kind": "gam",
            "f1": self.f1.to_dict(),
            "f2": self.f2.to_dict(),
            "t_base": self.t_base,
            "include_storage": self.include_storage,
            "blocks": {k: [v.start, v.stop] for k, v in self.blocks.items()},
            "prior": self.prior.to_dict(),
            "theta_mean": self.theta_mean.tolist(),
            "theta_cov": self.theta_cov.ravel().tolist(),
            "noise_std": self.noise_std,
            "training_span": span,
            "n_train": self.n_train,
            "t_out_range": None if self.t_out_range is None else list(self.t_out_range),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GamPosterior":
        p = len(d["theta_mean"])
        span = d.get("training_span")
        rng = d.get("t_out_range")
        return cls(
            theta_mean=np.asarray(d["theta_mean"], dtype=float),
            theta_cov=np.asarray(d["theta_cov"], dtype=float).reshape(p, p),
            noise_std=float(d["noise_std"]),
            f1=BasisSpec.from_dict(d["f1"]),
            f2=BasisSpec.from_dict(d["f2"]),
            t_base=d["t_base"],
            blocks={k: slice(*v) for k, v in d["blocks"].items()},
            include_storage=bool(d.get("include_storage", False)),
            prior=PriorSpec.from_dict(d.get("prior", {})),
            training_span=None if span is None else tuple(dt.date.fromisoformat(s) for s in span),
            n_train=int(d.get("n_train", 0)),
            t_out_range=None if rng is None else tuple(rng),
        )


def calibrate(design: DesignMatrix, y, prior: PriorSpec | None = None, *, t_out=None) -> GamPosterior:
    """Posterior of the Bayesian GAM for a prepared design matrix.

    ``design`` must come from :func:`~heateff.basis.build_design_matrix` so the
    basis specs travel with the calibrated model. ``t_out`` (optional) records
    the training temperature range for extrapolation checks.
    """
    prior = prior or PriorSpec()
    A = np.asarray(design.matrix)
    if not np.all(np.isfinite(A)):
        raise DataValidationError("design matrix contains NaN or inf")
    y = check_vector(y, A.shape[0])
    n, p = A.shape
    if n < p:
        warnings.warn(f"{n} rows for {p} weights; the prior alone keeps the system well-posed", UserWarning)
    if prior.noise_std == "estimate":
        sigma = estimate_noise_std(design, y, prior)
    else:
        sigma = float(prior.noise_std)
    B, mu, gamma = prior_system(design, prior)
    mean, cov = _solve_posterior(A, y, max(sigma, _sigma_floor(y)), B, mu, gamma)

    span = None
    if isinstance(design.index, pd.DatetimeIndex) and len(design.index):
        span = (design.index.min().date(), design.index.max().date())
    rng = None
    if t_out is not None and len(t_out):
        rng = (float(np.min(t_out)), float(np.max(t_out)))
    return GamPosterior(
        theta_mean=mean,
        theta_cov=cov,
        noise_std=sigma,
        f1=design.f1,
        f2=design.f2,
        t_base=design.t_base,
        blocks=dict(design.blocks),
        include_storage="storage" in design.blocks,
        prior=prior,
        training_span=span,
        n_train=n,
        t_out_range=rng,
    )


def predict(model: GamPosterior, t_out, phi_rad, t_in=None):
    """Posterior-mean prediction and predictive standard deviation."""
    X = {"t_out": np.atleast_1d(t_out), "phi_rad": np.atleast_1d(phi_rad)}
    if t_in is not None:
        X["t_in"] = np.atleast_1d(t_in)
    elif model.uses_measured_t_in:
        raise DataValidationError("model was calibrated with measured t_in; t_in is required")
    n = max(len(v) for v in X.values())
    X = {k: np.broadcast_to(np.asarray(v, dtype=float), (n,)) for k, v in X.items()}
    return model.predict(X, return_std=True)


def penalized_objective(theta, design: DesignMatrix, y, prior: PriorSpec, sigma: float) -> float:
    """``|y - A theta|^2 / sigma^2 + (B theta - mu)' Gamma^-1 (B theta - mu)``."""
    A = np.asarray(design.matrix)
    B, mu, gamma = prior_system(design, prior)
    r = np.asarray(y) - A @ theta
    s = B @ theta - mu
    return float(r @ r / sigma**2 + s @ (s / gamma))


def fit_gam(series, y=None, *, t_base: TBasePolicy = 21.0, prior: PriorSpec | None = None,
            f1: BasisSpec | None = None, f2: BasisSpec | None = None,
            include_storage: bool = False) -> GamPosterior:
    """Convenience: build the design for ``series`` and calibrate on ``q_tot``."""
    f1 = f1 or make_hinge_basis()
    f2 = f2 or make_ramp_step_basis()
    frame = as_frame(series, required=("t_out", "phi_rad"), optional=("t_in", "q_tot"))
    if y is None:
        y = frame["q_tot"].to_numpy()
    design = build_design_matrix(frame, f1, f2, t_base, include_storage)
    return calibrate(design, y, prior, t_out=frame["t_out"].to_numpy())


class BayesianGAM(RegressorMixin, BaseEstimator):
    """scikit-learn regressor for the heating-power GAM.

    Parameters
    ----------
    f1_knots : sequence of float
        Hinge knots on the indoor-outdoor temperature difference (K).
    f2_knots : sequence of float
        Ramp-step knots on outdoor temperature (degC).
    t_base : float or "measured"
        Fixed base temperature, or use the ``t_in`` column of ``X``.
    include_storage : bool
        Add the ``dT_in/dt`` column (needs a daily date index and ``t_in``).
    smoothness_weight, coeff_std : dict, optional
        Per-block overrides of the prior defaults.
    cold_anchor : tuple (t_out, target, std), optional
        Prior on the f2 value at a cold outdoor temperature.
    noise_std : float or "estimate"

    Attributes
    ----------
    posterior_ : GamPosterior
    coef_ : ndarray
        Posterior mean weights without the intercept.
    intercept_ : float
    noise_std_ : float
    """

    def __init__(
        self,
        f1_knots=DEFAULT_F1_KNOTS,
        f2_knots=DEFAULT_F2_KNOTS,
        t_base=21.0,
        include_storage=False,
        smoothness_weight=None,
        coeff_std=None,
        cold_anchor=None,
        noise_std="estimate",
    ):
        self.f1_knots = f1_knots
        self.f2_knots = f2_knots
        self.t_base = t_base
        self.include_storage = include_storage
        self.smoothness_weight = smoothness_weight
        self.coeff_std = coeff_std
        self.cold_anchor = cold_anchor
        self.noise_std = noise_std

    def _prior(self) -> PriorSpec:
        anchor = self.cold_anchor
        if anchor is not None and not isinstance(anchor, ColdAnchor):
            anchor = ColdAnchor(*anchor)
        return PriorSpec(
            smoothness_weight=self.smoothness_weight or {},
            coeff_std=self.coeff_std or {},
            cold_anchor=anchor,
            noise_std=self.noise_std,
        )

    def fit(self, X, y):
        f1, f2 = make_hinge_basis(self.f1_knots), make_ramp_step_basis(self.f2_knots)
        need_tin = self.t_base == "measured" or self.include_storage
        frame = as_frame(X, required=("t_out", "phi_rad") + (("t_in",) if need_tin else ()))
        design = build_design_matrix(frame, f1, f2, self.t_base, self.include_storage)
        self.posterior_ = calibrate(design, y, self._prior(), t_out=frame["t_out"].to_numpy())
        theta = self.posterior_.theta_mean
        self.intercept_ = self.posterior_.intercept
        self.coef_ = np.delete(theta, self.posterior_.blocks["intercept"].start)
        self.noise_std_ = self.posterior_.noise_std
        self.n_features_in_ = frame.shape[1]
        return self

    def predict(self, X, return_std=False):
        check_is_fitted(self, "posterior_")
        return self.posterior_.predict(X, return_std=return_std)
