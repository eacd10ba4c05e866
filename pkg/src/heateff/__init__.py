"""Heating-efficiency tracking and control-effect isolation for district-heated buildings."""

from .basis import BasisSpec, GamFeatures, build_design_matrix, make_hinge_basis, make_ramp_step_basis
from .control_effect import (
    Component,
    ControlEffectIsolator,
    IsolationModelPair,
    Setback,
    calibrate_pair,
    counterfactual_series,
    decompose,
    effect_ic,
    reconstruct_no_setback_tin,
    season_summary,
)
from .core import (
    BuildingRecord,
    CalibrationWindows,
    DailySeries,
    HeatingCurve,
    SeasonPolicy,
    aggregate_hourly,
    mask_heating_season,
    validate_series,
)
from .diagnostics import ChangeReport, DiagnosticConfig, classify_changes, diagnose
from .effects import effect_supply_space, effect_supply_total, energy_weighted_effect, track_model_based
from .exceptions import DataValidationError, HeatEffError, NotIdentifiableError, NumericalError, WindowError
from .gam import BayesianGAM, ColdAnchor, GamPosterior, PriorSpec, calibrate, fit_gam, predict
from .io import SCHEMA_VERSION, read_telemetry_csv, write_telemetry_csv
from .normalization import (
    HddNormalizationConfig,
    ReferenceWeather,
    compute_hdd,
    normalize_hdd,
    normalize_hdd_monthly,
    normalize_ratio_space,
    normalize_ratio_total,
)
from .power_models import LinearWeatherModel, SupplyTempModel
from .psychrometrics import replacement_air_rh, saturation_vapor_pressure
from .simulate import ScenarioSpec, simulate, standard_scenarios

__version__ = "0.1.0"
