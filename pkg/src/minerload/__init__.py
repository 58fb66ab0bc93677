"""Econometric modeling and synthetic-data generation for large flexible
cryptocurrency-mining electricity loads."""

from .drmodel import (
    DemandModel,
    DrConfig,
    ProfitInterval,
    fit_demand_model,
    fourcp_charge,
    generate_synthetic,
    predict,
    profit,
    reference_coefficients,
    reference_model,
)
from .indicators import CpInterval, DailySeries, daily_energy, find_4cp_intervals, rsi
from .panel import HourlyPanel, SeasonMask, indicator, load_panel, split_train_test
from .regress import FitMetrics, LagSpec, StepResult, metrics, ols, staged_regression
from .sarima import SarimaFit, SarimaOrder, SarimaParams
from .stats import CorrelationResult, TestReport
from .transform import FittedTransform, fit_transform

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "HourlyPanel", "SeasonMask", "indicator", "load_panel", "split_train_test",
    "FittedTransform", "fit_transform",
    "TestReport", "CorrelationResult",
    "DailySeries", "CpInterval", "rsi", "daily_energy", "find_4cp_intervals",
    "SarimaOrder", "SarimaParams", "SarimaFit",
    "LagSpec", "StepResult", "FitMetrics", "ols", "staged_regression", "metrics",
    "DemandModel", "DrConfig", "fit_demand_model", "predict", "generate_synthetic",
    "reference_model", "reference_coefficients", "fourcp_charge", "profit",
    "ProfitInterval",
]
