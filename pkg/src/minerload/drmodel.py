"""Composed seasonal demand-response models for large mining loads:
staged fitting, deterministic prediction, stochastic synthetic-load
generation, coincident-peak charges, and facility profit accounting.

A model is the sum, in transformed space, of a temperature term, gated
lagged price terms, (summer only) gated lagged system-load terms, and a
seasonal ARIMA component, wrapped in the inverse load transform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .panel import HourlyPanel, SeasonMask, indicator
from .regress import LagSpec, RegressError, StepResult, staged_regression
from .sarima import SarimaFit, SarimaOrder, SarimaParams
from .sarima import fit as sarima_fit
from .sarima import select_order, simulate
from .transform import FittedTransform, fit_transform, remove_outlier_days

__all__ = [
    "DemandModelError",
    "PriceTerm",
    "LoadTerm",
    "DemandModel",
    "DrConfig",
    "reference_coefficients",
    "reference_model",
    "fit_demand_model",
    "deterministic_part",
    "predict",
    "generate_synthetic",
    "fourcp_charge",
    "ProfitInterval",
    "profit",
    "default_cooling",
]

EXOG_SERIES = ("temp_f", "da_price", "rt_price", "system_mw")

# mean-reversion factor for the generator's seasonal summation (memory of
# roughly 1/(1 - damping) days, well inside typical generation windows)
RESIDUAL_DAMPING = 0.9


class DemandModelError(ValueError):
    pass


@dataclass(frozen=True)
class PriceTerm:
    market: str        # "da" or "rt"
    gate: str          # "day" or "peak"
    lag: int           # hours
    coef: float
    se: float

    def __post_init__(self):
        if self.market not in ("da", "rt"):
            raise DemandModelError("market must be 'da' or 'rt'")
        if self.gate not in ("day", "peak"):
            raise DemandModelError("price gate must be 'day' or 'peak'")
        if self.lag < 0:
            raise DemandModelError("lag must be nonnegative")
        if not np.isfinite(self.se):
            raise DemandModelError("se must be finite")

    @property
    def series(self) -> str:
        return f"{self.market}_price"


@dataclass(frozen=True)
class LoadTerm:
    """Lagged system-load term, active in the coincident-peak window."""

    lag: int
    coef: float
    se: float

    def __post_init__(self):
        if self.lag < 1:
            raise DemandModelError("load lags start at 1 hour")
        if not np.isfinite(self.se):
            raise DemandModelError("se must be finite")


@dataclass
class DemandModel:
    season: str
    temp_coeff: float
    temp_se: float
    price_terms: list[PriceTerm]
    load_terms: list[LoadTerm]
    order: SarimaOrder
    sarima_params: SarimaParams
    load_transform: FittedTransform | None
    exog_transforms: dict[str, FittedTransform] | None = None
    season_mask: SeasonMask | None = None
    sarima_fit: SarimaFit | None = None
    steps: list[StepResult] = field(default_factory=list)

    def __post_init__(self):
        if self.season not in ("summer", "non_summer"):
            raise DemandModelError("season must be 'summer' or 'non_summer'")
        if self.season == "non_summer" and self.load_terms:
            raise DemandModelError("non-summer models carry no system-load terms")
        if self.order.S != 24:
            raise DemandModelError("the residual model must use a 24-hour season")
        if not np.isfinite(self.temp_se):
            raise DemandModelError("temperature se must be finite")
        if self.season_mask is None:
            self.season_mask = SeasonMask(season=self.season)

    @property
    def max_lag(self) -> int:
        lags = [t.lag for t in self.price_terms] + [t.lag for t in self.load_terms] + [0]
        return max(lags)

    def to_dict(self) -> dict:
        return {
            "schema_version": "model.v1",
            "season": self.season,
            "temperature": {"coef": self.temp_coeff, "se": self.temp_se},
            "price_terms": [{"market": t.market, "gate": t.gate, "lag": t.lag,
                             "coef": t.coef, "se": t.se} for t in self.price_terms],
            "load_terms": [{"lag": t.lag, "coef": t.coef, "se": t.se}
                           for t in self.load_terms],
            "sarima": {
                "order": [self.order.p, self.order.d, self.order.q,
                          self.order.P, self.order.D, self.order.Q, self.order.S],
                "phi": list(self.sarima_params.phi),
                "theta": list(self.sarima_params.theta),
                "seasonal_phi": list(self.sarima_params.Phi),
                "seasonal_theta": list(self.sarima_params.Theta),
                "sigma": self.sarima_params.sigma,
            },
            "windows": {
                "day": list(self.season_mask.day_window),
                "peak": list(self.season_mask.peak_window),
                "fourcp": list(self.season_mask.fourcp_window),
            },
            "load_transform": None if self.load_transform is None
            else json.loads(self.load_transform.to_json()),
            "exog_transforms": None if not self.exog_transforms
            else {k: json.loads(v.to_json()) for k, v in self.exog_transforms.items()},
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source: str | Path) -> "DemandModel":
        if isinstance(source, Path):
            text = source.read_text()
        else:
            text = str(source)
            if not text.lstrip().startswith("{"):
                text = Path(text).read_text()
        doc = json.loads(text)
        if doc.get("schema_version") != "model.v1":
            raise DemandModelError("unsupported model document version")
        s = doc["sarima"]
        order = SarimaOrder(*s["order"])
        params = SarimaParams(tuple(s["phi"]), tuple(s["theta"]),
                              tuple(s["seasonal_phi"]), tuple(s["seasonal_theta"]),
                              s["sigma"])
        w = doc["windows"]
        mask = SeasonMask(season=doc["season"], day_window=tuple(w["day"]),
                          peak_window=tuple(w["peak"]), fourcp_window=tuple(w["fourcp"]))
        load_tf = None
        if doc.get("load_transform") is not None:
            load_tf = FittedTransform.from_json(json.dumps(doc["load_transform"]))
        exog_tf = None
        if doc.get("exog_transforms"):
            exog_tf = {k: FittedTransform.from_json(json.dumps(v))
                       for k, v in doc["exog_transforms"].items()}
        return cls(
            season=doc["season"],
            temp_coeff=doc["temperature"]["coef"],
            temp_se=doc["temperature"]["se"],
            price_terms=[PriceTerm(**t) for t in doc["price_terms"]],
            load_terms=[LoadTerm(**t) for t in doc["load_terms"]],
            order=order, sarima_params=params,
            load_transform=load_tf, exog_transforms=exog_tf, season_mask=mask,
        )


# -- published coefficient presets ---------------------------------------------

_REFERENCE = {
    "non_summer": {
        "temp": (0.14, 0.04),
        "price_terms": [("da", "day", 48, -0.08, 0.03),
                        ("rt", "day", 1, -0.19, 0.03),
                        ("rt", "day", 24, -0.11, 0.03),
                        ("da", "peak", 1, -0.16, 0.05),
                        ("rt", "peak", 3, -0.29, 0.05)],
        "load_terms": [],
        "order": (1, 0, 0, 1, 1, 0, 24),
        "sarima": {"phi": (0.83,), "theta": (), "Phi": (-0.43,), "Theta": (),
                   "sigma": 0.58},
        "sarima_se": {"phi_1": 0.02, "seasonal_phi_1": 0.02, "sigma": 0.02},
    },
    "summer": {
        "temp": (0.12, 0.04),
        "price_terms": [("da", "day", 0, -0.40, 0.04),
                        ("rt", "day", 72, 0.09, 0.04),
                        ("rt", "peak", 1, -0.13, 0.06)],
        "load_terms": [(24, -0.89, 0.11), (48, 0.39, 0.114)],
        "order": (1, 0, 0, 1, 1, 1, 24),
        "sarima": {"phi": (0.84,), "theta": (), "Phi": (-0.09,), "Theta": (-0.93,),
                   "sigma": 0.7},
        "sarima_se": {"phi_1": 0.01, "seasonal_phi_1": 0.03,
                      "seasonal_theta_1": 0.02, "sigma": 0.01},
    },
}


def reference_coefficients(season: str) -> dict:
    """The published per-season coefficient set (values and standard
    errors), immutable."""
    if season not in _REFERENCE:
        raise DemandModelError("season must be 'summer' or 'non_summer'")
    src = _REFERENCE[season]
    return {
        "temp": src["temp"],
        "price_terms": [PriceTerm(*t) for t in src["price_terms"]],
        "load_terms": [LoadTerm(*t) for t in src["load_terms"]],
        "order": SarimaOrder(*src["order"]),
        "sarima": SarimaParams(**src["sarima"]),
        "sarima_se": dict(src["sarima_se"]),
    }


def _reference_load_transform() -> FittedTransform:
    """A fixed, load-shaped quantile map (left-skewed, mean ~370 MW, capped
    near nameplate capacity) so the reference models can be inverted to
    megawatts without fitting.

    The density must vanish at the capacity ceiling: any pile-up there
    makes rank transforms of reprocessed output unstable, because a tiny
    rescaling reshuffles the near-cap order statistics.
    """
    rng = np.random.default_rng(20220401)
    sample = 470.0 - rng.gamma(shape=2.0, scale=50.0, size=20000)
    sample = np.clip(sample, 0.0, None)
    sample.sort()
    from .special import normal_ppf
    n = sample.size
    z = normal_ppf((np.arange(1, n + 1) - 0.5) / n)
    bins = {b: (0.0, 1.0) for b in range(48)}
    return FittedTransform(step_order=("gaussianize", "standardize"),
                           quantile_values=sample, quantile_z=z, bin_stats=bins)


def reference_model(season: str) -> DemandModel:
    """A ready-to-generate model from the published coefficient set.

    The load transform is a fixed load-shaped quantile map; exogenous
    transforms are left unset so generation normalizes drivers on the
    scenario itself.
    """
    ref = reference_coefficients(season)
    return DemandModel(
        season=season,
        temp_coeff=ref["temp"][0], temp_se=ref["temp"][1],
        price_terms=list(ref["price_terms"]),
        load_terms=list(ref["load_terms"]),
        order=ref["order"], sarima_params=ref["sarima"],
        load_transform=_reference_load_transform(),
        exog_transforms=None,
        season_mask=SeasonMask(season=season),
    )


# -- fitting ---------------------------------------------------------------------

@dataclass
class DrConfig:
    """Knobs for :func:`fit_demand_model`; defaults follow the published
    pipeline."""

    trend_window: int = 7
    z_threshold: float = 3.0
    alpha: float = 0.05
    sarima_order: SarimaOrder | None = None
    sarima_grid: list[SarimaOrder] | None = None
    day_lags_da: tuple[int, ...] | None = None
    day_lags_rt: tuple[int, ...] | None = None
    peak_lags_da: tuple[int, ...] | None = None
    peak_lags_rt: tuple[int, ...] | None = None
    fourcp_load_lags: tuple[int, ...] | None = None
    season_mask: SeasonMask | None = None

    def resolved_lags(self, season: str) -> dict[str, tuple[int, ...]]:
        ref = _REFERENCE[season]
        by_key = {"day_da": (), "day_rt": (), "peak_da": (), "peak_rt": ()}
        for market, gate, lag, _, _ in ref["price_terms"]:
            by_key[f"{gate}_{market}"] += (lag,)
        return {
            "day_da": self.day_lags_da if self.day_lags_da is not None else by_key["day_da"],
            "day_rt": self.day_lags_rt if self.day_lags_rt is not None else by_key["day_rt"],
            "peak_da": self.peak_lags_da if self.peak_lags_da is not None else by_key["peak_da"],
            "peak_rt": self.peak_lags_rt if self.peak_lags_rt is not None else by_key["peak_rt"],
            "fourcp": self.fourcp_load_lags if self.fourcp_load_lags is not None
            else tuple(t[0] for t in ref["load_terms"]),
        }


def fit_demand_model(panel: HourlyPanel, season: str,
                     config: DrConfig | None = None) -> DemandModel:
    """Full pipeline: transform, outlier-day removal, staged regression
    (temperature; day-window prices; peak-window prices; summer-only
    system-load lags), then the seasonal ARIMA fit on the final
    residuals."""
    config = config or DrConfig()
    if season not in ("summer", "non_summer"):
        raise DemandModelError("season must be 'summer' or 'non_summer'")
    mask = config.season_mask or SeasonMask(season=season)

    in_season = np.isin(panel.months, list(mask.months))
    season_days = np.unique(panel.days[in_season])
    if season_days.size < 60:
        raise DemandModelError(
            f"need >= 60 in-season days, found {season_days.size}")
    work = panel
    if not np.all(in_season):
        work = _mask_out_of_season(panel, in_season)

    try:
        work, removed_days = remove_outlier_days(work, config.z_threshold)
    except Exception as exc:
        raise DemandModelError(f"outlier-day removal failed: {exc}") from exc

    # transforms: full pipeline for the load, gaussianize+standardize for drivers
    hours, months, day_index = work.hours, work.months, work.day_index
    try:
        load_tf, miner_t = fit_transform(work.miner_mw, hours, months,
                                         day_index=day_index,
                                         trend_window=config.trend_window)
        exog_tf: dict[str, FittedTransform] = {}
        values: dict[str, np.ndarray] = {"miner_mw": miner_t}
        for name in EXOG_SERIES:
            tf, transformed = fit_transform(work.series(name), hours, months,
                                            steps=("gaussianize", "standardize"))
            exog_tf[name] = tf
            values[name] = transformed
    except Exception as exc:
        raise DemandModelError(f"transform stage failed: {exc}") from exc

    lags = config.resolved_lags(season)
    stages: list[list[LagSpec]] = [[LagSpec("temp_f", (0,), "none")]]
    day_stage = []
    if lags["day_da"]:
        day_stage.append(LagSpec("da_price", lags["day_da"], "day"))
    if lags["day_rt"]:
        day_stage.append(LagSpec("rt_price", lags["day_rt"], "day"))
    stages.append(day_stage)
    peak_stage = []
    if lags["peak_da"]:
        peak_stage.append(LagSpec("da_price", lags["peak_da"], "peak"))
    if lags["peak_rt"]:
        peak_stage.append(LagSpec("rt_price", lags["peak_rt"], "peak"))
    stages.append(peak_stage)
    if season == "summer" and lags["fourcp"]:
        stages.append([LagSpec("system_mw", lags["fourcp"], "fourcp")])
    stages = [s for s in stages if s]

    try:
        steps, residual = staged_regression(work, stages, mask, alpha=config.alpha,
                                            values=values)
    except RegressError as exc:
        raise DemandModelError(f"regression stage failed: {exc}") from exc

    segment = _longest_finite_run(residual)
    order = config.sarima_order or reference_coefficients(season)["order"]
    try:
        if config.sarima_grid:
            order, _ = select_order(segment, config.sarima_grid)
        fitted = sarima_fit(segment, order)
    except Exception as exc:
        raise DemandModelError(f"residual model stage failed: {exc}") from exc

    temp_coeff, temp_se = _extract_temp(steps[0])
    price_terms, load_terms = _extract_terms(steps[1:], season)
    return DemandModel(season=season, temp_coeff=temp_coeff, temp_se=temp_se,
                       price_terms=price_terms, load_terms=load_terms,
                       order=fitted.order, sarima_params=fitted.params,
                       load_transform=load_tf, exog_transforms=exog_tf,
                       season_mask=mask, sarima_fit=fitted, steps=steps)


def _mask_out_of_season(panel: HourlyPanel, keep: np.ndarray) -> HourlyPanel:
    masked = {}
    for name in ("rt_price", "da_price", "system_mw", "temp_f", "miner_mw"):
        values = getattr(panel, name).copy()
        values[~keep] = np.nan
        masked[name] = values
    btc = None
    if panel.btc_usd is not None:
        btc = panel.btc_usd.copy()
        btc[~keep] = np.nan
    return HourlyPanel(timestamps=panel.timestamps, btc_usd=btc, **masked)


def _longest_finite_run(values: np.ndarray) -> np.ndarray:
    finite = np.isfinite(values)
    if not np.any(finite):
        raise DemandModelError("no usable residuals")
    best_start = best_len = 0
    start = None
    for i, ok in enumerate(np.append(finite, False)):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if i - start > best_len:
                best_start, best_len = start, i - start
            start = None
    return values[best_start:best_start + best_len]


def _extract_temp(step: StepResult) -> tuple[float, float]:
    label = "temp_f[t-0]"
    if label not in step.coefficients:
        raise DemandModelError("temperature regressor was pruned; no model")
    return step.coefficients[label], step.se[label]


def _extract_terms(steps: list[StepResult], season: str):
    price_terms: list[PriceTerm] = []
    load_terms: list[LoadTerm] = []
    for step in steps:
        for label, coef in step.coefficients.items():
            se = step.se[label]
            name, rest = label.split("[t-")
            lag_text, gate = rest.split("]")
            lag = int(lag_text)
            gate = gate.lstrip("*") or "none"
            if name in ("da_price", "rt_price"):
                price_terms.append(PriceTerm(name[:2], gate, lag, coef, se))
            elif name == "system_mw":
                load_terms.append(LoadTerm(lag, coef, se))
    if season == "non_summer":
        load_terms = []
    return price_terms, load_terms


# -- prediction and generation ------------------------------------------------------

def _transformed_exog(model: DemandModel, panel: HourlyPanel) -> dict[str, np.ndarray]:
    hours, months = panel.hours, panel.months
    out = {}
    if model.exog_transforms:
        for name in EXOG_SERIES:
            tf = model.exog_transforms[name]
            out[name] = tf.apply(panel.series(name), hours=hours, months=months)
    else:
        # preset models normalize drivers on the scenario itself
        for name in EXOG_SERIES:
            _, out[name] = fit_transform(panel.series(name), hours, months,
                                         steps=("gaussianize", "standardize"))
    return out


def deterministic_part(model: DemandModel, panel_exog: HourlyPanel,
                       exog_values: dict[str, np.ndarray] | None = None) -> np.ndarray:
    """The exogenous (transformed-space) component of the model on the
    given axis; NaN where lag history is missing."""
    values = exog_values or _transformed_exog(model, panel_exog)
    mask = model.season_mask
    n = panel_exog.n
    det = model.temp_coeff * values["temp_f"]
    gates = {g: indicator(panel_exog, mask, g) for g in ("day", "peak", "fourcp")}
    for term in model.price_terms:
        det = det + term.coef * _gated_lag(values[term.series], gates[term.gate], term.lag)
    for term in model.load_terms:
        det = det + term.coef * _gated_lag(values["system_mw"], gates["fourcp"], term.lag)
    return det


def _gated_lag(series: np.ndarray, gate: np.ndarray, lag: int) -> np.ndarray:
    n = series.size
    col = np.full(n, np.nan)
    col[lag:] = series[:n - lag] if lag else series
    return np.where(gate == 0.0, 0.0, col * gate)


def predict(model: DemandModel, panel_exog: HourlyPanel,
            residual_forecast: np.ndarray | float = 0.0) -> np.ndarray:
    """Deterministic prediction in megawatts: the exogenous component plus
    the residual-model mean forecast (zero without conditioning history),
    inverted through the load transform."""
    if model.load_transform is None:
        raise DemandModelError("model has no load transform to invert")
    det = deterministic_part(model, panel_exog)
    if np.any(np.isnan(det)):
        missing = int(np.sum(np.isnan(det)))
        raise DemandModelError(
            f"exogenous history missing for {missing} rows; supply {model.max_lag} warmup hours")
    z = det + residual_forecast
    return model.load_transform.invert(z, hours=panel_exog.hours,
                                       months=panel_exog.months,
                                       day_index=panel_exog.day_index)


def generate_synthetic(model: DemandModel, exog_scenario: HourlyPanel,
                       n_days: int, seed: int,
                       normalize_residual: bool = True) -> HourlyPanel:
    """Synthetic mining load: deterministic part plus a simulated
    residual path, inverted to megawatts.

    The scenario must supply ``n_days`` plus the model's lag warmup; the
    emitted panel covers the final ``n_days`` whole days and passes panel
    validation. Deterministic given (model, scenario, seed).

    In the fitting direction the residual series is bounded (it inherits
    the target's standardized scale), while a seasonally integrated
    residual model simulated over a long horizon drifts without bound;
    the inverse transform is only defined on the scale it was fitted on.
    With ``normalize_residual`` set (the default), the residual path is
    simulated with a gently mean-reverting seasonal summation (see
    :func:`minerload.sarima.simulate`) and affinely rescaled onto the
    residual's share of the standardized scale, which keeps the inverse
    map inside its fitted range without touching the short-run dynamics.
    Disable it to add the raw integrated path (long windows will then
    clamp at the observed load extremes).
    """
    if model.load_transform is None:
        raise DemandModelError("model has no load transform to invert")
    n_hours = n_days * 24
    warmup = model.max_lag
    if exog_scenario.n < n_hours + warmup:
        raise DemandModelError(
            f"scenario supplies {exog_scenario.n} hours; need {n_hours + warmup} "
            f"(n_days plus {warmup} warmup hours)")
    det = deterministic_part(model, exog_scenario)
    tail = slice(exog_scenario.n - n_hours, exog_scenario.n)
    det_tail = det[tail]
    if np.any(np.isnan(det_tail)):
        raise DemandModelError("scenario has gaps inside the generation window")
    if normalize_residual:
        path = simulate(model.order, model.sarima_params, n=n_hours, seed=seed,
                        seasonal_damping=RESIDUAL_DAMPING)
        spread = float(np.std(path))
        if spread > 0.0:
            path = (path - float(np.mean(path))) / spread
        # per-bin residual share keeps total transformed variance near one;
        # the factors depend only on the scenario, not the path realization
        bins = _transform_bins(exog_scenario.hours[tail], exog_scenario.months[tail])
        share = np.ones(n_hours)
        for b in np.unique(bins):
            sel = bins == b
            share[sel] = np.sqrt(max(0.1, 1.0 - float(np.var(det_tail[sel]))))
        path = path * share
    else:
        path = simulate(model.order, model.sarima_params, n=n_hours, seed=seed)
    z = det_tail + path
    ts = exog_scenario.timestamps[tail]
    hours = exog_scenario.hours[tail]
    months = exog_scenario.months[tail]
    day_index = exog_scenario.day_index[tail]
    day_index = day_index - day_index[0]
    miner = model.load_transform.invert(z, hours=hours, months=months,
                                        day_index=day_index)
    btc = exog_scenario.btc_usd[tail] if exog_scenario.btc_usd is not None else None
    return HourlyPanel(
        timestamps=ts,
        rt_price=exog_scenario.rt_price[tail].copy(),
        da_price=exog_scenario.da_price[tail].copy(),
        system_mw=exog_scenario.system_mw[tail].copy(),
        temp_f=exog_scenario.temp_f[tail].copy(),
        miner_mw=miner,
        btc_usd=btc,
    )


# -- charges and profit ----------------------------------------------------------

def fourcp_charge(avg_4cp_mw: float, rate_per_kw_month: float, months: int) -> float:
    """Annualized transmission charge: MW x 1000 x $/kW-month x months."""
    if avg_4cp_mw < 0 or rate_per_kw_month < 0 or months < 0:
        raise DemandModelError("charge inputs must be nonnegative")
    return avg_4cp_mw * 1000.0 * rate_per_kw_month * months


def default_cooling(e_hash: float, temp_f: float, c0: float = 0.15,
                    t0: float = 65.0, dt_ref: float = 30.0) -> float:
    """Placeholder cooling-energy model: overhead grows linearly with the
    temperature excess over ``t0``."""
    return c0 * e_hash * max(0.0, temp_f - t0) / dt_ref


@dataclass(frozen=True)
class ProfitInterval:
    """One settlement interval of the profit ledger.

    Energy balance e_ppa + e_da + e_rt == e_hash + cooling(e_hash, temp)
    must hold to 1e-9 at construction.
    """

    pi_btc: float            # $/BTC
    k_b: float               # power-supply efficiency (BTC per MWh basis)
    e_hash: float            # MWh spent hashing
    pi_da: float             # $/MWh day-ahead
    pi_rt: float             # $/MWh real-time
    e_da: float              # MWh bought day-ahead
    e_rt: float              # MWh bought real-time
    e_ppa: float = 0.0       # MWh from power purchase agreements
    temp_f: float = 65.0
    gamma_fn: object = None  # avoided-charge credit, callable(E_total) -> $
    psi_fn: object = default_cooling

    def __post_init__(self):
        total = self.e_ppa + self.e_da + self.e_rt
        used = self.e_hash + self.psi_fn(self.e_hash, self.temp_f)
        if abs(total - used) > 1e-9 * max(1.0, abs(total)):
            raise DemandModelError(
                f"energy balance violated: procured {total} != used {used}")

    @property
    def e_total(self) -> float:
        return self.e_ppa + self.e_da + self.e_rt

    def net(self) -> float:
        credit = self.gamma_fn(self.e_total) if self.gamma_fn is not None else 0.0
        return (self.pi_btc * self.k_b * self.e_hash
                - self.pi_rt * self.e_rt - self.pi_da * self.e_da + credit)


def profit(intervals: list[ProfitInterval]) -> tuple[float, list[float]]:
    """Total facility profit and the per-interval breakdown (the breakdown
    sums to the total exactly)."""
    breakdown = [iv.net() for iv in intervals]
    total = 0.0
    for value in breakdown:
        total += value
    return total, breakdown


def make_fourcp_avoidance(baseline_mw: float, rate_per_kw_month: float,
                          months: int = 12):
    """Credit for consuming below ``baseline_mw`` during an identified
    coincident-peak interval; use as ``gamma_fn`` on those intervals."""
    def gamma(e_total_mw: float) -> float:
        return max(0.0, baseline_mw - e_total_mw) * 1000.0 * rate_per_kw_month * months
    return gamma
