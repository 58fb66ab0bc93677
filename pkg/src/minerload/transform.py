"""Load-series normalization: rolling-peak detrending, rank
Gaussianization, and per-bin (hour-of-day x season) standardization,
together with the exact inverse used when model output is mapped back to
megawatts.

Step order is trend -> gaussianize -> standardize; the inverse applies
the reverse order. The trend step only makes sense for the load series
itself; predictors are normally fitted with gaussianize+standardize only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .panel import SUMMER_MONTHS, HourlyPanel, PanelError
from .special import normal_ppf

__all__ = [
    "TransformError",
    "FittedTransform",
    "extract_trend",
    "gaussianize",
    "standardize",
    "fit_transform",
    "remove_outlier_days",
]

HOURS_PER_DAY = 24
DEFAULT_TREND_WINDOW = 7

ALL_STEPS = ("trend", "gaussianize", "standardize")


class TransformError(ValueError):
    pass


# -- individual steps --------------------------------------------------------

def extract_trend(series: np.ndarray, window_days: int,
                  hours_per_day: int = HOURS_PER_DAY) -> tuple[np.ndarray, np.ndarray]:
    """Split an hourly series into (per-day trend, detrended hourly values).

    The trend of a day is the maximum daily peak over the trailing
    ``window_days`` days (fewer at the start of the sample); detrended
    values are the hourly values divided by their day's trend. The series
    must be day-aligned (length divisible by ``hours_per_day``).
    """
    series = np.asarray(series, dtype=float)
    if window_days < 1:
        raise TransformError("window_days must be >= 1")
    if series.size == 0 or series.size % hours_per_day != 0:
        raise TransformError("series must cover whole days")
    days = series.reshape(-1, hours_per_day)
    peaks = np.full(days.shape[0], np.nan)
    observed = ~np.all(np.isnan(days), axis=1)
    peaks[observed] = np.nanmax(days[observed], axis=1)
    trend = np.empty_like(peaks)
    for d in range(peaks.size):
        window = peaks[max(0, d - window_days + 1):d + 1]
        window = window[~np.isnan(window)]
        trend[d] = np.max(window) if window.size else np.nan
    if np.any(~np.isfinite(trend)) or np.any(trend <= 0):
        bad = int(np.flatnonzero(~(trend > 0))[0])
        raise TransformError(f"nonpositive trend value on day {bad}")
    detrended = (days / trend[:, None]).reshape(-1)
    return trend, detrended


def gaussianize(series: np.ndarray) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """Map a sample onto standard-normal quantiles by rank.

    Rank k of n (ties broken by stable input order) maps to
    ``ppf((k - 0.5) / n)``. NaN entries are ignored for the fit and stay
    NaN in the output. Returns the transformed values plus the fitted
    quantile map as (sorted sample values, matching normal quantiles).
    """
    series = np.asarray(series, dtype=float)
    finite = ~np.isnan(series)
    values = series[finite]
    if values.size < 30 or np.any(~np.isfinite(values)):
        raise TransformError("gaussianize requires >= 30 finite observations")
    if np.all(values == values[0]):
        raise TransformError("degenerate distribution: all values identical")
    n = values.size
    order = np.argsort(values, kind="stable")
    quantiles = normal_ppf((np.arange(1, n + 1) - 0.5) / n)
    z_fin = np.empty(n)
    z_fin[order] = quantiles
    z = np.full(series.size, np.nan)
    z[finite] = z_fin
    return z, (values[order], quantiles)


def standardize(z: np.ndarray, bins: np.ndarray) -> tuple[np.ndarray, dict[int, tuple[float, float]]]:
    """Standardize values within each bin to mean 0, std 1 (sample std).

    ``bins`` assigns an integer bin id to every observation. NaN entries
    are ignored for the fit and stay NaN. Raises if a bin has fewer than
    two finite observations or zero variance.
    """
    z = np.asarray(z, dtype=float)
    bins = np.asarray(bins)
    if z.shape != bins.shape:
        raise TransformError("bin assignment must match the series shape")
    out = np.full_like(z, np.nan)
    stats: dict[int, tuple[float, float]] = {}
    for b in np.unique(bins):
        sel = bins == b
        values = z[sel]
        finite = values[~np.isnan(values)]
        if finite.size < 2:
            raise TransformError(f"bin {b} has fewer than 2 observations")
        mu = float(np.mean(finite))
        sigma = float(np.std(finite, ddof=1))
        if sigma <= 0.0 or not np.isfinite(sigma):
            raise TransformError(f"zero-variance bin {b}")
        out[sel] = (values - mu) / sigma
        stats[int(b)] = (mu, sigma)
    return out, stats


# -- composed transform -------------------------------------------------------

def _bin_id(hours: np.ndarray, months: np.ndarray) -> np.ndarray:
    """hour-of-day x season bin ids: hour for non-summer, hour+24 for summer."""
    summer = np.isin(months, list(SUMMER_MONTHS))
    return hours + 24 * summer.astype(int)


@dataclass
class FittedTransform:
    """Everything needed to apply and invert the fitted normalization."""

    step_order: tuple[str, ...]
    trend: np.ndarray | None = None             # per-day scale, fitting sample
    trend_window: int | None = None
    quantile_values: np.ndarray | None = None   # sorted sample values
    quantile_z: np.ndarray | None = None        # matching normal quantiles
    bin_stats: dict[int, tuple[float, float]] = field(default_factory=dict)
    fit_hours: np.ndarray | None = None
    fit_months: np.ndarray | None = None
    fit_day_index: np.ndarray | None = None

    def __post_init__(self):
        unknown = set(self.step_order) - set(ALL_STEPS)
        if unknown:
            raise TransformError(f"unknown steps {sorted(unknown)}")

    # forward -----------------------------------------------------------
    def apply(self, series: np.ndarray, hours: np.ndarray | None = None,
              months: np.ndarray | None = None,
              day_index: np.ndarray | None = None) -> np.ndarray:
        """Apply the fitted steps to ``series``.

        Calendar metadata defaults to the fitting sample's when the length
        matches; otherwise it must be supplied.
        """
        values = np.asarray(series, dtype=float)
        hours, months, day_index = self._meta(values.size, hours, months, day_index)
        for step in self.step_order:
            if step == "trend":
                values = values / self._trend_of(day_index)
            elif step == "gaussianize":
                values = self._forward_quantile(values)
            elif step == "standardize":
                values = self._forward_bins(values, hours, months)
        return values

    def invert(self, z: np.ndarray, hours: np.ndarray | None = None,
               months: np.ndarray | None = None,
               day_index: np.ndarray | None = None) -> np.ndarray:
        """Exact inverse of :meth:`apply` on the fitting sample; values
        beyond the fitted quantile range are clamped to the sample
        min/max."""
        values = np.asarray(z, dtype=float)
        hours, months, day_index = self._meta(values.size, hours, months, day_index)
        for step in reversed(self.step_order):
            if step == "standardize":
                values = self._inverse_bins(values, hours, months)
            elif step == "gaussianize":
                values = self._inverse_quantile(values)
            elif step == "trend":
                values = values * self._trend_of(day_index)
        return values

    # internals ----------------------------------------------------------
    def _meta(self, n: int, hours, months, day_index):
        if hours is None and self.fit_hours is not None and n == self.fit_hours.size:
            hours = self.fit_hours
        if months is None and self.fit_months is not None and n == self.fit_months.size:
            months = self.fit_months
        if day_index is None and self.fit_day_index is not None and n == self.fit_day_index.size:
            day_index = self.fit_day_index
        if "standardize" in self.step_order and (hours is None or months is None):
            raise TransformError("hour/month metadata required to locate bins")
        if "trend" in self.step_order and day_index is None:
            raise TransformError("day_index required for the trend step")
        return (None if hours is None else np.asarray(hours),
                None if months is None else np.asarray(months),
                None if day_index is None else np.asarray(day_index))

    def _trend_of(self, day_index: np.ndarray) -> np.ndarray:
        if self.trend is None:
            raise TransformError("transform has no fitted trend")
        # days beyond the fitted range reuse the last fitted scale
        idx = np.clip(day_index, 0, self.trend.size - 1)
        return self.trend[idx]

    def _forward_quantile(self, values: np.ndarray) -> np.ndarray:
        if self.quantile_values is None:
            raise TransformError("transform has no fitted quantile map")
        v, z = self.quantile_values, self.quantile_z
        # collapse duplicate sample values so interpolation is well defined
        uniq, start = np.unique(v, return_index=True)
        counts = np.diff(np.append(start, v.size))
        z_mean = np.add.reduceat(z, start) / counts
        return np.interp(values, uniq, z_mean)

    def _inverse_quantile(self, z: np.ndarray) -> np.ndarray:
        if self.quantile_values is None:
            raise TransformError("invert called before the quantile map was fitted")
        return np.interp(z, self.quantile_z, self.quantile_values)

    def _forward_bins(self, values: np.ndarray, hours, months) -> np.ndarray:
        out = np.empty_like(values)
        for b, sel in self._bin_selectors(hours, months):
            mu, sigma = self._stats_for(b)
            out[sel] = (values[sel] - mu) / sigma
        return out

    def _inverse_bins(self, values: np.ndarray, hours, months) -> np.ndarray:
        out = np.empty_like(values)
        for b, sel in self._bin_selectors(hours, months):
            mu, sigma = self._stats_for(b)
            out[sel] = values[sel] * sigma + mu
        return out

    def _bin_selectors(self, hours, months):
        ids = _bin_id(hours, months)
        for b in np.unique(ids):
            yield int(b), ids == b

    def _stats_for(self, b: int) -> tuple[float, float]:
        try:
            return self.bin_stats[b]
        except KeyError:
            raise TransformError(f"bin {b} was not present in the fitting sample") from None

    # serialization --------------------------------------------------------
    def to_json(self, path: str | Path | None = None) -> str:
        doc = {
            "schema_version": "transform.v1",
            "step_order": list(self.step_order),
            "trend": None if self.trend is None else [float(v) for v in self.trend],
            "trend_window": self.trend_window,
            "quantile_values": None if self.quantile_values is None
            else [float(v) for v in self.quantile_values],
            "quantile_z": None if self.quantile_z is None
            else [float(v) for v in self.quantile_z],
            "bin_stats": {str(k): [float(m), float(s)] for k, (m, s) in self.bin_stats.items()},
            "fit_hours": None if self.fit_hours is None else [int(h) for h in self.fit_hours],
            "fit_months": None if self.fit_months is None else [int(m) for m in self.fit_months],
            "fit_day_index": None if self.fit_day_index is None
            else [int(d) for d in self.fit_day_index],
        }
        text = json.dumps(doc, indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source: str | Path) -> "FittedTransform":
        if isinstance(source, Path):
            text = source.read_text()
        else:
            text = str(source)
            if not text.lstrip().startswith("{"):
                text = Path(text).read_text()
        doc = json.loads(text)
        if doc.get("schema_version") != "transform.v1":
            raise TransformError("unsupported transform document version")

        def arr(key, dtype=float):
            return None if doc.get(key) is None else np.asarray(doc[key], dtype=dtype)

        return cls(
            step_order=tuple(doc["step_order"]),
            trend=arr("trend"),
            trend_window=doc.get("trend_window"),
            quantile_values=arr("quantile_values"),
            quantile_z=arr("quantile_z"),
            bin_stats={int(k): (float(v[0]), float(v[1])) for k, v in doc["bin_stats"].items()},
            fit_hours=arr("fit_hours", int),
            fit_months=arr("fit_months", int),
            fit_day_index=arr("fit_day_index", int),
        )


def fit_transform(series: np.ndarray, hours: np.ndarray, months: np.ndarray,
                  day_index: np.ndarray | None = None,
                  steps: tuple[str, ...] = ALL_STEPS,
                  trend_window: int = DEFAULT_TREND_WINDOW) -> tuple[FittedTransform, np.ndarray]:
    """Fit the requested steps on a series and return (transform, output).

    The load series uses all three steps; predictors normally use
    ``steps=("gaussianize", "standardize")``.
    """
    values = np.asarray(series, dtype=float)
    hours = np.asarray(hours)
    months = np.asarray(months)
    tf = FittedTransform(step_order=tuple(steps), fit_hours=hours.copy(),
                         fit_months=months.copy(),
                         fit_day_index=None if day_index is None else np.asarray(day_index).copy())
    for step in steps:
        if step == "trend":
            if day_index is None:
                raise TransformError("trend step requires day_index")
            trend, values = extract_trend(values, trend_window)
            tf.trend = trend
            tf.trend_window = trend_window
        elif step == "gaussianize":
            values, (qv, qz) = gaussianize(values)
            tf.quantile_values = qv
            tf.quantile_z = qz
        elif step == "standardize":
            values, stats = standardize(values, _bin_id(hours, months))
            tf.bin_stats = stats
        else:
            raise TransformError(f"unknown step {step!r}")
    return tf, values


def remove_outlier_days(panel: HourlyPanel, z_threshold: float) -> tuple[HourlyPanel, list[str]]:
    """NaN-mask whole days whose daily-average real-time price sits more
    than ``z_threshold`` standard deviations from the mean; returns
    (masked panel, removed day strings)."""
    if z_threshold <= 0:
        raise TransformError("z_threshold must be positive")
    day_idx = panel.day_index
    n_days = int(day_idx[-1]) + 1
    daily_mean = np.full(n_days, np.nan)
    for d in range(n_days):
        sel = day_idx == d
        values = panel.rt_price[sel]
        values = values[~np.isnan(values)]
        if values.size:
            daily_mean[d] = np.mean(values)
    have = ~np.isnan(daily_mean)
    mu = np.mean(daily_mean[have])
    sigma = np.std(daily_mean[have], ddof=1) if np.sum(have) > 1 else 0.0
    if sigma == 0.0:
        return panel, []
    z = (daily_mean - mu) / sigma
    drop_days = have & (np.abs(z) > z_threshold)
    if np.all(drop_days[have]):
        raise TransformError("z_threshold would remove every day")
    if not np.any(drop_days):
        return panel, []
    keep_rows = ~drop_days[day_idx]
    removed = [str(d) for d in np.unique(panel.days[~keep_rows])]
    masked = {}
    for name in ("rt_price", "da_price", "system_mw", "temp_f", "miner_mw"):
        values = getattr(panel, name).copy()
        values[~keep_rows] = np.nan
        masked[name] = values
    btc = None
    if panel.btc_usd is not None:
        btc = panel.btc_usd.copy()
        btc[~keep_rows] = np.nan
    return HourlyPanel(timestamps=panel.timestamps, btc_usd=btc, **masked), removed
