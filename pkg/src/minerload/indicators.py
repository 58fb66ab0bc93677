"""Momentum index, daily energy aggregation, and coincident-peak
interval identification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .panel import HourlyPanel
from .stats import CorrelationResult, pearson
from .transform import extract_trend

__all__ = [
    "IndicatorError",
    "DailySeries",
    "CpInterval",
    "rsi",
    "daily_energy",
    "rsi_correlation_study",
    "find_4cp_intervals",
]


class IndicatorError(ValueError):
    pass


@dataclass(frozen=True)
class DailySeries:
    dates: np.ndarray          # datetime64[D], strictly increasing
    values: np.ndarray

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=float)
        if dates.size != values.size:
            raise IndicatorError("dates and values must have equal length")
        if dates.size > 1 and not np.all(np.diff(dates.astype("int64")) > 0):
            raise IndicatorError("dates must be strictly increasing")
        if np.any(~np.isfinite(values)):
            raise IndicatorError("values must be finite")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class CpInterval:
    month: int                 # 6..9
    start: np.datetime64
    duration_minutes: int      # 15 or 60
    load_mw: float

    def __post_init__(self):
        if self.month not in (6, 7, 8, 9):
            raise IndicatorError("coincident-peak months are June through September")
        if self.duration_minutes not in (15, 60):
            raise IndicatorError("interval duration must be 15 or 60 minutes")

    def to_dict(self) -> dict:
        return {"month": self.month, "start": str(self.start),
                "duration_minutes": self.duration_minutes,
                "load_mw": float(self.load_mw)}


def rsi(prices: DailySeries, window: int = 14) -> DailySeries:
    """Relative strength index with Wilder smoothing.

    The first value uses simple averages of gains/losses over ``window``
    days; afterwards avg <- (avg*(window-1) + current)/window. A flat
    market (no gains, no losses) reads 50.
    """
    if window < 2:
        raise IndicatorError("window must be >= 2")
    if prices.n <= window:
        raise IndicatorError(f"need more than {window} prices")
    delta = np.diff(prices.values)
    gains = np.maximum(delta, 0.0)
    losses = np.maximum(-delta, 0.0)
    out = np.empty(prices.n - window)
    avg_gain = float(np.mean(gains[:window]))
    avg_loss = float(np.mean(losses[:window]))
    out[0] = _rsi_value(avg_gain, avg_loss)
    for i in range(window, delta.size):
        avg_gain = (avg_gain * (window - 1) + gains[i]) / window
        avg_loss = (avg_loss * (window - 1) + losses[i]) / window
        out[i - window + 1] = _rsi_value(avg_gain, avg_loss)
    return DailySeries(dates=prices.dates[window:], values=out)


def _rsi_value(avg_gain: float, avg_loss: float) -> float:
    if avg_loss == 0.0 and avg_gain == 0.0:
        return 50.0
    if avg_loss == 0.0:
        return 100.0
    rs = avg_gain / avg_loss
    return 100.0 - 100.0 / (1.0 + rs)


def daily_energy(values, timestamps) -> tuple[DailySeries, list[str]]:
    """Sum hourly values into daily totals, keeping only complete
    24-hour days; returns (series, excluded day strings)."""
    values = np.asarray(values, dtype=float)
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    if values.size != ts.size:
        raise IndicatorError("values and timestamps must align")
    days = ts.astype("datetime64[D]")
    unique_days = np.unique(days)
    kept_dates, kept_values, excluded = [], [], []
    for day in unique_days:
        sel = days == day
        block = values[sel]
        if block.size == 24 and not np.any(np.isnan(block)):
            kept_dates.append(day)
            kept_values.append(float(np.sum(block)))
        else:
            excluded.append(str(day))
    if not kept_dates:
        raise IndicatorError("no complete 24-hour day in the input")
    return DailySeries(np.array(kept_dates, dtype="datetime64[D]"),
                       np.array(kept_values)), excluded


def rsi_correlation_study(panel: HourlyPanel, windows=(7, 14, 21),
                          trend_window: int = 7) -> list[CorrelationResult]:
    """Correlate coin-price RSI against detrended daily mining energy for
    each requested window."""
    if panel.btc_usd is None or np.all(np.isnan(panel.btc_usd)):
        raise IndicatorError("panel has no coin-price series")
    # daily coin price: first reading of each day
    days = panel.days
    unique_days = np.unique(days)
    price_values, price_dates = [], []
    for day in unique_days:
        block = panel.btc_usd[days == day]
        block = block[~np.isnan(block)]
        if block.size:
            price_dates.append(day)
            price_values.append(float(block[0]))
    prices = DailySeries(np.array(price_dates, dtype="datetime64[D]"),
                         np.array(price_values))

    # align to whole days, detrend, then sum; incomplete days fall out
    start = 0 if panel.hours[0] == 0 else int(np.flatnonzero(panel.hours == 0)[0])
    values = panel.miner_mw[start:]
    ts = panel.timestamps[start:]
    if values.size % 24:
        values = values[:-(values.size % 24)]
        ts = ts[:values.size]
    _, detrended = extract_trend(values, trend_window)
    energy, _ = daily_energy(detrended, ts)

    results = []
    for window in windows:
        momentum = rsi(prices, window)
        common, idx_m, idx_e = np.intersect1d(momentum.dates, energy.dates,
                                              return_indices=True)
        if common.size < 60:
            raise IndicatorError(f"window {window}: fewer than 60 overlapping days")
        r, p, n = pearson(momentum.values[idx_m], energy.values[idx_e])
        results.append(CorrelationResult(r, p, n, f"rsi_window={window}"))
    return results


def find_4cp_intervals(timestamps, system_load, year: int,
                       intervals_per_month: int = 1) -> list[CpInterval]:
    """Ex-post maximum-demand interval(s) of each month June-September.

    Works on hourly or 15-minute data (resolution inferred from spacing);
    ties break toward the earliest instant. The conventional setting is
    one interval per month; ``intervals_per_month`` > 1 returns the top-k
    per month, descending.
    """
    ts = np.asarray(timestamps, dtype="datetime64[m]")
    load = np.asarray(system_load, dtype=float)
    if ts.size != load.size or ts.size == 0:
        raise IndicatorError("timestamps and load must align")
    if intervals_per_month < 1:
        raise IndicatorError("intervals_per_month must be >= 1")
    spacing = np.unique(np.diff(ts.astype("int64")))
    if spacing.size != 1 or spacing[0] not in (15, 60):
        raise IndicatorError("load must be regular 15-minute or hourly data")
    duration = int(spacing[0])
    months = ts.astype("datetime64[M]").astype(int) % 12 + 1
    years = ts.astype("datetime64[Y]").astype(int) + 1970
    out: list[CpInterval] = []
    for month in (6, 7, 8, 9):
        sel = (months == month) & (years == year)
        if not np.any(sel):
            raise IndicatorError(f"no data for month {month} of {year}")
        idx = np.flatnonzero(sel)
        block = load[idx]
        if np.any(np.isnan(block)):
            idx = idx[~np.isnan(block)]
            block = load[idx]
            if block.size == 0:
                raise IndicatorError(f"no usable data for month {month} of {year}")
        order = np.lexsort((idx, -block))  # by load desc, then earliest
        for rank in range(min(intervals_per_month, order.size)):
            j = idx[order[rank]]
            out.append(CpInterval(month=month, start=ts[j],
                                  duration_minutes=duration,
                                  load_mw=float(load[j])))
    return out
