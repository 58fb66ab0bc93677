"""Seeded synthetic exogenous scenarios (temperature, prices, system
load, coin price) for generator demos, fixtures, and recovery tests."""

from __future__ import annotations

import numpy as np

from .panel import HourlyPanel

__all__ = ["build_exog_scenario"]


def build_exog_scenario(n_days: int, seed: int, start: str = "2022-10-01",
                        include_btc: bool = True,
                        seasonal_temp_amp: float = 20.0) -> HourlyPanel:
    """A plausible hourly exogenous panel: diurnal/seasonal temperature,
    skewed prices with afternoon peaks, and diurnal system load.

    ``seasonal_temp_amp`` sets the month-scale temperature swing; zero
    gives a drift-free scenario, useful when a controlled experiment must
    not confound slow weather drift with other low-frequency components.
    The miner column is a zero placeholder; generation replaces it.
    """
    if n_days < 1:
        raise ValueError("n_days must be >= 1")
    n = n_days * 24
    rng = np.random.default_rng(seed)
    ts = np.arange(np.datetime64(start, "h"), np.datetime64(start, "h") + n,
                   dtype="datetime64[h]")
    hour = (ts - ts.astype("datetime64[D]")).astype(int)
    day = np.arange(n) // 24
    doy = ts.astype("datetime64[D]").astype("datetime64[Y]")
    day_of_year = (ts.astype("datetime64[D]") - doy.astype("datetime64[D]")).astype(int)

    seasonal = seasonal_temp_amp * np.sin(2.0 * np.pi * (day_of_year - 100) / 365.0)
    diurnal_t = 9.0 * np.sin(2.0 * np.pi * (hour - 9) / 24.0)
    temp_noise = _ar1(rng, n, 0.95, 1.0)
    temp = 68.0 + seasonal + diurnal_t + 4.0 * temp_noise

    load_diurnal = 8000.0 * np.sin(2.0 * np.pi * (hour - 10) / 24.0)
    system = (48000.0 + load_diurnal + 350.0 * (temp - 68.0)
              + 1500.0 * _ar1(rng, n, 0.9, 1.0))

    price_diurnal = 1.0 + 0.5 * np.sin(2.0 * np.pi * (hour - 11) / 24.0)
    da_core = _ar1(rng, n, 0.7, 1.0)
    da = 25.0 + 20.0 * price_diurnal * np.exp(0.45 * da_core)
    rt_core = _ar1(rng, n, 0.5, 1.0)
    rt = 20.0 + 22.0 * price_diurnal * np.exp(0.55 * rt_core)

    btc = None
    if include_btc:
        daily_walk = np.cumsum(rng.standard_normal(n_days)) * 0.02
        btc = 30000.0 * np.exp(daily_walk)[day]

    return HourlyPanel(timestamps=ts, rt_price=rt, da_price=da,
                       system_mw=system, temp_f=temp,
                       miner_mw=np.zeros(n), btc_usd=btc)


def _ar1(rng: np.random.Generator, n: int, rho: float, sigma: float) -> np.ndarray:
    eps = rng.standard_normal(n) * sigma * np.sqrt(1.0 - rho * rho)
    out = np.empty(n)
    out[0] = rng.standard_normal() * sigma
    for i in range(1, n):
        out[i] = rho * out[i - 1] + eps[i]
    return out
