"""Hypothesis tests, moments, autocorrelation tooling, and windowed
correlations for the hourly panel.

All p-value machinery routes through :mod:`minerload.special`; nothing
here depends on an external stats package. Unit-root p-values come from
the embedded response-surface coefficient tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .panel import HourlyPanel
from .special import chi2_sf, normal_cdf, student_t_two_sided

__all__ = [
    "StatsError",
    "TestReport",
    "CorrelationResult",
    "moments",
    "jarque_bera",
    "adf_test",
    "breusch_pagan",
    "durbin_watson",
    "ljung_box",
    "acf",
    "pacf",
    "pearson",
    "windowed_correlation",
]


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class TestReport:
    """Uniform test result: statistic, p-value (None when the test has no
    p-value, e.g. Durbin-Watson), lag/df metadata, and a reading note."""

    name: str
    statistic: float
    p_value: float | None
    df_or_lags: int
    decision_note: str

    def __post_init__(self):
        if not np.isfinite(self.statistic):
            raise StatsError(f"{self.name}: non-finite statistic")
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise StatsError(f"{self.name}: p-value {self.p_value} outside [0, 1]")

    def to_dict(self) -> dict:
        return {"name": self.name, "statistic": float(self.statistic),
                "p_value": None if self.p_value is None else float(self.p_value),
                "df_or_lags": int(self.df_or_lags),
                "decision_note": self.decision_note}


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p_value: float
    n: int
    window_note: str

    def __post_init__(self):
        if abs(self.r) > 1.0 + 1e-12:
            raise StatsError("correlation outside [-1, 1]")
        if self.n < 3:
            raise StatsError("correlation needs n >= 3")

    def to_dict(self) -> dict:
        return {"r": float(self.r), "p_value": float(self.p_value),
                "n": int(self.n), "window_note": self.window_note}


# -- moments and portmanteau tests -------------------------------------------

def _clean(series) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    x = x[~np.isnan(x)]
    if np.any(~np.isfinite(x)):
        raise StatsError("series contains non-finite values")
    return x


def moments(series) -> tuple[float, float, float]:
    """(mean, sample std, adjusted Fisher-Pearson skewness)."""
    x = _clean(series)
    n = x.size
    if n < 3:
        raise StatsError("moments require n >= 3")
    mu = float(np.mean(x))
    m2 = float(np.mean((x - mu) ** 2))
    if m2 == 0.0:
        raise StatsError("zero variance")
    m3 = float(np.mean((x - mu) ** 3))
    g1 = m3 / m2 ** 1.5
    skew = g1 * np.sqrt(n * (n - 1.0)) / (n - 2.0)
    return mu, float(np.std(x, ddof=1)), float(skew)


def jarque_bera(series) -> TestReport:
    """Normality test: n/6 * (S^2 + K^2/4) against chi-square(2)."""
    x = _clean(series)
    n = x.size
    if n < 30:
        raise StatsError("jarque_bera requires n >= 30")
    mu = np.mean(x)
    m2 = np.mean((x - mu) ** 2)
    if m2 == 0.0:
        raise StatsError("zero variance")
    s = np.mean((x - mu) ** 3) / m2 ** 1.5
    k = np.mean((x - mu) ** 4) / m2 ** 2 - 3.0
    stat = n / 6.0 * (s * s + k * k / 4.0)
    p = chi2_sf(stat, 2)
    note = "reject normality" if p < 0.05 else "consistent with normality"
    return TestReport("jarque_bera", float(stat), float(p), 2, note)


def durbin_watson(residuals) -> TestReport:
    """DW statistic sum(diff(e)^2)/sum(e^2); 2 means no autocorrelation."""
    e = _clean(residuals)
    if e.size < 2:
        raise StatsError("durbin_watson requires n >= 2")
    denom = float(np.sum(e * e))
    if denom == 0.0:
        raise StatsError("all-zero residuals")
    stat = float(np.sum(np.diff(e) ** 2)) / denom
    if stat < 1.5:
        note = "positive autocorrelation (DW << 2)"
    elif stat > 2.5:
        note = "negative autocorrelation (DW >> 2)"
    else:
        note = "little autocorrelation (DW near 2)"
    return TestReport("durbin_watson", stat, None, 0, note)


def ljung_box(residuals, h: int, fitted_params: int = 0) -> TestReport:
    """Portmanteau autocorrelation test at lags 1..h with chi-square
    df = h - fitted_params."""
    e = _clean(residuals)
    n = e.size
    if h <= fitted_params:
        raise StatsError("h must exceed the number of fitted parameters")
    if n <= h:
        raise StatsError("series shorter than the requested lag window")
    rho = acf(e, h)
    k = np.arange(1, h + 1)
    stat = n * (n + 2.0) * float(np.sum(rho[1:] ** 2 / (n - k)))
    df = h - fitted_params
    p = chi2_sf(stat, df)
    note = "residual autocorrelation detected" if p < 0.05 else "no residual autocorrelation"
    return TestReport("ljung_box", stat, float(p), df, note)


# -- least squares helpers (internal) -----------------------------------------

def _ols(y: np.ndarray, X: np.ndarray):
    """Returns (beta, residuals, ssr, se). Plain QR least squares."""
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    ssr = float(resid @ resid)
    n, k = X.shape
    dof = n - k
    if dof > 0:
        sigma2 = ssr / dof
        xtx_inv = np.linalg.pinv(X.T @ X)
        se = np.sqrt(np.clip(np.diag(xtx_inv) * sigma2, 0.0, None))
    else:
        se = np.full(k, np.nan)
    return beta, resid, ssr, se


def breusch_pagan(residuals, regressors=None, hours=None) -> TestReport:
    """Heteroskedasticity LM test: n*R^2 of e^2 on the regressors, against
    chi-square(k).

    Without explicit regressors, hour-of-day dummies are used (``hours``
    defaults to index mod 24), which probes diurnal heteroskedasticity.
    """
    e = np.asarray(residuals, dtype=float)
    keep = ~np.isnan(e)
    e = e[keep]
    n = e.size
    if n < 10:
        raise StatsError("breusch_pagan requires n >= 10")
    if np.all(e == 0.0):
        raise StatsError("degenerate auxiliary regression: residuals all zero")
    if regressors is None:
        if hours is None:
            hours = np.arange(np.asarray(residuals).size) % 24
        hours = np.asarray(hours)[keep]
        X = np.zeros((n, 23))
        for h in range(1, 24):
            X[:, h - 1] = (hours == h).astype(float)
    else:
        X = np.asarray(regressors, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        X = X[keep]
        if X.shape[0] != n:
            raise StatsError("regressors must match residual length")
    k = X.shape[1]
    design = np.column_stack([np.ones(n), X])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise StatsError("rank-deficient auxiliary regressors")
    e2 = e * e
    _, aux_resid, ssr, _ = _ols(e2, design)
    sst = float(np.sum((e2 - e2.mean()) ** 2))
    if sst == 0.0:
        raise StatsError("degenerate auxiliary regression: squared residuals constant")
    r2 = 1.0 - ssr / sst
    stat = n * r2
    p = chi2_sf(max(stat, 0.0), k)
    note = "heteroskedastic" if p < 0.05 else "homoskedastic"
    return TestReport("breusch_pagan", float(stat), float(p), k, note)


# -- augmented Dickey-Fuller ---------------------------------------------------

# Response-surface coefficients for unit-root p-values (N = 1), keyed by
# deterministic specification: small-|t| and large-|t| polynomial branches
# plus the validity limits of the approximation.
_ADF_TAU = {
    "nc": dict(star=-1.04, min=-19.04, max=np.inf,
               small=(0.6344, 1.2378, 3.2496e-2),
               large=(0.4797, 9.3557e-1, -0.6999e-1, 3.3066e-2)),
    "c": dict(star=-1.61, min=-18.83, max=2.74,
              small=(2.1659, 1.4412, 3.8269e-2),
              large=(1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2)),
    "ct": dict(star=-2.89, min=-16.18, max=0.70,
               small=(3.2512, 1.6047, 4.9588e-2),
               large=(2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2)),
}


def _adf_pvalue(stat: float, regression: str) -> float:
    tab = _ADF_TAU[regression]
    if stat > tab["max"]:
        return 1.0
    if stat < tab["min"]:
        return 0.0
    coef = tab["small"] if stat <= tab["star"] else tab["large"]
    return float(normal_cdf(np.polyval(coef[::-1], stat)))


def _lagmat(x: np.ndarray, lags: int) -> np.ndarray:
    n = x.size - lags
    out = np.empty((n, lags))
    for k in range(1, lags + 1):
        out[:, k - 1] = x[lags - k:x.size - k]
    return out


def _adf_design(x: np.ndarray, dx: np.ndarray, lags: int, regression: str):
    """Target dx[lags:] regressed on [level, diff lags, deterministics]."""
    y = dx[lags:]
    rows = y.size
    cols = [x[lags:-1]]
    if lags > 0:
        cols.append(_lagmat(dx, lags))
    if regression in ("c", "ct"):
        cols.append(np.ones(rows))
    if regression == "ct":
        cols.append(np.arange(1, rows + 1, dtype=float))
    X = np.column_stack([c if c.ndim == 2 else c[:, None] for c in cols])
    return y, X


def adf_test(series, max_lag: int | None = None, regression: str = "c") -> TestReport:
    """Augmented Dickey-Fuller unit-root test.

    Default regression includes a constant, no trend. The augmentation lag
    is chosen by AIC up to ``max_lag`` (default 12*(n/100)^0.25 rounded
    down) on a common sample; the reported p-value is left-tailed via the
    embedded response-surface tables.
    """
    if regression not in _ADF_TAU:
        raise StatsError(f"unknown regression spec {regression!r}")
    x = np.asarray(series, dtype=float)
    if np.any(np.isnan(x)):
        raise StatsError("adf_test does not accept gaps; pass a gap-free segment")
    n = x.size
    if max_lag is None:
        max_lag = int(np.floor(12.0 * (n / 100.0) ** 0.25))
    if n - max_lag - 1 < 50:
        raise StatsError("series too short after lagging (need >= 50 usable rows)")
    dx = np.diff(x)

    # lag search on a common sample so information criteria are comparable
    y_full = dx[max_lag:]
    rows = y_full.size
    level_full = x[max_lag:-1]
    diff_lags_full = _lagmat(dx, max_lag) if max_lag > 0 else np.empty((rows, 0))
    det: list[np.ndarray] = []
    if regression in ("c", "ct"):
        det.append(np.ones(rows))
    if regression == "ct":
        det.append(np.arange(1, rows + 1, dtype=float))
    best = None
    for lags in range(0, max_lag + 1):
        X = np.column_stack([level_full[:, None], diff_lags_full[:, :lags], *[d[:, None] for d in det]])
        _, _, ssr, _ = _ols(y_full, X)
        k = X.shape[1]
        aic = rows * np.log(ssr / rows) + 2.0 * k
        if best is None or aic < best[0] - 1e-12:
            best = (aic, lags)
    used_lag = best[1]

    y, X = _adf_design(x, dx, used_lag, regression)
    beta, _, _, se = _ols(y, X)
    stat = float(beta[0] / se[0])
    p = _adf_pvalue(stat, regression)
    note = "stationary (unit root rejected)" if p < 0.05 else "unit root not rejected"
    return TestReport("adf", stat, p, used_lag, note)


# -- autocorrelation ------------------------------------------------------------

def acf(series, max_lag: int, seasonal_period: int | None = None) -> np.ndarray:
    """Sample autocorrelations rho[0..max_lag] (rho[0] = 1).

    With ``seasonal_period`` set, that seasonal difference is applied
    before computing the correlations.
    """
    x = _clean(series)
    if seasonal_period:
        if x.size <= seasonal_period:
            raise StatsError("series shorter than the seasonal period")
        x = x[seasonal_period:] - x[:-seasonal_period]
    n = x.size
    if max_lag >= n:
        raise StatsError("max_lag must be smaller than the series length")
    x = x - np.mean(x)
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise StatsError("zero variance")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(np.dot(x[:-k], x[k:])) / denom
    return out


def pacf(series, max_lag: int, seasonal_period: int | None = None) -> np.ndarray:
    """Partial autocorrelations via Durbin-Levinson; pacf[0] = 1 and
    pacf[1] equals acf[1] exactly."""
    rho = acf(series, max_lag, seasonal_period=seasonal_period)
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    if max_lag == 0:
        return out
    a_prev = np.zeros(max_lag + 1)
    v = 1.0
    for k in range(1, max_lag + 1):
        acc = rho[k] - float(np.dot(a_prev[1:k], rho[1:k][::-1]))
        r_k = acc / v
        a = a_prev.copy()
        a[1:k] = a_prev[1:k] - r_k * a_prev[1:k][::-1]
        a[k] = r_k
        v *= 1.0 - r_k * r_k
        a_prev = a
        out[k] = r_k
    return out


# -- correlations ----------------------------------------------------------------

def pearson(x, y) -> tuple[float, float, int]:
    """Pearson r with a two-sided t-test p-value (df = n - 2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = ~(np.isnan(x) | np.isnan(y))
    x, y = x[keep], y[keep]
    n = x.size
    if n < 3:
        raise StatsError("pearson requires n >= 3")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        raise StatsError("zero variance in correlation input")
    r = float(xc @ yc) / denom
    r = max(-1.0, min(1.0, r))
    if abs(r) >= 1.0:
        return r, 0.0, n
    t = r * np.sqrt((n - 2.0) / (1.0 - r * r))
    return r, student_t_two_sided(t, n - 2), n


def windowed_correlation(panel: HourlyPanel, x: str, y: str,
                         hours: set[int] | None = None,
                         months: set[int] | None = None,
                         lag: int = 0) -> CorrelationResult:
    """Pearson correlation of panel series ``x`` against ``y`` lagged by
    ``lag`` hours, restricted to an hour-of-day / month filter.

    The panel's values are used as-is; pass a transformed panel when the
    correlation should be measured in transformed space.
    """
    xs = panel.series(x)
    ys = panel.series(y)
    if lag < 0:
        raise StatsError("lag must be nonnegative")
    if lag >= panel.n:
        raise StatsError("lag exceeds the panel length")
    sel = np.ones(panel.n, dtype=bool)
    if hours is not None:
        sel &= np.isin(panel.hours, list(hours))
    if months is not None:
        sel &= np.isin(panel.months, list(months))
    sel[:lag] = False
    x_values = xs[sel]
    y_values = ys[np.flatnonzero(sel) - lag]
    keep = ~(np.isnan(x_values) | np.isnan(y_values))
    if int(np.sum(keep)) < 30:
        raise StatsError("fewer than 30 observations after filtering")
    r, p, n = pearson(x_values[keep], y_values[keep])
    note = (f"hours={sorted(hours) if hours else 'all'} "
            f"months={sorted(months) if months else 'all'} lag={lag}")
    return CorrelationResult(r, p, n, note)
