"""Staged least-squares machinery: lagged/gated design matrices,
OLS with classical standard errors, sequential residual regression, and
fit metrics.

Gating multiplies a regressor by its binary hour-window indicator, so a
gated column contributes zero outside its window and every row keeps a
common time index for the downstream ARIMA stage.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .panel import HourlyPanel, SeasonMask, indicator
from .special import student_t_two_sided

__all__ = [
    "RegressError",
    "LagSpec",
    "DesignMatrix",
    "StepResult",
    "FitMetrics",
    "design_matrix",
    "ols",
    "staged_regression",
    "metrics",
]

COLLINEARITY_LIMIT = 1e10


class RegressError(ValueError):
    pass


@dataclass(frozen=True)
class LagSpec:
    """One regressor source: series name, hour lags, optional gate."""

    source: str
    lags: tuple[int, ...]
    gate: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "lags", tuple(int(v) for v in self.lags))
        if len(set(self.lags)) != len(self.lags):
            raise RegressError("lags must be distinct")
        if any(l < 0 for l in self.lags):
            raise RegressError("lags must be nonnegative")
        if self.gate not in ("none", "day", "peak", "fourcp"):
            raise RegressError(f"unknown gate {self.gate!r}")

    def labels(self) -> list[str]:
        gate = "" if self.gate == "none" else f"*{self.gate}"
        return [f"{self.source}[t-{lag}]{gate}" for lag in self.lags]


@dataclass
class DesignMatrix:
    X: np.ndarray
    rows: np.ndarray            # positions into the panel axis
    labels: list[str]
    dropped_rows: int
    dropped_columns: list[str]  # all-zero gated columns removed with a warning


@dataclass
class StepResult:
    """One regression stage: estimates on the retained regressors."""

    coefficients: dict[str, float]
    se: dict[str, float]
    p_values: dict[str, float]
    residuals: np.ndarray
    train_mse: float
    test_mse: float | None = None
    dropped: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "coefficients": {k: float(v) for k, v in self.coefficients.items()},
            "se": {k: float(v) for k, v in self.se.items()},
            "p_values": {k: float(v) for k, v in self.p_values.items()},
            "train_mse": float(self.train_mse),
            "test_mse": None if self.test_mse is None else float(self.test_mse),
            "dropped": list(self.dropped),
        }


@dataclass(frozen=True)
class FitMetrics:
    mse: float
    rmse: float
    mape: float                   # percent
    r_squared: float
    r_squared_iqr75: float
    mape_excluded: int = 0        # near-zero true values skipped by MAPE

    def to_dict(self) -> dict:
        return {"mse": self.mse, "rmse": self.rmse, "mape": self.mape,
                "r_squared": self.r_squared,
                "r_squared_iqr75": self.r_squared_iqr75,
                "mape_excluded": self.mape_excluded}


def _gate_series(panel: HourlyPanel, gate: str, season_mask: SeasonMask) -> np.ndarray:
    if gate == "none":
        return np.ones(panel.n)
    return indicator(panel, season_mask, gate)


def design_matrix(panel: HourlyPanel, specs: list[LagSpec], season_mask: SeasonMask,
                  rows: np.ndarray | None = None,
                  values: dict[str, np.ndarray] | None = None) -> DesignMatrix:
    """Build the lagged, gated design matrix.

    ``rows`` restricts the row universe (boolean mask over the panel
    axis); ``values`` overrides panel columns by name, letting callers
    regress on transformed series. Rows whose needed (gated-in) values
    are missing are dropped and counted; all-zero gated columns are
    dropped with a warning.
    """
    if not specs:
        raise RegressError("no regressor specs given")
    n = panel.n
    max_lag = max(max(spec.lags) for spec in specs)
    if max_lag >= n:
        raise RegressError("lags exceed the available history")
    universe = np.ones(n, dtype=bool) if rows is None else np.asarray(rows, dtype=bool).copy()
    universe[:max_lag] = False
    if not np.any(universe):
        raise RegressError("empty effective sample after lag trimming")

    columns = []
    labels = []
    for spec in specs:
        source = (values or {}).get(spec.source)
        if source is None:
            source = panel.series(spec.source)
        source = np.asarray(source, dtype=float)
        gate = _gate_series(panel, spec.gate, season_mask)
        for lag, label in zip(spec.lags, spec.labels()):
            col = np.full(n, np.nan)
            shifted = source[:n - lag] if lag else source
            col[lag:] = shifted
            gated = np.where(gate == 0.0, 0.0, col * gate)  # 0 * NaN stays 0
            columns.append(gated)
            labels.append(label)
    X_full = np.column_stack(columns)

    finite = ~np.isnan(X_full).any(axis=1)
    keep = universe & finite
    dropped_rows = int(np.sum(universe & ~finite))
    if not np.any(keep):
        raise RegressError("empty effective sample after dropping missing rows")
    X = X_full[keep]

    dropped_columns = [label for j, label in enumerate(labels)
                       if not np.any(X[:, j] != 0.0)]
    if dropped_columns:
        warnings.warn(f"dropping all-zero gated columns: {dropped_columns}",
                      stacklevel=2)
        keep_cols = [j for j, label in enumerate(labels) if label not in dropped_columns]
        X = X[:, keep_cols]
        labels = [labels[j] for j in keep_cols]
    if X.shape[1] == 0:
        raise RegressError("no usable columns remain")

    _check_collinearity(X, labels)
    return DesignMatrix(X=X, rows=np.flatnonzero(keep), labels=labels,
                        dropped_rows=dropped_rows, dropped_columns=dropped_columns)


def _check_collinearity(X: np.ndarray, labels: list[str]) -> None:
    scale = np.sqrt(np.mean(X * X, axis=0))
    scale[scale == 0.0] = 1.0
    s = np.linalg.svd(X / scale, compute_uv=False)
    if s[-1] == 0.0 or s[0] / s[-1] > COLLINEARITY_LIMIT:
        # name the columns implicated by the smallest singular direction
        _, _, vt = np.linalg.svd(X / scale, full_matrices=False)
        weights = np.abs(vt[-1])
        involved = [labels[j] for j in np.argsort(weights)[::-1][:max(2, int(np.sum(weights > 0.3)))]]
        raise RegressError(f"collinear columns (condition number > {COLLINEARITY_LIMIT:.0e}): {involved}")


def ols(X: np.ndarray, y: np.ndarray, labels: list[str] | None = None) -> StepResult:
    """Least squares with sigma^2 (X'X)^-1 standard errors and two-sided
    t p-values."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if labels is None:
        labels = [f"x{j}" for j in range(k)]
    if y.size != n:
        raise RegressError("target length does not match the design")
    if n < k + 10:
        raise RegressError(f"need at least {k + 10} rows for {k} regressors")
    if np.linalg.matrix_rank(X) < k:
        raise RegressError("rank-deficient design")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ beta
    resid = y - fitted
    dof = n - k
    sigma2 = float(resid @ resid) / dof
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(np.clip(np.diag(xtx_inv) * sigma2, 0.0, None))
    p = np.array([student_t_two_sided(b / s, dof) if s > 0 else 0.0
                  for b, s in zip(beta, se)])
    return StepResult(
        coefficients=dict(zip(labels, map(float, beta))),
        se=dict(zip(labels, map(float, se))),
        p_values=dict(zip(labels, map(float, p))),
        residuals=resid,
        train_mse=float(np.mean(resid ** 2)),
    )


def staged_regression(panel: HourlyPanel, stages: list[list[LagSpec]],
                      season_mask: SeasonMask, alpha: float = 0.05,
                      target: str = "miner_mw",
                      values: dict[str, np.ndarray] | None = None,
                      train_rows: np.ndarray | None = None) -> tuple[list[StepResult], np.ndarray]:
    """Sequential residual regression.

    Stage k regresses the running residual on its own design, prunes
    regressors with p > alpha (refitting until the retained set is
    stable), and subtracts the fitted contribution everywhere it is
    computable. Returns the per-stage results and the final residual
    series on the panel axis (NaN where undefined).

    A stage that loses all regressors to pruning is recorded as empty and
    passes its residual through unchanged.
    """
    if not stages:
        raise RegressError("stages must be nonempty")
    if not 0.0 < alpha < 1.0:
        raise RegressError("alpha must lie in (0, 1)")
    target_values = (values or {}).get(target)
    if target_values is None:
        target_values = panel.series(target)
    residual = np.asarray(target_values, dtype=float).copy()
    results: list[StepResult] = []

    for stage_specs in stages:
        design = design_matrix(panel, stage_specs, season_mask, rows=train_rows, values=values)
        rows = design.rows
        y = residual[rows]
        usable = ~np.isnan(y)
        if not np.any(usable):
            raise RegressError("stage has no usable target rows")
        X_fit, y_fit = design.X[usable], y[usable]
        labels = list(design.labels)

        step = None
        while labels:
            step = ols(X_fit, y_fit, labels)
            weak = [l for l in labels if step.p_values[l] > alpha]
            if not weak:
                break
            keep = [j for j, l in enumerate(labels) if l not in weak]
            labels = [labels[j] for j in keep]
            X_fit = X_fit[:, keep]
            step = None
        if not labels:
            results.append(StepResult(coefficients={}, se={}, p_values={},
                                      residuals=residual[rows].copy(),
                                      train_mse=float(np.nanmean(residual[rows] ** 2)),
                                      dropped=list(design.labels)))
            continue

        # subtract the retained contribution wherever it is computable
        full = design_matrix(panel, stage_specs, season_mask, rows=None, values=values)
        beta = np.array([step.coefficients.get(l, 0.0) for l in full.labels])
        contribution = np.full(panel.n, np.nan)
        contribution[full.rows] = full.X @ beta
        residual = residual - contribution
        dropped = [l for l in design.labels if l not in labels]
        results.append(StepResult(coefficients=step.coefficients, se=step.se,
                                  p_values=step.p_values,
                                  residuals=step.residuals,
                                  train_mse=step.train_mse,
                                  dropped=dropped))
    return results, residual


def metrics(true_series, predicted_series) -> FitMetrics:
    """MSE/RMSE/MAPE/R^2 plus R^2 restricted to errors inside the central
    75% quantile range."""
    y = np.asarray(true_series, dtype=float)
    yhat = np.asarray(predicted_series, dtype=float)
    if y.shape != yhat.shape or y.size < 2:
        raise RegressError("series must share a length >= 2")
    keep = ~(np.isnan(y) | np.isnan(yhat))
    y, yhat = y[keep], yhat[keep]
    if y.size < 2:
        raise RegressError("fewer than 2 paired observations")
    err = y - yhat
    mse = float(np.mean(err ** 2))
    rmse = float(np.sqrt(mse))

    nonzero = np.abs(y) > 1e-9
    excluded = int(np.sum(~nonzero))
    if not np.any(nonzero):
        raise RegressError("MAPE undefined: all true values are (near) zero")
    mape = float(np.mean(np.abs(err[nonzero] / y[nonzero]))) * 100.0

    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(err ** 2)) / sst if sst > 0 else float("nan")

    lo, hi = np.quantile(err, [0.125, 0.875])
    inside = (err >= lo) & (err <= hi)
    y_in, err_in = y[inside], err[inside]
    sst_in = float(np.sum((y_in - y_in.mean()) ** 2))
    r2_iqr = 1.0 - float(np.sum(err_in ** 2)) / sst_in if sst_in > 0 else float("nan")
    return FitMetrics(mse=mse, rmse=rmse, mape=mape, r_squared=r2,
                      r_squared_iqr75=r2_iqr, mape_excluded=excluded)
