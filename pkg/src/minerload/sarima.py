"""Seasonal ARIMA engine: differencing, simulation, conditional
sum-of-squares estimation, AIC order selection, and forecasting.

Model convention, with B the backshift operator and S the season length:

    (1 - sum Phi_i B^(iS)) (1 - sum phi_i B^i) diff(y)
        = (1 + sum Theta_i B^(iS)) (1 + sum theta_i B^i) eps

Note the "+" sign on both moving-average polynomials; many texts use the
opposite sign for MA coefficients.

Estimation minimizes the conditional sum of squares (the first p + P*S
differenced observations condition the recursion, pre-sample innovations
are zero). Stationarity/invertibility are enforced through a partial-
autocorrelation reparameterization of each polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.optimize import minimize
from scipy.signal import lfilter

from .special import normal_sf

__all__ = [
    "SarimaError",
    "SarimaOrder",
    "SarimaParams",
    "SarimaFit",
    "difference",
    "difference_initials",
    "integrate",
    "simulate",
    "fit",
    "select_order",
    "forecast",
]

MAX_ORDER = 5


class SarimaError(ValueError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SarimaOrder:
    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    S: int = 24

    def __post_init__(self):
        for name in ("p", "d", "q", "P", "D", "Q"):
            v = getattr(self, name)
            if not 0 <= v <= MAX_ORDER:
                raise SarimaError(f"order component {name}={v} outside [0, {MAX_ORDER}]")
        if self.S < 1:
            raise SarimaError("season length S must be >= 1")

    @property
    def k_params(self) -> int:
        """Coefficient count plus one for the innovation scale."""
        return self.p + self.q + self.P + self.Q + 1

    @property
    def n_diff(self) -> int:
        return self.d + self.D * self.S

    def label(self) -> str:
        return f"({self.p},{self.d},{self.q})({self.P},{self.D},{self.Q})[{self.S}]"


@dataclass(frozen=True)
class SarimaParams:
    phi: tuple[float, ...] = ()
    theta: tuple[float, ...] = ()
    Phi: tuple[float, ...] = ()
    Theta: tuple[float, ...] = ()
    sigma: float = 1.0

    def __post_init__(self):
        for name in ("phi", "theta", "Phi", "Theta"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.sigma <= 0:
            raise SarimaError("sigma must be positive")


# -- differencing -------------------------------------------------------------

def difference(series, d: int, D: int, S: int) -> np.ndarray:
    """Apply d regular then D seasonal (period S) differences."""
    y = np.asarray(series, dtype=float)
    if y.size <= d + D * S:
        raise SarimaError("series shorter than the requested differencing")
    for _ in range(d):
        y = np.diff(y)
    for _ in range(D):
        y = y[S:] - y[:-S]
    return y


def difference_initials(series, d: int, D: int, S: int) -> np.ndarray:
    """The d + D*S values :func:`integrate` needs to undo :func:`difference`."""
    y = np.asarray(series, dtype=float)
    if y.size <= d + D * S:
        raise SarimaError("series shorter than the requested differencing")
    keep: list[np.ndarray] = []
    for _ in range(d):
        keep.append(y[:1])
        y = np.diff(y)
    for _ in range(D):
        keep.append(y[:S])
        y = y[S:] - y[:-S]
    return np.concatenate(keep) if keep else np.empty(0)


def integrate(diff_series, d: int, D: int, S: int, initial_values) -> np.ndarray:
    """Invert :func:`difference` given the retained initial values."""
    w = np.asarray(diff_series, dtype=float)
    init = np.asarray(initial_values, dtype=float)
    if init.size != d + D * S:
        raise SarimaError(f"expected {d + D * S} initial values, got {init.size}")
    pos = init.size
    for _ in range(D):
        pos -= S
        head = init[pos:pos + S]
        out = np.empty(w.size + S)
        out[:S] = head
        for i in range(w.size):
            out[S + i] = out[i] + w[i]
        w = out
    for _ in range(d):
        pos -= 1
        out = np.empty(w.size + 1)
        out[0] = init[pos]
        out[1:] = init[pos] + np.cumsum(w)
        w = out
    return w


# -- polynomial helpers --------------------------------------------------------

def _ar_poly(phi, Phi, S: int) -> np.ndarray:
    """(1 - sum phi_i B^i)(1 - sum Phi_j B^(jS)) as coefficient array."""
    p1 = np.zeros(len(phi) + 1)
    p1[0] = 1.0
    if len(phi):
        p1[1:] = -np.asarray(phi, dtype=float)
    p2 = np.zeros(len(Phi) * S + 1)
    p2[0] = 1.0
    for j, v in enumerate(Phi, start=1):
        p2[j * S] = -v
    return np.convolve(p1, p2)


def _ma_poly(theta, Theta, S: int) -> np.ndarray:
    """(1 + sum theta_i B^i)(1 + sum Theta_j B^(jS)) as coefficient array."""
    p1 = np.zeros(len(theta) + 1)
    p1[0] = 1.0
    if len(theta):
        p1[1:] = np.asarray(theta, dtype=float)
    p2 = np.zeros(len(Theta) * S + 1)
    p2[0] = 1.0
    for j, v in enumerate(Theta, start=1):
        p2[j * S] = v
    return np.convolve(p1, p2)


def _roots_outside(coeffs: np.ndarray) -> bool:
    """True when all roots of 1 + c_1 z + ... + c_k z^k lie outside the
    unit circle (coeffs includes the leading 1)."""
    trimmed = np.trim_zeros(coeffs, "b")
    if trimmed.size <= 1:
        return True
    roots = np.roots(trimmed[::-1])
    return bool(np.all(np.abs(roots) > 1.0 + 1e-9))


def _validate_params(order: SarimaOrder, params: SarimaParams) -> None:
    if (len(params.phi), len(params.theta), len(params.Phi), len(params.Theta)) != \
            (order.p, order.q, order.P, order.Q):
        raise SarimaError("parameter vector lengths do not match the order")
    checks = [
        ("AR", np.concatenate([[1.0], -np.asarray(params.phi)]) if order.p else None),
        ("seasonal AR", np.concatenate([[1.0], -np.asarray(params.Phi)]) if order.P else None),
        ("MA", np.concatenate([[1.0], np.asarray(params.theta)]) if order.q else None),
        ("seasonal MA", np.concatenate([[1.0], np.asarray(params.Theta)]) if order.Q else None),
    ]
    for name, poly in checks:
        if poly is not None and not _roots_outside(poly):
            kind = "non-stationary" if "AR" in name and "MA" not in name else "non-invertible"
            raise SarimaError(f"{kind} {name} polynomial")


# -- partial-autocorrelation reparameterization ---------------------------------

def _partials_to_coeffs(r: np.ndarray) -> np.ndarray:
    """Levinson recursion: partials in (-1,1) -> stationary AR coefficients."""
    k = r.size
    a = np.zeros(k)
    for j in range(k):
        new = a.copy()
        new[j] = r[j]
        new[:j] = a[:j] - r[j] * a[:j][::-1]
        a = new
    return a


def _coeffs_to_partials(a: np.ndarray) -> np.ndarray:
    """Inverse Levinson recursion (valid for stationary coefficients)."""
    a = np.asarray(a, dtype=float).copy()
    k = a.size
    r = np.zeros(k)
    for j in range(k - 1, -1, -1):
        r[j] = a[j]
        if j > 0:
            denom = 1.0 - a[j] ** 2
            prev = (a[:j] + a[j] * a[:j][::-1]) / denom
            a = np.concatenate([prev, [0.0] * (k - j)])
    return r


def _unpack(u: np.ndarray, order: SarimaOrder) -> SarimaParams:
    i = 0
    phi = _partials_to_coeffs(np.tanh(u[i:i + order.p])); i += order.p
    theta = -_partials_to_coeffs(np.tanh(u[i:i + order.q])); i += order.q
    Phi = _partials_to_coeffs(np.tanh(u[i:i + order.P])); i += order.P
    Theta = -_partials_to_coeffs(np.tanh(u[i:i + order.Q])); i += order.Q
    return SarimaParams(tuple(phi), tuple(theta), tuple(Phi), tuple(Theta), 1.0)


def _pack(params: SarimaParams) -> np.ndarray:
    blocks = []
    for values, flip in ((params.phi, 1.0), (params.theta, -1.0),
                         (params.Phi, 1.0), (params.Theta, -1.0)):
        if values:
            partials = _coeffs_to_partials(flip * np.asarray(values))
            blocks.append(np.arctanh(np.clip(partials, -1 + 1e-12, 1 - 1e-12)))
    return np.concatenate(blocks) if blocks else np.empty(0)


# -- conditional sum of squares ---------------------------------------------------

def _css_residuals(w: np.ndarray, ar: np.ndarray, ma: np.ndarray) -> np.ndarray:
    """Innovation residuals conditioning on the first len(ar)-1 values of w
    and zero pre-sample innovations."""
    ka = ar.size - 1
    kb = ma.size - 1
    if w.size <= ka:
        raise SarimaError("differenced series shorter than the AR lag span")
    if ka > 0:
        lagged = sliding_window_view(w, ka)[:-1]      # rows: w[t-ka .. t-1]
        z = w[ka:] + lagged @ ar[1:][::-1]            # ar holds 1, -a_1, ...
    else:
        z = w.copy()
    if kb > 0:
        e = lfilter([1.0], ma, z)
    else:
        e = z
    return e


def _css_value(w: np.ndarray, order: SarimaOrder, params: SarimaParams) -> tuple[float, int]:
    ar = _ar_poly(params.phi, params.Phi, order.S)
    ma = _ma_poly(params.theta, params.Theta, order.S)
    e = _css_residuals(w, ar, ma)
    return float(e @ e), e.size


@dataclass
class SarimaFit:
    """Estimated seasonal ARIMA model."""

    order: SarimaOrder
    params: SarimaParams
    se: dict[str, float]
    p_values: dict[str, float]
    sigma_se: float
    aic: float
    loglik: float
    residuals: np.ndarray
    neff: int
    converged: bool
    initial_values: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def sigma(self) -> float:
        return self.params.sigma

    def coefficients(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for i, v in enumerate(self.params.phi, 1):
            out[f"phi_{i}"] = v
        for i, v in enumerate(self.params.theta, 1):
            out[f"theta_{i}"] = v
        for i, v in enumerate(self.params.Phi, 1):
            out[f"seasonal_phi_{i}"] = v
        for i, v in enumerate(self.params.Theta, 1):
            out[f"seasonal_theta_{i}"] = v
        return out

    def to_dict(self) -> dict:
        return {
            "order": {"p": self.order.p, "d": self.order.d, "q": self.order.q,
                      "P": self.order.P, "D": self.order.D, "Q": self.order.Q,
                      "S": self.order.S},
            "coefficients": self.coefficients(),
            "se": dict(self.se),
            "p_values": dict(self.p_values),
            "sigma": self.sigma,
            "sigma_se": self.sigma_se,
            "aic": self.aic,
            "loglik": self.loglik,
            "neff": self.neff,
            "converged": self.converged,
        }


def simulate(order: SarimaOrder, params: SarimaParams, n: int, seed: int,
             burn_in: int | None = None, seasonal_damping: float = 1.0) -> np.ndarray:
    """Draw a length-n sample path (differencing inverted, zero initial
    levels) with standard-normal innovations scaled by sigma.

    ``seasonal_damping`` < 1 replaces each exact seasonal summation with a
    mean-reverting one (y_t = damping * y_{t-S} + w_t), which bounds the
    level drift of integrated models over long horizons while leaving the
    short-run dynamics untouched; synthetic-load generation uses this.
    """
    _validate_params(order, params)
    if burn_in is None:
        burn_in = 10 * order.S
    if burn_in < 10 * order.S:
        raise SarimaError(f"burn_in must be >= {10 * order.S}")
    if not 0.0 < seasonal_damping <= 1.0:
        raise SarimaError("seasonal_damping must lie in (0, 1]")
    m = n - order.n_diff
    if m <= 0:
        raise SarimaError("n must exceed d + D*S")
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(burn_in + m) * params.sigma
    ar = _ar_poly(params.phi, params.Phi, order.S)
    ma = _ma_poly(params.theta, params.Theta, order.S)
    w = lfilter(ma, ar, eps)[burn_in:]
    if seasonal_damping == 1.0:
        return integrate(w, order.d, order.D, order.S, np.zeros(order.n_diff))
    for _ in range(order.D):
        out = np.zeros(w.size + order.S)
        for i in range(order.S, out.size):
            out[i] = seasonal_damping * out[i - order.S] + w[i - order.S]
        w = out
    for _ in range(order.d):
        out = np.zeros(w.size + 1)
        for i in range(1, out.size):
            out[i] = seasonal_damping * out[i - 1] + w[i - 1]
        w = out
    return w


def fit(series, order: SarimaOrder) -> SarimaFit:
    """Estimate coefficients by conditional sum of squares.

    Standard errors come from the numerical Hessian of the objective at
    the optimum, p-values from the normal approximation.
    """
    y = np.asarray(series, dtype=float)
    if np.any(np.isnan(y)):
        raise SarimaError("fit does not accept gaps; pass a gap-free segment")
    min_len = 10 * order.k_params + order.n_diff
    if y.size < min_len:
        raise SarimaError(f"series length {y.size} below required {min_len}")
    w = difference(y, order.d, order.D, order.S)
    if np.allclose(w, w[0]):
        raise SarimaError("differenced series is constant")

    n_coef = order.p + order.q + order.P + order.Q
    if n_coef == 0:
        css, neff = float(w @ w), w.size
        params = SarimaParams(sigma=np.sqrt(css / neff))
        return _build_fit(w, y, order, params, np.empty(0), converged=True)

    def objective(u: np.ndarray) -> float:
        css, neff = _css_value(w, order, _unpack(u, order))
        return neff * np.log(max(css, 1e-300) / neff)

    u0 = np.zeros(n_coef)
    best = minimize(objective, u0, method="Nelder-Mead",
                    options=dict(xatol=1e-7, fatol=1e-10,
                                 maxiter=4000, maxfev=8000))
    polish = minimize(objective, best.x, method="BFGS",
                      options=dict(gtol=1e-8, maxiter=500))
    if polish.fun <= best.fun:
        result, converged = polish, bool(polish.success or best.success)
    else:
        result, converged = best, bool(best.success)
    params = _unpack(result.x, order)
    fitted = _build_fit(w, y, order, params, result.x, converged=converged)
    if not converged:
        raise SarimaError("optimizer failed to converge", best=fitted)
    return fitted


def _build_fit(w: np.ndarray, y: np.ndarray, order: SarimaOrder,
               params: SarimaParams, u_opt: np.ndarray, converged: bool) -> SarimaFit:
    ar = _ar_poly(params.phi, params.Phi, order.S)
    ma = _ma_poly(params.theta, params.Theta, order.S)
    e = _css_residuals(w, ar, ma)
    neff = e.size
    css = float(e @ e)
    sigma = float(np.sqrt(css / neff))
    params = SarimaParams(params.phi, params.theta, params.Phi, params.Theta, sigma)
    loglik = -0.5 * neff * (np.log(2.0 * np.pi * sigma * sigma) + 1.0)
    aic = 2.0 * order.k_params - 2.0 * loglik

    names = list(_coef_names(order))
    se, p_values = {}, {}
    if names:
        hess = _css_hessian(w, order, params) / (2.0 * sigma * sigma)
        cov = np.linalg.pinv(hess)
        diag = np.clip(np.diag(cov), 0.0, None)
        for name, variance, value in zip(names, diag, _coef_values(params)):
            s = float(np.sqrt(variance))
            se[name] = s
            p_values[name] = float(2.0 * normal_sf(abs(value) / s)) if s > 0 else 0.0
    sigma_se = sigma / np.sqrt(2.0 * neff)
    initials = difference_initials(y, order.d, order.D, order.S)
    return SarimaFit(order=order, params=params, se=se, p_values=p_values,
                     sigma_se=float(sigma_se), aic=float(aic), loglik=float(loglik),
                     residuals=e, neff=neff, converged=converged,
                     initial_values=initials)


def _coef_names(order: SarimaOrder):
    for i in range(1, order.p + 1):
        yield f"phi_{i}"
    for i in range(1, order.q + 1):
        yield f"theta_{i}"
    for i in range(1, order.P + 1):
        yield f"seasonal_phi_{i}"
    for i in range(1, order.Q + 1):
        yield f"seasonal_theta_{i}"


def _coef_values(params: SarimaParams):
    yield from params.phi
    yield from params.theta
    yield from params.Phi
    yield from params.Theta


def _with_coeffs(order: SarimaOrder, c: np.ndarray) -> SarimaParams:
    i = 0
    phi = tuple(c[i:i + order.p]); i += order.p
    theta = tuple(c[i:i + order.q]); i += order.q
    Phi = tuple(c[i:i + order.P]); i += order.P
    Theta = tuple(c[i:i + order.Q]); i += order.Q
    return SarimaParams(phi, theta, Phi, Theta, 1.0)


def _css_hessian(w: np.ndarray, order: SarimaOrder, params: SarimaParams) -> np.ndarray:
    """Central-difference Hessian of CSS in natural coefficient space."""
    c0 = np.array(list(_coef_values(params)))
    k = c0.size
    h = 1e-4 * np.maximum(1.0, np.abs(c0))

    def f(c):
        css, _ = _css_value(w, order, _with_coeffs(order, c))
        return css

    hess = np.empty((k, k))
    f0 = f(c0)
    for i in range(k):
        ei = np.zeros(k); ei[i] = h[i]
        hess[i, i] = (f(c0 + ei) - 2.0 * f0 + f(c0 - ei)) / (h[i] * h[i])
        for j in range(i + 1, k):
            ej = np.zeros(k); ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                f(c0 + ei + ej) - f(c0 + ei - ej) - f(c0 - ei + ej) + f(c0 - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return hess


def select_order(series, grid) -> tuple[SarimaOrder, list[dict]]:
    """Fit every candidate order and return the AIC minimizer plus the
    per-candidate table. Ties within 1e-9 go to the smaller parameter
    count."""
    candidates = list(grid)
    if not candidates:
        raise SarimaError("candidate grid is empty")
    table = []
    best: tuple[float, int, SarimaOrder] | None = None
    failures = []
    for order in candidates:
        try:
            fitted = fit(series, order)
        except SarimaError as exc:
            failures.append(f"{order.label()}: {exc}")
            table.append({"order": order.label(), "aic": None, "error": str(exc)})
            continue
        table.append({"order": order.label(), "aic": fitted.aic, "error": None})
        key = (fitted.aic, order.k_params, order)
        if best is None or key[0] < best[0] - 1e-9 or (
                abs(key[0] - best[0]) <= 1e-9 and key[1] < best[1]):
            best = (fitted.aic, order.k_params, order)
    if best is None:
        raise SarimaError("all candidates failed: " + "; ".join(failures))
    return best[2], table


def forecast(fitted: SarimaFit, horizon: int, last_observations) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-MSE point forecasts and per-step forecast standard
    deviations, conditioning on ``last_observations`` (undifferenced)."""
    if horizon < 0:
        raise SarimaError("horizon must be nonnegative")
    if horizon == 0:
        return np.empty(0), np.empty(0)
    order = fitted.order
    params = fitted.params
    ar = _ar_poly(params.phi, params.Phi, order.S)
    ma = _ma_poly(params.theta, params.Theta, order.S)
    diff_poly = np.array([1.0])
    for _ in range(order.d):
        diff_poly = np.convolve(diff_poly, [1.0, -1.0])
    for _ in range(order.D):
        seasonal = np.zeros(order.S + 1)
        seasonal[0], seasonal[-1] = 1.0, -1.0
        diff_poly = np.convolve(diff_poly, seasonal)
    ar_full = np.convolve(ar, diff_poly)
    ka_full = ar_full.size - 1
    kb = ma.size - 1

    y_hist = np.asarray(last_observations, dtype=float)
    if y_hist.size < max(ka_full, order.n_diff + 1):
        raise SarimaError(f"need at least {max(ka_full, order.n_diff + 1)} conditioning observations")
    # innovation history from the CSS recursion on the supplied window
    if kb > 0:
        w_hist = difference(y_hist, order.d, order.D, order.S)
        e_hist = _css_residuals(w_hist, ar, ma) if w_hist.size > ar.size - 1 else np.zeros(0)
    else:
        e_hist = np.zeros(0)

    y_ext = np.concatenate([y_hist, np.zeros(horizon)])
    e_ext = np.concatenate([np.zeros(max(0, kb - e_hist.size)), e_hist, np.zeros(horizon)])
    base = y_hist.size
    e_base = e_ext.size - horizon
    for j in range(horizon):
        t = base + j
        acc = 0.0
        for k in range(1, ka_full + 1):
            acc -= ar_full[k] * y_ext[t - k]
        for l in range(1, kb + 1):
            idx = e_base + j - l
            if 0 <= idx < e_base:                 # past innovations only
                acc += ma[l] * e_ext[idx]
        y_ext[t] = acc
    points = y_ext[base:]

    # psi weights of ma/ar_full give the forecast error variance
    psi = np.zeros(horizon)
    for j in range(horizon):
        value = ma[j] if j < ma.size else 0.0
        for k in range(1, min(j, ka_full) + 1):
            value -= ar_full[k] * psi[j - k]
        psi[j] = value
    std = params.sigma * np.sqrt(np.cumsum(psi * psi))
    return points, std
