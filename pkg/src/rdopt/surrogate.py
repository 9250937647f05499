"""Universal Kriging surrogates: linear trend plus a tensorized correlation kernel.

The model is ``y(x) = f(x)'b + Z(x)`` with ``f(x) = (1, x_1, ..., x_d)`` and
``Z`` a stationary Gaussian process whose correlation is a product over input
dimensions of either a Matern-5/2 or an absolute-exponential term. Inputs are
normalized to the unit cube and outputs standardized before fitting; kernel
lengthscales are chosen by maximizing the concentrated log marginal
likelihood (trend and process variance profiled out by generalized least
squares) with a multi-start derivative-free search.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from .doe import SampleSet, lhs
from .seeding import derive_seed

FAMILIES = ("matern52", "abs_exp")

NUGGET_FLOOR = 1e-8
NUGGET_CEIL = 1e-4
THETA_BOUNDS = (1e-2, 10.0)
N_STARTS = 16
N_REFINE = 4

_SQRT5 = np.sqrt(5.0)


class FitError(RuntimeError):
    """Model fitting failed (degenerate trend matrix or covariance)."""


@dataclass(frozen=True)
class KernelSpec:
    """Tensorized correlation kernel: family, per-dimension lengthscales, variance."""

    family: str
    lengthscales: tuple[float, ...]
    variance: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"kernel family must be one of {FAMILIES}")
        object.__setattr__(self, "lengthscales", tuple(float(t) for t in self.lengthscales))
        if any(t <= 0 for t in self.lengthscales):
            raise ValueError("lengthscales must be positive")
        if not self.variance > 0:
            raise ValueError("variance must be positive")


def correlation(family: str, theta, A, B) -> np.ndarray:
    """Cross-correlation matrix between point sets A (m,d) and B (n,d)."""
    theta = np.asarray(theta, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    # Accumulate the per-dimension scaled distances so only one exp() is needed.
    h_sum = np.zeros((A.shape[0], B.shape[0]))
    poly = np.ones_like(h_sum) if family == "matern52" else None
    for k in range(A.shape[1]):
        h = np.abs(A[:, k, None] - B[None, :, k]) / theta[k]
        h_sum += h
        if poly is not None:
            t = _SQRT5 * h
            poly *= 1.0 + t + t * t / 3.0
    if family == "matern52":
        return poly * np.exp(-_SQRT5 * h_sum)
    if family == "abs_exp":
        return np.exp(-h_sum)
    raise ValueError(f"unknown family {family!r}")


def _chol_with_nugget(R: np.ndarray, floor: float = NUGGET_FLOOR):
    """Cholesky of R + nugget*I, escalating the nugget tenfold on failure."""
    nugget = floor
    n = R.shape[0]
    while True:
        try:
            L = cholesky(R + nugget * np.eye(n), lower=True)
            return L, nugget
        except LinAlgError:
            nugget *= 10.0
            if nugget > NUGGET_CEIL * 10.0:
                return None, nugget


@dataclass
class KrigingModel:
    """Fitted universal-Kriging model with cached factorizations.

    All heavy state is derived deterministically from the training data and
    hyperparameters, so serialization only stores those. Instances are
    immutable in practice; predictions are pure functions of (model, x).
    """

    kernel: KernelSpec
    nugget: float
    x_train: np.ndarray
    y_train: np.ndarray
    trend: np.ndarray
    input_names: tuple[str, ...] | None = None
    # caches, populated in __post_init__
    _x_offset: np.ndarray = field(init=False, repr=False)
    _x_scale: np.ndarray = field(init=False, repr=False)
    _y_offset: float = field(init=False, repr=False)
    _y_scale: float = field(init=False, repr=False)
    _chol: np.ndarray = field(init=False, repr=False)
    _w: np.ndarray = field(init=False, repr=False)
    _g_chol: np.ndarray = field(init=False, repr=False)
    _alpha: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.x_train = np.asarray(self.x_train, dtype=float)
        self.y_train = np.asarray(self.y_train, dtype=float)
        self.trend = np.asarray(self.trend, dtype=float)
        off, scale = _input_normalization(self.x_train)
        self._x_offset, self._x_scale = off, scale
        self._y_offset, self._y_scale = _output_normalization(self.y_train)
        Xn = (self.x_train - off) / scale
        yn = (self.y_train - self._y_offset) / self._y_scale
        R = correlation(self.kernel.family, self.kernel.lengthscales, Xn, Xn)
        L, _ = _chol_with_nugget(R, floor=self.nugget)
        if L is None:
            raise FitError("covariance matrix is not positive definite at the stored nugget")
        F = _trend_matrix(Xn)
        w = solve_triangular(L, F, lower=True)
        g_chol = cholesky(w.T @ w, lower=True)
        resid_n = yn - F @ self.trend
        self._chol = L
        self._w = w
        self._g_chol = g_chol
        self._alpha = cho_solve((L, True), resid_n)

    @property
    def n_train(self) -> int:
        return self.x_train.shape[0]

    @property
    def dim(self) -> int:
        return self.x_train.shape[1]

    def _normalize(self, X: np.ndarray) -> np.ndarray:
        return (X - self._x_offset) / self._x_scale


def _input_normalization(X: np.ndarray):
    off = X.min(axis=0)
    scale = X.max(axis=0) - off
    scale = np.where(scale > 0, scale, 1.0)
    return off, scale


def _output_normalization(y: np.ndarray):
    off = float(y.mean())
    scale = float(y.std())
    return off, (scale if scale > 0 else 1.0)


def _trend_matrix(Xn: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((Xn.shape[0], 1)), Xn])


def _profile_nll(log10_theta, family, Xn, yn, F):
    """Concentrated negative log likelihood; returns inf-like on failure."""
    theta = 10.0**np.asarray(log10_theta)
    R = correlation(family, theta, Xn, Xn)
    L, nugget = _chol_with_nugget(R)
    if L is None:
        return 1e30, None
    n = Xn.shape[0]
    Linv_F = solve_triangular(L, F, lower=True)
    Linv_y = solve_triangular(L, yn, lower=True)
    G = Linv_F.T @ Linv_F
    try:
        g_chol = cholesky(G, lower=True)
    except LinAlgError:
        return 1e30, None
    beta = cho_solve((g_chol, True), Linv_F.T @ Linv_y)
    resid = Linv_y - Linv_F @ beta
    sigma2 = max(float(resid @ resid) / n, 1e-300)
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    nll = n * np.log(sigma2) + log_det
    return nll, (beta, sigma2, nugget)


def fit(
    X,
    y,
    family: str = "matern52",
    seed: int = 0,
    input_names=None,
    n_starts: int = N_STARTS,
    n_refine: int = N_REFINE,
) -> KrigingModel:
    """Fit a universal-Kriging model by concentrated maximum likelihood.

    Lengthscales are searched in log space over ``THETA_BOUNDS`` (normalized
    units) from ``n_starts`` Latin-hypercube starting points; the most
    promising starts are refined with a bounded Powell search. Deterministic
    for a fixed seed.
    """
    if isinstance(X, SampleSet):
        X = X.points
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) with one output per row")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValueError("training data must be finite")
    n, d = X.shape
    if family not in FAMILIES:
        raise ValueError(f"kernel family must be one of {FAMILIES}")
    if n < d + 2:
        raise ValueError(f"need at least d + 2 = {d + 2} training points, got {n}")

    off, scale = _input_normalization(X)
    Xn = (X - off) / scale
    yn_off, yn_scale = _output_normalization(y)
    yn = (y - yn_off) / yn_scale
    F = _trend_matrix(Xn)
    if np.linalg.matrix_rank(F) < d + 1:
        raise FitError("trend matrix is rank deficient (constant or duplicated input column)")

    lo, hi = np.log10(THETA_BOUNDS[0]), np.log10(THETA_BOUNDS[1])
    starts = lo + lhs(n_starts, d, derive_seed(seed, "hyper", family)).points * (hi - lo)

    scores = np.array([_profile_nll(s, family, Xn, yn, F)[0] for s in starts])
    order = np.argsort(scores, kind="stable")[: max(1, n_refine)]

    def objective(log10_theta):
        return _profile_nll(log10_theta, family, Xn, yn, F)[0]

    best_val, best_theta = np.inf, None
    bounds = [(lo, hi)] * d
    for i in order:
        res = optimize.minimize(
            objective,
            starts[i],
            method="Powell",
            bounds=bounds,
            options={"maxiter": 3, "maxfev": 150 * d, "xtol": 1e-3, "ftol": 1e-6},
        )
        if res.fun < best_val:
            best_val, best_theta = float(res.fun), np.clip(res.x, lo, hi)
    if best_theta is None:
        raise FitError("hyperparameter search failed for every start")

    nll, aux = _profile_nll(best_theta, family, Xn, yn, F)
    if aux is None:
        raise FitError("covariance factorization failed at the optimum")
    beta, sigma2, nugget = aux
    kernel = KernelSpec(family, tuple(10.0**best_theta), sigma2)
    return KrigingModel(
        kernel=kernel,
        nugget=nugget,
        x_train=X.copy(),
        y_train=y.copy(),
        trend=beta,
        input_names=tuple(input_names) if input_names is not None else None,
    )


def predict_mean(model: KrigingModel, X) -> np.ndarray:
    """Posterior mean only; the fast path for optimization loops."""
    X = np.asarray(X, dtype=float)
    scalar = X.ndim == 1
    Xq = np.atleast_2d(X)
    if Xq.shape[1] != model.dim:
        raise ValueError(f"expected {model.dim} input columns, got {Xq.shape[1]}")
    Xn = model._normalize(Xq)
    Rq = correlation(model.kernel.family, model.kernel.lengthscales, Xn, model._normalize(model.x_train))
    fq = _trend_matrix(Xn)
    mean = model._y_offset + model._y_scale * (fq @ model.trend + Rq @ model._alpha)
    return float(mean[0]) if scalar else mean


def predict(model: KrigingModel, X):
    """Posterior mean and variance of the trend-corrected predictor.

    The variance accounts for trend-coefficient estimation and is clamped at
    zero against floating-point cancellation. Extrapolation is allowed; the
    variance grows away from the data.
    """
    X = np.asarray(X, dtype=float)
    scalar = X.ndim == 1
    Xq = np.atleast_2d(X)
    if Xq.shape[1] != model.dim:
        raise ValueError(f"expected {model.dim} input columns, got {Xq.shape[1]}")
    Xn = model._normalize(Xq)
    Xt = model._normalize(model.x_train)
    Rq = correlation(model.kernel.family, model.kernel.lengthscales, Xn, Xt)
    fq = _trend_matrix(Xn)
    mean_n = fq @ model.trend + Rq @ model._alpha
    v = solve_triangular(model._chol, Rq.T, lower=True)
    u = fq.T - model._w.T @ v
    t = solve_triangular(model._g_chol, u, lower=True)
    var_n = model.kernel.variance * (
        1.0 + model.nugget - np.sum(v * v, axis=0) + np.sum(t * t, axis=0)
    )
    var = np.maximum(var_n, 0.0) * model._y_scale**2
    mean = model._y_offset + model._y_scale * mean_n
    if scalar:
        return float(mean[0]), float(var[0])
    return mean, var


def nrmse(y_real, y_pred) -> float:
    """Prediction error as a percentage: ||y_real - y_pred|| / ||y_real|| * 100."""
    y_real = np.asarray(y_real, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_real.shape != y_pred.shape or y_real.size == 0:
        raise ValueError("inputs must be equal-length non-empty vectors")
    denom = np.linalg.norm(y_real)
    if denom == 0:
        raise ValueError("||y_real|| is zero; the metric is undefined")
    return float(np.linalg.norm(y_real - y_pred) / denom * 100.0)


_FILE_FORMAT = "rdopt.kriging"
_FILE_VERSION = 1


def save_model(model: KrigingModel, path) -> None:
    """Serialize a model to a self-describing JSON file."""
    payload = {
        "format": _FILE_FORMAT,
        "version": _FILE_VERSION,
        "kernel": {
            "family": model.kernel.family,
            "lengthscales": list(model.kernel.lengthscales),
            "variance": model.kernel.variance,
        },
        "nugget": model.nugget,
        "trend": model.trend.tolist(),
        "input_names": list(model.input_names) if model.input_names else None,
        "x_train": model.x_train.tolist(),
        "y_train": model.y_train.tolist(),
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True))


def load_model(path) -> KrigingModel:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != _FILE_FORMAT:
        raise ValueError(f"{path} is not a serialized Kriging model")
    if payload.get("version") != _FILE_VERSION:
        raise ValueError(f"unsupported model file version {payload.get('version')}")
    kern = payload["kernel"]
    names = payload.get("input_names")
    return KrigingModel(
        kernel=KernelSpec(kern["family"], tuple(kern["lengthscales"]), kern["variance"]),
        nugget=float(payload["nugget"]),
        x_train=np.array(payload["x_train"], dtype=float),
        y_train=np.array(payload["y_train"], dtype=float),
        trend=np.array(payload["trend"], dtype=float),
        input_names=tuple(names) if names else None,
    )
