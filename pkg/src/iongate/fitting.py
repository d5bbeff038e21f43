"""Least-squares fits used by the analysis, as scikit-learn style regressors.

Each estimator takes a single feature (a phase, an angle or a time) and can be
dropped into sklearn tooling (``clone``, ``get_params``, pipelines).
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import curve_fit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.linear_model import LinearRegression
from sklearn.utils.validation import check_is_fitted, check_array, check_X_y


def _column(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X = check_array(X)
    if X.shape[1] != 1:
        raise ValueError(f"expected a single feature column, got {X.shape[1]}")
    return X[:, 0]


class HarmonicFit(RegressorMixin, BaseEstimator):
    """Fit ``y = c0 + A1*cos(x + a1) + A2*cos(2x + a2)`` by linear least squares.

    Used on parity-vs-phase curves: ``amp_cos_2phi_`` is the two-ion coherence
    (visibility), ``amp_cos_phi_`` the single-ion component.
    """

    def __init__(self, min_points: int = 8):
        self.min_points = min_points

    @staticmethod
    def _design(x):
        return np.column_stack([np.ones_like(x), np.cos(x), np.sin(x), np.cos(2 * x), np.sin(2 * x)])

    def fit(self, X, y):
        X, y = check_X_y(np.asarray(X, dtype=float).reshape(len(y), -1), y)
        x = X[:, 0]
        if len(np.unique(np.mod(x, 2 * np.pi).round(12))) < self.min_points:
            raise ValueError(f"harmonic fit needs at least {self.min_points} distinct phases")
        A = self._design(x)
        if np.linalg.matrix_rank(A) < A.shape[1]:
            raise ValueError("degenerate phase grid")
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        c0, a1, b1, a2, b2 = coef
        self.coef_ = coef
        self.offset_ = float(c0)
        self.amp_cos_phi_ = float(np.hypot(a1, b1))
        self.phase_cos_phi_ = float(np.arctan2(-b1, a1))
        self.amp_cos_2phi_ = float(np.hypot(a2, b2))
        self.phase_cos_2phi_ = float(np.arctan2(-b2, a2))
        resid = y - A @ coef
        dof = max(len(y) - A.shape[1], 1)
        cov = np.linalg.pinv(A.T @ A) * float(resid @ resid) / dof
        # amplitude stderr from the (cos, sin) pair, propagated linearly
        g = np.array([a2, b2]) / max(self.amp_cos_2phi_, 1e-300)
        self.amp_cos_2phi_stderr_ = float(np.sqrt(max(g @ cov[3:, 3:] @ g, 0.0)))
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self._design(_column(X)) @ self.coef_


class EchoPhaseFit(RegressorMixin, BaseEstimator):
    """Fit ``P_D = c + V*cos^2(x - delta)``; ``delta_`` is reported in (-pi/2, pi/2]."""

    def fit(self, X, y):
        X, y = check_X_y(np.asarray(X, dtype=float).reshape(len(y), -1), y)
        x = X[:, 0]
        A = np.column_stack([np.ones_like(x), np.cos(2 * x), np.sin(2 * x)])
        if np.linalg.matrix_rank(A) < 3:
            raise ValueError("degenerate phase grid")
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        c, a, b = coef
        half_v = np.hypot(a, b)
        delta = 0.5 * np.arctan2(b, a)
        if delta <= -np.pi / 2:
            delta += np.pi
        self.coef_ = coef
        self.delta_ = float(delta)
        self.contrast_ = float(2 * half_v)
        self.offset_ = float(c - half_v)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        x = _column(X)
        return self.offset_ + self.contrast_ * np.cos(x - self.delta_) ** 2


class RabiFrequencyFit(RegressorMixin, BaseEstimator):
    """Fit ``y = amplitude * sin^2(omega * x / 2)`` (a Rabi flop from the ground state).

    The starting frequency comes from a dense grid scan of the residual, then
    ``curve_fit`` refines it, so no initial guess is needed.
    """

    def __init__(self, omega_max: float | None = None, grid: int = 4000):
        self.omega_max = omega_max
        self.grid = grid

    @staticmethod
    def _model(x, amplitude, omega):
        return amplitude * np.sin(omega * x / 2) ** 2

    def fit(self, X, y):
        X, y = check_X_y(np.asarray(X, dtype=float).reshape(len(y), -1), y)
        x = X[:, 0]
        span = np.ptp(x)
        if span <= 0:
            raise ValueError("need a non-degenerate abscissa")
        # Nyquist-limited search range unless told otherwise
        wmax = self.omega_max or np.pi * (len(x) - 1) / span
        w = np.linspace(wmax / self.grid, wmax, self.grid)
        S = np.sin(np.outer(w, x) / 2) ** 2
        amp = (S @ y) / np.maximum(np.einsum("ij,ij->i", S, S), 1e-300)
        resid = np.sum((y - amp[:, None] * S) ** 2, axis=1)
        k = int(np.argmin(resid))
        popt, pcov = curve_fit(self._model, x, y, p0=(amp[k], w[k]), xtol=1e-15, ftol=1e-15,
                               gtol=1e-15, maxfev=20000)
        self.amplitude_, self.omega_ = (float(v) for v in popt)
        self.omega_ = abs(self.omega_)
        self.omega_stderr_ = float(np.sqrt(abs(pcov[1, 1]))) if np.all(np.isfinite(pcov)) else np.nan
        return self

    def predict(self, X):
        check_is_fitted(self, "omega_")
        return self._model(_column(X), self.amplitude_, self.omega_)


def fit_phase_slope(deflections, phases) -> float:
    """Linear phase-vs-deflection slope (rad/m) from measured echo phases."""
    reg = LinearRegression().fit(np.asarray(deflections, dtype=float).reshape(-1, 1), phases)
    return float(reg.coef_[0])
