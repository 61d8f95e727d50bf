"""scikit-learn style front end to :func:`richlab.extrapolation.diagnose`."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .errors import InvalidInputError
from .extrapolation import MAX_RMS, MIN_WINDOW, SLOPE_RANGE, SampleSweep, Verdict, diagnose

__all__ = ["RichardsonDiagnoser", "check_halving_steps"]


def check_halving_steps(h, rtol=1e-12):
    """Validate step sizes and return ``(h0, k)`` with ``h = h0 * 2**-k``.

    The steps must be positive, strictly decreasing and each an exact
    power-of-two fraction of the largest one.
    """
    h = column_or_1d(check_array(np.asarray(h, dtype=np.float64).reshape(-1, 1), ensure_min_samples=1))
    if np.any(h <= 0):
        raise InvalidInputError("step sizes must be positive")
    h0 = float(h.max())
    k = np.rint(np.log2(h0 / h)).astype(int)
    if np.any(np.abs(h - np.ldexp(h0, -k)) > rtol * h):
        raise InvalidInputError("step sizes must be h0 * 2**-k")
    if np.any(np.diff(k) <= 0):
        raise InvalidInputError("step sizes must be strictly decreasing")
    return h0, k


class RichardsonDiagnoser(BaseEstimator):
    """Diagnose the convergence order of approximations at halving step sizes.

    Parameters
    ----------
    p_nominal : float, optional
        Expected order. When given it fixes the reference order of the window
        search and the order used in the error estimates.
    min_window : int, default=4
    slope_range : tuple of float, default=(0.1, 6.0)
    max_rms : float, default=0.5
        Thresholds of the asymptotic-window detector.

    Attributes
    ----------
    diagnosis_ : ConvergenceDiagnosis
    sweep_ : SampleSweep
    p_hat_, m_hat_ : float
    window_ : tuple or None
    verdict_ : Verdict
    """

    def __init__(self, p_nominal=None, min_window=MIN_WINDOW, slope_range=SLOPE_RANGE, max_rms=MAX_RMS):
        self.p_nominal = p_nominal
        self.min_window = min_window
        self.slope_range = slope_range
        self.max_rms = max_rms

    def fit(self, X, y):
        """Fit on step sizes ``X`` (shape ``(n,)`` or ``(n, 1)``) and approximations ``y``."""
        X = check_array(X, ensure_2d=False, dtype=np.float64)
        y = column_or_1d(check_array(np.asarray(y, dtype=np.float64).reshape(-1, 1)))
        h = X.ravel()
        if h.shape[0] != y.shape[0]:
            raise InvalidInputError("X and y have different lengths")
        order = np.argsort(-h, kind="stable")
        h0, k = check_halving_steps(h[order])
        self.sweep_ = SampleSweep(h0, tuple(zip(k.tolist(), y[order].tolist())))
        self.diagnosis_ = diagnose(
            self.sweep_, self.p_nominal,
            min_window=self.min_window, slope_range=tuple(self.slope_range), max_rms=self.max_rms,
        )
        self.p_hat_ = self.diagnosis_.p_hat
        self.m_hat_ = self.diagnosis_.m_hat
        self.window_ = self.diagnosis_.asymptotic_window
        self.verdict_ = self.diagnosis_.verdict
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        """Richardson error estimates ``T - A_h`` at the fitted step sizes in ``X``.

        Levels without an estimate (the coarsest one, or all of them when no
        order is available) give ``nan``.
        """
        check_is_fitted(self, "diagnosis_")
        h = check_array(X, ensure_2d=False, dtype=np.float64).ravel()
        est = self.diagnosis_.estimate_map()
        out = np.full(h.shape, np.nan)
        for i, hi in enumerate(h):
            k = math.log2(self.sweep_.h0 / hi)
            kr = int(round(k))
            if abs(k - kr) > 1e-9:
                raise InvalidInputError(f"step size {hi!r} is not on the fitted grid")
            out[i] = est.get(kr, np.nan)
        return out

    def transform(self, X):
        """Columns ``(F, R)`` for the fitted step sizes in ``X``."""
        check_is_fitted(self, "diagnosis_")
        h = check_array(X, ensure_2d=False, dtype=np.float64).ravel()
        fr = self.diagnosis_.fraction_map()
        R = self.predict(h)
        F = np.array([fr.get(int(round(math.log2(self.sweep_.h0 / hi))), np.nan) for hi in h])
        return np.column_stack([F, R])

    @property
    def asymptotic_(self):
        check_is_fitted(self, "diagnosis_")
        return self.verdict_ is Verdict.ASYMPTOTIC_RANGE_FOUND
