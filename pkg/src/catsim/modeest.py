"""Temporal-mode recovery by principal component analysis of homodyne records."""

from __future__ import annotations

import numpy as np
from scipy.optimize import curve_fit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import AmbiguousModeError, GridMismatchError, InputError
from .herald import ModeFunction


def correlation_matrix(traces, center=True):
    """Time-correlation matrix C_ij = <s_i s_j> over events."""
    X = np.asarray(traces, dtype=float)
    if X.ndim != 2:
        raise InputError("traces must be a 2-D array (events x samples)")
    if X.shape[0] < 2:
        raise InputError("need at least two traces")
    if center:
        X = X - X.mean(axis=0)
    C = X.T @ X / X.shape[0]
    return (C + C.T) / 2


def principal_mode(C, t):
    """Top eigenvector of ``C`` as a normalized mode on the time grid ``t``."""
    C = np.asarray(C, dtype=float)
    t = np.asarray(t, dtype=float)
    if C.shape != (len(t), len(t)):
        raise GridMismatchError(f"correlation matrix {C.shape} does not match {len(t)} samples")
    w, v = np.linalg.eigh(C)
    top, second = w[-1], w[-2]
    if top <= 0 or (top - second) / top < 1e-6:
        raise AmbiguousModeError("top eigenvalue of the correlation matrix is degenerate")
    vec = v[:, -1]
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    dt = t[1] - t[0]
    return ModeFunction(t=t, amplitudes=vec / np.sqrt(dt))


def _check_grid(t1, t2):
    if len(t1) != len(t2) or not np.allclose(t1, t2, rtol=0, atol=1e-6 * abs(t1[1] - t1[0])):
        raise GridMismatchError("time grids differ")


def extract_quadrature(trace, mode, scale=1.0):
    """x = scale * sum s(t) f(t) dt; accepts one trace or an events x samples array."""
    s = np.asarray(trace, dtype=float)
    if s.shape[-1] != len(mode.t):
        raise GridMismatchError(f"trace length {s.shape[-1]} != mode length {len(mode.t)}")
    return scale * (s @ mode.amplitudes) * mode.dt


def mode_overlap(f, g):
    _check_grid(f.t, g.t)
    a, b = f.amplitudes, g.amplitudes
    return float(abs(np.dot(a, b)) / np.sqrt(np.dot(a, a) * np.dot(b, b)))


def fit_log_slope(mode, floor=0.1):
    """Growth rate gamma of a rising-exponential mode A e^{gamma t}, t <= 0.

    A weighted straight-line fit to log f(t) over the samples leading up to
    the peak seeds a least-squares fit of the exponential itself on every
    t <= 0 sample; the latter is unbiased under additive noise.
    """
    f = mode.amplitudes
    peak = int(np.argmax(f))
    start = peak
    while start > 0 and f[start - 1] > floor * f[peak]:
        start -= 1
    if peak - start < 2:
        raise InputError("too few samples above the floor to fit a slope")
    t0 = mode.t[peak]
    tau = mode.t[start : peak + 1] - t0
    slope, _ = np.polyfit(tau, np.log(f[start : peak + 1]), 1, w=f[start : peak + 1])

    sel = mode.t <= t0
    tt = mode.t[sel] - t0
    scale = 1.0 / slope  # fit in units of the seed time constant

    def model(s, amp, rate):
        return amp * np.exp(rate * s)

    try:
        (amp, rate), _ = curve_fit(model, tt / scale, f[sel], p0=[f[peak], 1.0])
    except RuntimeError:
        return float(slope)
    return float(rate / scale)


class TemporalModePCA(BaseEstimator, TransformerMixin):
    """Learn the signal temporal mode from records and project records onto it.

    Parameters
    ----------
    sample_rate : float
        Samples per second of the records.
    trigger_index : int
        Sample index of the herald time t = 0.
    center : bool
        Subtract the per-sample mean before forming the correlation matrix.
    """

    def __init__(self, sample_rate=250e6, trigger_index=0, center=True):
        self.sample_rate = sample_rate
        self.trigger_index = trigger_index
        self.center = center

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        t = (np.arange(X.shape[1]) - self.trigger_index) / self.sample_rate
        self.mean_ = X.mean(axis=0) if self.center else np.zeros(X.shape[1])
        self.covariance_ = correlation_matrix(X, center=self.center)
        self.mode_ = principal_mode(self.covariance_, t)
        self.components_ = self.mode_.unit_vector[None, :]
        eig = np.linalg.eigvalsh(self.covariance_)[::-1]
        self.explained_variance_ = eig
        try:
            self.gamma_ = fit_log_slope(self.mode_)
        except InputError:
            self.gamma_ = None
        self.scale_ = 1.0
        self.n_features_in_ = X.shape[1]
        return self

    def calibrate(self, X_vacuum):
        """Fix the quadrature scale so that shot-noise records give variance 1/2."""
        check_is_fitted(self, "mode_")
        x = self._project(check_array(X_vacuum, dtype=float))
        self.scale_ = float(np.sqrt(0.5 / np.var(x)))
        return self

    def _project(self, X):
        return extract_quadrature(X - self.mean_, self.mode_)

    def transform(self, X):
        check_is_fitted(self, "mode_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise GridMismatchError(f"expected {self.n_features_in_} samples per trace")
        return self.scale_ * self._project(X)
