"""Synthetic homodyne records.

Traces are stored as field-density samples s(t): a sample is the quadrature
of a time bin of width dt divided by sqrt(dt). Projecting onto a normalized
mode, x = sum s(t) f(t) dt, then yields vacuum variance 1/2 directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import lfilter

from . import fock
from .exceptions import InputError


@dataclass(frozen=True)
class HomodyneTrace:
    """Records for one LO phase; ``samples`` has one event per row."""

    samples: np.ndarray
    sample_rate: float
    lo_phase_deg: float
    trigger_index: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.samples)):
            raise InputError("trace samples must be finite")

    @property
    def dt(self):
        return 1.0 / self.sample_rate

    @property
    def t(self):
        n = self.samples.shape[-1]
        return (np.arange(n) - self.trigger_index) * self.dt


@dataclass(frozen=True)
class QuadratureDataset:
    theta_deg: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta_deg", np.asarray(self.theta_deg, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.theta_deg.shape != self.x.shape or self.x.ndim != 1:
            raise InputError("theta_deg and x must be 1-D arrays of equal length")

    @classmethod
    def from_groups(cls, groups):
        """Build from ``{theta_deg: values}``."""
        thetas, xs = [], []
        for theta, values in groups.items():
            values = np.asarray(values, dtype=float)
            thetas.append(np.full(len(values), float(theta)))
            xs.append(values)
        return cls(np.concatenate(thetas), np.concatenate(xs))

    def counts(self):
        phases, n = np.unique(self.theta_deg, return_counts=True)
        return dict(zip(phases.tolist(), n.tolist()))

    def group(self, theta_deg):
        return self.x[self.theta_deg == theta_deg]

    def to_X(self):
        """(n, 2) array of (theta in radians, x) for the estimators."""
        return np.column_stack([np.deg2rad(self.theta_deg), self.x])

    def __len__(self):
        return len(self.x)


def _sampling_grid(rho, theta, n_points=8001):
    mean, var = fock.quadrature_moments(rho, theta)
    half = max(6.0, abs(mean) + 8.0 * np.sqrt(var))
    return np.linspace(-half, half, n_points)


def sample_quadratures(rho, theta, n, seed=None):
    """Draw ``n`` homodyne outcomes at LO phase ``theta`` (radians) by inverse CDF."""
    rng = np.random.default_rng(seed)
    grid = _sampling_grid(rho, theta)
    pdf = np.clip(fock.quadrature_pdf(rho, theta, grid), 0.0, None)
    cdf = cumulative_trapezoid(pdf, grid, initial=0.0)
    cdf /= cdf[-1]
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return np.interp(rng.random(n), cdf[keep], grid[keep])


@dataclass(frozen=True)
class NoiseModel:
    """Background of the records.

    ``background_state`` sets the statistics carried by every temporal mode
    orthogonal to the signal mode (``None`` means vacuum). ``lowpass_hz``
    applies a single-pole electrical filter; only meaningful when the sample
    rate is well above the cutoff.
    """

    background_state: np.ndarray | None = None
    lowpass_hz: float | None = None
    dc_offset: float = 0.0

    def background_variance(self, theta):
        if self.background_state is None:
            return 0.5
        return fock.quadrature_variance(self.background_state, theta)


def single_pole_lowpass(samples, cutoff_hz, sample_rate):
    a = np.exp(-2.0 * np.pi * cutoff_hz / sample_rate)
    return lfilter([1.0 - a], [1.0, -a], samples, axis=-1)


def synth_traces(rho, mode, theta_deg, n_events, noise=None, seed=None):
    """Homodyne records whose ``mode`` component carries the statistics of ``rho``."""
    noise = noise or NoiseModel()
    rng = np.random.default_rng(seed)
    theta = np.deg2rad(theta_deg)
    u = mode.unit_vector
    x = sample_quadratures(rho, theta, n_events, rng)
    bg = rng.normal(0.0, np.sqrt(noise.background_variance(theta)), size=(n_events, len(u)))
    bg -= np.outer(bg @ u, u)
    samples = (np.outer(x, u) + bg) / np.sqrt(mode.dt) + noise.dc_offset
    sample_rate = 1.0 / mode.dt
    if noise.lowpass_hz is not None:
        samples = single_pole_lowpass(samples, noise.lowpass_hz, sample_rate)
    trigger = int(np.argmin(np.abs(mode.t)))
    return HomodyneTrace(samples=samples, sample_rate=sample_rate,
                         lo_phase_deg=float(theta_deg), trigger_index=trigger)


def lowpass_loss_equivalent(gamma, cutoff_hz, dt=2e-11, span=None):
    """Efficiency penalty of a single-pole filter on the rising-exponential mode.

    Quadratures are taken with the filtered mode shape h*f and normalized to
    the filtered vacuum, giving efficiency <h*f, h*f>^2 / |h^T h f|^2.
    """
    span = span or 40.0 / gamma
    t = np.arange(-span, 0.5 * span, dt)
    f = np.where(t <= 0, np.exp(gamma * np.minimum(t, 0.0)), 0.0)
    f /= np.linalg.norm(f)
    a = np.exp(-2.0 * np.pi * cutoff_hz * dt)
    hf = lfilter([1.0 - a], [1.0, -a], f)
    hthf = lfilter([1.0 - a], [1.0, -a], hf[::-1])[::-1]
    eff = np.dot(hf, hf) ** 2 / np.dot(hthf, hthf)
    return float(1.0 - eff)
