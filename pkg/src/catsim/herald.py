"""Heralded photon subtraction from broadband squeezed light.

The continuous multimode squeezer is reduced to a discrete signal/idler
pair: in the broadband limit the heralded state lives in the single temporal
mode fixed by the idler filter, so only that mode is simulated in Fock space.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import fock
from .exceptions import ConfigError, InputError, NoHeraldError, TruncatedModeError

SQUEEZED_LIGHT_LOSS_ITEMS = {
    "propagation loss": 0.03,
    "tapping for photon subtraction": 0.05,
    "homodyne visibility": 0.02,
    "inefficiency of photodiodes": 0.03,
    "circuit noise of the HD": 0.01,
    "waveguide OPA (estimated)": 0.11,
}

# measured total herald rates in cps; the 25 mW value is taken as 75.6 kcps
MEASURED_TOTAL_CPS = {6.0: 12.6e3, 12.0: 33.6e3, 25.0: 75.6e3, 50.0: 174.3e3}


@dataclass
class ExperimentConfig:
    pump_powers: list = field(default_factory=lambda: [6.0, 12.0, 25.0, 50.0])
    tap_ratio: float = 0.05
    kappa: float = 0.12  # rad / sqrt(mW); placeholder, not a measured value
    signal_loss: float = 0.19
    squeezed_fake_loss: float = 0.03
    electrical_loss: float = 0.02
    snspd_efficiency: float = 0.63
    filter_transmission: float = 1.0
    dark_cps: float = 100.0
    stray_fake_cps: float = 210.0
    count_dark_separately: bool = False
    filter_hwhm_hz: float = 8.2e6
    bases_deg: list = field(default_factory=lambda: [0.0, 30.0, 60.0, 90.0, 120.0, 150.0])
    events_per_basis: int = 20000
    signal_cutoff: int = 50
    idler_cutoff: int = 8
    tomo_cutoff: int = 20
    tomo_bin_width: float = 0.1
    tomo_max_iter: int = 2000
    sample_rate_hz: float = 250e6
    window_start_s: float = -200e-9
    window_stop_s: float = 50e-9
    trace_lowpass_hz: float | None = None
    seed: int = 7

    def __post_init__(self):
        errors = []
        if len(self.pump_powers) == 0:
            errors.append(("/pump_powers", "at least one pump power is required"))
        for i, p in enumerate(self.pump_powers):
            if p < 0:
                errors.append((f"/pump_powers/{i}", f"pump power must be >= 0, got {p}"))
        for name in ("tap_ratio", "signal_loss", "squeezed_fake_loss", "electrical_loss",
                     "snspd_efficiency", "filter_transmission"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                errors.append((f"/{name}", f"must lie in [0, 1], got {v}"))
        for name in ("dark_cps", "stray_fake_cps", "kappa"):
            if getattr(self, name) < 0:
                errors.append((f"/{name}", "must be >= 0"))
        if self.squeezed_fake_loss >= 1.0:
            errors.append(("/squeezed_fake_loss", "must be < 1"))
        if self.window_start_s >= 0 or self.window_stop_s <= 0:
            errors.append(("/window_start_s", "trace window must straddle the herald time t = 0"))
        if self.tomo_cutoff < 2:
            errors.append(("/tomo_cutoff", "must be >= 2"))
        if errors:
            raise ConfigError(errors)
        self.pump_powers = [float(p) for p in self.pump_powers]
        self.bases_deg = [float(b) for b in self.bases_deg]

    @property
    def gamma(self):
        return 2.0 * np.pi * self.filter_hwhm_hz

    @property
    def idler_efficiency(self):
        return self.snspd_efficiency * self.filter_transmission

    @property
    def attempt_rate(self):
        """Temporal modes per second, gamma / pi."""
        return self.gamma / np.pi

    def time_grid(self):
        dt = 1.0 / self.sample_rate_hz
        n_before = int(round(-self.window_start_s / dt))
        n_after = int(np.floor(self.window_stop_s / dt + 1e-9))
        return np.arange(-n_before, n_after + 1) * dt

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ModeFunction:
    t: np.ndarray
    amplitudes: np.ndarray
    gamma: float | None = None

    def __post_init__(self):
        steps = np.diff(self.t)
        if len(self.t) < 2 or not np.allclose(steps, steps[0], rtol=1e-6, atol=0):
            raise InputError("mode function needs a uniform time grid")
        norm = np.sum(self.amplitudes**2) * self.dt
        if abs(norm - 1.0) > 1e-9:
            raise InputError(f"mode function not normalized (sum f^2 dt = {norm})")

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    @property
    def unit_vector(self):
        return self.amplitudes * np.sqrt(self.dt)


def mode_function(gamma, t_grid, delay=0.0):
    """Rising exponential sqrt(2 gamma) e^{gamma (t - delay)} for t <= delay, zero after."""
    t = np.asarray(t_grid, dtype=float)
    if t[0] - delay > -8.0 / gamma:
        raise TruncatedModeError(
            f"grid starts {(delay - t[0]) * gamma:.2f}/gamma before the peak; need >= 8/gamma"
        )
    s = t - delay
    f = np.where(s <= 0, np.sqrt(2 * gamma) * np.exp(gamma * np.minimum(s, 0.0)), 0.0)
    dt = t[1] - t[0]
    f = f / np.sqrt(np.sum(f**2) * dt)
    return ModeFunction(t=t, amplitudes=f, gamma=gamma)


def squeezing_from_pump(pump_mw, kappa):
    if pump_mw < 0 or kappa < 0:
        raise InputError("pump power and kappa must be non-negative")
    return kappa * np.sqrt(pump_mw)


def entangled_tap(r, tap_ratio, dims):
    """Squeezed vacuum in the signal arm split off to the idler with ``tap_ratio``."""
    ds, di = dims
    psi = fock.product_state(fock.squeezed_vacuum(r, ds), fock.vacuum(1))
    return fock.beamsplitter(psi, 1.0 - tap_ratio, dims=(ds, di))


def click_herald(psi, eta):
    """Condition the signal on an on/off click, POVM E = 1 - (1 - eta)^n on the idler.

    Multi-photon idler events are kept, so two-photon subtraction contaminates
    the heralded state exactly as the detector would allow.
    """
    if not 0.0 <= eta <= 1.0:
        raise InputError(f"detection efficiency must lie in [0, 1], got {eta}")
    psi = np.asarray(psi, dtype=complex)
    n = np.arange(psi.shape[1])
    click = 1.0 - (1.0 - eta) ** n
    rho = (psi * click) @ psi.conj().T
    p_click = float(np.real(np.trace(rho)))
    if p_click < 1e-15:
        raise NoHeraldError(f"click probability {p_click:.3e} is too small to herald")
    return rho / p_click, p_click


def stray_fake_fraction(stray_cps, total_cps):
    return stray_cps / total_cps


def loss_budget_total(items, convention="multiplicative"):
    """Combine loss fractions; ``additive`` reproduces the simple sum used in budget tables."""
    values = list(items.values()) if isinstance(items, dict) else list(items)
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise InputError(f"loss item {v} outside [0, 1]")
    if convention == "additive":
        return float(sum(values))
    if convention == "multiplicative":
        return float(1.0 - np.prod([1.0 - v for v in values]))
    raise InputError(f"unknown convention {convention!r}")


@dataclass(frozen=True)
class HeraldOutcome:
    pump_mw: float
    r: float
    state: np.ndarray
    conditioned_state: np.ndarray
    unheralded_state: np.ndarray
    pre_loss_state: np.ndarray
    p_click: float
    true_rate_cps: float
    herald_rate_cps: float
    fake_fraction: float


def heralded_state(config, pump_mw, electrical=True):
    """Signal state accepted on a herald click, with losses and fake-click mixing.

    Clicks split into true idler clicks, squeezed-light sideband clicks (a fixed
    fraction ``squeezed_fake_loss`` of light-induced clicks) and stray/dark
    clicks at a fixed rate. Fake heralds leave the signal unconditioned.
    """
    r = squeezing_from_pump(pump_mw, config.kappa)
    psi = entangled_tap(r, config.tap_ratio, (config.signal_cutoff, config.idler_cutoff))
    conditioned, p_click = click_herald(psi, config.idler_efficiency)
    unheralded = fock.reduced_signal(psi)
    pre_loss = conditioned

    losses = [config.signal_loss] + ([config.electrical_loss] if electrical else [])
    for loss in losses:
        conditioned = fock.loss_channel(conditioned, loss)
        unheralded = fock.loss_channel(unheralded, loss)

    true_cps = p_click * config.attempt_rate
    sideband_cps = true_cps * config.squeezed_fake_loss / (1.0 - config.squeezed_fake_loss)
    stray_cps = config.stray_fake_cps + (config.dark_cps if config.count_dark_separately else 0.0)
    total_cps = true_cps + sideband_cps + stray_cps
    q = 1.0 - true_cps / total_cps
    if not 0.0 <= q <= 1.0:
        raise ConfigError([("", f"fake fraction {q} outside [0, 1]")])
    state = (1.0 - q) * conditioned + q * unheralded
    return HeraldOutcome(
        pump_mw=float(pump_mw),
        r=float(r),
        state=state,
        conditioned_state=conditioned,
        unheralded_state=unheralded,
        pre_loss_state=pre_loss,
        p_click=p_click,
        true_rate_cps=float(true_cps),
        herald_rate_cps=float(total_cps),
        fake_fraction=float(q),
    )
