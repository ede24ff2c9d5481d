"""Squeezing fit, theory curves and loss-budget tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import fock
from .exceptions import InsufficientPhasesError
from .herald import (
    MEASURED_TOTAL_CPS,
    SQUEEZED_LIGHT_LOSS_ITEMS,
    heralded_state,
    loss_budget_total,
    squeezing_from_pump,
    stray_fake_fraction,
)

STATED_TOTAL_LOSS = 0.23


@dataclass(frozen=True)
class Eq8Fit:
    r: dict
    loss: float
    residuals: dict
    cost: float
    success: bool


def _initial_guess(theta, var):
    vp, vm = var.max(), var.min()
    denom = 2.0 * (1.0 - vp - vm)
    loss = (1.0 - 4.0 * vp * vm) / denom if abs(denom) > 1e-9 else 0.2
    loss = float(np.clip(loss, 0.0, 0.95))
    r = 0.5 * np.log(max(2.0 * vp - loss, 1e-12) / (1.0 - loss))
    return max(r, 0.0), loss


def fit_eq8(variances, counts=None):
    """Fit per-pump squeezing r and a shared loss L to quadrature variances.

    ``variances`` maps pump power -> {theta_deg: variance}. With ``counts``
    (same layout, samples per variance) residuals are weighted by the
    Gaussian standard error V sqrt(2 / (n - 1)).
    """
    pumps = list(variances)
    blocks = []
    for pump in pumps:
        thetas = np.array(sorted(variances[pump]), dtype=float)
        if len(np.unique(np.mod(thetas, 180.0))) < 2:
            raise InsufficientPhasesError(f"pump {pump}: need >= 2 distinct LO phases")
        v = np.array([variances[pump][t] for t in sorted(variances[pump])], dtype=float)
        if counts is not None:
            n = np.array([counts[pump][t] for t in sorted(variances[pump])], dtype=float)
            sigma = v * np.sqrt(2.0 / (n - 1.0))
        else:
            sigma = np.ones_like(v)
        blocks.append((np.deg2rad(thetas), v, sigma))

    guesses = [_initial_guess(th, v) for th, v, _ in blocks]
    x0 = [g[0] for g in guesses] + [float(np.mean([g[1] for g in guesses]))]

    def resid(params):
        loss = params[-1]
        out = [(v - fock.eq8_variance(r, loss, th)) / s
               for r, (th, v, s) in zip(params[:-1], blocks)]
        return np.concatenate(out)

    lower = [0.0] * len(pumps) + [0.0]
    upper = [np.inf] * len(pumps) + [1.0]
    x0 = np.clip(x0, lower, [10.0] * len(pumps) + [1.0])
    sol = least_squares(resid, x0, bounds=(lower, upper), xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=10000)
    res = resid(sol.x)
    residuals, i = {}, 0
    for pump, (th, _, _) in zip(pumps, blocks):
        residuals[pump] = res[i : i + len(th)].tolist()
        i += len(th)
    return Eq8Fit(
        r={p: float(r) for p, r in zip(pumps, sol.x[:-1])},
        loss=float(sol.x[-1]),
        residuals=residuals,
        cost=float(sol.cost),
        success=bool(sol.success),
    )


def squeezed_light_loss(config):
    """Loss seen by the unconditioned squeezed light at the homodyne detector."""
    return loss_budget_total([config.tap_ratio, config.signal_loss, config.electrical_loss])


def to_db(variance):
    return 10.0 * np.log10(variance / 0.5)


def theory_curves(config, pumps=None):
    """Noise-free theory rows: squeezing in dB and Wigner minimum per pump power."""
    pumps = config.pump_powers if pumps is None else pumps
    loss = squeezed_light_loss(config)
    rows = []
    for pump in pumps:
        r = squeezing_from_pump(pump, config.kappa)
        outcome = heralded_state(config, pump)
        w_min, _ = fock.wigner_min(outcome.state)
        rows.append({
            "pump_mw": float(pump),
            "r": float(r),
            "variance_sq_dB": float(to_db(fock.eq8_variance(r, loss, np.pi / 2))),
            "variance_antisq_dB": float(to_db(fock.eq8_variance(r, loss, 0.0))),
            "wigner_min_theory": w_min,
        })
    return rows


def _summarize(items):
    return {
        "items": dict(items),
        "additive_total": loss_budget_total(items, "additive"),
        "multiplicative_total": loss_budget_total(items, "multiplicative"),
        "stated_total": STATED_TOTAL_LOSS,
    }


def loss_report(config, measured_total_cps=None):
    """Both loss-budget tables with additive and multiplicative totals.

    Stray-light fake fractions come from ``measured_total_cps`` (pump ->
    total herald rate) when given, otherwise from the simulated herald rate.
    """
    measured = MEASURED_TOTAL_CPS if measured_total_cps is None else measured_total_cps
    squeezed_items = dict(SQUEEZED_LIGHT_LOSS_ITEMS)
    squeezed_items["tapping for photon subtraction"] = config.tap_ratio
    report = {"squeezed_light": _summarize(squeezed_items), "cat_states": {}}

    for pump in config.pump_powers:
        if pump in measured:
            total, source = measured[pump], "measured"
        else:
            total, source = heralded_state(config, pump).herald_rate_cps, "simulated"
        items = {
            "loss of the signal channel": config.signal_loss,
            "fake counts due to squeezed light": config.squeezed_fake_loss,
            "fake counts due to stray light": stray_fake_fraction(config.stray_fake_cps, total),
            "electrical signal processing": config.electrical_loss,
        }
        entry = _summarize(items)
        entry["total_cps"] = float(total)
        entry["rate_source"] = source
        report["cat_states"][float(pump)] = entry

    for entry in [report["squeezed_light"], *report["cat_states"].values()]:
        entry["flag"] = (
            f"stated {STATED_TOTAL_LOSS:.0%}; additive {entry['additive_total']:.1%}, "
            f"multiplicative {entry['multiplicative_total']:.1%}"
        )
    return report


def format_loss_report(report):
    lines = ["Loss budget of the squeezed light"]

    def block(entry):
        out = [f"  {name:<38s}{value:7.2%}" for name, value in entry["items"].items()]
        out.append(f"  {'total (additive)':<38s}{entry['additive_total']:7.2%}")
        out.append(f"  {'total (multiplicative)':<38s}{entry['multiplicative_total']:7.2%}")
        out.append(f"  {'stated total':<38s}{entry['stated_total']:7.2%}")
        return out

    lines += block(report["squeezed_light"])
    for pump, entry in report["cat_states"].items():
        lines.append(f"Loss budget of the cat states, {pump:g} mW "
                     f"({entry['total_cps'] / 1e3:.1f} kcps, {entry['rate_source']})")
        lines += block(entry)
    return "\n".join(lines)
