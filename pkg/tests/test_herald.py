from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from catsim import fock
from catsim.exceptions import ConfigError, InputError, NoHeraldError, TruncatedModeError
from catsim.herald import (
    MEASURED_TOTAL_CPS,
    SQUEEZED_LIGHT_LOSS_ITEMS,
    ExperimentConfig,
    ModeFunction,
    click_herald,
    entangled_tap,
    heralded_state,
    loss_budget_total,
    mode_function,
    squeezing_from_pump,
    stray_fake_fraction,
)


def squeezed_even_probs(r, kmax):
    # P(2k) = (2k)! / (4^k k!^2) tanh^{2k} r / cosh r
    k = np.arange(kmax)
    logp = gammaln(2 * k + 1) - k * np.log(4) - 2 * gammaln(k + 1) + 2 * k * np.log(np.tanh(r))
    return np.exp(logp) / np.cosh(r)


def click_probability_oracle(r, tap, eta):
    k = np.arange(200)
    return float(np.sum(squeezed_even_probs(r, 200) * (1 - (1 - tap * eta) ** (2 * k))))


class TestConfig:
    def test_defaults_valid(self):
        cfg = ExperimentConfig()
        assert cfg.gamma == pytest.approx(2 * np.pi * 8.2e6)
        assert cfg.attempt_rate == pytest.approx(16.4e6)

    def test_errors_carry_pointers(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig(tap_ratio=1.5, pump_powers=[6.0, -1.0])
        pointers = [p for p, _ in info.value.errors]
        assert "/tap_ratio" in pointers and "/pump_powers/1" in pointers

    def test_config_error_is_input_error(self):
        with pytest.raises(InputError):
            ExperimentConfig(signal_loss=-0.1)

    def test_time_grid_contains_zero(self):
        t = ExperimentConfig().time_grid()
        assert len(t) == 63
        assert np.min(np.abs(t)) == 0.0


class TestModeFunction:
    gamma = 2 * np.pi * 8.2e6

    def test_normalized_and_shape(self):
        t = np.arange(-2000, 501) * 1e-10
        mode = mode_function(self.gamma, t)
        assert np.sum(mode.amplitudes**2) * mode.dt == pytest.approx(1.0, abs=1e-12)
        assert np.all(mode.amplitudes[t > 0] == 0)
        peak = mode.amplitudes[t <= 0]
        assert np.all(np.diff(peak) > 0)

    def test_continuum_amplitude(self):
        # fine grid: normalization barely changes sqrt(2 gamma) e^{gamma t}
        t = np.arange(-40000, 10) * 1e-11
        mode = mode_function(self.gamma, t)
        i = np.searchsorted(t, -20e-9)
        expected = np.sqrt(2 * self.gamma) * np.exp(self.gamma * t[i])
        assert mode.amplitudes[i] == pytest.approx(expected, rel=2e-3)

    def test_truncated_window(self):
        with pytest.raises(TruncatedModeError):
            mode_function(self.gamma, np.arange(-50, 10) * 1e-9)

    def test_rejects_unnormalized(self):
        with pytest.raises(InputError):
            ModeFunction(t=np.arange(5) * 1.0, amplitudes=np.ones(5))


class TestTapAndHerald:
    def test_squeezing_from_pump(self):
        assert squeezing_from_pump(25.0, 0.1) == pytest.approx(0.5)
        with pytest.raises(InputError):
            squeezing_from_pump(-1.0, 0.1)

    @pytest.mark.parametrize("r,tap", [(0.2, 0.05), (0.5, 0.1), (0.8, 0.3)])
    def test_idler_mean_photon_number(self, r, tap):
        psi = entangled_tap(r, tap, (60, 20))
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-8)
        idler = fock.reduced_idler(psi)
        assert fock.mean_photon_number(idler) == pytest.approx(tap * np.sinh(r) ** 2, rel=1e-6)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.05, 0.8), st.floats(0.01, 0.3), st.floats(0.1, 1.0))
    def test_click_probability_oracle(self, r, tap, eta):
        psi = entangled_tap(r, tap, (60, 20))
        rho, p = click_herald(psi, eta)
        assert p == pytest.approx(click_probability_oracle(r, tap, eta), rel=1e-6)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert fock.is_physical(rho)

    def test_weak_squeezing_heralds_single_photon(self):
        rho, _ = click_herald(entangled_tap(0.01, 0.001, (20, 5)), 1.0)
        assert rho[1, 1].real > 0.999

    def test_two_photon_idler_leaves_vacuum(self):
        # |2> -> |0, 2> with weight tap^2 against 2 tap (1 - tap) for |1, 1>
        tap = 0.05
        rho, _ = click_herald(entangled_tap(0.01, tap, (20, 5)), 1.0)
        assert rho[0, 0].real == pytest.approx(tap / (2 - tap), rel=1e-3)

    def test_weak_tap_matches_annihilated_squeezed_vacuum(self):
        r, dim = 0.4, 40
        rho, _ = click_herald(entangled_tap(r, 1e-4, (dim, 4)), 0.63)
        target = fock.annihilation(dim) @ fock.squeezed_vacuum(r, dim)
        assert fock.fidelity(rho, target / np.linalg.norm(target)) > 0.9998

    def test_no_herald(self):
        with pytest.raises(NoHeraldError):
            click_herald(entangled_tap(0.0, 0.05, (10, 4)), 0.6)

    def test_unheralded_signal_is_lossy_squeezed(self):
        r, tap = 0.5, 0.05
        rho = fock.reduced_signal(entangled_tap(r, tap, (50, 10)))
        expected = fock.loss_channel(fock.squeezed_vacuum(r, 50), tap)
        np.testing.assert_allclose(rho, expected, atol=1e-8)


class TestHeraldedState:
    def test_ideal_limit_approaches_single_photon(self):
        cfg = ExperimentConfig(signal_loss=0, electrical_loss=0, squeezed_fake_loss=0,
                               stray_fake_cps=0, dark_cps=0, tap_ratio=1e-3,
                               kappa=0.05 / np.sqrt(6.0))
        out = heralded_state(cfg, 6.0)
        assert out.fake_fraction == 0.0
        assert out.r == pytest.approx(0.05)
        assert fock.wigner_at(out.state, 0, 0) == pytest.approx(-1 / np.pi, rel=0.02)

    def test_fake_fraction_bookkeeping(self):
        cfg = ExperimentConfig()
        out = heralded_state(cfg, 12.0)
        sideband = out.true_rate_cps * 0.03 / 0.97
        assert out.herald_rate_cps == pytest.approx(out.true_rate_cps + sideband + 210.0)
        assert out.fake_fraction == pytest.approx(1 - out.true_rate_cps / out.herald_rate_cps)
        mixed = (1 - out.fake_fraction) * out.conditioned_state + out.fake_fraction * out.unheralded_state
        np.testing.assert_allclose(out.state, mixed)

    def test_dark_counts_added_when_separate(self):
        a = heralded_state(ExperimentConfig(), 6.0)
        b = heralded_state(ExperimentConfig(count_dark_separately=True), 6.0)
        assert b.herald_rate_cps - a.herald_rate_cps == pytest.approx(100.0)

    def test_losses_applied_to_both_branches(self):
        cfg = ExperimentConfig()
        out = heralded_state(cfg, 6.0)
        lossy = fock.loss_channel(fock.loss_channel(out.pre_loss_state, 0.19), 0.02)
        np.testing.assert_allclose(out.conditioned_state, lossy, atol=1e-14)

    def test_electrical_flag(self):
        cfg = ExperimentConfig()
        a = heralded_state(cfg, 6.0, electrical=False)
        b = heralded_state(cfg, 6.0)
        assert fock.parity_value(a.state) < fock.parity_value(b.state)

    def test_negativity_degrades_with_pump(self):
        cfg = ExperimentConfig()
        mins = [fock.wigner_min(heralded_state(cfg, p).state)[0] for p in cfg.pump_powers]
        assert all(m < 0 for m in mins)
        assert all(abs(a) > abs(b) for a, b in zip(mins, mins[1:]))


class TestLossBudget:
    def test_squeezed_light_items(self):
        assert sum(SQUEEZED_LIGHT_LOSS_ITEMS.values()) == pytest.approx(0.25)
        product = 0.97 * 0.95 * 0.98 * 0.97 * 0.99 * 0.89
        assert loss_budget_total(SQUEEZED_LIGHT_LOSS_ITEMS) == pytest.approx(1 - product, abs=1e-12)
        assert 1 - product == pytest.approx(0.2282, abs=1e-4)

    def test_conventions(self):
        assert loss_budget_total([0.1, 0.1], "additive") == pytest.approx(0.2)
        assert loss_budget_total([0.1, 0.1]) == pytest.approx(0.19)
        with pytest.raises(InputError):
            loss_budget_total([0.1], "other")
        with pytest.raises(InputError):
            loss_budget_total([1.5])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
    def test_multiplicative_never_exceeds_additive(self, items):
        assert loss_budget_total(items) <= loss_budget_total(items, "additive") + 1e-12

    def test_stray_fraction_band(self):
        fractions = [stray_fake_fraction(210.0, c) for c in MEASURED_TOTAL_CPS.values()]
        assert min(fractions) == pytest.approx(210 / 174.3e3)
        assert max(fractions) == pytest.approx(210 / 12.6e3)


def test_replace_revalidates():
    with pytest.raises(ConfigError):
        replace(ExperimentConfig(), snspd_efficiency=2.0)
