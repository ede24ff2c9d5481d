import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, trapezoid
from scipy.special import erf

from catsim import fock
from catsim.exceptions import (
    CutoffTooSmallError,
    DegenerateCatError,
    InvalidDimensionError,
    InvalidLossError,
)

from .conftest import random_density_matrix

VAC_PEAK = 1.0 / np.pi


def wigner_by_integral(c, x, p):
    """W(x, p) = (1/pi) int psi*(x + y) psi(x - y) e^{2ipy} dy for a pure state."""
    d = len(c)

    def psi(q):
        return fock.hermite_functions(d, np.array([q]))[:, 0] @ c

    def integrand(y):
        return np.real(np.conj(psi(x + y)) * psi(x - y) * np.exp(2j * p * y))

    return quad(integrand, -12, 12, limit=200)[0] / np.pi


class TestConstructors:
    def test_vacuum(self):
        c = fock.vacuum(10)
        assert c[0] == 1 and not c[1:].any()

    def test_vacuum_zero_dim(self):
        with pytest.raises(InvalidDimensionError):
            fock.vacuum(0)

    def test_coherent_zero_is_vacuum(self):
        np.testing.assert_allclose(fock.coherent(0, 8), fock.vacuum(8))

    def test_coherent_mean_photon_number(self):
        assert fock.mean_photon_number(fock.coherent(1.5, 40)) == pytest.approx(2.25, abs=1e-6)

    def test_coherent_overlap(self):
        a, b = fock.coherent(1, 40), fock.coherent(-1, 40)
        assert abs(np.vdot(a, b)) ** 2 == pytest.approx(np.exp(-4), abs=1e-12)

    def test_coherent_cutoff_too_small(self):
        with pytest.raises(CutoffTooSmallError):
            fock.coherent(3.0, 10)

    @pytest.mark.parametrize("alpha", [0.5, 1.2, 2.0])
    def test_odd_cat_has_no_even_components(self, alpha):
        c = fock.cat(alpha, np.pi, 30)
        assert np.max(np.abs(c[0::2])) <= 1e-12
        assert np.linalg.norm(c) == pytest.approx(1.0, abs=1e-12)

    def test_even_cat_has_no_odd_components(self):
        c = fock.cat(1.2, 0.0, 30)
        assert np.max(np.abs(c[1::2])) <= 1e-12

    def test_cat_matches_coherent_superposition(self):
        alpha, phi = 0.9 + 0.3j, 0.4
        raw = fock.coherent(alpha, 40) + np.exp(1j * phi) * fock.coherent(-alpha, 40)
        np.testing.assert_allclose(fock.cat(alpha, phi, 40), raw / np.linalg.norm(raw), atol=1e-12)
        norm = np.sqrt(2 * (1 + np.exp(-2 * abs(alpha) ** 2) * np.cos(phi)))
        assert np.linalg.norm(raw) == pytest.approx(norm, rel=1e-10)

    def test_degenerate_cat(self):
        with pytest.raises(DegenerateCatError):
            fock.cat(0.0, np.pi, 10)

    def test_squeezed_zero_is_vacuum(self):
        np.testing.assert_allclose(fock.squeezed_vacuum(0, 10), fock.vacuum(10))

    def test_squeezed_variances(self):
        sq = fock.squeezed_vacuum(0.5, 40)
        assert fock.quadrature_variance(sq, np.pi / 2) == pytest.approx(np.exp(-1) / 2, abs=1e-4)
        assert fock.quadrature_variance(sq, 0.0) == pytest.approx(np.exp(1) / 2, abs=1e-4)
        assert np.max(np.abs(sq[1::2])) <= 1e-12

    def test_squeezed_cutoff_too_small(self):
        with pytest.raises(CutoffTooSmallError):
            fock.squeezed_vacuum(0.85, 25)


class TestLoss:
    def test_identity(self, rng):
        rho = random_density_matrix(6, rng)
        np.testing.assert_allclose(fock.loss_channel(rho, 0.0), rho)

    @pytest.mark.parametrize("loss", [0.1, 0.23, 0.5])
    def test_single_photon(self, loss):
        out = fock.loss_channel(fock.fock_state(1, 2), loss)
        np.testing.assert_allclose(out, np.diag([loss, 1 - loss]), atol=1e-14)

    def test_full_loss_gives_vacuum(self, rng):
        out = fock.loss_channel(random_density_matrix(7, rng), 1.0)
        np.testing.assert_allclose(out, np.diag([1.0] + [0.0] * 6), atol=1e-14)

    def test_mean_photon_scales(self, rng):
        rho = random_density_matrix(8, rng)
        n0 = fock.mean_photon_number(rho)
        assert fock.mean_photon_number(fock.loss_channel(rho, 0.3)) == pytest.approx(0.7 * n0, rel=1e-12)

    def test_invalid_loss(self):
        with pytest.raises(InvalidLossError):
            fock.loss_channel(fock.vacuum(3), 1.2)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 2**31))
    def test_composition(self, l1, l2, seed):
        rho = random_density_matrix(6, np.random.default_rng(seed))
        twice = fock.loss_channel(fock.loss_channel(rho, l1), l2)
        once = fock.loss_channel(rho, 1 - (1 - l1) * (1 - l2))
        np.testing.assert_allclose(twice, once, atol=1e-10)
        assert np.trace(twice).real == pytest.approx(1.0, abs=1e-10)

    def test_adjoint_is_dual(self, rng):
        rho = random_density_matrix(6, rng)
        op = random_density_matrix(6, rng)
        lhs = np.trace(fock.loss_channel(rho, 0.3) @ op)
        rhs = np.trace(rho @ fock.loss_channel_adjoint(op, 0.3))
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestBeamsplitter:
    def test_identity(self, rng):
        psi = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
        psi /= np.linalg.norm(psi)
        out = fock.beamsplitter(psi, 1.0)
        np.testing.assert_allclose(out[:4, :3], psi, atol=1e-12)
        assert np.linalg.norm(out[:4, :3]) == pytest.approx(1.0, abs=1e-12)

    def test_single_photon_split(self):
        psi = fock.product_state(fock.fock_state(1, 2), fock.vacuum(2))
        out = fock.beamsplitter(psi, 0.5)
        assert abs(out[1, 0]) == pytest.approx(1 / np.sqrt(2), abs=1e-12)
        assert abs(out[0, 1]) == pytest.approx(1 / np.sqrt(2), abs=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0, 1), st.integers(0, 2**31))
    def test_unitary_and_number_preserving(self, T, seed):
        rng = np.random.default_rng(seed)
        psi = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
        psi /= np.linalg.norm(psi)
        out = fock.beamsplitter(psi, T)
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)

        def total_dist(c):
            m, n = np.indices(c.shape)
            return np.bincount((m + n).ravel(), weights=np.abs(c.ravel()) ** 2, minlength=9)[:9]

        np.testing.assert_allclose(total_dist(out), total_dist(psi), atol=1e-12)

    def test_binomial_thinning(self):
        # |n>|0> -> sum_k sqrt(C(n,k)) t^(n-k) r^k |n-k, k>
        from scipy.special import comb

        n, T = 5, 0.7
        out = fock.beamsplitter(fock.product_state(fock.fock_state(n, 6), fock.vacuum(1)), T)
        probs = np.array([abs(out[n - k, k]) ** 2 for k in range(n + 1)])
        expected = np.array([comb(n, k) * T ** (n - k) * (1 - T) ** k for k in range(n + 1)])
        np.testing.assert_allclose(probs, expected, atol=1e-12)


class TestWigner:
    def test_vacuum_peak(self):
        assert fock.wigner_at(fock.vacuum(20), 0.0, 0.0) == pytest.approx(VAC_PEAK, abs=1e-14)
        grid = fock.wigner(fock.vacuum(20))
        assert grid.values.max() == pytest.approx(VAC_PEAK, abs=1e-12)

    def test_single_photon_origin(self):
        assert fock.wigner_at(fock.fock_state(1, 5), 0.0, 0.0) == pytest.approx(-VAC_PEAK, abs=1e-14)

    def test_mixture_parity(self):
        rho = np.diag([0.23, 0.77]).astype(complex)
        assert fock.wigner_at(rho, 0.0, 0.0) == pytest.approx((1 - 2 * 0.77) / np.pi, abs=1e-12)

    def test_odd_cat_origin(self):
        assert fock.wigner_at(fock.cat(2, np.pi, 40), 0, 0) == pytest.approx(-VAC_PEAK, abs=1e-6)

    @pytest.mark.parametrize("point", [(0.3, -0.2), (1.1, 0.9), (-0.5, 1.4), (2.2, -1.7)])
    def test_matches_integral_definition(self, point):
        c = fock.cat(1.3 + 0.4j, 0.7, 40)
        assert fock.wigner_at(c, *point) == pytest.approx(wigner_by_integral(c, *point), abs=1e-9)

    def test_coherent_peak_location(self):
        c = fock.coherent(1.0 + 0.5j, 40)
        x, p = np.sqrt(2) * 1.0, np.sqrt(2) * 0.5
        assert fock.wigner_at(c, x, p) == pytest.approx(VAC_PEAK, abs=1e-10)

    @pytest.mark.parametrize("state", [fock.vacuum(20), fock.squeezed_vacuum(0.4, 40),
                                       fock.cat(1.5, np.pi, 40)])
    def test_normalization(self, state):
        grid = fock.wigner(state, np.linspace(-7, 7, 281))
        assert grid.integral() == pytest.approx(1.0, abs=1e-3)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_parity_identity(self, seed):
        rho = random_density_matrix(15, np.random.default_rng(seed))
        assert fock.wigner_at(rho, 0.0, 0.0) == pytest.approx(fock.parity_value(rho), abs=1e-6)

    def test_unnormalized_state_rejected(self):
        with pytest.raises(CutoffTooSmallError):
            fock.wigner(np.diag([0.5, 0.2]))

    def test_min_single_photon(self):
        value, loc = fock.wigner_min(fock.fock_state(1, 5))
        assert value == pytest.approx(-VAC_PEAK, abs=1e-12)
        assert loc == (0.0, 0.0)

    def test_min_vacuum_nonnegative(self):
        value, _ = fock.wigner_min(fock.vacuum(10))
        assert value >= 0

    def test_min_off_origin(self):
        # even cat: minima sit between the fringes, away from the origin
        c = fock.cat(2.0, 0.0, 40)
        value, (x, p) = fock.wigner_min(c)
        dense = fock.wigner(c, np.linspace(-4, 4, 801))
        assert value <= dense.values.min() + 1e-9
        assert abs(p) > 0.1


class TestQuadraturePdf:
    x = np.linspace(-8, 8, 4001)

    def _moments(self, pdf):
        norm = trapezoid(pdf, self.x)
        mean = trapezoid(self.x * pdf, self.x)
        return norm, trapezoid((self.x - mean) ** 2 * pdf, self.x)

    def test_vacuum_gaussian(self):
        pdf = fock.quadrature_pdf(fock.vacuum(10), 0.3, self.x)
        np.testing.assert_allclose(pdf, np.exp(-self.x**2) / np.sqrt(np.pi), atol=1e-14)
        norm, var = self._moments(pdf)
        assert norm == pytest.approx(1.0, abs=1e-6) and var == pytest.approx(0.5, abs=1e-6)

    @pytest.mark.parametrize("theta", [0.0, 0.7, np.pi / 2])
    def test_single_photon_node(self, theta):
        assert fock.quadrature_pdf(fock.fock_state(1, 3), theta, np.array([0.0]))[0] == pytest.approx(0, abs=1e-15)

    def test_squeezed_antisqueezed_variance(self):
        _, var = self._moments(fock.quadrature_pdf(fock.squeezed_vacuum(0.5, 40), 0.0, self.x))
        assert var == pytest.approx(np.exp(1) / 2, abs=1e-3)

    def test_coherent_mean_rotates(self):
        c = fock.coherent(1.0, 30)
        pdf = fock.quadrature_pdf(c, np.pi / 3, self.x)
        assert trapezoid(self.x * pdf, self.x) == pytest.approx(np.sqrt(2) * np.cos(np.pi / 3), abs=1e-8)

    @pytest.mark.parametrize("r,loss", [(0.3, 0.23), (0.6, 0.1), (0.8, 0.5)])
    @pytest.mark.parametrize("theta", [0.0, np.pi / 6, np.pi / 2, 2.0])
    def test_matches_eq8(self, r, loss, theta):
        rho = fock.loss_channel(fock.squeezed_vacuum(r, 50), loss)
        norm, var = self._moments(fock.quadrature_pdf(rho, theta, self.x))
        assert norm == pytest.approx(1.0, abs=1e-6)
        assert var == pytest.approx(fock.eq8_variance(r, loss, theta), abs=1e-3)


class TestEq8:
    def test_vacuum_level(self):
        for theta in (0.0, 0.4, np.pi / 2):
            assert fock.eq8_variance(0.0, 0.0, theta) == pytest.approx(0.5)
            assert fock.eq8_variance(0.7, 1.0, theta) == pytest.approx(0.5)

    def test_substitution(self):
        expected = 0.5 * 0.77 * np.exp(-1) + 0.115
        assert fock.eq8_variance(0.5, 0.23, np.pi / 2) == pytest.approx(expected, abs=1e-14)
        assert expected == pytest.approx(0.25663, abs=1e-5)

    def test_range_check(self):
        with pytest.raises(InvalidLossError):
            fock.eq8_variance(0.5, -0.1, 0.0)


class TestFidelity:
    def test_self(self, rng):
        rho = random_density_matrix(6, rng)
        assert fock.fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal(self):
        assert fock.fidelity(fock.vacuum(3), fock.fock_state(1, 3)) == pytest.approx(0.0, abs=1e-15)

    def test_pure_reduces_to_expectation(self, rng):
        rho = random_density_matrix(5, rng)
        psi = fock.squeezed_vacuum(0.2, 25)[:5]
        psi = psi / np.linalg.norm(psi)
        assert fock.fidelity(rho, psi) == pytest.approx(np.real(psi.conj() @ rho @ psi), abs=1e-12)
        assert fock.fidelity(rho, np.outer(psi, psi.conj())) == pytest.approx(
            np.real(psi.conj() @ rho @ psi), abs=1e-7)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidDimensionError):
            fock.fidelity(fock.vacuum(3), fock.vacuum(4))

    def test_subtracted_squeezed_close_to_odd_cat(self):
        # oracle: brute-force scan of the cat amplitude
        r, dim = 0.2, 40
        sq = fock.squeezed_vacuum(r, dim)
        sub = fock.annihilation(dim) @ sq
        sub /= np.linalg.norm(sub)
        alphas = np.linspace(0.05, 2.0, 400)
        overlaps = [abs(np.vdot(fock.cat(a, np.pi, dim), sub)) ** 2 for a in alphas]
        best = alphas[int(np.argmax(overlaps))]
        assert max(overlaps) >= 0.99
        assert fock.fidelity(np.outer(sub, sub.conj()), fock.cat(best, np.pi, dim)) == pytest.approx(
            max(overlaps), abs=1e-12)


def test_cutoff_stability_of_wigner_min():
    # amplitude-damped odd cat: doubling the cutoff leaves the minimum unchanged
    a = fock.loss_channel(fock.cat(1.5, np.pi, 30), 0.2)
    b = fock.loss_channel(fock.cat(1.5, np.pi, 60), 0.2)
    assert abs(fock.wigner_min(a)[0] - fock.wigner_min(b)[0]) < 1e-4


def test_erf_oracle_for_hermite_functions():
    # vacuum probability of a small bin around zero
    x = np.linspace(-0.05, 0.05, 2001)
    p = trapezoid(fock.quadrature_pdf(fock.vacuum(4), 0.0, x), x)
    assert p == pytest.approx(erf(0.05), abs=1e-9)
