"""Homodyne state tomography by iterative maximum likelihood (R rho R)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import fock
from .exceptions import InputError, InsufficientPhasesError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def bin_overlaps(edges_lo, edges_hi, dim):
    """Integrals of psi_m psi_n over each bin, shape (n_bins, dim, dim)."""
    lo = np.asarray(edges_lo, dtype=float)[:, None]
    hi = np.asarray(edges_hi, dtype=float)[:, None]
    half = (hi - lo) / 2
    x = lo + half * (_GL_NODES[None, :] + 1.0)
    psi = fock.hermite_functions(dim, x)  # (dim, n_bins, n_nodes)
    return np.einsum("mbk,nbk,k,b->bmn", psi, psi, _GL_WEIGHTS, half[:, 0])


def povm_element(theta, x_lo, x_hi, dim):
    """Quadrature POVM element integral over [x_lo, x_hi] of |x_theta><x_theta| dx."""
    if not x_hi > x_lo:
        raise InputError("bin must have positive width")
    G = bin_overlaps([x_lo], [x_hi], dim)[0]
    ph = np.exp(1j * theta * np.arange(dim))
    return np.outer(ph, ph.conj()) * G


@dataclass(frozen=True)
class _Binned:
    povms: np.ndarray  # (n_bins, dim, dim), element [b, m, n] = <m|Pi_b|n>
    counts: np.ndarray


def _bin_data(X, dim, bin_width, efficiency):
    theta = X[:, 0]
    x = X[:, 1]
    povms, counts = [], []
    for th in np.unique(theta):
        idx, n = np.unique(np.floor(x[theta == th] / bin_width).astype(np.int64), return_counts=True)
        G = bin_overlaps(idx * bin_width, (idx + 1) * bin_width, dim)
        ph = np.exp(1j * th * np.arange(dim))
        P = G * np.outer(ph, ph.conj())[None]
        if efficiency < 1.0:
            P = np.stack([fock.loss_channel_adjoint(Pi, 1.0 - efficiency) for Pi in P])
        povms.append(P)
        counts.append(n)
    return _Binned(np.concatenate(povms), np.concatenate(counts).astype(float))


def _probabilities(binned, rho):
    # Tr(rho Pi) = sum_mn rho_nm Pi_mn
    return np.real(np.einsum("nm,bmn->b", rho, binned.povms))


def _loglik(binned, rho):
    p = _probabilities(binned, rho)
    return float(np.sum(binned.counts * np.log(np.clip(p, 1e-300, None)))), p


class MLETomography(BaseEstimator):
    """Binned-likelihood RrhoR reconstruction from phase-tagged quadratures.

    ``fit`` takes an (n, 2) array of (theta in radians, x). The estimator
    depends only on the multiset of samples: data are grouped by sorted
    phase and sorted bin before any accumulation.

    Parameters
    ----------
    cutoff : int
        Fock cutoff of the reconstruction.
    bin_width : float
        Width of the quadrature histogram bins.
    max_iter : int
        Iteration cap; hitting it sets ``converged_ = False``.
    tol : float
        Stop once the log-likelihood gain per sample falls below this.
    efficiency : float
        Detection efficiency folded into the POVM; 1 means no loss correction.
    dilution : float
        Initial step of the diluted update, used only if a plain step would
        lower the likelihood.
    """

    def __init__(self, cutoff=15, bin_width=0.1, max_iter=2000, tol=1e-10,
                 efficiency=1.0, dilution=0.5):
        self.cutoff = cutoff
        self.bin_width = bin_width
        self.max_iter = max_iter
        self.tol = tol
        self.efficiency = efficiency
        self.dilution = dilution

    def _validate_params(self):
        if self.cutoff < 2:
            raise InputError("cutoff must be >= 2")
        if self.bin_width <= 0:
            raise InputError("bin_width must be positive")
        if not 0.0 < self.efficiency <= 1.0:
            raise InputError("efficiency must lie in (0, 1]")

    def fit(self, X, y=None):
        self._validate_params()
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise InputError("X must have columns (theta, x)")
        if len(np.unique(X[:, 0])) < 2:
            raise InsufficientPhasesError("need at least two distinct LO phases")
        d = self.cutoff
        binned = _bin_data(X, d, self.bin_width, self.efficiency)
        n_total = binned.counts.sum()

        rho = np.eye(d, dtype=complex) / d
        ll, p = _loglik(binned, rho)
        history = [ll]
        converged = False
        diluted = 0
        it = 0
        for it in range(1, self.max_iter + 1):
            R = np.einsum("b,bmn->mn", binned.counts / p, binned.povms) / n_total
            cand = R @ rho @ R
            cand /= np.trace(cand).real
            new_ll, new_p = _loglik(binned, cand)
            eps = self.dilution
            while new_ll < ll - 1e-12 * abs(ll) and eps > 1e-8:
                diluted += 1
                A = (np.eye(d) + eps * R) / (1.0 + eps)
                cand = A @ rho @ A.conj().T
                cand /= np.trace(cand).real
                new_ll, new_p = _loglik(binned, cand)
                eps /= 2
            gain = (new_ll - ll) / n_total
            rho, ll, p = (cand + cand.conj().T) / 2, new_ll, new_p
            history.append(ll)
            if gain < self.tol:
                converged = True
                break

        self.density_matrix_ = rho
        self.log_likelihood_ = ll
        self.ll_history_ = np.array(history)
        self.n_iter_ = it
        self.converged_ = converged
        self.n_diluted_ = diluted
        self.n_samples_ = int(n_total)
        return self

    def score(self, X, y=None):
        """Mean log-likelihood per sample of ``X`` under the fitted state."""
        check_is_fitted(self, "density_matrix_")
        X = check_array(X, dtype=float)
        binned = _bin_data(X, self.cutoff, self.bin_width, self.efficiency)
        ll, _ = _loglik(binned, self.density_matrix_)
        return ll / binned.counts.sum()


def mle_reconstruct(dataset, **params):
    """Reconstruct a density matrix from a ``QuadratureDataset``."""
    return MLETomography(**params).fit(dataset.to_X())


@dataclass(frozen=True)
class NegativityReport:
    wigner_min: float
    location: tuple
    parity_value: float

    @property
    def negative(self):
        return self.wigner_min < 0


def negativity_report(rho):
    value, loc = fock.wigner_min(rho)
    return NegativityReport(wigner_min=value, location=loc, parity_value=fock.parity_value(rho))
