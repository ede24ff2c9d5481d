"""Truncated Fock-space engine.

States are plain numpy arrays:

* pure single-mode state: complex vector ``c[n]``
* density matrix: complex ``(d, d)`` array ``rho[m, n]``
* two-mode pure state: complex ``(d_s, d_i)`` array ``c[m, n]`` (signal, idler)

Quadratures follow x_theta = (a e^{-i theta} + a^dag e^{i theta}) / sqrt(2)
with hbar = 1, so the vacuum variance is 1/2 and the vacuum Wigner function
peaks at 1/pi. Angles are in radians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize
from scipy.special import gammaln
from scipy.stats import poisson

from .exceptions import (
    CutoffTooSmallError,
    DegenerateCatError,
    InputError,
    InvalidDimensionError,
    InvalidLossError,
)

TAIL_TOL = 1e-8


def _check_dim(dim):
    if int(dim) != dim or dim < 1:
        raise InvalidDimensionError(f"Fock cutoff must be a positive integer, got {dim!r}")
    return int(dim)


def _check_fraction(value, name="loss"):
    if not 0.0 <= value <= 1.0:
        raise InvalidLossError(f"{name} must lie in [0, 1], got {value!r}")


def as_density_matrix(state):
    """Return ``state`` as a density matrix (pure vectors become projectors)."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    if state.ndim != 2 or state.shape[0] != state.shape[1]:
        raise InputError(f"expected a vector or square matrix, got shape {state.shape}")
    return state


def resize(rho, dim):
    """Zero-pad or truncate a density matrix to ``dim`` (no renormalization)."""
    rho = as_density_matrix(rho)
    out = np.zeros((dim, dim), dtype=complex)
    k = min(dim, rho.shape[0])
    out[:k, :k] = rho[:k, :k]
    return out


def vacuum(dim):
    dim = _check_dim(dim)
    c = np.zeros(dim, dtype=complex)
    c[0] = 1.0
    return c


def fock_state(n, dim):
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise CutoffTooSmallError(f"|{n}> does not fit in cutoff {dim}")
    c = np.zeros(dim, dtype=complex)
    c[n] = 1.0
    return c


def _coherent_raw(alpha, dim):
    n = np.arange(dim)
    mag = abs(alpha)
    if mag == 0:
        return vacuum(dim)
    logc = -0.5 * mag**2 + n * np.log(mag) - 0.5 * gammaln(n + 1)
    return np.exp(logc) * np.exp(1j * n * np.angle(alpha))


def coherent(alpha, dim):
    """Coherent state |alpha>, renormalized after truncation."""
    dim = _check_dim(dim)
    tail = poisson.sf(dim - 1, abs(alpha) ** 2)
    if tail > TAIL_TOL:
        raise CutoffTooSmallError(
            f"coherent({alpha}) loses {tail:.2e} probability above cutoff {dim}"
        )
    c = _coherent_raw(alpha, dim)
    return c / np.linalg.norm(c)


def cat(alpha, phi, dim):
    """Cat state (|alpha> + e^{i phi}|-alpha>) / N_{phi, alpha}."""
    dim = _check_dim(dim)
    norm = np.sqrt(2.0 * (1.0 + np.exp(-2.0 * abs(alpha) ** 2) * np.cos(phi)))
    if norm <= 1e-8:
        raise DegenerateCatError(f"cat normalization vanishes for alpha={alpha}, phi={phi}")
    tail = poisson.sf(dim - 1, abs(alpha) ** 2)
    if tail > TAIL_TOL:
        raise CutoffTooSmallError(f"cat({alpha}) loses {tail:.2e} above cutoff {dim}")
    n = np.arange(dim)
    # |-alpha> = (-1)^n |alpha> componentwise; exact parity cancellation
    parity = np.where(n % 2 == 0, 1.0, -1.0)
    weight = 1.0 + np.exp(1j * phi) * parity
    if np.isclose(np.cos(phi), -1.0, atol=0, rtol=1e-15):
        weight = np.where(n % 2 == 0, 0.0, 2.0)
    elif np.isclose(np.cos(phi), 1.0, atol=0, rtol=1e-15):
        weight = np.where(n % 2 == 0, 2.0, 0.0)
    c = _coherent_raw(alpha, dim) * weight / norm
    return c / np.linalg.norm(c)


def squeezed_vacuum(r, dim):
    """Single-mode squeezed vacuum with the p quadrature (theta = 90 deg) squeezed."""
    dim = _check_dim(dim)
    if r == 0:
        return vacuum(dim)
    t = np.tanh(abs(r))
    k = np.arange((dim + 1) // 2)
    logc = k * np.log(t) + 0.5 * gammaln(2 * k + 1) - k * np.log(2.0) - gammaln(k + 1)
    logc -= 0.5 * np.log(np.cosh(r))
    amps = np.exp(logc)
    if r < 0:
        amps = amps * (-1.0) ** k
    kept = np.sum(amps**2)
    if 1.0 - kept > TAIL_TOL:
        raise CutoffTooSmallError(
            f"squeezed_vacuum(r={r}) loses {1.0 - kept:.2e} above cutoff {dim}"
        )
    c = np.zeros(dim, dtype=complex)
    c[0::2] = amps
    return c / np.linalg.norm(c)


def annihilation(dim):
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def number_op(dim):
    return np.diag(np.arange(dim)).astype(complex)


def quadrature_op(theta, dim):
    a = annihilation(dim)
    return (a * np.exp(-1j * theta) + a.conj().T * np.exp(1j * theta)) / np.sqrt(2.0)


def mean_photon_number(state):
    rho = as_density_matrix(state)
    return float(np.real(np.trace(rho @ number_op(rho.shape[0]))))


def quadrature_moments(state, theta):
    """Mean and variance of x_theta, computed one level above the cutoff."""
    rho = resize(state, as_density_matrix(state).shape[0] + 1)
    x = quadrature_op(theta, rho.shape[0])
    mean = np.real(np.trace(rho @ x))
    second = np.real(np.trace(rho @ x @ x))
    return float(mean), float(second - mean**2)


def quadrature_variance(state, theta):
    return quadrature_moments(state, theta)[1]


def eq8_variance(r, loss, theta):
    """Quadrature variance of lossy squeezed light, antisqueezed at theta = 0."""
    _check_fraction(loss)
    return (
        0.5 * (1.0 - loss) * (np.exp(2 * r) * np.cos(theta) ** 2 + np.exp(-2 * r) * np.sin(theta) ** 2)
        + 0.5 * loss
    )


def loss_kraus(loss, dim):
    """Kraus operators of a pure-loss beamsplitter with transmissivity 1 - loss."""
    _check_fraction(loss)
    trans = 1.0 - loss
    n = np.arange(dim)
    ops = []
    for k in range(dim):
        m = n[k:]
        logc = 0.5 * (gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1))
        amp = np.exp(logc) * trans ** ((m - k) / 2.0) * loss ** (k / 2.0)
        E = np.zeros((dim, dim))
        E[m - k, m] = amp
        ops.append(E)
    return ops


def loss_channel(rho, loss):
    _check_fraction(loss)
    rho = as_density_matrix(rho)
    if loss == 0:
        return rho.copy()
    out = np.zeros_like(rho)
    for E in loss_kraus(loss, rho.shape[0]):
        out += E @ rho @ E.T
    return out


def loss_channel_adjoint(op, loss):
    """Heisenberg-picture loss map, used to fold detection efficiency into POVMs."""
    _check_fraction(loss)
    op = np.asarray(op, dtype=complex)
    if loss == 0:
        return op.copy()
    out = np.zeros_like(op)
    for E in loss_kraus(loss, op.shape[0]):
        out += E.T @ op @ E
    return out


def product_state(signal, idler):
    return np.outer(np.asarray(signal, dtype=complex), np.asarray(idler, dtype=complex))


def _bs_block(total, angle):
    j = np.arange(1, total + 1)
    gen = np.zeros((total + 1, total + 1))
    # a^dag b |N-j, j> -> sqrt((N-j+1) j) |N-j+1, j-1>
    gen[j - 1, j] = np.sqrt((total - j + 1) * j)
    return expm(angle * (gen - gen.T))


def beamsplitter(psi, transmissivity, dims=None):
    """Mix signal and idler of a pure two-mode state on a beamsplitter.

    Without ``dims`` the output is sized to hold every photon-number sector
    of the input, so the map is exactly unitary. With ``dims`` the result is
    truncated; a discarded norm above 1e-8 raises ``CutoffTooSmallError``.
    """
    _check_fraction(transmissivity, "transmissivity")
    psi = np.asarray(psi, dtype=complex)
    ds, di = psi.shape
    nmax = ds + di - 2
    out = np.zeros((nmax + 1, nmax + 1), dtype=complex)
    angle = np.arccos(np.sqrt(transmissivity))
    for total in range(nmax + 1):
        j = np.arange(total + 1)
        valid = (total - j < ds) & (j < di)
        vec = np.zeros(total + 1, dtype=complex)
        vec[valid] = psi[total - j[valid], j[valid]]
        if not vec.any():
            continue
        out[total - j, j] = _bs_block(total, angle) @ vec
    if dims is None:
        return out
    kept = out[: dims[0], : dims[1]]
    tail = 1.0 - np.sum(np.abs(kept) ** 2) / np.sum(np.abs(out) ** 2)
    if tail > TAIL_TOL:
        raise CutoffTooSmallError(f"two-mode truncation to {tuple(dims)} discards {tail:.2e}")
    return kept / np.linalg.norm(kept)


def reduced_signal(psi):
    """Signal-mode density matrix of a pure two-mode state."""
    psi = np.asarray(psi, dtype=complex)
    return psi @ psi.conj().T


def reduced_idler(psi):
    psi = np.asarray(psi, dtype=complex)
    return psi.T @ psi.conj()


@dataclass(frozen=True)
class WignerGrid:
    x: np.ndarray
    p: np.ndarray
    values: np.ndarray  # shape (len(p), len(x))

    def integral(self):
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float(self.values.sum() * dx * dp)

    def argmin(self):
        ip, ix = np.unravel_index(np.argmin(self.values), self.values.shape)
        return ix, ip


def _check_normalized(rho):
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-6:
        raise CutoffTooSmallError(f"state trace is {tr:.8f}; truncated or unnormalized")


def wigner_at(state, x, p):
    """Wigner function at arbitrary points via normalized associated Laguerre terms."""
    rho = as_density_matrix(state)
    _check_normalized(rho)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    d = rho.shape[0]
    r2 = x**2 + p**2
    y = 2.0 * r2
    log_sr = 0.5 * np.log(np.where(r2 > 0, 2.0 * r2, 1.0))
    phase = np.exp(-1j * np.arctan2(p, x))
    total = np.zeros(np.broadcast(x, p).shape)
    for k in range(d):
        diag = np.diagonal(rho, -k)  # rho[n + k, n]
        if not np.any(diag):
            continue
        signs = (-1.0) ** np.arange(len(diag))
        coeffs = signs * diag
        # l_n = sqrt(k! n!/(n+k)!) L_n^k(y), three-term recurrence in n
        prev = np.ones_like(y)
        acc = coeffs[0] * prev
        if len(diag) > 1:
            cur = (1.0 + k - y) / np.sqrt(1.0 + k)
            acc = acc + coeffs[1] * cur
            for n in range(1, len(diag) - 1):
                nxt = ((2 * n + 1 + k - y) * cur - np.sqrt(n * (n + k)) * prev) / np.sqrt(
                    (n + 1) * (n + 1 + k)
                )
                prev, cur = cur, nxt
                acc = acc + coeffs[n + 1] * cur
        if k == 0:
            total += np.real(acc) * np.exp(-r2)
        else:
            pref = np.where(r2 > 0, np.exp(-r2 + k * log_sr - 0.5 * gammaln(k + 1)), 0.0)
            total += 2.0 * np.real(acc * phase**k) * pref
    return total / np.pi


def wigner(state, x=None, p=None):
    """Wigner function on the grid ``x`` by ``p`` (defaults: [-6, 6], 201 points)."""
    if x is None:
        x = np.linspace(-6, 6, 201)
    if p is None:
        p = x
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    X, P = np.meshgrid(x, p)
    return WignerGrid(x=x, p=p, values=wigner_at(state, X, P))


def parity_value(state):
    """W(0, 0) = <(-1)^n> / pi."""
    rho = as_density_matrix(state)
    d = np.real(np.diagonal(rho))
    return float(np.sum(d * (-1.0) ** np.arange(len(d))) / np.pi)


def wigner_min(state, half_width=None, n_points=121):
    """Global minimum of the Wigner function and its location ``(x, p)``.

    A coarse grid minimum is refined by a quadratic fit over its 3x3
    neighbourhood and then polished with Nelder-Mead on the exact function.
    """
    rho = as_density_matrix(state)
    if half_width is None:
        half_width = min(np.sqrt(2.0 * mean_photon_number(rho) + 1.0) + 2.0, 8.0)
    if n_points % 2 == 0:
        n_points += 1  # keep the origin on the grid
    axis = np.linspace(-half_width, half_width, n_points)
    grid = wigner(rho, axis, axis)
    ix, ip = grid.argmin()
    best_val = grid.values[ip, ix]
    best_loc = np.array([axis[ix], axis[ip]])

    h = axis[1] - axis[0]
    start = best_loc.copy()
    if 0 < ix < n_points - 1 and 0 < ip < n_points - 1:
        patch = grid.values[ip - 1 : ip + 2, ix - 1 : ix + 2]
        gx = (patch[1, 2] - patch[1, 0]) / (2 * h)
        gp = (patch[2, 1] - patch[0, 1]) / (2 * h)
        hxx = (patch[1, 2] - 2 * patch[1, 1] + patch[1, 0]) / h**2
        hpp = (patch[2, 1] - 2 * patch[1, 1] + patch[0, 1]) / h**2
        hxp = (patch[2, 2] - patch[2, 0] - patch[0, 2] + patch[0, 0]) / (4 * h**2)
        hess = np.array([[hxx, hxp], [hxp, hpp]])
        if np.all(np.linalg.eigvalsh(hess) > 0):
            step = -np.linalg.solve(hess, [gx, gp])
            if np.all(np.abs(step) <= h):
                start = best_loc + step

    def fun(v):
        return float(wigner_at(rho, v[0], v[1]))

    res = minimize(
        fun, start, method="Nelder-Mead",
        options={"xatol": 1e-9, "fatol": 1e-14, "initial_simplex": start + np.array([[0, 0], [h / 4, 0], [0, h / 4]])},
    )
    if res.fun < best_val:
        best_val, best_loc = res.fun, res.x
    # pin to the origin when it is as good as the refined point
    origin = parity_value(rho)
    if origin <= best_val + 1e-12:
        best_val, best_loc = origin, np.zeros(2)
    return float(best_val), (float(best_loc[0]), float(best_loc[1]))


def hermite_functions(dim, x):
    """Harmonic-oscillator eigenfunctions psi_n(x), n < dim, as a (dim, len(x)) array."""
    x = np.asarray(x, dtype=float)
    out = np.empty((dim,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-(x**2) / 2)
    if dim > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, dim - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def quadrature_pdf(state, theta, x):
    """Homodyne marginal p(x | theta)."""
    rho = as_density_matrix(state)
    d = rho.shape[0]
    psi = hermite_functions(d, x)
    v = psi * np.exp(1j * theta * np.arange(d))[:, None]
    return np.real(np.einsum("mx,mn,nx->x", v.conj(), rho, v))


def _psd_sqrt(rho):
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    w = np.clip(w, 0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma):
    """Uhlmann fidelity (squared convention): F = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    rho_arr = np.asarray(rho, dtype=complex)
    sigma_arr = np.asarray(sigma, dtype=complex)
    if rho_arr.shape[0] != sigma_arr.shape[0]:
        raise InvalidDimensionError(
            f"dimension mismatch: {rho_arr.shape[0]} vs {sigma_arr.shape[0]}"
        )
    if sigma_arr.ndim == 1:
        rho_arr, sigma_arr = sigma_arr, rho_arr
    if rho_arr.ndim == 1:
        dm = as_density_matrix(sigma_arr)
        return float(np.clip(np.real(rho_arr.conj() @ dm @ rho_arr), 0.0, 1.0))
    s = _psd_sqrt(rho_arr)
    inner = s @ sigma_arr @ s
    w = np.clip(np.linalg.eigvalsh((inner + inner.conj().T) / 2), 0, None)
    return float(np.clip(np.sum(np.sqrt(w)) ** 2, 0.0, 1.0))


def is_physical(rho, tol=1e-10):
    rho = as_density_matrix(rho)
    herm = np.max(np.abs(rho - rho.conj().T)) <= 1e-12
    tr = abs(np.trace(rho).real - 1.0) <= tol
    psd = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() >= -tol
    return bool(herm and tr and psd)
