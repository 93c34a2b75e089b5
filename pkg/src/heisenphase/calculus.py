"""One-sided operator calculus on the phase and configuration grids.

Weyl symbols a(xi, m) are stored on a square grid with axes (momentum xi,
position m), spacing half the configuration spacing and extent twice the
configuration extent.  With this layout the midpoint kernel and its inverse
are exact discrete Fourier pairs.  Symbols should be localized in
|xi| < L and |m| < L, where L is the configuration extent; constant
symbols are also quantized exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Params
from .fsb import (
    NotInSpaceError,
    fsb_project,
    mixed_gaussian_closed,
    require_member,
    right_integrated_values,
    vacuum_overlap,
)
from .grid import ConfigFn, GridError, GridSpec, PhaseFn, inner_product, shift_array
from .reps import RepTag, phase_mesh
from .transforms import (
    _as_vector,
    calibrate,
    integrated_schrodinger,
    symplectic_fourier,
    twisted_convolution_values,
)

__all__ = [
    "DenseOperator",
    "PDOSymbol",
    "NotInSpaceError",
    "symbol_spec_for",
    "twisted_convolution",
    "integrated",
    "pdo_apply",
    "pdo_kernel",
    "weyl_symbol_from_kernel",
    "moyal_compose",
    "localisation_op",
    "cross_toeplitz_apply",
    "guillemin_symbol",
    "toeplitz_conv_kernel",
    "guillemin_calibration",
    "toeplitz_matrix_element",
    "scaled_symplectic_fourier",
]


@dataclass(frozen=True)
class DenseOperator:
    """Schwartz kernel K on a configuration grid: (Kf)(t_i) = sum_j K[i, j] f(t_j) dt."""

    matrix: np.ndarray
    spec: GridSpec

    def __post_init__(self):
        n = self.spec.points
        if self.matrix.shape != (n, n):
            raise GridError("kernel matrix does not match the grid")
        if not np.all(np.isfinite(self.matrix)):
            raise GridError("kernel entries must be finite")

    def apply(self, f: ConfigFn) -> ConfigFn:
        if f.spec != self.spec:
            raise GridError("operator and function live on different grids")
        return ConfigFn(self.spec, self.matrix @ f.values * self.spec.spacing)

    def adjoint(self) -> "DenseOperator":
        return DenseOperator(self.matrix.conj().T, self.spec)

    def compose(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.matrix @ other.matrix * self.spec.spacing, self.spec)

    def operator_matrix(self) -> np.ndarray:
        return self.matrix * self.spec.spacing


@dataclass(frozen=True)
class PDOSymbol:
    """Weyl symbol sampled on the symbol grid, axes (xi, m)."""

    values: PhaseFn
    config: GridSpec

    def __post_init__(self):
        if self.values.spec != symbol_spec_for(self.config):
            raise GridError("symbol grid does not match the configuration grid")

    @classmethod
    def from_function(cls, func, config: GridSpec) -> "PDOSymbol":
        spec = symbol_spec_for(config)
        xi, m = np.meshgrid(spec.axis, spec.axis, indexing="ij")
        vals = np.broadcast_to(func(xi, m), spec.shape)
        return cls(PhaseFn(spec, vals), config)

    def like(self, vals) -> "PDOSymbol":
        return PDOSymbol(self.values.like(vals), self.config)


def symbol_spec_for(config: GridSpec) -> GridSpec:
    return GridSpec(2, 2.0 * config.extent, 4 * config.points)


# --- twisted convolution and integrated representations --------------------


def twisted_convolution(k1: PhaseFn, k2: PhaseFn, params: Params) -> PhaseFn:
    """Riemann sum of k1(p') k2(p - p') exp(pi i hbar omega(p', p))."""
    k1._check(k2)
    return k1.like(twisted_convolution_values(k1.values, k2.values, k1.spec, params.hbar))


def integrated(tag: RepTag, k: PhaseFn, f, params: Params):
    """Riemann sum of k(x, y) act(tag, (0, x, y), f)."""
    if tag is RepTag.Schrodinger:
        return integrated_schrodinger(k, f, params)
    k._check(f)
    if tag is RepTag.LeftPulled:
        return f.like(twisted_convolution_values(k.values, f.values, k.spec, params.hbar))
    if tag is RepTag.RightPulled:
        return f.like(right_integrated_values(k.values, f.values, k.spec, params.hbar))
    raise ValueError("integrated representations of the doubled group live in module twosided")


def scaled_symplectic_fourier(F: PhaseFn, params: Params, scale: float) -> PhaseFn:
    """Direct sum for p -> (symplectic Fourier of F)(scale * p), no aliasing."""
    ax = F.spec.axis
    amat = np.exp(1j * math.pi * params.hbar * scale * np.outer(ax, ax))
    vals = (abs(params.hbar) / 2.0) * F.spec.cell * (np.conj(amat) @ F.values.T @ amat)
    return F.like(vals)


# --- Weyl quantization ------------------------------------------------------


def _offsets(config: GridSpec) -> np.ndarray:
    n = config.points
    return np.arange(-(n - 1), n) * config.spacing


def pdo_kernel(a: PDOSymbol, params: Params) -> DenseOperator:
    """Midpoint kernel (|hbar|/2) int a(xi, (t + r)/2) exp(pi i hbar xi (t - r)) dxi."""
    config = a.config
    n = config.points
    spec = a.values.spec
    u = _offsets(config)
    emat = np.exp(1j * math.pi * params.hbar * np.outer(u, spec.axis))
    band = a.values.values[:, n : 3 * n - 1]
    b = (abs(params.hbar) / 2.0) * spec.spacing * (emat @ band)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return DenseOperator(b[i - j + n - 1, i + j], config)


def pdo_apply(a: PDOSymbol, f: ConfigFn, params: Params, method: str = "kernel") -> ConfigFn:
    """Weyl quantization of a applied to f.

    ``method='kernel'`` uses the midpoint kernel; ``method='integrated'``
    forms the Schrodinger integrated representation of the kernel k with
    a(xi, m) = (2/|hbar|) symplectic_fourier(k)(2m, -xi).  The second route
    only sees the symbol for |m| < L/2.
    """
    if f.spec != a.config:
        raise GridError("symbol and function use different configuration grids")
    if method == "kernel":
        return pdo_kernel(a, params).apply(f)
    if method != "integrated":
        raise ValueError("method must be 'kernel' or 'integrated'")
    phase = GridSpec(2, f.spec.extent, f.spec.points // 2)
    sym = a.values
    n = f.spec.points
    # b(X, Y) = (|hbar|/2) a(-Y, X/2) sampled on the phase grid
    offs = np.arange(phase.points) - phase.points // 2
    xi_idx = (2 * n - 4 * offs) % (4 * n)
    m_idx = 2 * n + 2 * offs
    bvals = (abs(params.hbar) / 2.0) * sym.values[np.ix_(xi_idx, m_idx)].T
    k = symplectic_fourier(PhaseFn(phase, bvals), params)
    return integrated_schrodinger(k, f, params)


def weyl_symbol_from_kernel(K: DenseOperator, params: Params) -> PDOSymbol:
    """a(xi, m) = sum over t + r = 2m of K(t, r) exp(-pi i hbar xi (t - r)) dt.

    At fixed m the offsets t - r have one parity, so the sum is (anti)periodic
    in xi with period 2L.  The localized representative is returned: the
    sum on |xi| < L and zero outside.  On this window the map is the exact
    inverse of the midpoint kernel.
    """
    config = K.spec
    n = config.points
    spec = symbol_spec_for(config)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    coll = np.zeros((2 * n - 1, 2 * n - 1), dtype=complex)
    coll[i - j + n - 1, i + j] = K.matrix
    u = _offsets(config)
    emat = np.exp(-1j * math.pi * params.hbar * np.outer(spec.axis, u))
    vals = np.zeros(spec.shape, dtype=complex)
    # u steps by 2 dt at fixed parity, hence the weight 2 dt
    vals[n : 3 * n, n : 3 * n - 1] = 2.0 * config.spacing * (emat[n : 3 * n] @ coll)
    return PDOSymbol(PhaseFn(spec, vals), config)


def _derivative(vals: np.ndarray, spec: GridSpec, axis: int, order: int) -> np.ndarray:
    if order == 0:
        return vals
    k = spec.wavenumbers()
    mult = (1j * k) ** order
    if order % 2:
        mult[spec.points // 2] = 0.0
    shape = [1, 1]
    shape[axis] = spec.points
    return np.fft.ifft(np.fft.fft(vals, axis=axis) * mult.reshape(shape), axis=axis)


def moyal_compose(a1: PDOSymbol, a2: PDOSymbol, order: int, params: Params) -> PDOSymbol:
    """Truncated composition series up to total derivative order ``order``.

    With h_eff = 1 / (pi hbar) the terms are
    (i h_eff / 2)^{j+k} (-1)^k / (j! k!) d_m^j d_xi^k a1 * d_xi^j d_m^k a2.
    """
    if order < 0 or order > 6:
        raise ValueError("order must lie in [0, 6]")
    if a1.config != a2.config:
        raise GridError("symbols use different grids")
    spec = a1.values.spec
    h_eff = 1.0 / (math.pi * params.hbar)
    v1 = a1.values.values
    v2 = a2.values.values
    total = np.zeros(spec.shape, dtype=complex)
    # axis 0 is xi, axis 1 is m
    for j in range(order + 1):
        for k in range(order + 1 - j):
            coef = (0.5j * h_eff) ** (j + k) * (-1) ** k / (math.factorial(j) * math.factorial(k))
            d1 = _derivative(_derivative(v1, spec, 1, j), spec, 0, k)
            d2 = _derivative(_derivative(v2, spec, 0, j), spec, 1, k)
            total += coef * d1 * d2
    return a1.like(total)


# --- localisation and Toeplitz operators -------------------------------------


def localisation_op(psi: PhaseFn, theta1, theta2, params: Params, calibrated: bool = True) -> DenseOperator:
    """Kernel of M_theta2 o (multiplication by psi) o W_theta1."""
    t1 = _as_vector(theta1)
    t2 = _as_vector(theta2)
    config = t1.spec
    if t2.spec != config:
        raise GridError("windows live on different grids")
    phase = psi.spec
    n = config.points
    u = _offsets(config)
    emat = np.exp(-2j * math.pi * params.hbar * np.outer(phase.axis, u))
    psi_hat = psi.values @ emat  # [a, u]
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    diff = i - j + n - 1
    kern = np.zeros((n, n), dtype=complex)
    for a, xa in enumerate(phase.axis):
        s2 = shift_array(t2.values, config, [xa])
        s1 = shift_array(t1.values, config, [xa])
        kern += psi_hat[a][diff] * np.outer(s2, np.conj(s1))
    kern *= phase.cell
    if calibrated:
        kern *= calibrate(params, config).reconstruction
    return DenseOperator(kern, config)


def cross_toeplitz_apply(psi: PhaseFn, F: PhaseFn, tau: float, sigma: float, params: Params, check: bool = True) -> PhaseFn:
    """P_sigma(psi F) for F in F_tau."""
    if check:
        require_member(F, tau, params)
    return fsb_project(psi * F, sigma, params)


def toeplitz_conv_kernel(psi: PhaseFn, tau: float, params: Params) -> PhaseFn:
    """k(c) = (2|hbar|)^n sf(psi)(2c) Phi_tau(c); Lambda(k) acts as the Toeplitz operator on F_tau."""
    from .fsb import fsb_gaussian

    sf2 = scaled_symplectic_fourier(psi, params, 2.0)
    return sf2 * fsb_gaussian(tau, params, psi.spec) * (2.0 * abs(params.hbar))


@dataclass(frozen=True)
class GuilleminCalibration:
    """Value of the symbol map on the constant function, against its closed form."""

    measured: float
    expected: float


def _upsample_periodic(vals: np.ndarray, factor: int) -> np.ndarray:
    """Trigonometric interpolation onto a grid ``factor`` times finer."""
    n = vals.shape[0]
    big = n * factor
    coeffs = np.fft.fft2(vals)
    out = np.zeros((big, big), dtype=complex)
    half = n // 2
    idx_lo = np.r_[0:half]
    idx_hi = np.r_[n - half + 1 : n]
    for src_r, dst_r in ((idx_lo, idx_lo), (idx_hi, idx_hi + big - n)):
        for src_c, dst_c in ((idx_lo, idx_lo), (idx_hi, idx_hi + big - n)):
            out[np.ix_(dst_r, dst_c)] = coeffs[np.ix_(src_r, src_c)]
    # split the Nyquist rows and columns symmetrically
    nyq = half
    out[nyq, :] = 0
    out[big - nyq, :] = 0
    out[:, nyq] = 0
    out[:, big - nyq] = 0
    for src_c, dst_c in ((idx_lo, idx_lo), (idx_hi, idx_hi + big - n)):
        out[nyq, dst_c] += coeffs[nyq, src_c] / 2
        out[big - nyq, dst_c] += coeffs[nyq, src_c] / 2
    for src_r, dst_r in ((idx_lo, idx_lo), (idx_hi, idx_hi + big - n)):
        out[dst_r, nyq] += coeffs[src_r, nyq] / 2
        out[dst_r, big - nyq] += coeffs[src_r, nyq] / 2
    for r in (nyq, big - nyq):
        for c in (nyq, big - nyq):
            out[r, c] = coeffs[nyq, nyq] / 4
    return np.fft.ifft2(out) * factor**2


def guillemin_symbol(psi: PhaseFn, tau: float, sigma: float, params: Params, config: GridSpec | None = None) -> PDOSymbol:
    """Weyl symbol equivalent to the cross-Toeplitz operator with symbol psi.

    a(xi, m) = 2^n int psi(q) Phi_{tau sigma}(2(m - q_x), -(xi + 2 q_y)) dq,
    a Gaussian smoothing of psi evaluated by FFT convolution.
    """
    phase = psi.spec
    config = config or GridSpec(1, phase.extent, 2 * phase.points)
    if not math.isclose(config.extent, phase.extent) or config.points != 2 * phase.points:
        raise GridError("configuration grid must pair with the symbol grid")
    sym = symbol_spec_for(config)
    n_p = phase.points
    # psi(q'/2) on a grid of spacing dp/4 over [-4L, 4L): upsample by 8, then tile
    fine = _upsample_periodic(psi.values, 8)
    shift = fine.shape[0] // 2
    psi2 = np.roll(np.tile(fine, (2, 2)), (-shift, -shift), axis=(0, 1))
    conv_spec = GridSpec(2, 4.0 * phase.extent, 16 * n_p)
    gauss = mixed_gaussian_closed(tau, sigma, params, conv_spec).values
    half = conv_spec.points // 2
    kern = np.roll(gauss, (-half, -half), axis=(0, 1))
    conv = np.fft.ifft2(np.fft.fft2(psi2) * np.fft.fft2(kern)) * conv_spec.cell
    # a(xi, m) = 1/2 conv(2m, -xi); m and xi live on the symbol grid (spacing dp/4, extent 2L)
    xs = 2.0 * sym.axis
    ys = -sym.axis
    xi_index = np.rint((xs + conv_spec.extent) / conv_spec.spacing).astype(int) % conv_spec.points
    yi_index = np.rint((ys + conv_spec.extent) / conv_spec.spacing).astype(int) % conv_spec.points
    # values[xi, m] = 1/2 conv[X(m), Y(xi)]
    vals = 0.5 * conv[np.ix_(xi_index, yi_index)].T
    return PDOSymbol(PhaseFn(sym, vals), config)


def guillemin_calibration(tau: float, sigma: float, params: Params, phase: GridSpec) -> GuilleminCalibration:
    one = PhaseFn(phase, np.ones(phase.shape))
    sym = guillemin_symbol(one, tau, sigma, params)
    n = sym.values.spec.points
    measured = complex(sym.values.values[n // 2, n // 2])
    return GuilleminCalibration(measured.real, vacuum_overlap(tau, sigma) / abs(params.hbar))


def toeplitz_matrix_element(psi: PhaseFn, f: ConfigFn, g: ConfigFn, tau: float, sigma: float, params: Params) -> complex:
    """<P_sigma(psi W_tau f), W_sigma g> computed on the phase grid."""
    from .fsb import gaussian_vacuum
    from .transforms import covariant

    wf = covariant(f, gaussian_vacuum(tau, params, f.spec), params, psi.spec)
    wg = covariant(g, gaussian_vacuum(sigma, params, g.spec), params, psi.spec)
    return inner_product(psi * wf, wg)
