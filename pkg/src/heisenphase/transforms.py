"""Covariant and contravariant transforms, the FSB transform with peeling,
twisted convolution on the phase grid and the symplectic Fourier transform.

Phase grids paired with a configuration grid share its extent and have
half as many points, so every phase-space x coordinate is an even number
of configuration samples.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import Params
from .grid import ConfigFn, GridError, GridSpec, PhaseFn, shift_array, spectral_derivative
from .reps import phase_mesh


class PeelOverflowError(FloatingPointError):
    """Raised when the peeling weight would overflow on part of the grid."""


PEEL_EXPONENT_LIMIT = 700.0


@dataclass(frozen=True)
class Window:
    """Analysing or reconstructing vector of a covariant transform."""

    vector: ConfigFn

    def __post_init__(self):
        if not isinstance(self.vector, ConfigFn):
            raise TypeError("a window wraps a ConfigFn")
        if self.norm <= 0:
            raise ValueError("window vector must be nonzero")

    @property
    def norm(self) -> float:
        return self.vector.norm()


def _as_vector(w) -> ConfigFn:
    return w.vector if isinstance(w, Window) else w


def phase_spec_for(config: GridSpec) -> GridSpec:
    if config.dim != 1:
        raise GridError("sampled transforms are implemented for n = 1")
    return GridSpec(2, config.extent, config.points // 2)


def config_spec_for(phase: GridSpec) -> GridSpec:
    return GridSpec(1, phase.extent, 2 * phase.points)


def _shifted_windows(psi: ConfigFn, phase: GridSpec) -> np.ndarray:
    """Rows psi(t - x_a) for every phase-grid x coordinate."""
    return np.stack([shift_array(psi.values, psi.spec, [xa]) for xa in phase.axis])


def _momentum_matrix(config: GridSpec, phase: GridSpec, hbar: float) -> np.ndarray:
    """E[b, j] = exp(2 pi i hbar y_b t_j)."""
    return np.exp(2j * math.pi * hbar * np.outer(phase.axis, config.axis))


def _xy_phase(phase: GridSpec, hbar: float) -> np.ndarray:
    x, y = phase_mesh(phase)
    return np.exp(1j * math.pi * hbar * x * y)


def fourier_wigner(f: ConfigFn, phi, params: Params, phase: GridSpec | None = None) -> PhaseFn:
    """W(f, phi)(x, y) = <f, rho(0, x, y) phi> on every phase-grid point."""
    phi = _as_vector(phi)
    if f.spec != phi.spec:
        raise GridError("f and the window live on different grids")
    phase = phase or phase_spec_for(f.spec)
    rows = f.values[None, :] * np.conj(_shifted_windows(phi, phase))
    emat = _momentum_matrix(f.spec, phase, params.hbar)
    vals = rows @ emat.T * f.spec.spacing
    return PhaseFn(phase, vals * np.conj(_xy_phase(phase, params.hbar)))


def covariant(f: ConfigFn, theta, params: Params, phase: GridSpec | None = None) -> PhaseFn:
    return fourier_wigner(f, theta, params, phase)


def integrated_schrodinger(k: PhaseFn, f: ConfigFn, params: Params) -> ConfigFn:
    """Riemann sum of k(x, y) rho(0, x, y) f over the phase grid."""
    phase = k.spec
    emat = _momentum_matrix(f.spec, phase, params.hbar)
    weighted = (k.values * _xy_phase(phase, params.hbar)) @ np.conj(emat)
    vals = np.sum(weighted * _shifted_windows(f, phase), axis=0) * phase.cell
    return ConfigFn(f.spec, vals)


@dataclass(frozen=True)
class CalibrationRecord:
    """Constants fixed by evaluating identities on the vacuum.

    reconstruction multiplies the raw contravariant integral so that
    contravariant(covariant(f, theta), psi) = <psi, theta> f.
    fsb_measure is the factor between the vacuum-window covariant
    transform and the pre-FSB transform.
    """

    hbar: float
    tau: float
    points: int
    extent: float
    reconstruction: float
    fsb_measure: float


@functools.lru_cache(maxsize=64)
def _calibrate(hbar: float, tau: float, points: int, extent: float) -> CalibrationRecord:
    from .fsb import gaussian_vacuum

    params = Params(hbar=hbar, tau=tau)
    config = GridSpec(1, extent, points)
    vac = gaussian_vacuum(tau, params, config)
    raw = integrated_schrodinger(fourier_wigner(vac, vac, params), vac, params)
    recon = 1.0 / np.vdot(vac.values, raw.values).real / config.spacing
    # pre-FSB measure: the vacuum must map to the unit Gaussian at the origin
    fw = fourier_wigner(vac, vac, params)
    centre = fw.values[fw.spec.points // 2, fw.spec.points // 2]
    return CalibrationRecord(hbar, tau, points, extent, float(recon), float(1.0 / centre.real))


def calibrate(params: Params, config: GridSpec, tau: float | None = None) -> CalibrationRecord:
    tau = params.tau if tau is None else tau
    return _calibrate(float(params.hbar), float(tau), config.points, float(config.extent))


def contravariant(F: PhaseFn, psi, params: Params, config: GridSpec | None = None, calibrated: bool = True) -> ConfigFn:
    """Reconstruction map; the raw integral when calibrated is False."""
    psi = _as_vector(psi)
    out = integrated_schrodinger(F, psi, params)
    if calibrated:
        out = out * calibrate(params, psi.spec).reconstruction
    return out


def covariant_left(F: PhaseFn, Psi: PhaseFn, params: Params) -> PhaseFn:
    """(x, y) -> <F, Lambda(0, x, y) Psi>."""
    F._check(Psi)
    return F.like(twisted_convolution_values(F.values, reflect_values(np.conj(Psi.values)), F.spec, params.hbar))


def contravariant_left(F: PhaseFn, Psi: PhaseFn, params: Params) -> PhaseFn:
    """Riemann sum of F(x, y) Lambda(0, x, y) Psi, the twisted convolution F * Psi."""
    F._check(Psi)
    return F.like(twisted_convolution_values(F.values, Psi.values, F.spec, params.hbar))


def reflect_values(vals: np.ndarray) -> np.ndarray:
    for axis in range(vals.ndim):
        vals = np.roll(np.flip(vals, axis=axis), 1, axis=axis)
    return vals


def twisted_convolution_values(f1: np.ndarray, f2: np.ndarray, spec: GridSpec, hbar: float) -> np.ndarray:
    """Riemann sum of f1(p') f2(p - p') exp(pi i hbar omega(p', p)) on the torus.

    One pass per x' index; along y the sum is a circular convolution done
    with the FFT.
    """
    n = spec.points
    ax = spec.axis
    half = n // 2
    g_hat = np.fft.fft(np.roll(f2, -half, axis=1), axis=1)
    # exp(-pi i hbar x_a y_b') for all (a, b')
    left = np.exp(-1j * math.pi * hbar * np.outer(ax, ax))
    out = np.zeros((n, n), dtype=complex)
    rows = np.arange(n)
    for a_p in range(n):
        u_hat = np.fft.fft(f1[a_p][None, :] * left, axis=1)
        idx = (rows - a_p + half) % n
        conv = np.fft.ifft(u_hat * g_hat[idx], axis=1)
        out += conv * np.exp(1j * math.pi * hbar * ax[a_p] * ax)[None, :]
    return out * spec.cell


def twisted_convolution(k1: PhaseFn, k2: PhaseFn, params: Params) -> PhaseFn:
    k1._check(k2)
    return k1.like(twisted_convolution_values(k1.values, k2.values, k1.spec, params.hbar))


def peel_exponent(spec: GridSpec, tau: float, params: Params) -> np.ndarray:
    x, y = phase_mesh(spec)
    return math.pi * abs(params.hbar) / (2.0 * tau) * (x**2 + tau**2 * y**2)


def peel(F: PhaseFn, tau: float, params: Params) -> PhaseFn:
    """Multiply by exp(pi |hbar| / (2 tau) (x^2 + tau^2 y^2)).

    Raises PeelOverflowError if the exponent exceeds the double range
    anywhere on the grid.
    """
    expo = peel_exponent(F.spec, tau, params)
    bad = expo > PEEL_EXPONENT_LIMIT
    if bad.any():
        warnings.warn(f"peeling weight overflows at {int(bad.sum())} grid points", RuntimeWarning, stacklevel=2)
        raise PeelOverflowError(f"peeling exponent exceeds {PEEL_EXPONENT_LIMIT} at {int(bad.sum())} points")
    return F.like(F.values * np.exp(expo))


def unpeel(F: PhaseFn, tau: float, params: Params) -> PhaseFn:
    return F.like(F.values * np.exp(-peel_exponent(F.spec, tau, params)))


def fsb_transform(f: ConfigFn, tau: float, params: Params, phase: GridSpec | None = None) -> PhaseFn:
    """Peeled covariant transform with the squeezed vacuum as window."""
    from .fsb import gaussian_vacuum

    vac = gaussian_vacuum(tau, params, f.spec)
    measure = calibrate(params, f.spec, tau).fsb_measure
    return peel(covariant(f, vac, params, phase) * measure, tau, params)


def pre_fsb_transform(f: ConfigFn, tau: float, params: Params, phase: GridSpec | None = None) -> PhaseFn:
    from .fsb import gaussian_vacuum

    vac = gaussian_vacuum(tau, params, f.spec)
    return covariant(f, vac, params, phase) * calibrate(params, f.spec, tau).fsb_measure


def dbar_z(F: PhaseFn, tau: float, params: Params) -> PhaseFn:
    """Cauchy-Riemann operator in z = sqrt(|h| / (2 tau)) (x + i tau y)."""
    scale = math.sqrt(abs(params.h) / (2.0 * tau))
    return (spectral_derivative(F, 0) + spectral_derivative(F, 1) * (1j / tau)) / (2.0 * scale)


def unpeeled_dbar(F: PhaseFn, tau: float, params: Params) -> PhaseFn:
    """unpeel o dbar_z o peel, i.e. dbar_z + z/2, applied to a localized F."""
    x, y = phase_mesh(F.spec)
    scale = math.sqrt(abs(params.h) / (2.0 * tau))
    z = scale * (x + 1j * tau * y)
    if params.hbar < 0:
        z = np.conj(z)
    return dbar_z(F, tau, params) + F.like(z * F.values / 2.0)


def cauchy_riemann_residual(pre: PhaseFn, tau: float, params: Params) -> float:
    """Relative residual of the peeled function under dbar_z, evaluated unpeeled."""
    return unpeeled_dbar(pre, tau, params).norm() / pre.norm()


def symplectic_fourier_values(vals: np.ndarray, spec: GridSpec, hbar: float) -> np.ndarray:
    ax = spec.axis
    amat = np.exp(1j * math.pi * hbar * np.outer(ax, ax))
    return (abs(hbar) / 2.0) * spec.cell * (np.conj(amat) @ vals.T @ amat)


def symplectic_fourier(F: PhaseFn, params: Params) -> PhaseFn:
    """(|hbar|/2) int F(p') exp(pi i hbar omega(p', p)) dp'."""
    if F.spec.dim != 2:
        raise GridError("symplectic_fourier on sampled functions is implemented for n = 1")
    return F.like(symplectic_fourier_values(F.values, F.spec, params.hbar))


def is_self_dual(spec: GridSpec, hbar: float) -> bool:
    return math.isclose(abs(hbar) * spec.spacing**2 * spec.points, 2.0, rel_tol=1e-12)
