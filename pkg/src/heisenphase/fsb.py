"""Gaussian vacua, Hermite vectors, FSB Gaussians and the projections,
intertwiners and poly-Fock lattice built from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite as npherm

from .core import GroupElement, Params, PhasePoint
from .grid import ConfigFn, GridError, GridSpec, PhaseFn, inner_product
from .reps import AlgebraBasis, RepTag, act, derived, ladder, phase_mesh
from .transforms import (
    calibrate,
    contravariant,
    covariant,
    reflect_values,
    twisted_convolution_values,
)


class NotInSpaceError(ValueError):
    """Raised when an input is not (approximately) in the required FSB space."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


MAX_LATTICE_INDEX = 8
MAX_HERMITE_INDEX = 8


@dataclass(frozen=True)
class VacuumSpec:
    tau: float
    hbar: float

    @property
    def normalization(self) -> float:
        return (2.0 * abs(self.hbar) / self.tau) ** 0.25


@dataclass(frozen=True)
class LatticeIndex:
    j: int
    k: int

    def __post_init__(self):
        if min(self.j, self.k) < 0:
            raise ValueError("lattice indices are nonnegative")
        if max(self.j, self.k) > MAX_LATTICE_INDEX:
            raise ValueError(f"lattice indices are capped at {MAX_LATTICE_INDEX}")


def _check_resolution(tau: float, hbar: float, spec: GridSpec):
    std = math.sqrt(tau / (2.0 * math.pi * abs(hbar)))
    if std < 2.0 * spec.spacing:
        raise GridError(f"grid spacing {spec.spacing:.4g} does not resolve a Gaussian of width {std:.4g}")
    if math.exp(-math.pi * abs(hbar) * spec.extent**2 / tau) > 1e-12:
        raise GridError("grid extent truncates the Gaussian")


def gaussian_vacuum(tau: float, params: Params, grid: GridSpec) -> ConfigFn:
    """Unit-norm (2|hbar|/tau)^{1/4} exp(-pi |hbar| t^2 / tau)."""
    _check_resolution(tau, params.hbar, grid)
    t = grid.axis
    vac = VacuumSpec(tau, params.hbar)
    return ConfigFn(grid, vac.normalization * np.exp(-math.pi * abs(params.hbar) * t**2 / tau))


def hermite_vector(m: int, tau: float, params: Params, grid: GridSpec) -> ConfigFn:
    """Normalized m-th Hermite function, the m-th creation-ladder image of the vacuum."""
    if m < 0 or m > MAX_HERMITE_INDEX:
        raise ValueError(f"Hermite index must lie in [0, {MAX_HERMITE_INDEX}]")
    _check_resolution(tau, params.hbar, grid)
    u = math.sqrt(2.0 * math.pi * abs(params.hbar) / tau) * grid.axis
    coeffs = np.zeros(m + 1)
    coeffs[m] = 1.0
    norm = VacuumSpec(tau, params.hbar).normalization / math.sqrt(2.0**m * math.factorial(m))
    return ConfigFn(grid, norm * npherm.hermval(u, coeffs) * np.exp(-(u**2) / 2))


def fsb_gaussian(tau: float, params: Params, phase: GridSpec) -> PhaseFn:
    """exp(-pi |hbar| / (2 tau) (x^2 + tau^2 y^2))."""
    x, y = phase_mesh(phase)
    return PhaseFn(phase, np.exp(-math.pi * abs(params.hbar) / (2 * tau) * (x**2 + tau**2 * y**2)))


def mixed_gaussian_closed(tau: float, sigma: float, params: Params, phase: GridSpec) -> PhaseFn:
    """Closed form of <phi_sigma, rho(0, x, y) phi_tau>."""
    x, y = phase_mesh(phase)
    a = math.pi * abs(params.hbar)
    total = tau + sigma
    amp = (4 * tau * sigma / total**2) ** 0.25
    real = -a * (x**2 + tau * sigma * y**2) / total
    imag = math.pi * params.hbar * x * y * (sigma - tau) / total
    return PhaseFn(phase, amp * np.exp(real + 1j * imag))


def mixed_gaussian(
    tau: float, sigma: float, params: Params, phase: GridSpec, config: GridSpec | None = None, method: str = "quadrature"
) -> PhaseFn:
    """Matrix coefficient <phi_sigma, rho(0, x, y) phi_tau>.

    ``method='quadrature'`` evaluates the defining integral on the paired
    configuration grid; ``method='closed'`` uses the exponential closed form.
    """
    if method == "closed":
        return mixed_gaussian_closed(tau, sigma, params, phase)
    if method != "quadrature":
        raise ValueError("method must be 'quadrature' or 'closed'")
    config = config or GridSpec(1, phase.extent, 2 * phase.points)
    return covariant(gaussian_vacuum(sigma, params, config), gaussian_vacuum(tau, params, config), params, phase)


def reproducing_kernel(point: PhasePoint, tau: float, params: Params, phase: GridSpec) -> PhaseFn:
    """conj(Lambda(0, x, y) Phi_tau)."""
    gauss = fsb_gaussian(tau, params, phase)
    moved = act(RepTag.LeftPulled, GroupElement(0.0, point.x, point.y), gauss, params)
    return moved.conj()


def reproduce(F: PhaseFn, point: PhasePoint, tau: float, params: Params) -> complex:
    """|hbar| times the bilinear pairing of F with the reproducing kernel at point."""
    kern = reproducing_kernel(point, tau, params, F.spec)
    return complex(abs(params.hbar) * F.spec.cell * np.sum(F.values * kern.values))


def _wrapped_offsets(spec: GridSpec) -> np.ndarray:
    n = spec.points
    idx = np.arange(n)
    diff = (idx[None, :] - idx[:, None] + n // 2) % n - n // 2
    return diff * spec.spacing


def _project_integral(F: PhaseFn, tau: float, hbar: float) -> np.ndarray:
    spec = F.spec
    ax = spec.axis
    a = math.pi * abs(hbar)
    off = _wrapped_offsets(spec)  # off[a, a'] = x_a' - x_a wrapped
    gmat = np.exp(-a / (2 * tau) * off**2)
    hmat = np.exp(-a * tau / 2 * off**2).T  # hmat[b', b] = h(y_b' - y_b)
    ph_in = np.exp(-1j * math.pi * hbar * np.outer(ax, ax))  # [a, b']
    ph_out = np.exp(1j * math.pi * hbar * np.outer(ax, ax))  # [a', b]
    out = np.empty(spec.shape, dtype=complex)
    for row in range(spec.points):
        inner = (F.values * ph_in[row][None, :]) @ hmat
        out[row] = np.sum(gmat[row][:, None] * ph_out * inner, axis=0)
    return abs(hbar) * spec.cell * out


def fsb_project(F: PhaseFn, tau: float, params: Params, method: str = "twisted") -> PhaseFn:
    """Orthogonal projection onto F_tau.

    ``method='integral'`` sums F(p') exp(-pi i hbar omega(p, p')) Phi_tau(p' - p)
    directly; ``method='twisted'`` forms |hbar| F * Phi_tau by twisted convolution.
    """
    if method == "integral":
        return F.like(_project_integral(F, tau, params.hbar))
    if method != "twisted":
        raise ValueError("method must be 'integral' or 'twisted'")
    gauss = fsb_gaussian(tau, params, F.spec)
    return F.like(abs(params.hbar) * twisted_convolution_values(F.values, gauss.values, F.spec, params.hbar))


def projection_residual(F: PhaseFn, tau: float, params: Params) -> float:
    norm = F.norm()
    if norm == 0:
        return 0.0
    return (fsb_project(F, tau, params) - F).norm() / norm


def require_member(F: PhaseFn, tau: float, params: Params, tol: float = 1e-4) -> float:
    res = projection_residual(F, tau, params)
    if res > tol:
        raise NotInSpaceError(f"input is not in F_tau: projection residual {res:.3e} exceeds {tol:.1e}", res)
    return res


def right_integrated_values(k: np.ndarray, F: np.ndarray, spec: GridSpec, hbar: float) -> np.ndarray:
    """Riemann sum of k(v) R(0, v) F, which is F twisted with the reflected k."""
    return twisted_convolution_values(F, reflect_values(k), spec, hbar)


def intertwine(F: PhaseFn, tau: float, sigma: float, params: Params, check: bool = True) -> PhaseFn:
    """Unitary map F_tau -> F_sigma given by the mixed Gaussian kernel."""
    if check:
        require_member(F, tau, params)
    kern = mixed_gaussian_closed(sigma, tau, params, F.spec)
    return F.like(abs(params.hbar) * right_integrated_values(kern.values, F.values, F.spec, params.hbar))


def intertwine_via_transforms(F: PhaseFn, tau: float, sigma: float, params: Params, config: GridSpec | None = None) -> PhaseFn:
    """W_sigma o M_tau, the same map composed from the transforms."""
    config = config or GridSpec(1, F.spec.extent, 2 * F.spec.points)
    f = contravariant(F, gaussian_vacuum(tau, params, config), params)
    return covariant(f, gaussian_vacuum(sigma, params, config), params, F.spec)


def lattice_vector(idx: LatticeIndex, tau: float, params: Params, phase: GridSpec) -> PhaseFn:
    """Normalized (a+_Lambda)^j (a-_R)^k Phi_tau."""
    if not isinstance(idx, LatticeIndex):
        idx = LatticeIndex(*idx)
    vec = fsb_gaussian(tau, params, phase)
    for _ in range(idx.k):
        vec = ladder(RepTag.RightPulled, "-", tau, vec, params)
    for _ in range(idx.j):
        vec = ladder(RepTag.LeftPulled, "+", tau, vec, params)
    return vec / vec.norm()


def polyfock_project(F: PhaseFn, m: int, tau: float, params: Params, jmax: int = 8) -> PhaseFn:
    """Orthogonal projection onto span{Phi_{j m} : j <= jmax}."""
    basis = np.stack([lattice_vector(LatticeIndex(j, m), tau, params, F.spec).values.ravel() for j in range(jmax + 1)], axis=1)
    gram = basis.conj().T @ basis
    coeffs = np.linalg.solve(gram, basis.conj().T @ F.values.ravel())
    return F.like((basis @ coeffs).reshape(F.spec.shape))


# --- uncertainty -------------------------------------------------------------




def dispersion_product(f: ConfigFn, params: Params) -> float:
    """Delta(Q) Delta(P) for Q = hbar t and P = -i d/dt, built from the derived representation."""
    q_f = derived(RepTag.Schrodinger, AlgebraBasis("Y"), f, params) * (1j / (2 * math.pi))
    p_f = derived(RepTag.Schrodinger, AlgebraBasis("X"), f, params) * 1j
    norm2 = inner_product(f, f).real
    out = []
    for op_f in (q_f, p_f):
        mean = inner_product(op_f, f).real / norm2
        centred = op_f - f * mean
        out.append(math.sqrt(inner_product(centred, centred).real / norm2))
    return out[0] * out[1]


def kennard_bound(params: Params) -> float:
    """Lower bound |hbar|/2 implied by [Q, P] = i hbar."""
    return abs(params.hbar) / 2.0


def projection_constant(params: Params) -> float:
    return abs(params.hbar)


def vacuum_overlap(tau: float, sigma: float) -> float:
    """<phi_tau, phi_sigma> for unit-norm vacua."""
    return (4 * tau * sigma / (tau + sigma) ** 2) ** 0.25


def reconstruction_constant(params: Params, config: GridSpec) -> float:
    return calibrate(params, config).reconstruction
