"""Two-sided relative convolutions D(k) = int k(c1, c2) Lambda(c1) R(c2) dc1 dc2.

Kernels are functions on R^4 with array axes ordered (x1, y1, x2, y2): the
first pair drives the left action, the second pair the right action.
Doubled Weyl symbols use the axis order (x1, x2, y1, y2).

Structured kernels collapse to one-sided operators and never sample a
delta.  Dense kernels are oracles on small grids (N <= 32).  On a periodic
grid the map k -> D(k) only sees kernels whose first pair lies in the
half box |c1| < L/2, which is where the inverse map places its output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .calculus import scaled_symplectic_fourier
from .core import GroupElement, Params
from .fsb import mixed_gaussian_closed, right_integrated_values
from .grid import GridError, GridFn, GridSpec, PhaseFn, interpolate, read_binary, write_binary
from .reps import RepTag, act, ladder, left_values, phase_mesh
from .transforms import symplectic_fourier_values, twisted_convolution_values

DENSE_CAP = 32


class CapError(ValueError):
    """Raised when a dense computation would exceed the size cap."""


def _check_cap(spec: GridSpec):
    if spec.points > DENSE_CAP:
        raise CapError(f"dense two-sided kernels are capped at N = {DENSE_CAP}, got {spec.points}")


def delta_spike(spec: GridSpec) -> PhaseFn:
    """Single-cell spike of unit mass at the origin."""
    vals = np.zeros(spec.shape, dtype=complex)
    c = spec.points // 2
    vals[c, c] = 1.0 / spec.cell
    return PhaseFn(spec, vals)


# --- kernel forms --------------------------------------------------------------


@dataclass(frozen=True)
class Dense:
    values: np.ndarray
    spec: GridSpec

    def __post_init__(self):
        if self.values.shape != (self.spec.points,) * 4:
            raise GridError("dense kernel must have shape (N, N, N, N)")
        if not np.all(np.isfinite(self.values)):
            raise GridError("dense kernel has non-finite samples")


@dataclass(frozen=True)
class LeftOnly:
    """k(c1) delta(c2)."""

    k: PhaseFn

    @property
    def spec(self):
        return self.k.spec


@dataclass(frozen=True)
class RightOnly:
    """delta(c1) k(c2)."""

    k: PhaseFn

    @property
    def spec(self):
        return self.k.spec


@dataclass(frozen=True)
class DiagonalDelta:
    """w(2 c1) delta(c1 - c2), which is a multiplication operator."""

    w: PhaseFn

    @property
    def spec(self):
        return self.w.spec

    @classmethod
    def from_multiplier(cls, psi: PhaseFn, params: Params) -> "DiagonalDelta":
        """Kernel of multiplication by psi: w is 2|hbar| times the symplectic Fourier transform of psi."""
        w = symplectic_fourier_values(psi.values, psi.spec, params.hbar) * (2.0 * abs(params.hbar))
        return cls(psi.like(w))


@dataclass(frozen=True)
class ModulatedProduct:
    """w(c1) exp(s pi i hbar omega(c1, c2)) v(c2 - c1) with s = phase_sign.

    With s = -1 the operator is M o R(v), with s = +1 it is R(v) o M, where
    M multiplies by m(p) = int w(c) exp(2 pi i hbar omega(c, p)) dc.
    """

    w: PhaseFn
    v: PhaseFn
    phase_sign: int = -1

    def __post_init__(self):
        self.w._check(self.v)
        if self.phase_sign not in (-1, 1):
            raise ValueError("phase_sign must be +1 or -1")

    @property
    def spec(self):
        return self.w.spec


@dataclass(frozen=True)
class Separable:
    """w1(c1) w2(c2), the operator Lambda(w1) R(w2)."""

    w1: PhaseFn
    w2: PhaseFn

    def __post_init__(self):
        self.w1._check(self.w2)

    @property
    def spec(self):
        return self.w1.spec


TwoSidedKernel = Union[Dense, LeftOnly, RightOnly, DiagonalDelta, ModulatedProduct, Separable]


def _as_separable(k):
    if isinstance(k, LeftOnly):
        return Separable(k.k, delta_spike(k.spec))
    if isinstance(k, RightOnly):
        return Separable(delta_spike(k.spec), k.k)
    return k


def _wrapped_diff_index(n: int) -> np.ndarray:
    """idx[a, b] = grid index of x_b - x_a on the torus."""
    i = np.arange(n)
    return (i[None, :] - i[:, None] + n // 2) % n


def _double_index(n: int) -> np.ndarray:
    """Grid index of 2 x_i on the torus."""
    return (2 * np.arange(n) - n // 2) % n


def _half_box(n: int) -> np.ndarray:
    i = np.arange(n)
    return (i >= n // 4) & (i < 3 * n // 4)


def multiplier_values(w: np.ndarray, spec: GridSpec, hbar: float, doubled: bool = False) -> np.ndarray:
    """m(p) = cell sum_c w(c) exp(2 pi i hbar omega(c, p)).

    When doubled, w(2c) replaces w(c) and c runs over the half box, where
    2c does not wrap.
    """
    if doubled:
        idx = _double_index(spec.points)
        inside = _half_box(spec.points)
        w = w[np.ix_(idx, idx)] * np.outer(inside, inside)
    ax = spec.axis
    e2 = np.exp(2j * math.pi * hbar * np.outer(ax, ax))
    # sum_{cx, cy} conj(e2)[px, cy] w[cx, cy] e2[cx, py]
    return spec.cell * (np.conj(e2) @ w.T @ e2)


def densify(k: TwoSidedKernel, params: Params) -> Dense:
    """Dense samples of a kernel; a delta factor becomes a unit-mass spike."""
    spec = k.spec
    _check_cap(spec)
    n = spec.points
    c = n // 2
    if isinstance(k, Dense):
        return k
    vals = np.zeros((n,) * 4, dtype=complex)
    if isinstance(k, LeftOnly):
        vals[:, :, c, c] = k.k.values / spec.cell
    elif isinstance(k, RightOnly):
        vals[c, c, :, :] = k.k.values / spec.cell
    elif isinstance(k, DiagonalDelta):
        idx = _double_index(n)
        inside = _half_box(n)
        w2 = k.w.values[np.ix_(idx, idx)] * np.outer(inside, inside)
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        vals[i, j, i, j] = w2 / spec.cell
    elif isinstance(k, Separable):
        vals = np.einsum("ab,cd->abcd", k.w1.values, k.w2.values)
    elif isinstance(k, ModulatedProduct):
        x, y = phase_mesh(spec)
        d = _wrapped_diff_index(n)
        vdiff = k.v.values[d[:, None, :, None], d[None, :, None, :]]
        omega = x[:, :, None, None] * y[None, None, :, :] - x[None, None, :, :] * y[:, :, None, None]
        vals = k.w.values[:, :, None, None] * np.exp(k.phase_sign * 1j * math.pi * params.hbar * omega) * vdiff
    else:
        raise TypeError(f"unknown kernel form {type(k).__name__}")
    return Dense(vals, spec)


# --- Schwartz kernels --------------------------------------------------------


@dataclass(frozen=True)
class PhaseOperator:
    """Schwartz kernel on the phase grid: (KF)(p) = sum_p' K[p, p'] F(p') cell."""

    matrix: np.ndarray
    spec: GridSpec

    def apply(self, F: PhaseFn) -> PhaseFn:
        if F.spec != self.spec:
            raise GridError("operator and function live on different grids")
        return F.like((self.matrix @ F.values.ravel()).reshape(F.spec.shape) * self.spec.cell)

    def compose(self, other: "PhaseOperator") -> "PhaseOperator":
        return PhaseOperator(self.matrix @ other.matrix * self.spec.cell, self.spec)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix) * self.spec.cell)


def _offset_tables(spec: GridSpec):
    n = spec.points
    ax = spec.axis
    dv = (np.arange(n)[:, None] + np.arange(n)[None, :] - n // 2) % n  # index of d + v
    d1 = np.arange(n)[:, None, None, None]
    d2 = np.arange(n)[None, :, None, None]
    a = np.arange(n)[None, None, :, None]
    b = np.arange(n)[None, None, None, :]
    offs = (np.arange(n) - n // 2) * spec.spacing
    # omega(d, q) for offset d and grid point q
    omega = offs[d1] * ax[b] - ax[a] * offs[d2]
    return dv, (d1, d2, a, b), omega


def schwartz_from_twosided(k: TwoSidedKernel, params: Params) -> PhaseOperator:
    """Schwartz kernel of D(k).

    For each offset d = p' - p,
    K(p, p + d) = exp(pi i hbar omega(d, p)) cell sum_v h_d(v) exp(2 pi i hbar omega(v, p))
    with h_d(v) = k(v, d + v) exp(-pi i hbar omega(d, v)).
    """
    dense = densify(k, params)
    spec = dense.spec
    n = spec.points
    hbar = params.hbar
    e2 = np.exp(2j * math.pi * hbar * np.outer(spec.axis, spec.axis))
    dv, (d1, d2, a, b), omega = _offset_tables(spec)
    h = dense.values[a, b, dv[d1, a], dv[d2, b]] * np.exp(-1j * math.pi * hbar * omega)
    g = spec.cell * np.einsum("pb,deab,aq->depq", np.conj(e2), h, e2, optimize=True)
    g = g * np.exp(1j * math.pi * hbar * omega)
    mat = np.zeros((n,) * 4, dtype=complex)
    idx = tuple(np.broadcast_to(arr, g.shape) for arr in (a, b, dv[d1, a], dv[d2, b]))
    mat[idx] = g
    return PhaseOperator(mat.reshape(n * n, n * n), spec)


def twosided_from_schwartz(K: PhaseOperator, params: Params) -> Dense:
    """Kernel k with D(k) = K, supported in the half box |c1| < L/2."""
    spec = K.spec
    _check_cap(spec)
    n = spec.points
    hbar = params.hbar
    e2 = np.exp(2j * math.pi * hbar * np.outer(spec.axis, spec.axis))
    dv, (d1, d2, a, b), omega = _offset_tables(spec)
    mat = K.matrix.reshape((n,) * 4)
    g = mat[a, b, dv[d1, a], dv[d2, b]] * np.exp(-1j * math.pi * hbar * omega)
    h = np.einsum("aq,depq,pb->deab", np.conj(e2), g, e2, optimize=True) / (n * n * spec.cell)
    h = h * np.exp(1j * math.pi * hbar * omega)
    lo, hi = n // 4, 3 * n // 4
    inside = np.broadcast_to((a >= lo) & (a < hi) & (b >= lo) & (b < hi), h.shape)
    out = np.zeros((n,) * 4, dtype=complex)
    idx = tuple(np.broadcast_to(arr, h.shape)[inside] for arr in (a, b, dv[d1, a], dv[d2, b]))
    out[idx] = h[inside]
    return Dense(out, spec)


# --- application -------------------------------------------------------------


def apply(k: TwoSidedKernel, F: PhaseFn, params: Params) -> PhaseFn:
    """D(k) F, with fast paths for the structured forms."""
    if F.spec != k.spec:
        raise GridError("kernel and function live on different grids")
    spec = F.spec
    hbar = params.hbar
    if isinstance(k, LeftOnly):
        return F.like(twisted_convolution_values(k.k.values, F.values, spec, hbar))
    if isinstance(k, RightOnly):
        return F.like(right_integrated_values(k.k.values, F.values, spec, hbar))
    if isinstance(k, Separable):
        inner = right_integrated_values(k.w2.values, F.values, spec, hbar)
        return F.like(twisted_convolution_values(k.w1.values, inner, spec, hbar))
    if isinstance(k, DiagonalDelta):
        return F.like(multiplier_values(k.w.values, spec, hbar, doubled=True) * F.values)
    if isinstance(k, ModulatedProduct):
        m = multiplier_values(k.w.values, spec, hbar)
        if k.phase_sign < 0:
            return F.like(m * right_integrated_values(k.v.values, F.values, spec, hbar))
        return F.like(right_integrated_values(k.v.values, m * F.values, spec, hbar))
    return schwartz_from_twosided(k, params).apply(F)


# --- composition -------------------------------------------------------------


def twisted_convolution_4d(f1: np.ndarray, f2: np.ndarray, xaxes, yaxes, cell: float, hbar: float) -> np.ndarray:
    """Twisted convolution on R^4 with array axes (x1, x2, y1, y2).

    sum_P' f1(P') f2(P - P') exp(pi i hbar (x'.y - x.y')) cell on the torus,
    one pass per (x1', x2') with a batched FFT over the y axes.
    """
    n = f1.shape[0]
    half = n // 2
    xa, xb = xaxes
    ya, yb = yaxes
    g_hat = np.fft.fft2(np.roll(f2, (-half, -half), axis=(2, 3)), axes=(2, 3))
    left = np.exp(-1j * math.pi * hbar * (xa[:, None, None, None] * ya[None, None, :, None] + xb[None, :, None, None] * yb[None, None, None, :]))
    rows = np.arange(n)
    out = np.zeros(f1.shape, dtype=complex)
    for i in range(n):
        idx1 = (rows - i + half) % n
        for j in range(n):
            if not np.any(f1[i, j]):
                continue
            idx2 = (rows - j + half) % n
            u_hat = np.fft.fft2(f1[i, j][None, None] * left, axes=(2, 3))
            conv = np.fft.ifft2(u_hat * g_hat[idx1][:, idx2], axes=(2, 3))
            out += conv * np.exp(1j * math.pi * hbar * (xa[i] * ya[:, None] + xb[j] * yb[None, :]))[None, None]
    return out * cell


def _b_axes(spec: GridSpec, upsilon: float):
    ax = spec.axis
    return (ax, upsilon * ax), (ax, ax / upsilon)


def to_doubled_coordinates(k: Dense) -> np.ndarray:
    """k o B with axes (x1, X2, y1, Y2), where c2 = (upsilon Y2, X2 / upsilon)."""
    return np.transpose(k.values, (0, 3, 1, 2))


def from_doubled_coordinates(arr: np.ndarray, spec: GridSpec) -> Dense:
    return Dense(np.transpose(arr, (0, 2, 3, 1)), spec)


def compose(k1: TwoSidedKernel, k2: TwoSidedKernel, params: Params) -> Dense:
    """Kernel of D(k1) D(k2), a twisted convolution of k1 o B and k2 o B on R^4."""
    a = densify(k1, params)
    b = densify(k2, params)
    if a.spec != b.spec:
        raise GridError("kernels live on different grids")
    spec = a.spec
    xaxes, yaxes = _b_axes(spec, params.upsilon)
    out = twisted_convolution_4d(to_doubled_coordinates(a), to_doubled_coordinates(b), xaxes, yaxes, spec.cell**2, params.hbar)
    return from_doubled_coordinates(out, spec)


def xi_integrated(kb: np.ndarray, F: PhaseFn, params: Params) -> PhaseFn:
    """Riemann sum of K(g) XiTilde(g) F over the doubled grid, K on axes (x1, X2, y1, Y2)."""
    spec = F.spec
    n = spec.points
    u = params.upsilon
    ax = spec.axis
    xb, yb = u * ax, ax / u
    moved = np.empty((n, n) + spec.shape, dtype=complex)
    for l in range(n):
        for m in range(n):
            g = GroupElement(0.0, [0.0, xb[l]], [0.0, yb[m]])
            moved[l, m] = act(RepTag.XiTilde, g, F, params).values
    inner = np.einsum("iljm,lmpq->ijpq", kb, moved, optimize=True)
    out = np.zeros(spec.shape, dtype=complex)
    for i in range(n):
        for j in range(n):
            out += left_values(inner[i, j], spec, 0.0, ax[i], ax[j], params.hbar)
    return F.like(out * spec.cell**2)


@dataclass(frozen=True)
class ReductionCheck:
    residual: float
    upsilon: float


def xi_reduction_check(k: TwoSidedKernel, F: PhaseFn, params: Params) -> ReductionCheck:
    """Compare D(k) F with the doubled-group integrated action of k o B."""
    dense = densify(k, params)
    direct = apply(dense, F, params)
    via_xi = xi_integrated(to_doubled_coordinates(dense), F, params)
    norm = F.norm()
    return ReductionCheck(float((direct - via_xi).norm() / norm) if norm else 0.0, params.upsilon)


# --- cross-Toeplitz kernels and doubled symbols -------------------------------


def cross_toeplitz_kernel(psi: PhaseFn, tau: float, sigma: float, params: Params) -> Separable:
    """Kernel of P_sigma o psi o P_tau.

    k(c1, c2) = 2 |hbar|^2 hat(psi)(2 c1) Phi_{tau sigma}(c1) Phi_{sigma tau}(c2).
    The symplectic Fourier transform at 2 c1 is a direct sum, so it does
    not alias.  At doubled arguments the lattice phases have period L, so
    psi is read on the half box |p| < L/2 and extended periodically.
    """
    spec = psi.spec
    h = abs(params.hbar)
    lo, hi = spec.points // 4, 3 * spec.points // 4
    inner = np.zeros(spec.shape, dtype=complex)
    inner[lo:hi, lo:hi] = psi.values[lo:hi, lo:hi]
    fhat2 = scaled_symplectic_fourier(psi.like(inner), params, 2.0).values
    w1 = 2.0 * h * h * fhat2 * mixed_gaussian_closed(tau, sigma, params, spec).values
    w2 = mixed_gaussian_closed(sigma, tau, params, spec)
    return Separable(psi.like(w1), w2)


@dataclass(frozen=True)
class DoubledSymbol:
    """Doubled Weyl symbol a(x1, x2, y1, y2).

    kind 'separable': f1(x1, y1) g(upsilon y2, x2 / upsilon).
    kind 'midpoint': g((x1 + upsilon y2) / 2, (y1 + x2 / upsilon) / 2).
    kind 'dense': samples on the grid with axes (x1, x2, y1, y2).
    """

    kind: str
    spec: GridSpec
    upsilon: float
    f1: np.ndarray | None = None
    g: np.ndarray | None = None
    dense: np.ndarray | None = None

    def evaluate(self, points) -> np.ndarray:
        """Values at points given as a (4, M) array of rows x1, x2, y1, y2."""
        x1, x2, y1, y2 = np.asarray(points, dtype=float)
        u = self.upsilon
        if self.kind == "separable":
            first = interpolate(PhaseFn(self.spec, self.f1), np.vstack([x1, y1]))
            second = interpolate(PhaseFn(self.spec, self.g), np.vstack([u * y2, x2 / u]))
            return first * second
        if self.kind == "midpoint":
            return interpolate(PhaseFn(self.spec, self.g), np.vstack([(x1 + u * y2) / 2, (y1 + x2 / u) / 2]))
        spec4 = GridSpec(4, self.spec.extent, self.spec.points)
        return interpolate(GridFn(spec4, self.dense), np.vstack([x1, x2, y1, y2]))

    def pair_factors(self):
        """(f1 on (x1, y1), pair-2 factor on the (x2, y2) grid) of a separable symbol."""
        if self.kind != "separable":
            raise ValueError("only separable symbols factor")
        x, y = phase_mesh(self.spec)
        u = self.upsilon
        if u == 1:
            return self.f1, self.g.T.copy()
        coords = np.vstack([(u * y).ravel(), (x / u).ravel()])
        return self.f1, interpolate(PhaseFn(self.spec, self.g), coords).reshape(self.spec.shape)


def _pair_transform(values, amat, first_axis):
    """out[..a, b..] = sum_{a', b'} conj(A)[a, b'] F[..a', b'..] A[a', b] over two adjacent axes."""
    moved = np.moveaxis(values, (first_axis, first_axis + 1), (0, 1))
    out = np.einsum("aq,pq...,pb->ab...", np.conj(amat), moved, amat, optimize=True)
    return np.moveaxis(out, (0, 1), (first_axis, first_axis + 1))


def fourier_4d(values: np.ndarray, spec: GridSpec, hbar: float) -> np.ndarray:
    """Symplectic Fourier transform on R^4 for kernel axes (x1, y1, x2, y2)."""
    amat = np.exp(1j * math.pi * hbar * np.outer(spec.axis, spec.axis))
    return (abs(hbar) / 2.0 * spec.cell) ** 2 * _pair_transform(_pair_transform(values, amat, 0), amat, 2)


def doubled_pdo_symbol(k: TwoSidedKernel, params: Params) -> DoubledSymbol:
    """a(x1, x2, y1, y2) = hat(k)(x1, y1, upsilon y2, x2 / upsilon), hat the symplectic Fourier transform on R^4."""
    spec = k.spec
    hbar = params.hbar
    u = params.upsilon
    k = _as_separable(k)
    if isinstance(k, Separable):
        f1 = symplectic_fourier_values(k.w1.values, spec, hbar)
        g = symplectic_fourier_values(k.w2.values, spec, hbar)
        return DoubledSymbol("separable", spec, u, f1=f1, g=g)
    if isinstance(k, DiagonalDelta):
        # hat(k)(c1, c2) = (|hbar| / 8) hat(w)((c1 + c2) / 2)
        g = symplectic_fourier_values(k.w.values, spec, hbar) * (abs(hbar) / 8.0)
        return DoubledSymbol("midpoint", spec, u, g=g)
    khat = fourier_4d(densify(k, params).values, spec, hbar)
    n = spec.points
    if u == 1:
        arr = np.transpose(khat, (0, 3, 1, 2))  # a[x1, x2, y1, y2] = khat[x1, y1, y2, x2]
    else:
        x, y = phase_mesh(spec)
        coords = np.vstack([(u * y).ravel(), (x / u).ravel()])
        arr = np.empty((n,) * 4, dtype=complex)
        for i in range(n):
            for j in range(n):
                arr[i, :, j, :] = interpolate(PhaseFn(spec, khat[i, j]), coords).reshape(spec.shape)
    return DoubledSymbol("dense", spec, u, dense=arr)


def _sublattice(spec: GridSpec, step: int = 4) -> np.ndarray:
    """Indices whose coordinates are multiples of step spacings."""
    c = spec.points // 2
    return np.array([i for i in range(spec.points) if (i - c) % step == 0])


def _mixed_gaussian_at(dx, dy, tau, sigma, hbar):
    total = tau + sigma
    amp = (4 * tau * sigma / total**2) ** 0.25
    real = -math.pi * abs(hbar) * (dx**2 + tau * sigma * dy**2) / total
    imag = math.pi * hbar * dx * dy * (sigma - tau) / total
    return amp * np.exp(real + 1j * imag)


def pair_one_integral(psi: PhaseFn, tau: float, sigma: float, params: Params) -> np.ndarray:
    """|hbar|^3 int psi(q) Phi_{tau sigma}(c1 - 2 q) dq at every grid c1, by direct quadrature."""
    spec = psi.spec
    ax = spec.axis
    qx, qy = phase_mesh(spec)
    qx, qy, pv = qx.ravel(), qy.ravel(), psi.values.ravel()
    out = np.empty(spec.shape, dtype=complex)
    for i, cx in enumerate(ax):
        dx = (cx - 2 * qx)[None, :]
        dy = ax[:, None] - 2 * qy[None, :]
        out[i] = _mixed_gaussian_at(dx, dy, tau, sigma, params.hbar) @ pv
    return abs(params.hbar) ** 3 * spec.cell * out


def pair_one_shift_form(psi: PhaseFn, tau: float, sigma: float, params: Params):
    """|hbar|^3 <psi, Lambda(c1/4) R(-c1/4) Phi_2> on the sublattice c1 in (4 spacing) Z^2.

    Phi_2(q) = conj(Phi_{tau sigma}(2 q)).  Returns (indices, values) with
    values[a, b] at grid point (indices[a], indices[b]).
    """
    spec = psi.spec
    ax = spec.axis
    x, y = phase_mesh(spec)
    phi2 = PhaseFn(spec, np.conj(_mixed_gaussian_at(2 * x, 2 * y, tau, sigma, params.hbar)))
    idx = _sublattice(spec)
    out = np.empty((len(idx), len(idx)), dtype=complex)
    for a, i in enumerate(idx):
        for b, j in enumerate(idx):
            cx, cy = ax[i], ax[j]
            moved = act(RepTag.RightPulled, GroupElement(0.0, -cx / 4, -cy / 4), phi2, params)
            moved = act(RepTag.LeftPulled, GroupElement(0.0, cx / 4, cy / 4), moved, params)
            out[a, b] = np.vdot(moved.values, psi.values) * spec.cell
    return idx, abs(params.hbar) ** 3 * out


def cross_toeplitz_pdo_symbol(psi: PhaseFn, tau: float, sigma: float, params: Params) -> DoubledSymbol:
    """Doubled symbol of the cross-Toeplitz kernel from the integral of psi against the mixed Gaussian."""
    spec = psi.spec
    f1 = pair_one_integral(psi, tau, sigma, params)
    g = mixed_gaussian_closed(sigma, tau, params, spec).values
    return DoubledSymbol("separable", spec, params.upsilon, f1=f1, g=g)


@dataclass(frozen=True)
class SymbolPaths:
    definitional: np.ndarray
    integral: np.ndarray
    shift_form: np.ndarray
    indices: np.ndarray

    @property
    def max_residual(self) -> float:
        scale = np.abs(self.definitional).max()
        worst = max(np.abs(self.integral - self.definitional).max(), np.abs(self.shift_form - self.definitional).max())
        return float(worst / scale)


def a_sharp_paths(psi: PhaseFn, tau: float, sigma: float, params: Params) -> SymbolPaths:
    """Pair-1 factor of the doubled cross-Toeplitz symbol along three routes, on the sublattice."""
    idx, shift = pair_one_shift_form(psi, tau, sigma, params)
    sel = np.ix_(idx, idx)
    definitional = doubled_pdo_symbol(cross_toeplitz_kernel(psi, tau, sigma, params), params).f1[sel]
    integral = pair_one_integral(psi, tau, sigma, params)[sel]
    return SymbolPaths(definitional, integral, shift, idx)


@dataclass(frozen=True)
class Characterization:
    is_type: bool
    residual_creation: float
    residual_annihilation: float
    degenerate: bool = False


def _pair_two_ladders(k, tau: float, sigma: float, params: Params):
    k = _as_separable(k)
    if isinstance(k, Separable):
        scale = k.w1.norm()
        w2 = k.w2
        r1 = ladder(RepTag.RightPulled, "+", sigma, w2, params).norm()
        r2 = ladder(RepTag.LeftPulled, "-", tau, w2, params).norm()
        return w2.norm() * scale, r1 * scale, r2 * scale
    dense = densify(k, params)
    spec = dense.spec
    n = spec.points
    r1 = r2 = 0.0
    for i in range(n):
        for j in range(n):
            sl = PhaseFn(spec, dense.values[i, j])
            r1 += ladder(RepTag.RightPulled, "+", sigma, sl, params).norm() ** 2
            r2 += ladder(RepTag.LeftPulled, "-", tau, sl, params).norm() ** 2
    base = float(np.linalg.norm(dense.values)) * spec.cell
    return base, math.sqrt(r1 * spec.cell), math.sqrt(r2 * spec.cell)


def is_cross_toeplitz_type(k: TwoSidedKernel, tau: float, sigma: float, params: Params, tol: float = 1e-6) -> Characterization:
    """Pair 2 must be annihilated by the right creation ladder at sigma and the left annihilation ladder at tau."""
    base, r1, r2 = _pair_two_ladders(k, tau, sigma, params)
    if base == 0:
        return Characterization(True, 0.0, 0.0, degenerate=True)
    r1, r2 = r1 / base, r2 / base
    return Characterization(bool(r1 <= tol and r2 <= tol), float(r1), float(r2))


def symbol_from_kernel(k: TwoSidedKernel, tau: float, sigma: float, params: Params, threshold: float = 1e-3) -> PhaseFn:
    """Recover psi from a cross-Toeplitz kernel.

    The kernel is divided by 2|hbar|^2 Phi_{tau sigma}(c1) Phi_{sigma tau}(c2)
    where that product exceeds threshold times its maximum, averaged over
    c2 with weights |den|^2, and the samples of hat(psi)(2 c1) are
    transformed back.  The result is supported in the half box |p| < L/2.
    """
    spec = k.spec
    n = spec.points
    h = abs(params.hbar)
    d1 = mixed_gaussian_closed(tau, sigma, params, spec).values
    d2 = mixed_gaussian_closed(sigma, tau, params, spec).values
    a1 = np.abs(d1)
    a2 = np.abs(d2).ravel()
    top = a1.max() * a2.max()
    k = _as_separable(k)
    if isinstance(k, Separable):
        r1 = k.w1.values / d1
        r2 = k.w2.values.ravel() / d2.ravel()
        order = np.argsort(-a2)
        sorted_a2 = a2[order]
        wts = sorted_a2**2
        cum_w = np.cumsum(wts)
        cum_r = np.cumsum(wts * r2[order])
        ok = a1 * sorted_a2[0] > threshold * top
        # admissible c2 are the leading entries with |d2| > threshold top / |d1|
        cut = threshold * top / np.where(ok, a1, 1.0)
        counts = np.searchsorted(-sorted_a2, -cut, side="left")
        last = np.clip(counts - 1, 0, None)
        avg = np.where(ok, cum_r[last] / cum_w[last], 0)
        ratio = np.where(ok, r1 * avg, 0)
    else:
        dense = densify(k, params)
        den = d1[:, :, None, None] * d2[None, None, :, :]
        mask = np.abs(den) > threshold * top
        wts = np.where(mask, np.abs(den) ** 2, 0.0)
        num = np.sum(wts * dense.values / np.where(mask, den, 1), axis=(2, 3))
        wsum = wts.sum(axis=(2, 3))
        ratio = np.where(wsum > 0, num / np.where(wsum > 0, wsum, 1), 0)
    fhat2 = ratio / (2.0 * h * h)
    # psi(p) = (|hbar| / 2) 4 cell sum_c1 hat(psi)(2 c1) exp(2 pi i hbar omega(c1, p))
    psi = (h / 2.0) * 4.0 * multiplier_values(fhat2, spec, params.hbar)
    lo, hi = n // 4, 3 * n // 4
    out = np.zeros(spec.shape, dtype=complex)
    out[lo:hi, lo:hi] = psi[lo:hi, lo:hi]
    return PhaseFn(spec, out)


# --- serialization -------------------------------------------------------------

_FIELDS = {
    "LeftOnly": ("k",),
    "RightOnly": ("k",),
    "DiagonalDelta": ("w",),
    "ModulatedProduct": ("w", "v"),
    "Separable": ("w1", "w2"),
}
_FORMS = {
    "Dense": Dense,
    "LeftOnly": LeftOnly,
    "RightOnly": RightOnly,
    "DiagonalDelta": DiagonalDelta,
    "ModulatedProduct": ModulatedProduct,
    "Separable": Separable,
}


def save_kernel(k: TwoSidedKernel, directory) -> Path:
    """Write a JSON record plus binary sample files; returns the JSON path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    form = type(k).__name__
    spec = k.spec
    record = {"form": form, "grid": {"dim": spec.dim, "extent": spec.extent, "points": spec.points}, "files": {}}
    if isinstance(k, Dense):
        write_binary(GridFn(GridSpec(4, spec.extent, spec.points), k.values), directory / "values.bin")
        record["files"]["values"] = "values.bin"
    else:
        for field in _FIELDS[form]:
            name = f"{field}.bin"
            write_binary(getattr(k, field), directory / name)
            record["files"][field] = name
        if isinstance(k, ModulatedProduct):
            record["phase_sign"] = k.phase_sign
    path = directory / "kernel.json"
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path


def load_kernel(path) -> TwoSidedKernel:
    path = Path(path)
    record = json.loads(path.read_text())
    form = record.get("form")
    if form not in _FORMS:
        raise ValueError(f"unknown kernel form {form!r}")
    grid = record["grid"]
    spec = GridSpec(2, float(grid["extent"]), int(grid["points"]))
    if form == "Dense":
        return Dense(read_binary(path.parent / record["files"]["values"]).values, spec)
    parts = [PhaseFn(spec, read_binary(path.parent / record["files"][f]).values) for f in _FIELDS[form]]
    if form == "ModulatedProduct":
        return ModulatedProduct(*parts, phase_sign=int(record.get("phase_sign", -1)))
    return _FORMS[form](*parts)
