"""Sampled functions on uniform periodic grids.

A grid with ``points`` samples per axis spans [-L, L) with spacing
2L/N.  Every axis is treated as periodic, so shifts, derivatives and
Fourier sums all live on a torus.  Functions of interest are localized
well inside the box, which makes the wrap-around invisible at the
tolerances used here.

Phase-space grids built by :func:`self_dual_grids` use a spacing with
|hbar| * spacing**2 * N = 2.  On such a grid every phase factor
exp(pi i hbar omega) between lattice points is periodic, so lattice
shifts give exact representations of a finite Heisenberg group.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage


class GridError(ValueError):
    """Raised on mismatched or malformed grids."""


class GridFormatError(GridError):
    """Raised when a serialized grid function cannot be parsed."""


@dataclass(frozen=True)
class GridSpec:
    dim: int
    extent: float
    points: int

    def __post_init__(self):
        if self.dim < 1:
            raise GridError("dim must be positive")
        if self.extent <= 0:
            raise GridError("extent must be positive")
        if self.points < 8 or self.points & (self.points - 1):
            raise GridError("points must be a power of two and at least 8")

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / self.points

    @property
    def axis(self) -> np.ndarray:
        return -self.extent + self.spacing * np.arange(self.points)

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dim

    @property
    def cell(self) -> float:
        return self.spacing**self.dim

    def mesh(self) -> list:
        return np.meshgrid(*([self.axis] * self.dim), indexing="ij")

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points, self.spacing)

    def center_index(self) -> int:
        return self.points // 2


def self_dual_grids(hbar: float = 1.0, points: int = 64, n: int = 1):
    """Return (config_spec, phase_spec) matched to the Planck parameter.

    The phase grid satisfies |hbar| * spacing**2 * points = 2 and the
    configuration grid has twice the points over the same extent, so a
    phase-space shift is exactly two configuration samples.
    """
    spacing = math.sqrt(2.0 / (abs(hbar) * points))
    extent = points * spacing / 2.0
    phase = GridSpec(2 * n, extent, points)
    config = GridSpec(n, extent, 2 * points)
    return config, phase


class GridFn:
    """Complex samples of a function on a :class:`GridSpec`."""

    __slots__ = ("spec", "values")
    expected_kind = None

    def __init__(self, spec: GridSpec, values):
        values = np.asarray(values, dtype=complex)
        if values.shape != spec.shape:
            raise GridError(f"values shape {values.shape} does not match grid {spec.shape}")
        if not np.all(np.isfinite(values)):
            raise GridError("grid function values must be finite")
        self.spec = spec
        self.values = values

    @classmethod
    def from_function(cls, spec: GridSpec, func):
        return cls(spec, func(*spec.mesh()))

    @classmethod
    def zeros(cls, spec: GridSpec):
        return cls(spec, np.zeros(spec.shape, dtype=complex))

    def like(self, values):
        return type(self)(self.spec, values)

    def _check(self, other):
        if not isinstance(other, GridFn) or other.spec != self.spec:
            raise GridError("grid functions live on different grids")

    def __add__(self, other):
        self._check(other)
        return self.like(self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return self.like(self.values - other.values)

    def __mul__(self, scalar):
        if isinstance(scalar, GridFn):
            self._check(scalar)
            return self.like(self.values * scalar.values)
        return self.like(self.values * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self.like(self.values / scalar)

    def __neg__(self):
        return self.like(-self.values)

    def conj(self):
        return self.like(np.conj(self.values))

    def norm(self) -> float:
        return norm(self)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.spec.dim}, N={self.spec.points}, L={self.spec.extent:.6g})"


class ConfigFn(GridFn):
    """Function on configuration space R^n."""

    __slots__ = ()


class PhaseFn(GridFn):
    """Function on phase space R^{2n}, axes ordered (x, y)."""

    __slots__ = ()


def inner_product(f: GridFn, g: GridFn) -> complex:
    """Riemann sum of f * conj(g), linear in the first slot."""
    f._check(g)
    return complex(f.spec.cell * np.vdot(g.values, f.values))


def norm(f: GridFn) -> float:
    return math.sqrt(f.spec.cell * float(np.sum(np.abs(f.values) ** 2)))


def relative_residual(a, b) -> float:
    """||a - b|| / ||b|| on raw arrays or grid functions."""
    a = a.values if isinstance(a, GridFn) else np.asarray(a)
    b = b.values if isinstance(b, GridFn) else np.asarray(b)
    denom = np.linalg.norm(b)
    diff = np.linalg.norm(a - b)
    return float(diff / denom) if denom > 0 else float(diff)


def johansson_norm(f: GridFn, p: float, cube_side: float) -> float:
    """Sup over lattice shifts of the L^p norm on a cube of given side."""
    if p < 1:
        raise ValueError("p must be at least 1")
    spec = f.spec
    if cube_side > 2 * spec.extent:
        raise GridError("cube larger than the grid domain")
    m = max(1, int(round(cube_side / spec.spacing)))
    weight = np.abs(f.values) ** p
    window_mean = ndimage.uniform_filter(weight, size=m, mode="wrap")
    total = float(window_mean.max()) * m**spec.dim * spec.cell
    return max(total, 0.0) ** (1.0 / p)


def _nyquist_mask(spec: GridSpec) -> np.ndarray:
    mask = np.zeros(spec.points, dtype=bool)
    mask[spec.points // 2] = True
    return mask


def spectral_derivative(f: GridFn, axis: int, order: int = 1) -> GridFn:
    """Derivative along one axis by the Fourier multiplier (ik)^order."""
    spec = f.spec
    k = spec.wavenumbers()
    mult = (1j * k) ** order
    if order % 2:
        mult[_nyquist_mask(spec)] = 0.0
    shape = [1] * spec.dim
    shape[axis] = spec.points
    coeffs = np.fft.fft(f.values, axis=axis)
    return f.like(np.fft.ifft(coeffs * mult.reshape(shape), axis=axis))


def _shift_multiplier(spec: GridSpec, offset: float) -> np.ndarray:
    k = spec.wavenumbers()
    mult = np.exp(-1j * k * offset)
    nyq = _nyquist_mask(spec)
    mult[nyq] = np.cos(k[nyq] * offset)
    return mult


def lattice_steps(offset: float, spacing: float, tol: float = 1e-9):
    """Return the integer number of steps if offset is lattice aligned."""
    steps = offset / spacing
    nearest = round(steps)
    if abs(steps - nearest) <= tol * max(1.0, abs(steps)):
        return int(nearest)
    return None


def shift_array(values: np.ndarray, spec: GridSpec, offsets) -> np.ndarray:
    """Samples of t -> f(t - offset); exact rolls on lattice offsets."""
    out = values
    for axis, offset in enumerate(np.atleast_1d(offsets)):
        if offset == 0:
            continue
        steps = lattice_steps(float(offset), spec.spacing)
        if steps is not None:
            out = np.roll(out, steps, axis=axis)
            continue
        shape = [1] * spec.dim
        shape[axis] = spec.points
        mult = _shift_multiplier(spec, float(offset)).reshape(shape)
        out = np.fft.ifft(np.fft.fft(out, axis=axis) * mult, axis=axis)
    return out


def fractional_shift(f: GridFn, offset) -> GridFn:
    """Band-limited translation f(t - offset) with one offset per axis."""
    offset = np.atleast_1d(np.asarray(offset, dtype=float))
    if offset.size != f.spec.dim:
        raise GridError("offset must have one entry per axis")
    return f.like(shift_array(f.values, f.spec, offset))


def dft_normalized(f: GridFn) -> np.ndarray:
    """Unitary DFT of the samples, scaled so that Parseval holds with the grid measure."""
    spec = f.spec
    coeffs = np.fft.fftn(f.values, norm="ortho")
    return coeffs * math.sqrt(spec.cell)


def interpolate(f: GridFn, coords) -> np.ndarray:
    """Band-limited evaluation at arbitrary points, coords of shape (dim, M)."""
    spec = f.spec
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if coords.shape[0] != spec.dim:
        raise GridError("coords must have one row per axis")
    k = spec.wavenumbers()
    nyq = _nyquist_mask(spec)
    coeffs = np.fft.fftn(f.values) / spec.points**spec.dim
    mats = []
    for row in coords:
        rel = row[:, None] + spec.extent
        mat = np.exp(1j * rel * k[None, :])
        mat[:, nyq] = np.cos(rel * k[nyq][None, :])
        mats.append(mat)
    out = coeffs
    # contract the first remaining axis against each point's factor
    result = np.tensordot(mats[0], out, axes=([1], [0]))
    for mat in mats[1:]:
        result = np.einsum("mk...,mk->m...", result, mat)
    return result


# --- serialization -----------------------------------------------------------

MAGIC = b"HPHASE01"


def _grid_from_axis(axis_values: np.ndarray, dim: int) -> GridSpec:
    n = axis_values.size
    if n < 2:
        raise GridFormatError("need at least two distinct coordinates per axis")
    steps = np.diff(axis_values)
    spacing = float(steps.mean())
    if not np.allclose(steps, spacing, rtol=1e-9, atol=1e-12):
        raise GridFormatError("coordinates are not uniformly spaced")
    extent = -float(axis_values[0])
    if not math.isclose(extent, n * spacing / 2.0, rel_tol=1e-9):
        raise GridFormatError("grid is not of the form [-L, L) with N samples")
    try:
        return GridSpec(dim, extent, n)
    except GridError as err:
        raise GridFormatError(str(err)) from err


def to_csv_text(f: GridFn) -> str:
    spec = f.spec
    buf = io.StringIO()
    header = [f"coord_{i + 1}" for i in range(spec.dim)] + ["re", "im"]
    buf.write(",".join(header) + "\n")
    mesh = [m.ravel() for m in spec.mesh()]
    vals = f.values.ravel()
    for idx in range(vals.size):
        row = [repr(float(m[idx])) for m in mesh]
        row += [repr(float(vals[idx].real)), repr(float(vals[idx].imag))]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def write_csv(f: GridFn, path) -> None:
    Path(path).write_text(to_csv_text(f))


def read_csv(path, kind=None) -> GridFn:
    """Parse a grid CSV; ``kind`` selects ConfigFn or PhaseFn."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise GridFormatError(f"{path}: {err}") from err
    lines = text.splitlines()
    if not lines:
        raise GridFormatError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    dim = len(header) - 2
    expected = [f"coord_{i + 1}" for i in range(dim)] + ["re", "im"]
    if dim < 1 or header != expected:
        raise GridFormatError(f"{path}:1: header must be {','.join(expected) if dim >= 1 else 'coord_1,...,re,im'}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != dim + 2:
            raise GridFormatError(f"{path}:{lineno}: expected {dim + 2} fields, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as err:
            raise GridFormatError(f"{path}:{lineno}: {err}") from err
    data = np.array(rows)
    if data.size == 0:
        raise GridFormatError(f"{path}: no data rows")
    axis_values = np.unique(data[:, 0])
    spec = _grid_from_axis(axis_values, dim)
    if data.shape[0] != spec.points**dim:
        raise GridFormatError(f"{path}: expected {spec.points ** dim} rows, got {data.shape[0]}")
    idx = np.rint((data[:, :dim] + spec.extent) / spec.spacing).astype(int)
    if np.any(idx < 0) or np.any(idx >= spec.points):
        raise GridFormatError(f"{path}: coordinates outside the grid")
    values = np.full(spec.shape, np.nan, dtype=complex)
    values[tuple(idx.T)] = data[:, dim] + 1j * data[:, dim + 1]
    if np.isnan(values).any():
        raise GridFormatError(f"{path}: missing or duplicated grid points")
    if kind is None:
        kind = ConfigFn if dim == 1 else PhaseFn
    return kind(spec, values)


def to_binary(f: GridFn) -> bytes:
    spec = f.spec
    header = MAGIC + struct.pack("<II", spec.dim, spec.points) + struct.pack("<d", spec.extent)
    data = np.empty(f.values.size * 2, dtype="<f8")
    flat = f.values.ravel()
    data[0::2] = flat.real
    data[1::2] = flat.imag
    return header + data.tobytes()


def write_binary(f: GridFn, path) -> None:
    Path(path).write_bytes(to_binary(f))


def from_binary(blob: bytes, kind=None) -> GridFn:
    if len(blob) < 24 or blob[:8] != MAGIC:
        raise GridFormatError("missing HPHASE01 header")
    dim, points = struct.unpack("<II", blob[8:16])
    (extent,) = struct.unpack("<d", blob[16:24])
    try:
        spec = GridSpec(dim, extent, points)
    except GridError as err:
        raise GridFormatError(str(err)) from err
    data = np.frombuffer(blob[24:], dtype="<f8")
    if data.size != 2 * points**dim:
        raise GridFormatError("payload size does not match header")
    values = (data[0::2] + 1j * data[1::2]).reshape(spec.shape)
    if kind is None:
        kind = ConfigFn if dim == 1 else PhaseFn
    return kind(spec, values)


def read_binary(path, kind=None) -> GridFn:
    try:
        blob = Path(path).read_bytes()
    except OSError as err:
        raise GridFormatError(f"{path}: {err}") from err
    return from_binary(blob, kind)
