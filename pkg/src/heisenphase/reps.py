"""Group actions on sampled functions, derived representations and ladders.

Sampled actions are implemented for n = 1: configuration functions live on
a one-dimensional grid and phase-space functions on a two-dimensional grid
with axes (x, y).  The doubled actions act on the same two-dimensional
grid, indexed by elements of H^2.

Phases are always evaluated at the unwrapped grid coordinates.  On a
self-dual grid every such phase is periodic over the box, so lattice
shifts compose exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import GroupElement, Params, DimensionError, decomplexify, group_mul
from .grid import ConfigFn, GridFn, PhaseFn, shift_array, spectral_derivative, interpolate


class RepTag(enum.Enum):
    Schrodinger = "schrodinger"
    LeftPulled = "left"
    RightPulled = "right"
    XiTilde = "xi_tilde"
    Xi = "xi"


@dataclass(frozen=True)
class AlgebraBasis:
    """Basis element S, X_j or Y_j of the Heisenberg Lie algebra."""

    element: str
    j: int = 0

    def __post_init__(self):
        if self.element not in ("S", "X", "Y"):
            raise ValueError("element must be 'S', 'X' or 'Y'")
        if self.j < 0:
            raise ValueError("axis index must be nonnegative")


class CarrierError(TypeError):
    """Raised when a representation is applied to the wrong kind of function."""


def _check_carrier(tag: RepTag, f: GridFn, g: GroupElement | None = None):
    if tag is RepTag.Schrodinger:
        if not isinstance(f, ConfigFn) or f.spec.dim != 1:
            raise CarrierError("the Schrodinger representation acts on one-dimensional ConfigFn")
        expected_n = 1
    else:
        if not isinstance(f, PhaseFn) or f.spec.dim != 2:
            raise CarrierError(f"{tag.name} acts on two-dimensional PhaseFn")
        expected_n = 2 if tag in (RepTag.XiTilde, RepTag.Xi) else 1
    if g is not None and g.n != expected_n:
        raise DimensionError(f"{tag.name} needs an element of H^{expected_n}, got H^{g.n}")


def phase_mesh(spec):
    return np.meshgrid(spec.axis, spec.axis, indexing="ij")


# --- raw array kernels -------------------------------------------------------


def left_values(values, spec, s, vx, vy, hbar):
    x, y = phase_mesh(spec)
    shifted = shift_array(values, spec, [vx, vy])
    return np.exp(1j * math.pi * hbar * (2 * s + vx * y - x * vy)) * shifted


def right_values(values, spec, s, vx, vy, hbar):
    x, y = phase_mesh(spec)
    shifted = shift_array(values, spec, [-vx, -vy])
    return np.exp(1j * math.pi * hbar * (-2 * s + vx * y - x * vy)) * shifted


def schrodinger_values(values, spec, s, x, y, hbar):
    t = spec.axis
    shifted = shift_array(values, spec, [x])
    return np.exp(1j * math.pi * hbar * (2 * s - 2 * y * t + x * y)) * shifted


def xi_tilde_values(values, spec, g: GroupElement, hbar, upsilon):
    x1, x2 = g.x
    y1, y2 = g.y
    out = right_values(values, spec, 0.0, upsilon * y2, x2 / upsilon, hbar)
    return left_values(out, spec, g.s, x1, y1, hbar)


def dilate(F: PhaseFn, upsilon: float) -> PhaseFn:
    """Unitary partial dilation F(x, y) -> sqrt(upsilon) F(upsilon x, y)."""
    if upsilon == 1:
        return F
    spec = F.spec
    x, y = phase_mesh(spec)
    coords = np.vstack([(upsilon * x).ravel(), y.ravel()])
    vals = interpolate(F, coords).reshape(spec.shape)
    return F.like(math.sqrt(upsilon) * vals)


# --- public API ----------------------------------------------------------------


def act(tag: RepTag, g: GroupElement, f: GridFn, params: Params) -> GridFn:
    """Apply the representation ``tag`` of the group element g to f."""
    _check_carrier(tag, f, g)
    hbar = params.hbar
    if tag is RepTag.Schrodinger:
        return f.like(schrodinger_values(f.values, f.spec, g.s, g.x[0], g.y[0], hbar))
    if tag is RepTag.LeftPulled:
        return f.like(left_values(f.values, f.spec, g.s, g.x[0], g.y[0], hbar))
    if tag is RepTag.RightPulled:
        return f.like(right_values(f.values, f.spec, g.s, g.x[0], g.y[0], hbar))
    if tag is RepTag.XiTilde:
        return f.like(xi_tilde_values(f.values, f.spec, g, hbar, params.upsilon))
    inner = dilate(f, 1.0 / params.upsilon)
    moved = inner.like(xi_tilde_values(inner.values, f.spec, g, hbar, params.upsilon))
    return dilate(moved, params.upsilon)


def commutation_defect(g: GroupElement, h: GroupElement, F: PhaseFn, params: Params) -> float:
    """Relative size of Lambda(g)R(h)F - R(h)Lambda(g)F."""
    lr = act(RepTag.LeftPulled, g, act(RepTag.RightPulled, h, F, params), params)
    rl = act(RepTag.RightPulled, h, act(RepTag.LeftPulled, g, F, params), params)
    denom = F.norm()
    return (lr - rl).norm() / denom if denom > 0 else 0.0


def homomorphism_defect(tag: RepTag, g1: GroupElement, g2: GroupElement, f: GridFn, params: Params) -> float:
    two_step = act(tag, g1, act(tag, g2, f, params), params)
    one_step = act(tag, group_mul(g1, g2), f, params)
    denom = f.norm()
    return (two_step - one_step).norm() / denom if denom > 0 else 0.0


def _pulled_derived(sign: int, element: str, F: PhaseFn, hbar: float) -> PhaseFn:
    # sign +1 for the left action, -1 for the right action
    x, y = phase_mesh(F.spec)
    if element == "S":
        return F * (sign * 2j * math.pi * hbar)
    if element == "X":
        return F.like(1j * math.pi * hbar * y * F.values) - sign * spectral_derivative(F, 0)
    return F.like(-1j * math.pi * hbar * x * F.values) - sign * spectral_derivative(F, 1)


def derived(tag: RepTag, basis: AlgebraBasis, f: GridFn, params: Params) -> GridFn:
    """Derived representation of a Lie algebra basis element."""
    _check_carrier(tag, f)
    hbar = params.hbar
    if tag is RepTag.Schrodinger:
        if basis.j != 0:
            raise DimensionError("axis index out of range")
        if basis.element == "S":
            return f * (2j * math.pi * hbar)
        if basis.element == "X":
            return -spectral_derivative(f, 0)
        return f.like(-2j * math.pi * hbar * f.spec.axis * f.values)
    if tag in (RepTag.LeftPulled, RepTag.RightPulled):
        if basis.j != 0:
            raise DimensionError("axis index out of range")
        sign = 1 if tag is RepTag.LeftPulled else -1
        return _pulled_derived(sign, basis.element, f, hbar)
    if basis.j > 1:
        raise DimensionError("axis index out of range")
    if tag is RepTag.Xi and params.upsilon != 1:
        inner = dilate(f, 1.0 / params.upsilon)
        return dilate(derived(RepTag.XiTilde, basis, inner, params), params.upsilon)
    u = params.upsilon
    if basis.element == "S":
        return _pulled_derived(1, "S", f, hbar)
    if basis.j == 0:
        return _pulled_derived(1, basis.element, f, hbar)
    # x2 drives the right y-shift by x2/u, y2 drives the right x-shift by u*y2
    if basis.element == "X":
        return _pulled_derived(-1, "Y", f, hbar) / u
    return _pulled_derived(-1, "X", f, hbar) * u


def _sign_value(sign) -> int:
    if sign in ("+", 1, +1):
        return 1
    if sign in ("-", -1):
        return -1
    raise ValueError("sign must be '+' or '-'")


def ladder(tag: RepTag, sign, tau: float, f: GridFn, params: Params, j: int = 0) -> GridFn:
    """a^{+/-} = (+/- tau dX + i dY) / sqrt(2 |h| tau)."""
    sgn = _sign_value(sign)
    if tau <= 0:
        raise ValueError("tau must be positive")
    dx = derived(tag, AlgebraBasis("X", j), f, params)
    dy = derived(tag, AlgebraBasis("Y", j), f, params)
    scale = 1.0 / math.sqrt(2.0 * abs(params.h) * tau)
    return (dx * (sgn * tau) + dy * 1j) * scale


def ladder_commutator_sign(tag: RepTag, params: Params) -> float:
    """The scalar [a^-, a^+] for the given representation."""
    base = math.copysign(1.0, params.hbar)
    return -base if tag is RepTag.RightPulled else base


def displacement(tag: RepTag, z, f: GridFn, params: Params) -> GridFn:
    """Displacement by the complex coordinate z, realized as a group action."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    point = decomplexify(z, params)
    return act(tag, GroupElement(0.0, point.x, point.y), f, params)


def ladder_exponential(tag: RepTag, sign, tau: float, w: complex, f: GridFn, params: Params, order: int = 20) -> GridFn:
    """Truncated Taylor series of exp(w a^{sign}) applied to f."""
    term = f
    total = f
    for k in range(1, order + 1):
        term = ladder(tag, sign, tau, term, params) * (w / k)
        total = total + term
    return total


def kermack_mccrae(tag: RepTag, z: complex, f: GridFn, params: Params, order: int = 20) -> GridFn:
    """exp(-z a^-) exp(conj(z) a^+) f times the scalar fixed by the commutator."""
    tau = params.tau
    inner = ladder_exponential(tag, "+", tau, np.conj(z), f, params, order)
    outer = ladder_exponential(tag, "-", tau, -z, inner, params, order)
    eps = ladder_commutator_sign(tag, params)
    return outer * np.exp(eps * abs(z) ** 2 / 2.0)


def reflect(F: GridFn) -> GridFn:
    """F(p) -> F(-p) by exact index reversal on the grid."""
    vals = F.values
    for axis in range(F.spec.dim):
        vals = np.roll(np.flip(vals, axis=axis), 1, axis=axis)
    return F.like(vals)


def euclidean_shift(v, F: PhaseFn, params: Params, s: float = 0.0) -> PhaseFn:
    """Lambda(s, v/2) R(s, -v/2), which translates F by v."""
    vx, vy = v
    half = GroupElement(s, vx / 2, vy / 2)
    neg = GroupElement(s, -vx / 2, -vy / 2)
    return act(RepTag.LeftPulled, half, act(RepTag.RightPulled, neg, F, params), params)


def modulation(v, F: PhaseFn, params: Params, s: float = 0.0) -> PhaseFn:
    """Lambda(s, v/2) R(s, v/2), which multiplies F by exp(pi i hbar omega(v, p))."""
    vx, vy = v
    half = GroupElement(s, vx / 2, vy / 2)
    return act(RepTag.LeftPulled, half, act(RepTag.RightPulled, half, F, params), params)
