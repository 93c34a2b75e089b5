"""Heisenberg group arithmetic, the symplectic form and coordinate maps.

Points of the group H^n are triples (s, x, y) with s real and x, y in R^n.
The doubled group H^{2n} uses the same type with vectors of length 2n,
ordered as x = (x1, x2) and y = (y1, y2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Raised when objects of different dimension are combined."""


def _vec(v) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"expected a flat vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class GroupElement:
    """Element (s, x, y) of the Heisenberg group H^n."""

    s: float
    x: np.ndarray
    y: np.ndarray

    def __init__(self, s, x, y):
        x = _vec(x)
        y = _vec(y)
        if x.size == 0 or x.shape != y.shape:
            raise DimensionError(f"x and y must be nonempty of equal length, got {x.size} and {y.size}")
        object.__setattr__(self, "s", float(s))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    @classmethod
    def identity(cls, n: int = 1) -> "GroupElement":
        return cls(0.0, np.zeros(n), np.zeros(n))

    def as_tuple(self) -> tuple:
        return (self.s, *self.x.tolist(), *self.y.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        return (
            self.s == other.s
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )

    def __hash__(self) -> int:
        return hash(self.as_tuple())

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return group_mul(self, other)


@dataclass(frozen=True)
class PhasePoint:
    """Point (x, y) of the phase space R^{2n}."""

    x: np.ndarray
    y: np.ndarray

    def __init__(self, x, y):
        x = _vec(x)
        y = _vec(y)
        if x.shape != y.shape:
            raise DimensionError("x and y must have equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class Params:
    """Planck parameter and squeeze parameters shared by all computations."""

    hbar: float = 1.0
    tau: float = 1.0
    sigma: float = 1.0
    upsilon: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.hbar) or self.hbar == 0:
            raise ValueError("hbar must be a finite nonzero real")
        for name in ("tau", "sigma", "upsilon"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a finite positive real")

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar

    def replace(self, **changes) -> "Params":
        data = {"hbar": self.hbar, "tau": self.tau, "sigma": self.sigma, "upsilon": self.upsilon}
        data.update(changes)
        return Params(**data)


def _coords(p):
    if isinstance(p, (PhasePoint, GroupElement)):
        return p.x, p.y
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size % 2:
        raise DimensionError("a phase point needs an even number of coordinates")
    half = arr.size // 2
    return arr[:half], arr[half:]


def symplectic_form(p1, p2) -> float:
    """Return x1.y2 - x2.y1 for two phase points."""
    x1, y1 = _coords(p1)
    x2, y2 = _coords(p2)
    if x1.shape != x2.shape:
        raise DimensionError(f"dimension mismatch: {x1.size} vs {x2.size}")
    return float(np.dot(x1, y2) - np.dot(x2, y1))


def group_mul(g1: GroupElement, g2: GroupElement) -> GroupElement:
    if g1.n != g2.n:
        raise DimensionError(f"cannot multiply elements of H^{g1.n} and H^{g2.n}")
    s = g1.s + g2.s + 0.5 * symplectic_form(g1, g2)
    return GroupElement(s, g1.x + g2.x, g1.y + g2.y)


def group_inv(g: GroupElement) -> GroupElement:
    return GroupElement(-g.s, -g.x, -g.y)


def automorphism_matrix(upsilon: float, n: int = 1) -> np.ndarray:
    """4n x 4n matrix acting on (x1, x2, y1, y2) blocks."""
    if upsilon <= 0:
        raise ValueError("upsilon must be positive")
    u = float(upsilon)
    blocks = np.array(
        [
            [0.0, -0.5, -u / 2, 0.0],
            [0.5, 0.0, 0.0, u / 2],
            [1 / u, 0.0, 0.0, -1.0],
            [0.0, -1 / u, 1.0, 0.0],
        ]
    )
    return np.kron(blocks, np.eye(n))


def automorphism_A(g: GroupElement, upsilon: float) -> GroupElement:
    """Symplectic automorphism of H^{2n}; the central coordinate is kept."""
    if g.n % 2:
        raise DimensionError("automorphism_A expects an element of a doubled group H^{2n}")
    n = g.n // 2
    vec = automorphism_matrix(upsilon, n) @ np.concatenate([g.x, g.y])
    return GroupElement(g.s, vec[: 2 * n], vec[2 * n :])


def _split4(p):
    arr = np.asarray(p, dtype=float)
    if arr.shape[0] % 4:
        raise DimensionError("expected a point of R^{4n} with leading axis divisible by 4")
    return np.split(arr, 4, axis=0)


def map_B(p, upsilon: float) -> np.ndarray:
    """(x1, x2, y1, y2) -> (x1, y1, upsilon*y2, x2/upsilon)."""
    x1, x2, y1, y2 = _split4(p)
    return np.concatenate([x1, y1, upsilon * y2, x2 / upsilon])


def map_B_inv(p, upsilon: float) -> np.ndarray:
    """Inverse of :func:`map_B`."""
    x1, y1, u2, w2 = _split4(p)
    return np.concatenate([x1, upsilon * w2, y1, u2 / upsilon])


def complexify(p, params: Params) -> np.ndarray:
    """z = sqrt(|h|/(2 tau)) (x + i tau y)."""
    x, y = _coords(p)
    scale = math.sqrt(abs(params.h) / (2.0 * params.tau))
    return scale * (x + 1j * params.tau * y)


def decomplexify(z, params: Params) -> PhasePoint:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    scale = math.sqrt(abs(params.h) / (2.0 * params.tau))
    return PhasePoint(z.real / scale, z.imag / (scale * params.tau))
