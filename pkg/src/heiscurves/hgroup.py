"""Heisenberg group H^m in exponential coordinates (x, y, t).

Product::

    (x, y, t)(x', y', t') = (x + x', y + y', t + t' - 2 x.y' + 2 y.x')

The rest of the package works with m = 1; here m is whatever length the
coordinate vectors have.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_vec(v) -> np.ndarray:
    a = np.atleast_1d(np.asarray(v, dtype=float)).copy()
    if a.ndim != 1:
        raise ValueError(f"expected a 1-d coordinate vector, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Point:
    """A point of H^m. ``x`` and ``y`` have length m, ``t`` is scalar."""

    x: np.ndarray
    y: np.ndarray
    t: float

    def __init__(self, x, y, t):
        x = _as_vec(x)
        y = _as_vec(y)
        if x.shape != y.shape:
            raise ValueError(f"x and y must have equal length, got {x.size} and {y.size}")
        t = float(t)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.isfinite(t)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", t)

    @property
    def m(self) -> int:
        return self.x.size

    @classmethod
    def identity(cls, m: int = 1) -> "Point":
        return cls(np.zeros(m), np.zeros(m), 0.0)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.y, [self.t]])

    def __eq__(self, other):
        if not isinstance(other, Point):
            return NotImplemented
        return (
            self.m == other.m
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and self.t == other.t
        )

    def __hash__(self):
        return hash((tuple(self.x), tuple(self.y), self.t))

    def __repr__(self):
        if self.m == 1:
            return f"Point({float(self.x[0])!r}, {float(self.y[0])!r}, {self.t!r})"
        return f"Point({self.x.tolist()!r}, {self.y.tolist()!r}, {self.t!r})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Components (dx, dy, dt) of a tangent vector in the coordinate frame."""

    dx: np.ndarray
    dy: np.ndarray
    dt: float

    def __init__(self, dx, dy, dt):
        dx = _as_vec(dx)
        dy = _as_vec(dy)
        if dx.shape != dy.shape:
            raise ValueError("dx and dy must have equal length")
        dt = float(dt)
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dy)) and np.isfinite(dt)):
            raise ValueError("components must be finite")
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dy", dy)
        object.__setattr__(self, "dt", dt)

    @property
    def m(self) -> int:
        return self.dx.size


def _check_same_m(p, q):
    if p.m != q.m:
        raise ValueError(f"dimension mismatch: m={p.m} and m={q.m}")


def group_mul(p: Point, q: Point) -> Point:
    _check_same_m(p, q)
    t = p.t + q.t - 2.0 * float(p.x @ q.y) + 2.0 * float(p.y @ q.x)
    return Point(p.x + q.x, p.y + q.y, t)


def group_inv(p: Point) -> Point:
    return Point(-p.x, -p.y, -p.t)


def koranyi_norm(p: Point) -> float:
    """Korányi gauge ((|x|^2 + |y|^2)^2 + t^2)^(1/4)."""
    rho2 = float(p.x @ p.x + p.y @ p.y)
    return float(np.hypot(rho2, p.t) ** 0.5)


def koranyi_dist(p: Point, q: Point) -> float:
    """Left-invariant distance ||p^{-1} q||."""
    _check_same_m(p, q)
    return koranyi_norm(group_mul(group_inv(p), q))


def dilate(lam: float, p: Point) -> Point:
    """Anisotropic dilation (lam x, lam y, lam^2 t)."""
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    return Point(lam * p.x, lam * p.y, lam * lam * p.t)


def contact_theta(p: Point, v: TangentVector) -> float:
    """Evaluate theta = dt + 2 sum(x_i dy_i - y_i dx_i) at ``p`` on ``v``."""
    if p.m != v.m:
        raise ValueError(f"dimension mismatch: point m={p.m}, vector m={v.m}")
    return v.dt + 2.0 * (float(p.x @ v.dy) - float(p.y @ v.dx))


def frame_x(p: Point, i: int = 0) -> TangentVector:
    """Left-invariant field d/dx_i + 2 y_i d/dt at ``p``."""
    dx = np.zeros(p.m)
    dx[i] = 1.0
    return TangentVector(dx, np.zeros(p.m), 2.0 * p.y[i])


def frame_y(p: Point, i: int = 0) -> TangentVector:
    """Left-invariant field d/dy_i - 2 x_i d/dt at ``p``."""
    dy = np.zeros(p.m)
    dy[i] = 1.0
    return TangentVector(np.zeros(p.m), dy, -2.0 * p.x[i])
