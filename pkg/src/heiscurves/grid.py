"""Structured lattices over domains in R^n, n in {1, 2, 3}.

Nodes are labelled interior, boundary or outside. A node is *in* the domain
if its coordinates satisfy the closed domain inequality; an in-node is
interior when all of its 2n face neighbours are in, otherwise it is a
boundary node. Curved boundaries are therefore snapped to the outermost
lattice nodes (first-order geometry).

Fields are stored as arrays of the lattice shape (C order, axis 0 first)
holding NaN on outside nodes.
"""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from heiscurves.errors import ConfigError, DisconnectedDomainError

INTERIOR = 0
BOUNDARY = 1
OUTSIDE = 2

DOMAIN_KINDS = ("rectangle", "ball", "annulus", "halfball")


@dataclass(frozen=True, eq=False)
class Grid:
    n: int
    bbox: tuple
    shape: tuple
    h: tuple
    mask: np.ndarray = field(repr=False)
    domain: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def inset(self) -> np.ndarray:
        return self.mask != OUTSIDE

    @property
    def interior(self) -> np.ndarray:
        return self.mask == INTERIOR

    @property
    def boundary(self) -> np.ndarray:
        return self.mask == BOUNDARY

    @property
    def hmax(self) -> float:
        return max(self.h)

    def axis_coords(self, axis: int) -> np.ndarray:
        lo, hi = self.bbox[axis]
        return np.linspace(lo, hi, self.shape[axis])

    def coords(self) -> list:
        """Node coordinates, one array of the lattice shape per axis."""
        return np.meshgrid(*[self.axis_coords(k) for k in range(self.n)], indexing="ij")

    def points(self, where=None) -> np.ndarray:
        """(N, n) array of coordinates of the nodes selected by ``where``."""
        X = self.coords()
        sel = self.inset if where is None else where
        return np.stack([x[sel] for x in X], axis=-1)

    def distance(self, center) -> np.ndarray:
        c = _center(center, self.n)
        X = self.coords()
        return np.sqrt(sum((X[k] - c[k]) ** 2 for k in range(self.n)))

    def ball_mask(self, center, radius: float) -> np.ndarray:
        """In-nodes with |x - center| <= radius."""
        return self.inset & (self.distance(center) <= radius * (1 + 1e-12) + 1e-14)

    def sphere_band(self, center, radius: float, width=None) -> np.ndarray:
        """In-nodes within ``width`` (default one grid spacing) of the sphere."""
        width = self.hmax if width is None else width
        return self.inset & (np.abs(self.distance(center) - radius) <= width * (1 + 1e-12))

    def contains_ball(self, center, radius: float) -> bool:
        c = _center(center, self.n)
        return all(
            self.bbox[k][0] - 1e-12 <= c[k] - radius and c[k] + radius <= self.bbox[k][1] + 1e-12
            for k in range(self.n)
        )

    def flat_boundary(self) -> np.ndarray:
        """Boundary nodes on the flat face of a half-ball (empty otherwise)."""
        if self.domain.get("kind") != "halfball":
            return np.zeros(self.shape, dtype=bool)
        axis = self.domain["axis"]
        c = self.domain["center"][axis]
        X = self.coords()[axis]
        return self.boundary & (np.abs(X - c) <= 1e-12 * max(1.0, abs(c)) + 1e-14)

    def field(self, values) -> "ScalarField":
        return ScalarField(self, values)

    def node_field(self, func) -> "ScalarField":
        """Evaluate ``func(*coords)`` on in-nodes."""
        X = self.coords()
        vals = np.broadcast_to(np.asarray(func(*X), dtype=float), self.shape)
        return ScalarField(self, np.where(self.inset, vals, np.nan))

    def quadrature_weights(self, region=None) -> np.ndarray:
        """Composite trapezoid weights restricted to in-nodes (and ``region``).

        Each lattice cell gives 1/2^n of its volume to every corner that is
        selected. On a rectangle this is the tensor trapezoid rule.
        """
        sel = self.inset if region is None else (self.inset & region)
        vol = float(np.prod(self.h))
        counts = np.ones(self.shape)
        for k in range(self.n):
            c = np.full(self.shape[k], 2.0)
            c[0] = c[-1] = 1.0
            counts = counts * c.reshape([-1 if j == k else 1 for j in range(self.n)])
        return np.where(sel, counts * vol / 2**self.n, 0.0)


def _center(center, n):
    if center is None:
        return np.zeros(n)
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.size == 1 and n > 1:
        c = np.full(n, float(c[0]))
    if c.size != n:
        raise ValueError(f"center has {c.size} coordinates, expected {n}")
    return c


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            v = np.broadcast_to(v, self.grid.shape).copy()
        v[~self.grid.inset] = np.nan
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def on(self, where) -> np.ndarray:
        return self.values[where]

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.interior]

    @property
    def boundary_values(self) -> np.ndarray:
        return self.values[self.grid.boundary]

    def min(self) -> float:
        return float(np.nanmin(self.values))

    def max(self) -> float:
        return float(np.nanmax(self.values))


# -- construction --------------------------------------------------------------


def build_grid(kind="rectangle", bbox=None, shape=None, center=None, radius=None,
               r1=None, r2=None, axis=None) -> Grid:
    """Build a lattice over ``bbox`` and label nodes for the given domain.

    Domain kinds: ``rectangle`` (the box itself), ``ball(center, radius)``,
    ``annulus(center, r1, r2)`` and ``halfball(center, radius, axis)``
    (points of the ball with x_axis >= center_axis).
    """
    if kind not in DOMAIN_KINDS:
        raise ConfigError(f"unknown domain kind {kind!r}", "domain.kind")
    if bbox is None:
        raise ConfigError("missing bounding box", "domain.bbox")
    bbox = tuple((float(lo), float(hi)) for lo, hi in bbox)
    n = len(bbox)
    if n not in (1, 2, 3):
        raise ConfigError(f"dimension must be 1, 2 or 3, got {n}", "domain.bbox")
    if shape is None:
        raise ConfigError("missing shape", "domain.shape")
    shape = tuple(int(s) for s in np.broadcast_to(np.asarray(shape), (n,)))
    if any(s < 3 for s in shape):
        raise ConfigError(f"need at least 3 nodes per axis, got {shape}", "domain.shape")
    if any(not hi > lo for lo, hi in bbox):
        raise ConfigError(f"degenerate bounding box {bbox}", "domain.bbox")
    h = tuple((hi - lo) / (s - 1) for (lo, hi), s in zip(bbox, shape))

    X = np.meshgrid(*[np.linspace(lo, hi, s) for (lo, hi), s in zip(bbox, shape)], indexing="ij")
    domain = {"kind": kind}
    if kind == "rectangle":
        inside = np.ones(shape, dtype=bool)
    else:
        c = _center(center, n)
        domain["center"] = c.tolist()
        dist = np.sqrt(sum((X[k] - c[k]) ** 2 for k in range(n)))
        scale = max(1.0, *(abs(v) for pair in bbox for v in pair))
        eps = 1e-12 * scale
        if kind in ("ball", "halfball"):
            if radius is None or not radius > 0:
                raise ConfigError("radius must be positive", "domain.radius")
            domain["radius"] = float(radius)
            inside = dist <= radius + eps
            if kind == "halfball":
                axis = n - 1 if axis is None else int(axis)
                if not 0 <= axis < n:
                    raise ConfigError(f"axis {axis} out of range", "domain.axis")
                domain["axis"] = axis
                inside &= X[axis] >= c[axis] - eps
        else:
            if r1 is None or r2 is None or not 0 < r1 < r2:
                raise ConfigError("annulus needs 0 < r1 < r2", "domain.r1")
            domain["r1"], domain["r2"] = float(r1), float(r2)
            inside = (dist >= r1 - eps) & (dist <= r2 + eps)

    interior = inside.copy()
    for k in range(n):
        for shift in (1, -1):
            nb = np.zeros(shape, dtype=bool)
            src = [slice(None)] * n
            dst = [slice(None)] * n
            if shift == 1:
                src[k], dst[k] = slice(1, None), slice(None, -1)
            else:
                src[k], dst[k] = slice(None, -1), slice(1, None)
            nb[tuple(dst)] = inside[tuple(src)]
            interior &= nb
    mask = np.full(shape, OUTSIDE, dtype=np.int8)
    mask[inside] = BOUNDARY
    mask[interior] = INTERIOR
    mask.setflags(write=False)
    if not inside.any():
        raise ConfigError("domain contains no lattice nodes", "domain")
    return Grid(n, bbox, shape, h, mask, domain)


def grid_from_spec(spec: dict) -> Grid:
    if not isinstance(spec, dict):
        raise ConfigError("must be an object", "domain")
    allowed = {"kind", "bbox", "shape", "center", "radius", "r1", "r2", "axis"}
    extra = set(spec) - allowed
    if extra:
        raise ConfigError(f"unexpected entries {sorted(extra)}", "domain")
    bbox = spec.get("bbox")
    if not isinstance(bbox, list) or not all(isinstance(p, list) and len(p) == 2 for p in bbox):
        raise ConfigError("must be a list of [lo, hi] pairs", "domain.bbox")
    shape = spec.get("shape")
    if isinstance(shape, int):
        shape = [shape] * len(bbox)
    if not isinstance(shape, list) or len(shape) != len(bbox):
        raise ConfigError("must be a list with one entry per axis", "domain.shape")
    return build_grid(spec.get("kind", "rectangle"), bbox, shape, spec.get("center"),
                      spec.get("radius"), spec.get("r1"), spec.get("r2"), spec.get("axis"))


# -- shifts and stencils -------------------------------------------------------


def _shift(a, axis, offset, fill):
    """out[i] = a[i + offset] along ``axis`` (``fill`` where that leaves the array)."""
    out = np.full_like(a, fill)
    n = a.ndim
    src = [slice(None)] * n
    dst = [slice(None)] * n
    if offset > 0:
        src[axis], dst[axis] = slice(offset, None), slice(None, -offset)
    else:
        src[axis], dst[axis] = slice(None, offset), slice(-offset, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _vals(f):
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)


def laplacian(f: ScalarField) -> ScalarField:
    """(2n+1)-point Laplacian on interior nodes, NaN elsewhere."""
    g = f.grid
    v = np.where(g.inset, f.values, 0.0)
    out = np.zeros(g.shape)
    for k in range(g.n):
        out += (_shift(v, k, 1, 0.0) - 2.0 * v + _shift(v, k, -1, 0.0)) / g.h[k] ** 2
    return ScalarField(g, np.where(g.interior, out, np.nan))


def gradient(f: ScalarField) -> list:
    """Per-axis derivative on in-nodes.

    Central differences where both axis neighbours are in the domain,
    otherwise the three-point one-sided formula (second order), falling back
    to a two-point difference, or zero for a node with no in-neighbour along
    the axis.
    """
    g = f.grid
    ins = g.inset
    v = np.where(ins, f.values, 0.0)
    comps = []
    for k in range(g.n):
        hk = g.h[k]
        p1, p2 = _shift(v, k, 1, 0.0), _shift(v, k, 2, 0.0)
        m1, m2 = _shift(v, k, -1, 0.0), _shift(v, k, -2, 0.0)
        ip1, ip2 = _shift(ins, k, 1, False), _shift(ins, k, 2, False)
        im1, im2 = _shift(ins, k, -1, False), _shift(ins, k, -2, False)
        d = np.zeros(g.shape)
        done = np.zeros(g.shape, dtype=bool)
        for sel, val in (
            (ip1 & im1, (p1 - m1) / (2 * hk)),
            (ip1 & ip2, (-3 * v + 4 * p1 - p2) / (2 * hk)),
            (im1 & im2, (3 * v - 4 * m1 + m2) / (2 * hk)),
            (ip1, (p1 - v) / hk),
            (im1, (v - m1) / hk),
        ):
            use = sel & ~done
            d[use] = val[use]
            done |= use
        comps.append(ScalarField(g, np.where(ins, d, np.nan)))
    return comps


def grad_sq(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, sum(c.values**2 for c in gradient(f)))


def edge_grad_sq(f: ScalarField) -> ScalarField:
    """Edge-averaged |grad f|^2 on interior nodes:
    sum_k [(f_{+k} - f)^2 + (f_{-k} - f)^2] / (2 h_k^2).

    With this form u*Lap_h(u) + edge_grad_sq(u) equals Lap_h(u^2)/2 exactly.
    """
    g = f.grid
    v = np.where(g.inset, f.values, 0.0)
    out = np.zeros(g.shape)
    for k in range(g.n):
        out += ((_shift(v, k, 1, 0.0) - v) ** 2 + (_shift(v, k, -1, 0.0) - v) ** 2) / (2 * g.h[k] ** 2)
    return ScalarField(g, np.where(g.interior, out, np.nan))


def axis_difference(f: ScalarField, axis: int, order: int) -> np.ndarray:
    """Central undivided-then-scaled difference of order 3 or 4 along ``axis``.

    Returns an array of the lattice shape, NaN where the stencil leaves the
    domain. Used only to estimate derivative scales for tolerances.
    """
    g = f.grid
    v = f.values
    h = g.h[axis]
    s = {o: _shift(v, axis, o, np.nan) for o in (-2, -1, 1, 2)}
    if order == 3:
        d = (s[2] - 2 * s[1] + 2 * s[-1] - s[-2]) / (2 * h**3)
    elif order == 4:
        d = (s[2] - 4 * s[1] + 6 * v - 4 * s[-1] + s[-2]) / h**4
    else:
        raise ValueError("order must be 3 or 4")
    return d


def integrate(f, region=None) -> float:
    """Trapezoid quadrature over in-nodes (optionally restricted to ``region``)."""
    g = f.grid
    w = g.quadrature_weights(region)
    vals = np.where(w > 0, f.values, 0.0)
    # fixed C-order reduction for reproducibility
    return float(math.fsum((w * vals).ravel().tolist()))


def cutoff_eta(grid: Grid, rho: float, center=None) -> ScalarField:
    """Radial cutoff: 1 on B_rho, 0 outside B_{2 rho}, linear in between."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    if not grid.contains_ball(center, 2 * rho):
        raise ValueError(f"ball of radius {2 * rho} around {center} exceeds the bounding box")
    d = grid.distance(center)
    return ScalarField(grid, np.clip(2.0 - d / rho, 0.0, 1.0))


# -- sparse operators ----------------------------------------------------------


def _flat(grid):
    return np.arange(grid.size).reshape(grid.shape)


def laplacian_matrix(grid: Grid) -> sp.csr_matrix:
    """Rows: interior nodes (in flat order). Columns: all nodes."""
    idx = _flat(grid)
    rows = idx[grid.interior]
    m = rows.size
    r, c, v = [np.arange(m)], [rows], [np.full(m, -sum(2.0 / hk**2 for hk in grid.h))]
    for k in range(grid.n):
        for off in (1, -1):
            nb = _shift(idx, k, off, -1)[grid.interior]
            r.append(np.arange(m))
            c.append(nb)
            v.append(np.full(m, 1.0 / grid.h[k] ** 2))
    return sp.csr_matrix((np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=(m, grid.size))


def central_difference_matrix(grid: Grid, axis: int) -> sp.csr_matrix:
    idx = _flat(grid)
    rows = idx[grid.interior]
    m = rows.size
    hp = _shift(idx, axis, 1, -1)[grid.interior]
    hm = _shift(idx, axis, -1, -1)[grid.interior]
    h2 = 2.0 * grid.h[axis]
    data = np.concatenate([np.full(m, 1.0 / h2), np.full(m, -1.0 / h2)])
    return sp.csr_matrix((data, (np.tile(np.arange(m), 2), np.concatenate([hp, hm]))), shape=(m, grid.size))


def neighbor_index(grid: Grid, axis: int, offset: int) -> np.ndarray:
    """Flat index of the neighbour of each interior node (interior order)."""
    return _shift(_flat(grid), axis, offset, -1)[grid.interior]


def check_connected(grid: Grid, start=None) -> None:
    """Raise if the in-nodes do not form one face-connected component."""
    order, _ = bfs_tree(grid, start)
    if order.size != int(grid.inset.sum()):
        raise DisconnectedDomainError(
            f"domain is disconnected: {order.size} of {int(grid.inset.sum())} nodes reachable"
        )


def bfs_tree(grid: Grid, start=None):
    """Breadth-first spanning tree of the in-nodes from ``start``.

    Neighbours are visited axis 0 first (+ then -), then axis 1, ... which
    fixes the tree. Returns (visit order, parent) as flat indices; the root's
    parent is -1.
    """
    ins = grid.inset.ravel()
    if start is None:
        start = int(np.flatnonzero(ins)[0])
    elif not isinstance(start, (int, np.integer)):
        start = int(np.ravel_multi_index(tuple(start), grid.shape))
    if not ins[start]:
        raise ValueError("anchor node is outside the domain")
    strides = [int(np.prod(grid.shape[k + 1:])) for k in range(grid.n)]
    parent = np.full(grid.size, -2, dtype=np.int64)
    parent[start] = -1
    order = [start]
    q = deque([start])
    multi = np.unravel_index(np.arange(grid.size), grid.shape)
    while q:
        i = q.popleft()
        for k in range(grid.n):
            pos = multi[k][i]
            for off in (1, -1):
                if 0 <= pos + off < grid.shape[k]:
                    j = i + off * strides[k]
                    if ins[j] and parent[j] == -2:
                        parent[j] = i
                        order.append(j)
                        q.append(j)
    return np.asarray(order), parent


# -- field dumps ----------------------------------------------------------------


def field_to_csv(f: ScalarField, path=None) -> str:
    """Write ``i,j,k,x1,x2,x3,value`` rows for in-nodes; unused axes are 0."""
    g = f.grid
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "k", "x1", "x2", "x3", "value"])
    axes = [g.axis_coords(k) for k in range(g.n)]
    for idx in zip(*np.nonzero(g.inset)):
        ijk = list(idx) + [0] * (3 - g.n)
        xyz = [repr(float(axes[k][idx[k]])) for k in range(g.n)] + ["0.0"] * (3 - g.n)
        w.writerow(ijk + xyz + [repr(float(f.values[idx]))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
