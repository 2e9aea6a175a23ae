"""Dirichlet problem for y, recovery of x and t, energy and residuals.

The Euler-Lagrange equation for y is

    Lap y + r(y) |grad y|^2 = 0,      r = H'' H' / (1 + H'^2).

It is discretized in conservative arclength form. For an interior node i
with face neighbours j (spacing h_ij),

    N_i(y) = (1 / F'(y_i)) sum_j  A(y_i, y_j) / h_ij^2,
    A(a, b) = int_a^b sqrt(1 + H'(s)^2) ds.

Because F''/F' = r, N is Lap_h y + r(y)|grad_h y|^2 + O(h^2). Two exact
properties follow: A(a, b) has the sign of b - a, so the scheme obeys the
discrete maximum principle, and N(y) = 0 exactly when F(y) is discrete
harmonic, which is what the substitution solver computes by a completely
different route (one linear Laplace solve plus F^{-1}).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from heiscurves import grid as gridmod
from heiscurves.errors import LoopResidualError, ProfileDomainError
from heiscurves.grid import Grid, ScalarField
from heiscurves.profile import (
    ArclengthMap,
    CurveProfile,
    arclength_density,
    arclength_increment,
    r_coeff,
)

log = logging.getLogger(__name__)

DIRECT_LIMIT = 129


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    method: str
    converged: bool
    tolerance: float = float("nan")
    history: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def num(v):
            return float(v) if math.isfinite(v) else None

        return {
            "method": self.method,
            "converged": self.converged,
            "iterations": self.iterations,
            "final_residual": num(self.final_residual),
            "tolerance": num(self.tolerance),
            "history": [num(v) for v in self.history],
            **self.notes,
        }


@dataclass(frozen=True, eq=False)
class HarmonicCurve:
    """The fields (x, y, t) of f = (H(y), y, t) on a grid."""

    grid: Grid
    y: ScalarField
    x: ScalarField
    t: ScalarField
    profile: CurveProfile
    anchor: tuple
    t0: float
    loop_residual: float = 0.0

    @property
    def modulus(self) -> ScalarField:
        """|z| = sqrt(x^2 + y^2)."""
        return ScalarField(self.grid, np.hypot(self.x.values, self.y.values))


# -- boundary data ---------------------------------------------------------------


def boundary_field(grid: Grid, g) -> ScalarField:
    """Coerce boundary data (field, array or callable of coordinates) to a field."""
    if isinstance(g, ScalarField):
        if g.grid is not grid and g.grid.shape != grid.shape:
            raise ValueError("boundary field lives on a different grid")
        vals = g.values
    elif callable(g):
        return grid.node_field(g)
    else:
        vals = np.asarray(g, dtype=float)
    f = ScalarField(grid, vals)
    if not np.all(np.isfinite(f.boundary_values)):
        raise ValueError("boundary data must be finite on boundary nodes")
    return f


def _validity_window(prof, gb):
    lo, hi = float(gb.min()), float(gb.max())
    # 50% slack; the absolute floor keeps constant data from a zero-width window
    pad = max(0.5 * (hi - lo), 1e-6 * max(1.0, abs(lo), abs(hi)))
    lo, hi = lo - pad, hi + pad
    if not prof.contains(lo, hi):
        raise ProfileDomainError(
            f"profile validity {prof.validity} does not cover [{lo}, {hi}] "
            "(range of the boundary data with 50% slack)"
        )
    return lo, hi


# -- linear algebra --------------------------------------------------------------


def _linear_solve(A, b, grid, symmetric):
    # direct factorization pays off only in 1-d and 2-d; fill-in ruins it in 3-d
    if grid.n <= 2 and grid.size <= DIRECT_LIMIT**2:
        return spla.spsolve(A.tocsc(), b, permc_spec="MMD_AT_PLUS_A")
    if symmetric:
        # A is negative definite here; CG on -A with Jacobi preconditioner
        d = -A.diagonal()
        M = spla.LinearOperator(A.shape, matvec=lambda v: v / d)
        x, info = spla.cg(-A, -b, M=M, rtol=1e-13, maxiter=20 * A.shape[0])
    else:
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=20)
        M = spla.LinearOperator(A.shape, matvec=ilu.solve)
        x, info = spla.gmres(A, b, M=M, rtol=1e-13, restart=200, maxiter=200)
    if info != 0:
        log.warning("iterative linear solve did not reach tolerance (info=%s)", info)
    return x


def harmonic_extension(grid: Grid, g) -> ScalarField:
    """Discrete harmonic function with the given boundary values."""
    gf = boundary_field(grid, g)
    L = gridmod.laplacian_matrix(grid)
    inner = grid.interior.ravel()
    bvals = np.where(grid.boundary, gf.values, 0.0).ravel()
    rhs = -(L[:, ~inner] @ bvals[~inner])
    u = _linear_solve(L[:, inner], rhs, grid, symmetric=True)
    out = np.where(grid.boundary, gf.values, np.nan)
    out[grid.interior] = u
    return ScalarField(grid, out)


# -- nonlinear residual ----------------------------------------------------------


class _Stencil:
    """Index bookkeeping for interior nodes and their 2n neighbours."""

    def __init__(self, grid):
        self.grid = grid
        self.inner_flat = np.flatnonzero(grid.interior.ravel())
        self.m = self.inner_flat.size
        self.pos = np.full(grid.size, -1)
        self.pos[self.inner_flat] = np.arange(self.m)
        self.nbrs = []
        for k in range(grid.n):
            for off in (1, -1):
                self.nbrs.append((gridmod.neighbor_index(grid, k, off), 1.0 / grid.h[k] ** 2))


def _residual(st, prof, Y):
    """N(y) on interior nodes (interior order). Y is the flat full vector."""
    yi = Y[st.inner_flat]
    acc = np.zeros(st.m)
    for j, w in st.nbrs:
        acc += w * arclength_increment(prof, yi, Y[j])
    return acc / arclength_density(prof, yi)


def _jacobian(st, prof, Y, N):
    yi = Y[st.inner_flat]
    dens = arclength_density(prof, yi)
    rows, cols, vals = [], [], []
    diag = -sum(w for _, w in st.nbrs) - r_coeff(prof, yi) * N
    rows.append(np.arange(st.m))
    cols.append(np.arange(st.m))
    vals.append(diag)
    for j, w in st.nbrs:
        p = st.pos[j]
        keep = p >= 0
        rows.append(np.arange(st.m)[keep])
        cols.append(p[keep])
        vals.append(w * arclength_density(prof, Y[j][keep]) / dens[keep])
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(st.m, st.m))


def _picard_matrix(st, prof, Y):
    """Frozen secant weights: sum_j c_ij (y_j - y_i) = 0 with c_ij = A(y_i,y_j)/(y_j-y_i)/h^2."""
    yi = Y[st.inner_flat]
    rows, cols, vals = [], [], []
    diag = np.zeros(st.m)
    rhs = np.zeros(st.m)
    for j, w in st.nbrs:
        yj = Y[j]
        dy = yj - yi
        small = np.abs(dy) < 1e-13 * (1 + np.abs(yi))
        secant = np.where(small, arclength_density(prof, 0.5 * (yi + yj)),
                          arclength_increment(prof, yi, yj) / np.where(small, 1.0, dy))
        c = w * secant
        diag -= c
        p = st.pos[j]
        inner = p >= 0
        rows.append(np.arange(st.m)[inner])
        cols.append(p[inner])
        vals.append(c[inner])
        rhs -= np.where(inner, 0.0, c * yj)
    rows.append(np.arange(st.m))
    cols.append(np.arange(st.m))
    vals.append(diag)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(st.m, st.m))
    return A, rhs


def solve_y_newton(grid: Grid, g, prof: CurveProfile, tol: float = 1e-10, max_iter: int = 50,
                   picard_iters: int = 3, initial="harmonic"):
    """Solve the Dirichlet problem for y by damped Newton iteration.

    ``initial`` is "harmonic" (harmonic extension of g), "substitution", or
    a field. Up to ``picard_iters`` frozen-coefficient sweeps precede Newton.
    Returns (y, SolveReport); non-convergence is reported, not raised.
    """
    gf = boundary_field(grid, g)
    lo, hi = _validity_window(prof, gf.boundary_values)
    st = _Stencil(grid)

    if isinstance(initial, ScalarField):
        y0 = initial
    elif initial == "substitution":
        y0 = solve_y_substitution(grid, gf, prof)
    else:
        y0 = harmonic_extension(grid, gf)
    Y = np.where(grid.boundary, gf.values, y0.values).ravel().copy()
    Y[~grid.inset.ravel()] = 0.0

    def guard(Yc):
        yi = Yc[st.inner_flat]
        if yi.size and (yi.min() < lo or yi.max() > hi):
            raise ProfileDomainError(
                f"iterate left the admissible window [{lo}, {hi}]: range [{yi.min()}, {yi.max()}]"
            )

    guard(Y)
    history = []
    converged = False
    it = 0
    N = _residual(st, prof, Y) if st.m else np.zeros(0)
    res = float(np.max(np.abs(N))) if st.m else 0.0
    history.append(res)
    while res > tol and it < max_iter:
        it += 1
        if it <= picard_iters:
            A, rhs = _picard_matrix(st, prof, Y)
            Ynew = Y.copy()
            Ynew[st.inner_flat] = _linear_solve(A, rhs, grid, symmetric=True)
            guard(Ynew)
            Nnew = _residual(st, prof, Ynew)
            rnew = float(np.max(np.abs(Nnew)))
            if rnew < res:
                Y, N, res = Ynew, Nnew, rnew
                history.append(res)
                continue
            # no progress from the frozen sweep: go straight to Newton
            picard_iters = 0
        J = _jacobian(st, prof, Y, N)
        delta = _linear_solve(J, -N, grid, symmetric=False)
        lam = 1.0
        while True:
            Ynew = Y.copy()
            Ynew[st.inner_flat] += lam * delta
            try:
                guard(Ynew)
                Nnew = _residual(st, prof, Ynew)
                rnew = float(np.max(np.abs(Nnew)))
            except ProfileDomainError:
                rnew = math.inf
            if rnew < res or lam < 2.0**-20:
                break
            lam *= 0.5
        if not rnew < res:
            log.warning("line search stalled at residual %.3e", res)
            break
        Y, N, res = Ynew, Nnew, rnew
        history.append(res)
    converged = res <= tol
    out = np.where(grid.inset.ravel(), Y, np.nan).reshape(grid.shape)
    report = SolveReport(it, res, "newton", converged, tol, history)
    return ScalarField(grid, out), report


def nonlinear_residual(y: ScalarField, prof: CurveProfile) -> np.ndarray:
    """The discrete residual N(y) on interior nodes (C order)."""
    st = _Stencil(y.grid)
    Y = np.where(y.grid.inset, y.values, 0.0).ravel()
    return _residual(st, prof, Y)


def solve_y_substitution(grid: Grid, g, prof: CurveProfile) -> ScalarField:
    """Arclength substitution: F(y) is harmonic, so solve Lap_h v = 0 with
    v = F(g) on the boundary and return y = F^{-1}(v)."""
    gf = boundary_field(grid, g)
    gb = gf.boundary_values
    _validity_window(prof, gb)
    lo, hi = float(gb.min()), float(gb.max())
    if hi == lo:
        return ScalarField(grid, np.where(grid.inset, lo, np.nan))
    fmap = ArclengthMap(prof, lo, hi, s0=lo)
    vb = np.where(grid.boundary, 0.0, np.nan)
    vb[grid.boundary] = fmap.F(gb)
    v = harmonic_extension(grid, ScalarField(grid, vb))
    out = np.where(grid.boundary, gf.values, np.nan)
    out[grid.interior] = fmap.F_inv(v.interior_values)
    return ScalarField(grid, out)


def solve_y(grid: Grid, g, prof: CurveProfile, method: str = "newton", tol: float = 1e-10,
            max_iter: int = 50):
    """Dispatch on ``method`` in {"newton", "substitution", "both"}.

    For "both" the Newton field is returned and the report carries the
    max-norm discrepancy to the substitution field.
    """
    if method == "substitution":
        y = solve_y_substitution(grid, g, prof)
        res = float(np.max(np.abs(nonlinear_residual(y, prof)))) if grid.interior.any() else 0.0
        return y, SolveReport(0, res, "substitution", True, tol, [res])
    y, rep = solve_y_newton(grid, g, prof, tol=tol, max_iter=max_iter)
    if method == "both":
        ys = solve_y_substitution(grid, g, prof)
        rep.notes["newton_vs_substitution"] = float(np.nanmax(np.abs(y.values - ys.values)))
    elif method != "newton":
        raise ValueError(f"unknown method {method!r}")
    return y, rep


# -- vertical component ------------------------------------------------------------


def _edge_increments(grid, x, y, axis):
    """Trapezoid values of the contact one-form 2(y dx - x dy) on the edges
    (i, i + e_axis); NaN where an endpoint is outside."""
    xp = gridmod._shift(x, axis, 1, np.nan)
    yp = gridmod._shift(y, axis, 1, np.nan)
    return (y + yp) * (xp - x) - (x + xp) * (yp - y)


def contact_loop_residual(grid: Grid, x: ScalarField, y: ScalarField) -> float:
    """Max over elementary lattice squares of the circulation of 2(y dx - x dy).

    The circulation around a cell equals four times the signed area of the
    image quadrilateral in the (x, y) plane, i.e. the discrete isotropy minor
    times 4 h_a h_b; it vanishes to high order when x = H(y).
    """
    xv, yv = x.values, y.values
    worst = 0.0
    for a in range(grid.n):
        for b in range(a + 1, grid.n):
            da = _edge_increments(grid, xv, yv, a)
            db = _edge_increments(grid, xv, yv, b)
            loop = da + gridmod._shift(db, a, 1, np.nan) - gridmod._shift(da, b, 1, np.nan) - db
            if np.any(np.isfinite(loop)):
                worst = max(worst, float(np.nanmax(np.abs(loop))))
    return worst


def _default_anchor(grid):
    idx = np.flatnonzero(grid.boundary.ravel())
    idx = idx if idx.size else np.flatnonzero(grid.inset.ravel())
    return tuple(int(i) for i in np.unravel_index(idx[0], grid.shape))


def recover_t(grid: Grid, y: ScalarField, prof: CurveProfile, anchor=None, t0: float = 0.0,
              x: ScalarField | None = None, loop_tol: float = 0.1) -> ScalarField:
    """Integrate grad t = 2(y grad x - x grad y) from ``anchor`` with t(anchor) = t0.

    Each lattice edge contributes the trapezoid value
    (y_i + y_j)(x_j - x_i) - (x_i + x_j)(y_j - y_i). On rectangles the path
    to a node is the staircase along axis 0, then 1, then 2; otherwise the
    breadth-first spanning tree from the anchor. With x = H(y) the increment
    reduces to the trapezoid rule for 2(s H'(s) - H(s)) ds along the edge.

    ``loop_tol`` bounds the cell circulation relative to
    4 h_a h_b max|grad x| max|grad y|; above it x and y are not isotropic and
    ``LoopResidualError`` is raised.
    """
    gridmod.check_connected(grid)
    anchor = _default_anchor(grid) if anchor is None else tuple(int(i) for i in anchor)
    if not grid.inset[anchor]:
        raise ValueError(f"anchor {anchor} is outside the domain")
    xf = ScalarField(grid, prof.H(np.where(grid.inset, y.values, 0.0))) if x is None else x
    xv, yv = xf.values, y.values

    if loop_tol is not None and grid.n > 1:
        loop = contact_loop_residual(grid, xf, y)
        gx = max(float(np.nanmax(np.abs(c.values))) for c in gridmod.gradient(xf))
        gy = max(float(np.nanmax(np.abs(c.values))) for c in gridmod.gradient(y))
        cell = min(grid.h[a] * grid.h[b] for a in range(grid.n) for b in range(a + 1, grid.n))
        scale = 4.0 * cell * gx * gy
        # round-off floor: each circulation sums eight products of field values
        mag = float(np.nanmax(np.abs(xv[grid.inset]))) + float(np.nanmax(np.abs(yv[grid.inset])))
        floor = 64.0 * np.finfo(float).eps * mag * mag
        if loop > loop_tol * scale + floor:
            raise LoopResidualError(
                f"cell circulation {loop:.3e} exceeds {loop_tol} x {scale:.3e}; "
                "the horizontal fields are not isotropic"
            )

    t = np.full(grid.shape, np.nan)
    if grid.domain.get("kind") == "rectangle":
        incs = [_edge_increments(grid, xv, yv, k) for k in range(grid.n)]
        # cumulative integral along each axis, starting at index 0
        cum = []
        for k in range(grid.n):
            pad = [(0, 0)] * grid.n
            pad[k] = (1, 0)
            c = np.cumsum(np.take(incs[k], range(grid.shape[k] - 1), axis=k), axis=k)
            cum.append(np.pad(c, pad))
        idx = np.indices(grid.shape)
        total = np.zeros(grid.shape)
        # staircase: axis 0 at the anchor's other coordinates, then axis 1, ...
        for k in range(grid.n):
            sel = []
            for j in range(grid.n):
                if j < k:
                    sel.append(idx[j])
                elif j == k:
                    sel.append(None)
                else:
                    sel.append(np.full(grid.shape, anchor[j]))
            here = tuple(idx[k] if s is None else s for s in sel)
            start = tuple(np.full(grid.shape, anchor[k]) if s is None else s for s in sel)
            total += cum[k][here] - cum[k][start]
        t = t0 + total
    else:
        order, parent = gridmod.bfs_tree(grid, anchor)
        tf = np.full(grid.size, np.nan)
        xs, ys = xv.ravel(), yv.ravel()
        tf[order[0]] = t0
        for i in order[1:]:
            p = parent[i]
            tf[i] = tf[p] + (ys[p] + ys[i]) * (xs[i] - xs[p]) - (xs[p] + xs[i]) * (ys[i] - ys[p])
        t = tf.reshape(grid.shape)
    return ScalarField(grid, np.where(grid.inset, t, np.nan))


def assemble_curve(grid: Grid, y: ScalarField, prof: CurveProfile, anchor=None, t0: float = 0.0,
                   loop_tol: float = 0.1) -> HarmonicCurve:
    anchor = _default_anchor(grid) if anchor is None else tuple(int(i) for i in anchor)
    x = ScalarField(grid, prof.H(np.where(grid.inset, y.values, 0.0)))
    t = recover_t(grid, y, prof, anchor, t0, x=x, loop_tol=loop_tol)
    loop = contact_loop_residual(grid, x, y) if grid.n > 1 else 0.0
    return HarmonicCurve(grid, y, x, t, prof, anchor, float(t0), loop)


def solve_curve(grid: Grid, g, prof: CurveProfile, method: str = "newton", tol: float = 1e-10,
                max_iter: int = 50, anchor=None, t0: float = 0.0):
    y, rep = solve_y(grid, g, prof, method=method, tol=tol, max_iter=max_iter)
    return assemble_curve(grid, y, prof, anchor, t0), rep


# -- energy and residuals ----------------------------------------------------------


def energy(curve: HarmonicCurve) -> float:
    """E^2 = int (1 + H'(y)^2) |grad y|^2."""
    g = curve.grid
    yv = np.where(g.inset, curve.y.values, 0.0)
    dens = (1.0 + curve.profile.dH(yv) ** 2) * gridmod.grad_sq(curve.y).values
    return gridmod.integrate(ScalarField(g, dens))


def el_residual_strong(curve: HarmonicCurve) -> float:
    """max over gamma and interior nodes of |div F_gamma| with
    div F_gamma = -2 (Lap x d_gamma x + Lap y d_gamma y); x and y are
    differenced independently."""
    g = curve.grid
    if not g.interior.any():
        return 0.0
    lx, ly = gridmod.laplacian(curve.x).values, gridmod.laplacian(curve.y).values
    gx, gy = gridmod.gradient(curve.x), gridmod.gradient(curve.y)
    worst = 0.0
    for k in range(g.n):
        div = -2.0 * (lx * gx[k].values + ly * gy[k].values)
        worst = max(worst, float(np.max(np.abs(div[g.interior]))))
    return worst


def _bump(grid, center, width):
    """(1 - u^2)^3 product bump and its gradient, u = (x - c)/w, on the lattice."""
    X = grid.coords()
    factors, dfactors = [], []
    for k in range(grid.n):
        u = (X[k] - center[k]) / width[k]
        inside = np.abs(u) < 1.0
        one = np.where(inside, 1.0 - u * u, 0.0)
        factors.append(one**3)
        dfactors.append(np.where(inside, -6.0 * u * one**2 / width[k], 0.0))
    xi = np.prod(factors, axis=0)
    grad = []
    for k in range(grid.n):
        gk = dfactors[k]
        for j in range(grid.n):
            if j != k:
                gk = gk * factors[j]
        grad.append(gk)
    return xi, grad


def _sample_bumps(grid, num, rng, max_tries=2000):
    out = []
    lo = np.array([b[0] for b in grid.bbox])
    hi = np.array([b[1] for b in grid.bbox])
    ext = hi - lo
    X = grid.coords()
    tries = 0
    while len(out) < num and tries < max_tries:
        tries += 1
        w = rng.uniform(0.1, 0.35, size=grid.n) * ext
        c = rng.uniform(lo + w, hi - w)
        support = np.ones(grid.shape, dtype=bool)
        for k in range(grid.n):
            support &= np.abs(X[k] - c[k]) < w[k]
        if support.any() and np.all(grid.interior[support]):
            out.append((c, w))
    if len(out) < num:
        raise ValueError("could not place test bumps inside the domain")
    return out


def el_residual_weak(curve: HarmonicCurve, num_tests: int = 20, seed=0) -> float:
    """Weak Euler-Lagrange residual against random compactly supported bumps.

    For each test function xi and direction gamma this evaluates
    int sum_beta (delta_{gamma beta} |grad z|^2 - 2 (d_beta z . d_gamma z)) d_beta xi
    by trapezoid quadrature and divides by max|grad xi| * E^2(f).
    """
    g = curve.grid
    e2 = energy(curve)
    if e2 == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    gx = [c.values for c in gridmod.gradient(curve.x)]
    gy = [c.values for c in gridmod.gradient(curve.y)]
    A = sum(gx[k] ** 2 + gy[k] ** 2 for k in range(g.n))
    worst = 0.0
    for c, w in _sample_bumps(g, num_tests, rng):
        _, dxi = _bump(g, c, w)
        gnorm = float(np.max(np.sqrt(sum(d**2 for d in dxi))))
        for gam in range(g.n):
            integrand = A * dxi[gam]
            for b in range(g.n):
                integrand = integrand - 2.0 * (gx[b] * gx[gam] + gy[b] * gy[gam]) * dxi[b]
            val = gridmod.integrate(ScalarField(g, np.where(g.inset, integrand, np.nan)))
            worst = max(worst, abs(val) / (gnorm * e2))
    return worst


def isotropy_residual(curve: HarmonicCurve) -> float:
    """max |d_a x d_b y - d_b x d_a y| over interior nodes and pairs a < b,
    with x and y differenced independently."""
    g = curve.grid
    if g.n < 2 or not g.interior.any():
        return 0.0
    gx = [c.values for c in gridmod.gradient(curve.x)]
    gy = [c.values for c in gridmod.gradient(curve.y)]
    worst = 0.0
    for a in range(g.n):
        for b in range(a + 1, g.n):
            m = gx[a] * gy[b] - gx[b] * gy[a]
            worst = max(worst, float(np.max(np.abs(m[g.interior]))))
    return worst
