"""Numerical certification of estimates and comparison results on solved curves.

Every check returns a :class:`CheckResult`. Checks whose hypothesis on H is
not met on the range of the solved field are returned *skipped*, never
failed; the verdict consulted is kept in the result metadata. Violated
preconditions on the data (for example unordered boundary values) raise
:class:`PreconditionError`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from heiscurves import grid as gridmod
from heiscurves import solver
from heiscurves.errors import ConfigError, HeisError, PreconditionError
from heiscurves.grid import Grid, ScalarField, build_grid
from heiscurves.profile import Condition, CurveProfile, check_condition, r_coeff

SOLVER_TOL = 1e-10


def _num(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else None


def _clean(obj):
    """Recursively convert metadata to plain JSON types (NaN/inf -> null)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, str) or obj is None:
        return obj
    if isinstance(obj, (bool, np.bool_, int, float, np.integer, np.floating)):
        return _num(obj)
    return str(obj)


@dataclass
class CheckResult:
    check_id: str
    passed: bool
    lhs: float = float("nan")
    rhs: float = float("nan")
    margin: float = float("nan")
    tolerance: float = float("nan")
    metadata: dict = field(default_factory=dict)
    skipped: bool = False

    @classmethod
    def skip(cls, check_id, reason, tolerance=float("nan"), **meta):
        return cls(check_id, False, tolerance=tolerance, metadata={"reason": reason, **meta}, skipped=True)

    @property
    def failed(self) -> bool:
        return not self.passed and not self.skipped and "error" not in self.metadata

    @property
    def errored(self) -> bool:
        return "error" in self.metadata

    def to_dict(self) -> dict:
        return {
            "check": self.check_id,
            "passed": bool(self.passed),
            "skipped": bool(self.skipped),
            "lhs": _num(self.lhs),
            "rhs": _num(self.rhs),
            "margin": _num(self.margin),
            "tolerance": _num(self.tolerance),
            "metadata": _clean(self.metadata),
        }


@dataclass
class VerificationReport:
    curve: dict
    results: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)

    @property
    def any_failed(self) -> bool:
        return any(r.failed for r in self.results)

    @property
    def any_error(self) -> bool:
        return any(r.errored for r in self.results)

    def to_dict(self) -> dict:
        return {
            "curve": _clean(self.curve),
            "checks": [r.to_dict() for r in self.results],
            "verdicts": [_clean(v) for v in self.verdicts],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# -- helpers ------------------------------------------------------------------------


def field_range(f: ScalarField, pad: float = SOLVER_TOL) -> tuple:
    v = f.on(f.grid.inset)
    return float(v.min()) - pad, float(v.max()) + pad


def _verdict(prof, cid, f_or_range, C=None):
    rng = field_range(f_or_range) if isinstance(f_or_range, ScalarField) else f_or_range
    return check_condition(prof, cid, rng, C=C)


def ball_inside(grid: Grid, center, radius: float) -> bool:
    """True if the closed ball lies in the box and every lattice node of it is in the domain."""
    if not grid.contains_ball(center, radius):
        return False
    near = grid.distance(center) <= radius * (1 + 1e-12)
    return bool(np.all(grid.inset[near]))


def interior_core(grid: Grid, fraction: float) -> np.ndarray:
    """In-nodes at Euclidean distance >= fraction * (smallest box side) from
    every boundary or outside node."""
    delta = fraction * min(hi - lo for lo, hi in grid.bbox)
    d = ndimage.distance_transform_edt(grid.interior, sampling=grid.h)
    return grid.interior & (d >= delta * (1 - 1e-12))


def _dirichlet_density(curve) -> ScalarField:
    g = curve.grid
    return ScalarField(g, gridmod.grad_sq(curve.x).values + gridmod.grad_sq(curve.y).values)


def _grid_meta(grid):
    return {"shape": list(grid.shape), "h": list(grid.h), "domain": grid.domain}


# -- Caccioppoli and Liouville --------------------------------------------------------


def _eta_grad_sq(grid, rho, center):
    d = grid.distance(center)
    return np.where((d > rho) & (d < 2 * rho), 1.0 / rho**2, 0.0)


def caccioppoli_check(curve, rho: float, center=None, tolerance: float = 1e-6) -> CheckResult:
    """int |grad y|^2 eta^2 <= 4/(1-mu)^2 int |grad eta|^2 y^2 with the radial cutoff."""
    g = curve.grid
    cid = "caccioppoli"
    center = _default_center(g) if center is None else center
    v = _verdict(curve.profile, Condition.CACCIOPPOLI_MU, curve.y)
    meta = {"rho": rho, "center": list(np.atleast_1d(center)), "verdict": v.to_dict(), **_grid_meta(g)}
    if not v.holds:
        return CheckResult.skip(cid, f"mu = {v.value:.6g} >= 1 on the range of y", tolerance, **meta)
    if not ball_inside(g, center, 2 * rho):
        raise PreconditionError(f"B(center, 2 rho = {2 * rho}) is not inside the domain")
    mu = v.value
    C = 4.0 / (1.0 - mu) ** 2
    eta = gridmod.cutoff_eta(g, rho, center).values
    lhs = gridmod.integrate(ScalarField(g, gridmod.grad_sq(curve.y).values * eta**2))
    integral = gridmod.integrate(ScalarField(g, _eta_grad_sq(g, rho, center) * curve.y.values**2))
    rhs = C * integral
    ratio = lhs / integral if integral > 0 else (0.0 if lhs == 0 else math.inf)
    meta.update(mu=mu, constant=C, ratio=ratio)
    return CheckResult(cid, bool(lhs <= rhs * (1 + tolerance)), lhs, rhs, rhs - lhs, tolerance, meta)


def liouville_decay_experiment(prof: CurveProfile, data_family, rho_list, center=None, n: int = 2,
                               shape: int = 65, tolerance: float = 1e-6) -> CheckResult:
    """Solve each boundary datum on the ball of radius 2 max(rho) and check
    int_{B_rho} |grad y|^2 <= C(mu) ||y||_inf^2 int |grad eta_rho|^2 at every rho.

    Also reports the fitted log-log slope of D(rho) = int_{B_rho} |grad y|^2.
    """
    cid = "liouville"
    rho_list = sorted(float(r) for r in rho_list)
    if not rho_list or rho_list[0] <= 0:
        raise PreconditionError("rho_list must contain positive radii")
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    R = 2.0 * rho_list[-1]
    g = build_grid("ball", [(ci - R, ci + R) for ci in c], [shape] * n, center=c, radius=R)
    members, worst, all_pass = [], -math.inf, True
    for idx, data in enumerate(data_family):
        y, rep = solver.solve_y(g, data, prof, tol=SOLVER_TOL)
        v = _verdict(prof, Condition.CACCIOPPOLI_MU, y)
        entry = {"member": idx, "verdict": v.to_dict(), "converged": rep.converged}
        if not v.holds:
            entry["skipped"] = "mu >= 1 on the range of y"
            members.append(entry)
            continue
        C = 4.0 / (1.0 - v.value) ** 2
        ymax = float(np.max(np.abs(y.on(g.inset))))
        dens = gridmod.grad_sq(y)
        D, bound = [], []
        for rho in rho_list:
            D.append(gridmod.integrate(dens, g.ball_mask(c, rho)))
            bound.append(C * ymax**2 * gridmod.integrate(ScalarField(g, _eta_grad_sq(g, rho, c))))
        ok = [d <= b * (1 + tolerance) for d, b in zip(D, bound)]
        all_pass &= all(ok)
        worst = max(worst, max(d / b if b > 0 else (0.0 if d == 0 else math.inf) for d, b in zip(D, bound)))
        slope = None
        if len(rho_list) > 1 and min(D) > 0:
            slope = float(np.polyfit(np.log(rho_list), np.log(D), 1)[0])
        entry.update(mu=v.value, constant=C, sup_abs_y=ymax, D=D, bound=bound, slope=slope)
        members.append(entry)
    meta = {"rho_list": rho_list, "ball_radius": R, "members": members, **_grid_meta(g)}
    evaluated = [m for m in members if "skipped" not in m]
    if not evaluated:
        return CheckResult.skip(cid, "no family member satisfies the mu < 1 hypothesis", tolerance, **meta)
    return CheckResult(cid, bool(all_pass), worst, 1.0, 1.0 - worst, tolerance, meta)


# -- monotonicity and superharmonicity --------------------------------------------------


def monotonicity_check(curve, center=None, radii=(0.2, 0.3, 0.4), tolerance=None) -> CheckResult:
    """r^{2-n} int_{B_r} |grad z|^2 should be nondecreasing in r."""
    g = curve.grid
    cid = "monotonicity"
    center = _default_center(g) if center is None else center
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise PreconditionError("radii must be strictly ascending")
    for r in radii:
        if not ball_inside(g, center, r):
            raise PreconditionError(f"ball of radius {r} is not inside the domain")
    tol = 10.0 * g.hmax**2 if tolerance is None else float(tolerance)
    dens = _dirichlet_density(curve)
    vals = [r ** (2 - g.n) * gridmod.integrate(dens, g.ball_mask(center, r)) for r in radii]
    drops = [a - b for a, b in zip(vals, vals[1:])]
    worst = max(drops) if drops else -math.inf
    meta = {"radii": radii, "values": vals, "center": list(np.atleast_1d(center)), **_grid_meta(g)}
    if g.n == 2:
        meta["note"] = "n = 2: exponent 2 - n = 0, plain nondecrease of the ball energy"
    lhs = vals[-1] if vals else 0.0
    margin = tol - worst if drops else tol
    return CheckResult(cid, bool(margin >= 0), lhs, vals[0] if vals else 0.0, margin, tol, meta)


def modulus_operator(curve) -> ScalarField:
    """Discrete |z| Lap|z| + |grad |z||^2 on interior nodes (equals Lap(|z|^2)/2)."""
    u = curve.modulus
    lap = gridmod.laplacian(u).values
    return ScalarField(curve.grid, u.values * lap + gridmod.edge_grad_sq(u).values)


def modulus_identity(curve) -> ScalarField:
    """(s - q r) |grad y|^2 with q = H'(y) H(y) + y, s = H(y) H''(y) + H'(y)^2 + 1."""
    g = curve.grid
    p = curve.profile
    yv = np.where(g.inset, curve.y.values, 0.0)
    h0, h1, h2 = p.H(yv), p.dH(yv), p.d2H(yv)
    q = h1 * h0 + yv
    s = h0 * h2 + h1 * h1 + 1.0
    val = (s - q * r_coeff(p, yv)) * gridmod.grad_sq(curve.y).values
    return ScalarField(g, np.where(g.interior, val, np.nan))


def superharmonicity_check(curve, zero_threshold: float = 1e-6, tolerance: float = 1e-6,
                           core_fraction: float = 0.125) -> CheckResult:
    """Discrete |z| Lap|z| + |grad |z||^2 >= -tolerance where |z| > zero_threshold.

    The identity cross-check against (s - q r)|grad y|^2 is reported on all
    checked nodes and on the core at distance >= core_fraction * (smallest box
    side) from the boundary, where the O(h^2) rate is not polluted by the
    boundary layer.
    """
    g = curve.grid
    cid = "superharmonicity"
    v = _verdict(curve.profile, Condition.SUPERHARM, curve.y)
    meta = {"verdict": v.to_dict(), "zero_threshold": zero_threshold, **_grid_meta(g)}
    if not v.holds:
        return CheckResult.skip(cid, "H''(H - s H') >= 0 fails on the range of y", tolerance, **meta)
    Q = modulus_operator(curve).values
    sel = g.interior & (curve.modulus.values > zero_threshold)
    ident = modulus_identity(curve).values
    meta["skipped_nodes"] = int(np.count_nonzero(g.interior & ~sel))
    meta["checked_nodes"] = int(np.count_nonzero(sel))
    if not sel.any():
        return CheckResult(cid, True, 0.0, -tolerance, tolerance, tolerance, meta)
    lhs = float(Q[sel].min())
    err = np.abs(Q - ident)
    meta["identity_error"] = float(np.max(err[sel]))
    core = sel & interior_core(g, core_fraction)
    meta["identity_error_core"] = float(np.max(err[core])) if core.any() else None
    return CheckResult(cid, bool(lhs >= -tolerance), lhs, -tolerance, lhs + tolerance, tolerance, meta)


def moduli_comparison_check(curve_f, curve_g, tolerance: float = 1e-8, zero_threshold: float = 1e-6,
                            sign_tolerance: float = 1e-6) -> CheckResult:
    """|z(f)| <= |z(g)| on the boundary propagates inside when |z(f)| is a
    subsolution and |z(g)| a supersolution of Lap u + |grad u|^2/u."""
    cid = "moduli_comparison"
    g = curve_f.grid
    if curve_g.grid.shape != g.shape or not np.array_equal(curve_g.grid.mask, g.mask):
        raise PreconditionError("curves live on different grids")
    uf, ug = curve_f.modulus.values, curve_g.modulus.values
    if min(uf[g.inset].min(), ug[g.inset].min()) <= zero_threshold:
        raise PreconditionError("|z| vanishes somewhere in the domain")
    bviol = float(np.max(uf[g.boundary] - ug[g.boundary]))
    if bviol > tolerance:
        raise PreconditionError(f"boundary ordering |z(f)| <= |z(g)| violated by {bviol:.3g}")
    Qf, Qg = modulus_operator(curve_f).values, modulus_operator(curve_g).values
    qf_min = float(Qf[g.interior].min()) if g.interior.any() else 0.0
    qg_max = float(Qg[g.interior].max()) if g.interior.any() else 0.0
    meta = {"min_Q_f": qf_min, "max_Q_g": qg_max, "boundary_violation": bviol, **_grid_meta(g)}
    if qf_min < -sign_tolerance or qg_max > sign_tolerance:
        return CheckResult.skip(cid, "sub/supersolution hypotheses on |z(f)|, |z(g)| not met", tolerance, **meta)
    diff = float(np.max(uf[g.inset] - ug[g.inset]))
    return CheckResult(cid, bool(diff <= tolerance), diff, 0.0, -diff, tolerance, meta)


# -- comparison, maximum principle, Harnack -----------------------------------------------


def _ordering(a, b, where, tol):
    """+1 if a <= b on ``where``, -1 if a >= b, 0 if neither (within tol)."""
    d = a[where] - b[where]
    if d.max() <= tol:
        return 1
    if d.min() >= -tol:
        return -1
    return 0


def comparison_check(prof: CurveProfile, grid: Grid, g1, g2, tolerance: float = 1e-8, anchor=None,
                     t0: float = 0.0, max_iter: int = 50) -> CheckResult:
    """Ordered boundary data give ordered y; x and t inherit their boundary
    ordering when the matching hypothesis on H holds."""
    cid = "comparison"
    b1 = solver.boundary_field(grid, g1).values
    b2 = solver.boundary_field(grid, g2).values
    bviol = float(np.max(b1[grid.boundary] - b2[grid.boundary]))
    if bviol > 0:
        raise PreconditionError(f"boundary data not ordered: g1 - g2 reaches {bviol:.3g}")
    c1, r1 = solver.solve_curve(grid, g1, prof, tol=SOLVER_TOL, max_iter=max_iter, anchor=anchor, t0=t0)
    c2, r2 = solver.solve_curve(grid, g2, prof, tol=SOLVER_TOL, max_iter=max_iter, anchor=anchor, t0=t0)
    lo = min(c1.y.min(), c2.y.min()) - SOLVER_TOL
    hi = max(c1.y.max(), c2.y.max()) + SOLVER_TOL
    vy = check_condition(prof, Condition.COMPARISON_Y, (lo, hi))
    meta = {"verdict_y": vy.to_dict(), "converged": [r1.converged, r2.converged],
            "sup_abs_y_diff": float(np.max(np.abs(c1.y.on(grid.inset) - c2.y.on(grid.inset)))),
            **_grid_meta(grid)}
    if not vy.holds:
        return CheckResult.skip(cid, "comparison hypothesis for y fails on the joint range", tolerance, **meta)
    ins = grid.inset
    worst = float(np.max(c1.y.values[ins] - c2.y.values[ins]))
    comps = {"y": worst}
    for name, cond, f1, f2 in (("x", Condition.SIGN_Hp_NONPOS, c1.x, c2.x),
                               ("t", Condition.COMPARISON_T, c1.t, c2.t)):
        v = check_condition(prof, cond, (lo, hi))
        meta[f"verdict_{name}"] = v.to_dict()
        if not v.holds:
            meta[f"{name}_status"] = "hypothesis unmet"
            continue
        sgn = _ordering(f1.values, f2.values, grid.boundary, tolerance)
        if sgn == 0:
            meta[f"{name}_status"] = "boundary values not ordered"
            continue
        meta[f"{name}_status"] = "checked, boundary order " + ("<=" if sgn > 0 else ">=")
        comps[name] = float(np.max(sgn * (f1.values[ins] - f2.values[ins])))
    meta["violations"] = comps
    worst = max(comps.values())
    return CheckResult(cid, bool(worst <= tolerance), worst, 0.0, -worst, tolerance, meta)


def strong_max_check(curve, C: float, tolerance: float = 1e-8) -> CheckResult:
    g = curve.grid
    cid = "strong_max"
    v = _verdict(curve.profile, Condition.STRONG_MAX, curve.y, C=C)
    meta = {"verdict": v.to_dict(), "C": C, **_grid_meta(g)}
    if not v.holds:
        return CheckResult.skip(cid, f"sup |r| >= C = {C} on the range of y", tolerance, **meta)
    yv = curve.y.values
    bmax = float(yv[g.boundary].max())
    imax = float(yv[g.interior].max()) if g.interior.any() else -math.inf
    meta.update(interior_max=imax, boundary_max=bmax)
    spread = {k: float(np.ptp(f.values[g.inset])) for k, f in (("y", curve.y), ("x", curve.x), ("t", curve.t))}
    if spread["y"] <= tolerance:
        meta["branch"] = "constant"
        meta["spread"] = spread
        ok = spread["x"] <= tolerance and spread["t"] <= tolerance
        return CheckResult(cid, bool(ok), spread["y"], tolerance, tolerance - max(spread.values()), tolerance, meta)
    meta["branch"] = "boundary maximum"
    return CheckResult(cid, bool(imax <= bmax + tolerance), imax, bmax, bmax + tolerance - imax, tolerance, meta)


def _harnack_constant(f, grid, balls):
    worst = 1.0
    for center, radius in balls:
        sel = grid.ball_mask(center, radius)
        v = f.values[sel]
        worst = max(worst, float(v.max() / v.min()))
    return worst


def harnack_check(curve, balls, tolerance: float = 1e-8, refined=None, stability: float = 0.2) -> CheckResult:
    """max over balls of sup/inf for every positive component, and its
    relative change under one refinement when ``refined`` is given."""
    g = curve.grid
    cid = "harnack"
    balls = [(np.atleast_1d(np.asarray(c, dtype=float)), float(r)) for c, r in balls]
    if not balls:
        raise PreconditionError("no balls given")
    for c, r in balls:
        if not ball_inside(g, c, r):
            raise PreconditionError(f"ball ({c.tolist()}, {r}) is not inside the domain")
    if curve.y.on(g.inset).min() <= tolerance:
        raise PreconditionError("y is not positive on the domain")
    bound = float(np.max(np.abs(r_coeff(curve.profile, curve.y.on(g.inset)))))
    meta = {"balls": [[c.tolist(), r] for c, r in balls], "sup_abs_r": bound, **_grid_meta(g)}
    consts, changes = {}, {}
    for name in ("y", "x", "t"):
        f = getattr(curve, name)
        if f.on(g.inset).min() <= tolerance:
            meta[f"{name}_status"] = "not positive, skipped"
            continue
        c = _harnack_constant(f, g, balls)
        consts[name] = c
        if refined is not None:
            fr = getattr(refined, name)
            if fr.on(refined.grid.inset).min() <= tolerance:
                meta[f"{name}_status"] = "refined field not positive"
                continue
            cr = _harnack_constant(fr, refined.grid, balls)
            changes[name] = abs(cr - c) / c
            meta[f"{name}_refined"] = cr
    meta["constants"] = consts
    meta["relative_change"] = changes
    if refined is None:
        meta["note"] = "no refined curve supplied; only finiteness asserted"
    worst_change = max(changes.values()) if changes else 0.0
    ok = all(math.isfinite(c) for c in consts.values()) and worst_change <= stability
    return CheckResult(cid, bool(ok), consts["y"], stability, stability - worst_change, stability, meta)


# -- unbounded domains: half-ball exhaustion ------------------------------------------------


def phragmen_lindelof_check(prof: CurveProfile, data=None, alpha: float = 2.0, L: int = 8,
                            nodes_per_unit: int = 8, tolerance: float = 0.2, n: int = 2,
                            sign_tolerance: float = 1e-8) -> CheckResult:
    """Half-balls of radius l = 1..L about the origin in {x_n > 0}; reports
    R_l = max over nodes within h of the arc |x| = l of y / |x|^alpha."""
    cid = "phragmen_lindelof"
    if not 0 <= alpha <= 2:
        raise PreconditionError("alpha must lie in [0, 2]")
    if L < 1:
        raise PreconditionError("L must be a positive integer")
    if data is None:
        data = lambda *X: X[-1]  # noqa: E731
    bbox = [(-float(L), float(L))] * (n - 1) + [(0.0, float(L))]
    shape = [2 * L * nodes_per_unit + 1] * (n - 1) + [L * nodes_per_unit + 1]
    g = build_grid("halfball", bbox, shape, center=np.zeros(n), radius=float(L), axis=n - 1)
    gb = solver.boundary_field(g, data)
    flat = g.flat_boundary()
    if flat.any() and gb.values[flat].max() > 0:
        raise PreconditionError("boundary data positive on the flat part of the boundary")
    y, rep = solver.solve_y(g, data, prof, tol=SOLVER_TOL)
    v = _verdict(prof, Condition.SIGN_HpHpp, y)
    meta = {"alpha": alpha, "L": L, "verdict": v.to_dict(), "converged": rep.converged, **_grid_meta(g)}
    if not v.holds:
        return CheckResult.skip(cid, "H' H'' <= 0 fails on the range of y", tolerance, **meta)
    ymax = float(y.max())
    meta["sup_y"] = ymax
    if ymax <= sign_tolerance:
        meta["branch"] = "nonpositive"
        return CheckResult(cid, True, ymax, sign_tolerance, sign_tolerance - ymax, tolerance, meta)
    d = g.distance(np.zeros(n))
    top = g.coords()[n - 1] > 1e-12
    R = []
    for l in range(1, L + 1):
        band = g.sphere_band(np.zeros(n), float(l)) & top
        R.append(float(np.max(y.values[band] / d[band] ** alpha)))
    meta["R"] = R
    steps = [b - a for a, b in zip(R, R[1:])]
    monotone = all(s <= 1e-12 * max(1.0, abs(a)) for s, a in zip(steps, R))
    meta["branch"] = "growth"
    meta["nonincreasing"] = monotone
    if not monotone or R[-1] > tolerance:
        meta["note"] = ("y is positive somewhere, so the dichotomy requires the growth ratio to decay; "
                        "it does not at this alpha")
    ok = monotone and R[-1] <= tolerance
    return CheckResult(cid, bool(ok), R[-1], tolerance, tolerance - R[-1], tolerance, meta)


# -- three spheres and isotropy ---------------------------------------------------------


def three_spheres_check(curve, center=None, r1: float = 0.5, r: float = 0.75, r2: float = 1.0,
                        tolerance=None) -> CheckResult:
    """M(r) <= M(r1) w1 + M(r2) w2 with weights linear in r^{2-n}."""
    g = curve.grid
    cid = "three_spheres"
    tol = 10.0 * g.hmax if tolerance is None else float(tolerance)
    if g.n != 3:
        return CheckResult.skip(cid, f"defined for n = 3 only (n = {g.n})", tol)
    if not 0 < r1 < r < r2:
        raise PreconditionError(f"need 0 < r1 < r < r2, got {r1}, {r}, {r2}")
    center = _default_center(g) if center is None else center
    dist = g.distance(center)
    ring = (dist >= r1 * (1 - 1e-12)) & (dist <= r2 * (1 + 1e-12))
    if not g.contains_ball(center, r2) or not np.all(g.inset[ring]):
        raise PreconditionError("annulus is not inside the domain")
    p = 2 - g.n
    w1 = (r**p - r2**p) / (r1**p - r2**p)
    w2 = (r1**p - r**p) / (r1**p - r2**p)
    bands = [g.sphere_band(center, rad) for rad in (r1, r, r2)]
    meta = {"radii": [r1, r, r2], "weights": [w1, w2], **_grid_meta(g)}
    hyps = {"y": Condition.SIGN_HpHpp, "x": Condition.SIGN_Hpp_NONNEG, "t": Condition.THREE_SPHERES_T}
    margins, sides = {}, {}
    for name, cond in hyps.items():
        v = _verdict(curve.profile, cond, curve.y)
        meta[f"verdict_{name}"] = v.to_dict()
        if not v.holds:
            continue
        f = getattr(curve, name).values
        M = [float(f[b].max()) for b in bands]
        rhs = M[0] * w1 + M[2] * w2
        margins[name] = rhs + tol - M[1]
        sides[name] = {"M": M, "lhs": M[1], "rhs": rhs}
    meta["components"] = sides
    if not margins:
        return CheckResult.skip(cid, "no component satisfies its hypothesis", tol, **meta)
    worst = min(margins, key=margins.get)
    return CheckResult(cid, bool(margins[worst] >= 0), sides[worst]["lhs"], sides[worst]["rhs"],
                       margins[worst], tol, meta)


def isotropy_scale(curve) -> float:
    """max |grad y| * max_k |d^3_k x - H'(y) d^3_k y|, the size of the leading
    truncation term of the discrete isotropy minors (up to h^2/3)."""
    g = curve.grid
    yv = np.where(g.inset, curve.y.values, 0.0)
    hp = curve.profile.dH(yv)
    worst = 0.0
    for k in range(g.n):
        d = gridmod.axis_difference(curve.x, k, 3) - hp * gridmod.axis_difference(curve.y, k, 3)
        d = d[g.interior & np.isfinite(d)]
        if d.size:
            worst = max(worst, float(np.max(np.abs(d))))
    gy = np.sqrt(gridmod.grad_sq(curve.y).values[g.inset])
    return float(np.max(gy)) * worst


def isotropy_check(curve, constant: float = 1.0) -> CheckResult:
    g = curve.grid
    cid = "isotropy"
    res = solver.isotropy_residual(curve)
    scale = isotropy_scale(curve)
    bound = constant * g.hmax**2 * scale + 1e-12
    meta = {"scale": scale, "constant": constant, **_grid_meta(g)}
    if g.n < 2:
        meta["note"] = "n = 1: no index pairs"
    return CheckResult(cid, bool(res <= bound), res, bound, bound - res, bound, meta)


def strong_residual_scale(curve) -> float:
    """Derivative scale of the leading truncation term of the strong residual:
    sum over w in (x, y) of max|grad w| sum_k max|d^4_k w| + max|Lap w| sum_k max|d^3_k w|."""
    g = curve.grid
    total = 0.0
    for w in (curve.x, curve.y):
        gw = float(np.max(np.sqrt(gridmod.grad_sq(w).values[g.inset])))
        lap = gridmod.laplacian(w).values[g.interior]
        lw = float(np.max(np.abs(lap))) if lap.size else 0.0
        d3 = d4 = 0.0
        for k in range(g.n):
            for order in (3, 4):
                d = gridmod.axis_difference(w, k, order)
                d = d[g.interior & np.isfinite(d)]
                m = float(np.max(np.abs(d))) if d.size else 0.0
                if order == 3:
                    d3 += m
                else:
                    d4 += m
        total += gw * d4 + lw * d3
    return total


def el_strong_check(curve, constant: float = 10.0) -> CheckResult:
    g = curve.grid
    res = solver.el_residual_strong(curve)
    scale = strong_residual_scale(curve)
    bound = 1e-8 + constant * g.hmax**2 * scale
    return CheckResult("el_strong", bool(res <= bound), res, bound, bound - res, bound,
                       {"scale": scale, "constant": constant, **_grid_meta(g)})


def el_weak_check(curve, num_tests: int = 20, seed: int = 0, threshold: float = 1e-3) -> CheckResult:
    g = curve.grid
    res = solver.el_residual_weak(curve, num_tests=num_tests, seed=seed)
    return CheckResult("el_weak", bool(res <= threshold), res, threshold, threshold - res, threshold,
                       {"num_tests": num_tests, "seed": seed, **_grid_meta(g)})


def max_principle_check(curve, tolerance: float = 1e-8) -> CheckResult:
    """Interior max of y does not exceed its boundary max."""
    g = curve.grid
    yv = curve.y.values
    bmax = float(yv[g.boundary].max())
    imax = float(yv[g.interior].max()) if g.interior.any() else -math.inf
    return CheckResult("max_principle", bool(imax <= bmax + tolerance), imax, bmax, bmax + tolerance - imax,
                       tolerance, {"interior_max": imax, "boundary_max": bmax, **_grid_meta(g)})


# -- suite -----------------------------------------------------------------------------


def _default_center(grid):
    if grid.domain.get("center") is not None and grid.domain["kind"] != "halfball":
        return np.asarray(grid.domain["center"], dtype=float)
    return np.array([(lo + hi) / 2 for lo, hi in grid.bbox])


CHECK_IDS = ("caccioppoli", "liouville", "monotonicity", "superharmonicity", "moduli_comparison",
             "comparison", "strong_max", "harnack", "phragmen_lindelof", "three_spheres", "isotropy",
             "el_strong", "el_weak", "max_principle")

_ALLOWED = {
    "caccioppoli": {"rho", "center", "tolerance"},
    "liouville": {"rho_list", "family", "center", "shape", "tolerance"},
    "monotonicity": {"center", "radii", "tolerance"},
    "superharmonicity": {"zero_threshold", "tolerance"},
    "moduli_comparison": {"profile", "boundary", "tolerance", "zero_threshold", "sign_tolerance"},
    "comparison": {"boundary1", "boundary2", "tolerance"},
    "strong_max": {"C", "tolerance"},
    "harnack": {"balls", "tolerance", "refine", "stability"},
    "phragmen_lindelof": {"alpha", "L", "nodes_per_unit", "tolerance", "boundary"},
    "three_spheres": {"center", "r1", "r", "r2", "tolerance"},
    "isotropy": {"constant"},
    "el_strong": {"constant"},
    "el_weak": {"num_tests", "threshold"},
    "max_principle": {"tolerance"},
}


def validate_checks(checks) -> None:
    for i, spec in enumerate(checks):
        key = f"checks[{i}]"
        if not isinstance(spec, dict) or "check" not in spec:
            raise ConfigError("must be an object with a 'check' entry", key)
        cid = spec["check"]
        if cid not in _ALLOWED:
            raise ConfigError(f"unknown check {cid!r}; expected one of {list(CHECK_IDS)}", f"{key}.check")
        extra = set(spec) - _ALLOWED[cid] - {"check"}
        if extra:
            raise ConfigError(f"unexpected parameters {sorted(extra)} for {cid}", f"{key}.{sorted(extra)[0]}")


def _describe(curve, problem=None):
    d = {
        "grid": _grid_meta(curve.grid),
        "profile": curve.profile.to_spec(),
        "anchor": list(curve.anchor),
        "t0": curve.t0,
        "energy": solver.energy(curve),
        "loop_residual": curve.loop_residual,
        "y_range": [curve.y.min(), curve.y.max()],
    }
    if problem is not None:
        d["boundary"] = problem.boundary_spec
    return d


def _opt(spec, name, default):
    return spec[name] if name in spec else default


def _run_one(spec, curve, problem, seed):
    from heiscurves.problem import boundary_from_spec
    from heiscurves.profile import profile_from_spec

    cid = spec["check"]
    g = curve.grid
    p = {k: v for k, v in spec.items() if k != "check"}
    if cid == "caccioppoli":
        rho = _opt(p, "rho", min(hi - lo for lo, hi in g.bbox) / 5.0)
        return caccioppoli_check(curve, rho, p.get("center"), _opt(p, "tolerance", 1e-6))
    if cid == "liouville":
        fam = [boundary_from_spec(b, g.n, "family") for b in p["family"]] if "family" in p else [problem.boundary]
        if problem is None and "family" not in p:
            raise PreconditionError("liouville needs a boundary family when run on a bare curve")
        return liouville_decay_experiment(curve.profile, fam, _opt(p, "rho_list", [0.25, 0.5, 1.0]),
                                          p.get("center"), g.n, _opt(p, "shape", 65), _opt(p, "tolerance", 1e-6))
    if cid == "monotonicity":
        return monotonicity_check(curve, p.get("center"), _opt(p, "radii", [0.2, 0.3, 0.4]), p.get("tolerance"))
    if cid == "superharmonicity":
        return superharmonicity_check(curve, _opt(p, "zero_threshold", 1e-6), _opt(p, "tolerance", 1e-6))
    if cid == "moduli_comparison":
        if problem is None:
            raise PreconditionError("moduli_comparison needs a problem to solve the second curve")
        prof = profile_from_spec(p["profile"], "checks.profile") if "profile" in p else problem.profile
        bfun = boundary_from_spec(p["boundary"], g.n, "checks.boundary") if "boundary" in p else problem.boundary
        other, _ = solver.solve_curve(g, bfun, prof, tol=problem.tol, max_iter=problem.max_iter,
                                      anchor=problem.anchor, t0=problem.t0)
        return moduli_comparison_check(curve, other, _opt(p, "tolerance", 1e-8), _opt(p, "zero_threshold", 1e-6),
                                       _opt(p, "sign_tolerance", 1e-6))
    if cid == "comparison":
        if problem is None:
            raise PreconditionError("comparison needs a problem configuration")
        g1 = boundary_from_spec(p["boundary1"], g.n, "checks.boundary1") if "boundary1" in p else problem.boundary
        if "boundary2" not in p:
            raise ConfigError("missing", "checks.boundary2")
        g2 = boundary_from_spec(p["boundary2"], g.n, "checks.boundary2")
        return comparison_check(problem.profile, g, g1, g2, _opt(p, "tolerance", 1e-8), problem.anchor,
                                problem.t0, problem.max_iter)
    if cid == "strong_max":
        C = p.get("C")
        if C is None:
            C = float(np.max(np.abs(r_coeff(curve.profile, curve.y.on(g.inset))))) + 1.0
        return strong_max_check(curve, float(C), _opt(p, "tolerance", 1e-8))
    if cid == "harnack":
        c0 = _default_center(g)
        balls = p.get("balls", [[c0.tolist(), min(hi - lo for lo, hi in g.bbox) / 4.0]])
        refined = None
        if problem is not None and _opt(p, "refine", True):
            pr = problem.refined()
            refined, _ = solver.solve_curve(pr.grid, pr.boundary, pr.profile, tol=pr.tol, max_iter=pr.max_iter,
                                            anchor=pr.anchor, t0=pr.t0)
        return harnack_check(curve, balls, _opt(p, "tolerance", 1e-8), refined, _opt(p, "stability", 0.2))
    if cid == "phragmen_lindelof":
        data = boundary_from_spec(p["boundary"], g.n, "checks.boundary") if "boundary" in p else None
        return phragmen_lindelof_check(curve.profile, data, float(_opt(p, "alpha", 2.0)), int(_opt(p, "L", 8)),
                                       int(_opt(p, "nodes_per_unit", 8)), float(_opt(p, "tolerance", 0.2)), g.n)
    if cid == "three_spheres":
        return three_spheres_check(curve, p.get("center"), _opt(p, "r1", 0.5), _opt(p, "r", 0.75),
                                   _opt(p, "r2", 1.0), p.get("tolerance"))
    if cid == "isotropy":
        return isotropy_check(curve, _opt(p, "constant", 1.0))
    if cid == "el_strong":
        return el_strong_check(curve, _opt(p, "constant", 10.0))
    if cid == "el_weak":
        return el_weak_check(curve, _opt(p, "num_tests", 20), seed, _opt(p, "threshold", 1e-3))
    if cid == "max_principle":
        return max_principle_check(curve, _opt(p, "tolerance", 1e-8))
    raise ConfigError(f"unknown check {cid!r}", "checks.check")


def _collect_verdicts(results):
    out = []
    for r in results:
        for k, v in r.metadata.items():
            if k.startswith("verdict") and isinstance(v, dict):
                out.append({"check": r.check_id, **v})
        for m in r.metadata.get("members", []):
            if "verdict" in m:
                out.append({"check": r.check_id, "member": m["member"], **m["verdict"]})
    return out


def run_suite(target, checks, seed: int = 0) -> VerificationReport:
    """Run the requested checks in order on a solved curve or a Problem.

    Precondition failures and numerical errors are recorded per check
    (``metadata["error"]``) rather than aborting the whole suite.
    """
    from heiscurves.problem import Problem

    validate_checks(checks)
    problem = target if isinstance(target, Problem) else None
    if not checks:
        return VerificationReport({} if problem is None else {"boundary": problem.boundary_spec})
    if problem is not None:
        curve, rep = solver.solve_curve(problem.grid, problem.boundary, problem.profile, method=problem.method,
                                        tol=problem.tol, max_iter=problem.max_iter, anchor=problem.anchor,
                                        t0=problem.t0)
    else:
        curve, rep = target, None
    desc = _describe(curve, problem)
    if rep is not None:
        desc["solve"] = rep.to_dict()
    results = []
    for spec in checks:
        try:
            res = _run_one(spec, curve, problem, seed)
        except ConfigError:
            raise
        except (PreconditionError, HeisError, ValueError) as exc:
            res = CheckResult(spec["check"], False, metadata={"error": f"{type(exc).__name__}: {exc}"})
        results.append(res)
    return VerificationReport(desc, results, _collect_verdicts(results))
