"""Curve profiles H with x = H(y), and the hypotheses on H used by the checks.

A profile carries H and its first three derivatives. Everything the solver
and the checks need is a scalar function of s built from those four:

    r(s) = H''(s) H'(s) / (1 + H'(s)^2)
    F(s) = int_{s0}^{s} sqrt(1 + H'(sigma)^2) d sigma      (arclength)

F turns the Euler-Lagrange equation into Laplace's equation for F(y),
because F''/F' = r.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, interpolate, optimize

from heiscurves.errors import ConfigError, ProfileDomainError

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(order):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = leggauss(order)
    return _GL_CACHE[order]


@dataclass(frozen=True, eq=False)
class CurveProfile:
    """The function H together with H', H'', H'''.

    Build instances with the ``constant``/``affine``/... constructors or with
    :func:`profile_from_spec`. ``validity`` is the closed interval on which H
    is declared C^3; evaluation outside it raises ``ProfileDomainError``.
    """

    kind: str
    params: dict
    funcs: tuple[Callable, Callable, Callable, Callable] = field(repr=False)
    validity: tuple[float, float] = (-math.inf, math.inf)

    def _check(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.validity
        if np.any(s < lo) or np.any(s > hi) or not np.all(np.isfinite(s)):
            bad = s[(s < lo) | (s > hi) | ~np.isfinite(s)]
            raise ProfileDomainError(
                f"{self.kind} profile evaluated at {float(bad.flat[0])!r}, "
                f"outside its validity interval [{lo}, {hi}]"
            )
        return s

    def _eval(self, k, s):
        s = self._check(s)
        out = self.funcs[k](s)
        out = np.broadcast_to(np.asarray(out, dtype=float), s.shape)
        return float(out) if out.ndim == 0 else np.array(out)

    def H(self, s):
        return self._eval(0, s)

    def dH(self, s):
        return self._eval(1, s)

    def d2H(self, s):
        return self._eval(2, s)

    def d3H(self, s):
        return self._eval(3, s)

    def contains(self, lo, hi) -> bool:
        return self.validity[0] <= lo and hi <= self.validity[1]

    def to_spec(self) -> dict:
        return {"kind": self.kind, **self.params}

    # -- catalog -----------------------------------------------------------

    @classmethod
    def constant(cls, c=0.0):
        c = float(c)
        zero = lambda s: np.zeros_like(s)  # noqa: E731
        return cls("constant", {"c": c}, (lambda s: np.full_like(s, c), zero, zero, zero))

    @classmethod
    def affine(cls, a=1.0, b=0.0):
        a, b = float(a), float(b)
        zero = lambda s: np.zeros_like(s)  # noqa: E731
        return cls(
            "affine",
            {"a": a, "b": b},
            (lambda s: a * s + b, lambda s: np.full_like(s, a), zero, zero),
        )

    @classmethod
    def quadratic(cls, a=1.0, b=0.0, c=0.0):
        a, b, c = float(a), float(b), float(c)
        return cls(
            "quadratic",
            {"a": a, "b": b, "c": c},
            (
                lambda s: (a * s + b) * s + c,
                lambda s: 2.0 * a * s + b,
                lambda s: np.full_like(s, 2.0 * a),
                lambda s: np.zeros_like(s),
            ),
        )

    @classmethod
    def exponential(cls, A=1.0, k=1.0, c=0.0):
        """H(s) = A exp(k s) + c."""
        A, k, c = float(A), float(k), float(c)
        return cls(
            "exponential",
            {"A": A, "k": k, "c": c},
            (
                lambda s: A * np.exp(k * s) + c,
                lambda s: A * k * np.exp(k * s),
                lambda s: A * k * k * np.exp(k * s),
                lambda s: A * k**3 * np.exp(k * s),
            ),
        )

    @classmethod
    def arctan(cls, A=1.0, k=1.0, c=0.0):
        """H(s) = A arctan(k s) + c."""
        A, k, c = float(A), float(k), float(c)

        def d1(s):
            return A * k / (1.0 + (k * s) ** 2)

        def d2(s):
            return -2.0 * A * k**3 * s / (1.0 + (k * s) ** 2) ** 2

        def d3(s):
            u = (k * s) ** 2
            return -2.0 * A * k**3 * (1.0 - 3.0 * u) / (1.0 + u) ** 3

        return cls("arctan", {"A": A, "k": k, "c": c}, (lambda s: A * np.arctan(k * s) + c, d1, d2, d3))

    @classmethod
    def tabulated(cls, s, H, dH, d2H, d3H):
        """Piecewise cubic Hermite interpolation of user-supplied tables.

        Each of H, H', H'' is interpolated with the next table as its slope;
        H''' is interpolated linearly. No derivative is computed numerically.
        """
        s = np.asarray(s, dtype=float)
        tabs = [np.asarray(v, dtype=float) for v in (H, dH, d2H, d3H)]
        if s.ndim != 1 or s.size < 2 or np.any(np.diff(s) <= 0):
            raise ConfigError("tabulated profile needs a strictly increasing grid of >= 2 points", "s")
        for name, tab in zip(("H", "dH", "d2H", "d3H"), tabs):
            if tab.shape != s.shape:
                raise ConfigError(f"table length {tab.size} differs from s length {s.size}", name)
        splines = [interpolate.CubicHermiteSpline(s, tabs[i], tabs[i + 1]) for i in range(3)]
        d3 = tabs[3]
        funcs = (
            splines[0].__call__,
            splines[1].__call__,
            splines[2].__call__,
            lambda q: np.interp(q, s, d3),
        )
        params = {"s": s.tolist(), "H": tabs[0].tolist(), "dH": tabs[1].tolist(),
                  "d2H": tabs[2].tolist(), "d3H": tabs[3].tolist()}
        return cls("tabulated", params, funcs, (float(s[0]), float(s[-1])))


_KINDS = {
    "constant": (CurveProfile.constant, ("c",)),
    "affine": (CurveProfile.affine, ("a", "b")),
    "quadratic": (CurveProfile.quadratic, ("a", "b", "c")),
    "exponential": (CurveProfile.exponential, ("A", "k", "c")),
    "arctan": (CurveProfile.arctan, ("A", "k", "c")),
    "tabulated": (CurveProfile.tabulated, ("s", "H", "dH", "d2H", "d3H")),
}


def profile_from_spec(spec: dict, key: str = "profile") -> CurveProfile:
    """Build a profile from a JSON-style dict such as
    ``{"kind": "quadratic", "a": -1, "b": -2, "c": 5}``."""
    if not isinstance(spec, dict):
        raise ConfigError("must be an object", key)
    kind = spec.get("kind")
    if kind not in _KINDS:
        raise ConfigError(f"unknown profile kind {kind!r}; expected one of {sorted(_KINDS)}", f"{key}.kind")
    ctor, names = _KINDS[kind]
    extra = set(spec) - set(names) - {"kind", "validity"}
    if extra:
        raise ConfigError(f"unexpected entries {sorted(extra)}", key)
    kwargs = {}
    for name in names:
        if name in spec:
            value = spec[name]
            if kind != "tabulated" and not isinstance(value, (int, float)):
                raise ConfigError("must be a number", f"{key}.{name}")
            kwargs[name] = value
        elif kind == "tabulated":
            raise ConfigError("missing table", f"{key}.{name}")
    prof = ctor(**kwargs)
    if "validity" in spec:
        lo, hi = spec["validity"]
        prof = CurveProfile(prof.kind, prof.params, prof.funcs, (float(lo), float(hi)))
    return prof


# -- scalar quantities ---------------------------------------------------------


def r_coeff(prof: CurveProfile, s):
    """r(s) = H''(s) H'(s) / (1 + H'(s)^2)."""
    h1 = prof.dH(s)
    return prof.d2H(s) * h1 / (1.0 + h1 * h1)


def r_prime(prof: CurveProfile, s):
    """dr/ds = [H''' H' (1 + H'^2) + H''^2 (1 - H'^2)] / (1 + H'^2)^2."""
    h1, h2, h3 = prof.dH(s), prof.d2H(s), prof.d3H(s)
    q = 1.0 + h1 * h1
    return (h3 * h1 * q + h2 * h2 * (1.0 - h1 * h1)) / (q * q)


def arclength_density(prof: CurveProfile, s):
    """F'(s) = sqrt(1 + H'(s)^2)."""
    return np.hypot(1.0, prof.dH(s))


def arclength_increment(prof: CurveProfile, a, b, order: int = 12):
    """int_a^b sqrt(1 + H'^2), elementwise, by fixed Gauss-Legendre.

    Intended for short intervals (neighbouring grid values); the rule is exact
    to rounding once |b - a| is small compared with the scale of H'.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    xi, w = _gauss_legendre(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    pts = mid[..., None] + half[..., None] * xi
    return half * (arclength_density(prof, pts) @ w)


def arclength_F(prof: CurveProfile, s: float, s0: float = 0.0) -> float:
    """Arclength F(s) = int_{s0}^{s} sqrt(1 + H'^2) by adaptive quadrature."""
    s, s0 = float(s), float(s0)
    prof._check(np.array([s, s0]))
    if s == s0:
        return 0.0
    val, _ = integrate.quad(
        lambda u: math.hypot(1.0, float(prof.dH(u))), s0, s, epsabs=0.0, epsrel=1e-13, limit=200
    )
    return val


def arclength_F_inv(prof: CurveProfile, v: float, s0: float = 0.0) -> float:
    """Solve F(s) = v. Since F' >= 1 the root lies in [s0 - |v|, s0 + |v|]."""
    v = float(v)
    if v == 0.0:
        return float(s0)
    lo, hi = s0 - abs(v), s0 + abs(v)
    vlo, vhi = prof.validity
    lo, hi = max(lo, vlo), min(hi, vhi)
    flo = arclength_F(prof, lo, s0) - v
    fhi = arclength_F(prof, hi, s0) - v
    if flo > 0 or fhi < 0:
        raise ProfileDomainError(f"value {v!r} is outside the range of F on the validity interval")
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    return optimize.brentq(lambda u: arclength_F(prof, u, s0) - v, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)


class ArclengthMap:
    """Vectorized F and F^{-1} on a fixed interval [lo, hi].

    F is tabulated on a uniform mesh with adaptive quadrature per panel; point
    values add a Gauss-Legendre increment from the nearest table node.
    """

    def __init__(self, prof: CurveProfile, lo: float, hi: float, s0: float = 0.0, panels: int = 512):
        if not hi > lo:
            hi = lo + 1e-12 if hi == lo else hi
        prof._check(np.array([lo, hi, s0]))
        self.prof = prof
        self.s0 = float(s0)
        self.lo, self.hi = float(lo), float(hi)
        self.nodes = np.linspace(self.lo, self.hi, panels + 1)
        inc = np.array([
            integrate.quad(lambda u: math.hypot(1.0, float(prof.dH(u))), a, b, epsabs=1e-15, epsrel=1e-14)[0]
            for a, b in zip(self.nodes[:-1], self.nodes[1:])
        ])
        table = np.concatenate([[0.0], np.cumsum(inc)])
        shift = arclength_F(prof, self.lo, self.s0)
        self.table = table + shift

    def _near(self, s):
        j = np.rint((s - self.lo) / (self.hi - self.lo) * (self.nodes.size - 1)).astype(int)
        return np.clip(j, 0, self.nodes.size - 1)

    def F(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < self.lo - 1e-12) or np.any(s > self.hi + 1e-12):
            raise ProfileDomainError("argument outside the tabulated arclength interval")
        j = self._near(s)
        return self.table[j] + arclength_increment(self.prof, self.nodes[j], s, order=16)

    def F_inv(self, v, tol: float = 1e-14):
        v = np.asarray(v, dtype=float)
        vmin, vmax = self.table[0], self.table[-1]
        slack = 1e-12 * max(1.0, abs(vmin), abs(vmax))
        if np.any(v < vmin - slack) or np.any(v > vmax + slack):
            raise ProfileDomainError("value outside the range of F on the tabulated interval")
        v = np.clip(v, vmin, vmax)
        k = np.clip(np.searchsorted(self.table, v) - 1, 0, self.nodes.size - 2)
        blo, bhi = self.nodes[k].copy(), self.nodes[k + 1].copy()
        flo, fhi = self.table[k], self.table[k + 1]
        s = blo + (v - flo) / np.where(fhi > flo, fhi - flo, 1.0) * (bhi - blo)
        for _ in range(60):
            res = self.F(s) - v
            done = np.abs(res) <= tol * np.maximum(1.0, np.abs(v))
            if np.all(done):
                break
            blo = np.where(res < 0, s, blo)
            bhi = np.where(res > 0, s, bhi)
            step = s - res / arclength_density(self.prof, s)
            # Newton step, bisection when it leaves the bracket
            bad = (step <= blo) | (step >= bhi)
            s = np.where(done, s, np.where(bad, 0.5 * (blo + bhi), step))
        return s


# -- hypothesis checks ---------------------------------------------------------


class Condition(str, enum.Enum):
    CACCIOPPOLI_MU = "CACCIOPPOLI_MU"
    SUPERHARM = "SUPERHARM"
    COMPARISON_Y = "COMPARISON_Y"
    COMPARISON_T = "COMPARISON_T"
    STRONG_MAX = "STRONG_MAX"
    SIGN_HpHpp = "SIGN_HpHpp"
    SIGN_Hpp_NONNEG = "SIGN_Hpp_NONNEG"
    SIGN_Hp_NONPOS = "SIGN_Hp_NONPOS"
    THREE_SPHERES_T = "THREE_SPHERES_T"
    QUADRATIC_EXAMPLE = "QUADRATIC_EXAMPLE"


@dataclass(frozen=True)
class ConditionVerdict:
    """Outcome of a sampled hypothesis check.

    ``margin`` is the signed distance to violation (>= 0 when the
    inequality holds, > 0 for the strict ones), ``witness`` the sample where
    the worst case occurs, ``value`` the extremal raw quantity (for example
    mu for the Caccioppoli condition).
    """

    condition_id: str
    holds: bool
    margin: float
    witness: float
    samples: int
    value: float = float("nan")
    s_range: tuple[float, float] = (float("nan"), float("nan"))
    method: str = "sampled"
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition_id,
            "holds": self.holds,
            "margin": _json_num(self.margin),
            "witness": _json_num(self.witness),
            "value": _json_num(self.value),
            "range": [_json_num(self.s_range[0]), _json_num(self.s_range[1])],
            "samples": self.samples,
            "method": self.method,
            "params": self.params,
        }


def _json_num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def _condition_values(prof, cid, s, C):
    """Return (values, sense, strict). sense "le": need values <= 0; "ge": >= 0."""
    h0, h1, h2, h3 = prof.H(s), prof.dH(s), prof.d2H(s), prof.d3H(s)
    q = 1.0 + h1 * h1
    if cid is Condition.CACCIOPPOLI_MU:
        return np.abs(h2 * h1 / q * s), "mu", True
    if cid is Condition.SUPERHARM:
        return h2 * (h0 - s * h1), "ge", False
    if cid is Condition.COMPARISON_Y:
        return h3 * h1 * q + h2 * h2 * (1.0 - h1 * h1), "le", False
    if cid is Condition.COMPARISON_T:
        return h3 * (s + h0 * h1) * q + h2 * h2 * (1.0 - h1 * h1) + h2 * (q - 2.0 * s * h1), "le", False
    if cid is Condition.STRONG_MAX:
        if C is None:
            raise ValueError("STRONG_MAX needs the bound C")
        return np.abs(h2 * h1 / q), "supC", True
    if cid is Condition.SIGN_HpHpp:
        return h1 * h2, "le", False
    if cid is Condition.SIGN_Hpp_NONNEG:
        return h2, "ge", False
    if cid is Condition.SIGN_Hp_NONPOS:
        return h1, "le", False
    if cid is Condition.THREE_SPHERES_T:
        return (s + h0 * h1) * h2, "ge", False
    raise ValueError(f"unknown condition id {cid!r}")


def check_condition(prof: CurveProfile, condition_id, s_range, samples: int = 1001, C=None) -> ConditionVerdict:
    """Sample a hypothesis on H uniformly over ``s_range`` and report the worst case.

    Dense sampling, not a proof; the verdict records the sample count.
    """
    try:
        cid = Condition(condition_id)
    except ValueError:
        raise ValueError(f"unknown condition id {condition_id!r}") from None
    if cid is Condition.QUADRATIC_EXAMPLE:
        raise ValueError("use check_quadratic_example for QUADRATIC_EXAMPLE")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    lo, hi = float(s_range[0]), float(s_range[1])
    if hi < lo:
        raise ValueError(f"empty range [{lo}, {hi}]")
    s = np.linspace(lo, hi, samples)
    vals, sense, strict = _condition_values(prof, cid, s, C)
    params = {}
    if sense == "le":
        i = int(np.argmax(vals))
        value = float(vals[i])
        margin = -value + 0.0
    elif sense == "ge":
        i = int(np.argmin(vals))
        value = float(vals[i])
        margin = value + 0.0
    elif sense == "mu":
        i = int(np.argmax(vals))
        value = float(vals[i])
        margin = 1.0 - value
    else:
        i = int(np.argmax(vals))
        value = float(vals[i])
        margin = float(C) - value
        params["C"] = float(C)
    holds = bool(margin > 0) if strict else bool(margin >= 0)
    return ConditionVerdict(cid.value, holds, margin, float(s[i]), samples, value, (lo, hi), "sampled", params)


def check_quadratic_example(a: float, b: float, c: float, inf_bound: float) -> ConditionVerdict:
    """Sufficient region for H(u) = a u^2 + b u + c to give comparison for x, y and t:

        a <= 0,   b^2 <= 4 a (a - 1),   b <= -1 - 2 a inf_bound

    where ``inf_bound`` is the infimum of the component functions over the
    closed domain. ``c`` is unconstrained.
    """
    slacks = {
        "a_nonpos": -a + 0.0,
        "discriminant": 4.0 * a * (a - 1.0) - b * b,
        "slope": -1.0 - 2.0 * a * inf_bound - b,
    }
    worst = min(slacks, key=slacks.get)
    margin = slacks[worst]
    return ConditionVerdict(
        Condition.QUADRATIC_EXAMPLE.value,
        bool(margin >= 0),
        float(margin),
        float("nan"),
        1,
        float(margin),
        method="closed-form",
        params={"a": a, "b": b, "c": c, "inf_bound": inf_bound, "slacks": slacks, "worst": worst},
    )
