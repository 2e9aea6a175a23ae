"""Problem configuration: JSON documents, boundary-data catalog, defaults.

A configuration looks like::

    {
      "domain":   {"kind": "rectangle", "bbox": [[0, 1], [0, 1]], "shape": [33, 33]},
      "boundary": {"id": "sine-product", "amplitude": 0.1},
      "profile":  {"kind": "quadratic", "a": 1, "b": 0, "c": 0},
      "solver":   {"tol": 1e-10, "max_iter": 50, "method": "newton"},
      "anchor": null, "t0": 0.0, "seed": 0,
      "checks": [{"check": "caccioppoli", "rho": 0.2}],
      "conditions": {"range": [-1, 1], "samples": 1001, "C": 10.0}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from heiscurves.errors import ConfigError
from heiscurves.grid import Grid, grid_from_spec
from heiscurves.profile import CurveProfile, profile_from_spec


def _num(spec, name, key, default=None):
    v = spec.get(name, default)
    if v is None:
        raise ConfigError("missing number", f"{key}.{name}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"must be a number, got {v!r}", f"{key}.{name}")
    return float(v)


def _boundary_constant(spec, n, key):
    c = _num(spec, "value", key, 0.0)
    return lambda *X: np.full_like(X[0], c)


def _boundary_linear(spec, n, key):
    coeffs = spec.get("coeffs", [1.0] + [0.0] * (n - 1))
    if not isinstance(coeffs, list) or len(coeffs) != n:
        raise ConfigError(f"must list {n} coefficients", f"{key}.coeffs")
    coeffs = [float(c) for c in coeffs]
    off = _num(spec, "offset", key, 0.0)
    return lambda *X: off + sum(c * x for c, x in zip(coeffs, X))


def _boundary_sine_product(spec, n, key):
    """offset + amplitude * sin(pi * frequency * x1) * x2 * ... * xn."""
    A = _num(spec, "amplitude", key, 1.0)
    f = _num(spec, "frequency", key, 1.0)
    off = _num(spec, "offset", key, 0.0)

    def g(*X):
        out = A * np.sin(np.pi * f * X[0])
        for x in X[1:]:
            out = out * x
        return off + out

    return g


def _boundary_sine_squared(spec, n, key):
    """offset + amplitude * sin(pi x1)^2 * x2 * ... * xn."""
    A = _num(spec, "amplitude", key, 1.0)
    off = _num(spec, "offset", key, 0.0)

    def g(*X):
        out = A * np.sin(np.pi * X[0]) ** 2
        for x in X[1:]:
            out = out * x
        return off + out

    return g


def _boundary_cosine_sum(spec, n, key):
    """offset + amplitude * sum_k cos(pi * frequency * x_k)."""
    A = _num(spec, "amplitude", key, 1.0)
    f = _num(spec, "frequency", key, 1.0)
    off = _num(spec, "offset", key, 0.0)
    return lambda *X: off + A * sum(np.cos(np.pi * f * x) for x in X)


BOUNDARY_CATALOG = {
    "constant": _boundary_constant,
    "linear": _boundary_linear,
    "sine-product": _boundary_sine_product,
    "sine-squared": _boundary_sine_squared,
    "cosine-sum": _boundary_cosine_sum,
}


def boundary_from_spec(spec: dict, n: int, key: str = "boundary"):
    """Callable g(x1, ..., xn) for a catalog entry such as
    ``{"id": "linear", "coeffs": [1, 0], "offset": 0}``."""
    if not isinstance(spec, dict):
        raise ConfigError("must be an object", key)
    bid = spec.get("id")
    if bid not in BOUNDARY_CATALOG:
        raise ConfigError(f"unknown boundary id {bid!r}; expected one of {sorted(BOUNDARY_CATALOG)}", f"{key}.id")
    return BOUNDARY_CATALOG[bid](spec, n, key)


@dataclass
class Problem:
    grid: Grid
    boundary: object
    profile: CurveProfile
    tol: float = 1e-10
    max_iter: int = 50
    method: str = "newton"
    anchor: tuple | None = None
    t0: float = 0.0
    domain_spec: dict = field(default_factory=dict)
    boundary_spec: dict = field(default_factory=dict)

    def refined(self) -> "Problem":
        """Same problem with every axis refined by a factor of two."""
        spec = dict(self.domain_spec)
        spec["shape"] = [2 * (s - 1) + 1 for s in self.grid.shape]
        anchor = None if self.anchor is None else tuple(2 * a for a in self.anchor)
        return Problem(grid_from_spec(spec), self.boundary, self.profile, self.tol, self.max_iter,
                       self.method, anchor, self.t0, spec, self.boundary_spec)

    def with_boundary(self, spec: dict, key: str = "boundary") -> "Problem":
        return Problem(self.grid, boundary_from_spec(spec, self.grid.n, key), self.profile, self.tol,
                       self.max_iter, self.method, self.anchor, self.t0, self.domain_spec, spec)


@dataclass
class ProblemConfig:
    raw: dict
    profile: CurveProfile
    problem: Problem | None
    seed: int = 0
    checks: list = field(default_factory=list)
    conditions: dict = field(default_factory=dict)
    figures: bool = True


_TOP_KEYS = {"domain", "boundary", "profile", "solver", "anchor", "t0", "seed", "checks",
             "conditions", "figures"}


def parse_config(doc: dict, need_problem: bool = True) -> ProblemConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object", "<root>")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unexpected entries {sorted(extra)}", sorted(extra)[0])
    if "profile" not in doc:
        raise ConfigError("missing", "profile")
    prof = profile_from_spec(doc["profile"])

    problem = None
    if need_problem or "domain" in doc:
        for k in ("domain", "boundary"):
            if k not in doc:
                raise ConfigError("missing", k)
        grid = grid_from_spec(doc["domain"])
        bfun = boundary_from_spec(doc["boundary"], grid.n)
        sol = doc.get("solver", {})
        if not isinstance(sol, dict):
            raise ConfigError("must be an object", "solver")
        extra = set(sol) - {"tol", "max_iter", "method"}
        if extra:
            raise ConfigError(f"unexpected entries {sorted(extra)}", "solver")
        tol = _num(sol, "tol", "solver", 1e-10)
        if not tol > 0:
            raise ConfigError("must be positive", "solver.tol")
        max_iter = sol.get("max_iter", 50)
        if not isinstance(max_iter, int) or max_iter < 1:
            raise ConfigError("must be a positive integer", "solver.max_iter")
        method = sol.get("method", "newton")
        if method not in ("newton", "substitution", "both"):
            raise ConfigError(f"unknown method {method!r}", "solver.method")
        anchor = doc.get("anchor")
        if anchor is not None:
            if not isinstance(anchor, list) or len(anchor) != grid.n or not all(isinstance(a, int) for a in anchor):
                raise ConfigError(f"must be a list of {grid.n} node indices", "anchor")
            anchor = tuple(anchor)
            if not all(0 <= a < s for a, s in zip(anchor, grid.shape)) or not grid.inset[anchor]:
                raise ConfigError("anchor node is not in the domain", "anchor")
        t0 = _num(doc, "t0", "<root>", 0.0)
        problem = Problem(grid, bfun, prof, tol, max_iter, method, anchor, t0, doc["domain"], doc["boundary"])

    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("must be an integer", "seed")
    checks = doc.get("checks", [])
    if not isinstance(checks, list) or not all(isinstance(c, dict) and "check" in c for c in checks):
        raise ConfigError("must be a list of objects with a 'check' entry", "checks")
    conditions = doc.get("conditions", {})
    if not isinstance(conditions, dict):
        raise ConfigError("must be an object", "conditions")
    figures = doc.get("figures", True)
    return ProblemConfig(doc, prof, problem, seed, checks, conditions, bool(figures))


def load_config(path, need_problem: bool = True) -> ProblemConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "config") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", "config") from None
    return parse_config(doc, need_problem)
