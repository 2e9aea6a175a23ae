"""Command line front end: ``heiscurves {solve,verify,conditions} --config FILE``.

Exit codes
    solve       0 converged, 2 not converged, 1 configuration error
    verify      0 no failed check, 3 some check failed, 1 configuration or precondition error
    conditions  0 (1 only when the configuration cannot be read)
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from heiscurves import solver, verify
from heiscurves.errors import ConfigError, HeisError
from heiscurves.grid import field_to_csv
from heiscurves.problem import load_config
from heiscurves.profile import Condition, check_condition, check_quadratic_example

log = logging.getLogger("heiscurves")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, indent=2) + "\n")


def _load(args, need_problem=True):
    cfg = load_config(args.config, need_problem)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_solve(args) -> int:
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    p = cfg.problem
    try:
        curve, rep = solver.solve_curve(p.grid, p.boundary, p.profile, method=p.method, tol=p.tol,
                                        max_iter=p.max_iter, anchor=p.anchor, t0=p.t0)
    except HeisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args)
    for name in ("y", "x", "t"):
        field_to_csv(getattr(curve, name), out / f"{name}.csv")
    report = rep.to_dict()
    report.update(energy=solver.energy(curve), loop_residual=curve.loop_residual,
                  anchor=list(curve.anchor), t0=curve.t0, shape=list(p.grid.shape))
    _write_json(out / "solve_report.json", verify._clean(report))
    if cfg.figures and not args.no_figures:
        from heiscurves.plotting import plot_field

        for name in ("y", "x", "t"):
            plot_field(getattr(curve, name), out / f"{name}.png", name)
    print(f"{'converged' if rep.converged else 'NOT converged'}: {rep.iterations} iterations, "
          f"residual {rep.final_residual:.3e}; wrote {out}")
    return 0 if rep.converged else 2


def cmd_verify(args) -> int:
    try:
        cfg = _load(args)
        verify.validate_checks(cfg.checks)
        report = verify.run_suite(cfg.problem, cfg.checks, seed=cfg.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except HeisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args)
    with open(out / "report.json", "w") as fh:
        fh.write(report.to_json())
    if cfg.figures and not args.no_figures:
        from heiscurves.plotting import plot_margins

        plot_margins(report, out / "report_margins.png")
    for r in report.results:
        status = "ERROR" if r.errored else "SKIP" if r.skipped else "PASS" if r.passed else "FAIL"
        extra = r.metadata.get("error") or r.metadata.get("reason") or f"margin {r.margin:.3e}"
        print(f"{status:5s} {r.check_id}: {extra}")
    if report.any_error:
        return 1
    return 3 if report.any_failed else 0


def _condition_table(cfg):
    prof = cfg.profile
    spec = cfg.conditions
    extra = set(spec) - {"range", "samples", "C", "inf_bound"}
    if extra:
        raise ConfigError(f"unexpected entries {sorted(extra)}", "conditions")
    if "range" in spec:
        rng = spec["range"]
        if not (isinstance(rng, list) and len(rng) == 2 and all(isinstance(v, (int, float)) for v in rng)
                and rng[0] <= rng[1]):
            raise ConfigError("must be [lo, hi] with lo <= hi", "conditions.range")
    elif cfg.problem is not None:
        gb = solver.boundary_field(cfg.problem.grid, cfg.problem.boundary).boundary_values
        rng = [float(gb.min()), float(gb.max())]
    else:
        raise ConfigError("missing (no domain to take the data range from)", "conditions.range")
    samples = spec.get("samples", 1001)
    if not isinstance(samples, int) or samples < 2:
        raise ConfigError("must be an integer >= 2", "conditions.samples")
    C = spec.get("C")
    rows = []
    for cid in Condition:
        if cid is Condition.QUADRATIC_EXAMPLE:
            continue
        if cid is Condition.STRONG_MAX and C is None:
            rows.append({"condition": cid.value, "holds": None, "note": "needs conditions.C"})
            continue
        try:
            rows.append(check_condition(prof, cid, rng, samples, C=C).to_dict())
        except HeisError as exc:
            rows.append({"condition": cid.value, "holds": None, "note": str(exc)})
    if prof.kind == "quadratic":
        a, b, c = (prof.params[k] for k in ("a", "b", "c"))
        rows.append(check_quadratic_example(a, b, c, float(spec.get("inf_bound", 0.0))).to_dict())
    return {"profile": prof.to_spec(), "range": [float(rng[0]), float(rng[1])], "samples": samples,
            "verdicts": rows}


def cmd_conditions(args) -> int:
    try:
        cfg = _load(args, need_problem=False)
        table = _condition_table(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    text = json.dumps(verify._clean(table), indent=2)
    print(text)
    if args.out:
        out = _out_dir(args)
        with open(out / "conditions.json", "w") as fh:
            fh.write(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heiscurves", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (("solve", "solve for y, recover x and t, dump fields"),
                           ("verify", "solve and run the configured checks"),
                           ("conditions", "tabulate hypotheses on the profile H")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, help="JSON problem configuration")
        sp.add_argument("--out", default="out" if name != "conditions" else None, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the configured seed")
        sp.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("HEIS_LOGLEVEL", "WARNING"))
    return {"solve": cmd_solve, "verify": cmd_verify, "conditions": cmd_conditions}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
