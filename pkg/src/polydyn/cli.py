"""Command-line entry point: verification suites, sigma series, flows, residuals, probes.

Exit codes: 0 all entries ok, 1 a failed identity, 2 usage error, 3 numeric exception.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

from .numerics import (DEFAULT_KDV_GRID, DimensionMismatch, StepUnderflow, compile_poly, genus1_point,
                       genus2_point, integrate_flow, kdv_residual, parse_grid, singularity_probe)
from .polyring import Poly, PolyError, parse
from .report import Entry, Report
from .sigma import (LinearSystemSingular, NearZeroSigma, TruncationInsufficient, annihilator_residuals_g1,
                    annihilator_residuals_g2, series)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
SUITES = ("g1", "g2", "kdv", "sigma")
NUMERIC_ERRORS = (StepUnderflow, NearZeroSigma, TruncationInsufficient, LinearSystemSingular,
                  ArithmeticError, OverflowError)


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Config:
    truncation_g1: int = 25
    truncation_g2: int = 17
    tol_kdv: float = 1e-7
    tol_integrate: float = 1e-12
    dps: int = 30
    seed: int = 0
    jobs: int = 4
    format: str = "text"

    def validated(self) -> "Config":
        if self.truncation_g1 < 13 or self.truncation_g2 < 7:
            raise UsageError("truncation weights below the sigma minimums (13 and 7)")
        if self.tol_kdv <= 0 or self.tol_integrate <= 0:
            raise UsageError("tolerances must be positive")
        if self.dps < 15 or self.jobs < 1:
            raise UsageError("dps must be >= 15 and jobs >= 1")
        if self.format not in ("text", "json"):
            raise UsageError("format must be text or json")
        return self


def load_config(path: Optional[str]) -> Config:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    cfg = Config()
    if not path:
        return cfg
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    types = {f.name: f.type for f in fields(Config)}
    updates = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise UsageError(f"config line {n}: unknown key {key!r}")
        conv = {"int": int, "float": float, "str": str}[types[key]]
        try:
            updates[key] = conv(val)
        except ValueError as exc:
            raise UsageError(f"config line {n}: bad value for {key}") from exc
    return replace(cfg, **updates)


def _complex_list(text: str, what: str) -> List[complex]:
    try:
        return [complex(v.strip().replace(" ", "")) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"{what}: cannot parse {text!r} as comma-separated numbers") from exc


# -- mutation aid -----------------------------------------------------------------------

def _graded_monomial(table, g: int) -> Poly:
    """x2^a or x3 x2^a of grade g (g >= 2)."""
    x2, x3 = table.vars("x2", "x3")
    return x2 ** (g // 2) if g % 2 == 0 else x3 * x2 ** ((g - 3) // 2)


def parse_mutation(spec: str) -> Tuple[str, int, int, Optional[str]]:
    """``g2:ROW,COL`` or ``g2:ROW,COL=POLY`` with 0-based indices."""
    try:
        head, rest = spec.split(":", 1)
        pos, _, expr = rest.partition("=")
        r, c = (int(v) for v in pos.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --mutate {spec!r}; expected g1:R,C or g2:R,C[=POLY]") from exc
    size = {"g1": 3, "g2": 6}.get(head)
    if size is None or not (0 <= r < size and 0 <= c < size):
        raise UsageError(f"--mutate index out of range for {head}")
    return head, r, c, expr or None


def mutated_genus1(r: int, c: int, expr: Optional[str]):
    from .genus1 import build_genus1, mutate_entry
    m = build_genus1()
    old = m.T1[r][c]
    # row r raises grade by r, column c has grade c + 2
    delta = parse(expr, m.table) if expr else _graded_monomial(m.table, r + c + 2)
    return mutate_entry(m, r, c, old + delta)


def mutated_genus2(r: int, c: int, expr: Optional[str]):
    from .genus2 import COORDS, LABELS, default_model
    m = default_model()
    old = m.fields[LABELS[r]].on(COORDS[c])
    if expr:
        delta = parse(expr, m.table)
    else:
        shift = int(LABELS[r][1:])
        delta = _graded_monomial(m.table, shift + m.table.grade_of(COORDS[c]))
    return m.with_entry(r, c, old + delta)


# -- suites ------------------------------------------------------------------------------

def _suite_runner(name: str, cfg: Config, mutation) -> Callable[[], Report]:
    def run() -> Report:
        if name == "g1":
            from .genus1 import verify_genus1_suite
            m = mutated_genus1(*mutation[1:]) if mutation and mutation[0] == "g1" else None
            return verify_genus1_suite(m)
        if name == "g2":
            from .genus2 import verify_genus2_suite
            m = mutated_genus2(*mutation[1:]) if mutation and mutation[0] == "g2" else None
            return verify_genus2_suite(m)
        if name == "kdv":
            from .kdvtools import verify_kdv_suite
            return verify_kdv_suite()
        from .sigma import verify_sigma_suite
        return verify_sigma_suite(cfg.truncation_g1, cfg.truncation_g2)
    return run


def _guarded(name: str, job: Callable[[], Report]) -> Report:
    try:
        return job()
    except NUMERIC_ERRORS as exc:
        return Report(name, [Entry(f"{name}.exception", "suite raised a numeric exception", "error",
                                   detail={"type": type(exc).__name__, "message": str(exc)})])
    except PolyError as exc:
        return Report(name, [Entry(f"{name}.exception", "suite raised while checking identities", "fail",
                                   detail={"type": type(exc).__name__, "message": str(exc)})])


def run_verify(args, cfg: Config) -> Report:
    names = SUITES if args.suite == "all" else (args.suite,)
    mutation = parse_mutation(args.mutate) if args.mutate else None
    jobs = args.jobs or cfg.jobs
    work = {n: _suite_runner(n, cfg, mutation) for n in names}
    if jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {n: pool.submit(_guarded, n, job) for n, job in work.items()}
            parts = [futures[n].result() for n in names]
    else:
        parts = [_guarded(n, job) for n, job in work.items()]
    rep = Report(args.suite, meta={"suites": list(names)})
    if mutation:
        rep.meta["mutation"] = args.mutate
    for p in parts:
        rep.extend(p)
    return rep.sorted()


def run_sigma(args, cfg: Config) -> Report:
    default = cfg.truncation_g1 if args.genus == 1 else cfg.truncation_g2
    w = args.max_weight or default
    try:
        s = series(args.genus, w)
    except ValueError as exc:
        if isinstance(exc, LinearSystemSingular):
            raise
        raise UsageError(str(exc)) from exc
    rep = Report(f"sigma.g{args.genus}", meta={"max_weight": w, "terms": len(s.to_records())})
    res = annihilator_residuals_g1(s) if args.genus == 1 else annihilator_residuals_g2(s)
    for q, r in sorted(res.items()):
        rep.check(f"sigma.g{args.genus}.{q}", f"{q} sigma vanishes through weight {w}", list(r.values()))
    rep.check(f"sigma.g{args.genus}.odd", "only odd-parity coefficients are nonzero", s.is_odd())
    if args.emit:
        Path(args.emit).write_text(s.to_json())
        rep.meta["emit"] = args.emit
    return rep


def _integration_setup(args, cfg: Config):
    if args.genus == 1:
        from .genus1 import build_genus1
        m = build_genus1()
        fields_ = {D.label: D for D in m.fields}
        coords = m.coords
        invariants = {"g2_hat": m.g2_hat, "g3_hat": m.g3_hat}
    else:
        from .genus2 import COORDS, LAMBDAS, default_model
        m = default_model()
        fields_ = dict(m.fields)
        coords = COORDS
        invariants = {k: m.lam[k] for k in LAMBDAS}
    if args.field not in fields_:
        raise UsageError(f"unknown field {args.field!r}; choose from {sorted(fields_)}")
    if args.x0:
        x0 = _complex_list(args.x0, "--x0")
    elif args.from_u:
        u = _complex_list(args.from_u, "--from-u")
        par = _complex_list(args.params or "", "--params")
        if args.genus == 1:
            if len(u) != 1 or len(par) != 2:
                raise UsageError("genus 1 needs one u value and --params g2,g3")
            x0 = list(genus1_point(par, u[0], cfg.truncation_g1))
        else:
            if len(u) != 2 or len(par) != 4:
                raise UsageError("genus 2 needs u1,u3 and --params l4,l6,l8,l10")
            x0 = list(genus2_point(par, u, cfg.truncation_g2, cfg.dps))
    else:
        raise UsageError("one of --x0 and --from-u is required")
    if len(x0) != len(coords):
        raise UsageError(f"--x0 has {len(x0)} entries, expected {len(coords)}")
    return fields_[args.field], coords, x0, invariants


def run_integrate(args, cfg: Config) -> Report:
    D, coords, x0, invariants = _integration_setup(args, cfg)
    if args.step is not None and args.tol is not None:
        raise UsageError("--step and --tol are exclusive")
    tol = args.tol if args.step is None else None
    if tol is None and args.step is None:
        tol = cfg.tol_integrate
    direction = complex(args.direction.replace(" ", "")) if args.direction else 1
    rep = Report(f"integrate.g{args.genus}.{args.field}",
                 meta={"t": args.t, "step": args.step, "tol": tol, "direction": str(direction),
                       "x0": [str(complex(v)) for v in x0]})
    try:
        traj = integrate_flow(D, x0, args.t, step=args.step, tol=tol, direction=direction, coords=coords)
    except DimensionMismatch as exc:
        raise UsageError(str(exc)) from exc
    compiled = {k: compile_poly(p, coords) for k, p in invariants.items()}
    base = {k: f(traj.states[0].x) for k, f in compiled.items()}
    for k, f in compiled.items():
        d = max(abs(f(s.x) - base[k]) for s in traj.states)
        rep.add(Entry(f"integrate.drift.{k}", f"max drift of {k} along the flow", "info",
                      detail={"max_drift": float(d)}))
    rep.add(Entry("integrate.final", "final state", "info",
                  detail={"t": traj.states[-1].t, "steps": len(traj.states) - 1,
                          "rejected": traj.steps_rejected,
                          "x": [str(complex(v)) for v in traj.final]}))
    if args.emit:
        Path(args.emit).write_text(traj.to_csv(compiled))
        rep.meta["emit"] = args.emit
    return rep.sorted()


def run_residual(args, cfg: Config) -> Report:
    lam = _complex_list(args.lam, "--lambda")
    if len(lam) != 4:
        raise UsageError("--lambda needs four values l4,l6,l8,l10")
    try:
        grid = parse_grid(args.grid or DEFAULT_KDV_GRID)
    except ValueError as exc:
        raise UsageError(f"bad --grid: {exc}") from exc
    if not grid:
        raise UsageError("empty grid")
    tol = args.tol or cfg.tol_kdv
    w = args.truncation or cfg.truncation_g2
    res = kdv_residual(lam, grid, truncation=w, dps=cfg.dps)
    rep = Report("residual.kdv", meta={"tol": tol, "truncation": w, "dps": cfg.dps, **res.to_dict()})
    for k, (pt, r, a, c) in enumerate(zip(res.points, res.kdv, res.anti, res.chi2)):
        tag = f"residual.kdv.{k:03d}"
        rep.add(Entry(tag, f"U''' = 6UU' + 4Udot at u = {pt}", "pass" if r < tol else "fail",
                      detail={"residual": r, "tol": tol}))
        rep.add(Entry(tag + ".chi2", "wp43 = 8 wp20 wp23 + 4 wp30 wp13", "pass" if c < tol else "fail",
                      detail={"residual": c, "tol": tol}))
        rep.add(Entry(tag + ".anti", "coefficient 3 instead of 4 is detected", "pass" if a > 1e-2 else "fail",
                      detail={"residual": a}))
    for k, msg in enumerate(res.errors):
        rep.add(Entry(f"residual.kdv.error.{k:03d}", "grid point rejected", "error", detail={"message": msg}))
    return rep.sorted()


def run_probe(args, cfg: Config) -> Report:
    if args.samples <= 0:
        raise UsageError("--samples must be positive")
    seed = cfg.seed if args.seed is None else args.seed
    return singularity_probe(args.samples, seed).sorted()


# -- argument handling -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="flat key = value config file")
    common.add_argument("--report", default=argparse.SUPPRESS, help="write the JSON report here")
    common.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS,
                        help="standard output format")

    p = argparse.ArgumentParser(prog="polydyn", parents=[common],
                                description="Verify polynomial Lie algebras, sigma series and flows.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run symbolic verification suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--jobs", type=int, default=None)
    v.add_argument("--mutate", default=None, metavar="gN:R,C[=POLY]",
                   help="testing aid: add a same-grade term (or POLY) to one matrix entry")

    s = sub.add_parser("sigma", parents=[common], help="compute a sigma series")
    s.add_argument("--genus", type=int, choices=(1, 2), required=True)
    s.add_argument("--max-weight", type=int, default=None)
    s.add_argument("--emit", default=None, help="write the series as JSON")

    i = sub.add_parser("integrate", parents=[common], help="integrate one flow")
    i.add_argument("--genus", type=int, choices=(1, 2), required=True)
    i.add_argument("--field", required=True, help="L0, L1, ... ")
    i.add_argument("--x0", default=None, help="comma-separated start point")
    i.add_argument("--from-u", default=None, help="start at the sigma-derived point for this u")
    i.add_argument("--params", default=None, help="g2,g3 or l4,l6,l8,l10 for --from-u")
    i.add_argument("--t", type=float, required=True)
    i.add_argument("--step", type=float, default=None)
    i.add_argument("--tol", type=float, default=None)
    i.add_argument("--direction", default=None, help="complex direction of the time ray")
    i.add_argument("--emit", default=None, help="write the trajectory as CSV")

    r = sub.add_parser("residual", parents=[common], help="numeric residual checks")
    rs = r.add_subparsers(dest="which", required=True)
    k = rs.add_parser("kdv", parents=[common])
    k.add_argument("--lambda", dest="lam", required=True, help="l4,l6,l8,l10")
    k.add_argument("--grid", default=None, help='"u1,u1,...;u3,u3,..." or "u1:u3 ..."')
    k.add_argument("--truncation", type=int, default=None)
    k.add_argument("--tol", type=float, default=None)

    pr = sub.add_parser("probe", parents=[common], help="probe singular points")
    ps = pr.add_subparsers(dest="which", required=True)
    sg = ps.add_parser("singular", parents=[common])
    sg.add_argument("--samples", type=int, default=20)
    sg.add_argument("--seed", type=int, default=None)
    return p


COMMANDS = {"verify": run_verify, "sigma": run_sigma, "integrate": run_integrate,
            "residual": run_residual, "probe": run_probe}


def exit_code(rep: Report) -> int:
    if any(e.status == "error" for e in rep.entries):
        return EXIT_NUMERIC
    return EXIT_FAIL if rep.failed else EXIT_OK


def _emit(rep: Report, args, cfg: Config, out) -> None:
    fmt = getattr(args, "format", None) or cfg.format
    if getattr(args, "report", None):
        Path(args.report).write_text(rep.to_json())
    if fmt == "json":
        print(rep.to_json(), file=out)
    else:
        for line in rep.summary_lines():
            print(line, file=out)
        for e in rep.failed:
            print(f"FAILED {e.id}", file=out)


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(getattr(args, "config", None)).validated()
        try:
            rep = COMMANDS[args.command](args, cfg)
        except NUMERIC_ERRORS as exc:
            rep = Report(args.command, [Entry(f"{args.command}.exception", "numeric exception", "error",
                                              detail={"type": type(exc).__name__, "message": str(exc)})])
    except UsageError as exc:
        print(f"polydyn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    code = exit_code(rep)
    rep.meta["exit_code"] = code
    _emit(rep, args, cfg, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
