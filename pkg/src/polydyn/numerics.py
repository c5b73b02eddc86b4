"""Numerical integration of the polynomial flows and numeric cross-checks."""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .genus2 import COORDS, LAMBDAS, Genus2Model, default_model, delta_hat
from .polyring import Poly, PolyError, VarTable, det
from .report import Entry, Report
from .sigma import NearZeroSigma, eval_wp, series
from .vectorfield import Derivation


class StepUnderflow(ArithmeticError):
    """The adaptive step fell below its floor, typically next to a pole."""


class DimensionMismatch(ValueError):
    pass


@dataclass
class NumericState:
    t: float
    x: np.ndarray


@dataclass
class Trajectory:
    field_label: str
    coords: Tuple[str, ...]
    states: List[NumericState]
    step_control: Dict[str, float]
    direction: complex = 1
    drift: Dict[str, float] = field(default_factory=dict)
    steps_rejected: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1].x

    def to_csv(self, invariants: Optional[Mapping[str, Callable]] = None) -> str:
        invariants = invariants or {}
        buf = io.StringIO()
        w = csv.writer(buf)
        head = ["t"]
        for c in self.coords:
            head += [f"re_{c}", f"im_{c}"]
        head += [f"drift_{k}" for k in invariants]
        w.writerow(head)
        base = {k: f(self.states[0].x) for k, f in invariants.items()}
        for s in self.states:
            row = [repr(float(s.t))]
            for v in s.x:
                row += [repr(float(v.real)), repr(float(v.imag))]
            row += [repr(float(abs(f(s.x) - base[k]))) for k, f in invariants.items()]
            w.writerow(row)
        return buf.getvalue()


# -- compiling polynomials to numeric callables ------------------------------------

def compile_poly(p: Poly, coords: Sequence[str], params: Optional[Mapping[str, complex]] = None
                 ) -> Callable[[np.ndarray], complex]:
    """Fast evaluator of ``p`` in the variables ``coords``; other symbols bound by ``params``."""
    params = dict(params or {})
    t = p.table
    pos = {c: i for i, c in enumerate(coords)}
    rows, coefs = [], []
    for mono, c in p.items():
        e = np.zeros(len(coords), dtype=int)
        k = complex(c)
        for name, a in zip(t.names, mono):
            if not a:
                continue
            if name in pos:
                e[pos[name]] = a
            elif name in params:
                k *= complex(params[name]) ** a
            else:
                raise PolyError(f"symbol {name!r} is neither a coordinate nor bound")
        rows.append(e)
        coefs.append(k)
    if not rows:
        return lambda x: 0j
    E = np.array(rows)
    C = np.array(coefs, dtype=complex)

    def f(x: np.ndarray) -> complex:
        return complex(C @ np.prod(np.power(x[None, :], E), axis=1))
    return f


def compile_field(D: Derivation, coords: Sequence[str], params: Optional[Mapping[str, complex]] = None
                  ) -> Callable[[np.ndarray], np.ndarray]:
    fs = [compile_poly(D.on(c), coords, params) for c in coords]
    return lambda x: np.array([f(x) for f in fs], dtype=complex)


def active_coords(D: Derivation) -> Tuple[str, ...]:
    return tuple(n for n in D.table.names if not D.on(n).is_zero())


# -- integration -------------------------------------------------------------------

def _rk4(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_flow(D: Derivation, x0: Sequence[complex], t_end: float, step: Optional[float] = None,
                   tol: Optional[float] = None, direction: complex = 1,
                   coords: Optional[Sequence[str]] = None, params: Optional[Mapping[str, complex]] = None,
                   invariants: Optional[Mapping[str, Poly]] = None, h_min: float = 1e-10,
                   h0: float = 1e-3) -> Trajectory:
    """RK4 along ``d x / d t = direction * D(x)`` for real t in [0, t_end].

    Exactly one of ``step`` (fixed) and ``tol`` (adaptive, step doubling) is required.
    """
    if (step is None) == (tol is None):
        raise ValueError("give exactly one of step and tol")
    coords = tuple(coords or active_coords(D))
    x = np.array(x0, dtype=complex)
    if x.shape != (len(coords),):
        raise DimensionMismatch(f"x0 has {x.size} entries, field has {len(coords)} coordinates")
    rhs = compile_field(D, coords, params)
    f = lambda y: direction * rhs(y)
    states = [NumericState(0.0, x.copy())]
    t = 0.0
    rejected = 0
    if step is not None:
        n = max(1, math.ceil(abs(t_end) / step - 1e-12))
        h = t_end / n
        for i in range(n):
            x = _rk4(f, x, h)
            states.append(NumericState((i + 1) * h, x.copy()))
        control = {"step": float(abs(h))}
    else:
        h = min(h0, t_end)
        while t < t_end - 1e-15:
            h = min(h, t_end - t)
            big = _rk4(f, x, h)
            half = _rk4(f, _rk4(f, x, h / 2), h / 2)
            err = np.max(np.abs(half - big)) / 15
            scale = 1 + np.max(np.abs(half))
            if not np.all(np.isfinite(half)):
                err = np.inf
            if err <= tol * scale:
                x = half + (half - big) / 15
                t += h
                states.append(NumericState(t, x.copy()))
                grow = 2.0 if err == 0 else min(2.0, 0.9 * (tol * scale / err) ** 0.2)
                h *= max(grow, 0.2)
            else:
                rejected += 1
                shrink = 0.2 if not np.isfinite(err) else max(0.2, 0.9 * (tol * scale / err) ** 0.2)
                h *= shrink
            if h < h_min:
                raise StepUnderflow(f"step {h:.2e} below floor at t = {t:.6g}")
        control = {"tol": float(tol)}
    traj = Trajectory(D.label, coords, states, control, direction, steps_rejected=rejected)
    if invariants:
        traj.drift = drift(traj, invariants, params)
    return traj


def drift(traj: Trajectory, invariants: Mapping[str, Poly],
          params: Optional[Mapping[str, complex]] = None) -> Dict[str, float]:
    out = {}
    for name, p in invariants.items():
        f = compile_poly(p, traj.coords, params)
        base = f(traj.states[0].x)
        out[name] = max(abs(f(s.x) - base) for s in traj.states)
    return out


def lambda_invariants(m: Optional[Genus2Model] = None) -> Dict[str, Poly]:
    m = m or default_model()
    return {k: m.lam[k] for k in LAMBDAS}


# -- points from the sigma series --------------------------------------------------

G2_INDEX = {"x2": (2, 0), "x3": (3, 0), "x4": (4, 0), "z4": (1, 1), "z5": (2, 1), "z6": (3, 1)}


def genus2_point(lam: Sequence[complex], u: Sequence[complex], truncation: int = 17,
                 dps: Optional[int] = 30) -> np.ndarray:
    """(x2, x3, x4, z4, z5, z6) = (wp20, wp30, wp40, wp13, wp23, wp33) at u."""
    ev = eval_wp(series(2, truncation), lam, u, G2_INDEX.values(), dps=dps)
    return np.array([ev.values[G2_INDEX[c]] for c in COORDS], dtype=complex)


def genus1_point(g: Sequence[complex], u: complex, truncation: int = 25) -> np.ndarray:
    ev = eval_wp(series(1, truncation), g, (u,), [(2, 0), (3, 0), (4, 0)])
    return np.array([ev.values[(2, 0)], ev.values[(3, 0)], ev.values[(4, 0)]], dtype=complex)


# -- KdV residual ---------------------------------------------------------------------

@dataclass
class ResidualReport:
    lam: Tuple[complex, ...]
    points: List[Tuple[complex, complex]]
    kdv: List[float]
    chi2: List[float]
    anti: List[float]
    errors: List[str] = field(default_factory=list)

    @property
    def max_kdv(self) -> float:
        return max(self.kdv, default=0.0)

    @property
    def max_chi2(self) -> float:
        return max(self.chi2, default=0.0)

    @property
    def min_anti(self) -> float:
        return min(self.anti, default=0.0)

    def to_dict(self) -> dict:
        return {"lambda": [str(z) for z in self.lam],
                "points": [[str(a), str(b)] for a, b in self.points],
                "kdv_residual": self.kdv, "chi2_residual": self.chi2, "anti_residual": self.anti,
                "max_kdv": self.max_kdv, "max_chi2": self.max_chi2, "min_anti": self.min_anti,
                "errors": self.errors}


def kdv_residual(lam: Sequence[complex], grid: Sequence[Tuple[complex, complex]], truncation: int = 17,
                 dps: Optional[int] = 30, udot_coefficient: int = 4) -> ResidualReport:
    """|U''' - 6UU' - c Udot| with U = 2 wp20 on a grid, plus z6' - 8 x2 z5 - 4 x3 z4.

    ``anti`` holds the same residual with coefficient 3 in place of 4.
    """
    s = series(2, truncation)
    idx = [(2, 0), (3, 0), (5, 0), (2, 1), (1, 1), (4, 1)]
    rep = ResidualReport(tuple(complex(x) for x in lam), [], [], [], [])
    for u in grid:
        try:
            ev = eval_wp(s, lam, u, idx, dps=dps)
        except NearZeroSigma as exc:
            rep.errors.append(str(exc))
            continue
        w = ev.raw
        U, U1, U3, Ud = (2 * w[k] for k in [(2, 0), (3, 0), (5, 0), (2, 1)])
        rep.points.append((complex(u[0]), complex(u[1])))
        rep.kdv.append(abs(complex(U3 - 6 * U * U1 - udot_coefficient * Ud)))
        rep.anti.append(abs(complex(U3 - 6 * U * U1 - 3 * Ud)))
        rep.chi2.append(abs(complex(w[(4, 1)] - 8 * w[(2, 0)] * w[(2, 1)] - 4 * w[(3, 0)] * w[(1, 1)])))
    return rep


def parse_grid(spec: str) -> List[Tuple[complex, complex]]:
    """``"u1a,u1b,...;u3a,u3b,..."`` (product grid) or ``"u1:u3 u1:u3 ..."`` (explicit list)."""
    spec = spec.strip()
    if ";" in spec:
        a, b = spec.split(";")
        xs = [complex(v) for v in a.split(",") if v.strip()]
        ys = [complex(v) for v in b.split(",") if v.strip()]
        return [(x, y) for x in xs for y in ys]
    out = []
    for tok in spec.split():
        a, b = tok.split(":")
        out.append((complex(a), complex(b)))
    return out


DEFAULT_KDV_GRID = "0.1,-0.125,0.15;-0.002,0.0015,0.003"


# -- singular points of pi_2 -------------------------------------------------------------

def jacobian_minors(m: Optional[Genus2Model] = None) -> List[Poly]:
    """The fifteen 4x4 minors of the 6x4 Jacobian of (lambda4^, ..., lambda10^)."""
    m = m or default_model()
    J = [[m.lam[l].diff(c) for l in LAMBDAS] for c in COORDS]
    return [det([J[r] for r in rows]) for rows in combinations(range(6), 4)]


FAMILY = VarTable.of("FAMILY", [("x2", 2), ("x4", 4), ("z4", 4), ("w", 2)])


def singular_family() -> Dict[str, Dict[str, Poly]]:
    """Families on x3 = z5 = 0 where every minor vanishes.

    On x3 = z5 = 0 only one minor survives, proportional to
    x2 x4 z6 - x4^2 z4 + z6^2; it vanishes on z6 = x4 w, z4 = w (x2 + w),
    and on the branch x4 = z6 = 0.
    """
    x2, x4, z4, w = FAMILY.vars("x2", "x4", "z4", "w")
    zero = FAMILY.zero()
    return {
        "main": {"x2": x2, "x3": zero, "x4": x4, "z4": w * (x2 + w), "z5": zero, "z6": x4 * w},
        "x4_zero": {"x2": x2, "x3": zero, "x4": zero, "z4": z4, "z5": zero, "z6": zero},
    }


def singularity_probe(samples: int = 20, seed: int = 0, eps: float = 1e-8,
                      m: Optional[Genus2Model] = None) -> Report:
    """Minor magnitudes and |Delta(lambda^)| at random and at singular points, plus exact checks."""
    if samples <= 0:
        raise ValueError("samples must be positive")
    m = m or default_model()
    rng = random.Random(seed)
    rep = Report("probe", meta={"seed": seed, "samples": samples, "eps": eps})
    from .genus1 import build_genus1
    g1 = build_genus1()
    for k in range(min(samples, 5)):
        a = rng.randint(-9, 9) or 1
        pt = {"x2": a, "x3": 0, "x4": 0}
        g2v, g3v = g1.g2_hat.exact_value(pt), g1.g3_hat.exact_value(pt)
        rep.check(f"probe.g1.{k}", f"pi1({a},0,0) lies on the discriminant",
                  g2v ** 3 - 27 * g3v ** 2 == 0, "singular", g2=str(g2v), g3=str(g3v))

    minors = jacobian_minors(m)
    D = delta_hat(m)
    fam = singular_family()
    for name, sub in fam.items():
        on_minors = [mi.substitute(sub, FAMILY) for mi in minors]
        rep.check(f"probe.g2.family_{name}.minors", f"all 15 minors vanish on the {name} family",
                  on_minors, "singular")
        rep.check(f"probe.g2.family_{name}.delta", f"Delta(lambda^) vanishes on the {name} family",
                  D.substitute(sub, FAMILY), "singular")

    fm = [compile_poly(mi, COORDS) for mi in minors]
    fd = compile_poly(D, COORDS)
    fmain = {c: compile_poly(p, ("x2", "x4", "w")) for c, p in fam["main"].items()}
    violations = 0
    for k in range(samples):
        x = np.array([complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in COORDS])
        mins = max(abs(f(x)) for f in fm)
        dv = abs(fd(x))
        rep.add(Entry(f"probe.g2.random.{k:03d}", "random point: raw magnitudes", "info", 0, "singular",
                      {"max_minor": mins, "abs_delta": dv}))
        p = np.array([complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(3)])
        y = np.array([fmain[c](p) for c in COORDS])
        mins_s = max(abs(f(y)) for f in fm)
        dv_s = abs(fd(y))
        if mins_s < eps and dv_s > eps * (1 + np.max(np.abs(y))) ** 40:
            violations += 1
        rep.add(Entry(f"probe.g2.singular.{k:03d}", "singular-family point: raw magnitudes", "info", 0,
                      "singular", {"max_minor": mins_s, "abs_delta": dv_s}))
    rep.meta["violations"] = violations
    return rep


# -- convergence and commutation studies -----------------------------------------------

def halving_study(D: Derivation, x0, t_end: float, h: float, invariants: Mapping[str, Poly],
                  coords=None, levels: int = 2) -> Dict[str, List[float]]:
    """Drift of each invariant for step h, h/2, ...; the ratios approach 16 for RK4."""
    out: Dict[str, List[float]] = {k: [] for k in invariants}
    for k in range(levels):
        tr = integrate_flow(D, x0, t_end, step=h / 2 ** k, coords=coords, invariants=invariants)
        for name, v in tr.drift.items():
            out[name].append(v)
    return out


def flow_commutator(A: Derivation, B: Derivation, x0, s: float, t: float, tol: float = 1e-12,
                    coords=None) -> float:
    """|phi_B(t) phi_A(s) x0 - phi_A(s) phi_B(t) x0|."""
    ab = integrate_flow(B, integrate_flow(A, x0, s, tol=tol, coords=coords).final, t, tol=tol, coords=coords)
    ba = integrate_flow(A, integrate_flow(B, x0, t, tol=tol, coords=coords).final, s, tol=tol, coords=coords)
    return float(np.max(np.abs(ab.final - ba.final)))


def matched_derivative_gap(m: Genus2Model, x0, h: float = 1e-4) -> float:
    """Central differences of z4 along L1 and of x2 along L3 at the same point."""
    i_z4, i_x2 = COORDS.index("z4"), COORDS.index("x2")
    L1, L3 = m["L1"], m["L3"]

    def diff(D, i):
        fwd = integrate_flow(D, x0, h, step=h, coords=COORDS).final[i]
        bwd = integrate_flow(D, x0, h, step=h, coords=COORDS, direction=-1).final[i]
        return (fwd - bwd) / (2 * h)
    return abs(diff(L1, i_z4) - diff(L3, i_x2))
