"""Derivations of a polynomial ring, stored by their values on generators."""

from __future__ import annotations

import json
from itertools import combinations
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .polyring import Poly, PolyError, TableMismatch, VarTable, to_text

Coefficient = Union[Poly, int]
FieldCombination = List[Tuple[Coefficient, "Derivation"]]


class Derivation:
    """A vector field ``sum_g action[g] * d/dg`` over a VarTable.

    Generators missing from ``action`` are sent to zero.
    """

    __slots__ = ("table", "_action", "label")

    def __init__(self, table: VarTable, action: Mapping[str, Poly], label: str = ""):
        act = {}
        for name in table.names:
            img = action.get(name)
            if img is None:
                img = table.zero()
            elif not isinstance(img, Poly):
                img = Poly.constant(table, img)
            elif img.table != table:
                raise TableMismatch(f"action on {name} lives over {img.table.name}")
            act[name] = img
        unknown = set(action) - set(table.names)
        if unknown:
            raise PolyError(f"unknown generators {sorted(unknown)}")
        self.table = table
        self._action = act
        self.label = label

    @property
    def action(self) -> Dict[str, Poly]:
        return dict(self._action)

    def on(self, name: str) -> Poly:
        return self._action[name]

    def __call__(self, p: Poly) -> Poly:
        return apply(self, p)

    def __eq__(self, other):
        return (isinstance(other, Derivation) and self.table == other.table
                and self._action == other._action)

    def __hash__(self):
        return hash(tuple(self._action.values()))

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self._action.values())

    def __add__(self, other: "Derivation") -> "Derivation":
        _check(self, other)
        return Derivation(self.table, {g: self._action[g] + other._action[g]
                                       for g in self.table.names})

    def __sub__(self, other: "Derivation") -> "Derivation":
        return self + (-1) * other

    def __rmul__(self, c) -> "Derivation":
        if isinstance(c, Poly) and c.table != self.table:
            raise TableMismatch("coefficient over a different table")
        return Derivation(self.table, {g: c * p for g, p in self._action.items()})

    def __neg__(self):
        return (-1) * self

    def replace(self, name: str, image: Poly, label: Optional[str] = None) -> "Derivation":
        act = dict(self._action)
        act[name] = image
        return Derivation(self.table, act, self.label if label is None else label)

    def raises_grade_by(self) -> Optional[int]:
        """The shift k with grade(D g) = grade(g) + k on all generators, if any."""
        shifts = set()
        for name, img in self._action.items():
            if img.is_zero():
                continue
            gr = img.grade()
            if not isinstance(gr, int):
                return None
            shifts.add(gr - self.table.grade_of(name))
        if len(shifts) > 1:
            return None
        return shifts.pop() if shifts else 0

    def to_dict(self) -> Dict[str, object]:
        return {"label": self.label, "table": self.table.name,
                "action": {g: to_text(p) for g, p in self._action.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def __str__(self):
        rows = [f"{self.label or 'D'}:"]
        rows += [f"  {g} -> {to_text(p)}" for g, p in self._action.items()]
        return "\n".join(rows)

    def __repr__(self):
        return f"Derivation({self.label or '?'} on {self.table.name})"


def _check(a: Derivation, b: Derivation):
    if a.table != b.table:
        raise TableMismatch(f"{a.table.name} vs {b.table.name}")


def apply(D: Derivation, p: Poly) -> Poly:
    """Leibniz extension of D to an arbitrary polynomial."""
    if p.table != D.table:
        raise TableMismatch(f"{D.table.name} vs {p.table.name}")
    result = D.table.zero()
    for name in p.variables():
        img = D._action[name]
        if img.is_zero():
            continue
        result = result + p.diff(name) * img
    return result


def iterate(D: Derivation, p: Poly, n: int) -> Poly:
    for _ in range(n):
        p = apply(D, p)
    return p


def bracket(D1: Derivation, D2: Derivation, label: str = "") -> Derivation:
    """Commutator ``[D1, D2] g = D1(D2 g) - D2(D1 g)``."""
    _check(D1, D2)
    act = {g: apply(D1, D2._action[g]) - apply(D2, D1._action[g]) for g in D1.table.names}
    return Derivation(D1.table, act, label or f"[{D1.label},{D2.label}]")


def combine(table: VarTable, combination: Iterable[Tuple[Coefficient, Derivation]]) -> Derivation:
    total = Derivation(table, {})
    for c, D in combination:
        _check(total, D)
        if not isinstance(c, Poly):
            c = Poly.constant(table, c)
        total = total + c * D
    return total


def field_residual(D: Derivation, combination: Sequence[Tuple[Coefficient, Derivation]]) -> Dict[str, Poly]:
    """Per-generator difference ``D g - sum c_i D_i g``."""
    rhs = combine(D.table, combination)
    return {g: D._action[g] - rhs._action[g] for g in D.table.names}


def equal_fields(D: Derivation, combination: Sequence[Tuple[Coefficient, Derivation]]) -> bool:
    return all(r.is_zero() for r in field_residual(D, combination).values())


def jacobi(A: Derivation, B: Derivation, C: Derivation) -> Derivation:
    return bracket(bracket(A, B), C) + bracket(bracket(B, C), A) + bracket(bracket(C, A), B)


def jacobi_failures(fields: Sequence[Derivation]) -> List[Tuple[str, str, str]]:
    bad = []
    for A, B, C in combinations(fields, 3):
        if not jacobi(A, B, C).is_zero():
            bad.append((A.label, B.label, C.label))
    return bad
