"""Graded polynomial dynamical systems, polynomial Lie algebras and sigma series
for genus one (on C^3) and genus two (on C^6)."""

from .polyring import Poly, VarTable, parse, to_text
from .vectorfield import Derivation, apply, bracket, equal_fields

__all__ = ["Poly", "VarTable", "parse", "to_text", "Derivation", "apply", "bracket", "equal_fields"]
__version__ = "0.1.0"
