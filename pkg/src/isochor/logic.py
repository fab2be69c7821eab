"""Formulas of the branching-time logic and their shorthand expansions."""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import Expr, render_expr


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Top(Formula):
    def __str__(self) -> str:
        return "tt"


@dataclass(frozen=True)
class Not(Formula):
    body: Formula

    def __str__(self) -> str:
        return f"!{_wrap(self.body)}"


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"{_wrap(self.left)} && {_wrap(self.right)}"


@dataclass(frozen=True)
class EG(Formula):
    body: Formula

    def __str__(self) -> str:
        return f"EG({self.body})"


@dataclass(frozen=True)
class EU(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"EU({self.left}, {self.right})"


@dataclass(frozen=True)
class Atom(Formula):
    process: str
    expr: Expr

    def __str__(self) -> str:
        return f"{self.process}:({render_expr(self.expr)})"


@dataclass(frozen=True)
class AXVar(Formula):
    """Every step changing ``process.var`` leads to a state satisfying ``body``."""

    process: str
    var: str
    body: Formula

    def __str__(self) -> str:
        return f"AX[{self.process}.{self.var}]({self.body})"


@dataclass(frozen=True)
class Dead(Formula):
    def __str__(self) -> str:
        return "dead"


def _wrap(f: Formula) -> str:
    return f"({f})" if isinstance(f, And) else str(f)


TOP = Top()
DEAD = Dead()
BOTTOM = Not(TOP)


def lor(left: Formula, right: Formula) -> Formula:
    return Not(And(Not(left), Not(right)))


def ag(body: Formula, literal: bool = False) -> Formula:
    # The dual !EU(tt, !f) is the default; the literal table entry EU(tt, !f)
    # is kept only for comparison.
    if literal:
        return EU(TOP, Not(body))
    return Not(EU(TOP, Not(body)))


def au(left: Formula, right: Formula) -> Formula:
    return Not(lor(EU(Not(right), Not(lor(left, right))), EG(Not(right))))


def processes_of(formula: Formula) -> set[str]:
    if isinstance(formula, (Atom, AXVar)):
        found = {formula.process}
    else:
        found = set()
    for child in ("body", "left", "right"):
        sub = getattr(formula, child, None)
        if isinstance(sub, Formula):
            found |= processes_of(sub)
    return found
