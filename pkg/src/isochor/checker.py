"""Explicit-state model checking of the branching-time logic over system LTSs.

Every step consumes at least one action leaf, so LTSs are acyclic and each
temporal operator is labeled in one pass over a reversed topological order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import logic
from .logic import AXVar, And, Atom, Dead, EG, EU, Formula, Not, Top
from .semantics import read_expr
from .statespace import Lts, render_label
from .syntax import TRUE


class CheckError(ValueError):
    pass


@dataclass
class Verdict:
    holds: bool
    # (source, label, target) steps from state 0
    witness: list[tuple[int, object, int]] = field(default_factory=list)

    def trace_lines(self) -> list[str]:
        return [f"TRACE: {s} -{render_label(l)}-> {t}" for s, l, t in self.witness]


class Labeler:
    """Per-state truth values of formulas over one LTS, memoized per subformula.

    With ``observer_atoms`` (the default) an atom ``p:(E)`` reads ``p``'s store
    regardless of the current permissions; only the value and type checks of
    expression evaluation apply.  ``observer_atoms=False`` makes the atom an
    ordinary permission-checked read by ``p``.
    """

    def __init__(self, lts: Lts, observer_atoms: bool = True):
        if lts.kind != "system":
            raise CheckError("formulas are checked over system LTSs")
        self.lts = lts
        self.observer_atoms = observer_atoms
        self.cache: dict[Formula, list[bool]] = {}

    def __call__(self, f: Formula) -> list[bool]:
        hit = self.cache.get(f)
        if hit is None:
            hit = self.cache[f] = self._label(f)
        return hit

    def _label(self, f: Formula) -> list[bool]:
        lts = self.lts
        n = lts.size
        if isinstance(f, Top):
            return [True] * n
        if isinstance(f, Not):
            return [not v for v in self(f.body)]
        if isinstance(f, And):
            left, right = self(f.left), self(f.right)
            return [a and b for a, b in zip(left, right)]
        if isinstance(f, Dead):
            return list(lts.dead)
        if isinstance(f, Atom):
            return [self._atom(f, s) for s in lts.states]
        if isinstance(f, AXVar):
            body = self(f.body)
            key = (f.process, f.var)
            return [
                all(body[t] for label, t in lts.successors(i) if label.changed == key)
                for i in range(n)
            ]
        if isinstance(f, EG):
            body = self(f.body)
            out = [False] * n
            for i in reversed(lts.topological()):
                succ = lts.successors(i)
                out[i] = body[i] and (not succ or any(out[t] for _, t in succ))
            return out
        if isinstance(f, EU):
            left, right = self(f.left), self(f.right)
            out = [False] * n
            for i in reversed(lts.topological()):
                out[i] = right[i] or (left[i] and any(out[t] for _, t in lts.successors(i)))
            return out
        raise TypeError(f"unknown formula {f!r}")

    def _atom(self, f: Atom, state) -> bool:
        try:
            store = state.store(f.process)
        except KeyError:
            return False
        return read_expr(store, f.process, f.expr, observer=self.observer_atoms) is TRUE

    # -- witnesses

    def witness(self, f: Formula, state: int, value: bool) -> list:
        """Steps from ``state`` explaining why ``f`` has ``value`` there."""
        lts = self.lts
        if isinstance(f, Not):
            return self.witness(f.body, state, not value)
        if isinstance(f, And):
            if value:
                return self.witness(f.left, state, True) or self.witness(f.right, state, True)
            first = f.left if not self(f.left)[state] else f.right
            return self.witness(first, state, False)
        if isinstance(f, AXVar) and not value:
            body = self(f.body)
            key = (f.process, f.var)
            for label, t in lts.successors(state):
                if label.changed == key and not body[t]:
                    return [(state, label, t)] + self.witness(f.body, t, False)
        if isinstance(f, EU) and value:
            path, end = self._path_to(state, self(f), self(f.right))
            return path + self.witness(f.right, end, True)
        if isinstance(f, EG) and value:
            holds = self(f)
            path, i = [], state
            while lts.successors(i):
                label, t = next((l, t) for l, t in lts.successors(i) if holds[t])
                path.append((i, label, t))
                i = t
            return path
        return []

    def _path_to(self, start: int, through: list[bool], goal: list[bool]):
        """Shortest path from ``start`` via ``through`` states to a ``goal`` state."""
        parent = {start: None}
        queue = deque([start])
        while queue:
            i = queue.popleft()
            if goal[i]:
                end, path = i, []
                while parent[i] is not None:
                    src, label = parent[i]
                    path.append((src, label, i))
                    i = src
                return path[::-1], end
            for label, t in self.lts.successors(i):
                if t not in parent and through[t]:
                    parent[t] = (i, label)
                    queue.append(t)
        raise AssertionError("no path although the formula holds")


def check(lts: Lts, formula: Formula, processes: Optional[Iterable[str]] = None,
          observer_atoms: bool = True, labeler: Optional[Labeler] = None) -> Verdict:
    """Truth of ``formula`` at state 0, with a witness path when one exists."""
    if processes is not None:
        unknown = sorted(logic.processes_of(formula) - set(processes))
        if unknown:
            raise CheckError(f"formula uses undeclared process(es): {', '.join(unknown)}")
    labeler = labeler or Labeler(lts, observer_atoms)
    holds = labeler(formula)[0]
    return Verdict(holds, labeler.witness(formula, 0, holds))
