"""Branching bisimilarity of finite acyclic LTSs.

Classes are identified by signatures: the set of ``(label, class)`` pairs a
state can reach after silent steps that stay inside its own class.  On a DAG
the classes of all successors are final before a state is visited in reverse
topological order, so a single bottom-up pass yields the coarsest branching
bisimulation.  Both LTSs are labeled in the same class table; they are
equivalent when their initial states share a class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .semantics import GlobalFamily, LocalFamily
from .projection import project_all
from .statespace import Lts, explore_program_family, gc_paused, is_silent, label_key, render_label
from .syntax import Program

TAU_ID = 0


@dataclass
class Classes:
    """Per-state class ids and class signatures for a set of LTSs."""

    of: list[list[int]] = field(default_factory=list)  # of[k][state] for LTS k
    sig: list[frozenset] = field(default_factory=list)  # signature of each class
    labels: list[str] = field(default_factory=lambda: ["tau"])
    witness: list[list[dict]] = field(default_factory=list)


class _Engine:
    def __init__(self, silent: Callable[[object], bool]):
        self.silent = silent
        self.label_ids: dict[str, int] = {"tau": TAU_ID}
        self.classes = Classes()
        self.by_sig: dict[frozenset, int] = {}
        self._ids: dict[object, int] = {}

    def label_id(self, label) -> int:
        i = self._ids.get(label)
        if i is None:
            i = self._ids[label] = self._new_label_id(label)
        return i

    def _new_label_id(self, label) -> int:
        if self.silent(label):
            return TAU_ID
        key = label_key(label)
        i = self.label_ids.get(key)
        if i is None:
            i = self.label_ids[key] = len(self.label_ids)
            self.classes.labels.append(key)
        return i

    def _class_for(self, sig: frozenset) -> int:
        c = self.by_sig.get(sig)
        if c is None:
            c = self.by_sig[sig] = len(self.classes.sig)
            self.classes.sig.append(sig)
        return c

    def add(self, lts: Lts) -> list[int]:
        n = lts.size
        cls = [0] * n
        label_id = self.label_id
        sigs = self.classes.sig
        for s in reversed(lts.topological()):
            pairs = set()
            tau_targets: dict[int, list[int]] = {}
            for label, t in lts.successors(s):
                a = label_id(label)
                c = cls[t]
                pairs.add((a, c))
                if a == TAU_ID:
                    tau_targets.setdefault(c, []).append(t)
            chosen = None
            for c in sorted(tau_targets):
                # Treat the silent steps into c as inert and compare with c itself.
                candidate = {p for p in pairs if p != (TAU_ID, c)} | sigs[c]
                if frozenset(candidate) == sigs[c]:
                    chosen = c
                    break
            cls[s] = chosen if chosen is not None else self._class_for(frozenset(pairs))
        self.classes.of.append(cls)
        return cls


@dataclass
class BisimResult:
    equivalent: bool
    # labels of a behaviour that one side can show and the other cannot follow
    trace: list[str] = field(default_factory=list)
    side: Optional[int] = None  # 0 or 1: which LTS performs ``trace``
    classes: int = 0


def branching_bisimilar(l1: Lts, l2: Lts, silent: Callable[[object], bool] = is_silent) -> BisimResult:
    engine = _Engine(silent)
    with gc_paused():
        c1 = engine.add(l1)
        c2 = engine.add(l2)
    ncls = len(engine.classes.sig)
    if c1[0] == c2[0]:
        return BisimResult(True, classes=ncls)
    trace, side = _distinguish(engine, (l1, l2), (c1, c2))
    return BisimResult(False, trace, side, ncls)


def _weak_moves(lts: Lts, cls: list[int], engine: _Engine, start: int, label: int):
    """``(path, target)`` for every ``tau* label`` move from ``start``.

    A silent ``label`` also allows the empty move.
    """
    out = []
    if label == TAU_ID:
        out.append(([], start))
    seen = {start}
    frontier = [(start, [])]
    while frontier:
        nxt = []
        for s, path in frontier:
            for l, t in lts.successors(s):
                a = engine.label_id(l)
                step = path + [render_label(l)]
                if a == label:
                    out.append((step, t))
                if a == TAU_ID and t not in seen:
                    seen.add(t)
                    nxt.append((t, step))
        frontier = nxt
    return out


def _distinguish(engine: _Engine, ltss, classes, depth: int = 64):
    """Best-effort distinguishing behaviour, found by a greedy descent."""
    sigs = engine.classes.sig
    states = [0, 0]
    trace: list[str] = []
    side = 0
    for _ in range(depth):
        x, y = states
        cx, cy = classes[0][x], classes[1][y]
        if cx == cy:
            break
        extra = sorted(sigs[cx] - sigs[cy])
        side = 0
        if not extra:
            extra, side = sorted(sigs[cy] - sigs[cx]), 1
        if not extra:
            break
        a, target_cls = extra[0]
        me, other = (0, 1) if side == 0 else (1, 0)
        mine = [m for m in _weak_moves(ltss[me], classes[me], engine, states[me], a)
                if classes[me][m[1]] == target_cls]
        if not mine:
            break
        path, u = min(mine, key=lambda m: len(m[0]))
        trace += path
        theirs = _weak_moves(ltss[other], classes[other], engine, states[other], a)
        if not theirs or any(classes[other][v] == target_cls for _, v in theirs):
            return trace, me
        _, v = theirs[0]
        states[me], states[other] = u, v
        side = me
    return trace, side


# -- program-family equivalence ------------------------------------------------


@dataclass
class EquivalenceResult:
    equivalent: bool
    global_states: int
    local_states: int
    trace: list[str] = field(default_factory=list)
    trace_side: Optional[str] = None  # "global" or "local"


def check_operational_equivalence(program: Program, limit: Optional[int] = None) -> EquivalenceResult:
    """Compare a program with the family of its projections, tau being silent."""
    glob = explore_program_family(GlobalFamily(program), limit)
    local = explore_program_family(LocalFamily.of(project_all(program)), limit)
    result = branching_bisimilar(glob, local)
    side = None if result.side is None else ("global", "local")[result.side]
    return EquivalenceResult(result.equivalent, glob.size, local.size, result.trace, side)
