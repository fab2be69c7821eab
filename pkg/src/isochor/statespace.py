"""Breadth-first exploration into numbered LTSs, and their exports."""

from __future__ import annotations

import gc
import json
from contextlib import contextmanager
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Callable, Optional

from .semantics import (
    GlobalFamily, LocalFamily, ProgramFamily, SystemLabel, SystemState, family_steps,
    has_program_steps, program_steps, system_steps,
)
from .syntax import Action, Tau, render_action, render_ground, render_value

DEFAULT_LIMIT = 1_000_000


@contextmanager
def gc_paused():
    """Suspend the cyclic collector while building large acyclic structures.

    Exploration allocates millions of small tuples and no cycles; the
    collector would otherwise rescan the growing heap over and over.
    """
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


class ExplorationLimitError(RuntimeError):
    def __init__(self, limit: int):
        super().__init__(f"state limit of {limit} states exceeded")
        self.limit = limit


@dataclass
class Lts:
    """A numbered LTS; state 0 is initial.

    ``kind`` is ``"system"`` (labels are :class:`SystemLabel`) or ``"program"``
    (labels are bare actions).  For system LTSs ``dead[i]`` records that the
    programs could move but no system step exists.
    """

    kind: str
    states: list
    edges: list[tuple[int, object, int]]
    dead: list[bool] = field(default_factory=list)
    _succ: Optional[list] = field(default=None, repr=False)
    _topo: Optional[list] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.states)

    def successors(self, index: int) -> list[tuple[object, int]]:
        if self._succ is None:
            with gc_paused():
                succ = [[] for _ in self.states]
                for src, label, dst in self.edges:
                    succ[src].append((label, dst))
            self._succ = succ
        return self._succ[index]

    def topological(self) -> list[int]:
        """States ordered so that every edge points forward.

        Index order usually qualifies, but not always: a choice drops its
        other branch, so two paths to one state may differ in length.
        """
        if self._topo is None:
            indegree = [0] * self.size
            for _, _, t in self.edges:
                indegree[t] += 1
            order = [i for i in range(self.size) if indegree[i] == 0]
            for i in order:  # grows while iterating
                for _, t in self.successors(i):
                    indegree[t] -= 1
                    if indegree[t] == 0:
                        order.append(t)
            if len(order) != self.size:
                raise ValueError("LTS has a cycle")
            self._topo = order
        return self._topo

    def dead_states(self) -> list[int]:
        return [i for i, d in enumerate(self.dead) if d]

    def label_text(self, label) -> str:
        return render_label(label)


@lru_cache(maxsize=None)
def render_label(label) -> str:
    """Canonical rendering used in every export."""
    if isinstance(label, SystemLabel):
        return render_ground(label.ground)
    return render_action(label)


@lru_cache(maxsize=None)
def label_key(label) -> str:
    """Rendering fine enough to tell distinct labels apart."""
    if isinstance(label, SystemLabel):
        if isinstance(label.ground, Tau):
            return "tau"
        return f"{render_action(label.action)}/{render_ground(label.ground)}"
    return render_action(label)


def is_silent(label) -> bool:
    if isinstance(label, SystemLabel):
        return isinstance(label.action, Tau)
    return isinstance(label, Tau)


def _first_key(edge) -> str:
    return label_key(edge[0])


def _explore(initial, successors: Callable, limit: Optional[int]):
    with gc_paused():
        return _bfs(initial, successors, limit)


def _bfs(initial, successors: Callable, limit: Optional[int]):
    limit = DEFAULT_LIMIT if limit is None else limit
    index = {initial: 0}
    states = [initial]
    edges = []
    i = 0
    while i < len(states):
        state = states[i]
        seen = set()
        succ = successors(state)
        if len(succ) > 1:
            # Stable: ties keep generation order, which is deterministic too.
            succ = sorted(succ, key=_first_key)
        for label, target in succ:
            j = index.get(target)
            if j is None:
                if len(states) >= limit:
                    raise ExplorationLimitError(limit)
                j = index[target] = len(states)
                states.append(target)
            if (label, j) not in seen:
                seen.add((label, j))
                edges.append((i, label, j))
        i += 1
    return states, edges


def explore_system(initial: SystemState, limit: Optional[int] = None) -> Lts:
    states, edges = _explore(initial, system_steps, limit)
    lts = Lts("system", states, edges)
    lts.dead = [
        has_program_steps(s) and not lts.successors(i) for i, s in enumerate(states)
    ]
    return lts


def explore_program_family(family: ProgramFamily, limit: Optional[int] = None,
                           steps=program_steps) -> Lts:
    states, edges = _explore(family, lambda f: family_steps(f, steps), limit)
    return Lts("program", states, edges, [False] * len(states))


# -- exports -----------------------------------------------------------------


def export_aut(lts: Lts) -> str:
    lines = [f"des (0,{len(lts.edges)},{lts.size})"]
    lines += [f'({s},"{render_label(l)}",{t})' for s, l, t in lts.edges]
    return "\n".join(lines) + "\n"


def export_dot(lts: Lts) -> str:
    lines = ["digraph lts {", "  node [shape=circle];", "  0 [shape=doublecircle];"]
    for i in lts.dead_states():
        lines.append(f'  {i} [style=filled, fillcolor=red, label="{i} dead"];')
    if lts.size == 1 and not lts.dead_states():
        lines.append("  0;")
    for s, l, t in lts.edges:
        lines.append(f"  {s} -> {t} [label={json.dumps(render_label(l))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _describe(state) -> dict:
    if isinstance(state, SystemState):
        return {
            "stores": {
                p: {
                    var: {"value": render_value(v), "perms": sorted(perms)}
                    for var, v, perms in store.entries
                }
                for p, store in state.stores
            },
            "channels": {
                str(ch): [render_value(v) for v in chan.buffer]
                for ch, chan in state.channels if chan.buffer
            },
        }
    return {}


def export_json(lts: Lts) -> str:
    payload = {
        "kind": lts.kind,
        "initial": 0,
        "states": [dict(id=i, **_describe(s)) for i, s in enumerate(lts.states)],
        "edges": [{"source": s, "label": render_label(l), "target": t} for s, l, t in lts.edges],
        "deadStates": lts.dead_states(),
    }
    return json.dumps(payload, indent=1, sort_keys=False) + "\n"


def global_family(program) -> GlobalFamily:
    return GlobalFamily(program)


def local_family(program) -> LocalFamily:
    from .projection import project_all

    return LocalFamily.of(project_all(program))
