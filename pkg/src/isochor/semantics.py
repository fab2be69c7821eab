"""Small-step semantics of programs, stores, channels and whole systems.

Every step function returns a list of alternatives; an empty list means the
action is blocked.  Reads and writes that are undefined (missing variable,
missing permission, ill-typed operands, overflow) come back as ``None``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Union

from .parser import ChoreographyFile
from .projection import project_all
from .syntax import (
    ACQ, FALSE, INT_MAX, INT_MIN, ONE, REL, SINK, TRUE, Act, Action, Add, And, Assign,
    ChannelName, Choice, Constant, Eq, Expr, GroundAction, GroundAssign, GroundRecv,
    GroundSend, GroundTest, Lit, Md5, Not, Par, Program, Recv, Send, Seq, Tau, Test, Value,
    Var, subject_of,
)


class WellFormednessError(ValueError):
    pass


# -- stores ------------------------------------------------------------------


@dataclass(frozen=True)
class Store:
    """Partial map from variables to ``(value, permitted processes)``."""

    entries: tuple[tuple[str, Value, frozenset], ...] = ()

    @classmethod
    def of(cls, mapping: dict[str, tuple[Value, Iterable[str]]]) -> "Store":
        items = []
        for var, (value, perms) in mapping.items():
            if var == SINK:
                raise WellFormednessError("the sink variable cannot be stored")
            items.append((var, value, frozenset(perms)))
        return cls(tuple(sorted(items, key=lambda e: e[0])))

    def get(self, var: str) -> Optional[tuple[Value, frozenset]]:
        for name, value, perms in self.entries:
            if name == var:
                return value, perms
        return None

    def __contains__(self, var: str) -> bool:
        return self.get(var) is not None

    def variables(self) -> list[str]:
        return [e[0] for e in self.entries]

    def with_entry(self, var: str, value: Value, perms: frozenset) -> "Store":
        return Store(tuple(
            (name, value, perms) if name == var else (name, v, r)
            for name, v, r in self.entries
        ))

    def as_dict(self) -> dict[str, tuple[Value, frozenset]]:
        return {name: (v, r) for name, v, r in self.entries}


def read_expr(store: Store, reader: str, expr: Expr,
              observer: bool = False) -> Optional[Value]:
    """Evaluate ``expr`` as ``reader``; ``observer`` skips permission checks."""
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Var):
        entry = store.get(expr.name)
        if entry is None or not (observer or reader in entry[1]):
            return None
        return entry[0]
    if isinstance(expr, Not):
        v = read_expr(store, reader, expr.operand, observer)
        if v is TRUE:
            return FALSE
        if v is FALSE:
            return TRUE
        return None
    if isinstance(expr, Md5):
        v = read_expr(store, reader, expr.operand, observer)
        if not isinstance(v, str):
            return None
        return hashlib.md5(v.encode("utf-8")).hexdigest()
    left = read_expr(store, reader, expr.left, observer)
    right = read_expr(store, reader, expr.right, observer)
    if left is None or right is None:
        return None
    if isinstance(expr, Eq):
        return TRUE if left == right else FALSE
    if isinstance(expr, And):
        if left not in (TRUE, FALSE) or right not in (TRUE, FALSE):
            return None
        return TRUE if left is TRUE and right is TRUE else FALSE
    if isinstance(expr, Add):
        if isinstance(left, int) and isinstance(right, int):
            total = left + right
            return total if INT_MIN <= total <= INT_MAX else None
        if isinstance(left, str) and isinstance(right, str):
            return left + right
        return None
    raise TypeError(f"unknown expression {expr!r}")


def write_val(store: Store, writer: str, var: str, value: Value,
              everyone: frozenset) -> Optional[Store]:
    """Write ``value`` to ``var`` on behalf of ``writer``.

    ``acq`` narrows the permissions to the writer and ``rel`` widens them to
    ``everyone``; neither touches the stored value.
    """
    if var == SINK:
        return store
    entry = store.get(var)
    if entry is None or writer not in entry[1]:
        return None
    old, perms = entry
    if value is ACQ:
        return store.with_entry(var, old, frozenset((writer,)))
    if value is REL:
        return store.with_entry(var, old, everyone)
    return store.with_entry(var, value, perms)


# -- channels ----------------------------------------------------------------


@dataclass(frozen=True)
class Channel:
    buffer: tuple = ()  # front of the queue first
    capacity: Optional[int] = None  # None means unbounded

    def full(self) -> bool:
        return self.capacity is not None and len(self.buffer) >= self.capacity


# -- programs ----------------------------------------------------------------


def program_steps(program: Program) -> list[tuple[Action, Program]]:
    """All ``(action, residual)`` reductions of a program.

    The out-of-order rule keeps the left operand: in ``P1 ; P2`` an action of
    ``P2`` may overtake ``P1`` when its subject does not occur in ``P1``, and
    the result is ``P1 ; P2'``.  Tau has no subject and never overtakes.
    """
    steps = program._steps
    if steps is not None:
        return steps
    if isinstance(program, Act):
        steps = [(program.action, ONE)]
    elif isinstance(program, Choice):
        steps = program_steps(program.left) + program_steps(program.right)
    elif isinstance(program, Par):
        left, right = program.left, program.right
        steps = [(a, Par(p, right)) for a, p in program_steps(left)]
        steps += [(a, Par(left, p)) for a, p in program_steps(right)]
    elif isinstance(program, Seq):
        left, right = program.left, program.right
        steps = [(a, Seq(p, right)) for a, p in program_steps(left)]
        blocked = left.subjects
        for a, p in program_steps(right):
            if not isinstance(a, Tau) and subject_of(a) not in blocked:
                steps.append((a, Seq(left, p)))
    else:
        steps = []
    program._steps = steps
    return steps


def literal_program_steps(program: Program) -> list[tuple[Action, Program]]:
    """Variant whose out-of-order rule discards the overtaken prefix.

    Kept for comparison only: under it a projected family can perform actions
    that its global program has already thrown away.
    """
    if isinstance(program, Act):
        return [(program.action, ONE)]
    if isinstance(program, Choice):
        return literal_program_steps(program.left) + literal_program_steps(program.right)
    if isinstance(program, Par):
        left, right = program.left, program.right
        return ([(a, Par(p, right)) for a, p in literal_program_steps(left)]
                + [(a, Par(left, p)) for a, p in literal_program_steps(right)])
    if isinstance(program, Seq):
        left, right = program.left, program.right
        steps = [(a, Seq(p, right)) for a, p in literal_program_steps(left)]
        for a, p in literal_program_steps(right):
            if not isinstance(a, Tau) and subject_of(a) not in left.subjects:
                steps.append((a, p))
        return steps
    return []


# -- program families --------------------------------------------------------


class GlobalFamily(NamedTuple):
    program: Program

    @property
    def members(self) -> tuple[Program, ...]:
        return (self.program,)

    def replace(self, index: int, program: Program) -> "GlobalFamily":
        return GlobalFamily(program)


class LocalFamily(NamedTuple):
    """Role-indexed local programs; ``roles`` is sorted."""

    roles: tuple[str, ...]
    programs: tuple[Program, ...]

    @classmethod
    def of(cls, mapping: dict[str, Program]) -> "LocalFamily":
        roles = tuple(sorted(mapping))
        return cls(roles, tuple(mapping[r] for r in roles))

    @property
    def members(self) -> tuple[Program, ...]:
        return self.programs

    def replace(self, index: int, program: Program) -> "LocalFamily":
        programs = self.programs
        return LocalFamily(self.roles, programs[:index] + (program,) + programs[index + 1:])


ProgramFamily = Union[GlobalFamily, LocalFamily]


def family_steps(family: ProgramFamily, steps=program_steps):
    """Reductions of a family: one member moves, the others stay put."""
    out = []
    for i, member in enumerate(family.members):
        for action, residual in steps(member):
            out.append((action, family.replace(i, residual)))
    return out


# -- systems -----------------------------------------------------------------


@dataclass(frozen=True)
class SystemLabel:
    action: Action
    ground: GroundAction
    changed: Optional[tuple[str, str]] = None  # (process, variable) whose value changed


Stores = tuple[tuple[str, Store], ...]
Channels = tuple[tuple[ChannelName, Channel], ...]


@dataclass(frozen=True)
class SystemState:
    programs: ProgramFamily
    stores: Stores
    channels: Channels

    @property
    def processes(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.stores)

    def store(self, process: str) -> Store:
        for p, s in self.stores:
            if p == process:
                return s
        raise KeyError(process)

    def channel(self, name: ChannelName) -> Channel:
        for ch, c in self.channels:
            if ch == name:
                return c
        raise KeyError(name)


def _replace_store(stores: Stores, process: str, store: Store) -> Stores:
    return tuple((p, store if p == process else s) for p, s in stores)


def _lookup(stores: Stores, process: str) -> Optional[Store]:
    for p, s in stores:
        if p == process:
            return s
    return None


def store_step(stores: Stores, action: Action,
               candidate: Optional[Value] = None) -> list[tuple[GroundAction, Stores]]:
    """Store-family reduction for ``action``.

    For a receive, ``candidate`` is the value about to be dequeued; the write
    is performed on the receiver's store with the sender's permissions.
    """
    if isinstance(action, Tau):
        return [(action, stores)]
    subject = subject_of(action)
    store = _lookup(stores, subject)
    if store is None:
        return []
    everyone = frozenset(p for p, _ in stores)
    if isinstance(action, Test):
        if read_expr(store, subject, action.expr) is TRUE:
            return [(GroundTest(subject), stores)]
        return []
    if isinstance(action, Assign):
        value = read_expr(store, subject, action.expr)
        if value is None:
            return []
        updated = write_val(store, subject, action.var, value, everyone)
        if updated is None:
            return []
        return [(GroundAssign(subject, action.var, value), _replace_store(stores, subject, updated))]
    if isinstance(action, Send):
        value = read_expr(store, subject, action.expr)
        if value is None:
            return []
        return [(GroundSend(action.channel, value), stores)]
    if isinstance(action, Recv):
        if candidate is None:
            return []
        updated = write_val(store, action.channel.sender, action.var, candidate, everyone)
        if updated is None:
            return []
        return [(GroundRecv(action.channel, action.var, candidate),
                 _replace_store(stores, subject, updated))]
    raise TypeError(f"unknown action {action!r}")


def channel_step(channels: Channels, ground: GroundAction) -> list[Channels]:
    """Channel-family reduction; actions without a channel leave it idle."""
    if isinstance(ground, (GroundSend, GroundRecv)):
        out = []
        for i, (name, chan) in enumerate(channels):
            if name != ground.channel:
                continue
            if isinstance(ground, GroundSend):
                if chan.full():
                    return []
                new = Channel(chan.buffer + (ground.value,), chan.capacity)
            else:
                if not chan.buffer or chan.buffer[0] != ground.value:
                    return []
                new = Channel(chan.buffer[1:], chan.capacity)
            out.append(channels[:i] + ((name, new),) + channels[i + 1:])
        return out
    return [channels]


def _front(channels: Channels, name: ChannelName) -> Optional[Value]:
    for ch, chan in channels:
        if ch == name:
            return chan.buffer[0] if chan.buffer else None
    return None


def _changed(before: Stores, after: Stores, ground) -> Optional[tuple[str, str]]:
    if isinstance(ground, GroundAssign):
        process = ground.process
    elif isinstance(ground, GroundRecv):
        process = ground.channel.receiver
    else:
        return None
    if ground.var == SINK:
        return None
    old = _lookup(before, process).get(ground.var)
    new = _lookup(after, process).get(ground.var)
    if old[0] == new[0]:
        return None
    return (process, ground.var)


def system_steps(state: SystemState) -> list[tuple[SystemLabel, SystemState]]:
    out = []
    family = state.programs
    for i, member in enumerate(family.members):
        for action, residual in program_steps(member):
            programs = family.replace(i, residual)
            candidate = _front(state.channels, action.channel) if isinstance(action, Recv) else None
            for ground, stores in store_step(state.stores, action, candidate):
                for channels in channel_step(state.channels, ground):
                    label = SystemLabel(action, ground, _changed(state.stores, stores, ground))
                    out.append((label, SystemState(programs, stores, channels)))
    return out


def has_program_steps(state: SystemState) -> bool:
    return any(program_steps(m) for m in state.programs.members)


# -- initial systems ---------------------------------------------------------


def initial_stores(chor: ChoreographyFile) -> Stores:
    everyone = frozenset(chor.processes)
    return tuple(
        (p, Store.of({var: (value, everyone) for var, value in chor.stores.get(p, [])}))
        for p in chor.processes
    )


def initial_channels(chor: ChoreographyFile) -> Channels:
    return tuple(
        (ChannelName(p, q), Channel((), chor.capacity_of(ChannelName(p, q))))
        for p in chor.processes for q in chor.processes if p != q
    )


def build_system(chor: ChoreographyFile, mode: str = "global") -> SystemState:
    """Initial system for a parsed file, after well-formedness checks."""
    declared = set(chor.processes)
    main = chor.main
    undeclared = sorted(main.subjects - declared)
    if undeclared:
        raise WellFormednessError(f"undeclared process(es): {', '.join(undeclared)}")
    if mode == "global":
        family: ProgramFamily = GlobalFamily(main)
    elif mode == "local":
        family = LocalFamily.of(project_all(main))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    check_family(family, declared)
    return SystemState(family, initial_stores(chor), initial_channels(chor))


def check_family(family: ProgramFamily, declared: set[str]) -> None:
    if isinstance(family, LocalFamily):
        for role, program in zip(family.roles, family.programs):
            if role not in declared:
                raise WellFormednessError(f"undeclared process {role!r}")
            if not program.subjects <= {role}:
                others = ", ".join(sorted(program.subjects - {role}))
                raise WellFormednessError(f"local program of {role!r} has other subjects: {others}")
    elif not family.program.subjects <= declared:
        raise WellFormednessError("program uses undeclared processes")


def uninitialized_variables(chor: ChoreographyFile) -> list[tuple[str, str]]:
    """``(process, variable)`` pairs that the program touches but no store declares."""
    from .syntax import actions_of

    declared = {(p, v) for p, entries in chor.stores.items() for v, _ in entries}
    used = set()
    for action in actions_of(chor.main):
        if isinstance(action, (Test, Assign, Send)):
            owner = subject_of(action)
            used |= {(owner, v) for v in action.expr.variables()}
        if isinstance(action, Assign):
            used.add((action.process, action.var))
        if isinstance(action, Recv):
            used.add((action.channel.receiver, action.var))
    return sorted((p, v) for p, v in used - declared if v != SINK)
