"""Abstract syntax: names, values, expressions, actions and programs.

Programs are hash-consed: constructing a node that is structurally equal to a
live node returns that same object, so equality and hashing are identity
based and cheap.  This matters because the explorers put millions of program
references into dictionaries.
"""

from __future__ import annotations

import enum
import weakref
from dataclasses import dataclass
from typing import Iterator, Optional, Union

SINK = "_"

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


class MalformedError(ValueError):
    """Raised for ill-formed terms (self channels, bad shorthands)."""


class Constant(enum.Enum):
    UNIT = "unit"
    TRUE = "true"
    FALSE = "false"
    ACQ = "acq"
    REL = "rel"

    def __repr__(self) -> str:
        return self.value


UNIT = Constant.UNIT
TRUE = Constant.TRUE
FALSE = Constant.FALSE
ACQ = Constant.ACQ
REL = Constant.REL

# Python bools are deliberately excluded: True == 1 would merge distinct states.
Value = Union[int, str, Constant]


def as_value(obj: object) -> Value:
    """Coerce a Python literal to a language value."""
    if isinstance(obj, bool):
        return TRUE if obj else FALSE
    if obj is None:
        return UNIT
    if isinstance(obj, Constant):
        return obj
    if isinstance(obj, int):
        if not INT_MIN <= obj <= INT_MAX:
            raise MalformedError(f"integer literal out of 64-bit range: {obj}")
        return obj
    if isinstance(obj, str):
        return obj
    raise TypeError(f"not a value: {obj!r}")


def render_value(value: Value) -> str:
    if isinstance(value, Constant):
        return value.value
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{escaped}"'
    return str(value)


def _hash_once(cls):
    """Memoize the generated ``__hash__`` of a frozen dataclass.

    Actions and expressions are hashed constantly during exploration and are
    immutable, so the recursive hash is worth keeping.
    """
    compute = cls.__hash__

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = compute(self)
            object.__setattr__(self, "_hash", h)
        return h

    def __getstate__(self):
        # String hashes differ between interpreter runs; never pickle the cache.
        return {k: v for k, v in self.__dict__.items() if k != "_hash"}

    cls.__hash__ = __hash__
    cls.__getstate__ = __getstate__
    return cls


@_hash_once
@dataclass(frozen=True, order=True)
class ChannelName:
    sender: str
    receiver: str

    def __post_init__(self) -> None:
        if self.sender == self.receiver:
            raise MalformedError(f"sender equals receiver: {self.sender}")

    def __str__(self) -> str:
        return f"{self.sender}>{self.receiver}"


# -- expressions -------------------------------------------------------------


class Expr:
    __slots__ = ()

    def variables(self) -> frozenset[str]:
        raise NotImplementedError


@_hash_once
@dataclass(frozen=True)
class Var(Expr):
    name: str

    def variables(self) -> frozenset[str]:
        return frozenset((self.name,))


@_hash_once
@dataclass(frozen=True)
class Lit(Expr):
    value: Value

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", as_value(self.value))

    def variables(self) -> frozenset[str]:
        return frozenset()


@_hash_once
@dataclass(frozen=True)
class Eq(Expr):
    left: Expr
    right: Expr

    def variables(self) -> frozenset[str]:
        return self.left.variables() | self.right.variables()


@_hash_once
@dataclass(frozen=True)
class Not(Expr):
    operand: Expr

    def variables(self) -> frozenset[str]:
        return self.operand.variables()


@_hash_once
@dataclass(frozen=True)
class And(Expr):
    left: Expr
    right: Expr

    def variables(self) -> frozenset[str]:
        return self.left.variables() | self.right.variables()


@_hash_once
@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr

    def variables(self) -> frozenset[str]:
        return self.left.variables() | self.right.variables()


@_hash_once
@dataclass(frozen=True)
class Md5(Expr):
    operand: Expr

    def variables(self) -> frozenset[str]:
        return self.operand.variables()


# Binding strength used by the renderer; higher binds tighter.
_PREC = {And: 1, Eq: 2, Add: 3}


def render_expr(expr: Expr, context: int = 0) -> str:
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Lit):
        return render_value(expr.value)
    if isinstance(expr, Not):
        return "~" + render_expr(expr.operand, 4)
    if isinstance(expr, Md5):
        return f"md5({render_expr(expr.operand)})"
    op = {And: "&&", Eq: "==", Add: "+"}[type(expr)]
    prec = _PREC[type(expr)]
    # Left-associative: the right operand needs strictly tighter binding.
    text = f"{render_expr(expr.left, prec)} {op} {render_expr(expr.right, prec + 1)}"
    return f"({text})" if prec < context else text


# -- actions -----------------------------------------------------------------


class Action:
    __slots__ = ()


@_hash_once
@dataclass(frozen=True)
class Test(Action):
    process: str
    expr: Expr


@_hash_once
@dataclass(frozen=True)
class Assign(Action):
    process: str
    var: str
    expr: Expr


@_hash_once
@dataclass(frozen=True)
class Send(Action):
    channel: ChannelName
    expr: Expr


@_hash_once
@dataclass(frozen=True)
class Recv(Action):
    channel: ChannelName
    var: str


@dataclass(frozen=True)
class Tau(Action):
    pass


TAU = Tau()


def subject_of(action: Action) -> Optional[str]:
    """The process executing ``action``; ``None`` for tau."""
    if isinstance(action, (Test, Assign)):
        return action.process
    if isinstance(action, Send):
        return action.channel.sender
    if isinstance(action, Recv):
        return action.channel.receiver
    return None


def object_of(action) -> Optional[ChannelName]:
    """The channel used by an action or ground action, if any."""
    return getattr(action, "channel", None)


def render_action(action: Action) -> str:
    if isinstance(action, Test):
        return f"test({action.process},{render_expr(action.expr)})"
    if isinstance(action, Assign):
        return f"assign({action.process},{action.var},{render_expr(action.expr)})"
    if isinstance(action, Send):
        ch = action.channel
        return f"send({ch.sender},{ch.receiver},{render_expr(action.expr)})"
    if isinstance(action, Recv):
        ch = action.channel
        return f"recv({ch.sender},{ch.receiver},{action.var})"
    return "tau"


# -- ground actions ----------------------------------------------------------


@_hash_once
@dataclass(frozen=True)
class GroundTest:
    process: str


@_hash_once
@dataclass(frozen=True)
class GroundAssign:
    process: str
    var: str
    value: Value


@_hash_once
@dataclass(frozen=True)
class GroundSend:
    channel: ChannelName
    value: Value


@_hash_once
@dataclass(frozen=True)
class GroundRecv:
    channel: ChannelName
    var: str
    value: Value


GroundAction = Union[GroundTest, GroundAssign, GroundSend, GroundRecv, Tau]


def render_ground(ground: GroundAction) -> str:
    if isinstance(ground, GroundTest):
        return f"test({ground.process},true)"
    if isinstance(ground, GroundAssign):
        return f"assign({ground.process},{ground.var},{render_value(ground.value)})"
    if isinstance(ground, GroundSend):
        ch = ground.channel
        return f"send({ch.sender},{ch.receiver},{render_value(ground.value)})"
    if isinstance(ground, GroundRecv):
        ch = ground.channel
        return f"recv({ch.sender},{ch.receiver},{ground.var},{render_value(ground.value)})"
    return "tau"


# -- programs ----------------------------------------------------------------

_interned: "weakref.WeakValueDictionary[tuple, Program]" = weakref.WeakValueDictionary()


class Program:
    """Base of the hash-consed program terms.

    ``subjects`` and ``size`` (number of action leaves) are computed once at
    construction.  Nodes must be treated as immutable.
    """

    __slots__ = ("subjects", "size", "_steps", "__weakref__")

    def __new__(cls, *args):
        key = (cls, *args)
        node = _interned.get(key)
        if node is None:
            node = object.__new__(cls)
            node._setup(*args)
            node._steps = None
            _interned[key] = node
        return node

    def _setup(self, *args) -> None:
        raise NotImplementedError

    def __reduce__(self):
        return (type(self), self._args())

    def _args(self) -> tuple:
        return ()

    def __repr__(self) -> str:
        args = ", ".join(repr(a) for a in self._args())
        return f"{type(self).__name__}({args})"


class One(Program):
    __slots__ = ()

    def _setup(self) -> None:
        self.subjects = frozenset()
        self.size = 0


class Act(Program):
    __slots__ = ("action",)

    def _setup(self, action: Action) -> None:
        if not isinstance(action, Action):
            raise TypeError(f"not an action: {action!r}")
        self.action = action
        subject = subject_of(action)
        self.subjects = frozenset() if subject is None else frozenset((subject,))
        self.size = 1

    def _args(self) -> tuple:
        return (self.action,)


class _Binary(Program):
    __slots__ = ("left", "right")

    def _setup(self, left: Program, right: Program) -> None:
        if not (isinstance(left, Program) and isinstance(right, Program)):
            raise TypeError("program operands expected")
        self.left = left
        self.right = right
        self.subjects = left.subjects | right.subjects
        self.size = left.size + right.size

    def _args(self) -> tuple:
        return (self.left, self.right)


class Choice(_Binary):
    __slots__ = ()


class Par(_Binary):
    __slots__ = ()


class Seq(_Binary):
    __slots__ = ()


ONE = One()


def subjects_of(program: Program) -> frozenset[str]:
    return program.subjects


def action_count(program: Program) -> int:
    return program.size


def is_global(program: Program) -> bool:
    return len(program.subjects) >= 2


def is_local(program: Program) -> bool:
    return len(program.subjects) <= 1


def actions_of(program: Program) -> Iterator[Action]:
    """Action leaves in left-to-right order."""
    stack = [program]
    while stack:
        node = stack.pop()
        if isinstance(node, Act):
            yield node.action
        elif isinstance(node, _Binary):
            stack.append(node.right)
            stack.append(node.left)


def seq(*programs: Program) -> Program:
    """Right-nested sequence; ``seq()`` is ``ONE``."""
    if not programs:
        return ONE
    result = programs[-1]
    for p in reversed(programs[:-1]):
        result = Seq(p, result)
    return result


# -- shorthands --------------------------------------------------------------


def _as_expr(e) -> Expr:
    return e if isinstance(e, Expr) else Lit(e)


def expand_comm(p: str, expr, q: str, var: str) -> Program:
    """``p.E -> q.y``: a send followed by the matching receive."""
    channel = ChannelName(p, q)
    return Seq(Act(Send(channel, _as_expr(expr))), Act(Recv(channel, var)))


def _check_targets(p: str, q: str, variables: list[str], what: str) -> None:
    if not variables:
        raise MalformedError(f"{what} needs at least one variable")
    if p == q:
        raise MalformedError(f"{what}: sender equals receiver: {p}")
    if SINK in variables:
        raise MalformedError(f"{what} cannot target the sink variable")


def expand_acq(p: str, q: str, variables: list[str]) -> Program:
    _check_targets(p, q, variables, "acq")
    return seq(*(
        Seq(expand_comm(p, Lit(ACQ), q, y), expand_comm(q, Lit(UNIT), p, SINK))
        for y in variables
    ))


def expand_rel(p: str, q: str, variables: list[str]) -> Program:
    _check_targets(p, q, variables, "rel")
    return seq(*(expand_comm(p, Lit(REL), q, y) for y in variables))


def expand_if(p: str, expr: Expr, then: Program, otherwise: Program) -> Program:
    return Choice(Seq(Act(Test(p, expr)), then), Seq(Act(Test(p, Not(expr))), otherwise))
