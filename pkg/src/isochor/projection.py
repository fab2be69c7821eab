"""Projection of a global program onto its roles."""

from __future__ import annotations

from .syntax import TAU, Act, Program, subject_of, _Binary

_TAU_LEAF = Act(TAU)


def project(program: Program, role: str) -> Program:
    """Replace every action whose subject is not ``role`` by tau.

    Tau leaves are kept rather than pruned, so the projection has exactly as
    many action leaves as the original.
    """
    cache: dict[Program, Program] = {}

    def go(node: Program) -> Program:
        hit = cache.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Act):
            out = node if subject_of(node.action) == role else _TAU_LEAF
        elif isinstance(node, _Binary):
            out = type(node)(go(node.left), go(node.right))
        else:
            out = node
        cache[node] = out
        return out

    return go(program)


def project_all(program: Program) -> dict[str, Program]:
    return {r: project(program, r) for r in sorted(program.subjects)}
