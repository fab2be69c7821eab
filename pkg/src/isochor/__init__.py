"""Choreographies with permission-guarded stores: parsing, projection, state-space
exploration, branching bisimilarity and model checking."""

from .parser import parse_choreography, parse_formula, parse_program, parse_properties
from .projection import project, project_all

__all__ = [
    "parse_choreography", "parse_formula", "parse_program", "parse_properties",
    "project", "project_all",
]
