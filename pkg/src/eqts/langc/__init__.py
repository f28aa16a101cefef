"""The literal-head fragment of action language C: parsing, grounding, semantics."""

from .ground import Grounder, ground
from .model import ActionDescription, Decl, DynamicLaw, Param, StaticLaw
from .parser import parse, parse_file
from .semantics import (CompiledDescription, build_transition_system,
                        compile_description, transitions_of)

__all__ = [
    "ActionDescription", "Decl", "DynamicLaw", "Param", "StaticLaw", "Grounder",
    "CompiledDescription", "build_transition_system", "compile_description",
    "ground", "parse", "parse_file", "transitions_of",
]
