"""Toy concurrent language: parser, PDNet builder, interpreter and oracle."""

from .ast import Program
from .builder import SourceMap, build_pdnet
from .interp import Interpreter, ProgramState, project_marking, state_to_marking, successors
from .oracle import oracle_check
from .parser import parse, parse_program

__all__ = [
    "Interpreter",
    "Program",
    "ProgramState",
    "SourceMap",
    "build_pdnet",
    "oracle_check",
    "parse",
    "parse_program",
    "project_marking",
    "state_to_marking",
    "successors",
]
