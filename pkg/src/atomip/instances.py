"""Bundled example instances (the four problems used across the docs and tests)."""

from __future__ import annotations

from importlib import resources

from .model import Problem
from .parser import parse_problem

BUNDLED = ("p1", "p2", "p3", "p4")


def instance_text(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled instance {name!r}; have {BUNDLED}")
    return resources.files("atomip.problems").joinpath(f"{name}.ip").read_text("utf-8")


def load_instance(name: str) -> Problem:
    return parse_problem(instance_text(name))
