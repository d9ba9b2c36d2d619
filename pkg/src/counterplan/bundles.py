"""Counterplanning task bundles: the on-disk task format.

A bundle directory holds:
    domain.pddl      shared domain (both agents' schemas)
    seeker.pddl      seeker problem (its init carries the true goal)
    preventer.pddl   preventer problem
    candidates.txt   one goal condition per line, e.g. (and (at-seek c1-5))
    truth.txt        0-based index of the hidden true goal (harness-only)
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import List, Optional

from . import pddl
from .model import Literal


class BundleError(Exception):
    pass


FILES = {
    "domain": "domain.pddl",
    "seeker": "seeker.pddl",
    "preventer": "preventer.pddl",
    "candidates": "candidates.txt",
    "truth": "truth.txt",
}


@dataclass
class Bundle:
    domain_text: str
    seeker_text: str
    preventer_text: str
    candidate_lines: List[str]
    truth_index: Optional[int] = None
    name: str = "bundle"

    def candidate_conditions(self) -> List[List[Literal]]:
        return [parse_condition_line(line) for line in self.candidate_lines]

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        _write(directory, FILES["domain"], self.domain_text)
        _write(directory, FILES["seeker"], self.seeker_text)
        _write(directory, FILES["preventer"], self.preventer_text)
        _write(directory, FILES["candidates"], "\n".join(self.candidate_lines) + "\n")
        if self.truth_index is not None:
            _write(directory, FILES["truth"], f"{self.truth_index}\n")

    @staticmethod
    def load(directory: str) -> "Bundle":
        def read(key, required=True):
            path = os.path.join(directory, FILES[key])
            if not os.path.exists(path):
                if required:
                    raise BundleError(f"missing bundle file: {path}")
                return None
            with open(path) as fh:
                return fh.read()

        candidates = [l.strip() for l in read("candidates").splitlines() if l.strip()]
        truth_raw = read("truth", required=False)
        truth = int(truth_raw.strip()) if truth_raw else None
        if truth is not None and not (0 <= truth < len(candidates)):
            raise BundleError("truth index out of range")
        return Bundle(read("domain"), read("seeker"), read("preventer"),
                      candidates, truth, name=os.path.basename(directory.rstrip("/")))


def _write(directory: str, fname: str, text: str) -> None:
    with open(os.path.join(directory, fname), "w") as fh:
        fh.write(text)


def parse_condition_line(line: str) -> List[Literal]:
    """Parse a goal condition: a literal or an (and ...) of literals."""
    root = pddl._read(line)
    lits = pddl._parse_condition(root, "goal condition")
    out = []
    for l in lits:
        out.append(Literal(l.atom.render(), l.positive))
    return out


def render_condition(literals: List[Literal]) -> str:
    return "(and " + " ".join(l.name for l in literals) + ")"
