"""Verdicts and counterexamples shared by all engines."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

INFINITE_TRACE = "IllegalInfiniteTrace"
LIVELOCK = "IllegalLivelock"


@dataclass(frozen=True)
class Step:
    thread: Optional[int]  # None for stutter or monitor steps
    text: str
    transition: Optional[int] = None  # net transition id when known


@dataclass
class Counterexample:
    kind: str
    stem: list
    cycle: list  # empty cycle = stutter forever at the end of the stem

    def program_steps(self):
        """(stem, cycle) restricted to steps taken by program threads."""
        keep = lambda xs: [s for s in xs if s.thread is not None]  # noqa: E731
        return keep(self.stem), keep(self.cycle)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], [Step(**s) for s in d["stem"]], [Step(**s) for s in d["cycle"]])


@dataclass
class Verdict:
    holds: bool
    counterexample: Optional[Counterexample] = None
    engine: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def name(self):
        return "Holds" if self.holds else "Violated"

    def __str__(self):
        if self.holds:
            return "Holds"
        kind = f" ({self.counterexample.kind})" if self.counterexample else ""
        return f"Violated{kind}"
