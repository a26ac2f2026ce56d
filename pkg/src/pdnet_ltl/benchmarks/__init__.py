"""Bundled programs and parametric benchmark families."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

BUNDLED = ("motivating", "dekker", "peterson", "lamport", "szymanski", "condvar", "lostwakeup")
CLASSICS = ("dekker", "peterson", "lamport", "szymanski")


@dataclass(frozen=True)
class Instance:
    name: str
    source: str  # program text, ltl trailer included
    formula: str


def bundled_source(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.cpl").read_text()


def _trailer_formula(text: str) -> str:
    from ..frontend import parse_program

    return parse_program(text).ltl


def bundled(name: str) -> Instance:
    text = bundled_source(name)
    return Instance(name, text, _trailer_formula(text))


def shared(n: int, k: int | None = None) -> Instance:
    """n threads each bump a private counter, then increment ``shared`` under a mutex.

    The property G(shared<k) holds exactly when k > n (default k = n, violated)."""
    k = n if k is None else k
    lines = [f"int shared = 0 range 0..{n};"]
    lines += [f"int l{i} = 0 range 0..1;" for i in range(1, n + 1)]
    lines.append("mutex m;")
    for i in range(1, n + 1):
        lines.append(
            f"thread T{i} {{ l{i} = l{i} + 1; lock(m); shared = shared + 1; unlock(m); }}"
        )
    f = f"G(shared<{k})"
    lines.append(f'ltl "{f}";')
    return Instance(f"Shared({n},{k})", "\n".join(lines) + "\n", f)


def concur(n: int, buggy: bool = False) -> Instance:
    """A chain of n workers handing a flag forward and a checker raising ``err``.

    The safe checker waits for the last flag before testing the first one, so
    G(err=0) holds; the buggy checker tests immediately and can raise it."""
    lines = [f"int f{i} = 0 range 0..1;" for i in range(1, n + 1)]
    lines.append("int err = 0 range 0..1;")
    lines.append("thread W1 { f1 = 1; }")
    for i in range(2, n + 1):
        lines.append(f"thread W{i} {{ while (f{i - 1} == 0) {{ }} f{i} = 1; }}")
    wait = "" if buggy else f"while (f{n} == 0) {{ }} "
    lines.append(f"thread Check {{ {wait}if (f1 == 0) {{ err = 1; }} }}")
    f = "G(err=0)"
    lines.append(f'ltl "{f}";')
    tag = "bug" if buggy else "ok"
    return Instance(f"Concur({n},{tag})", "\n".join(lines) + "\n", f)


def family(name: str, sizes) -> list[Instance]:
    if name == "shared":
        return [shared(n) for n in sizes]
    if name == "concur":
        return [concur(n, buggy) for n in sizes for buggy in (False, True)]
    if name in ("mutex-classics", "classics"):
        return [bundled(c) for c in CLASSICS]
    raise ValueError(f"unknown family {name!r}")
