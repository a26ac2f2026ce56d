"""Command-line entry point: ``verify``, ``bench`` and ``export``.

Exit codes: 0 when the property holds, 1 when it is violated, 2 on any error
(parse failure, exceeded bound, engines disagreeing).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .errors import CheckerError
from .verdict import Counterexample, Verdict

SCHEMA = 1
ENGINES = ("explorer", "baseline", "oracle")
EXIT_HOLDS, EXIT_VIOLATED, EXIT_ERROR = 0, 1, 2


@dataclass
class RunReport:
    """Outcome of one engine on one instance, as emitted with ``--json``."""

    engine: str
    verdict: str  # "Holds", "Violated", "Error" or "TimeOut"
    formula: str = ""
    file: str = ""
    kind: Optional[str] = None
    counterexample: Optional[dict] = None
    stats: dict = field(default_factory=dict)
    error: Optional[str] = None
    schema: int = SCHEMA

    def __post_init__(self):
        if (self.verdict == "Violated") != (self.counterexample is not None):
            raise ValueError("a counterexample is present exactly for violated verdicts")

    @property
    def exit_code(self) -> int:
        return {"Holds": EXIT_HOLDS, "Violated": EXIT_VIOLATED}.get(self.verdict, EXIT_ERROR)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        d = json.loads(text)
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(**d)


def _normalize_stats(engine: str, raw: dict, millis: float) -> dict:
    out = {"wallMillis": round(millis, 3)}
    for src, dst in (("places", "places"), ("transitions", "transitions"),
                     ("conditions", "conditions"), ("events", "events"),
                     ("cutoffs", "cutoffs"), ("states", "states")):
        if src in raw:
            out[dst] = raw[src]
    if engine == "explorer":
        out["treeNodes"] = raw.get("tree_nodes", 0)
        out["localCandidates"] = raw.get("local_candidates", 0)
        out["terminals"] = raw.get("terminals", 0)
    elif engine == "baseline":
        out["C_unf"] = raw.get("c_unf", 0)
    return out


def report_of(engine: str, v: Verdict, formula: str, file: str, millis: float) -> RunReport:
    cex = v.counterexample.to_dict() if v.counterexample is not None else None
    return RunReport(engine, v.name, formula, file, v.counterexample.kind if cex else None, cex,
                     _normalize_stats(engine, v.stats, millis))


def run_engine(engine: str, source: str, formula: Optional[str], *, file: str = "",
               timeout: Optional[float] = None, max_events: Optional[int] = None) -> RunReport:
    """Parse, build and check; every library error becomes an ``Error`` report."""
    from .baseline import check_baseline
    from .errors import ResourceBoundExceeded
    from .explorer import check
    from .frontend import oracle_check, parse_program
    from .ltl import parse_formula

    t0 = time.monotonic()
    text = formula or ""
    try:
        p = parse_program(source)
        text = formula if formula is not None else (p.ltl or "true")
        phi = parse_formula(text)
        if engine == "explorer":
            v = check(p, phi, max_events=max_events, timeout=timeout)
        elif engine == "baseline":
            v = check_baseline(p, phi, max_events=max_events, timeout=timeout)
        elif engine == "oracle":
            v = oracle_check(p, phi)
        else:
            raise ValueError(f"unknown engine {engine!r}")
    except ResourceBoundExceeded as exc:
        timed_out = "time" in str(exc)
        return RunReport(engine, "TimeOut" if timed_out else "Error", text, file, error=str(exc),
                         stats={"wallMillis": round((time.monotonic() - t0) * 1000, 3)})
    except (CheckerError, ValueError) as exc:
        return RunReport(engine, "Error", text, file, error=f"{type(exc).__name__}: {exc}",
                         stats={"wallMillis": round((time.monotonic() - t0) * 1000, 3)})
    return report_of(engine, v, text, file, (time.monotonic() - t0) * 1000)


def format_report(r: RunReport) -> str:
    """Human-readable rendering of a report."""
    head = f"[{r.engine}] {r.verdict}"
    if r.kind:
        head += f" ({r.kind})"
    lines = [head]
    if r.error:
        lines.append(f"  error: {r.error}")
    if r.counterexample:
        cex = Counterexample.from_dict(r.counterexample)
        for title, steps in (("stem", cex.stem), ("cycle", cex.cycle)):
            lines.append(f"  {title}:")
            if not steps:
                lines.append("    (stutter)")
            lines.extend(f"    {s.text}" for s in steps)
    stats = ", ".join(f"{k}={v}" for k, v in sorted(r.stats.items()))
    lines.append(f"  stats: {stats}")
    return "\n".join(lines)


# -- verify ---------------------------------------------------------------------


def cmd_verify(args, out=None) -> int:
    out = out or sys.stdout
    try:
        source = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.dump_conflicts:
        code = _dump_conflicts(source, out)
        if code:
            return code
    engines = ENGINES if args.engine == "all" else (args.engine,)
    reports = [run_engine(e, source, args.ltl, file=args.file, timeout=args.timeout,
                          max_events=args.max_events) for e in engines]
    if args.json:
        if len(reports) == 1:
            print(reports[0].to_json(), file=out)
        else:
            print(json.dumps([json.loads(r.to_json()) for r in reports], sort_keys=True,
                             ensure_ascii=False), file=out)
    else:
        for r in reports:
            print(format_report(r), file=out)
    codes = {r.exit_code for r in reports}
    if len(codes) != 1:
        print("error: engines disagree", file=sys.stderr)
        return EXIT_ERROR
    for r in reports:
        if r.error:
            print(f"error: {r.error}", file=sys.stderr)
    return codes.pop()


def _dump_conflicts(source: str, out) -> int:
    from .conflict import conflict_table
    from .frontend import build_pdnet, parse_program

    try:
        N, sm = build_pdnet(parse_program(source))
    except CheckerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out.write(conflict_table(N, sm).dump(N))
    return 0


# -- bench ----------------------------------------------------------------------


BENCH_COLUMNS = ("instance", "engine", "verdict", "Q", "E", "nodes", "C_unf", "candidates", "millis")


def parse_sizes(text: str) -> list[int]:
    """``"4..8"``, ``"2,3,5"`` or ``""`` (no sizes)."""
    text = text.strip()
    if not text:
        return []
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def _bench_row(job):
    name, source, formula, engine, timeout = job
    r = run_engine(engine, source, formula, file=name, timeout=timeout)
    s = r.stats
    verdict = "TO" if r.verdict == "TimeOut" else r.verdict
    return {
        "instance": name, "engine": engine, "verdict": verdict,
        "Q": s.get("conditions", ""), "E": s.get("events", ""),
        "nodes": s.get("treeNodes", s.get("states", "")), "C_unf": s.get("C_unf", ""),
        "candidates": s.get("localCandidates", ""), "millis": s.get("wallMillis", ""),
    }


def bench_rows(family: str, sizes, engines, timeout: Optional[float] = None, jobs: int = 1) -> list[dict]:
    from .benchmarks import family as make_family

    instances = make_family(family, sizes) if sizes or family in ("mutex-classics", "classics") else []
    work = [(i.name, i.source, i.formula, e, timeout) for i in instances for e in engines]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_bench_row, work))
    return [_bench_row(w) for w in work]


def format_table(rows: list[dict], as_csv: bool) -> str:
    if as_csv:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    widths = {c: max([len(c)] + [len(str(r[c])) for r in rows]) for c in BENCH_COLUMNS}
    lines = ["  ".join(c.ljust(widths[c]) for c in BENCH_COLUMNS)]
    lines += ["  ".join(str(r[c]).ljust(widths[c]) for c in BENCH_COLUMNS) for r in rows]
    return "\n".join(lines) + "\n"


def cmd_bench(args, out=None) -> int:
    out = out or sys.stdout
    engines = [e.strip() for e in args.engines.split(",") if e.strip()]
    bad = [e for e in engines if e not in ENGINES]
    if bad:
        print(f"error: unknown engine(s) {', '.join(bad)}", file=sys.stderr)
        return EXIT_ERROR
    try:
        sizes = parse_sizes(args.sizes)
        rows = bench_rows(args.family, sizes, engines, args.timeout, args.jobs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out.write(format_table(rows, args.csv))
    return 0


# -- export ---------------------------------------------------------------------


def export_dot(source: str, what: str, formula: Optional[str] = None, *,
               max_events: Optional[int] = None, timeout: Optional[float] = None) -> str:
    """DOT text for ``pdnet``, ``product``, ``prefix`` or ``tree``.

    The prefix and tree are those of the explorer on the product when a
    formula is given (argument or file trailer), otherwise on the program net."""
    from .dot import net_to_dot, tree_to_dot
    from .explorer import Explorer
    from .frontend import build_pdnet, parse_program
    from .ltl import parse_formula
    from .product import synchronize

    p = parse_program(source)
    N, sm = build_pdnet(p)
    if what == "pdnet":
        return net_to_dot(N)
    text = formula if formula is not None else p.ltl
    if what == "product":
        P, _info = synchronize(N, sm, parse_formula(text or "true"))
        return net_to_dot(P, highlight_sync=True)
    if what not in ("prefix", "tree"):
        raise ValueError(f"unknown export {what!r}")
    if text is None:
        net, info = N, None
    else:
        net, info = synchronize(N, sm, parse_formula(text))
    res = Explorer(net, sm, info, max_events=max_events, timeout=timeout,
                   record_tree=(what == "tree")).run()
    return res.prefix.to_dot() if what == "prefix" else tree_to_dot(res.tree, net)


def cmd_export(args, out=None) -> int:
    out = out or sys.stdout
    try:
        source = Path(args.file).read_text(encoding="utf-8")
        out.write(export_dot(source, args.what, args.ltl, max_events=args.max_events,
                             timeout=args.timeout))
    except (OSError, CheckerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return 0


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdnet-ltl", description="LTL-X checking of small concurrent programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--timeout", type=float, default=300.0, metavar="SECS")
        sp.add_argument("--max-events", type=int, default=None, metavar="N")
        sp.add_argument("--seed", type=int, default=None, help="accepted for compatibility; engines are deterministic")

    v = sub.add_parser("verify", help="check a program against an LTL-X formula")
    v.add_argument("file")
    v.add_argument("--ltl", default=None, help="formula (default: the file's ltl trailer, else true)")
    v.add_argument("--engine", choices=ENGINES + ("all",), default="explorer")
    v.add_argument("--json", action="store_true")
    v.add_argument("--dump-conflicts", action="store_true")
    common(v)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="run a benchmark family")
    b.add_argument("family", choices=("shared", "concur", "mutex-classics", "classics"))
    b.add_argument("--sizes", default="", help='e.g. "4..8" or "2,3"')
    b.add_argument("--engines", default="explorer,baseline")
    b.add_argument("--csv", action="store_true")
    b.add_argument("--jobs", type=int, default=1)
    common(b)
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("export", help="emit a DOT graph")
    e.add_argument("file")
    e.add_argument("what", choices=("pdnet", "product", "prefix", "tree"))
    e.add_argument("--ltl", default=None)
    common(e)
    e.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
