import csv
import io
import json
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from pdnet_ltl.benchmarks import BUNDLED, CLASSICS, bundled_source
from pdnet_ltl.cli import RunReport, bench_rows, export_dot, main, parse_sizes
from pdnet_ltl.dot import dot_counts


@pytest.fixture
def program_file(tmp_path):
    def make(name_or_text, bundled=True):
        path = tmp_path / "prog.cpl"
        path.write_text(bundled_source(name_or_text) if bundled else name_or_text)
        return str(path)

    return make


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_verify_violated_prints_counterexample(program_file, capsys):
    code, out = run(["verify", program_file("motivating"), "--ltl", "G((x=1) -> F(z=1))"], capsys)
    assert code == 1
    assert "T3: z = x" in out.out and "T1: x = 1" in out.out


def test_verify_true_holds(program_file, capsys):
    code, _ = run(["verify", program_file("motivating"), "--ltl", "true"], capsys)
    assert code == 0


def test_verify_parse_error_exits_2(program_file, capsys):
    code, out = run(["verify", program_file("thread { }", bundled=False)], capsys)
    assert code == 2 and "error" in out.err


def test_verify_missing_file_exits_2(tmp_path, capsys):
    code, _ = run(["verify", str(tmp_path / "absent.cpl")], capsys)
    assert code == 2


def test_event_bound_exits_2(program_file, capsys):
    code, _ = run(["verify", program_file("dekker"), "--max-events", "3"], capsys)
    assert code == 2


@pytest.mark.parametrize("name", BUNDLED)
def test_oracle_and_explorer_exit_codes_match(name, program_file, capsys):
    f = program_file(name)
    codes = {run(["verify", f, "--engine", e], capsys)[0] for e in ("explorer", "oracle", "baseline")}
    assert len(codes) == 1 and codes <= {0, 1}


def test_engine_all_reports_each_engine(program_file, capsys):
    code, out = run(["verify", program_file("peterson"), "--engine", "all", "--json"], capsys)
    reports = json.loads(out.out)
    assert code == 0 and [r["engine"] for r in reports] == ["explorer", "baseline", "oracle"]


def test_json_report_round_trips(program_file, capsys):
    _code, out = run(["verify", program_file("motivating"), "--json"], capsys)
    r = RunReport.from_json(out.out)
    assert r.schema == 1 and r.verdict == "Violated" and r.counterexample is not None
    assert RunReport.from_json(r.to_json()) == r


def test_dump_conflicts(program_file, capsys):
    _code, out = run(["verify", program_file("motivating"), "--dump-conflicts", "--ltl", "true"], capsys)
    assert out.out.startswith("t1.0 t3.0\n")


steps = st.fixed_dictionaries({
    "thread": st.one_of(st.none(), st.integers(1, 4)),
    "text": st.text(max_size=12),
    "transition": st.one_of(st.none(), st.integers(0, 50)),
})


@given(st.booleans(), st.lists(steps, max_size=4), st.lists(steps, max_size=3),
       st.dictionaries(st.sampled_from(["events", "conditions", "wallMillis"]), st.integers(0, 10**6)))
def test_report_round_trip_property(violated, stem, cycle, stats):
    cex = {"kind": "IllegalInfiniteTrace", "stem": stem, "cycle": cycle} if violated else None
    r = RunReport("explorer", "Violated" if violated else "Holds", "G(a=1)", "f.cpl",
                  cex and cex["kind"], cex, stats)
    assert RunReport.from_json(r.to_json()) == r


def test_report_requires_counterexample_iff_violated():
    with pytest.raises(ValueError):
        RunReport("explorer", "Violated")
    with pytest.raises(ValueError):
        RunReport("explorer", "Holds", counterexample={"kind": "x", "stem": [], "cycle": []})


def test_parse_sizes():
    assert parse_sizes("4..8") == [4, 5, 6, 7, 8]
    assert parse_sizes("2,3") == [2, 3]
    assert parse_sizes("") == []


def test_bench_empty_sizes(capsys):
    code, out = run(["bench", "shared", "--sizes", "", "--csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.out)))
    assert rows == []


def test_bench_shared_csv_counter_grows(capsys):
    code, out = run(["bench", "shared", "--sizes", "3..5", "--engines", "explorer,baseline", "--csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.out)))
    base = [int(r["C_unf"]) for r in rows if r["engine"] == "baseline"]
    assert len(base) == 3 and base == sorted(base) and len(set(base)) == 3


def test_bench_classics_match_oracle():
    rows = bench_rows("mutex-classics", [], ["explorer", "oracle"])
    by = {}
    for r in rows:
        by.setdefault(r["instance"], {})[r["engine"]] = r["verdict"]
    assert set(by) == set(CLASSICS)
    assert by["dekker"]["explorer"] == by["peterson"]["explorer"] == "Holds"
    for v in by.values():
        assert v["explorer"] == v["oracle"]


def test_bench_timeout_marker():
    rows = bench_rows("shared", [6], ["baseline"], timeout=0.001)
    assert rows[0]["verdict"] == "TO"


def test_bench_unknown_engine(capsys):
    code, _ = run(["bench", "shared", "--sizes", "2", "--engines", "nope"], capsys)
    assert code == 2


def test_export_pdnet_has_three_assignments():
    dot = export_dot(bundled_source("motivating"), "pdnet")
    assert dot.count(":Assign") == 3
    assert dot == export_dot(bundled_source("motivating"), "pdnet")  # deterministic


def test_export_product_highlights_synchronization():
    dot = export_dot(bundled_source("motivating"), "product")
    assert "color=blue" in dot and "P_B:Scheduler" in dot


def test_export_tree_of_single_thread_is_path():
    src = "int a = 0 range 0..3;\nthread T { a = 1; a = 2; }\n"
    nodes, edges = dot_counts(export_dot(src, "tree"))
    assert edges == nodes - 1


def test_export_prefix_counts_match_json_stats(program_file, capsys):
    f = program_file("peterson")
    _code, out = run(["verify", f, "--json"], capsys)
    stats = json.loads(out.out)["stats"]
    nodes, _edges = dot_counts(export_dot(bundled_source("peterson"), "prefix"))
    assert nodes == stats["conditions"] + stats["events"]


def test_console_module_entry(program_file):
    res = subprocess.run([sys.executable, "-m", "pdnet_ltl.cli", "verify", program_file("motivating"), "--ltl", "true"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "Holds" in res.stdout
