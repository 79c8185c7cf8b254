import csv
import io
import json

import pytest

from lsorder.cli import BENCH_COLUMNS, CliError, RunConfig, SplitMix64, main, random_points
from lsorder.lso import deserialize


def run(argv):
    buf = io.StringIO()
    code = main(argv, buf)
    return code, buf.getvalue()


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_splitmix64_reference_values():
    rng = SplitMix64(0)
    assert rng.next_u64() == 0xE220A8397B1DCDAF
    assert rng.next_u64() == 0x6E789E6AA1B965F4
    assert 0 <= SplitMix64(5).uniform() < 1


def test_random_points_deterministic():
    assert random_points(5, 2, 9) == random_points(5, 2, 9)
    assert random_points(5, 2, 9) != random_points(5, 2, 10)


def test_config_validation():
    with pytest.raises(CliError) as e:
        RunConfig("stream", eps=0.7)
    assert e.value.code == 2
    assert RunConfig("build", eps=0.5).gamma == 0.5
    assert RunConfig("build", eps=0.0625).gamma == 0.125


def test_exit_code_parse_errors(tmp_path):
    assert run(["nope"])[0] == 2
    assert run(["stream", "--eps", "2"])[0] == 2
    bad = write(tmp_path, "ops.txt", "+ 0 R 0.5\n* 1\n")
    assert run(["stream", "--dim", "1", "--ops", bad])[0] == 2
    assert run(["stream", "--dim", "1", "--ops", str(tmp_path / "missing")])[0] == 2


def test_parse_error_names_line(tmp_path, capsys):
    bad = write(tmp_path, "ops.txt", "# header\n+ 0 R 0.5\n+ 1 R 1.5\n")
    assert run(["stream", "--dim", "1", "--ops", bad])[0] == 2
    assert "line 3" in capsys.readouterr().err


def test_exit_code_semantic_errors(tmp_path):
    dup = write(tmp_path, "ops.txt", "+ 0 R 0.5\n+ 0 B 0.2\n")
    assert run(["stream", "--dim", "1", "--ops", dup])[0] == 3
    gone = write(tmp_path, "ops2.txt", "- 4\n")
    assert run(["stream", "--dim", "1", "--ops", gone])[0] == 3
    ok = write(tmp_path, "ops3.txt", "+ 0 R 0.5 0.5\n")
    assert run(["bcp", "--dim", "2", "--ops", ok])[0] == 3


def test_empty_stream(tmp_path):
    code, text = run(["stream", "--dim", "1", "--ops", write(tmp_path, "e", "")])
    assert code == 0
    rep = json.loads(text)
    assert rep["ops"] == [] and rep["summary"]["edges"] == 0


def test_two_point_stream(tmp_path):
    ops = write(tmp_path, "ops", "+ 0 R 0.25\n+ 1 B 0.75\n")
    code, text = run(["stream", "--dim", "1", "--ops", ops, "--check", "1"])
    rep = json.loads(text)
    assert code == 0 and rep["schema"] == 1
    assert [r["edge_count"] for r in rep["ops"]] == [0, 1]
    assert rep["ops"][1]["bcp"] == {"red": 0, "blue": 1, "dist": 0.5}
    assert rep["summary"]["checks_passed"] == 2
    assert "seconds" not in rep["ops"][0]


def test_report_is_byte_identical(tmp_path):
    lines = [f"+ {i} {'RB'[i % 2]} {x[0]:.6f}" for i, x in
             enumerate(p.to_floats() for p in random_points(40, 1, 3))]
    lines += [f"- {i}" for i in range(0, 40, 3)]
    ops = write(tmp_path, "ops", "\n".join(lines) + "\n")
    a = run(["stream", "--dim", "1", "--ops", ops, "--check", "10"])
    b = run(["stream", "--dim", "1", "--ops", ops, "--check", "10"])
    assert a == b and a[0] == 0


def test_build_and_verify_round_trip(tmp_path):
    out = str(tmp_path / "fam.lso")
    code, text = run(["build", "--dim", "1", "--out", out])
    assert code == 0 and json.loads(text)["m"] == 240
    with open(out, "rb") as fh:
        fam = deserialize(fh)
    assert fam.m == 240
    code, text = run(["verify", "--dim", "1", "--family", out, "--mode", "gap", "--n", "40"])
    assert code == 0 and json.loads(text)["passed"]


def test_verify_large_classic_family():
    code, text = run(["verify", "--dim", "2", "--kind", "classic", "--mode", "classic",
                      "--n", "30"])
    assert code == 0 and json.loads(text)["pairs_checked"] == 435


def test_verify_grid_modes():
    assert run(["verify", "--mode", "grid", "--t", "4", "--dim", "2"])[0] == 0
    assert run(["verify", "--mode", "gaporders", "--t", "16", "--alpha", "8"])[0] == 0


def test_grid_orders_are_permutations():
    code, text = run(["grid-orders", "--t", "3", "--dim", "2", "--kind", "walecki"])
    rows = [list(map(int, r.split())) for r in text.splitlines()]
    assert code == 0 and len(rows) == 5
    assert all(sorted(r) == list(range(9)) for r in rows)


def test_pack_sphere_output():
    code, text = run(["pack-sphere", "--dim", "2", "--radius", "0.25"])
    pts = [list(map(float, r.split())) for r in text.splitlines()]
    assert code == 0 and all(len(p) == 2 for p in pts)
    assert all(abs(sum(c * c for c in p) - 1) < 1e-9 for p in pts)


def test_lowerbound_modes():
    code, text = run(["lowerbound", "--mode", "grid", "--eps", "0.125", "--dim", "2"])
    rep = json.loads(text)
    assert code == 0 and rep["n"] == 16 and rep["implied_bound"] == 8
    code, text = run(["lowerbound", "--mode", "spanner", "--eps-list", "0.25,0.125",
                      "--dim", "2"])
    assert code == 0 and [r["floor"] for r in json.loads(text)["rows"]] == [4, 8]
    assert run(["lowerbound", "--mode", "sphere", "--eps", "0.5"])[0] == 3


def test_bench_csv_columns():
    code, text = run(["bench", "--dim", "1", "--eps-list", "0.5,0.25", "--n", "20",
                      "--format", "csv"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0 and tuple(rows[0]) == BENCH_COLUMNS
    assert [(r["eps"], r["kind"]) for r in rows] == [
        ("0.25", "classic"), ("0.25", "gap"), ("0.5", "classic"), ("0.5", "gap")]
    assert all(r["build_seconds"] in ("-", "") for r in rows)
