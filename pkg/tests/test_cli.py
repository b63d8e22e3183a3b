import csv
import io
import json

import pytest

from tentlim.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main
from tentlim.harness import ConfigError, RunConfig, compare_fp_r, suite
from tentlim.kneading import KneadingError, KneadingMap

INADMISSIBLE = {"kind": "explicit", "values": [0, 0, 0, 3, 4, 0]}


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


@pytest.fixture
def bad_map(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(INADMISSIBLE))
    return str(path)


def test_kneading_text(capsys):
    code, out, _ = run(capsys, "kneading", "--k-max", "20", "--symbols", "256")
    assert code == EXIT_OK
    assert "S: 1 2 3 5 8 13 21" in out
    assert "kappa: 3" in out


def test_kneading_json(capsys):
    code, out, _ = run(capsys, "kneading", "--format", "json", "--k-max", "20", "--symbols", "256")
    data = json.loads(out)
    assert code == EXIT_OK
    assert data["admissible"] and data["fibonacci_like"]
    assert data["nu"].startswith("1001110110010100111")


def test_kneading_inadmissible(capsys, bad_map):
    code, out, _ = run(capsys, "kneading", "--kneading", bad_map, "--format", "json")
    assert code == EXIT_FAIL
    assert json.loads(out)["first_violation"] == 5


def test_kneading_csv(capsys):
    code, out, _ = run(capsys, "kneading", "--format", "csv", "--k-max", "10", "--symbols", "256")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["k", "Q", "S"]
    assert rows[5] == ["5", "3", "13"]  # S_0 = 1


def test_fold_window(capsys):
    code, out, _ = run(capsys, "fold", "--salient", "4", "--start", "0", "--end", "8")
    assert code == EXIT_OK
    assert out.split()[0] in ("INF", "inf", "∞")
    assert len(out.split()) == 8


def test_fold_bad_range(capsys):
    code, _, err = run(capsys, "fold", "--salient", "3", "--start", "5", "--end", "2")
    assert code == EXIT_INPUT
    assert "outside the pattern" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "kneading", "--kneading", "/nonexistent/q.json")
    assert code == EXIT_INPUT
    assert "cannot read" in err


def test_chain_round_trip(capsys, tmp_path):
    spec = tmp_path / "chain.json"
    code, _, _ = run(capsys, "chain", "build", "--p", "2", "--epsilon", "0.5", "--depth", "40",
                     "--format", "json", "--out", str(spec))
    assert code == EXIT_OK
    assert json.loads(spec.read_text())["p"] == 2
    code, out, _ = run(capsys, "chain", "verify", "--spec", str(spec), "--depth", "40", "--format", "json")
    assert code == EXIT_OK
    assert json.loads(out)["ok"]


def test_chain_verify_needs_spec(capsys):
    assert run(capsys, "chain", "verify")[0] == EXIT_INPUT


def test_chain_verify_rejects_bad_spec(capsys, tmp_path):
    spec = tmp_path / "chain.json"
    spec.write_text(json.dumps({"p": 2}))
    code, _, err = run(capsys, "chain", "verify", "--spec", str(spec))
    assert code == EXIT_INPUT
    assert "not a chain spec" in err


def test_classify_single_window(capsys, tmp_path):
    pat = tmp_path / "w.txt"
    pat.write_text("1 14 1 6 1")
    code, out, _ = run(capsys, "classify", "--pattern", str(pat), "--format", "json")
    assert code == EXIT_OK
    rec = json.loads(out)
    assert rec["class"] == "basic_quasi"
    assert rec["range"] == [0, 4]


def test_classify_batch(capsys, tmp_path):
    pat = tmp_path / "w.txt"
    pat.write_text("0 1 0 3 0 1 0 2 0 1 0 3 0 1 0")
    code, out, _ = run(capsys, "classify", "--pattern", str(pat), "--batch", "--max-len", "9",
                       "--format", "json")
    assert code == EXIT_OK
    recs = json.loads(out)
    assert recs and all(set(r) >= {"range", "class", "nodes", "witness"} for r in recs)
    assert all(r["class"] != "none" for r in recs)


def test_classify_bad_pattern(capsys, tmp_path):
    pat = tmp_path / "w.txt"
    pat.write_text("1 x 1")
    assert run(capsys, "classify", "--pattern", str(pat))[0] == EXIT_INPUT


def test_compare_default_diverges(capsys):
    code, out, _ = run(capsys, "compare", "--k-max", "60")
    assert code == EXIT_OK
    assert "diverge at depth 5" in out


def test_compare_json_is_deterministic(capsys):
    first = run(capsys, "compare", "--format", "json")[1]
    second = run(capsys, "compare", "--format", "json")[1]
    assert first == second
    data = json.loads(first)
    assert data["diverged"] and data["index"] == 5 and data["side"] == "left"


def test_compare_with_itself(capsys, tmp_path):
    other = tmp_path / "fib.json"
    other.write_text(json.dumps({"kind": "fibonacci", "k_max": 60}))
    code, out, _ = run(capsys, "compare", "--other", str(other), "--salient", "6", "--format", "json")
    assert code == EXIT_OK
    assert not json.loads(out)["diverged"]


def test_compare_is_symmetric():
    fib, off = KneadingMap.fibonacci(60), KneadingMap.with_offset(3, 60)
    a, b = compare_fp_r(fib, off, 8), compare_fp_r(off, fib, 8)
    assert (a.diverged, a.index, a.side, a.block) == (b.diverged, b.index, b.side, b.block)


def test_compare_rejects_inadmissible():
    with pytest.raises(KneadingError):
        compare_fp_r(KneadingMap(tuple(INADMISSIBLE["values"])), KneadingMap.fibonacci(60), 4)


def test_suite_subset(capsys):
    code, out, _ = run(capsys, "suite", "--only", "c01,c02,c11", "--format", "json")
    assert code == EXIT_OK
    data = json.loads(out)
    assert [c["id"] for c in data["checks"]] == ["c01", "c02", "c11"]
    assert all("seconds" not in c for c in data["checks"])


def test_suite_timings_opt_in(capsys):
    _, out, _ = run(capsys, "suite", "--only", "c01", "--format", "json", "--timings")
    assert "seconds" in json.loads(out)["checks"][0]


def test_suite_bad_depth(capsys):
    code, _, err = run(capsys, "suite", "--depth", "0")
    assert code == EXIT_INPUT
    assert err


def test_suite_inadmissible_map_fails(capsys, bad_map):
    code, out, _ = run(capsys, "suite", "--kneading", bad_map, "--only", "c01,c02")
    assert code == EXIT_FAIL
    assert "FAILURES" in out


def test_plotdata_csv(capsys, tmp_path):
    spec = tmp_path / "chain.json"
    run(capsys, "chain", "build", "--p", "2", "--epsilon", "0.5", "--depth", "20", "--format", "json",
        "--out", str(spec))
    code, out, _ = run(capsys, "plotdata", "--depth", "10", "--chain", str(spec))
    rows = list(csv.reader(io.StringIO(out)))
    assert code == EXIT_OK
    assert rows[0] == ["kind", "n", "x"]
    assert sum(r[0] == "c" for r in rows) == 11
    assert any(r[0] == "boundary" for r in rows)
    assert float(rows[2][2]) == pytest.approx(1.7292119317087213 / 2)


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(epsilon=1.5).validate()
    with pytest.raises(ConfigError):
        RunConfig(p=-1).validate()


def test_unknown_check_id():
    with pytest.raises(ConfigError):
        suite(RunConfig(), ["c99"])
