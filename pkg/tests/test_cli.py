import io
import json

import pytest

from prefixfilter import BAD, GOOD, BLOCK_ALL, WeightedAddressSet, score
from prefixfilter.cli import bench_sizes, main, parse_ops
from prefixfilter.prefix import parse_prefix

from instances import DATA


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


FOUR_BIT = ("--bad", DATA / "four_bit_bad.txt", "--good", DATA / "four_bit_good.txt", "--width", 4)


def test_block_all_four_bit():
    code, text = run("block-all", *FOUR_BIT, "--f-max", 4, "--no-timing")
    rep = json.loads(text)
    assert code == 0 and rep["schema"] == 1
    assert rep["metrics"]["collateral_damage"] == 3
    assert "runtime_ms" not in rep


def test_report_rescoring_is_consistent():
    code, text = run("block-some", *FOUR_BIT, "--f-max", 3, "--weight-ratio", 2)
    rep = json.loads(text)
    bad = WeightedAddressSet.from_addresses([0, 3, 4, 5, 7, 8, 10, 11, 12], BAD, 4, weight=2)
    good = WeightedAddressSet.from_addresses([1, 2, 6, 9, 13, 14, 15], GOOD, 4)
    again = score([parse_prefix(p) for p in rep["filters"]], bad, good, "block-some")
    assert again.metrics() == rep["metrics"]
    assert rep["runtime_ms"] >= 0


def test_output_is_byte_stable():
    args = ("flooding", *FOUR_BIT, "--f-max", 2, "--capacity", 6, "--no-timing")
    assert run(*args) == run(*args)


def test_flooding_with_ample_capacity():
    code, text = run("flooding", *FOUR_BIT, "--f-max", 2, "--capacity", 1000, "--no-timing")
    rep = json.loads(text)
    assert code == 0 and rep["filters"] == [] and rep["metrics"]["collateral_damage"] == 0


def test_exit_codes():
    code, text = run("block-all", *FOUR_BIT, "--f-max", 0)
    assert code == 2 and json.loads(text)["status"] == "infeasible"
    code, text = run("flooding", *FOUR_BIT, "--f-max", 0, "--capacity", 1)
    assert code == 2 and json.loads(text)["max_blockable"] == 0
    assert run("flooding", *FOUR_BIT, "--f-max", 1)[0] == 1
    assert run("block-all", "--bad", DATA / "missing.txt", "--f-max", 1)[0] == 1
    assert run("block-some", *FOUR_BIT, "--f-max", 1, "--weight-ratio", "1/3")[0] == 1
    with pytest.raises(SystemExit) as err:
        main(["block-all", "--f-max", "x"])
    assert err.value.code == 1


def test_sweep_matches_single_runs(tmp_path):
    code, text = run("sweep", *FOUR_BIT, "--f-range", "1..9")
    assert code == 0
    rows = [line.split(",") for line in text.strip().splitlines()]
    assert rows[0] == ["F", "CD", "UBIP", "objective", "filters_used"]
    assert rows[-1][1] == "0"
    for row in rows[1:4]:
        rep = json.loads(run("block-all", *FOUR_BIT, "--f-max", row[0], "--no-timing")[1])
        assert int(row[1]) == rep["metrics"]["collateral_damage"]
    out = tmp_path / "s.csv"
    run("sweep", *FOUR_BIT, "--f-range", "1..9", "--out", out)
    assert out.read_text() == text


def test_sweep_weight_ratios_differ():
    _, low = run("sweep", *FOUR_BIT, "--problem", "block-some", "--f-range", "0..4")
    _, high = run("sweep", *FOUR_BIT, "--problem", "block-some", "--f-range", "0..4", "--weight-ratio", 16)
    assert low != high


def test_preset_generation(tmp_path):
    preset = tmp_path / "p.cfg"
    preset.write_text("width = 16\nf_max = 5\nbad_n = 200\nbad_clusters = 4\ngood_n = 300\ngood_clusters = 4\n")
    a = run("block-all", "--preset", preset, "--seed", 3, "--no-timing")
    b = run("block-all", "--preset", preset, "--seed", 3, "--no-timing")
    assert a == b and a[0] == 0
    assert len(json.loads(a[1])["filters"]) <= 5


def test_bench_sizes_and_determinism():
    assert bench_sizes(1000, 10000) == [1000, 2000, 4000, 8000]
    args = ("bench", "--n-range", "500..2k", "--trials", 1, "--f-max", 20, "--no-timing")
    code, text = run(*args)
    assert code == 0 and text == run(*args)[1]
    assert text.splitlines()[0] == "N,objective"
    code, text = run("bench", "--n-range", "500..1000", "--trials", 2, "--f-max", 20)
    assert text.splitlines()[0] == "N,objective,median_runtime_ms,ratio"


def test_update_six_bit_replay(tmp_path):
    state = tmp_path / "state.txt"
    code, text = run("update", "--state", state, "--ops", DATA / "six_bit_ops.txt", "--f-max", 3, "--width", 6,
                     "--bad", DATA / "six_bit_bad.txt", "--verify")
    assert code == 0
    first, verify = [json.loads(line) for line in text.splitlines()]
    assert first["new_nodes"] == ["32/3@6"]
    assert verify["verify"] is True
    assert "37,1" in state.read_text()


def test_update_empty_ops_is_noop(tmp_path):
    state = tmp_path / "state.txt"
    ops = tmp_path / "ops.txt"
    ops.write_text("")
    run("update", "--state", state, "--ops", ops, "--f-max", 2, "--width", 6, "--bad", DATA / "six_bit_bad.txt")
    before = state.read_text()
    code, text = run("update", "--state", state, "--ops", ops)
    assert code == 0 and text == "" and state.read_text() == before


def test_update_errors_inline_or_strict(tmp_path):
    state = tmp_path / "state.txt"
    ops = tmp_path / "ops.txt"
    ops.write_text("remove 5\ninsert 9,2\nfrobnicate 3\n")
    code, text = run("update", "--state", state, "--ops", ops, "--f-max", 2, "--width", 6)
    recs = [json.loads(line) for line in text.splitlines()]
    assert code == 0 and "error" in recs[0] and recs[1]["op"] == "insert" and "error" in recs[2]
    ops.write_text("remove 5\n")
    assert run("update", "--state", state, "--ops", ops, "--strict")[0] == 1


def test_update_batch(tmp_path):
    state = tmp_path / "state.txt"
    ops = tmp_path / "ops.txt"
    ops.write_text("insert 37\nremove 3\n")
    code, text = run("update", "--state", state, "--ops", ops, "--batch", "--f-max", 2, "--width", 6,
                     "--bad", DATA / "six_bit_bad.txt", "--verify")
    batch, verify = [json.loads(line) for line in text.splitlines()]
    assert batch["path"] == "incremental" and verify["verify"]


def test_parse_ops():
    ops = parse_ops("insert 3,4\n# note\nremove 7\ninsert 99\n", 6)
    assert ops[0] == (1, "insert", 3, 4) and ops[1] == (3, "remove", 7, 1)
    assert isinstance(ops[2][3], Exception)


def test_dist_flooding(tmp_path):
    (tmp_path / "a_bad.txt").write_text("1,6\n2,6\n")
    (tmp_path / "a_good.txt").write_text("3,2\n")
    (tmp_path / "b_bad.txt").write_text("2,4\n60,5\n")
    (tmp_path / "b_good.txt").write_text("61,1\n")
    scenario = tmp_path / "s.ini"
    scenario.write_text(
        "[global]\nwidth = 6\n\n"
        "[router a]\nf_max = 2\ncapacity = 5\ngood = a_good.txt\nbad = a_bad.txt\n\n"
        "[router b]\nf_max = 1\ncapacity = 4\ngood = b_good.txt\nbad = b_bad.txt\n")
    trace = tmp_path / "t.jsonl"
    code, text = run("dist-flooding", "--scenario", scenario, "--trace", trace, "--no-timing")
    rep = json.loads(text)
    assert code == 0 and set(rep["routers"]) == {"a", "b"}
    assert rep["dual_bound"] <= rep["objective"]
    assert len(trace.read_text().splitlines()) == rep["rounds"]
    assert run("dist-flooding")[0] == 1
