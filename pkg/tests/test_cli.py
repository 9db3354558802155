import csv
import io
import json
import subprocess
import sys

import pytest

from erasure_aoi import UNBOUNDED, ErasureChannel, Policy, evaluate, parse_policy
from erasure_aoi.cli import OutputRecord, NumericError, main
from erasure_aoi.figures import read_curves


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def values(text):
    return {r["objective"]: float(r["value"]) for r in rows(text)}


# ---- eval ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "argv,aoi,paoi",
    [
        (["--k", "1", "--eps", "0.5", "--policy", "1"], 2.5, 3.0),
        (["--k", "5", "--eps", "0", "--policy", "all-ones"], 7.5, 10.0),
        (["--k", "5", "--eps", "0.5", "--policy", "all-inf"], 15.5, 20.0),
    ],
)
def test_eval_examples(capsys, argv, aoi, paoi):
    code, out, _ = run(capsys, "eval", *argv)
    assert code == 0
    v = values(out)
    assert v["average_aoi"] == pytest.approx(aoi, abs=1e-12)
    assert v["peak_aoi"] == pytest.approx(paoi, abs=1e-12)


def test_eval_matches_library_exactly(capsys):
    code, out, _ = run(capsys, "eval", "--eps", "0.37", "--policy", "1,3,inf,2")
    res = evaluate(Policy((1, 3, "inf", 2)), ErasureChannel(0.37))
    v = values(out)
    assert v["average_aoi"] == res.average_aoi and v["peak_aoi"] == res.peak_aoi
    assert parse_policy(rows(out)[0]["policy"]).caps == (1, 3, UNBOUNDED, 2)


def test_eval_named_lower_bound_policy(capsys):
    _, out, _ = run(capsys, "eval", "--k", "5", "--eps", "0.5", "--policy", "paoi-lb")
    assert rows(out)[0]["policy"] == "1,2,4,6,8"


@pytest.mark.parametrize(
    "argv",
    [
        ["eval", "--eps", "0.5", "--policy", "1,x"],
        ["eval", "--eps", "1.5", "--policy", "1"],
        ["eval", "--k", "3", "--eps", "0.5", "--policy", "1,2"],
        ["eval", "--eps", "0.5", "--policy", "all-ones"],
        ["eval", "--eps", "0.5", "--policy", "0"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--policy", "1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["optimize", "--eps", "0.3"])
    assert exc.value.code == 2


# ---- output formats ------------------------------------------------------------


def test_jsonl_round_trip(capsys):
    _, out, _ = run(capsys, "eval", "--eps", "0.25", "--policy", "2,inf", "--format", "jsonl")
    recs = [json.loads(line) for line in out.splitlines()]
    assert [r["objective"] for r in recs] == ["average_aoi", "peak_aoi"]
    assert recs[0]["policy"] == "2,inf" and recs[0]["provenance"] == "analytic"
    assert recs[0]["ci_halfwidth"] is None
    assert recs[0]["value"] == evaluate(Policy((2, "inf")), ErasureChannel(0.25)).average_aoi


def test_csv_header(capsys):
    _, out, _ = run(capsys, "eval", "--eps", "0.1", "--policy", "1")
    assert out.splitlines()[0] == "command,k,epsilon,policy,objective,value,ci_halfwidth,provenance,detail"


def test_record_rejects_non_finite():
    with pytest.raises(NumericError):
        OutputRecord("eval", 1, 0.5, "1", "average_aoi", float("inf"))
    assert OutputRecord("eval", 1, 0.5, "1", "x", 1.0, ci_halfwidth=float("nan")).ci_halfwidth is None


# ---- simulate ------------------------------------------------------------------


SIM = ["simulate", "--k", "1", "--eps", "0.5", "--policy", "1", "--horizon", "100000", "--reps", "5"]


def test_simulate_near_engine(capsys):
    code, out, _ = run(capsys, *SIM)
    assert code == 0
    rec = {r["objective"]: r for r in rows(out)}
    assert rec["average_aoi"]["provenance"] == "simulated"
    assert abs(float(rec["average_aoi"]["value"]) - 2.5) <= 3 * float(rec["average_aoi"]["ci_halfwidth"])


def test_simulate_byte_identical(capsys):
    _, a, _ = run(capsys, *SIM, "--seed", "7")
    _, b, _ = run(capsys, *SIM, "--seed", "7", "--threads", "3")
    assert a == b


def test_simulate_erasure_free_zero_ci(capsys):
    _, out, _ = run(capsys, "simulate", "--k", "3", "--eps", "0", "--policy", "all-ones",
                    "--horizon", "10000", "--reps", "3")
    rec = {r["objective"]: r for r in rows(out)}
    assert float(rec["average_aoi"]["value"]) == 4.5
    assert float(rec["average_aoi"]["ci_halfwidth"]) == 0.0


def test_simulate_zero_successes_exit_3(capsys):
    code, _, err = run(capsys, "simulate", "--k", "6", "--eps", "0.99", "--policy", "all-ones",
                       "--horizon", "50", "--reps", "2")
    assert code == 3 and "deliveries" in err


def test_simulate_bad_config_exit_2(capsys):
    code, _, _ = run(capsys, *SIM[:-2], "--reps", "0")
    assert code == 2


# ---- optimize ------------------------------------------------------------------


def test_optimize_paoi_two_packets(capsys):
    code, out, _ = run(capsys, "optimize", "--k", "2", "--eps", "0.5", "--objective", "paoi")
    best = rows(out)[0]
    assert code == 0 and best["policy"] in ("1,2", "1,3")
    assert best["detail"].startswith("best;")


def test_optimize_single_packet(capsys):
    _, out, _ = run(capsys, "optimize", "--k", "1", "--eps", "0.5", "--objective", "aoi")
    best = rows(out)[0]
    assert best["policy"] == "1" and float(best["value"]) == pytest.approx(2.5, abs=1e-15)


def test_optimize_small_eps_starts_with_one(capsys):
    _, out, _ = run(capsys, "optimize", "--k", "3", "--eps", "0.001", "--objective", "aoi", "--cap-max", "4")
    assert rows(out)[0]["policy"].startswith("1,")


def test_optimize_prune_matches_full(capsys):
    _, full, _ = run(capsys, "optimize", "--k", "3", "--eps", "0.5", "--objective", "paoi", "--cap-max", "6")
    _, pruned, _ = run(capsys, "optimize", "--k", "3", "--eps", "0.5", "--objective", "paoi",
                       "--cap-max", "6", "--prune")
    assert float(rows(full)[0]["value"]) == pytest.approx(float(rows(pruned)[0]["value"]), abs=1e-12)


def test_optimize_prune_needs_paoi(capsys):
    code, _, _ = run(capsys, "optimize", "--k", "3", "--eps", "0.5", "--prune")
    assert code == 2


def test_optimize_warns_on_cap_max(capsys):
    code, _, err = run(capsys, "optimize", "--k", "2", "--eps", "0.8", "--objective", "paoi",
                       "--cap-max", "3", "--no-unbounded")
    assert code == 0 and "cap_max" in err


def test_optimize_size_guard_exit_3(capsys):
    code, _, err = run(capsys, "optimize", "--k", "8", "--eps", "0.3", "--limit", "1000")
    assert code == 3 and "candidates" in err


# ---- bounds and figures --------------------------------------------------------


def test_bounds_records(capsys):
    _, out, _ = run(capsys, "bounds", "--k", "1", "--eps", "0.5")
    v = values(out)
    assert v["zero_error_aoi"] == pytest.approx(2.5, abs=1e-15)
    assert v["zero_error_aoi_printed"] == pytest.approx(8.5, abs=1e-12)
    assert v["infinite_error_aoi"] == pytest.approx(3.5, abs=1e-12)


def test_bounds_two_packet_range(capsys):
    _, out, _ = run(capsys, "bounds", "--k", "2", "--eps", "0.5", "--format", "jsonl")
    v = {json.loads(line)["objective"]: json.loads(line)["value"] for line in out.splitlines()}
    assert (v["paoi_c2_lo"], v["paoi_c2_hi"]) == (2.0, 3.0)


def test_figures_writes_both_tables(capsys, tmp_path):
    code, _, _ = run(capsys, "figures", "--eps-grid", "0,0.3,0.6", "--out-dir", str(tmp_path), "--cap-max", "6")
    assert code == 0
    fig2 = read_curves(tmp_path / "fig2_average_aoi.csv")
    fig3 = read_curves(tmp_path / "fig3_peak_aoi.csv")
    assert {lab for _, lab in fig2} == {"all-ones", "all-inf", "one-then-inf", "optimal", "lower-bound", "upper-bound"}
    assert {lab for _, lab in fig3} == {"all-inf", "paoi-lb", "optimal"}
    for lab in ("all-ones", "all-inf", "one-then-inf", "optimal"):
        assert fig2[(0.0, lab)] == 7.5
    for e in (0.3, 0.6):
        assert fig2[(e, "all-inf")] <= fig2[(e, "all-ones")]
        assert fig3[(e, "paoi-lb")] <= fig3[(e, "all-inf")]


def test_figures_unwritable_dir(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, _ = run(capsys, "figures", "--eps-grid", "0.5", "--out-dir", str(blocker / "sub"))
    assert code == 2


def test_figures_bad_grid(capsys, tmp_path):
    code, _, _ = run(capsys, "figures", "--eps-grid", "0.1:0.5:0", "--out-dir", str(tmp_path))
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "erasure_aoi", "eval", "--eps", "0.5", "--policy", "1"],
        capture_output=True, text=True, check=True,
    )
    assert values(proc.stdout)["average_aoi"] == 2.5
