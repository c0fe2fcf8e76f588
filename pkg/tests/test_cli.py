import json
import subprocess
import sys

import pytest

from irbound.cli import run


def nn(J1, J2, J3):
    return {"family": "nearest_neighbour", "params": {"1": {"J": J1}, "2": {"J": J2}, "3": {"J": J3}}}


@pytest.fixture
def write(tmp_path):
    def _write(cfg, name="cfg.json"):
        p = tmp_path / name
        p.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
        return str(p)

    return _write


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_table1_passes(capsys):
    code, out, _ = invoke(capsys, "table1")
    assert code == 0
    rep = json.loads(out)
    assert rep["status"] == "pass" and rep["summary"]["failed"] == 0
    rows = {r["d"]: r for r in rep["rows"]}
    assert rows[2]["I"] == pytest.approx(1.393, abs=2e-3)
    assert rows[4]["I_tilde"] == pytest.approx(0.2540, abs=5e-4)


def test_certify_square_lattice(capsys, write):
    cfg = {"command": "certify", "dimension": 2, "spin_times_two": 1, "beta": "inf", "ell": "inf",
           "couplings": nn(1.0, -0.05, 1.0), "alpha_mode": "worst_case"}
    code, out, _ = invoke(capsys, "certify", "--config", write(cfg))
    rep = json.loads(out)
    assert code == 0
    assert rep["certificate"]["lro_proven"] is True
    assert rep["alpha_free_condition"]["threshold"] == pytest.approx(0.1097, abs=1e-3)
    assert rep["config"] == cfg


def test_certify_general_family(capsys, write):
    fam = {"family": "yukawa", "params": {"1": {"a": 0.5, "b": 1.0}, "2": {"a": -0.2, "b": 1.0},
                                          "3": {"a": 1.0, "b": 1.0}}}
    cfg = {"dimension": 3, "ell": 4, "spin_times_two": 2, "couplings": fam}
    code, out, _ = invoke(capsys, "certify", "--config", write(cfg))
    assert code == 0
    assert json.loads(out)["path"] == "general"


def test_certify_rejects_sign_violation(capsys, write):
    cfg = {"dimension": 2, "spin_times_two": 1, "couplings": nn(1.0, 0.5, 1.0)}
    code, _, err = invoke(capsys, "certify", "--config", write(cfg))
    assert code == 2 and "configuration error" in err


def test_scan_empty_grid_gives_header_only(capsys, write):
    cfg = {"dimension": 2, "spin_times_two": 1, "grid": {"ratio": []}}
    code, out, _ = invoke(capsys, "scan", "--config", write(cfg))
    assert code == 0
    assert out.count("\n") == 1 and out.startswith("d,two_S,ratio")


def test_scan_range_and_formats(capsys, write, tmp_path):
    cfg = {"dimension": 2, "spin_times_two": 1, "alpha_mode": "kk",
           "grid": {"ratio": {"start": 0.0, "stop": 0.2, "step": 0.05}}}
    path = write(cfg)
    out_csv = tmp_path / "scan.csv"
    code, _, _ = invoke(capsys, "scan", "--config", path, "--out", str(out_csv))
    assert code == 0
    data = out_csv.read_bytes()
    assert b"\r" not in data and len(data.decode().strip().split("\n")) == 6
    code, out, _ = invoke(capsys, "scan", "--config", path, "--format", "json")
    crit = json.loads(out)["scan"]["critical_ratios"]
    assert crit["d=2,two_S=1,beta=inf,ell=inf"] == pytest.approx(0.1097, abs=1e-3)


def test_outputs_are_byte_stable(capsys, write, tmp_path):
    cfg = write({"dimension": 3, "spin_times_two": 2, "grid": {"ratio": [0.0, 0.5, 1.0], "beta": ["inf", 3.0]}})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["scan", "--config", cfg, "--out", str(a)])
    run(["scan", "--config", cfg, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    cfg2 = write({"dimension": 1, "ell": 4, "spin_times_two": 1, "beta": 1.0, "couplings": nn(0.5, -0.25, 1.0)},
                 "v.json")
    runs = [invoke(capsys, "verify", "--config", cfg2, "--samples", "3")[1] for _ in range(2)]
    assert runs[0] == runs[1]


def test_rp_check_sign_violation_exits_one(capsys, write):
    cfg = write({"dimension": 1, "ell": 4, "couplings": nn(-1.0, 0.0, 1.0)})
    code, out, err = invoke(capsys, "rp-check", "--config", cfg)
    assert code == 1
    rep = json.loads(out)
    rp = next(c for c in rep["checks"] if c["name"] == "rp_check")
    assert rp["pass"] is False and rp["details"]["failed_axes"] == [1]
    assert "FAIL rp_check" in err


def test_verify_sign_violation_skips_dependent_checks(capsys, write):
    cfg = write({"dimension": 1, "ell": 4, "spin_times_two": 1, "beta": 1.0, "couplings": nn(1.0, 0.5, 1.0)})
    code, out, _ = invoke(capsys, "verify", "--config", cfg, "--samples", "2")
    assert code == 1
    rep = json.loads(out)
    by_name = {c["name"]: c for c in rep["checks"]}
    assert by_name["rp_check"]["pass"] is False
    for name in ("infrared_bound_duhamel", "infrared_bound_correlation", "rp_fields", "gaussian_domination"):
        assert by_name[name]["pass"] is None and by_name[name]["skipped"]
    assert rep["summary"]["skipped"] == 4


def test_verify_seed_changes_draws_not_verdicts(capsys, write):
    cfg = write({"dimension": 1, "ell": 4, "spin_times_two": 1, "beta": 1.0, "couplings": nn(0.5, -0.25, 1.0)})
    reps = []
    for seed in ("1", "0xdeadbeefdeadbeef"):
        code, out, _ = invoke(capsys, "verify", "--config", cfg, "--samples", "4", "--seed", seed)
        assert code == 0
        reps.append(json.loads(out))
    assert [c["pass"] for c in reps[0]["checks"]] == [c["pass"] for c in reps[1]["checks"]]
    assert [c["margin"] for c in reps[0]["checks"]] != [c["margin"] for c in reps[1]["checks"]]
    assert reps[1]["seed"] == 0xDEADBEEFDEADBEEF


def test_default_verify_suite_small(capsys):
    code, out, _ = invoke(capsys, "verify", "--samples", "1")
    rep = json.loads(out)
    assert code == 0, [c for c in rep["checks"] if c["pass"] is False][:3]
    assert set(rep["suites"]) == {"infrared_bounds", "reflection_positivity", "identities", "cross_validation"}


def test_timings_are_opt_in(capsys):
    _, out, _ = invoke(capsys, "table1")
    assert "timings_seconds" not in json.loads(out)
    _, out, _ = invoke(capsys, "table1", "--timings")
    assert set(json.loads(out)["timings_seconds"]) == {"d=2", "d=3", "d=4"}


@pytest.mark.parametrize(
    "cfg",
    [
        '{"dimension": 2, "bogus": 1}',
        "{not json",
        '{"dimension": "two"}',
        '{"beta": -1}',
        '{"couplings": {"family": "yukawa", "params": {"1": {"a": 1}, "2": {"a": 1, "b": 1}, "3": {"a": 1, "b": 1}}}}',
        '{"alpha_mode": {"measured": -0.1}}',
        '{"command": "scan"}',
    ],
)
def test_schema_errors_exit_two(capsys, write, cfg):
    code, out, err = invoke(capsys, "certify", "--config", write(cfg))
    assert code == 2 and out == "" and "configuration error" in err


def test_csv_only_for_scan(capsys):
    assert invoke(capsys, "table1", "--format", "csv")[0] == 2


def test_missing_config_file(capsys, tmp_path):
    assert invoke(capsys, "certify", "--config", str(tmp_path / "nope.json"))[0] == 2


def test_bad_arguments_exit_two(capsys):
    assert invoke(capsys, "frobnicate")[0] == 2
    assert invoke(capsys, "table1", "--seed", "-3")[0] == 2


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "irbound.cli", "table1", "--out", str(tmp_path / "t.json")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert json.loads((tmp_path / "t.json").read_text())["command"] == "table1"
