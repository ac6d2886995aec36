import json
from pathlib import Path

import pytest

from vdqc.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_thresholds_report(capsys):
    code, out, _ = run(capsys, "thresholds", "--alpha", "0.25", "--delta", "0.05", "--n", "354134")
    assert code == 0
    payload = json.loads(out[out.index("{"):])
    assert payload["noise_threshold"] == pytest.approx(0.2134, abs=1e-4)
    assert "noise_threshold" in out.splitlines()[9]


def test_thresholds_from_q(capsys):
    code, out, _ = run(capsys, "thresholds", "--q", "0.3333333")
    assert code == 0
    assert json.loads(out[out.index("{"):])["alpha"] == pytest.approx(0.25, abs=1e-6)


def test_thresholds_invalid_and_strict(capsys):
    code, _, err = run(capsys, "thresholds", "--alpha", "0", "--n", "1000")
    assert code == 1 and "alpha" in err
    code, _, _ = run(capsys, "thresholds", "--alpha", "0.25", "--delta", "0.2", "--n", "1000", "--strict")
    assert code == 2
    code, _, _ = run(capsys, "thresholds", "--alpha", "0.25", "--delta", "0.2", "--n", "1000")
    assert code == 0
    code, _, _ = run(capsys, "thresholds", "--alpha", "0.25", "--target-p-noise", "0.3")
    assert code == 2


def test_game_exact_and_guard(capsys, tmp_path):
    out_csv = tmp_path / "g.csv"
    code, out, _ = run(capsys, "game", "exact", "--n", "2", "--alpha", "0.25", "--w", "0.2", "--set", "1",
                       "--out", str(out_csv))
    assert code == 0 and out.strip() == "0.333333"
    assert "probability" in out_csv.read_text()
    code, _, _ = run(capsys, "game", "exact", "--n", "30", "--alpha", "0.25", "--w", "0.2", "--set", "1")
    assert code == 3
    code, _, _ = run(capsys, "game", "exact", "--n", "3", "--alpha", "0.7", "--w", "0.2", "--set", "1")
    assert code == 1


def test_game_simulate(capsys):
    code, out, _ = run(capsys, "game", "simulate", "--n", "40", "--alpha", "0.25", "--w", "0.2",
                       "--strategy", "empty", "--trials", "500")
    assert code == 0 and out.startswith("0.000000")
    code, _, _ = run(capsys, "game", "simulate", "--n", "40", "--alpha", "0.25", "--w", "0.2", "--strategy", "x")
    assert code == 1


def test_protocol_identity_accepts(capsys, tmp_path):
    circ = tmp_path / "id.txt"
    circ.write_text("I 0\n")
    code, out, _ = run(capsys, "protocol", "--circuit", str(circ), "--n", "3000", "--w", "0.2")
    assert code == 0 and out.strip().splitlines()[-1] == "Accept"


def test_protocol_full_attack_aborts(capsys):
    code, out, _ = run(capsys, "protocol", "--p-zero", "1", "--attack", "full", "--n", "3000", "--w", "0.2")
    assert code == 0 and out.strip().splitlines()[-1].startswith("Abort")


def test_protocol_parse_error_reports_line(capsys, tmp_path):
    circ = tmp_path / "bad.txt"
    circ.write_text("H 0\nFOO 1\n")
    code, _, err = run(capsys, "protocol", "--circuit", str(circ))
    assert code == 1 and "line 2" in err


def test_protocol_yes_circuit_many_trials(capsys, tmp_path):
    circ = tmp_path / "yes.txt"
    circ.write_text("X 0\nX 0\nI 1\n")
    code, out, _ = run(capsys, "protocol", "--circuit", str(circ), "--n", "2000", "--w", "0.3",
                       "--p-noise", "0.05", "--trials", "200")
    assert code == 0
    accept = [line for line in out.splitlines() if line.startswith("accept")]
    assert accept and float(accept[0].split()[-1]) >= 0.95


def test_experiment_tail_bounds(capsys, tmp_path):
    code, out, _ = run(capsys, "experiment", str(CONFIGS / "tail-bounds.json"), "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "tail-bounds.csv").exists() and "FAIL" not in out


def test_experiment_out_of_regime_guard(capsys, tmp_path):
    code, _, err = run(capsys, "experiment", str(CONFIGS / "lemma-out-of-regime.json"), "--out", str(tmp_path))
    assert code == 1 and "A =" in err
    with pytest.warns(Warning):
        code, _, err = run(capsys, "experiment", str(CONFIGS / "lemma-out-of-regime.json"), "--out", str(tmp_path),
                           "--allow-out-of-regime", "--set", "trials=20", "--set", "oracle_trials=2000")
    assert "OUT OF REGIME" in err


def test_experiment_bound_failure_exit_4(capsys, tmp_path):
    code, _, _ = run(capsys, "experiment", str(CONFIGS / "honest-abort.json"), "--out", str(tmp_path),
                     "--set", "p_noise=1.0", "--trials", "10", "--allow-out-of-regime")
    assert code == 4


def test_experiment_schema_violation(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"experiment": "tail-bounds", "bogus": 1}))
    code, _, err = run(capsys, "experiment", str(bad), "--out", str(tmp_path))
    assert code == 1 and "bogus" in err
    bad.write_text("{not json")
    assert run(capsys, "experiment", str(bad))[0] == 1


def test_experiment_byte_identical_reruns(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = [str(CONFIGS / "honest-abort.json"), "--trials", "100", "--seed", "7"]
    assert run(capsys, "experiment", *args, "--out", str(a))[0] == 0
    assert run(capsys, "experiment", *args, "--out", str(b), "--workers", "2")[0] == 0
    for name in ("honest-abort.csv", "honest-abort.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_bad_arguments_exit_1(capsys):
    assert run(capsys, "game")[0] == 1
    assert run(capsys, "nope")[0] == 1
