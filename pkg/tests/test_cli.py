import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from sqfa.analysis import acceptance, complexity_report, report_csv
from sqfa.cli import main, sample_promise_words
from sqfa.constructions import mod_2qcfa, moqfa_mod
from sqfa.montecarlo import estimate
from sqfa.spec_io import dumps, load_file


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_eval_reports_exact_total(capsys):
    code, out, _ = run(capsys, "eval", "--family", "mod-2qcfa", "--p", "3", "--eps", "1/4",
                       "--word", "aa")
    assert code == 0
    assert "27/28" in out and "p_reject = 0.964286" in out


def test_sweep_matches_library(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "mod-2qcfa", "--p", "5", "--eps", "0.5",
                       "--lengths", "1..10")
    assert code == 0
    recs = rows(out)
    assert [int(r["length"]) for r in recs] == list(range(1, 11))
    m = mod_2qcfa(5, 0.5)
    for r in recs:
        a = acceptance(m, r["word"])
        assert float(r["p_accept"]) == a.p_accept
        assert float(r["expected_steps"]) == a.expected_steps


def test_structured_output_is_json(capsys):
    code, out, _ = run(capsys, "eval", "--family", "dfa-mod", "--p", "3", "--word", "aaa",
                       "--format", "structured")
    assert code == 0
    assert json.loads(out)[0]["p_accept"] == 1.0


def test_build_writes_loadable_document(tmp_path, capsys):
    path = tmp_path / "m.json"
    code, _, _ = run(capsys, "build", "--family", "len-2qcfa", "--m", "2", "--eps", "0.25",
                     "--out", str(path))
    assert code == 0
    m = load_file(path)
    assert dumps(m) == path.read_text()
    code, out, _ = run(capsys, "eval", "--spec", str(path), "--word", "ab", "--format", "csv")
    assert code == 0 and float(rows(out)[0]["p_accept"]) == pytest.approx(1.0)


def test_simulate_matches_library(capsys):
    code, out, _ = run(capsys, "simulate", "--family", "mod-2qcfa", "--p", "3", "--eps", "0.25",
                       "--word", "aa", "--runs", "500", "--seed", "9")
    assert code == 0
    r = rows(out)[0]
    e = estimate(mod_2qcfa(3, Fraction(1, 4)), "aa", 500, 9)
    assert float(r["p_accept_hat"]) == e.p_accept_hat
    assert float(r["mean_steps"]) == e.mean_steps


def test_seed_from_environment(capsys, monkeypatch):
    args = ("simulate", "--family", "len-2qcfa", "--m", "1", "--eps", "0.5", "--word", "ab",
            "--runs", "300")
    monkeypatch.setenv("SQFA_SEED", "4")
    _, env_out, _ = run(capsys, *args)
    _, flag_out, _ = run(capsys, *args, "--seed", "4")
    _, other, _ = run(capsys, *args, "--seed", "5")
    assert env_out == flag_out != other


def test_moqfa_seed_reaches_construction(capsys):
    _, out, _ = run(capsys, "build", "--family", "moqfa-mod", "--p", "7", "--eps", "1/4",
                    "--seed", "3")
    assert out == dumps(moqfa_mod(7, Fraction(1, 4), seed=3))


def test_verify_pass_and_fail(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--family", "mod-2qcfa", "--p", "5", "--eps", "0.5",
                       "--lengths", "1..25")
    assert code == 0 and "PASS" in out
    code, out, _ = run(capsys, "verify", "--family", "mod-2qcfa", "--p", "5", "--eps", "0.5",
                       "--lengths", "1..10", "--mode-eps", "0.01")
    assert code == 3
    assert "violated: 'a'" in out


def test_verify_eq_exhaustive_csv(capsys):
    code, out, _ = run(capsys, "verify", "--family", "eq-1qcfa", "--n", "4", "--exhaustive",
                       "--mode", "exact", "--format", "csv")
    assert code == 0
    assert len(rows(out)) == 16 + 96


def test_eq_samples_are_promise_pairs():
    for w in sample_promise_words(6, 10, seed=1):
        x, y = w.split("#")
        d = sum(a != b for a, b in zip(x, y))
        assert d in (0, 3)


def test_report_matches_library(capsys):
    code, out, _ = run(capsys, "report", "--family", "L", "--p", "2..6")
    assert code == 0
    assert out == report_csv("L", complexity_report("L", range(2, 7)))


def test_output_is_byte_stable(capsys):
    args = ("sweep", "--family", "len-2qcfa", "--m", "2", "--eps", "0.5", "--lengths", "1..5")
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


@pytest.mark.parametrize("argv,code", [
    (["frobnicate"], 1),
    (["eval", "--family", "mod-2qcfa", "--p", "3", "--word", "a"], 1),
    (["eval", "--spec", "/nonexistent/m.json", "--word", "a"], 1),
    (["eval", "--family", "mod-2qcfa", "--spec", "x", "--word", "a"], 1),
    (["eval", "--family", "mod-2qcfa", "--p", "3", "--eps", "0.9", "--word", "a"], 1),
    (["sweep", "--family", "dfa-mod", "--p", "3", "--lengths", "5..1"], 1),
    (["eval", "--family", "dfa-mod", "--p", "3"], 1),
])
def test_usage_errors(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_bad_spec_document_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"format_version": 1, "model": "dfa"}')
    code, _, err = run(capsys, "eval", "--spec", str(path), "--word", "a")
    assert code == 2 and "ill-formed" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sqfa", "report", "--family", "EQ", "--n", "4"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].startswith("n,")
