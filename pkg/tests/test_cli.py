import json

import pytest

from app.errors import EXIT_OK, EXIT_OUT_OF_SCOPE, EXIT_USAGE, ValidationError
from app.utils import load_config
from main import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_solve_helstrom(capsys):
    code, out = run(capsys, "solve", "--pi", "0.5", "--overlap", "0.6", "--objective", "error")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["value"] == pytest.approx(0.1, abs=1e-12)
    assert payload["regime"] == "projection"


def test_solve_output_is_deterministic(capsys):
    argv = ("solve", "--pi", "0.3", "--overlap", "0.4", "--objective", "entropy")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_solve_json_round_trips(capsys):
    _, out = run(capsys, "solve", "--pi", "0.4", "--overlap", "0.5", "--objective", "ambiguity")
    assert json.dumps(json.loads(out), indent=2, sort_keys=True) + "\n" == out


def test_solve_very_skewed_exit_code(capsys):
    code, out = run(capsys, "solve", "--pi", "0.1", "--overlap", "0.9", "--objective", "ambiguity")
    assert code == EXIT_OUT_OF_SCOPE
    assert json.loads(out)["reason"] == "very-skewed"


@pytest.mark.parametrize("spec, expected", [
    ("renyi:2", "convex-admissible"),
    ("renyi:0.25", "concave-admissible"),
    ("renyi:0.75", "neither"),
])
def test_classify(capsys, spec, expected):
    code, out = run(capsys, "classify", "--objective", spec)
    assert code == EXIT_OK
    assert json.loads(out)["class"] == expected


@pytest.mark.parametrize("argv", [
    ("solve", "--pi", "0.5", "--overlap", "0.6"),
    ("solve", "--pi", "0.7", "--overlap", "0.6", "--objective", "error"),
    ("solve", "--pi", "abc"),
    ("verify", "--suite", "lemma9"),
    ("classify", "--objective", "gini"),
    ("frobnicate",),
    (),
])
def test_usage_errors(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == EXIT_USAGE
    assert out == ""


def test_verify_csv(capsys):
    code, out = run(capsys, "verify", "--suite", "renyi-pk", "--kmax", "8", "--alpha-points", "21")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0].startswith("k,alpha,value,scale,margin,ok")
    assert len(lines) > 6 * 21


def test_verify_pdf(capsys, tmp_path):
    pdf = tmp_path / "report.pdf"
    code, _ = run(capsys, "verify", "--suite", "classify", "--pdf", str(pdf))
    assert code == EXIT_OK
    assert pdf.read_bytes().startswith(b"%PDF")


def test_sweep_rows(capsys):
    code, out = run(capsys, "sweep", "--pi", "0.1:0.5:9", "--overlap", "0.1:0.9:9", "--objective", "error")
    assert code == EXIT_OK
    assert len(out.splitlines()) == 82


def test_simulate_with_dump(capsys, tmp_path):
    dump = tmp_path / "trials.csv"
    code, out = run(capsys, "simulate", "--pi", "0.5", "--strategy", "concave", "--objective", "ambiguity",
                    "--tau", "1e-3", "--trials", "200", "--dump", str(dump))
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["n_trials"] == 200
    assert payload["theory"] == pytest.approx(0.7788007830714049)
    assert len(dump.read_text().splitlines()) == 201


def test_config_file_and_flag_precedence(capsys, tmp_path):
    config = tmp_path / "run.toml"
    config.write_text('pi = 0.3\noverlap = 0.6\nobjective = "error"\n')
    code, out = run(capsys, "solve", "--config", str(config), "--pi", "0.5")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["prior"] == 0.5
    assert payload["value"] == pytest.approx(0.1, abs=1e-12)


def test_config_rejects_unknown_keys(capsys, tmp_path):
    config = tmp_path / "run.toml"
    config.write_text("volume = 11\n")
    code, _ = run(capsys, "classify", "--config", str(config), "--objective", "error")
    assert code == EXIT_USAGE


def test_config_accepts_bare_words(capsys, tmp_path):
    config = tmp_path / "run.conf"
    config.write_text("# classify settings\nobjective = renyi:2  # convex order\n")
    code, out = run(capsys, "classify", "--config", str(config))
    assert code == EXIT_OK
    assert json.loads(out)["class"] == "convex-admissible"


def test_config_drives_a_sweep(capsys, tmp_path):
    config = tmp_path / "sweep.conf"
    config.write_text("pi = 0.1:0.5:3\noverlap = 0.5\nobjective = error,ambiguity\nformat = csv\n")
    code, out = run(capsys, "sweep", "--config", str(config))
    assert code == EXIT_OK
    assert len(out.splitlines()) == 1 + 3 * 2


def test_config_rejects_malformed_lines(capsys, tmp_path):
    config = tmp_path / "run.conf"
    config.write_text("objective\n")
    code, _ = run(capsys, "classify", "--config", str(config))
    assert code == EXIT_USAGE


def test_missing_command_lists_subcommands(capsys):
    assert main([]) == EXIT_USAGE
    err = capsys.readouterr().err
    for command in ("solve", "classify", "verify", "simulate", "sweep"):
        assert command in err


@pytest.mark.parametrize("text", ["[solve]\npi = 0.3\n", "= 0.3\n", "pi =\n"])
def test_load_config_rejects_unsupported_lines(tmp_path, text):
    config = tmp_path / "run.conf"
    config.write_text(text)
    with pytest.raises(ValidationError):
        load_config(config)


def test_load_config_reads_literals_and_bare_words(tmp_path):
    config = tmp_path / "run.conf"
    config.write_text('angle-resolution = 360\nobjective = "error"\npi = 0.1:0.5:3  # priors\n')
    assert load_config(config) == {"angle_resolution": 360, "objective": "error", "pi": "0.1:0.5:3"}
