"""
Test suite for the command-line front end.
"""

import json
import pytest
from src.cli import (
    EXIT_BAD_INPUT,
    EXIT_BUDGET_EXCEEDED,
    EXIT_OK,
    EXIT_VERIFICATION_FAILED,
    main,
    run,
)
from src.codec import digest, load_json
from src.config import RunConfig
from src.halphen import quadratic_involution

SIGMA = {"map": ["y*z", "x*z", "x*y"]}


@pytest.fixture
def write_input(tmp_path):
    """Write a JSON payload to a temporary file and return its path."""
    def _write(payload, name="input.json"):
        path = tmp_path / name
        path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
        return str(path)
    return _write


def invoke(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_degrees_of_sigma(capsys, write_input):
    """Test the degree report of the standard involution."""
    code, report = invoke(capsys, ["--horizon", "4", "degrees", "--in", write_input(SIGMA)])
    assert code == EXIT_OK
    assert report["command"] == "degrees"
    assert report["result"]["report"]["degrees"] == [1, 2, 1, 2, 1]
    assert report["result"]["report"]["classification"]["label"] == "elliptic"


def test_report_is_deterministic(capsys, write_input):
    """Test two identical runs give byte-identical reports."""
    path = write_input(SIGMA)
    argv = ["--horizon", "4", "degrees", "--in", path]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    second = capsys.readouterr().out
    assert first == second


def test_report_written_to_file(tmp_path, write_input):
    """Test --out writes a report whose digest covers the rest of it."""
    out = tmp_path / "report.json"
    code = main(["--horizon", "4", "--out", str(out), "degrees", "--in", write_input(SIGMA)])
    assert code == EXIT_OK
    report = load_json(str(out))
    body = {k: v for k, v in report.items() if k != "digest"}
    assert report["digest"] == digest(body)
    assert report["config"]["output_path"] == str(out)


def test_oscillate(capsys, write_input):
    """Test synthesis of D = {2: 1} through the CLI."""
    payload = {"support": {"2": 1}, "seed": 17}
    code, report = invoke(capsys, ["oscillate", "--in", write_input(payload)])
    assert code == EXIT_OK
    assert report["result"]["d"] == 4
    assert report["result"]["verified"] is True
    assert report["result"]["degrees"] == [4, 3] + [4] * 7
    assert report["config"]["seed"] == 17


def test_lattice_degree(capsys, write_input):
    """Test the degree query on the quadratic involution."""
    payload = {"isometry": quadratic_involution(1, 2, 3).to_list()}
    code, report = invoke(capsys, ["lattice", "degree", "--in", write_input(payload)])
    assert code == EXIT_OK
    assert report["command"] == "lattice degree"
    assert report["result"] == {"degree": 2, "parabolic": True, "degree_identity": True}


def test_lattice_roots():
    """Test the roots query through run()."""
    report = run("lattice", RunConfig(), {}, "roots")
    assert report["result"]["count"] == 240
    bounded = run("lattice", RunConfig(), {"index": 2, "degree_bound": 0}, "roots")
    assert bounded["result"]["count"] == 74


def test_lattice_horosphere():
    """Test the horosphere query returns a point of square 1."""
    w = [0, 1, -1, 0, 0, 0, 0, 0, 0, 0]
    report = run("lattice", RunConfig(), {"w": w}, "horosphere")
    assert report["result"]["square"] == 1
    assert report["result"]["xi_product"] == 3


def test_family_falpha(capsys, write_input):
    """Test the f_alpha family with its conjugacy check."""
    payload = {"alpha": 2, "q_num": [-1, 1], "q_den": [-3, 1], "m": 1}
    code, report = invoke(capsys, ["--horizon", "4", "family", "falpha", "--in", write_input(payload)])
    assert code == EXIT_OK
    assert report["result"]["conjugacy_verified"] is True
    assert report["result"]["name"] == "falpha"


def test_family_renormalize():
    """Test the renormalization family records the base map's linear part."""
    payload = {"kind": "quadratic", "a": 2, "b": 3, "t": "1/2"}
    report = run("family", RunConfig(horizon=4), payload, "renormalize")
    assert report["result"]["linear_part"] == [[2, 0], [0, 3]]


def test_bad_inputs(capsys, write_input):
    """Test malformed input exits with the bad-input code."""
    cases = [
        {"map": ["x**2 + y", "x", "y"]},
        {"map": ["y*z", "x*z", "x*y"], "extra": 1},
        "{not json",
        "[1, 2]",
    ]
    for i, payload in enumerate(cases):
        code, report = invoke(capsys, ["degrees", "--in", write_input(payload, f"bad{i}.json")])
        assert code == EXIT_BAD_INPUT
        assert report is None


def test_bad_prime(capsys, write_input):
    """Test a composite --modp is rejected."""
    code, _ = invoke(capsys, ["--modp", "4", "degrees", "--in", write_input(SIGMA)])
    assert code == EXIT_BAD_INPUT


def test_budget_exceeded(capsys, write_input):
    """Test the coefficient budget maps to its exit code."""
    henon = {"map": ["y*z", "y**2 - x*z", "z**2"]}
    argv = ["--modp", "0", "--budget", "1", "--horizon", "6", "degrees", "--in", write_input(henon)]
    code, _ = invoke(capsys, argv)
    assert code == EXIT_BUDGET_EXCEEDED


def test_verification_failed(capsys, write_input):
    """Test a failed stabilization still emits its report."""
    payload = dict(SIGMA, trials=1)
    code, report = invoke(capsys, ["stabilize", "--in", write_input(payload)])
    assert code == EXIT_VERIFICATION_FAILED
    assert report["result"]["failed"] is True
    assert report["result"]["found"] is False


def test_oscillate_unverified(capsys, write_input, monkeypatch):
    """Test an oscillation whose prediction disagrees exits with the verification code."""
    monkeypatch.setattr(
        "src.oscillate.predicted_degrees", lambda config, n_max, table=None: [0] * n_max
    )
    payload = {"support": {"2": 1}, "seed": 17}
    code, report = invoke(capsys, ["oscillate", "--in", write_input(payload)])
    assert code == EXIT_VERIFICATION_FAILED
    assert report["result"]["verified"] is False
    assert report["result"]["degrees"] == [4, 3] + [4] * 7


def test_version(capsys):
    """Test --version prints and exits cleanly."""
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "cremona-degrees" in capsys.readouterr().out


if __name__ == '__main__':
    pytest.main([__file__])
