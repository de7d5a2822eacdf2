import csv
import io
import json
import math
import subprocess
import sys

import pytest

from melcert import __version__
from melcert.cli import main, parse_complex
from melcert.elliptic import complete_elliptic_K


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_complex():
    cases = {"0": 0j, "1.5": 1.5 + 0j, "2i": 2j, "-i": -1j, "i": 1j, "0.3+0.4i": 0.3 + 0.4j,
             "1e-3-2.5e1j": 1e-3 - 25j, "-.5-i": -0.5 - 1j, " 1 + 2i ": 1 + 2j}
    for text, want in cases.items():
        assert parse_complex(text) == want
    for bad in ("", "1+", "abc", "1+2k", "1..2", "--1"):
        with pytest.raises(ValueError, match="position"):
            parse_complex(bad)


def test_elliptic_eval_text(capsys):
    code, out, _ = run(["elliptic", "eval", "--k", "0.7071067811865476", "--u", "0"], capsys)
    assert code == 0
    lines = dict(line.split(" = ") for line in out.splitlines() if " = " in line)
    assert complex(lines["sn"].replace("i", "j")) == 0
    assert complex(lines["cn"].replace("i", "j")) == 1
    assert complex(lines["dn"].replace("i", "j")) == 1
    assert lines["K"].startswith("1.854")
    assert __version__ in out


def test_elliptic_eval_json(capsys):
    code, out, _ = run(["elliptic", "eval", "--k", "0.5", "--u", "0.3+0.4i", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["K"] == pytest.approx(complete_elliptic_K(0.5), rel=1e-15)
    assert len(doc["sn"]) == 2
    assert doc["config"]["u"] == "0.3+0.4i"


@pytest.mark.parametrize("argv", [
    ["elliptic", "eval", "--k", "0.5", "--u", "1+2x"],
    ["elliptic", "eval", "--k", "1.5", "--u", "0"],
])
def test_elliptic_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert "error" in err


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        main(["elliptic", "eval", "--k", "0.5", "--u", "0", "--bogus"])
    assert info.value.code == 2


def test_certify_family(tmp_path, capsys):
    out = tmp_path / "cert.json"
    code, _, err = run(["certify", "--system", "duffing:a=1", "--l", "1", "--n", "1", "--param", "0.5",
                        "--delta", "0.1", "--beta", "1.0", "--phi-grid", "16", "--out", str(out)], capsys)
    assert code == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert doc["verdict"] == "certified_nonintegrable_on_grid"
    assert doc["tool_version"] == __version__
    assert doc["config"]["cli"]["param"] == 0.5
    assert "tolerances" in doc
    assert "certified" in err


def test_certify_unit_frequency_hardening_is_unattainable(capsys):
    # no a = 1 orbit has period 2 pi; the solver says so instead of certifying
    code, _, err = run(["certify", "--system", "duffing:a=1", "--l", "1", "--n", "1", "--nu", "1.0",
                        "--delta", "0.1", "--beta", "1.0"], capsys)
    assert code == 2
    assert "no resonance" in err


def test_certify_zero_forcing_inconclusive(capsys):
    code, out, _ = run(["certify", "--system", "duffing:a=0", "--nu", "1", "--beta", "0",
                        "--phi-grid", "8"], capsys)
    assert code == 3
    assert json.loads(out)["verdict"] == "inconclusive"


def test_certify_pendulum(capsys):
    code, out, _ = run(["certify", "--system", "pendulum", "--kappa", "0.5", "--I", "1.0"], capsys)
    assert code == 0
    doc = json.loads(out)
    re, im = doc["I_hat_values"][0][0]
    assert math.hypot(re, im) == pytest.approx(4 * math.pi, rel=1e-9)
    assert any("printed" in n for n in doc["notes"])


def test_certify_coupled(capsys):
    code, out, _ = run(["certify", "--system", "coupled", "--ell", "3", "--I", "1", "2", "2"], capsys)
    assert code == 0
    assert json.loads(out)["hypothesis_A1"]["integers"] == [1, 2, 2]


def test_certify_system_file(tmp_path, capsys):
    spec = {
        "name": "pendulum-json",
        "dim_action": 1,
        "dim_angle": 1,
        "omega": [[{"coefficient": 1.0, "powers": [1]}]],
        "h": [[{"coefficient": 1.0, "harmonics": [1], "kind": "sin_frac", "kappa": 0.5},
               {"coefficient": 1.0, "kind": "const"}]],
    }
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(spec), encoding="utf-8")
    code, out, _ = run(["certify", "--system-file", str(path), "--I", "2.0"], capsys)
    assert code == 0
    re, im = json.loads(out)["I_hat_values"][0][0]
    assert math.hypot(re, im) == pytest.approx(2 * math.pi, rel=1e-9)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert run(["certify", "--system-file", str(bad), "--I", "2.0"], capsys)[0] == 2


@pytest.mark.parametrize("argv", [
    ["certify", "--system", "duffing:a=0"],
    ["certify", "--system", "duffing:a=0", "--nu", "1", "--param", "1"],
    ["certify", "--system", "lorenz", "--nu", "1"],
    ["certify", "--system", "pendulum"],
    ["certify"],
])
def test_certify_usage_errors(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_certify_radius_reaching_neighbour_is_usage_error(capsys):
    code, _, err = run(["certify", "--system", "duffing:a=0", "--nu", "1", "--radius", "100",
                        "--phi-grid", "4"], capsys)
    assert code == 2
    assert "singularity" in err


def test_certify_numerical_failure(capsys):
    # samples inside the pole guard cannot be evaluated
    code, _, err = run(["certify", "--system", "duffing:a=0", "--nu", "1", "--radius", "1e-12",
                        "--phi-grid", "4"], capsys)
    assert code == 4
    assert "numerical failure" in err


def test_certify_deterministic_across_threads(tmp_path, capsys, monkeypatch):
    docs = []
    p = tmp_path / "c.json"
    for threads in ("1", "3"):
        monkeypatch.setenv("MELCERT_THREADS", threads)
        assert run(["certify", "--system", "duffing:a=-1:outer", "--param", "0.85", "--phi-grid", "12",
                    "--threads", "2", "--out", str(p)], capsys)[0] == 0
        docs.append(json.loads(p.read_text(encoding="utf-8")))
    a, b = docs
    assert a["config"]["threads"] == 1 and b["config"]["threads"] == 3
    a["config"].pop("threads"), b["config"].pop("threads")
    assert json.dumps(a) == json.dumps(b)
    monkeypatch.setenv("MELCERT_THREADS", "many")
    assert run(["certify", "--system", "duffing:a=0", "--nu", "1"], capsys)[0] == 2


def test_identical_runs_are_byte_identical(tmp_path, capsys):
    texts = []
    p = tmp_path / "r.json"
    for _ in range(2):
        run(["certify", "--system", "duffing:a=-1:inner-", "--param", "0.6", "--phi-grid", "8",
             "--threads", "1", "--out", str(p)], capsys)
        texts.append(p.read_bytes())
    assert texts[0] == texts[1]


def test_melnikov_sweep(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(["melnikov", "sweep", "--system", "duffing:a=0", "--l", "1", "--n", "1", "--nu", "1",
                      "--delta", "0", "--beta", "1", "--grid", "32", "--out", str(out)], capsys)
    assert code == 0
    text = out.read_text(encoding="utf-8")
    body = [line for line in text.splitlines() if not line.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    assert list(rows[0]) == ["phi", "M_quad", "M_closed", "abs_err"]
    assert len(rows) == 32
    assert max(float(r["abs_err"]) for r in rows) < 1e-6
    assert __version__ in text


def test_resonance_solve(capsys):
    code, out, _ = run(["resonance", "solve", "--system", "duffing:a=0", "--l", "1", "--n", "1", "--nu", "1"],
                       capsys)
    assert code == 0
    vals = dict(line.split(" = ") for line in out.splitlines() if " = " in line)
    alpha = float(vals["param_star"])
    assert alpha == pytest.approx(2 * complete_elliptic_K(1 / math.sqrt(2)) / math.pi, rel=1e-12)
    assert f"{alpha:.4f}" == "1.1803"
    assert abs(float(vals["residual"])) < 1e-10


def test_resonance_solve_errors(capsys):
    assert run(["resonance", "solve", "--system", "duffing:a=0", "--l", "2", "--n", "4", "--nu", "1"],
               capsys)[0] == 2
    assert run(["resonance", "solve", "--system", "pendulum", "--nu", "1"], capsys)[0] == 2


def test_orbits_find(tmp_path, capsys):
    report = tmp_path / "orbits.json"
    traj = tmp_path / "traj.csv"
    code, _, _ = run(["orbits", "find", "--system", "duffing:a=0", "--nu", "1", "--delta", "0", "--beta", "1",
                      "--eps", "0.01", "--phi-seed", "0", "3.141592653589793", "--out", str(report),
                      "--trajectory", str(traj), "--threads", "2"], capsys)
    assert code == 0
    doc = json.loads(report.read_text(encoding="utf-8"))
    assert len(doc["orbits"]) == 2
    assert all(o["residual"] < 1e-10 for o in doc["orbits"])
    assert {o["stability"] for o in doc["orbits"]} == {"elliptic", "hyperbolic_saddle"}
    rows = list(csv.reader(io.StringIO(traj.read_text(encoding="utf-8"))))
    assert rows[0] == ["orbit", "t", "x1", "x2"]
    assert {r[0] for r in rows[1:]} == {"0", "1"}


def test_orbits_find_without_zero(capsys):
    code, out, err = run(["orbits", "find", "--system", "duffing:a=0", "--nu", "1", "--delta", "5",
                          "--beta", "0.1"], capsys)
    assert code == 3
    assert json.loads(out)["orbits"] == []
    assert "no simple zero" in err


def test_verify_subset(capsys):
    code, out, _ = run(["verify", "--criteria", "1", "2"], capsys)
    rows = [line for line in out.splitlines() if line.startswith("[")]
    assert len(rows) == 2
    assert code == (0 if all(r.startswith("[PASS]") for r in rows) else 1)
    assert code == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "melcert", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert __version__ in proc.stdout
