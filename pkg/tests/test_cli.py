import csv
import io
import json
import subprocess
import sys

import pytest

from optransfer import cli
from optransfer.asymptotics import classify, normalized_iteration
from optransfer.coeff_model import chebyshev, from_arrays
from optransfer.pointmass import PointMassSpec, perturb, verify_limits

ATOMS = '[{"x0": 1.25, "gamma": 0.3}]'


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def cheb_file(tmp_path):
    path = tmp_path / "chebyshev.json"
    path.write_text('{"family": "chebyshev"}')
    return str(path)


class TestCommands:
    def test_support(self, cheb_file):
        code, out, _ = run("support", "--seq", cheb_file)
        assert code == 0
        assert json.loads(out) == {"support": [-1.0, 1.0]}

    def test_classify_growth(self, cheb_file):
        code, out, _ = run("classify", "--seq", cheb_file, "--x0", "1.25")
        d = json.loads(out)
        assert code == 0
        assert d["verdict"] == "RegularGrowth"
        assert d["growth_exponent"] == pytest.approx(0.6931471805599453, abs=1e-15)
        assert d["lambda_plus"] == 2.0

    def test_classify_inside_support(self, cheb_file):
        code, out, err = run("classify", "--seq", cheb_file, "--x0", "0.5")
        assert code == 3 and out == ""
        e = json.loads(err)
        assert e["code"] == "NotHyperbolic"
        assert set(e) == {"code", "message", "context"}

    def test_eval_csv(self, tmp_path):
        path = tmp_path / "eval.csv"
        code, _, _ = run("eval", "--seq", "chebyshev", "--x0", "1.25", "--n", "20",
                         "--out", str(path))
        rows = list(csv.DictReader(open(path)))
        assert code == 0 and len(rows) == 21
        assert list(rows[0]) == ["n", "sign_pn", "ln_abs_pn", "ln_kernel"]

    def test_transfer_csv(self, tmp_path):
        path = tmp_path / "t.csv"
        code, _, _ = run("transfer", "--seq", "chebyshev", "--x0", "1.25", "--n", "100",
                         "--out", str(path))
        rows = list(csv.DictReader(open(path)))
        assert code == 0 and len(rows) == 100
        assert rows[0]["lambda_plus"] == ""  # step 1 is not hyperbolic at 1.25
        assert float(rows[1]["lambda_plus"]) == 2.0
        assert max(abs(float(r["det_residual"])) for r in rows) < 1e-9

    def test_mass(self):
        seq = json.dumps(perturb(chebyshev(), PointMassSpec(1.25, 0.3), 300).seq_tilde.to_spec())
        code, out, _ = run("mass", "--seq", seq, "--x0", "1.25")
        assert code == 0 and abs(json.loads(out)["mass"] - 0.3) < 1e-6

    def test_oracle(self, tmp_path):
        path = tmp_path / "o.csv"
        code, _, _ = run("oracle", "--family", "chebyshev", "--m", "128", "--atoms", ATOMS,
                         "--n", "30", "--out", str(path))
        rows = list(csv.DictReader(open(path)))
        res = perturb(chebyshev(), PointMassSpec(1.25, 0.3), 30)
        assert code == 0
        assert max(abs(float(r["a"]) - a) for r, a in zip(rows, res.a_tilde)) < 1e-8

    def test_oracle_budget(self):
        code, _, err = run("oracle", "--family", "chebyshev", "--m", "16", "--atoms", "[]",
                           "--n", "30")
        assert code == 3 and json.loads(err)["code"] == "ExactnessBudgetExceeded"

    def test_verify(self):
        code, out, _ = run("verify", "--seq", "chebyshev", "--atoms", ATOMS)
        d = json.loads(out)
        assert code == 0 and d["ok"]
        assert d["steps"][0]["t_residual"] < 1e-6

    def test_perturb_json_stdout(self):
        code, out, _ = run("perturb", "--seq", "chebyshev", "--atoms", ATOMS, "--n", "5")
        assert code == 0 and len(json.loads(out)["a_tilde"]) == 5

    def test_duplicate_atoms(self):
        atoms = '[{"x0": 1.25, "gamma": 0.3}, {"x0": 1.25, "gamma": 0.1}]'
        code, _, err = run("perturb", "--seq", "chebyshev", "--atoms", atoms, "--n", "50")
        assert code == 3 and json.loads(err)["code"] == "DuplicatePoint"

    def test_atom_inside_support(self):
        code, _, err = run("perturb", "--seq", "chebyshev", "--atoms",
                           '[{"x0": 0.2, "gamma": 0.3}]', "--n", "50")
        assert code == 3 and json.loads(err)["code"] == "OutsideSupportViolation"


class TestValidation:
    @pytest.mark.parametrize("command", cli.COMMANDS)
    def test_missing_fields_exit_2(self, command):
        code, out, err = run(command)
        assert code == 2 and out == ""
        assert json.loads(err)["code"] == "ValidationError"

    @pytest.mark.parametrize("argv", [
        ["nonsense"],
        ["eval", "--seq", "chebyshev", "--x0", "1.25", "--n", "0"],
        ["eval", "--seq", "{not json", "--x0", "1.25", "--n", "3"],
        ["eval", "--seq", "/no/such/file.json", "--x0", "1.25", "--n", "3"],
        ["classify", "--seq", "chebyshev", "--x0", "abc"],
        ["classify", "--seq", "chebyshev", "--x0", "1.25", "--E", "soon"],
        ["perturb", "--seq", "chebyshev", "--atoms", '[{"x0": 1.5}]', "--n", "3"],
        ["perturb", "--seq", "chebyshev", "--atoms", '{"x0": 1.5, "gamma": 1}', "--n", "3"],
    ])
    def test_rejected(self, argv):
        code, _, err = run(*argv)
        assert code == 2
        assert json.loads(err)["code"] == "ValidationError"

    def test_run_validates_config(self):
        err = io.StringIO()
        assert cli.run(cli.JobConfig(command="eval"), stderr=err) == 2

    def test_bad_sequence_is_domain_error(self):
        code, _, err = run("support", "--seq", '{"family": "custom", "a": [-1], "limit": '
                           '{"a": 0.5, "b": 0}}')
        assert code == 3 and json.loads(err)["code"] == "NonpositiveCoefficient"


class TestFiles:
    def test_out_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path))
        code, _, _ = run("eval", "--seq", "chebyshev", "--x0", "1.25", "--n", "3",
                         "--out", "sub/e.csv")
        assert code == 0 and (tmp_path / "sub" / "e.csv").exists()

    def test_json_to_file(self, tmp_path):
        path = tmp_path / "s.json"
        code, out, _ = run("support", "--seq", "chebyshev", "--out", str(path),
                           "--format", "json")
        assert code == 0 and out == ""
        assert json.loads(path.read_text()) == {"support": [-1.0, 1.0]}

    def test_classify_trace(self, tmp_path):
        path = tmp_path / "trace.csv"
        code, _, _ = run("classify", "--seq", "chebyshev", "--x0", "1.25", "--trace", str(path))
        assert code == 0
        assert next(csv.reader(open(path))) == ["n", "lnL", "u", "w", "r"]

    def test_perturb_round_trip(self, tmp_path):
        path = tmp_path / "coeffs.csv"
        code, _, _ = run("perturb", "--seq", "chebyshev", "--atoms", ATOMS, "--n", "500",
                         "--out", str(path))
        assert code == 0
        rows = list(csv.DictReader(open(path)))
        seq = from_arrays([float(r["a_tilde"]) for r in rows],
                          [float(r["b_tilde"]) for r in rows], (0.5, 0.0), 1.3)
        inproc = perturb(chebyshev(), PointMassSpec(1.25, 0.3), 500).seq_tilde
        assert [seq.a(n) for n in range(1, 501)] == [inproc.a(n) for n in range(1, 501)]
        c1 = classify(normalized_iteration(seq, 1.25, N=2000)).to_dict()
        c2 = classify(normalized_iteration(inproc, 1.25, N=2000)).to_dict()
        assert c1 == c2
        r1 = verify_limits(seq, [PointMassSpec(-1.5, 0.1)], N=400).to_dict()
        r2 = verify_limits(inproc, [PointMassSpec(-1.5, 0.1)], N=400).to_dict()
        assert r1 == r2

    def test_spec_out_round_trip(self, tmp_path):
        spec = tmp_path / "tilde.json"
        run("perturb", "--seq", "chebyshev", "--atoms", ATOMS, "--n", "300",
            "--spec-out", str(spec))
        code, out, _ = run("classify", "--seq", str(spec), "--x0", "1.25")
        assert code == 0 and json.loads(out)["verdict"] == "PointMassDecay"


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "optransfer.cli", "classify", "--seq",
                           "chebyshev", "--x0", "0.5"], capture_output=True, text=True)
    assert proc.returncode == 3
    assert json.loads(proc.stderr)["code"] == "NotHyperbolic"
