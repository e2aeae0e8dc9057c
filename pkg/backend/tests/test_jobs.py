import csv
import json

import pytest

import cli
from models.errors import IllConditioned
from models.schemas import CurveInput, JobSpec
from services import jobs
from services.curve import make_curve
from services.verification import flow_fixture
from utils.serialization import pair


def point_row(p):
    return [*pair(p.x), *pair(p.y)]


@pytest.fixture
def elliptic_input(tmp_path):
    curve = make_curve([0, -1, 0, 1])
    data = {
        "P": [[0, 0], [-1, 0], [0, 0], [1, 0]],
        "D": [point_row(curve.point(2.0, 1))],
        "D0": [point_row(curve.point(-2.0 + 1.0j, 1))],
        "pp": [[0.5, 0.0]],
        "samples": [point_row(curve.point(1.5 + 1.5j, -1))],
        "differentials": [
            {"a": [[1, 0]], "b": [[0, 0]], "poles": [[3, 0, 2]]},
            {"a": [[0, 0]], "b": [[1, 0]], "poles": [[-1, 0, 1], [0, 0, 1], [1, 0, 1]]},
        ],
        "theta": {"a": [[1, 0]], "b": [[0, 0]], "poles": [[5, 0, 2]]},
    }
    path = tmp_path / "elliptic.json"
    path.write_text(json.dumps(data))
    return path


@pytest.fixture
def quintic_input(tmp_path):
    curve, d, d0, pp = flow_fixture()
    data = {
        "P": [[-1, 0], [0, 0], [0, 0], [0, 0], [0, 0], [1, 0]],
        "D": [point_row(p) for p in d.support],
        "D0": [point_row(q) for q in d0.support],
        "pp": [pair(c) for c in pp.coeffs],
        "samples": [point_row(curve.point(1.0 + 1.5j, 1))],
    }
    path = tmp_path / "quintic.json"
    path.write_text(json.dumps(data))
    return path


def test_basis_output_is_reproducible(elliptic_input, tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["basis", "--input", str(elliptic_input), "--output", str(first)]) == 0
    assert cli.main(["basis", "--input", str(elliptic_input), "--output", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    report = json.loads(first.read_text())
    assert report["curve"]["genus"] == 1
    assert report["gram"][0][1] == pytest.approx([1.0, 0.0], abs=1e-8)
    assert report["gram"][1][0] == pytest.approx([-1.0, 0.0], abs=1e-8)
    assert report["theta"][0]["kind"] == "first_kind"


def test_pairing_command(elliptic_input, tmp_path):
    out = tmp_path / "pairing.json"
    assert cli.main(["pairing", "--input", str(elliptic_input), "--output", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["kinds"] == ["second_kind", "first_kind"]
    assert report["omega"][0][0] == [0.0, 0.0]


def test_reduce_command(elliptic_input, tmp_path):
    out = tmp_path / "reduce.json"
    assert cli.main(["reduce", "--input", str(elliptic_input), "--output", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["reduced"]["kind"] == "second_kind"
    assert report["f"]["poles"]


def test_special_divisor_exits_with_input_error(tmp_path, capsys):
    curve = make_curve([-1, 0, 0, 0, 0, 1])
    p = curve.point(2.0, 1)
    path = tmp_path / "special.json"
    path.write_text(json.dumps({
        "P": [[-1, 0], [0, 0], [0, 0], [0, 0], [0, 0], [1, 0]],
        "D": [point_row(p), point_row(curve.conjugate(p))],
    }))
    assert cli.main(["basis", "--input", str(path)]) == jobs.EXIT_INPUT
    assert "SpecialDivisor:" in capsys.readouterr().err


def test_bad_curve_exits_with_input_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"P": [[0, 0], [1, 0], [-2, 0], [1, 0]], "D": []}))
    assert cli.main(["basis", "--input", str(path)]) == jobs.EXIT_INPUT
    assert "NotSquarefree" in capsys.readouterr().err


def test_invalid_schema_exits_with_input_error(tmp_path):
    path = tmp_path / "short.json"
    path.write_text(json.dumps({"P": [[1, 0], [1, 0]]}))
    assert cli.main(["basis", "--input", str(path)]) == jobs.EXIT_INPUT


def test_tolerance_out_of_range(elliptic_input, capsys):
    assert cli.main(["basis", "--input", str(elliptic_input), "--tol", "0.5"]) == jobs.EXIT_INPUT
    assert "ValidationError:" in capsys.readouterr().err


def test_missing_input():
    assert cli.main(["basis"]) == jobs.EXIT_INPUT


def test_numerical_failure_exit_code(elliptic_input, monkeypatch):
    def failing(curve, d):
        raise IllConditioned("coefficient map is ill-conditioned")

    monkeypatch.setattr(jobs, "symplectic_basis", failing)
    code, report, files = jobs.execute(JobSpec(command="basis", input=str(elliptic_input)))
    assert code == jobs.EXIT_NUMERICAL
    assert report["error"] == "IllConditioned"
    assert files == []


def test_tolerance_override_is_restored(elliptic_input):
    before = jobs.settings.residue_tol
    code, _, _ = jobs.execute(JobSpec(command="basis", input=str(elliptic_input), tol=1e-7))
    assert code == jobs.EXIT_OK
    assert jobs.settings.residue_tol == before


def test_zero_time_flow_csv(elliptic_input, tmp_path):
    out = tmp_path / "trajectory.csv"
    code = cli.main(["flow", "--input", str(elliptic_input), "--output", str(out),
                     "--format", "csv", "--t-end", "0", "--steps", "5"])
    assert code == 0
    with open(out, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 1
    assert float(rows[0]["t"]) == 0.0
    assert float(rows[0]["psi0_re"]) == 1.0
    assert float(rows[0]["psi0_im"]) == 0.0
    manifest = json.loads((tmp_path / "trajectory.csv.manifest.json").read_text())
    assert manifest["scheme"] == "rk4"
    assert manifest["steps"] == 0


def test_flow_json(quintic_input, tmp_path):
    out = tmp_path / "flow.json"
    assert cli.main(["flow", "--input", str(quintic_input), "--output", str(out), "--steps", "20", "--t-end", "0.2"]) == 0
    report = json.loads(out.read_text())
    assert len(report["rows"]) == 21
    assert report["columns"][:5] == ["t", "x1_re", "x1_im", "y1_re", "y1_im"]
    assert report["manifest"]["normalization"] == "f(infinity) = 0"


def test_ba_command(quintic_input, tmp_path):
    out = tmp_path / "ba.json"
    assert cli.main(["ba", "--input", str(quintic_input), "--output", str(out), "--steps", "20", "--t-end", "0.0"]) == 0
    report = json.loads(out.read_text())
    assert report["psi"] == [[1.0, 0.0]]


def test_parse_roundtrip_of_points(elliptic_input):
    data = jobs.load_input(elliptic_input)
    assert isinstance(data, CurveInput)
    curve = jobs.parse_curve(data)
    d = jobs.parse_divisor(curve, data.D)
    assert jobs.divisor_json(d) == data.D


def test_basis_report_reparses_into_pairing(elliptic_input, tmp_path):
    basis_out, pairing_in, pairing_out = tmp_path / "basis.json", tmp_path / "in.json", tmp_path / "pairing.json"
    assert cli.main(["basis", "--input", str(elliptic_input), "--output", str(basis_out)]) == 0
    basis = json.loads(basis_out.read_text())
    data = json.loads(elliptic_input.read_text())
    data["differentials"] = basis["theta"] + basis["tau"]
    pairing_in.write_text(json.dumps(data))
    assert cli.main(["pairing", "--input", str(pairing_in), "--output", str(pairing_out)]) == 0
    omega = json.loads(pairing_out.read_text())["omega"]
    for row, expected in zip(omega, basis["gram"]):
        for got, want in zip(row, expected):
            assert got == pytest.approx(want, abs=1e-8)


def test_verify_with_fixture(elliptic_input, tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(jobs.settings, "verify_instances", 1)
    out = tmp_path / "verify.json"
    assert cli.main(["verify", "--input", str(elliptic_input), "--output", str(out), "--seed", "0"]) == 0
    report = json.loads(out.read_text())
    assert report["passed"]
    assert report["rng"] == "numpy PCG64"
    assert report["properties"][-1]["name"] == "fixture_gram"
    assert "PASS fixture_gram" in capsys.readouterr().out


def test_basis_report_reruns_to_identical_output(elliptic_input, tmp_path):
    first, rerun_in, second = tmp_path / "basis.json", tmp_path / "rerun.json", tmp_path / "basis2.json"
    assert cli.main(["basis", "--input", str(elliptic_input), "--output", str(first)]) == 0
    report = json.loads(first.read_text())
    rerun_in.write_text(json.dumps({"P": report["curve"]["P"], "D": report["D"]}))
    assert cli.main(["basis", "--input", str(rerun_in), "--output", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_flow_manifest_reruns_to_identical_output(quintic_input, tmp_path):
    first, rerun_in, second = tmp_path / "flow.json", tmp_path / "rerun.json", tmp_path / "flow2.json"
    args = ["--steps", "20", "--t-end", "0.2"]
    assert cli.main(["flow", "--input", str(quintic_input), "--output", str(first), *args]) == 0
    manifest = json.loads(first.read_text())["manifest"]
    rerun_in.write_text(json.dumps({
        "P": manifest["curve"]["P"],
        **{key: manifest[key] for key in ("D", "D0", "pp", "samples")},
    }))
    assert cli.main(["flow", "--input", str(rerun_in), "--output", str(second), *args]) == 0
    assert first.read_bytes() == second.read_bytes()
