import json
import math
import shutil
import subprocess
import sys

import pytest

from hypack.cli import REPORT_FORMAT, main, parse_lgrid, parse_seeds
from hypack.serialization import dumps


@pytest.fixture(scope="module")
def line_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "bound.json"
    code = main(["bound", "--space", "euclidean", "--dim", "1", "--r", "0.5", "--out", str(out)])
    assert code == 0
    return out


def run(argv, capsys):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


class TestVolume:
    def test_hyperbolic_plane(self, capsys):
        code, out, _ = run(["volume", "--space", "hyperbolic", "--dim", "2", "--radius", "1"], capsys)
        assert code == 0
        value = float(out)
        assert value == pytest.approx(2 * math.pi * (math.cosh(1) - 1), rel=1e-15)
        assert out.startswith("3.41227626528")
        assert len(out.strip().replace(".", "")) == 17

    def test_euclidean(self, capsys):
        code, out, _ = run(["volume", "--space", "euclidean", "--dim", "3", "--radius", "2"], capsys)
        assert code == 0 and float(out) == pytest.approx(32 * math.pi / 3, rel=1e-15)


class TestUsageErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ["verify", "--cert", "does-not-exist.json"],
            ["volume", "--space", "hyperbolic", "--dim", "2", "--radius", "1", "--bogus"],
            ["volume", "--space", "spherical", "--dim", "2", "--radius", "1"],
            ["volume", "--space", "hyperbolic", "--dim", "1", "--radius", "1"],
            ["bound", "--space", "euclidean", "--dim", "1", "--r", "-1"],
            ["bound", "--space", "euclidean", "--dim", "1", "--r", "0.5", "--T", "0.5"],
            ["simulate", "--space", "hyperbolic", "--dim", "2", "--r", "1", "--lambda", "1", "--R", "3", "--seeds", "5..2"],
            ["transform", "--cert", "x.json", "--lgrid", "0:1"],
            [],
        ],
    )
    def test_exit_two(self, argv, capsys):
        code, _, err = run(argv, capsys)
        assert code == 2
        assert err.strip()

    def test_malformed_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run(["verify", "--cert", str(bad)], capsys)
        assert code == 2 and "malformed" in err
        bad.write_text(json.dumps({"format": "cert/1", "space": {"kind": "euclidean", "n": 1}}))
        assert main(["verify", "--cert", str(bad)]) == 2

    def test_bad_thread_variable(self, monkeypatch, capsys):
        monkeypatch.setenv("HYPACK_THREADS", "many")
        code, _, err = run(["volume", "--space", "euclidean", "--dim", "2", "--radius", "1"], capsys)
        assert code == 2 and "HYPACK_THREADS" in err

    def test_grid_parsers(self):
        assert parse_lgrid("0:5:11") == (0.0, 5.0, 11)
        assert list(parse_seeds("3..5")) == [3, 4, 5]


class TestRoundTrip:
    def test_bound_report(self, line_report):
        report = json.loads(line_report.read_text())
        assert report["format"] == REPORT_FORMAT
        assert report["command"] == "bound"
        assert report["config"]["r"] == 0.5
        assert abs(report["bound"]["value"] - 1.0) < 1e-3
        assert report["certificate"]["format"] == "cert/1"

    def test_verify_accepts_bound_output(self, line_report, tmp_path, capsys):
        out = tmp_path / "v.json"
        code, _, _ = run(["verify", "--cert", str(line_report), "--out", str(out)], capsys)
        assert code == 0
        v = json.loads(out.read_text())
        assert v["verification"]["admissible"] is True
        bound = json.loads(line_report.read_text())["bound"]["value"]
        assert v["bound"]["value"] == bound

    def test_verify_plain_certificate(self, line_report, tmp_path, capsys):
        cert = tmp_path / "c.json"
        cert.write_text(dumps(json.loads(line_report.read_text())["certificate"]))
        code, out, _ = run(["verify", "--cert", str(cert)], capsys)
        assert code == 0 and json.loads(out)["verification"]["admissible"]

    def test_non_admissible_exit_one(self, tmp_path, capsys):
        cert = {
            "format": "cert/1",
            "space": {"kind": "euclidean", "n": 1},
            "r": 0.5,
            "profile": {"t": [0.0, 1.0, 2.0], "f": [1.0, 0.5, 0.0]},
        }
        path = tmp_path / "gauss.json"
        path.write_text(json.dumps(cert))
        code, out, _ = run(["verify", "--cert", str(path)], capsys)
        assert code == 1
        assert json.loads(out)["verification"]["admissible"] is False

    def test_transform_csv(self, line_report, capsys):
        code, out, _ = run(["--format", "csv", "transform", "--cert", str(line_report), "--lgrid", "0:10:11"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "series,parameter,value"
        assert len(lines) == 1 + 11 + 1
        assert lines[-1].startswith("trivial,0,")

    def test_transform_json(self, line_report, capsys):
        code, out, _ = run(["transform", "--cert", str(line_report), "--lgrid", "0:4:5"], capsys)
        table = json.loads(out)["table"]
        assert code == 0 and len(table["principal_values"]) == 5


class TestSimulate:
    ARGS = ["simulate", "--space", "euclidean", "--dim", "1", "--r", "0.5", "--lambda", "3", "--R", "12", "--seeds", "1..4"]

    def test_reproducible(self, tmp_path, capsys, monkeypatch):
        a = tmp_path / "a.json"
        assert main(self.ARGS + ["--out", str(a)]) == 0
        first = a.read_bytes()
        monkeypatch.setenv("HYPACK_THREADS", "3")
        assert main(self.ARGS + ["--out", str(a)]) == 0
        assert a.read_bytes() == first
        summary = json.loads(a.read_text())["summary"]
        assert summary["intensity_theory"] == pytest.approx((1 - math.exp(-6)) / 2.0, rel=1e-15)

    def test_with_certificate(self, line_report, capsys):
        code, out, _ = run(self.ARGS + ["--cert", str(line_report)], capsys)
        assert code == 0
        summary = json.loads(out)["summary"]
        assert summary["all_passed_diagonal"] is True
        assert summary["certificate_bound"] == pytest.approx(1.0, abs=1e-3)

    def test_space_mismatch(self, line_report, capsys):
        argv = ["simulate", "--space", "hyperbolic", "--dim", "2", "--r", "1", "--lambda", "1", "--R", "5",
                "--seeds", "0..1", "--cert", str(line_report)]
        assert run(argv, capsys)[0] == 2

    def test_histogram_csv(self, capsys):
        code, out, _ = run(["--format", "csv"] + self.ARGS, capsys)
        assert code == 0
        assert out.splitlines()[0] == "bin_left,bin_right,ordered_pair_count"


def test_console_script(tmp_path):
    exe = shutil.which("hypack")
    cmd = [exe] if exe else [sys.executable, "-m", "hypack.cli"]
    proc = subprocess.run(
        cmd + ["volume", "--space", "hyperbolic", "--dim", "3", "--radius", "1"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert float(proc.stdout) == pytest.approx(math.pi * (math.sinh(2) - 2), rel=1e-15)
    bad = subprocess.run(cmd + ["verify", "--cert", str(tmp_path / "none.json")], capture_output=True, text=True)
    assert bad.returncode == 2
    assert len(bad.stderr.strip().splitlines()) == 1
