import json
import math

import numpy as np
import pytest

from plaqsim.cli import cli
from plaqsim.mitigation import ResponseMatrix

CONFIG = {
    "model": "z2",
    "geometry": "square1",
    "times": [0.0, 0.4, 0.8],
    "shots": 512,
    "repetitions": 2,
    "scale_factors": [1, 2, 3],
    "noise": {"p2": 0.01, "eps01": 0.02, "eps10": 0.02},
    "master_seed": 11,
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(CONFIG))
    return path


class TestRun:
    def test_success_writes_artifacts(self, tmp_path, config_file):
        out = tmp_path / "out"
        assert cli(["run", "--config", str(config_file), "--out", str(out)]) == 0
        assert (out / "results.csv").is_file()
        svgs = list(out.glob("*.svg"))
        assert len(svgs) == 1

    def test_seed_override_changes_output(self, tmp_path, config_file):
        o1, o2, o3 = (tmp_path / n for n in ("a", "b", "c"))
        for out, seed in ((o1, "1"), (o2, "2"), (o3, "1")):
            assert cli([
                "run", "--config", str(config_file), "--out", str(out),
                "--seed", seed,
            ]) == 0
        a, b, c = ((p / "results.csv").read_bytes() for p in (o1, o2, o3))
        assert a != b
        assert a == c

    def test_missing_config_is_config_error(self, tmp_path):
        code = cli(["run", "--config", str(tmp_path / "nope.json"),
                    "--out", str(tmp_path)])
        assert code == 1

    def test_invalid_json_is_config_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert cli(["run", "--config", str(path), "--out", str(tmp_path)]) == 1

    def test_unknown_key_is_config_error(self, tmp_path):
        path = tmp_path / "extra.json"
        path.write_text(json.dumps({**CONFIG, "bogus": 1}))
        assert cli(["run", "--config", str(path), "--out", str(tmp_path)]) == 1

    def test_noncommuting_is_runtime_error(self, tmp_path):
        path = tmp_path / "nc.json"
        path.write_text(
            json.dumps({**CONFIG, "model": "u1", "geometry": "two_square_pbc"})
        )
        assert cli(["run", "--config", str(path), "--out", str(tmp_path)]) == 2


class TestExact:
    def test_closed_form_curve(self, tmp_path, config_file):
        out = tmp_path / "out"
        assert cli(["exact", "--config", str(config_file), "--out", str(out),
                    "--points", "80"]) == 0
        lines = (out / "exact.csv").read_text().splitlines()
        assert lines[0] == "time,observable,value"
        for line in lines[1:]:
            t, name, v = line.split(",")
            assert name == "loschmidt:1111"
            assert abs(float(v) - math.cos(float(t)) ** 2) < 1e-9


class TestCalibrate:
    def test_writes_loadable_matrix(self, tmp_path):
        noise = tmp_path / "noise.json"
        noise.write_text(json.dumps({"p2": 0.0, "eps01": 0.05, "eps10": 0.05}))
        out = tmp_path / "rm.json"
        assert cli(["calibrate", "--qubits", "2", "--noise", str(noise),
                    "--out", str(out), "--shots", "20000"]) == 0
        rm = ResponseMatrix.from_json(out.read_text())
        assert rm.n_qubits == 2
        assert np.abs(rm.matrix.sum(axis=0) - 1).max() < 1e-9

    def test_bad_noise_file_is_config_error(self, tmp_path):
        noise = tmp_path / "noise.json"
        noise.write_text(json.dumps({"p2": 0.0, "oops": 1}))
        assert cli(["calibrate", "--qubits", "2", "--noise", str(noise),
                    "--out", str(tmp_path / "rm.json")]) == 1


class TestInspect:
    def test_reports_volume(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({**CONFIG, "topology": "t-5"}))
        assert cli(["inspect", "--config", str(path), "--circuit-dump"]) == 0
        out = capsys.readouterr().out
        assert "qubits (m): 5" in out
        assert "device V_Q (t-5): 16" in out
        assert "exceeds" in out
        assert "QUBITS 5" in out
