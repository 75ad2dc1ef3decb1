"""
Command dispatch, exit codes, artifacts and the run manifest
"""
import json

import numpy as np
import pytest

from whipchain.chain.classes import ChainState
from whipchain.cli import dispatch
from whipchain.constants import ExitCode, MANIFEST_FILENAME
from whipchain.datatypes import LengthMismatchError, ValidationError
from whipchain.plotting import Series, emit_svg
from whipchain.utils import file_checksum, observed_order, parallel_map


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def read_csv(path):
    return np.loadtxt(str(path), delimiter=",", skiprows=1, ndmin=2)


def manifest(out):
    return json.loads((out / MANIFEST_FILENAME).read_text())


class TestDispatch:
    def test_unknown_command(self, tmp_path):
        assert dispatch(["juggle", "--out", str(tmp_path)]) == ExitCode.VALIDATION_ERROR

    def test_invalid_json(self, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text("{not json")
        assert dispatch(["tension", "--config", str(config), "--out", str(tmp_path)]) == ExitCode.VALIDATION_ERROR

    def test_missing_state(self, tmp_path):
        assert dispatch(["tension", "--out", str(tmp_path)]) == ExitCode.VALIDATION_ERROR

    def test_length_mismatch(self, tmp_path):
        state = write_json(tmp_path / "state.json", {"theta": [0.0, 0.1], "omega": [0.0]})
        assert dispatch(["tension", "--state", state, "--out", str(tmp_path)]) == ExitCode.VALIDATION_ERROR

    def test_unknown_log_level(self, tmp_path):
        assert dispatch(["tension", "--log-level", "chatty", "--out", str(tmp_path)]) == ExitCode.VALIDATION_ERROR


class TestTension:
    def test_hanging_chain(self, tmp_path):
        n, g = 6, 9.8
        state = tmp_path / "state.json"
        ChainState.straight(n, -np.pi / 2, g=g).save(str(state))
        out = tmp_path / "out"
        assert dispatch(["tension", "--state", str(state), "--out", str(out)]) == ExitCode.OK
        rows = read_csv(out / "tension.csv")
        assert rows[:, 1] == pytest.approx(n * g * (n + 1 - np.arange(1, n + 1)))
        artifacts = manifest(out)["artifacts"]
        assert artifacts == {"tension.csv": file_checksum(str(out / "tension.csv"))}

    def test_probe_flag(self, tmp_path):
        state = write_json(tmp_path / "state.json", {"theta": [0.0, 2.0944], "omega": [0.0, 0.0]})
        out = tmp_path / "out"
        assert dispatch(["tension", "--state", state, "--probe", "--out", str(out)]) == ExitCode.OK
        report = json.loads((out / "probe.json").read_text())
        assert report["negative_pairs"]
        assert "probe.json" in manifest(out)["artifacts"]

    def test_svg_artifacts(self, tmp_path):
        state = tmp_path / "state.json"
        ChainState.straight(4, 0.2, omega=1.0).save(str(state))
        out = tmp_path / "out"
        assert dispatch(["tension", "--state", str(state), "--format", "csv+svg", "--out", str(out)]) == ExitCode.OK
        assert (out / "tension.svg").read_text().lstrip().startswith("<?xml")
        assert set(manifest(out)["artifacts"]) == {"tension.csv", "tension.svg"}


class TestSimulate:
    def test_equilibrium_run(self, tmp_path):
        config = write_json(tmp_path / "run.json", {"state": ChainState.straight(5, -np.pi / 2, g=9.8).to_dict(),
                                                   "dt": 1e-3, "T": 0.05, "sample_every": 10})
        out = tmp_path / "out"
        assert dispatch(["simulate", "--config", config, "--out", str(out)]) == ExitCode.OK
        rows = read_csv(out / "trajectory.csv")
        assert rows.shape == (6, 1 + 2 * 5 + 4)
        energy = rows[:, -4] + rows[:, -3]
        assert np.max(np.abs(energy - energy[0])) <= 1e-10
        recorded = manifest(out)["config"]["document"]
        assert recorded["dt"] == 1e-3

    def test_output_field_names_the_directory(self, tmp_path):
        out = tmp_path / "elsewhere"
        config = write_json(tmp_path / "run.json", {"state": ChainState.straight(3, -np.pi / 2, g=9.8).to_dict(),
                                                   "dt": 1e-3, "T": 0.01, "output": str(out)})
        assert dispatch(["simulate", "--config", config]) == ExitCode.OK
        assert (out / "trajectory.csv").exists()
        assert manifest(out)["config"]["output_dir"] == str(out)


class TestCurvature:
    def test_random_sections_are_reproducible(self, tmp_path):
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert dispatch(["curvature", "--random", "5", "--seed", "11", "--out", str(out)]) == ExitCode.OK
            outputs.append((out / "curvature.csv").read_bytes())
        assert outputs[0] == outputs[1]
        rows = read_csv(tmp_path / "a" / "curvature.csv")
        assert rows.shape == (5, 3)
        assert np.all(rows[:, 2] >= 0.0)

    def test_given_section(self, tmp_path):
        config = write_json(tmp_path / "section.json", {"state": ChainState.straight(2, 0.0).to_dict(),
                                                       "eta": [1.0, 0.0], "xi": [0.0, 1.0]})
        out = tmp_path / "out"
        assert dispatch(["curvature", "--config", config, "--out", str(out)]) == ExitCode.OK
        assert read_csv(out / "curvature.csv")[0] == pytest.approx([0.25, 1.0 / 16, 4.0])

    def test_degenerate_section(self, tmp_path):
        config = write_json(tmp_path / "section.json", {"state": ChainState.straight(2, 0.0).to_dict(),
                                                       "eta": [1.0, 1.0], "xi": [2.0, 2.0]})
        assert dispatch(["curvature", "--config", config, "--out", str(tmp_path)]) == ExitCode.VALIDATION_ERROR


class TestWhipCommands:
    def test_green(self, tmp_path):
        config = write_json(tmp_path / "green.json", {"kappa": 0.0, "m": 20})
        out = tmp_path / "out"
        assert dispatch(["green", "--config", config, "--out", str(out)]) == ExitCode.OK
        rows = read_csv(out / "green.csv")
        s = rows[:, 0]
        assert rows[:, 1:] == pytest.approx(1.0 - np.maximum.outer(s, s), abs=1e-12)
        assert manifest(out)["config"]["document"]["scheme"] == "ghost-point"

    def test_evolve_cfl_violation(self, tmp_path):
        config = write_json(tmp_path / "whip.json", {"profile": {"angle": 0.3, "omega": 2.0}, "m": 50,
                                                     "dt": 0.1, "T": 1.0})
        assert dispatch(["evolve", "--config", config, "--out", str(tmp_path)]) == ExitCode.NUMERICAL_FAILURE

    def test_evolve(self, tmp_path):
        config = write_json(tmp_path / "whip.json", {"profile": {"angle": 0.3, "omega": 2.0}, "m": 20,
                                                     "dt": 1e-3, "T": 0.01, "sample_every": 5})
        out = tmp_path / "out"
        assert dispatch(["evolve", "--config", config, "--out", str(out)]) == ExitCode.OK
        rows = read_csv(out / "evolve.csv")
        assert rows[:, 0] == pytest.approx([0.0, 0.005, 0.01])
        assert rows[:, 3] == pytest.approx([0.3, 0.31, 0.32])

    def test_riccati(self, tmp_path):
        config = write_json(tmp_path / "riccati.json", {"profile": {"kinks": [{"s_o": 0.5, "alpha": 1.0}]},
                                                        "m": 100, "n": 100})
        out = tmp_path / "out"
        assert dispatch(["riccati", "--config", config, "--out", str(out)]) == ExitCode.OK
        f = read_csv(out / "riccati.csv")[:, 2]
        assert np.isinf(f[50])
        assert np.all(f[:50] == 0.0)
        assert set(manifest(out)["artifacts"]) == {"riccati.csv", "pivot_residual.csv"}


class TestConverge:
    def test_study_document(self, tmp_path):
        study = write_json(tmp_path / "smooth.json", {"study": "truncation"})
        out = tmp_path / "out"
        assert dispatch(["converge", "--study", study, "--threshold", "1.9", "--out", str(out)]) == ExitCode.OK
        assert manifest(out)["config"]["document"]["study"] == "truncation"

    def test_truncation_passes(self, tmp_path):
        out = tmp_path / "out"
        assert dispatch(["converge", "--threshold", "1.9", "--out", str(out)]) == ExitCode.OK
        assert {"evolution_truncation.csv", "tension_truncation.csv"} <= set(manifest(out)["artifacts"])

    def test_threshold_missed(self, tmp_path):
        out = tmp_path / "out"
        assert dispatch(["converge", "--threshold", "5", "--out", str(out)]) == ExitCode.ACCEPTANCE_FAILURE
        # artifacts are still recorded
        assert (out / MANIFEST_FILENAME).exists()

    def test_unknown_study(self, tmp_path):
        config = write_json(tmp_path / "study.json", {"study": "vibes"})
        assert dispatch(["converge", "--config", config, "--out", str(tmp_path)]) == ExitCode.VALIDATION_ERROR


class TestProbe:
    def test_gravity_probe(self, tmp_path):
        config = write_json(tmp_path / "probe.json", {"theta1": 1.5707963267948966, "n": 4})
        out = tmp_path / "out"
        assert dispatch(["probe", "--config", config, "--out", str(out)]) == ExitCode.OK
        assert read_csv(out / "gravity_probe.csv")[0, 2] == pytest.approx(-16.0)


class TestPlotting:
    def test_empty_series(self, tmp_path):
        with pytest.raises(ValidationError):
            emit_svg(str(tmp_path / "empty.svg"), [])

    def test_mismatched_series(self):
        with pytest.raises(LengthMismatchError):
            Series("bad", [1.0, 2.0], [1.0])

    def test_constant_series(self, tmp_path):
        path = tmp_path / "flat.svg"
        emit_svg(str(path), [Series("flat", np.arange(5), np.ones(5))], title="flat")
        assert "<svg" in path.read_text()

    def test_deterministic(self, tmp_path):
        series = [Series("a", [1, 2, 4], [1.0, 0.5, 0.25])]
        emit_svg(str(tmp_path / "a.svg"), series, loglog=True, annotation="order 1")
        emit_svg(str(tmp_path / "b.svg"), series, loglog=True, annotation="order 1")
        assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


class TestUtils:
    def test_observed_order(self):
        assert observed_order([10, 20, 40], [1.0, 0.25, 0.0625]) == pytest.approx(2.0)
        assert np.isnan(observed_order([10, 20], [1.0, 0.0]))

    def test_parallel_map_keeps_order(self, monkeypatch):
        monkeypatch.setenv("WHIPCHAIN_THREADS", "3")
        assert parallel_map(lambda x: x * x, range(10)) == [x * x for x in range(10)]

    def test_bad_thread_limit(self, monkeypatch):
        monkeypatch.setenv("WHIPCHAIN_THREADS", "zero")
        with pytest.raises(ValidationError):
            parallel_map(lambda x: x, [1, 2])
