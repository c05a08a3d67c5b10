"""
Tests for the cqdd command line.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import pytest
import yaml
from typer.testing import CliRunner

from cli.__main__ import ExitCode, app
from cqdd import __version__

SCHEMA_DIR = Path(__file__).parent.parent / "schemas"

runner = CliRunner()


def _schema(name: str) -> dict:
    with open(SCHEMA_DIR / name, "r", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory: pytest.TempPathFactory) -> dict[str, Path]:
    """gen-data followed by train on a tiny dataset."""
    root = tmp_path_factory.mktemp("pipeline")
    settings = root / "pendulum.yaml"
    settings.write_text(yaml.safe_dump({"duration": 1.0, "probe_duration": 3.0}))
    data = root / "data"
    result = runner.invoke(
        app, ["gen-data", "-n", "3", "--seed", "4", "--out", str(data), "--config", str(settings)]
    )
    assert result.exit_code == 0, result.output

    artifacts = root / "artifacts"
    result = runner.invoke(
        app,
        [
            "train", "--data", str(data), "--preset", "mlp-baseline",
            "--epochs", "1", "--stride", "4", "--out", str(artifacts),
        ],
    )
    assert result.exit_code == 0, result.output
    return {"data": data, "artifacts": artifacts, "checkpoint": artifacts / "mlp-baseline.ckpt"}


class TestProfile:
    """cqdd profile."""

    def test_csv(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["profile", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert "10 lobes" in result.output
        lines = (tmp_path / "profile.csv").read_text().splitlines()
        assert lines[0] == "x_mm,y_mm"
        manifest = json.loads((tmp_path / "run-manifest-profile.json").read_text())
        jsonschema.validate(manifest, _schema("run-manifest.schema.json"))
        assert manifest["config"]["num_teeth"] == 10
        assert manifest["artifacts"][0]["path"] == "profile.csv"

    def test_svg(self, tmp_path: Path) -> None:
        result = runner.invoke(
            app, ["profile", "--znt", "14", "--znp", "15", "--zr", "40", "-f", "svg",
                  "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "profile.svg").read_text().count("<circle") == 15

    def test_zero_eccentricity_warns(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["profile", "--ze", "0", "--out", str(tmp_path)])
        assert result.exit_code == 0
        assert "[WARN]" in result.output

    def test_invalid_gear(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["profile", "--znp", "12", "--out", str(tmp_path)])
        assert result.exit_code == ExitCode.USAGE
        assert not (tmp_path / "profile.csv").exists()

    def test_unknown_format(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["profile", "-f", "png", "--out", str(tmp_path)])
        assert result.exit_code == ExitCode.USAGE

    def test_config_file(self, tmp_path: Path) -> None:
        settings = tmp_path / "gear.yaml"
        settings.write_text(yaml.safe_dump({"samples": 100}))
        result = runner.invoke(
            app, ["profile", "--config", str(settings), "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        assert len((tmp_path / "profile.csv").read_text().splitlines()) == 102

    def test_unknown_config_key(self, tmp_path: Path) -> None:
        settings = tmp_path / "gear.yaml"
        settings.write_text(yaml.safe_dump({"teeth": 12}))
        result = runner.invoke(
            app, ["profile", "--config", str(settings), "--out", str(tmp_path)]
        )
        assert result.exit_code == ExitCode.USAGE

    def test_missing_config_file(self, tmp_path: Path) -> None:
        result = runner.invoke(
            app, ["profile", "--config", str(tmp_path / "absent.yaml"), "--out", str(tmp_path)]
        )
        assert result.exit_code == ExitCode.MISSING_INPUT


class TestPipeline:
    """gen-data, train, eval and bench."""

    def test_gen_data_layout(self, pipeline: dict[str, Path]) -> None:
        manifest = yaml.safe_load((pipeline["data"] / "manifest.yaml").read_text())
        assert manifest["n_scenarios"] == 3
        assert manifest["split.probe"] == "probe-00"
        assert "range.ref_frequency.realised" in manifest
        assert (pipeline["data"] / "run-manifest-gen-data.json").exists()

    def test_gen_data_rejects_zero_scenarios(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["gen-data", "-n", "0", "--out", str(tmp_path)])
        assert result.exit_code == ExitCode.USAGE

    def test_train_outputs(self, pipeline: dict[str, Path]) -> None:
        assert pipeline["checkpoint"].exists()
        assert (pipeline["artifacts"] / "mlp-baseline-history.csv").exists()
        manifest = json.loads((pipeline["artifacts"] / "run-manifest-train.json").read_text())
        assert manifest["seed"] == 0
        assert manifest["config"]["preset"] == "mlp-baseline"

    def test_train_missing_data(self, tmp_path: Path) -> None:
        result = runner.invoke(
            app, ["train", "--data", str(tmp_path / "none"), "--out", str(tmp_path)]
        )
        assert result.exit_code == ExitCode.MISSING_INPUT

    def test_eval(self, pipeline: dict[str, Path], tmp_path: Path) -> None:
        result = runner.invoke(
            app,
            [
                "eval", "-k", str(pipeline["checkpoint"]), "--data", str(pipeline["data"]),
                "--latency-samples", "0", "--out", str(tmp_path),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "mlp-baseline" in result.output
        report = json.loads((tmp_path / "eval-report.json").read_text())
        assert report[0]["model"] == "mlp-baseline"
        assert report[0]["latency"] is None
        assert report[0]["reference"]["rmse_nm"] == 2.46
        assert (tmp_path / "eval-report.csv").exists()

    def test_eval_mode_mismatch(self, pipeline: dict[str, Path], tmp_path: Path) -> None:
        result = runner.invoke(
            app,
            [
                "eval", "-k", str(pipeline["checkpoint"]), "--data", str(pipeline["data"]),
                "--mode", "PVA", "--out", str(tmp_path),
            ],
        )
        assert result.exit_code == ExitCode.SPEC_MISMATCH

    def test_eval_compares_presets(self, pipeline: dict[str, Path], tmp_path: Path) -> None:
        result = runner.invoke(
            app,
            [
                "train", "--data", str(pipeline["data"]), "--preset", "mlp-tuned",
                "--epochs", "1", "--stride", "4", "--out", str(tmp_path),
            ],
        )
        assert result.exit_code == 0, result.output
        result = runner.invoke(
            app,
            [
                "eval", "-k", str(pipeline["checkpoint"]), "-k", str(tmp_path / "mlp-tuned.ckpt"),
                "--data", str(pipeline["data"]), "--latency-samples", "0", "--out", str(tmp_path),
            ],
        )
        assert result.exit_code == 0, result.output
        findings = json.loads((tmp_path / "comparison.json").read_text())
        jsonschema.validate(findings, _schema("findings.schema.json"))
        statuses = {c["id"]: c["status"] for c in findings["checks"]}
        assert statuses["compare.ordering"] in ("pass", "fail")
        assert statuses["compare.improvement"] == "skipped"
        manifest = json.loads((tmp_path / "run-manifest-eval.json").read_text())
        assert "comparison.json" in [a["path"] for a in manifest["artifacts"]]

    def test_single_checkpoint_writes_no_comparison(
        self, pipeline: dict[str, Path], tmp_path: Path
    ) -> None:
        result = runner.invoke(
            app,
            [
                "eval", "-k", str(pipeline["checkpoint"]), "--data", str(pipeline["data"]),
                "--latency-samples", "0", "--out", str(tmp_path),
            ],
        )
        assert result.exit_code == 0, result.output
        assert not (tmp_path / "comparison.json").exists()

    def test_eval_missing_checkpoint(self, pipeline: dict[str, Path], tmp_path: Path) -> None:
        result = runner.invoke(
            app,
            [
                "eval", "-k", str(tmp_path / "absent.ckpt"), "--data", str(pipeline["data"]),
                "--out", str(tmp_path),
            ],
        )
        assert result.exit_code == ExitCode.MISSING_INPUT

    def test_bench(self, pipeline: dict[str, Path], tmp_path: Path) -> None:
        result = runner.invoke(
            app,
            ["bench", "-k", str(pipeline["checkpoint"]), "--samples", "1000",
             "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        findings = json.loads((tmp_path / "latency-mlp-baseline.json").read_text())
        jsonschema.validate(findings, _schema("findings.schema.json"))
        assert findings["measurements"]["nSamples"] == 1000

    def test_bench_rejects_small_sample(self, pipeline: dict[str, Path], tmp_path: Path) -> None:
        result = runner.invoke(
            app,
            ["bench", "-k", str(pipeline["checkpoint"]), "--samples", "10",
             "--out", str(tmp_path)],
        )
        assert result.exit_code == ExitCode.USAGE


class TestReproducibility:
    """The same seed and settings give byte-identical artifacts."""

    @staticmethod
    def _run(root: Path) -> Path:
        root.mkdir(parents=True, exist_ok=True)
        settings = root / "pendulum.yaml"
        settings.write_text(yaml.safe_dump({"duration": 1.0, "probe_duration": 3.0}))
        data = root / "data"
        result = runner.invoke(
            app,
            ["gen-data", "-n", "3", "--seed", "9", "--out", str(data), "--config", str(settings)],
        )
        assert result.exit_code == 0, result.output
        result = runner.invoke(
            app,
            [
                "train", "--data", str(data), "--preset", "mlp-baseline", "--seed", "3",
                "--epochs", "2", "--stride", "4", "--out", str(root / "artifacts"),
            ],
        )
        assert result.exit_code == 0, result.output
        return root

    def test_reruns_are_byte_identical(self, tmp_path: Path) -> None:
        first = self._run(tmp_path / "a")
        second = self._run(tmp_path / "b")
        compared = [
            Path("data") / "manifest.yaml",
            Path("artifacts") / "mlp-baseline.ckpt",
            Path("artifacts") / "mlp-baseline-history.csv",
        ]
        compared += [p.relative_to(first) for p in (first / "data" / "trajectories").iterdir()]
        assert len(compared) == 7
        for relative in compared:
            assert (first / relative).read_bytes() == (second / relative).read_bytes(), relative


class TestExperiments:
    """backdrive and backlash."""

    def test_backdrive(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["backdrive", "--strict", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert "Verdict: PASS" in result.output
        findings = json.loads((tmp_path / "backdrive.json").read_text())
        jsonschema.validate(findings, _schema("findings.schema.json"))

    def test_backlash_strict_failure(self, tmp_path: Path) -> None:
        settings = tmp_path / "actuator.yaml"
        settings.write_text(yaml.safe_dump({"backlash_width": 9.0}))
        result = runner.invoke(
            app,
            ["backlash", "--strict", "--locations", "2", "--config", str(settings),
             "--out", str(tmp_path)],
        )
        assert result.exit_code == ExitCode.FAILURE
        assert (tmp_path / "backlash.json").exists()


def test_version() -> None:
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert __version__ in result.output
