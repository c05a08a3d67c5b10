"""
cqdd CLI - cycloidal QDD actuator simulation and torque-estimator experiments.

Usage:
    python -m cli profile --znt 10 --znp 11 --format svg --out ./artifacts
    python -m cli gen-data -n 100 --seed 7 --out ./data
    python -m cli train --preset pva-gru --data ./data --out ./artifacts
    python -m cli eval --checkpoint ./artifacts/pva-gru.ckpt --data ./data
    python -m cli bench --checkpoint ./artifacts/pva-gru.ckpt
    python -m cli backdrive --out ./artifacts
    python -m cli backlash --out ./artifacts

Every command accepts --config FILE, a flat YAML file whose keys are the
command's settings; explicit flags override it. Each run writes a
run-manifest-<command>.json next to its artifacts.
"""

from __future__ import annotations

import json
import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from enum import IntEnum
from pathlib import Path
from typing import Annotated, Any, Optional

import jsonschema
import pydantic
import typer

from cqdd import __version__
from cqdd.dynamics.actuator import ActuatorConfig, PDGains
from cqdd.errors import (
    ConfigError,
    CqddError,
    DatasetError,
    GeometryError,
    ScenarioError,
    SpecMismatchError,
)
from cqdd.geometry.cycloid import (
    GearParams,
    generate_profile,
    profile_to_csv,
    profile_to_svg,
    ring_pin_centers,
)
from cqdd.models.checkpoint import load_checkpoint, save_checkpoint
from cqdd.models.spec import resolve_spec
from cqdd.pendulum.dataset import InputMode, build_dataset, load_dataset, save_dataset, window
from cqdd.pendulum.scenario import (
    RigConfig,
    describe_ranges,
    run_ripple_probe,
    sample_scenarios,
    simulate_scenarios,
)
from cqdd.services.config_loader import load_defaults, load_reference, resolve_settings
from cqdd.services.run_manifest import write_findings, write_run_manifest
from cqdd.services.seeding import fork_seed
from cqdd.tools.backdrive_check import BackdriveTool
from cqdd.tools.backlash_check import BacklashTool
from cqdd.tools.latency_validate import LatencyTool
from cqdd.tools.preset_compare import ComparisonTool
from cqdd.training.evaluation import evaluate, format_table, write_report_csv
from cqdd.training.trainer import TrainConfig, train, write_history

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
PROFILE_FORMATS = ("csv", "svg")

app = typer.Typer(
    name="cqdd",
    help="cqdd - cycloidal quasi-direct-drive actuator simulation and torque estimation",
    add_completion=False,
)


class ExitCode(IntEnum):
    OK = 0
    FAILURE = 1
    USAGE = 2
    MISSING_INPUT = 3
    SPEC_MISMATCH = 4


@contextmanager
def handle_errors() -> Iterator[None]:
    """Map library errors to exit codes."""
    try:
        yield
    except typer.Exit:
        raise
    except FileNotFoundError as e:
        typer.echo(f"[ERROR] {e}", err=True)
        raise typer.Exit(code=ExitCode.MISSING_INPUT) from e
    except SpecMismatchError as e:
        typer.echo(f"[ERROR] Spec mismatch: {e}", err=True)
        raise typer.Exit(code=ExitCode.SPEC_MISMATCH) from e
    except (GeometryError, ConfigError, ScenarioError, DatasetError, ValueError) as e:
        # pydantic.ValidationError is a ValueError
        typer.echo(f"[ERROR] Invalid input: {e}", err=True)
        raise typer.Exit(code=ExitCode.USAGE) from e
    except (CqddError, jsonschema.ValidationError, OSError, ArithmeticError) as e:
        typer.echo(f"[ERROR] {type(e).__name__}: {e}", err=True)
        raise typer.Exit(code=ExitCode.FAILURE) from e


def _pick(settings: dict[str, Any], model: type[pydantic.BaseModel]) -> dict[str, Any]:
    return {k: settings[k] for k in model.model_fields if k in settings}


def _actuator_settings(config: Optional[Path]) -> dict[str, Any]:
    return resolve_settings(load_defaults("actuator"), config)


def _finish(
    command: str, settings: dict[str, Any], seed: Optional[int], paths: list[Path], out: Path
) -> None:
    manifest = write_run_manifest(command, settings, seed, paths, out)
    typer.echo(f"   Manifest: {manifest}")


def _report_findings(findings: dict[str, Any], path: Path) -> None:
    summary = findings["summary"]
    typer.echo(
        f"   Checks: {summary['pass']} pass, {summary['fail']} fail, "
        f"{summary['warn']} warn, {summary['skipped']} skipped"
    )
    typer.echo(f"   Verdict: {findings['verdict']}")
    for reason in findings["failureReasons"]:
        typer.echo(f"[WARN] {reason}", err=True)
    typer.echo(f"   Output: {path}")


@app.callback()
def main(
    verbose: Annotated[
        bool,
        typer.Option("--verbose", "-v", help="Log debug output"),
    ] = False,
) -> None:
    """Cycloidal QDD actuator simulation and learned torque estimation."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        stream=sys.stderr,
    )


@app.command()
def profile(
    znt: Annotated[
        Optional[int],
        typer.Option("--znt", help="Number of disk lobes Z_nt"),
    ] = None,
    znp: Annotated[
        Optional[int],
        typer.Option("--znp", help="Number of ring pins Z_np"),
    ] = None,
    ze: Annotated[
        Optional[float],
        typer.Option("--ze", help="Eccentricity Z_e [mm]"),
    ] = None,
    zr: Annotated[
        Optional[float],
        typer.Option("--zr", help="Ring pin pitch radius Z_r [mm]"),
    ] = None,
    pin_diameter: Annotated[
        Optional[float],
        typer.Option("--pin-diameter", help="Outer pin diameter [mm]"),
    ] = None,
    samples: Annotated[
        Optional[int],
        typer.Option("--samples", help="Points along the profile"),
    ] = None,
    fmt: Annotated[
        Optional[str],
        typer.Option("--format", "-f", help="Output format: csv or svg"),
    ] = None,
    out: Annotated[
        Path,
        typer.Option("--out", "-o", help="Output directory"),
    ] = Path("./artifacts"),
    config: Annotated[
        Optional[Path],
        typer.Option("--config", "-c", help="Flat YAML settings file"),
    ] = None,
) -> None:
    """
    Generate the cycloid disk profile.

    Writes profile.csv (x_mm,y_mm) or profile.svg with the ring pins drawn.
    """
    with handle_errors():
        defaults = {**GearParams().model_dump(), "samples": 720, "format": "csv"}
        settings = resolve_settings(
            defaults,
            config,
            {
                "num_teeth": znt,
                "num_outer_pins": znp,
                "eccentricity": ze,
                "pitch_radius": zr,
                "outer_pin_diameter": pin_diameter,
                "samples": samples,
                "format": fmt,
            },
        )
        if settings["format"] not in PROFILE_FORMATS:
            raise ConfigError(
                f"format must be one of {', '.join(PROFILE_FORMATS)}, got '{settings['format']}'"
            )
        gear = GearParams.create(**_pick(settings, GearParams))
        typer.echo(
            f"[*] Generating profile (Z_nt={gear.num_teeth}, Z_np={gear.num_outer_pins}, "
            f"Z_e={gear.eccentricity} mm)"
        )
        if gear.eccentricity == 0.0:
            typer.echo("[WARN] Zero eccentricity: the profile is a circle", err=True)

        polyline = generate_profile(gear, samples=int(settings["samples"]))
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"profile.{settings['format']}"
        if settings["format"] == "csv":
            text = profile_to_csv(polyline)
        else:
            text = profile_to_svg(polyline, ring_pin_centers(gear), gear.outer_pin_diameter)
        path.write_text(text, encoding="utf-8")

        typer.echo(f"[OK] Profile with {polyline.lobe_count()} lobes")
        typer.echo(f"   Output: {path}")
        _finish("profile", settings, None, [path], out)


@app.command("gen-data")
def gen_data(
    n_scenarios: Annotated[
        Optional[int],
        typer.Option("--n-scenarios", "-n", min=1, help="Number of pendulum scenarios"),
    ] = None,
    seed: Annotated[
        Optional[int],
        typer.Option("--seed", "-s", min=0, help="Run seed"),
    ] = None,
    workers: Annotated[
        Optional[int],
        typer.Option("--workers", "-w", min=1, help="Simulation processes"),
    ] = None,
    probes: Annotated[
        Optional[int],
        typer.Option("--probes", min=0, help="Constant-speed ripple probe runs"),
    ] = None,
    out: Annotated[
        Path,
        typer.Option("--out", "-o", help="Dataset directory"),
    ] = Path("./data"),
    config: Annotated[
        Optional[Path],
        typer.Option("--config", "-c", help="Flat YAML settings file"),
    ] = None,
) -> None:
    """
    Simulate pendulum scenarios and write a dataset directory.

    The directory holds one CSV per trajectory and manifest.yaml with the
    scenario parameters, splits, sampling ranges and normalization.
    """
    with handle_errors():
        defaults = {**load_defaults("pendulum"), **load_defaults("actuator")}
        settings = resolve_settings(
            defaults,
            config,
            {"n_scenarios": n_scenarios, "seed": seed, "workers": workers, "probes": probes},
        )
        n = int(settings["n_scenarios"])
        if n < 1:
            raise ConfigError(f"n_scenarios must be >= 1, got {n}")
        run_seed = int(settings["seed"])
        actuator = ActuatorConfig(**_pick(settings, ActuatorConfig))
        rig = RigConfig(**_pick(settings, RigConfig))
        gains = PDGains(kp=float(settings["kp"]), kd=float(settings["kd"]))
        fractions = (
            float(settings["train_fraction"]),
            float(settings["validation_fraction"]),
            float(settings["test_fraction"]),
        )

        typer.echo(f"[*] Simulating {n} scenarios (seed={run_seed}, workers={settings['workers']})")
        scenarios = sample_scenarios(n, run_seed, rig=rig)
        trajectories = simulate_scenarios(
            scenarios, actuator, gains, rig, workers=int(settings["workers"])
        )
        probe_runs = [
            run_ripple_probe(
                actuator,
                gains,
                load_torque=float(settings["probe_load_torque"]),
                ripple_hz=float(settings["probe_ripple_hz"]),
                duration=float(settings["probe_duration"]),
                seed=fork_seed(run_seed, f"probe-{i}"),
                name=f"probe-{i:02d}",
            )
            for i in range(int(settings["probes"]))
        ]

        dataset = build_dataset(trajectories, fractions, seed=run_seed, probes=probe_runs)
        dataset.info.update({"n_scenarios": n, **describe_ranges(scenarios)})
        written = save_dataset(dataset, out)

        typer.echo(
            f"[OK] Dataset with {len(trajectories)} scenarios and {len(probe_runs)} probes"
        )
        typer.echo(f"   Output: {out}")
        _finish("gen-data", settings, run_seed, written, out)


@app.command("train")
def train_command(
    data: Annotated[
        Path,
        typer.Option("--data", "-d", help="Dataset directory written by gen-data"),
    ],
    preset: Annotated[
        Optional[str],
        typer.Option("--preset", "-p", help="pva-gru, pv-gru, mlp-tuned or mlp-baseline"),
    ] = None,
    seed: Annotated[
        Optional[int],
        typer.Option("--seed", "-s", min=0, help="Training seed"),
    ] = None,
    epochs: Annotated[
        Optional[int],
        typer.Option("--epochs", "-e", min=1, help="Maximum epochs"),
    ] = None,
    batch_size: Annotated[
        Optional[int],
        typer.Option("--batch-size", min=1, help="Mini-batch size"),
    ] = None,
    patience: Annotated[
        Optional[int],
        typer.Option("--patience", min=1, help="Early-stop patience in epochs"),
    ] = None,
    max_lr: Annotated[
        Optional[float],
        typer.Option("--max-lr", help="Peak learning rate (default 10x initial)"),
    ] = None,
    stride: Annotated[
        Optional[int],
        typer.Option("--stride", min=1, help="Keep every stride-th training window"),
    ] = None,
    out: Annotated[
        Path,
        typer.Option("--out", "-o", help="Output directory"),
    ] = Path("./artifacts"),
    config: Annotated[
        Optional[Path],
        typer.Option("--config", "-c", help="Flat YAML settings file"),
    ] = None,
) -> None:
    """
    Train a torque estimator preset on a dataset.

    Writes <preset>.ckpt and <preset>-history.csv.
    """
    with handle_errors():
        settings = resolve_settings(
            load_defaults("training"),
            config,
            {
                "preset": preset,
                "seed": seed,
                "epochs": epochs,
                "batch_size": batch_size,
                "patience": patience,
                "max_lr": max_lr,
                "stride": stride,
            },
        )
        spec = resolve_spec(str(settings["preset"]))
        train_config = TrainConfig(**_pick(settings, TrainConfig))
        dataset = load_dataset(data)

        typer.echo(f"[*] Training {spec.name} (seed={train_config.seed})")
        result = train(spec, dataset, train_config)
        checkpoint_path = save_checkpoint(result.checkpoint, out / f"{spec.name}.ckpt")
        history_path = write_history(result.history, out / f"{spec.name}-history.csv")

        best = result.history[result.best_epoch - 1]
        typer.echo(
            f"[OK] {spec.name}: best epoch {result.best_epoch} of {len(result.history)}, "
            f"validation loss {best.val_loss:.6g}"
        )
        typer.echo(f"   Output: {checkpoint_path}")
        _finish(
            "train",
            {**settings, "data": str(data)},
            train_config.seed,
            [checkpoint_path, history_path],
            out,
        )


@app.command("eval")
def eval_command(
    checkpoint: Annotated[
        list[Path],
        typer.Option("--checkpoint", "-k", help="Checkpoint file; repeat to compare models"),
    ],
    data: Annotated[
        Path,
        typer.Option("--data", "-d", help="Dataset directory written by gen-data"),
    ],
    split: Annotated[
        Optional[str],
        typer.Option("--split", help="Split to score"),
    ] = None,
    mode: Annotated[
        Optional[str],
        typer.Option("--mode", "-m", help="Input windows: PV or PVA (default: the checkpoint's)"),
    ] = None,
    latency_samples: Annotated[
        Optional[int],
        typer.Option("--latency-samples", min=0, help="Latency benchmark size; 0 to skip"),
    ] = None,
    strict: Annotated[
        bool,
        typer.Option("--strict", help="Exit 1 when the preset comparison fails"),
    ] = False,
    out: Annotated[
        Path,
        typer.Option("--out", "-o", help="Output directory"),
    ] = Path("./artifacts"),
    config: Annotated[
        Optional[Path],
        typer.Option("--config", "-c", help="Flat YAML settings file"),
    ] = None,
) -> None:
    """
    Score checkpoints on a dataset split.

    Writes eval-report.csv (one row per model) and eval-report.json with the
    ripple and latency details. With two or more checkpoints, comparison.json
    holds findings on the RMSE ordering, improvement and ripple tracking.
    """
    with handle_errors():
        settings = resolve_settings(
            {"split": "test", "mode": None, "latency_samples": 16000},
            config,
            {"split": split, "mode": mode, "latency_samples": latency_samples},
        )
        input_mode = None if settings["mode"] is None else InputMode(str(settings["mode"]).upper())
        samples = int(settings["latency_samples"]) or None
        dataset = load_dataset(data)
        reference = load_reference()

        reports = []
        for path in checkpoint:
            loaded = load_checkpoint(
                path, expected_channels=input_mode.channels if input_mode else None
            )
            typer.echo(f"[*] Evaluating {loaded.spec.name} on '{settings['split']}'")
            reports.append(
                evaluate(
                    loaded,
                    dataset,
                    split=str(settings["split"]),
                    mode=input_mode,
                    latency_samples=samples,
                    reference=reference,
                )
            )

        csv_path = write_report_csv(reports, out / "eval-report.csv")
        json_path = out / "eval-report.json"
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump([r.as_dict() for r in reports], f, indent=2)
            f.write("\n")

        typer.echo(format_table(reports))
        typer.echo(f"[OK] Evaluated {len(reports)} model(s)")
        typer.echo(f"   Output: {csv_path}")
        artifacts = [csv_path, json_path]
        comparison: dict[str, Any] | None = None
        if len(reports) >= 2:
            comparison = ComparisonTool().run(reports, reference=reference)
            compare_path = write_findings(comparison, out / "comparison.json")
            _report_findings(comparison, compare_path)
            artifacts.append(compare_path)
        _finish(
            "eval",
            {
                **settings,
                "checkpoint": ",".join(str(p) for p in checkpoint),
                "data": str(data),
            },
            None,
            artifacts,
            out,
        )
        if strict and comparison is not None and comparison["verdict"] != "PASS":
            raise typer.Exit(code=ExitCode.FAILURE)


@app.command()
def bench(
    checkpoint: Annotated[
        Path,
        typer.Option("--checkpoint", "-k", help="Checkpoint file"),
    ],
    samples: Annotated[
        Optional[int],
        typer.Option("--samples", "-n", min=1000, help="Timed single-window calls"),
    ] = None,
    seed: Annotated[
        Optional[int],
        typer.Option("--seed", "-s", min=0, help="Seed of the random input windows"),
    ] = None,
    data: Annotated[
        Optional[Path],
        typer.Option("--data", "-d", help="Time test-split windows of this dataset instead"),
    ] = None,
    strict: Annotated[
        bool,
        typer.Option("--strict", help="Exit 1 when a latency ceiling is exceeded"),
    ] = False,
    out: Annotated[
        Path,
        typer.Option("--out", "-o", help="Output directory"),
    ] = Path("./artifacts"),
    config: Annotated[
        Optional[Path],
        typer.Option("--config", "-c", help="Flat YAML settings file"),
    ] = None,
) -> None:
    """
    Benchmark single-window inference latency.

    Writes latency-<preset>.json findings with mean and p99 against the
    configured ceilings.
    """
    with handle_errors():
        settings = resolve_settings(
            {"samples": 16000, "seed": 0}, config, {"samples": samples, "seed": seed}
        )
        loaded = load_checkpoint(checkpoint)
        windows = None
        if data is not None:
            windows, _ = window(
                load_dataset(data), loaded.spec.history, loaded.spec.mode, "test"
            )
        typer.echo(f"[*] Timing {settings['samples']} calls of {loaded.spec.name}")
        findings = LatencyTool().run(
            loaded, int(settings["samples"]), windows=windows, seed=int(settings["seed"])
        )
        path = write_findings(findings, out / f"latency-{loaded.spec.name}.json")

        m = findings["measurements"]
        typer.echo(f"[OK] mean {m['meanUs']:.2f} us, p99 {m['p99Us']:.2f} us")
        _report_findings(findings, path)
        _finish(
            "bench",
            {
                **settings,
                "checkpoint": str(checkpoint),
                "data": None if data is None else str(data),
            },
            int(settings["seed"]),
            [path],
            out,
        )
        if strict and findings["verdict"] != "PASS":
            raise typer.Exit(code=ExitCode.FAILURE)


@app.command()
def backdrive(
    strict: Annotated[
        bool,
        typer.Option("--strict", help="Exit 1 when a value misses its reference"),
    ] = False,
    out: Annotated[
        Path,
        typer.Option("--out", "-o", help="Output directory"),
    ] = Path("./artifacts"),
    config: Annotated[
        Optional[Path],
        typer.Option("--config", "-c", help="Flat YAML actuator settings"),
    ] = None,
) -> None:
    """Run the virtual backdrive experiment."""
    with handle_errors():
        settings = _actuator_settings(config)
        actuator = ActuatorConfig(**settings)
        typer.echo("[*] Running virtual backdrive experiment")
        findings = BackdriveTool().run(actuator)
        path = write_findings(findings, out / "backdrive.json")

        m = findings["measurements"]
        typer.echo(f"[OK] static {m['staticNm']:.2f} Nm / dynamic {m['dynamicNm']:.2f} Nm")
        _report_findings(findings, path)
        _finish("backdrive", settings, None, [path], out)
        if strict and findings["verdict"] != "PASS":
            raise typer.Exit(code=ExitCode.FAILURE)


@app.command()
def backlash(
    locations: Annotated[
        int,
        typer.Option("--locations", min=1, help="Output angles to test"),
    ] = 6,
    strict: Annotated[
        bool,
        typer.Option("--strict", help="Exit 1 when a value misses its reference"),
    ] = False,
    out: Annotated[
        Path,
        typer.Option("--out", "-o", help="Output directory"),
    ] = Path("./artifacts"),
    config: Annotated[
        Optional[Path],
        typer.Option("--config", "-c", help="Flat YAML actuator settings"),
    ] = None,
) -> None:
    """Run the virtual backlash experiment."""
    with handle_errors():
        settings = _actuator_settings(config)
        actuator = ActuatorConfig(**settings)
        typer.echo(f"[*] Running virtual backlash experiment at {locations} locations")
        findings = BacklashTool().run(actuator, n_locations=locations)
        path = write_findings(findings, out / "backlash.json")

        m = findings["measurements"]
        typer.echo(
            f"[OK] backlash {m['meanArcmin']:.2f} arcmin, "
            f"ripple {m['ripplePeakToPeakNm']:.2f} Nm peak-to-peak at rated load"
        )
        _report_findings(findings, path)
        _finish("backlash", {**settings, "locations": locations}, None, [path], out)
        if strict and findings["verdict"] != "PASS":
            raise typer.Exit(code=ExitCode.FAILURE)


@app.command()
def version() -> None:
    """Show version information."""
    typer.echo(f"cqdd version {__version__}")


if __name__ == "__main__":
    app()
