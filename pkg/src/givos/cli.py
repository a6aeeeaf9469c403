"""Command-line entry points: batch simulation, the HTTP service, the
scalar-oracle gate, and snapshot replay.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from givos.core import EngineConfig
from givos.dataset import load_sequence, save_mask_image
from givos.robot import MODES, MetricReport, run_simulation
from givos.snapshot import dump_snapshot, load_snapshot, snapshot_masks, snapshot_session
from givos.synth import SyntheticSpec, generate_clip, suite_config, suite_specs

CSV_HEADER = "round,frame,object,J,F"


def write_metrics_csv(report: MetricReport, path: Path) -> None:
    lines = [CSV_HEADER]
    for round_index, frame, obj, j, f in report.rows:
        lines.append(f"{round_index},{frame},{obj},{j!r},{f!r}")
    path.write_text("\n".join(lines) + "\n")


def summary_record(report: MetricReport) -> dict:
    return {
        "mode": report.mode,
        "seed": report.seed,
        "num_objects": report.num_objects,
        "rounds": [
            {
                "round": m.round_index,
                "mean_j": m.mean_j,
                "mean_f": m.mean_f,
                "mean_jf": m.mean_jf,
            }
            for m in report.round_means
        ],
        "auc_j": report.auc_j,
        "auc_jf": report.auc_jf,
        "selection_trace": [
            {"round": r, "frame": f, "rule": rule} for r, f, rule in report.selection_trace
        ],
    }


def write_summary(report: MetricReport, path: Path) -> None:
    path.write_text(
        json.dumps(summary_record(report), sort_keys=True, separators=(",", ":")) + "\n"
    )


def load_config(path: str | None, base: EngineConfig) -> EngineConfig:
    if path is None:
        return base
    overrides = json.loads(Path(path).read_text())
    return EngineConfig.from_dict({**base.to_dict(), **overrides})


@click.group()
def main() -> None:
    """Guided interactive video object segmentation tools."""


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--sequence", default=None, help="dataset sequence name under --data")
@click.option("--data", "data_dir", default=None, type=click.Path(path_type=Path))
@click.option("--synthetic/--no-synthetic", default=False, help="use a generated clip")
@click.option("--frames", default=20, show_default=True)
@click.option("--size", default=64, show_default=True)
@click.option("--objects", default=2, show_default=True)
@click.option("--clip-seed", default=0, show_default=True, help="synthetic clip seed")
@click.option("--mode", type=click.Choice(MODES), default="gt-worst", show_default=True)
@click.option("--rounds", default=4, show_default=True)
@click.option("--seed", default=0, show_default=True, help="robot seed")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
def simulate(out_dir, sequence, data_dir, synthetic, frames, size, objects, clip_seed,
             mode, rounds, seed, config_path):
    """Run a robot-user simulation and write metrics + per-round snapshots."""
    if synthetic == bool(sequence):
        raise click.UsageError("choose exactly one of --synthetic or --sequence")
    if synthetic:
        spec = SyntheticSpec(
            num_frames=frames, height=size, width=size, num_objects=objects, seed=clip_seed
        )
        video, gt = generate_clip(spec)
        source = {"kind": "synthetic", "spec": spec.to_dict()}
        config = load_config(config_path, suite_config())
    else:
        base = Path(data_dir) if data_dir else Path(".")
        video, gt = load_sequence(base / sequence)
        if gt is None:
            raise click.UsageError(f"sequence {sequence} has no ground-truth masks")
        source = {"kind": "dataset", "sequence": sequence}
        config = load_config(config_path, EngineConfig())

    out_dir.mkdir(parents=True, exist_ok=True)
    snapshots_dir = out_dir / "snapshots"
    snapshots_dir.mkdir(exist_ok=True)

    def save_round(round_index, session):
        dump_snapshot(
            snapshot_session(session, source),
            snapshots_dir / f"round_{round_index:02d}.json",
        )

    report, session = run_simulation(
        video, gt, config, mode=mode, rounds=rounds, seed=seed, on_round=save_round
    )

    (out_dir / "round_log.jsonl").write_text(
        "".join(
            json.dumps(entry.to_record(), sort_keys=True, separators=(",", ":")) + "\n"
            for entry in session.round_log
        )
    )
    write_metrics_csv(report, out_dir / "metrics.csv")
    write_summary(report, out_dir / "summary.json")
    final = report.round_means[-1]
    click.echo(
        f"{mode}: {len(report.round_means)} rounds, final J={final.mean_j:.4f} "
        f"F={final.mean_f:.4f} AUC(J&F)={report.auc_jf:.4f}"
    )


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--mode", type=click.Choice(MODES), default="gt-worst", show_default=True)
@click.option("--rounds", default=4, show_default=True)
@click.option("--clips", default=10, show_default=True)
def suite(out_dir, mode, rounds, clips):
    """Run the full synthetic benchmark suite."""
    out_dir.mkdir(parents=True, exist_ok=True)
    per_round: list[list[float]] = []
    for spec in suite_specs(clips):
        video, gt = generate_clip(spec)
        report, _ = run_simulation(
            video, gt, suite_config(), mode=mode, rounds=rounds, seed=spec.seed
        )
        clip_dir = out_dir / f"clip_{spec.seed:02d}"
        clip_dir.mkdir(exist_ok=True)
        write_metrics_csv(report, clip_dir / "metrics.csv")
        write_summary(report, clip_dir / "summary.json")
        per_round.append([m.mean_j for m in report.round_means])
        click.echo(f"clip {spec.seed}: " + " ".join(f"{v:.3f}" for v in per_round[-1]))
    means = np.array(per_round).mean(axis=0)
    (out_dir / "suite_summary.json").write_text(
        json.dumps(
            {"mode": mode, "clips": clips, "mean_j_per_round": means.tolist()},
            sort_keys=True,
            separators=(",", ":"),
        )
        + "\n"
    )
    click.echo("suite mean J per round: " + " ".join(f"{v:.4f}" for v in means))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8008, show_default=True)
@click.option("--data", "data_dir", default=None, type=click.Path())
@click.option("--snapshots", "snapshot_dir", default="snapshots", show_default=True)
def serve(host, port, data_dir, snapshot_dir):
    """Launch the HTTP session service."""
    import uvicorn

    from givos.service.app import create_app

    uvicorn.run(create_app(data_dir, snapshot_dir), host=host, port=port)


@main.command()
@click.option("--trials", default=5, show_default=True)
@click.option("--tolerance", default=1e-9, show_default=True)
def oracle(trials, tolerance):
    """Cross-check the fusion pipeline against the scalar-loop reference."""
    from givos.oracle import run_oracle_report

    ok, lines = run_oracle_report(trials=trials, tolerance=tolerance)
    for line in lines:
        click.echo(line)
    sys.exit(0 if ok else 1)


@main.command()
@click.argument("snapshot_path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def replay(snapshot_path, out_dir):
    """Regenerate mask images from a saved snapshot."""
    snapshot = load_snapshot(snapshot_path)
    masks = snapshot_masks(snapshot)
    out_dir.mkdir(parents=True, exist_ok=True)
    digits = max(5, len(str(len(masks) - 1)))
    for t, mask in enumerate(masks):
        save_mask_image(mask, out_dir / f"{t:0{digits}d}.pgm")
    (out_dir / "r_scores.json").write_text(
        json.dumps(snapshot["r_scores"], separators=(",", ":")) + "\n"
    )
    click.echo(f"wrote {len(masks)} masks to {out_dir}")


if __name__ == "__main__":
    main()
