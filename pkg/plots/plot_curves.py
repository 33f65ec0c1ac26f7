#!/usr/bin/env python3
"""Render round-accuracy curves from federation history CSVs.

Reads the history files written by the simulator (one row per round with a
``global_acc`` column) and draws one labeled series per file, accuracy in
percent against the round index. Rounds whose accuracy was not evaluated
(NaN) are skipped. The figure format follows the --out extension
(PNG, SVG, PDF, ...).

Usage:
    plot_curves.py --out FIG.png RUN1.csv RUN2.csv ...
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

REQUIRED_COLUMNS = ("round", "global_acc")


@dataclass(frozen=True)
class RunArtifact:
    csv_path: str
    label: str


def read_curve(artifact: RunArtifact) -> tuple[list[int], list[float]]:
    """(rounds, accuracies in percent) for the evaluated rounds of one run."""
    with open(artifact.csv_path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        for column in REQUIRED_COLUMNS:
            if column not in header:
                raise ValueError(f"{artifact.csv_path}: missing column {column!r} (header: {header})")
        rounds: list[int] = []
        accs: list[float] = []
        for row in reader:
            acc = float(row["global_acc"])
            if math.isnan(acc):
                continue
            rounds.append(int(row["round"]))
            accs.append(100.0 * acc)
    if not rounds:
        raise ValueError(f"{artifact.csv_path}: no evaluated rounds to plot")
    return rounds, accs


def plot_curves(artifacts: list[RunArtifact], out_path) -> None:
    """One figure, one series per artifact, legend, saved to out_path."""
    if not artifacts:
        raise ValueError("need at least one run to plot")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for artifact in artifacts:
        rounds, accs = read_curve(artifact)
        ax.plot(rounds, accs, label=artifact.label, linewidth=1.5)
    ax.set_xlabel("communication round")
    ax.set_ylabel("global accuracy (%)")
    ax.set_ylim(0, 100)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output figure path (extension picks the format)")
    parser.add_argument("csvs", nargs="+", metavar="RUN.csv", help="history CSVs, one series each")
    parser.add_argument(
        "--labels",
        default=None,
        help="comma-separated series labels (default: file stems)",
    )
    args = parser.parse_args(argv)

    if args.labels is not None:
        labels = [s.strip() for s in args.labels.split(",")]
        if len(labels) != len(args.csvs):
            parser.error(f"got {len(labels)} labels for {len(args.csvs)} files")
    else:
        labels = [Path(p).stem for p in args.csvs]

    artifacts = [RunArtifact(path, label) for path, label in zip(args.csvs, labels)]
    try:
        plot_curves(artifacts, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
