"""Result files that carry the version and resolved config they came from."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .config import VERSION, ExperimentConfig


def write_csv(path: Path, header: list[str], rows, cfg: ExperimentConfig) -> None:
    """CSV with two ``#`` provenance lines ahead of the header row."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# version: {VERSION}\r\n")
        fh.write(f"# config: {cfg.flat()}\r\n")
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([row[h] for h in header] if isinstance(row, dict) else list(row))


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(path: Path, payload: dict, cfg: ExperimentConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"version": VERSION, "config": cfg.embedded(), **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n", encoding="utf-8")


def write_newick(path: Path, newick: str, cfg: ExperimentConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(f"[version: {VERSION}]\n[config: {cfg.flat()}]\n{newick}\n", encoding="utf-8")
