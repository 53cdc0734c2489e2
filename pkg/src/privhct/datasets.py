"""Locate the benchmark datasets on disk.

Each dataset lives in ``$PRIVHCT_DATA_DIR/<name>/`` as an edge list plus a
``user item weight`` triple file. The HetRec lastfm release can be dropped in
unchanged; the other two need converting to the triple layout first.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

DATA_ENV = "PRIVHCT_DATA_DIR"

# name -> (graph file candidates, ratings file candidates, normalization)
KNOWN = {
    "lastfm": (("graph.txt", "user_friends.dat"), ("ratings.txt", "user_artists.dat"), "max-per-user"),
    "delicious": (("graph.txt", "user_contacts.dat"), ("ratings.txt",), "max-per-user"),
    "douban": (("graph.txt",), ("ratings.txt",), "max-global(5.0)"),
}


@dataclass(frozen=True)
class DatasetPaths:
    name: str
    graph: Path
    ratings: Path
    normalization: str


def data_root(root=None) -> Path:
    return Path(root or os.environ.get(DATA_ENV) or "data")


def locate(name: str, root=None) -> DatasetPaths | None:
    """Paths for ``name`` under the data root, or ``None`` when a file is missing."""
    if name not in KNOWN:
        raise ValueError(f"unknown dataset {name!r}; known: {', '.join(KNOWN)}")
    graphs, ratings, norm = KNOWN[name]
    base = data_root(root) / name
    g = next((base / f for f in graphs if (base / f).is_file()), None)
    r = next((base / f for f in ratings if (base / f).is_file()), None)
    if g is None or r is None:
        return None
    return DatasetPaths(name, g, r, norm)
