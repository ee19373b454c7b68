from __future__ import annotations

import datetime as dt
from pathlib import Path

import pytest

from stsc_lens.model import Dsm, Note, Thread

UTC = dt.timezone.utc
BASE = dt.datetime(2007, 1, 1, 9, 0, 0, tzinfo=UTC)

DATA_DIR = Path(__file__).parent / "data"


def at(week: int = 0, hours: int = 0) -> dt.datetime:
    """Timestamp ``week`` weeks (plus ``hours`` hours) after the fixture epoch."""
    return BASE + dt.timedelta(weeks=week, hours=hours)


def make_thread(thread_id, authors, project="proj", week=0, replies=None):
    """Thread with one note per author, an hour apart.

    ``replies`` maps note index -> reply_to; unset notes use the default
    chain behaviour.
    """
    replies = replies or {}
    notes = tuple(
        Note(author=a, timestamp=at(week, i), reply_to=replies.get(i))
        for i, a in enumerate(authors)
    )
    return Thread(id=thread_id, project=project, notes=notes)


def dsm_from_edges(ids, edges):
    """Dsm over ``ids`` with ``edges`` as (from, to, weight) triples."""
    index = {m: i for i, m in enumerate(ids)}
    cells = [[0] * len(ids) for _ in ids]
    for src, dst, weight in edges:
        cells[index[src]][index[dst]] += weight
    return Dsm(module_ids=tuple(ids), cells=tuple(tuple(r) for r in cells))


def clique_dsm(groups, n=None, extra_edges=()):
    """Dsm of disjoint symmetric cliques given as index groups, plus extras."""
    size = n if n is not None else max(i for g in groups for i in g) + 1
    cells = [[0] * size for _ in range(size)]
    for group in groups:
        for i in group:
            for j in group:
                if i != j:
                    cells[i][j] = 1
    for i, j, w in extra_edges:
        cells[i][j] += w
    ids = tuple(f"m{i}" for i in range(size))
    return Dsm(module_ids=ids, cells=tuple(tuple(r) for r in cells))


@pytest.fixture(scope="session")
def demo_bundle_paths():
    base = DATA_DIR / "demo_bundle"
    return {
        "config": str(base / "config.json"),
        "threads": str(base / "threads.json"),
        "commits": str(base / "commits.csv"),
        "deps": str(base / "deps.csv"),
    }
