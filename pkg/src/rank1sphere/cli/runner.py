"""Cell scheduling with per-cell checkpoints and deterministic, grid-ordered merging.

A cell is a pure function call ``fn(*args)`` returning a JSON-serializable
dict. Completed cells are written to ``<checkpoint_dir>/<key>.json`` by the
orchestrating process only, so a resumed run reads back exactly the floats an
uninterrupted run would have produced.
"""

from __future__ import annotations

import json
import os
import shutil
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence


@dataclass(frozen=True)
class Cell:
    key: str
    fn: Callable[..., dict]
    args: tuple


def _checkpoint_path(directory: Path, key: str) -> Path:
    return directory / f"{key}.json"


def _store(directory: Path, key: str, result: dict) -> None:
    # write-then-rename so an interrupt never leaves a truncated checkpoint
    tmp = _checkpoint_path(directory, key).with_suffix(".tmp")
    tmp.write_text(json.dumps(result))
    os.replace(tmp, _checkpoint_path(directory, key))


def run_cells(cells: Sequence[Cell], jobs: int, checkpoint_dir: Path | None = None,
              on_done: Callable[[Cell], Any] | None = None) -> list[dict]:
    """Evaluate ``cells`` and return their results in input order.

    Cells with an existing checkpoint are not recomputed. Failed cells (a
    result with ``"failed": True``) are not checkpointed, so a rerun retries them.
    """
    results: list[dict | None] = [None] * len(cells)
    pending = []
    for i, cell in enumerate(cells):
        path = _checkpoint_path(checkpoint_dir, cell.key) if checkpoint_dir else None
        if path is not None and path.exists():
            results[i] = json.loads(path.read_text())
        else:
            pending.append(i)
    if checkpoint_dir is not None:
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    def finish(i: int, result: dict) -> None:
        results[i] = result
        if checkpoint_dir is not None and not result.get("failed"):
            _store(checkpoint_dir, cells[i].key, result)
        if on_done is not None:
            on_done(cells[i])

    if jobs <= 1 or len(pending) <= 1:
        for i in pending:
            finish(i, cells[i].fn(*cells[i].args))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(cells[i].fn, *cells[i].args): i for i in pending}
            # checkpoint in completion order; the returned list is in grid order
            for fut in as_completed(futures):
                finish(futures[fut], fut.result())
    return results  # type: ignore[return-value]


def clear_checkpoints(checkpoint_dir: Path) -> None:
    shutil.rmtree(checkpoint_dir, ignore_errors=True)
    try:
        checkpoint_dir.parent.rmdir()  # only succeeds when no other run left checkpoints
    except OSError:
        pass
