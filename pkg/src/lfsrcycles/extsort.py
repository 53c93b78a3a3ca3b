"""Bounded-memory sorting of fixed-width tuple streams.

Plain run formation (fill a buffer, sort, spill) followed by a k-way heap
merge over the runs.  Keys are unique in every use here, so stability never
matters.  Run files live in a scratch directory and are deleted as soon as
the merge finishes.
"""

from __future__ import annotations

import heapq
import os
import struct
import tempfile
from typing import Iterable, Iterator

from .records import ByteCounter

__all__ = ["external_sort"]


def _write_run(rows, packer, dir_, counter):
    fd, path = tempfile.mkstemp(prefix="run-", suffix=".bin", dir=dir_)
    with os.fdopen(fd, "wb") as f:
        data = b"".join(packer.pack(*r) for r in rows)
        f.write(data)
    if counter is not None:
        counter.written += len(rows) * packer.size
    return path


def _read_run(path, packer, counter):
    size = packer.size
    with open(path, "rb") as f:
        while True:
            chunk = f.read(size * 16384)
            if not chunk:
                break
            if counter is not None:
                counter.read += len(chunk)
            yield from packer.iter_unpack(chunk)
    os.unlink(path)


def external_sort(rows: Iterable[tuple], fmt: str, scratch_dir: str,
                  memory_budget: int, counter: ByteCounter | None = None) -> Iterator[tuple]:
    """Yield `rows` in ascending tuple order using at most roughly
    `memory_budget` bytes of buffered records at a time.

    fmt is the struct format of one row.  The budget is split between the run
    buffer and merge-side readahead; runs are plain sorted spills.
    """
    packer = struct.Struct(fmt)
    # a buffered python tuple costs far more than its packed bytes; 4x is a
    # conservative expansion factor so the budget is honored in spirit
    run_len = max(1024, memory_budget // (4 * packer.size * 2))
    runs = []
    buf = []
    for row in rows:
        buf.append(row)
        if len(buf) >= run_len:
            buf.sort()
            runs.append(_write_run(buf, packer, scratch_dir, counter))
            buf = []
    buf.sort()
    if not runs:
        yield from buf
        return
    if buf:
        runs.append(_write_run(buf, packer, scratch_dir, counter))
    yield from heapq.merge(*(_read_run(p, packer, counter) for p in runs))
