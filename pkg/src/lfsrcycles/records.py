"""Fixed-width little-endian file formats shared by the pipeline stages.

State files hold ascending raw 8-byte packed states.  Edge files hold 40-byte
records (source, destination, distance, subtree size, subtree depth), sorted
ascending by source with unique sources.
"""

from __future__ import annotations

import struct
from typing import Iterable, Iterator, NamedTuple

__all__ = [
    "EdgeRecord",
    "EDGE_SIZE",
    "read_edges",
    "write_edges",
    "read_states",
    "write_states",
    "ByteCounter",
]

_STATE = struct.Struct("<Q")
_EDGE = struct.Struct("<5Q")
EDGE_SIZE = _EDGE.size
_CHUNK_RECORDS = 16384


class EdgeRecord(NamedTuple):
    """Weighted skeleton edge with removed-subtree aggregates."""

    source: int
    destination: int
    distance: int
    subtree_size: int
    subtree_depth: int


class ByteCounter:
    """Running totals of bytes moved through readers/writers."""

    def __init__(self):
        self.read = 0
        self.written = 0


def write_states(path, states: Iterable[int], counter: ByteCounter | None = None) -> int:
    n = 0
    with open(path, "wb") as f:
        buf = []
        for x in states:
            buf.append(_STATE.pack(x))
            n += 1
            if len(buf) >= _CHUNK_RECORDS:
                f.write(b"".join(buf))
                buf.clear()
        if buf:
            f.write(b"".join(buf))
    if counter is not None:
        counter.written += n * _STATE.size
    return n


def read_states(path, counter: ByteCounter | None = None) -> Iterator[int]:
    with open(path, "rb") as f:
        while True:
            chunk = f.read(_CHUNK_RECORDS * _STATE.size)
            if not chunk:
                return
            if len(chunk) % _STATE.size:
                raise ValueError(f"truncated state record in {path}")
            if counter is not None:
                counter.read += len(chunk)
            for (x,) in _STATE.iter_unpack(chunk):
                yield x


def write_edges(path, edges: Iterable[EdgeRecord], counter: ByteCounter | None = None) -> int:
    n = 0
    with open(path, "wb") as f:
        buf = []
        for e in edges:
            buf.append(_EDGE.pack(*e))
            n += 1
            if len(buf) >= _CHUNK_RECORDS:
                f.write(b"".join(buf))
                buf.clear()
        if buf:
            f.write(b"".join(buf))
    if counter is not None:
        counter.written += n * EDGE_SIZE
    return n


def read_edges(path, counter: ByteCounter | None = None) -> Iterator[EdgeRecord]:
    with open(path, "rb") as f:
        while True:
            chunk = f.read(_CHUNK_RECORDS * EDGE_SIZE)
            if not chunk:
                return
            if len(chunk) % EDGE_SIZE:
                raise ValueError(f"malformed edge record length in {path}")
            if counter is not None:
                counter.read += len(chunk)
            for tup in _EDGE.iter_unpack(chunk):
                yield EdgeRecord(*tup)
