"""Bounded-memory iterative leaf cutting and in-memory cycle counting.

One pass streams the edge file (sorted ascending by unique source) through:
destination extraction, external sort, deduplication, a source/destination
co-scan that classifies each source as leaf or inner, and a merge that folds
each removed leaf's subtree size and depth into its destination's record.
Passes repeat until nothing is removed; what remains is exactly the cycles.

Every stage is sequential over sorted runs, so peak memory follows the
configured budget, and the fixpoint bytes are identical whatever the budget.
"""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from .extsort import external_sort
from .records import ByteCounter, EdgeRecord, read_edges, write_edges

__all__ = [
    "ReduceConfig",
    "PassStats",
    "IterationLog",
    "CycleRecord",
    "cut_leaves_pass",
    "cut_leaves_to_fixpoint",
    "count_cycles",
    "NotAPermutationError",
]

_MIN_BUDGET = 3 * (1 << 20)


class NotAPermutationError(ValueError):
    """Cycle counting ran on a file that still contains tree edges."""


@dataclass(frozen=True)
class ReduceConfig:
    memory_budget: int = 64 * (1 << 20)
    scratch_dir: str | None = None
    overlap_io: bool = False  # accepted for interface parity; passes are synchronous

    def validate(self) -> None:
        if self.memory_budget < _MIN_BUDGET:
            raise ValueError(f"memory budget below {_MIN_BUDGET} bytes (three 1 MiB sort buffers)")


@dataclass
class PassStats:
    leaves_removed: int = 0
    inner_nodes: int = 0
    bytes_read: int = 0
    bytes_written: int = 0
    out_size_sum: int = 0  # sum of subtree sizes over surviving records


@dataclass
class IterationLog:
    passes: list[PassStats] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        """Passes that removed something; equals the maximum tree height."""
        return sum(1 for p in self.passes if p.leaves_removed > 0)

    @property
    def bytes_read(self) -> int:
        return sum(p.bytes_read for p in self.passes)

    @property
    def bytes_written(self) -> int:
        return sum(p.bytes_written for p in self.passes)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["iteration", "removed", "remaining", "bytes_read", "bytes_written"])
            for i, p in enumerate(self.passes, 1):
                w.writerow([i, p.leaves_removed, p.inner_nodes, p.bytes_read, p.bytes_written])


class CycleRecord(NamedTuple):
    leader: int              # minimum packed value on the cycle
    hop_count: int           # skeleton nodes on the cycle
    clock_length: int        # sum of edge distances
    aggregate_tree_size: int  # removed skeleton nodes hanging off the cycle


def _dedup(rows: Iterable[tuple]) -> Iterator[int]:
    last = None
    for row in rows:
        v = row[0]
        if v != last:
            yield v
            last = v


def _aggregate_removed(rows: Iterable[tuple]) -> Iterator[tuple[int, int, int]]:
    """Combine (dest, size, depth) runs: sizes add up, depths take the max."""
    cur = None
    size = depth = 0
    for d, s, dp in rows:
        if d != cur:
            if cur is not None:
                yield cur, size, depth
            cur, size, depth = d, 0, 0
        size += s
        depth = max(depth, dp)
    if cur is not None:
        yield cur, size, depth


def cut_leaves_pass(in_path, out_path, config: ReduceConfig) -> PassStats:
    """One leaf-cutting iteration over an edge file.

    A source absent from the deduplicated destination stream is a leaf: its
    record is dropped and (subtree_size + 1, subtree_depth + 1) is folded into
    its destination's record.  Surviving records keep their order, so the
    output stays sorted by source.
    """
    config.validate()
    counter = ByteCounter()
    stats = PassStats()
    scratch = config.scratch_dir or os.path.dirname(os.path.abspath(in_path))

    unique_dests = _dedup(
        external_sort(
            ((e.destination,) for e in read_edges(in_path, counter)),
            "<Q", scratch, config.memory_budget, counter,
        )
    )

    # co-scan sources (ascending, unique) against unique destinations:
    # matching sources are inner nodes, the rest are leaves
    inner_fd, inner_path = tempfile.mkstemp(prefix="inner-", suffix=".bin", dir=scratch)
    os.close(inner_fd)
    removed: list[tuple[int, int, int]] = []

    def scan() -> Iterator[EdgeRecord]:
        d = next(unique_dests, None)
        for e in read_edges(in_path, counter):
            while d is not None and d < e.source:
                d = next(unique_dests, None)
            if d == e.source:
                stats.inner_nodes += 1
                yield e
            else:
                stats.leaves_removed += 1
                removed.append((e.destination, e.subtree_size + 1, e.subtree_depth + 1))

    # the removed stream is buffered through the external sorter to group
    # equal destinations; it is bounded by the leaf count of this pass
    def removed_rows():
        yield from removed

    write_edges(inner_path, scan(), counter)

    aggregates = _aggregate_removed(
        external_sort(removed_rows(), "<3Q", scratch, config.memory_budget, counter)
    )

    def apply() -> Iterator[EdgeRecord]:
        agg = next(aggregates, None)
        for e in read_edges(inner_path, counter):
            if agg is not None and agg[0] == e.source:
                e = e._replace(
                    subtree_size=e.subtree_size + agg[1],
                    subtree_depth=max(e.subtree_depth, agg[2]),
                )
                agg = next(aggregates, None)
            stats.out_size_sum += e.subtree_size
            yield e
        if agg is not None:
            raise ValueError(
                f"aggregate for {agg[0]:#x} has no surviving record; input was not closed")

    write_edges(out_path, apply(), counter)
    os.unlink(inner_path)
    stats.bytes_read = counter.read
    stats.bytes_written = counter.written
    return stats


def cut_leaves_to_fixpoint(in_path, out_path, config: ReduceConfig) -> IterationLog:
    """Repeat cut_leaves_pass until a pass removes nothing.

    The surviving records are exactly the on-cycle skeleton nodes; the number
    of removing passes equals the maximum tree height hanging off any cycle.
    Conservation holds throughout: sum of subtree sizes plus surviving record
    count never changes.
    """
    config.validate()
    scratch = config.scratch_dir or os.path.dirname(os.path.abspath(out_path))
    log = IterationLog()

    def temp_path(i):
        return os.path.join(scratch, f"reduce-gen{i}.bin")

    cur = in_path
    gen = 0
    expected_total = None
    while True:
        nxt = temp_path(gen)
        stats = cut_leaves_pass(cur, nxt, config)
        log.passes.append(stats)
        if expected_total is None:
            # original record count; input subtree sizes need not be zero
            expected_total = stats.out_size_sum + stats.inner_nodes + stats.leaves_removed
        elif stats.out_size_sum + stats.inner_nodes != expected_total:
            raise AssertionError("subtree size conservation violated")
        if gen > 0:
            os.unlink(cur)
        cur = nxt
        gen += 1
        if stats.leaves_removed == 0:
            break
    os.replace(cur, out_path)
    return log


def count_cycles(edges: Iterable[EdgeRecord] | str) -> list[CycleRecord]:
    """Partition a pure-cycle edge list into cycles.

    The input must be a permutation of its node set (the fixpoint of leaf
    cutting); anything else raises NotAPermutationError.
    """
    if isinstance(edges, (str, os.PathLike)):
        edges = read_edges(edges)
    succ: dict[int, EdgeRecord] = {}
    for e in edges:
        if e.source in succ:
            raise NotAPermutationError(f"duplicate source {e.source:#x}")
        succ[e.source] = e

    indeg: dict[int, int] = dict.fromkeys(succ, 0)
    for e in succ.values():
        if e.destination not in indeg:
            raise NotAPermutationError(f"destination {e.destination:#x} is not a source")
        indeg[e.destination] += 1
    if any(v != 1 for v in indeg.values()):
        raise NotAPermutationError("destinations are not a permutation of sources")

    visited: set[int] = set()
    out: list[CycleRecord] = []
    for start in succ:
        if start in visited:
            continue
        leader = start
        hops = clocks = tree = 0
        cur = start
        while cur not in visited:
            visited.add(cur)
            e = succ[cur]
            leader = min(leader, cur)
            hops += 1
            clocks += e.distance
            tree += e.subtree_size
            cur = e.destination
        out.append(CycleRecord(leader, hops, clocks, tree))
    out.sort()
    return out
