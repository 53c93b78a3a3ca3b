"""Candidate enumeration, shallow-segment pruning, and skeleton edge building.

A candidate's segment is the tree of states whose forward path reaches it
before any other candidate.  Pruning removes candidates whose segment is
provably small under a bounded reverse traversal; the traversal never expands
through another candidate (that node roots its own segment), and the bound
must stay below the minimum candidate spacing so that removed candidates are
guaranteed leaves of the candidate graph.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator

from .bitslice import forward_to_candidate
from .cipher import (
    CandidateParams,
    CipherSpec,
    PredecessorTable,
    is_candidate,
    predecessors,
    shared_table,
    unrank_state,
)
from .records import EdgeRecord

__all__ = [
    "PruneConfig",
    "PruneStats",
    "PruneSoundnessError",
    "enumerate_candidates",
    "prune_shallow_segments",
    "build_skeleton_edges",
    "probe_segment",
    "auto_depth_limit",
]

_PRUNE_CHUNK = 2048
_EDGE_CHUNK = 1024


class PruneSoundnessError(RuntimeError):
    """A surviving node's forward walk hit a pruned candidate; the prune bound
    violated the minimum-spacing precondition."""


@dataclass(frozen=True)
class PruneConfig:
    """Bounded reverse traversal settings.

    dfs mode removes a candidate when no segment node lies deeper than
    depth_limit; bfs mode when the whole segment holds at most node_limit
    nodes.  Either bound must stay below 2^l3 - 1, the minimum possible
    candidate spacing, so removed candidates are true leaves.
    """

    mode: str = "dfs"
    depth_limit: int | None = None
    node_limit: int | None = None
    workers: int = 1

    def validate(self, spec: CipherSpec) -> None:
        spacing_bound = (1 << spec.lengths[2]) - 1
        if self.mode == "dfs":
            if not self.depth_limit or self.depth_limit < 1:
                raise ValueError("dfs mode needs a positive depth_limit")
            if self.depth_limit >= spacing_bound:
                raise ValueError(
                    f"depth_limit {self.depth_limit} must stay below the minimum "
                    f"candidate spacing {spacing_bound}")
        elif self.mode == "bfs":
            if not self.node_limit or self.node_limit < 1:
                raise ValueError("bfs mode needs a positive node_limit")
            if self.node_limit >= spacing_bound:
                raise ValueError(
                    f"node_limit {self.node_limit} must stay below the minimum "
                    f"candidate spacing {spacing_bound}")
        else:
            raise ValueError(f"unknown prune mode {self.mode!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class PruneStats:
    mode: str
    limit: int
    total: int = 0
    removed: int = 0
    expanded: int = 0

    @property
    def surviving(self) -> int:
        return self.total - self.removed

    @property
    def removed_fraction(self) -> float:
        return self.removed / self.total if self.total else 0.0


def enumerate_candidates(spec: CipherSpec, params: CandidateParams,
                         table: PredecessorTable | None = None) -> Iterator[int]:
    """All candidates in ascending packed order (R3 is fixed, so this scans
    (R2, R1) pairs with R2 major)."""
    if table is None:
        table = shared_table()
    m1, m2, _ = spec.reg_masks
    o2 = spec.offsets[1]
    packed_r3 = params.packed_r3
    for r2 in range(1, m2 + 1):
        high = (r2 << o2) | packed_r3
        for r1 in range(1, m1 + 1):
            x = high | r1
            if is_candidate(x, params, spec, table):
                yield x


def _expand(x: int, spec: CipherSpec, params: CandidateParams,
            table: PredecessorTable) -> list[int]:
    """Predecessors of x that belong to the same segment (not candidates)."""
    out = []
    for p in predecessors(x, spec, table):
        if (p & params.r3_field_mask) == params.packed_r3 and is_candidate(p, params, spec, table):
            continue
        out.append(p)
    return out


def _dfs_is_shallow(root: int, depth_limit: int, spec, params, table) -> tuple[bool, int]:
    """(segment depth <= depth_limit, nodes expanded); aborts on the first
    node found below the limit."""
    stack = [(root, 0)]
    expanded = 0
    while stack:
        x, d = stack.pop()
        for p in _expand(x, spec, params, table):
            expanded += 1
            if d + 1 > depth_limit:
                return False, expanded
            stack.append((p, d + 1))
    return True, expanded


def _bfs_is_small(root: int, node_limit: int, spec, params, table) -> tuple[bool, int]:
    """(segment holds <= node_limit nodes, nodes expanded)."""
    frontier = [root]
    count = 1
    while frontier:
        nxt = []
        for x in frontier:
            for p in _expand(x, spec, params, table):
                count += 1
                if count > node_limit:
                    return False, count
                nxt.append(p)
        frontier = nxt
    return True, count


def _prune_chunk(args) -> tuple[list[int], int, int]:
    chunk, config, spec, params, table = args
    survivors = []
    removed = 0
    expanded = 0
    for x in chunk:
        if config.mode == "dfs":
            shallow, work = _dfs_is_shallow(x, config.depth_limit, spec, params, table)
        else:
            shallow, work = _bfs_is_small(x, config.node_limit, spec, params, table)
        expanded += work
        if shallow:
            removed += 1
        else:
            survivors.append(x)
    return survivors, removed, expanded


def _chunks(items: Iterable, size: int) -> Iterator[list]:
    chunk = []
    for it in items:
        chunk.append(it)
        if len(chunk) >= size:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def prune_shallow_segments(candidates: Iterable[int], config: PruneConfig,
                           spec: CipherSpec, params: CandidateParams,
                           table: PredecessorTable | None = None) -> tuple[list[int], PruneStats]:
    """Drop candidates rooting shallow segments; survivors keep input order.

    Work is distributed over a chunked queue; results are merged in chunk
    order, so the output is identical for any worker count.
    """
    if table is None:
        table = shared_table()
    config.validate(spec)
    limit = config.depth_limit if config.mode == "dfs" else config.node_limit
    stats = PruneStats(mode=config.mode, limit=limit)
    skeleton: list[int] = []

    tasks = ((chunk, config, spec, params, table) for chunk in _chunks(candidates, _PRUNE_CHUNK))
    if config.workers == 1:
        results = map(_prune_chunk, tasks)
        for survivors, removed, expanded in results:
            skeleton.extend(survivors)
            stats.total += len(survivors) + removed
            stats.removed += removed
            stats.expanded += expanded
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for survivors, removed, expanded in pool.map(_prune_chunk, tasks):
                skeleton.extend(survivors)
                stats.total += len(survivors) + removed
                stats.removed += removed
                stats.expanded += expanded
    return skeleton, stats


def _edges_chunk(args) -> list[tuple[int, int, int]]:
    chunk, params, spec, table, stride = args
    walked = forward_to_candidate(chunk, params, spec, table, stride=stride)
    return [(src, dest, dist) for src, (dest, dist) in zip(chunk, walked)]


def build_skeleton_edges(skeleton: list[int], params: CandidateParams, spec: CipherSpec,
                         table: PredecessorTable | None = None, stride: int = 1,
                         workers: int = 1) -> list[EdgeRecord]:
    """One weighted edge per skeleton node: its first forward candidate and the
    clock distance.  Every destination must itself be in the skeleton; a miss
    means the prune bound was unsound and raises PruneSoundnessError."""
    if not skeleton:
        raise ValueError("skeleton is empty")
    if table is None:
        table = shared_table()
    in_skeleton = set(skeleton)
    tasks = ((chunk, params, spec, table, stride) for chunk in _chunks(skeleton, _EDGE_CHUNK))
    rows: list[tuple[int, int, int]] = []
    if workers == 1:
        for part in map(_edges_chunk, tasks):
            rows.extend(part)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_edges_chunk, tasks):
                rows.extend(part)
    for src, dest, dist in rows:
        if dest not in in_skeleton:
            raise PruneSoundnessError(
                f"walk from {src:#x} reached pruned candidate {dest:#x}; "
                "prune limit exceeded the minimum candidate spacing")
    return [EdgeRecord(src, dest, dist, 0, 0) for src, dest, dist in rows]


# --- segment probing (shared by depth auto-tuning and the stats module) -------


def probe_segment(root: int, spec: CipherSpec, params: CandidateParams,
                  table: PredecessorTable | None = None, *,
                  depth_cap: int | None = None, node_cap: int | None = None,
                  level_counts: list[int] | None = None) -> tuple[int, int, bool]:
    """Reverse level-order sweep of one segment.

    Returns (deepest level reached, nodes seen, censored) where censored means
    a cap cut the sweep short.  level_counts, when given, accumulates nodes
    per depth level (index 0 counts the root).
    """
    if table is None:
        table = shared_table()
    frontier = [root]
    depth = 0
    nodes = 1
    if level_counts is not None:
        if not level_counts:
            level_counts.append(0)
        level_counts[0] += 1
    while frontier:
        if depth_cap is not None and depth >= depth_cap:
            return depth, nodes, True
        nxt = []
        for x in frontier:
            nxt.extend(_expand(x, spec, params, table))
        if not nxt:
            return depth, nodes, False
        depth += 1
        nodes += len(nxt)
        if level_counts is not None:
            if len(level_counts) <= depth:
                level_counts.append(0)
            level_counts[depth] += len(nxt)
        if node_cap is not None and nodes > node_cap:
            return depth, nodes, True
        frontier = nxt
    return depth, nodes, False


def random_candidate(rng: random.Random, spec: CipherSpec, params: CandidateParams,
                     table: PredecessorTable) -> int:
    """Uniform candidate by rejection over the fixed-R3 plane (acceptance is
    around a half, so this is cheap)."""
    m1, m2, _ = spec.reg_masks
    o2 = spec.offsets[1]
    while True:
        x = (rng.randrange(1, m1 + 1)) | (rng.randrange(1, m2 + 1) << o2) | params.packed_r3
        if is_candidate(x, params, spec, table):
            return x


def auto_depth_limit(spec: CipherSpec, params: CandidateParams,
                     table: PredecessorTable | None = None, *,
                     sample: int = 256, seed: int = 0) -> int:
    """Depth limit from a sampled segment-depth distribution.

    Picks the 75th percentile depth, so roughly three quarters of segments
    prune away while the reverse-traversal work stays far below one forward
    hop per candidate; clamped under the minimum-spacing bound.
    """
    if table is None:
        table = shared_table()
    bound = (1 << spec.lengths[2]) - 2
    rng = random.Random(seed)
    depths = []
    for _ in range(sample):
        root = random_candidate(rng, spec, params, table)
        depth, _, _ = probe_segment(root, spec, params, table,
                                    depth_cap=bound, node_cap=200_000)
        depths.append(depth)
    depths.sort()
    return max(4, min(depths[(3 * len(depths)) // 4], bound))
