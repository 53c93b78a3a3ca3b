"""Exhaustive ground truth for desk-scale cipher instances.

Builds the full successor map over the valid state space (flat arrays over
rank-encoded states), then derives every structural quantity the pipeline is
supposed to reproduce: cycles, components, leaves, candidate-graph edges with
exact distances, segment sizes and depths.  Deliberately independent of the
predecessor table: the reverse direction comes from inverting the forward map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cipher import CandidateParams, CipherSpec

__all__ = ["GroundTruth", "CycleInfo", "brute_force_analysis"]

_MAX_NODES = 1 << 31
_CHUNK = 1 << 20


@dataclass
class CycleInfo:
    """One cycle of the state graph."""

    ranks: np.ndarray          # on-cycle states in walk order
    leader: int                # minimum packed state on the cycle
    clock_length: int          # number of states on the cycle
    candidate_count: int       # candidates among them
    component_size: int        # states in the surrounding component


@dataclass
class GroundTruth:
    spec: CipherSpec
    params: CandidateParams
    node_count: int
    succ: np.ndarray                    # rank -> rank
    pred_count_hist: np.ndarray         # indegree histogram (0..4)
    leaf_count: int
    cycles: list[CycleInfo]
    cand_ranks: np.ndarray              # ascending rank order
    edge_src: np.ndarray                # candidate-graph edges, by source rank
    edge_dst: np.ndarray
    edge_dist: np.ndarray
    seg_depth: np.ndarray               # per candidate, max depth of its segment
    seg_size: np.ndarray                # per candidate, states in its segment
    level_counts: np.ndarray            # nodes per segment depth level (level 0 = roots)
    _packed_cache: dict = field(default_factory=dict, repr=False)

    # --- conversions ---------------------------------------------------------

    def packed_of_ranks(self, ranks: np.ndarray) -> np.ndarray:
        m1, m2, m3 = self.spec.reg_masks
        o1, o2, o3 = self.spec.offsets
        r = np.asarray(ranks, dtype=np.int64)
        r3 = r % m3 + 1
        rest = r // m3
        r2 = rest % m2 + 1
        r1 = rest // m2 + 1
        return (r1 | (r2 << o2) | (r3 << o3)).astype(np.uint64)

    # --- summaries used by verification --------------------------------------

    @property
    def component_count(self) -> int:
        return len(self.cycles)

    @property
    def on_cycle_states(self) -> int:
        return sum(c.clock_length for c in self.cycles)

    def cycle_multiset(self) -> list[tuple[int, int]]:
        """Sorted (candidate hop count, clock length) per cycle."""
        return sorted((c.candidate_count, c.clock_length) for c in self.cycles)

    def candidate_edge_map(self) -> dict[int, tuple[int, int]]:
        """Packed source -> (packed destination, distance)."""
        src = self.packed_of_ranks(self.edge_src)
        dst = self.packed_of_ranks(self.edge_dst)
        return {int(s): (int(d), int(w)) for s, d, w in zip(src, dst, self.edge_dist)}

    def summary(self) -> dict:
        import math

        sizes = sorted(c.clock_length for c in self.cycles)
        return {
            "node_count": self.node_count,
            "leaf_count": self.leaf_count,
            "leaf_fraction": self.leaf_count / self.node_count,
            "component_count": self.component_count,
            "cycle_count": len(self.cycles),
            "on_cycle_states": self.on_cycle_states,
            "largest_cycle": sizes[-1] if sizes else 0,
            "largest_component": max((c.component_size for c in self.cycles), default=0),
            "candidate_count": int(self.cand_ranks.size),
            "max_segment_depth": int(self.seg_depth.max(initial=0)),
            "mean_segment_depth": float(self.seg_depth.mean()) if self.seg_depth.size else math.nan,
        }


def _parity_u64(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    for s in (32, 16, 8, 4, 2, 1):
        v ^= v >> s
    return v & 1


def _build_successors(spec: CipherSpec, clock_all: bool) -> np.ndarray:
    n = spec.valid_state_count
    m1, m2, m3 = spec.reg_masks
    c1t, c2t, c3t = spec.clock_taps
    t1, t2, t3 = spec.tap_masks
    succ = np.empty(n, dtype=np.int64)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        idx = np.arange(lo, hi, dtype=np.int64)
        r3 = idx % m3 + 1
        rest = idx // m3
        r2 = rest % m2 + 1
        r1 = rest // m2 + 1
        if clock_all:
            k1 = k2 = k3 = np.True_
        else:
            c1 = (r1 >> c1t) & 1
            c2 = (r2 >> c2t) & 1
            c3 = (r3 >> c3t) & 1
            maj = (c1 & c2) | (c3 & (c1 | c2))
            k1 = c1 == maj
            k2 = c2 == maj
            k3 = c3 == maj
        r1 = np.where(k1, ((r1 << 1) & m1) | _parity_u64(r1 & t1), r1)
        r2 = np.where(k2, ((r2 << 1) & m2) | _parity_u64(r2 & t2), r2)
        r3 = np.where(k3, ((r3 << 1) & m3) | _parity_u64(r3 & t3), r3)
        succ[lo:hi] = ((r1 - 1) * m2 + (r2 - 1)) * m3 + (r3 - 1)
    return succ


def brute_force_analysis(spec: CipherSpec, params: CandidateParams, *,
                         clock_all: bool = False) -> GroundTruth:
    """Full functional-graph analysis of one instance.

    clock_all replaces the majority rule with "advance all three registers",
    a bijection on the valid states; useful for validating the graph analysis
    on a permutation (no leaves, pure cycles).
    """
    n = spec.valid_state_count
    if n > _MAX_NODES:
        raise ValueError(f"instance too large for exhaustive analysis ({n} > {_MAX_NODES} states)")
    m1, m2, m3 = spec.reg_masks

    succ = _build_successors(spec, clock_all)
    indeg = np.bincount(succ, minlength=n)
    pred_hist = np.bincount(indeg, minlength=5)
    leaf_count = int(pred_hist[0])

    # candidates: fixed R3, successor leaves it, at least one predecessor
    fix = params.fixed_r3
    grid = (np.arange(m1, dtype=np.int64)[:, None] * m2 + np.arange(m2, dtype=np.int64)[None, :]).ravel()
    fixed_ranks = grid * m3 + (fix - 1)
    keep = (succ[fixed_ranks] % m3 + 1 != fix) & (indeg[fixed_ranks] > 0)
    cand_ranks = np.sort(fixed_ranks[keep])
    is_cand = np.zeros(n, dtype=bool)
    is_cand[cand_ranks] = True

    # cycle membership by pointer doubling: f^(2^k) maps everything onto cycles
    g = succ.copy()
    hops = 1
    while hops < n:
        g = g[g]
        hops <<= 1
    cycle_ranks = np.unique(g)
    on_cycle = np.zeros(n, dtype=bool)
    on_cycle[cycle_ranks] = True

    # enumerate individual cycles (total on-cycle states is tiny vs n)
    cycle_id = np.full(n, -1, dtype=np.int64)
    cycles_members: list[np.ndarray] = []
    succ_list = succ
    for start in cycle_ranks:
        if cycle_id[start] >= 0:
            continue
        members = []
        cur = int(start)
        cid = len(cycles_members)
        while cycle_id[cur] < 0:
            cycle_id[cur] = cid
            members.append(cur)
            cur = int(succ_list[cur])
        cycles_members.append(np.array(members, dtype=np.int64))

    comp_of = cycle_id[g]
    comp_sizes = np.bincount(comp_of, minlength=len(cycles_members))

    # candidate-graph edges by lock-step forward walking
    cur = cand_ranks.copy()
    dist = np.zeros(cur.size, dtype=np.int64)
    done = np.zeros(cur.size, dtype=bool)
    edge_dst = np.zeros(cur.size, dtype=np.int64)
    while not done.all():
        live = ~done
        cur[live] = succ[cur[live]]
        dist[live] += 1
        hit = live & is_cand[cur]
        edge_dst[hit] = cur[hit]
        done |= hit

    # segments: reverse BFS from all candidates at once, never expanding into
    # another candidate
    order = np.argsort(succ, kind="stable")
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(indeg, out=offsets[1:])

    root = np.full(n, -1, dtype=np.int64)
    depth = np.full(n, -1, dtype=np.int64)
    root[cand_ranks] = np.arange(cand_ranks.size)
    depth[cand_ranks] = 0
    frontier = cand_ranks
    level_counts = [int(cand_ranks.size)]
    level = 0
    while frontier.size:
        reps = indeg[frontier]
        total = int(reps.sum())
        if total == 0:
            break
        starts = offsets[frontier]
        # positions within each predecessor run
        run_end = np.cumsum(reps)
        within = np.arange(total) - np.repeat(run_end - reps, reps)
        preds = order[np.repeat(starts, reps) + within]
        proots = np.repeat(root[frontier], reps)
        keep = ~is_cand[preds]
        preds = preds[keep]
        proots = proots[keep]
        if preds.size == 0:
            break
        level += 1
        depth[preds] = level
        root[preds] = proots
        level_counts.append(int(preds.size))
        frontier = preds

    if not clock_all and (root < 0).any():
        raise AssertionError("segment sweep missed states; graph is inconsistent")

    assigned = root >= 0
    seg_depth = np.zeros(cand_ranks.size, dtype=np.int64)
    np.maximum.at(seg_depth, root[assigned], depth[assigned])
    seg_size = np.bincount(root[assigned], minlength=cand_ranks.size)

    # per-cycle reporting
    cycles = []
    packed_all = None
    gt = GroundTruth(
        spec=spec,
        params=params,
        node_count=n,
        succ=succ,
        pred_count_hist=pred_hist,
        leaf_count=leaf_count,
        cycles=cycles,
        cand_ranks=cand_ranks,
        edge_src=cand_ranks,
        edge_dst=edge_dst,
        edge_dist=dist,
        seg_depth=seg_depth,
        seg_size=seg_size,
        level_counts=np.array(level_counts, dtype=np.int64),
    )
    for cid, members in enumerate(cycles_members):
        packed = gt.packed_of_ranks(members)
        cycles.append(
            CycleInfo(
                ranks=members,
                leader=int(packed.min()),
                clock_length=int(members.size),
                candidate_count=int(is_cand[members].sum()),
                component_size=int(comp_sizes[cid]),
            )
        )
    return gt
