"""Cycle-structure analysis for majority-clocked LFSR stream cipher state graphs."""

from .cipher import (
    A51,
    MINI567,
    MINI789,
    CandidateParams,
    CipherSpec,
    PredecessorTable,
    build_predecessor_table,
    builtin_spec,
    clock_forward,
    default_fixed_r3,
    expected_chain_count,
    expected_chain_length,
    is_candidate,
    majority_clock_mask,
    minimum_cycle_length,
    predecessors,
)
from .bitslice import SlicedBatch, calibrate_stride, clock_sliced, forward_to_candidate, transpose, untranspose
from .pipeline import PruneConfig, build_skeleton_edges, enumerate_candidates, prune_shallow_segments
from .records import EdgeRecord
from .reduce import CycleRecord, ReduceConfig, count_cycles, cut_leaves_pass, cut_leaves_to_fixpoint
from .oracle import GroundTruth, brute_force_analysis
from .stats import (
    AnalysisReport,
    ExpectationTable,
    SampleStats,
    deviation_report,
    random_mapping_expectations,
    sample_segment_distances,
    sample_segment_shapes,
)

__version__ = "0.1.0"
