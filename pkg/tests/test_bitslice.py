import random

import pytest

from lfsrcycles.bitslice import (
    DEFAULT_STRIDE_A51,
    SlicedBatch,
    StrideError,
    calibrate_stride,
    candidate_hops,
    clock_sliced,
    forward_to_candidate,
    transpose,
    untranspose,
)
from lfsrcycles.cipher import (
    A51,
    MINI567,
    clock_forward,
    is_candidate,
    minimum_cycle_length,
)

from conftest import random_states


def scalar_walk(x, spec, t):
    for _ in range(t):
        x = clock_forward(x, spec)
    return x


def scalar_first_candidate(x, params, spec, table):
    d = 0
    while True:
        x = clock_forward(x, spec)
        d += 1
        if is_candidate(x, params, spec, table):
            return x, d


def mini_candidates(params, table):
    m1, m2, _ = MINI567.reg_masks
    out = []
    for r2 in range(1, m2 + 1):
        for r1 in range(1, m1 + 1):
            x = MINI567.pack(r1, r2, params.fixed_r3)
            if is_candidate(x, params, MINI567, table):
                out.append(x)
    return out


# --- transpose ------------------------------------------------------------------


def test_transpose_involution():
    rng = random.Random(1)
    for _ in range(300):
        n = rng.randrange(1, 65)
        batch = random_states(A51, n, seed=rng.randrange(1 << 30))
        sb = transpose(batch, A51, 64)
        assert sb.lane_count == n
        assert sb.nbits == 64
        assert untranspose(sb) == batch


def test_transpose_equal_lanes_gives_constant_words():
    x = random_states(A51, 1, seed=4)[0]
    sb = transpose([x] * 64, A51, 64)
    full = (1 << 64) - 1
    for i, w in enumerate(sb.words):
        assert w in (0, full)
        assert (w != 0) == bool((x >> i) & 1)


def test_transpose_permutation_pattern():
    # state j has only bit j set -> word i has only bit i set
    nbits = MINI567.total_bits
    sb = transpose([1 << j for j in range(nbits)], MINI567, 64)
    for i in range(nbits):
        assert sb.words[i] == 1 << i


def test_transpose_rejects_oversized_batch():
    with pytest.raises(ValueError):
        transpose(random_states(A51, 65, seed=0), A51, 64)


def test_filler_lanes_are_valid():
    sb = transpose(random_states(A51, 3, seed=8), A51, 64)
    sb = clock_sliced(sb, A51, 5)
    # peek at a filler lane: widen lane_count and check validity
    wide = SlicedBatch(words=sb.words, lane_count=64, width=64)
    for x in untranspose(wide):
        assert A51.is_valid(x)


# --- sliced clocking -------------------------------------------------------------


def test_clock_sliced_zero_steps_is_identity():
    sb = transpose(random_states(A51, 64, seed=2), A51, 64)
    out = clock_sliced(sb, A51, 0)
    assert out.words == sb.words


def test_single_lane_reproduces_scalar_trajectory():
    x = random_states(A51, 1, seed=3)[0]
    for t in range(1, 101):
        got = untranspose(clock_sliced(transpose([x], A51, 64), A51, t))[0]
        assert got == scalar_walk(x, A51, t)


@pytest.mark.parametrize("spec,seed", [(A51, 5), (MINI567, 6)])
def test_sliced_matches_scalar_random_batch(spec, seed):
    states = random_states(spec, 64, seed=seed)
    sb = clock_sliced(transpose(states, spec, 64), spec, 500)
    assert untranspose(sb) == [scalar_walk(x, spec, 500) for x in states]


def test_sliced_matches_scalar_wide_batch():
    states = random_states(A51, 256, seed=7)
    sb = clock_sliced(transpose(states, A51, 256), A51, 200)
    assert untranspose(sb) == [scalar_walk(x, A51, 200) for x in states]


def test_clock_sliced_rejects_negative():
    sb = transpose(random_states(A51, 1, seed=1), A51, 64)
    with pytest.raises(ValueError):
        clock_sliced(sb, A51, -1)


# --- forward walking -------------------------------------------------------------


def test_forward_to_candidate_matches_scalar_mini(table, mini567_params):
    params = mini567_params
    cands = mini_candidates(params, table)
    got = forward_to_candidate(cands, params, MINI567, table)
    for src, (dest, dist) in zip(cands, got):
        assert dist >= 1
        assert is_candidate(dest, params, MINI567, table)
        assert (dest, dist) == scalar_first_candidate(src, params, MINI567, table)


def test_forward_to_candidate_random_starts_mini(table, mini567_params):
    params = mini567_params
    starts = random_states(MINI567, 200, seed=9)
    got = forward_to_candidate(starts, params, MINI567, table)
    for src, (dest, dist) in zip(starts, got):
        assert (dest, dist) == scalar_first_candidate(src, params, MINI567, table)


def test_stride_independence_mini(table, mini567_params):
    params = mini567_params
    cands = mini_candidates(params, table)
    default = calibrate_stride(MINI567, params, table, samples=500, seed=0)
    assert default > 1
    runs = [
        forward_to_candidate(cands, params, MINI567, table, stride=s)
        for s in (1, 16, 100, default)
    ]
    assert all(r == runs[0] for r in runs[1:])


def test_candidate_hops_two_legs(table, mini567_params):
    params = mini567_params
    starts = random_states(MINI567, 50, seed=10)
    hops = candidate_hops(starts, params, MINI567, table, legs=2)
    for src, legs in zip(starts, hops):
        assert len(legs) == 2
        (d1, n1), (d2, n2) = legs
        assert (d1, n1) == scalar_first_candidate(src, params, MINI567, table)
        assert (d2, n2) == scalar_first_candidate(d1, params, MINI567, table)


def test_walk_cap_raises(table, mini567_params):
    starts = random_states(MINI567, 4, seed=11)
    with pytest.raises(StrideError):
        forward_to_candidate(starts, mini567_params, MINI567, table, max_clocks=3)


def test_calibrate_stride_stock_a51(a51_params, table):
    assert calibrate_stride(A51, a51_params, table) == DEFAULT_STRIDE_A51
    assert DEFAULT_STRIDE_A51 < minimum_cycle_length(A51)


def test_calibrated_stride_is_safe_mini(table, mini567_params):
    # never larger than the true minimum candidate spacing
    params = mini567_params
    cands = mini_candidates(params, table)
    spacing = min(d for _, d in forward_to_candidate(cands, params, MINI567, table))
    assert calibrate_stride(MINI567, params, table, samples=2000, seed=1) <= spacing
