import random

import pytest

from lfsrcycles.cipher import (
    A51,
    MINI567,
    MINI789,
    CandidateParams,
    build_predecessor_table,
    default_fixed_r3,
    unrank_state,
)


@pytest.fixture(scope="session")
def table():
    return build_predecessor_table()


@pytest.fixture(scope="session")
def a51_params():
    return CandidateParams.from_spec(A51, default_fixed_r3(A51))


@pytest.fixture(scope="session")
def mini567_params():
    return CandidateParams.from_spec(MINI567, default_fixed_r3(MINI567))


@pytest.fixture(scope="session")
def mini789_params():
    return CandidateParams.from_spec(MINI789, default_fixed_r3(MINI789))


@pytest.fixture(scope="session")
def oracle567(mini567_params):
    from lfsrcycles.oracle import brute_force_analysis

    return brute_force_analysis(MINI567, mini567_params)


def random_states(spec, n, seed):
    rng = random.Random(seed)
    total = spec.valid_state_count
    return [unrank_state(rng.randrange(total), spec) for _ in range(n)]
