import math
from pathlib import Path

import pytest

from qonline.errors import ConfigurationError, ProtocolError, ValidationError
from qonline.game import ChannelKind, run_game
from qonline.instances import load_paging_instances
from qonline.paging import (
    NO_EVICTION,
    PagingInstance,
    PagingProblem,
    alg_paging_with_advice,
    belady,
    brute_force_min_faults,
    format_paging_instance,
    next_uses,
    paging_advice_bits,
    paging_adviser,
    parse_paging_instance,
    random_paging_instances,
    replay_faults,
)

FIXTURES = Path(__file__).parent / "fixtures"

SMALL = PagingInstance(3, 2, (1, 2, 3, 1, 2))


def test_instance_validation():
    with pytest.raises(ValidationError):
        PagingInstance(1, 1, (1,))
    with pytest.raises(ValidationError):
        PagingInstance(3, 3, (1,))
    with pytest.raises(ValidationError):
        PagingInstance(3, 2, ())
    with pytest.raises(ValidationError):
        PagingInstance(3, 2, (1, 4))


def test_next_uses():
    assert next_uses((1, 2, 1, 1)) == [2, math.inf, 3, math.inf]


def test_belady_on_small_instance():
    run = belady(SMALL)

    assert run.fault_count == 4
    assert run.evictions == ((2, 2), (4, 1))
    assert run.final_cache == (2, 3)
    assert run.answers == (NO_EVICTION, NO_EVICTION, 2, NO_EVICTION, 1)


def test_belady_on_classic_sequence():
    instance = PagingInstance(5, 3, (1, 2, 3, 4, 1, 2, 5, 1, 2, 3, 4, 5))

    assert belady(instance).fault_count == 7
    assert brute_force_min_faults(instance) == 7


def test_advice_bits_mark_pages_kept_until_reuse():
    assert paging_advice_bits(SMALL) == "10000"
    assert paging_adviser(SMALL) == "10000"


def test_repeated_page_faults_once():
    run = belady(PagingInstance(2, 1, (1, 1, 1, 1)))

    assert run.fault_count == 1
    assert run.evictions == ()


def test_cache_holding_every_page_only_takes_cold_faults():
    instance = PagingInstance(4, 3, (1, 2, 3, 1, 2, 3, 1))
    distribution = run_game(PagingProblem(), alg_paging_with_advice(3), instance, adviser=paging_adviser)

    assert belady(instance).fault_count == 3
    assert distribution.branches[0].cost == 3
    assert set(distribution.branches[0].output) == {NO_EVICTION}


def test_advice_bits_on_short_instances():
    assert paging_advice_bits(PagingInstance(2, 1, (1, 1))) == "10"
    assert paging_advice_bits(PagingInstance(2, 1, (1,))) == "0"


def test_belady_matches_brute_force():
    for instance in random_paging_instances(50, seed=1, max_length=14):
        assert belady(instance).fault_count == brute_force_min_faults(instance), format_paging_instance(instance)


@pytest.mark.parametrize("channel", list(ChannelKind))
def test_advice_algorithm_is_optimal(channel):
    problem = PagingProblem()
    for instance in random_paging_instances(40, seed=2):
        distribution = run_game(
            problem, alg_paging_with_advice(instance.cache_size, channel), instance, adviser=paging_adviser
        )
        (branch,) = distribution.branches
        assert branch.cost == belady(instance).fault_count
        transcript = distribution.transcript
        if channel is ChannelKind.SHARED_EPR:
            assert transcript.qubits_sent == math.ceil(len(instance) / 2)
        else:
            assert transcript.advice_units == len(instance)


def test_advice_algorithm_answers_on_small_instance():
    distribution = run_game(PagingProblem(), alg_paging_with_advice(2), SMALL, adviser=paging_adviser)

    assert distribution.branches[0].output == (0, 0, 2, 0, 1)


def test_advice_length_must_match_requests():
    problem = PagingProblem()
    with pytest.raises(ProtocolError):
        run_game(problem, alg_paging_with_advice(2), SMALL, adviser=lambda instance: "1000")
    with pytest.raises(ProtocolError):
        run_game(problem, alg_paging_with_advice(2), SMALL, adviser=lambda instance: "100000")


def test_cache_size_must_be_positive():
    with pytest.raises(ConfigurationError):
        alg_paging_with_advice(0)


def test_replay_rejects_infeasible_answers():
    assert replay_faults(SMALL, (0, 0, 1, 3, 0)) == 4
    with pytest.raises(ValidationError):
        replay_faults(SMALL, (0, 0, 0, 0, 0))
    with pytest.raises(ValidationError):
        replay_faults(SMALL, (0, 1, 2, 0, 1))
    with pytest.raises(ValidationError):
        replay_faults(SMALL, (0, 0, 3, 0, 1))
    with pytest.raises(ValidationError):
        replay_faults(SMALL, (0, 0))


def test_parse_and_format():
    instance = parse_paging_instance("3 2\n1 2 3 1 2")

    assert instance == SMALL
    assert format_paging_instance(instance) == "3 2\n1 2 3 1 2"
    with pytest.raises(ValidationError):
        parse_paging_instance("3 2 1\n1 2")
    with pytest.raises(ValidationError):
        parse_paging_instance("3 x\n1 2")


def test_instances_file():
    instances = load_paging_instances(FIXTURES / "paging.txt")

    assert instances[0] == SMALL
    assert [belady(instance).fault_count for instance in instances] == [4, 7]


def test_random_instances_are_seeded_and_valid():
    first = random_paging_instances(20, seed=5)

    assert first == random_paging_instances(20, seed=5)
    assert all(1 <= i.cache_size < i.num_pages for i in first)
