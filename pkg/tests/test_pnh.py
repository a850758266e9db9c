from pathlib import Path

import pytest

from qonline import pnh
from qonline.errors import (
    CapacityError,
    ConfigurationError,
    DomainError,
    PreconditionError,
    ValidationError,
)
from qonline.game import (
    ChannelKind,
    distributions_match,
    expected_cost,
    run_game,
    strict_competitive_ratio,
    wrap_randomized_as_quantum,
)
from qonline.instances import load_pnh_instances
from qonline.pnh import (
    FiniteStateReader,
    PnhInstance,
    PnhParams,
    PnhProblem,
    adversary_unrestricted,
    alg1_quantum,
    alg_advice_1bit,
    alg_advice_1qubit,
    alg_blind_guess,
    alg_guess_count,
    assemble,
    deterministic_strategies,
    fooling_pair_search,
    guardian_answers,
    parse_pnh_instance,
    partial_mod,
    pnh_adviser,
    pnh_cost,
    pnh_family,
    pnh_opt_cost,
)

FIXTURES = Path(__file__).parent / "fixtures"

R, W = 1.0, 3.0


def params(k):
    return PnhParams(k, R, W)


def example_instance():
    # PartialMODs (0, 1, 0), so z = (1, 1, 0)
    return parse_pnh_instance("2 1111 2 111111 2 1111", params(1))


def full_family():
    return [instance for k in (0, 1, 2) for instance in pnh_family(params(k))]


def test_partial_mod():
    assert partial_mod("1111", 1) == 0
    assert partial_mod("111111", 1) == 1
    assert partial_mod("0110110", 1) == 0


@pytest.mark.parametrize("bits", ["10101", "11", "0000"])
def test_partial_mod_outside_domain(bits):
    with pytest.raises(DomainError):
        partial_mod(bits, 1)


def test_instance_derived_fields():
    instance = example_instance()

    assert instance.block_lengths == (4, 6, 4)
    assert instance.multiplicities == (2, 3, 2)
    assert instance.partial_mods == (0, 1, 0)
    assert instance.guardian_values == (1, 1, 0)
    assert instance.guardian_positions == (0, 5, 12)


@pytest.mark.parametrize(
    "text",
    [
        "1111 2 1111 2 1111 2",  # must start with a guardian
        "2 1111 2 1111",  # two guardians
        "2 11 2 1111 2 1111",  # block shorter than 2^(k+1)
        "2 1110 2 1111 2 1111",  # ones not a multiple of 2^k
        "2 1100 2 1111 2 1111",  # v = 1
        "2 1131 2 1111 2 1111",  # bad symbol
    ],
)
def test_invalid_instances(text):
    with pytest.raises(ValidationError):
        parse_pnh_instance(text, params(1))


def test_params_validation():
    with pytest.raises(ValidationError):
        PnhParams(1, r=3.0, w=1.0)
    with pytest.raises(ValidationError):
        PnhParams(1, n=10)
    assert PnhParams(1, n=15).min_block_length == 4


def test_problem_checks_length_and_k():
    with pytest.raises(ValidationError):
        PnhProblem(PnhParams(1, R, W, n=20)).validate(example_instance())
    with pytest.raises(ValidationError):
        PnhProblem(params(0)).validate(example_instance())


def test_cost_compares_guardian_answers():
    instance = example_instance()

    assert pnh_cost(instance, (1, 1, 0), params(1)) == R
    assert pnh_cost(instance, (0, 0, 1), params(1)) == W
    assert pnh_opt_cost(instance, params(1)) == R


def test_cost_reads_guardians_from_full_output():
    instance = example_instance()
    output = [0] * len(instance)
    for position, answer in zip(instance.guardian_positions, (1, 1, 0)):
        output[position] = answer

    assert pnh_cost(instance, output, params(1)) == R
    with pytest.raises(ValidationError):
        guardian_answers(instance.symbols, [0, 0])


def test_quantum_algorithm_on_example():
    distribution = run_game(PnhProblem(params(1)), alg1_quantum(1), example_instance())
    instance = example_instance()

    outcomes = {
        guardian_answers(instance.symbols, b.output): (b.cost, b.probability)
        for b in distribution.branches
    }
    assert outcomes[(1, 1, 0)] == (R, pytest.approx(0.5))
    assert outcomes[(0, 0, 1)] == (W, pytest.approx(0.5))
    assert len(outcomes) == 2
    assert distribution.peak_qubits == 1


def test_quantum_algorithm_answers_ignore_the_last_block():
    problem = PnhProblem(params(1))
    first = run_game(problem, alg1_quantum(1), parse_pnh_instance("2 1111 2 111111 2 1111", params(1)))
    second = run_game(problem, alg1_quantum(1), parse_pnh_instance("2 1111 2 111111 2 1110", params(1)))

    assert first.output_probabilities() == pytest.approx(second.output_probabilities())
    assert first.peak_qubits == second.peak_qubits == 1


def test_quantum_algorithm_degenerate_k0():
    instance = parse_pnh_instance("2 111 2 11 2 1111", params(0))
    distribution = run_game(PnhProblem(params(0)), alg1_quantum(0), instance)

    assert expected_cost(distribution) == pytest.approx((R + W) / 2)
    for branch in distribution.branches:
        y = guardian_answers(instance.symbols, branch.output)
        assert y[1] == y[0] ^ 1
        assert y[2] == y[1]


def test_quantum_algorithm_is_conditionally_deterministic():
    for instance in full_family():
        problem = PnhProblem(params(instance.k))
        distribution = run_game(problem, alg1_quantum(instance.k), instance)

        assert distribution.cost_probabilities() == pytest.approx({R: 0.5, W: 0.5}, abs=1e-9)
        mods = instance.partial_mods
        for branch in distribution.branches:
            y = guardian_answers(instance.symbols, branch.output)
            assert y[1] == y[0] ^ mods[0]
            assert y[2] == y[1] ^ mods[1]


def test_family_covers_every_parity_pattern():
    for k in (0, 1, 2):
        family = pnh_family(params(k))
        assert {instance.partial_mods for instance in family} == {
            (a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)
        }
    assert len(full_family()) >= 24


def test_quantum_ratio_over_family():
    for k in (0, 1, 2):
        report = strict_competitive_ratio(PnhProblem(params(k)), alg1_quantum(k), pnh_family(params(k)))
        assert report.ratio == pytest.approx((R + W) / (2 * R), abs=1e-9)


def test_shuffled_instances_keep_costs():
    family = pnh_family(params(1), (6,), shuffles=2, seed=4)
    report = strict_competitive_ratio(PnhProblem(params(1)), alg1_quantum(1), family)

    assert len(family) == 24
    assert len({instance.symbols for instance in family}) > 8
    assert all(e.expected_cost == pytest.approx(2.0) for e in report.evaluations)


def test_guess_count_splits_r_and_w():
    distribution = run_game(PnhProblem(params(1)), alg_guess_count(1), example_instance())

    assert sorted(b.cost for b in distribution.branches) == [R, W]
    assert all(b.probability == pytest.approx(0.5) for b in distribution.branches)


def test_blind_guess_ratio():
    problem = PnhProblem(params(1))
    for instance in pnh_family(params(1)):
        distribution = run_game(problem, alg_blind_guess(), instance)
        assert len(distribution.branches) == 8
        assert [b.cost for b in distribution.branches].count(R) == 1
        assert expected_cost(distribution) == pytest.approx((R + 7 * W) / 8, abs=1e-9)


@pytest.mark.parametrize("make", [lambda k: alg_guess_count(k), lambda k: alg_blind_guess()])
def test_emulated_baselines_match(make):
    problem = PnhProblem(params(1))
    for instance in pnh_family(params(1)):
        original = run_game(problem, make(1), instance)
        for pure in (False, True):
            emulated = run_game(problem, wrap_randomized_as_quantum(make(1), pure=pure), instance)
            assert distributions_match(original, emulated, tol=1e-12)


def test_adviser_sends_first_guardian_value():
    assert pnh_adviser(example_instance()) == "1"


@pytest.mark.parametrize(
    "algorithm",
    [
        lambda k: alg_advice_1bit(k),
        lambda k: alg_advice_1bit(k, ChannelKind.PRIVATE_QUBITS),
        lambda k: alg_advice_1qubit(k),
    ],
)
def test_advice_algorithms_are_optimal(algorithm):
    for k in (0, 1, 2):
        problem = PnhProblem(params(k))
        report = strict_competitive_ratio(problem, algorithm(k), pnh_family(params(k)), adviser=pnh_adviser)
        assert report.ratio == pytest.approx(1.0)


def test_advice_channel_mismatch():
    with pytest.raises(ConfigurationError):
        alg_advice_1bit(1, ChannelKind.SHARED_EPR)
    with pytest.raises(ConfigurationError):
        pnh.QuantumParityAlgorithm(1, advice_channel=ChannelKind.CLASSICAL_BITS)


def test_adversary_against_constant_answers():
    constant_zero, constant_one = deterministic_strategies()[:2]

    against_zero = adversary_unrestricted(constant_zero, params(1))
    against_one = adversary_unrestricted(constant_one, params(1))

    assert against_zero.partial_mods == (0, 0, 1)
    assert against_zero.guardian_values == (1, 1, 1)
    assert against_one.partial_mods == (0, 0, 0)
    assert against_zero.block_lengths == (6, 6, 6)


def test_adversary_forces_w_on_every_strategy():
    strategies = deterministic_strategies()
    assert len(strategies) >= 5
    assert {"constant-0", "constant-1", "copy-last-answer", "majority-so-far", "alternating"} <= {
        s.name for s in strategies
    }
    for k in (0, 1, 2):
        problem = PnhProblem(params(k))
        for strategy in strategies:
            instance = adversary_unrestricted(strategy, params(k))
            assert expected_cost(run_game(problem, strategy, instance)) == W


def test_adversary_preconditions():
    with pytest.raises(PreconditionError):
        adversary_unrestricted(alg_advice_1bit(1), params(1))
    with pytest.raises(PreconditionError):
        adversary_unrestricted(alg_guess_count(1), params(1))


def test_fooling_pair_for_stateless_reader():
    pair = fooling_pair_search(FiniteStateReader.stateless(), 1, 6)

    assert pair is not None
    first, second = pair
    assert len(first) == len(second) == 6
    assert partial_mod(first, 1) == 0
    assert partial_mod(second, 1) == 1


def test_fooling_pair_for_parity_counter():
    reader = FiniteStateReader.ones_counter(2)
    first, second = fooling_pair_search(reader, 1, 6)

    assert reader.run(first) == reader.run(second)
    assert partial_mod(first, 1) != partial_mod(second, 1)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_full_counter_separates_parities(k):
    reader = FiniteStateReader.ones_counter(2 ** (k + 1))

    assert reader.memory_bits == k + 1
    assert fooling_pair_search(reader, k, 3 * 2**k + 2) is None


def test_fooling_pair_search_limits(monkeypatch):
    with pytest.raises(PreconditionError):
        fooling_pair_search(FiniteStateReader.stateless(), 1, 5)
    monkeypatch.setattr(pnh, "MAX_READER_STATES", 1)
    with pytest.raises(CapacityError):
        fooling_pair_search(FiniteStateReader.ones_counter(2), 1, 6)


def test_reader_rejects_dangling_transitions():
    with pytest.raises(ValidationError):
        FiniteStateReader(((0, 3),))


def test_instances_file():
    instances = load_pnh_instances(FIXTURES / "pnh_k1.txt", params(1))

    assert [i.partial_mods for i in instances] == [(0, 1, 0), (0, 1, 1), (0, 1, 0)]
    assert instances[0].symbols == assemble(["1111", "111111", "1111"])


def test_assemble_accepts_strings_and_int_blocks():
    assert assemble(["10", (0, 1), [1, 1]]) == (2, 1, 0, 2, 0, 1, 2, 1, 1)
    with pytest.raises(ValidationError):
        assemble(["12"])


def test_missing_instances_file():
    with pytest.raises(FileNotFoundError):
        load_pnh_instances(FIXTURES / "missing.txt", params(1))


def test_instance_equality_by_value():
    assert PnhInstance(example_instance().symbols, 1) == example_instance()
