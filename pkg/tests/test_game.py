import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qonline.errors import (
    BranchCapExceeded,
    ConfigurationError,
    PreconditionError,
    ProtocolError,
    ValidationError,
)
from qonline.game import (
    AlgorithmKind,
    Branch,
    ChannelKind,
    CompetitiveReport,
    InstanceEvaluation,
    OnlineAlgorithm,
    OnlineProblem,
    OutcomeDistribution,
    Resources,
    additive_constant,
    advice_transmit,
    derive_seeds,
    distributions_match,
    expected_cost,
    monte_carlo_cost,
    play_prefix,
    run_game,
    strict_competitive_ratio,
    wrap_randomized_as_quantum,
)
from qonline.qcore import apply_gate, hadamard


class SumProblem(OnlineProblem):
    """Cost is one plus the number of 1 answers."""

    name = "sum"

    def validate(self, instance):
        if not isinstance(instance, tuple):
            raise ValidationError("instance must be a tuple")

    def requests(self, instance):
        return instance

    def cost(self, instance, output):
        return float(1 + sum(output))

    def opt_cost(self, instance):
        return 1.0


class CoinFlipper(OnlineAlgorithm):
    name = "coins"
    kind = AlgorithmKind.RANDOMIZED

    def __init__(self, random_bits):
        self.resources = Resources(classical_bits=0, random_bits=random_bits)

    def step(self, ctx, request, state):
        return ctx.random_bit(), state


class Zeros(OnlineAlgorithm):
    name = "zeros"

    def step(self, ctx, request, state):
        return 0, state


class QubitHog(OnlineAlgorithm):
    name = "hog"
    kind = AlgorithmKind.QUANTUM
    resources = Resources(classical_bits=0, qubits=1)

    def step(self, ctx, request, state):
        register = apply_gate(ctx.allocate(2), hadamard(0))
        return ctx.measure(register, (0,)).value, state


class AdviceEcho(OnlineAlgorithm):
    """Answers request ``i`` with advice bit ``i``."""

    name = "echo"

    def __init__(self, channel=ChannelKind.CLASSICAL_BITS):
        self.advice_channel = channel

    def start(self, ctx, advice):
        return (advice.bits, 0)

    def step(self, ctx, request, state):
        bits, position = state
        return int(bits[position]), (bits, position + 1)


def test_classical_advice_passes_bits_through():
    receipt = advice_transmit("classical-bits", "1011")

    assert receipt.bits == "1011"
    assert receipt.transcript.bits_sent == 4
    assert receipt.transcript.advice_units == 4
    assert receipt.registers == ()


def test_private_qubit_advice_keeps_one_register_per_bit():
    receipt = advice_transmit(ChannelKind.PRIVATE_QUBITS, "10")

    assert receipt.bits == "10"
    assert receipt.transcript.qubits_sent == 2
    assert [r.num_qubits for r in receipt.registers] == [1, 1]


def test_advice_must_be_a_bit_string():
    with pytest.raises(ValidationError):
        advice_transmit(ChannelKind.CLASSICAL_BITS, "012")


@given(st.text(alphabet="01", max_size=64))
@settings(max_examples=100, deadline=None)
def test_shared_pair_advice_is_lossless_and_halved(bits):
    receipt = advice_transmit(ChannelKind.SHARED_EPR, bits)

    assert receipt.bits == bits
    assert receipt.transcript.qubits_sent == math.ceil(len(bits) / 2)
    assert receipt.transcript.setup_qubits == math.ceil(len(bits) / 2)


def every_bit_string(max_length):
    for length in range(max_length + 1):
        for bits in product("01", repeat=length):
            yield "".join(bits)


# quantum channels simulate every qubit, so their exhaustive bound is lower
@pytest.mark.parametrize(
    "channel, max_length",
    [(ChannelKind.CLASSICAL_BITS, 16), (ChannelKind.PRIVATE_QUBITS, 10), (ChannelKind.SHARED_EPR, 10)],
)
def test_advice_is_lossless_on_every_short_string(channel, max_length):
    for bits in every_bit_string(max_length):
        receipt = advice_transmit(channel, bits)
        assert receipt.bits == bits
        expected_units = math.ceil(len(bits) / 2) if channel is ChannelKind.SHARED_EPR else len(bits)
        assert receipt.transcript.advice_units == expected_units


@pytest.mark.parametrize("channel", list(ChannelKind))
def test_advice_is_lossless_on_long_random_strings(channel):
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        length = int(rng.integers(17, 65))
        bits = "".join(str(bit) for bit in rng.integers(0, 2, size=length))
        assert advice_transmit(channel, bits).bits == bits


def test_exact_mode_enumerates_every_coin_outcome():
    distribution = run_game(SumProblem(), CoinFlipper(2), (0, 0))

    assert len(distribution.branches) == 4
    assert distribution.output_probabilities() == pytest.approx(
        {(0, 0): 0.25, (0, 1): 0.25, (1, 0): 0.25, (1, 1): 0.25}
    )
    assert expected_cost(distribution) == pytest.approx(2.0)
    assert distribution.cost_probabilities() == pytest.approx({1.0: 0.25, 2.0: 0.5, 3.0: 0.25})


def test_sample_mode_is_reproducible():
    first = run_game(SumProblem(), CoinFlipper(5), (0,) * 5, "sample", seed=11)
    second = run_game(SumProblem(), CoinFlipper(5), (0,) * 5, "sample", seed=11)

    assert first.output == second.output
    assert first.probability == pytest.approx(1 / 32)


class RevealLog:
    """Iterable of requests that logs each one as it is handed out."""

    def __init__(self, values, log):
        self.values = values
        self.log = log

    def __iter__(self):
        for index, value in enumerate(self.values):
            self.log.append(("request", index))
            yield value

    def __len__(self):
        return len(self.values)


class RevealingProblem(SumProblem):
    def __init__(self):
        self.log = []

    def requests(self, instance):
        return RevealLog(instance, self.log)

    def describe(self, instance):
        return "".join(str(request) for request in instance)


class CommittingCoins(OnlineAlgorithm):
    name = "committing"
    kind = AlgorithmKind.RANDOMIZED

    def __init__(self, log, random_bits):
        self.log = log
        self.resources = Resources(classical_bits=0, random_bits=random_bits)

    def start(self, ctx, advice):
        return 0

    def step(self, ctx, request, state):
        answer = ctx.random_bit()
        self.log.append(("answer", state))
        return answer, state + 1


@pytest.mark.parametrize("mode", ["exact", "sample"])
def test_next_request_waits_for_the_previous_answer(mode):
    problem = RevealingProblem()
    instance = (0, 1, 0, 1)

    run_game(problem, CommittingCoins(problem.log, len(instance)), instance, mode, seed=4)

    assert problem.log
    for position, event in enumerate(problem.log):
        kind, index = event
        if kind == "answer":
            assert problem.log[position - 1] == ("request", index)
        elif index > 0:
            assert problem.log[position - 1] == ("answer", index - 1)
    assert ("answer", len(instance) - 1) in problem.log


def test_unknown_mode_is_rejected():
    with pytest.raises(ConfigurationError):
        run_game(SumProblem(), Zeros(), (0,), "lazy")


def test_invalid_instance_is_rejected():
    with pytest.raises(ValidationError):
        run_game(SumProblem(), Zeros(), [0])


def test_branch_cap_is_enforced():
    with pytest.raises(BranchCapExceeded):
        run_game(SumProblem(), CoinFlipper(10), (0,) * 10, branch_cap=100)


def test_random_bit_budget_is_audited():
    with pytest.raises(ProtocolError):
        run_game(SumProblem(), CoinFlipper(1), (0, 0))


def test_qubit_budget_is_audited():
    with pytest.raises(ProtocolError):
        run_game(SumProblem(), QubitHog(), (0,))


def test_advice_wiring_errors():
    with pytest.raises(ConfigurationError):
        run_game(SumProblem(), AdviceEcho(), (0, 0))
    with pytest.raises(ConfigurationError):
        run_game(SumProblem(), Zeros(), (0,), adviser=lambda instance: "1")


def test_advice_reaches_the_algorithm():
    distribution = run_game(SumProblem(), AdviceEcho(), (0, 0, 0), adviser=lambda instance: "101")

    (branch,) = distribution.branches
    assert branch.output == (1, 0, 1)
    assert distribution.transcript.bits_sent == 3


def test_expected_cost_rejects_incomplete_distributions():
    broken = OutcomeDistribution([Branch((0,), 1.0, 0.5)])

    with pytest.raises(ValidationError):
        expected_cost(broken)


def test_play_prefix_refuses_probabilistic_choices():
    assert play_prefix(Zeros(), (2, 0, 2)) == (0, 0, 0)
    with pytest.raises(PreconditionError):
        play_prefix(CoinFlipper(1), (0,))


def test_strict_ratio_takes_the_worst_instance():
    instances = [(0,), (0, 0, 0)]
    report = strict_competitive_ratio(SumProblem(), CoinFlipper(3), instances)

    assert [e.expected_cost for e in report.evaluations] == pytest.approx([1.5, 2.5])
    assert report.ratio == pytest.approx(2.5)
    assert report.witness.branch_count == 8


def test_strict_ratio_calls_inspect_per_instance():
    seen = []
    strict_competitive_ratio(
        SumProblem(), Zeros(), [(0,), (0, 0)], inspect=lambda i, d: seen.append((i, len(d.branches)))
    )

    assert seen == [((0,), 1), ((0, 0), 1)]


def test_empty_family_has_no_ratio():
    with pytest.raises(PreconditionError):
        strict_competitive_ratio(SumProblem(), Zeros(), [])
    with pytest.raises(PreconditionError):
        CompetitiveReport().ratio


def test_additive_constant():
    report = CompetitiveReport(
        [
            InstanceEvaluation("a", "x", expected_cost=5.0, opt_cost=2.0, branch_count=1),
            InstanceEvaluation("b", "y", expected_cost=3.0, opt_cost=2.0, branch_count=1),
        ]
    )

    assert additive_constant(report, 2.0) == pytest.approx(1.0)
    assert report.additive_constant(3.0) == 0.0


def test_derive_seeds_depends_only_on_root():
    first = [s.generate_state(1)[0] for s in derive_seeds(7, 3)]
    second = [s.generate_state(1)[0] for s in derive_seeds(np.random.SeedSequence(7), 3)]

    assert first == second
    assert len(set(first)) == 3


def test_monte_carlo_cost_is_seeded():
    first = monte_carlo_cost(SumProblem(), CoinFlipper(2), (0, 0), 400, seed=5)
    second = monte_carlo_cost(SumProblem(), CoinFlipper(2), (0, 0), 400, seed=5)

    assert first == second
    assert first[0] == pytest.approx(2.0, abs=0.2)
    assert first[1] == 4
    with pytest.raises(PreconditionError):
        monte_carlo_cost(SumProblem(), CoinFlipper(2), (0, 0), 0)


def test_emulation_reproduces_the_distribution():
    algorithm = CoinFlipper(3)
    wrapped = wrap_randomized_as_quantum(algorithm)

    original = run_game(SumProblem(), algorithm, (0, 0, 0))
    emulated = run_game(SumProblem(), wrapped, (0, 0, 0))

    assert distributions_match(original, emulated, tol=1e-12)
    assert wrapped.kind is AlgorithmKind.QUANTUM
    assert wrapped.resources.qubits == 1
    assert emulated.peak_qubits == 1


def test_pure_emulation_moves_memory_into_qubits():
    class Counter(CoinFlipper):
        def __init__(self):
            self.resources = Resources(classical_bits=2, random_bits=1)

    hybrid = wrap_randomized_as_quantum(Counter())
    pure = wrap_randomized_as_quantum(Counter(), pure=True)

    assert hybrid.kind is AlgorithmKind.HYBRID
    assert hybrid.resources == Resources(classical_bits=2, qubits=1)
    assert pure.kind is AlgorithmKind.QUANTUM
    assert pure.resources == Resources(classical_bits=0, qubits=3)
    # only the coin qubit is simulated; the memory qubits are declared, not allocated
    assert run_game(SumProblem(), pure, (0,)).peak_qubits == 1


def test_pure_emulation_needs_bounded_memory():
    unbounded = CoinFlipper(1)
    unbounded.resources = Resources(random_bits=1)

    with pytest.raises(PreconditionError):
        wrap_randomized_as_quantum(unbounded, pure=True)


def test_emulation_can_move_advice_onto_shared_pairs():
    wrapped = wrap_randomized_as_quantum(AdviceEcho(), advice_channel="shared-epr")

    distribution = run_game(SumProblem(), wrapped, (0, 0, 0), adviser=lambda instance: "011")

    assert distribution.branches[0].output == (0, 1, 1)
    assert distribution.transcript.qubits_sent == 2


def test_emulation_rejects_quantum_algorithms():
    with pytest.raises(PreconditionError):
        wrap_randomized_as_quantum(QubitHog())
