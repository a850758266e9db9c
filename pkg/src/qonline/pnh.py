"""(n, k, r, w)-Parity-for-Number-of-Hats.

An instance is ``2, X_1, 2, X_2, 2, X_3`` with bit blocks ``X_i``. Each ``2``
is a guardian; guardian ``j`` must answer ``z_j``, the XOR of PartialMOD over
blocks ``j..3``. The cost is ``r`` when all three guardians are right and
``w`` otherwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from .errors import (
    CapacityError,
    ConfigurationError,
    DomainError,
    PreconditionError,
    ProtocolError,
    ValidationError,
)
from .game import (
    AdviceReceipt,
    AlgorithmKind,
    ChannelKind,
    ExecutionContext,
    OnlineAlgorithm,
    OnlineProblem,
    Resources,
    play_prefix,
)
from .qcore import QuantumRegister, apply_gate, hadamard, rot

logger = logging.getLogger(__name__)

GUARD = 2
GUARDIANS = 3
MAX_READER_STATES = 2**20

Bits = Union[str, Sequence[int]]


def as_bits(bits: Bits) -> Tuple[int, ...]:
    values = tuple(int(bit) for bit in bits)
    if any(bit not in (0, 1) for bit in values):
        raise ValidationError(f"block must be a bit string, got {bits!r}")
    return values


def split_blocks(symbols: Sequence[int]) -> Tuple[Tuple[int, ...], ...]:
    """Split ``2, X_1, 2, X_2, 2, X_3`` into its three blocks."""

    values = tuple(int(symbol) for symbol in symbols)
    if any(symbol not in (0, 1, GUARD) for symbol in values):
        raise ValidationError("symbols must be drawn from {0, 1, 2}")
    guards = [index for index, symbol in enumerate(values) if symbol == GUARD]
    if len(guards) != GUARDIANS or guards[0] != 0:
        raise ValidationError(
            f"instance must have the shape 2,X_1,2,X_2,2,X_3 (found {len(guards)} guardians)"
        )
    bounds = guards + [len(values)]
    return tuple(values[bounds[i] + 1 : bounds[i + 1]] for i in range(GUARDIANS))


def guardian_values(block_values: Sequence[int]) -> Tuple[int, ...]:
    """``z_j`` = XOR of the block values from ``j`` to the end."""

    values: List[int] = []
    acc = 0
    for value in reversed(block_values):
        acc ^= value
        values.append(acc)
    return tuple(reversed(values))


def partial_mod(bits: Bits, k: int) -> int:
    """Parity of ``v`` for a block with ``v * 2**k`` ones, ``v >= 2``."""

    ones = sum(as_bits(bits))
    unit = 2**k
    if ones % unit:
        raise DomainError(f"{ones} ones is not a multiple of 2^{k}")
    if ones // unit < 2:
        raise DomainError(f"PartialMOD needs at least {2 * unit} ones, got {ones}")
    return (ones // unit) % 2


@dataclass(frozen=True)
class PnhParams:
    k: int
    r: float = 1.0
    w: float = 3.0
    n: Optional[int] = None

    def __post_init__(self) -> None:
        if not isinstance(self.k, int) or self.k < 0:
            raise ValidationError(f"k must be a nonnegative integer, got {self.k!r}")
        if not 0 < self.r < self.w:
            raise ValidationError(f"costs must satisfy 0 < r < w, got r={self.r}, w={self.w}")
        if self.n is not None and self.n < 3 * self.min_block_length + GUARDIANS:
            raise ValidationError(
                f"n={self.n} is too short for blocks of length {self.min_block_length}"
            )

    @property
    def unit(self) -> int:
        return 2**self.k

    @property
    def min_block_length(self) -> int:
        return 2 ** (self.k + 1)

    @property
    def alpha(self) -> float:
        return math.pi / 2 ** (self.k + 1)


@dataclass(frozen=True)
class PnhInstance:
    symbols: Tuple[int, ...]
    k: int
    blocks: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        blocks = split_blocks(self.symbols)
        minimum = 2 ** (self.k + 1)
        for index, block in enumerate(blocks, start=1):
            if len(block) < minimum:
                raise ValidationError(f"block X_{index} has length {len(block)} < {minimum}")
            try:
                partial_mod(block, self.k)
            except DomainError as exc:
                raise ValidationError(f"block X_{index}: {exc}") from exc
        object.__setattr__(self, "blocks", blocks)

    @property
    def block_lengths(self) -> Tuple[int, ...]:
        return tuple(len(block) for block in self.blocks)

    @property
    def multiplicities(self) -> Tuple[int, ...]:
        return tuple(sum(block) // 2**self.k for block in self.blocks)

    @property
    def partial_mods(self) -> Tuple[int, ...]:
        return tuple(partial_mod(block, self.k) for block in self.blocks)

    @property
    def guardian_values(self) -> Tuple[int, ...]:
        return guardian_values(self.partial_mods)

    @property
    def guardian_positions(self) -> Tuple[int, ...]:
        return tuple(i for i, symbol in enumerate(self.symbols) if symbol == GUARD)

    def __len__(self) -> int:
        return len(self.symbols)


def guardian_answers(symbols: Sequence[int], output: Sequence[int]) -> Tuple[int, ...]:
    """The answers given at the guardian positions of a full output."""

    if len(output) == GUARDIANS:
        return tuple(int(y) for y in output)
    if len(output) != len(symbols):
        raise ValidationError(
            f"output has {len(output)} answers for an instance of length {len(symbols)}"
        )
    return tuple(int(output[i]) for i, symbol in enumerate(symbols) if symbol == GUARD)


def pnh_cost(instance: PnhInstance, output: Sequence[int], params: PnhParams) -> float:
    answers = guardian_answers(instance.symbols, output)
    return params.r if answers == instance.guardian_values else params.w


def pnh_opt_cost(instance: PnhInstance, params: PnhParams) -> float:
    return params.r


class PnhProblem(OnlineProblem):
    name = "pnh"

    def __init__(self, params: PnhParams) -> None:
        self.params = params

    def validate(self, instance: PnhInstance) -> None:
        if not isinstance(instance, PnhInstance):
            raise ValidationError(f"expected a PnhInstance, got {type(instance).__name__}")
        if instance.k != self.params.k:
            raise ValidationError(f"instance built for k={instance.k}, problem has k={self.params.k}")
        if self.params.n is not None and len(instance) != self.params.n:
            raise ValidationError(f"instance length {len(instance)} != n={self.params.n}")

    def requests(self, instance: PnhInstance) -> Sequence[int]:
        return instance.symbols

    def cost(self, instance: PnhInstance, output: Sequence[int]) -> float:
        return pnh_cost(instance, output, self.params)

    def opt_cost(self, instance: PnhInstance) -> float:
        return pnh_opt_cost(instance, self.params)


# Instances -------------------------------------------------------------------


def parse_pnh_instance(text: Union[str, Sequence[int]], params: PnhParams) -> PnhInstance:
    symbols = [int(ch) for ch in text if not str(ch).isspace()] if isinstance(text, str) else text
    try:
        return PnhInstance(tuple(symbols), params.k)
    except ValueError as exc:
        raise ValidationError(f"invalid PNH instance: {exc}") from exc


def parse_pnh_instances(text: str, params: PnhParams) -> List[PnhInstance]:
    """One instance per line; blank lines and ``#`` comments are ignored."""

    instances = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            instances.append(parse_pnh_instance(line, params))
    return instances


def format_pnh_instance(instance: PnhInstance) -> str:
    return "".join(str(symbol) for symbol in instance.symbols)


def _block_with(ones: int, length: int) -> Tuple[int, ...]:
    return (1,) * ones + (0,) * (length - ones)


def assemble(blocks: Sequence[Bits]) -> Tuple[int, ...]:
    symbols: List[int] = []
    for block in blocks:
        symbols.append(GUARD)
        symbols.extend(as_bits(block))
    return tuple(symbols)


def pnh_family(
    params: PnhParams,
    block_lengths: Optional[Sequence[int]] = None,
    *,
    shuffles: int = 0,
    seed: Optional[int] = 0,
) -> List[PnhInstance]:
    """Every feasible PartialMOD parity pattern for each block length.

    Blocks use the ones-first layout with the smallest admissible ``v`` of the
    required parity. ``shuffles`` adds that many seeded permutations of every
    base instance.
    """

    unit = params.unit
    if block_lengths is None:
        block_lengths = (2 * unit, 3 * unit, 4 * unit)
    rng = np.random.default_rng(seed)
    family: List[PnhInstance] = []
    for length in block_lengths:
        for pattern in product((0, 1), repeat=GUARDIANS):
            multiplicities = [2 + parity for parity in pattern]
            if any(v * unit > length for v in multiplicities):
                continue
            blocks = [_block_with(v * unit, length) for v in multiplicities]
            family.append(PnhInstance(assemble(blocks), params.k))
            for _ in range(shuffles):
                shuffled = [tuple(int(b) for b in rng.permutation(block)) for block in blocks]
                family.append(PnhInstance(assemble(shuffled), params.k))
    return family


# Algorithms ------------------------------------------------------------------


class QuantumParityAlgorithm(OnlineAlgorithm):
    """Single-qubit algorithm: rotate by ``pi / 2**(k+1)`` on each 1, measure at each 2.

    The first answer comes from measuring ``H|0>`` (or the advice qubit) before
    any input is read. A guardian measurement leaves the qubit in the basis
    state it reported, so re-measuring it at the first guardian is
    deterministic. Rotations after the last guardian never reach an output.
    """

    kind = AlgorithmKind.QUANTUM
    resources = Resources(classical_bits=0, qubits=1)

    def __init__(self, k: int, *, advice_channel: Optional[ChannelKind] = None) -> None:
        if advice_channel is not None and ChannelKind(advice_channel) is not ChannelKind.PRIVATE_QUBITS:
            raise ConfigurationError("the advice-qubit algorithm needs a private-qubit channel")
        self.k = k
        self.alpha = math.pi / 2 ** (k + 1)
        self.advice_channel = ChannelKind(advice_channel) if advice_channel else None
        self.name = "pnh-advice-qubit" if self.advice_channel else "pnh-alg1"

    def start(self, ctx: ExecutionContext, advice: Optional[AdviceReceipt]) -> QuantumRegister:
        if self.advice_channel is not None:
            if advice is None or len(advice.registers) != 1:
                raise ProtocolError("expected exactly one advice qubit")
            register = ctx.acquire(advice.registers[0])
        else:
            register = apply_gate(ctx.allocate(1), hadamard(0))
        return ctx.measure(register, (0,)).post_state

    def step(
        self, ctx: ExecutionContext, request: int, state: QuantumRegister
    ) -> Tuple[int, QuantumRegister]:
        if request == GUARD:
            outcome = ctx.measure(state, (0,))
            return outcome.value, outcome.post_state
        if request == 1:
            return 0, apply_gate(state, rot(0, self.alpha))
        return 0, state


@dataclass(frozen=True)
class _CountingState:
    parity: int
    counter: int


class _CountingParityAlgorithm(OnlineAlgorithm):
    """Answers ``p`` at every guardian; flips ``p`` after every ``2**k`` ones."""

    def __init__(self, k: int) -> None:
        self.k = k
        self.unit = 2**k

    def _initial_parity(self, ctx: ExecutionContext, advice: Optional[AdviceReceipt]) -> int:
        raise NotImplementedError

    def start(self, ctx: ExecutionContext, advice: Optional[AdviceReceipt]) -> _CountingState:
        return _CountingState(self._initial_parity(ctx, advice), 0)

    def step(
        self, ctx: ExecutionContext, request: int, state: _CountingState
    ) -> Tuple[int, _CountingState]:
        if request == GUARD:
            return state.parity, state
        if request == 1:
            counter = (state.counter + 1) % self.unit
            parity = state.parity ^ 1 if counter == 0 else state.parity
            return 0, _CountingState(parity, counter)
        return 0, state


class GuessCountAlgorithm(_CountingParityAlgorithm):
    name = "pnh-guess-count"
    kind = AlgorithmKind.RANDOMIZED

    def __init__(self, k: int) -> None:
        super().__init__(k)
        self.resources = Resources(classical_bits=k + 1, random_bits=1)

    def _initial_parity(self, ctx: ExecutionContext, advice: Optional[AdviceReceipt]) -> int:
        return ctx.random_bit()


class AdviceBitAlgorithm(_CountingParityAlgorithm):
    name = "pnh-advice-bit"
    kind = AlgorithmKind.DETERMINISTIC

    def __init__(self, k: int, channel: ChannelKind = ChannelKind.CLASSICAL_BITS) -> None:
        super().__init__(k)
        channel = ChannelKind(channel)
        if channel is ChannelKind.SHARED_EPR:
            raise ConfigurationError("the 1-bit advice algorithm uses a classical or private-qubit channel")
        self.advice_channel = channel
        self.resources = Resources(classical_bits=k + 1)

    def _initial_parity(self, ctx: ExecutionContext, advice: Optional[AdviceReceipt]) -> int:
        if advice is None or len(advice.bits) != 1:
            raise ProtocolError("expected exactly one advice bit")
        return int(advice.bits)


class BlindGuessAlgorithm(OnlineAlgorithm):
    name = "pnh-blind-guess"
    kind = AlgorithmKind.RANDOMIZED
    resources = Resources(classical_bits=0, random_bits=GUARDIANS)

    def step(self, ctx: ExecutionContext, request: int, state: None) -> Tuple[int, None]:
        if request == GUARD:
            return ctx.random_bit(), state
        return 0, state


def alg1_quantum(k: int) -> QuantumParityAlgorithm:
    return QuantumParityAlgorithm(k)


def alg_guess_count(k: int) -> GuessCountAlgorithm:
    return GuessCountAlgorithm(k)


def alg_blind_guess() -> BlindGuessAlgorithm:
    return BlindGuessAlgorithm()


def alg_advice_1bit(k: int, channel: ChannelKind = ChannelKind.CLASSICAL_BITS) -> AdviceBitAlgorithm:
    return AdviceBitAlgorithm(k, channel)


def alg_advice_1qubit(k: int) -> QuantumParityAlgorithm:
    return QuantumParityAlgorithm(k, advice_channel=ChannelKind.PRIVATE_QUBITS)


def pnh_adviser(instance: PnhInstance) -> str:
    """One advice bit: ``z_1``."""

    return str(instance.guardian_values[0])


# Deterministic strategies ----------------------------------------------------

GuardianRule = Callable[[Tuple[int, ...], Tuple[int, ...]], int]


@dataclass(frozen=True)
class _HistoryState:
    seen: Tuple[int, ...] = ()
    answers: Tuple[int, ...] = ()


class HistoryStrategy(OnlineAlgorithm):
    """Deterministic algorithm with unrestricted memory.

    ``rule(seen, answers)`` picks the guardian answer from every symbol read so
    far and the guardian answers already given.
    """

    kind = AlgorithmKind.DETERMINISTIC

    def __init__(self, name: str, rule: GuardianRule) -> None:
        self.name = name
        self.rule = rule

    def start(self, ctx: ExecutionContext, advice: Optional[AdviceReceipt]) -> _HistoryState:
        return _HistoryState()

    def step(
        self, ctx: ExecutionContext, request: int, state: _HistoryState
    ) -> Tuple[int, _HistoryState]:
        if request != GUARD:
            return 0, _HistoryState(state.seen + (request,), state.answers)
        answer = int(self.rule(state.seen, state.answers)) & 1
        return answer, _HistoryState(state.seen + (request,), state.answers + (answer,))


def _bits_seen(seen: Tuple[int, ...]) -> List[int]:
    return [symbol for symbol in seen if symbol != GUARD]


def _constant_zero(seen: Tuple[int, ...], answers: Tuple[int, ...]) -> int:
    return 0


def _constant_one(seen: Tuple[int, ...], answers: Tuple[int, ...]) -> int:
    return 1


def _copy_last_bit(seen: Tuple[int, ...], answers: Tuple[int, ...]) -> int:
    bits = _bits_seen(seen)
    return bits[-1] if bits else 0


def _majority_so_far(seen: Tuple[int, ...], answers: Tuple[int, ...]) -> int:
    bits = _bits_seen(seen)
    return int(2 * sum(bits) > len(bits))


def _parity_of_ones(seen: Tuple[int, ...], answers: Tuple[int, ...]) -> int:
    return sum(_bits_seen(seen)) % 2


def _alternating(seen: Tuple[int, ...], answers: Tuple[int, ...]) -> int:
    return len(answers) % 2


def _copy_last_answer(seen: Tuple[int, ...], answers: Tuple[int, ...]) -> int:
    return answers[-1] if answers else 0


def _flip_last_answer(seen: Tuple[int, ...], answers: Tuple[int, ...]) -> int:
    return 1 - answers[-1] if answers else 1


def deterministic_strategies() -> List[HistoryStrategy]:
    return [
        HistoryStrategy("constant-0", _constant_zero),
        HistoryStrategy("constant-1", _constant_one),
        HistoryStrategy("copy-last-bit", _copy_last_bit),
        HistoryStrategy("copy-last-answer", _copy_last_answer),
        HistoryStrategy("majority-so-far", _majority_so_far),
        HistoryStrategy("parity-of-ones", _parity_of_ones),
        HistoryStrategy("alternating", _alternating),
        HistoryStrategy("flip-last-answer", _flip_last_answer),
    ]


# Adversaries -----------------------------------------------------------------


def adversarial_symbols(
    algorithm: OnlineAlgorithm,
    zero_block: Sequence[int],
    one_block: Sequence[int],
) -> Tuple[int, ...]:
    """Complete ``2, Z, 2, Z, 2`` so that at least two guardians are wrong.

    ``zero_block`` and ``one_block`` are blocks whose value (PartialMOD, EQ,
    ...) is 0 and 1. With value-0 blocks first, every ``z_j`` equals the value
    of the last block, which is chosen against the majority answer.
    """

    if algorithm.kind is not AlgorithmKind.DETERMINISTIC or algorithm.advice_channel is not None:
        raise PreconditionError(
            f"{algorithm.name} is not a deterministic algorithm without advice"
        )
    zero, one = tuple(zero_block), tuple(one_block)
    prefix = assemble((zero, zero)) + (GUARD,)
    answers = play_prefix(algorithm, prefix)
    guardians = [answers[i] for i, symbol in enumerate(prefix) if symbol == GUARD]
    majority = int(sum(guardians) >= 2)
    logger.debug("%s answered %s on the prefix; majority %d", algorithm.name, guardians, majority)
    return prefix + (zero if majority == 1 else one)


def adversary_unrestricted(algorithm: OnlineAlgorithm, params: PnhParams) -> PnhInstance:
    """Instance of block length ``3 * 2**k`` on which ``algorithm`` pays ``w``."""

    unit = params.unit
    length = 3 * unit
    zero_block = _block_with(2 * unit, length)
    one_block = _block_with(3 * unit, length)
    return PnhInstance(adversarial_symbols(algorithm, zero_block, one_block), params.k)


# Fooling pairs ---------------------------------------------------------------


@dataclass(frozen=True)
class FiniteStateReader:
    """Deterministic reader of a bit block; ``transitions[state][bit]`` is the next state."""

    transitions: Tuple[Tuple[int, int], ...]
    start: int = 0

    def __post_init__(self) -> None:
        transitions = tuple((int(a), int(b)) for a, b in self.transitions)
        size = len(transitions)
        if size == 0:
            raise ValidationError("reader needs at least one state")
        if not 0 <= self.start < size or any(not 0 <= t < size for pair in transitions for t in pair):
            raise ValidationError("transition target out of range")
        object.__setattr__(self, "transitions", transitions)

    @property
    def num_states(self) -> int:
        return len(self.transitions)

    @property
    def memory_bits(self) -> int:
        return math.ceil(math.log2(self.num_states)) if self.num_states > 1 else 0

    def run(self, bits: Bits) -> int:
        state = self.start
        for bit in as_bits(bits):
            state = self.transitions[state][bit]
        return state

    @classmethod
    def stateless(cls) -> "FiniteStateReader":
        return cls(((0, 0),))

    @classmethod
    def ones_counter(cls, modulus: int) -> "FiniteStateReader":
        return cls(tuple((state, (state + 1) % modulus) for state in range(modulus)))


def _witness(graph: nx.DiGraph, source: Tuple[int, int, int], target: Tuple[int, int, int]) -> str:
    path = nx.shortest_path(graph, source, target)
    return "".join(str(graph.edges[u, v]["bit"]) for u, v in zip(path, path[1:]))


def fooling_pair_search(
    reader: FiniteStateReader, k: int, length: int
) -> Optional[Tuple[str, str]]:
    """Two valid blocks of ``length`` with different PartialMOD and the same final state.

    Nodes of the search graph are ``(position, state, ones)``; the first block
    of the returned pair has PartialMOD 0. ``None`` means the reader separates
    the parities at this length.
    """

    if reader.num_states > MAX_READER_STATES:
        raise CapacityError(f"reader has {reader.num_states} states (limit {MAX_READER_STATES})")
    unit = 2**k
    if length < 3 * unit:
        raise PreconditionError(f"block length must be at least 3*2^{k} = {3 * unit}")

    source = (0, reader.start, 0)
    graph = nx.DiGraph()
    graph.add_node(source)
    frontier = [source]
    for position in range(length):
        layer: Dict[Tuple[int, int, int], None] = {}
        for node in frontier:
            _, state, ones = node
            for bit in (0, 1):
                successor = (position + 1, reader.transitions[state][bit], ones + bit)
                if successor not in layer:
                    layer[successor] = None
                if not graph.has_edge(node, successor):
                    graph.add_edge(node, successor, bit=bit)
        frontier = list(layer)

    finals: Dict[int, Dict[int, Tuple[int, int, int]]] = {}
    for node in sorted(frontier):
        _, state, ones = node
        if ones % unit or ones // unit < 2:
            continue
        finals.setdefault(state, {}).setdefault((ones // unit) % 2, node)

    for state in sorted(finals):
        by_parity = finals[state]
        if len(by_parity) == 2:
            return _witness(graph, source, by_parity[0]), _witness(graph, source, by_parity[1])
    logger.info(
        "no fooling pair for a %d-state reader at k=%d, length %d", reader.num_states, k, length
    )
    return None


__all__ = [
    "AdviceBitAlgorithm",
    "BlindGuessAlgorithm",
    "FiniteStateReader",
    "GUARD",
    "GuessCountAlgorithm",
    "HistoryStrategy",
    "PnhInstance",
    "PnhParams",
    "PnhProblem",
    "QuantumParityAlgorithm",
    "adversarial_symbols",
    "adversary_unrestricted",
    "alg1_quantum",
    "alg_advice_1bit",
    "alg_advice_1qubit",
    "alg_blind_guess",
    "alg_guess_count",
    "as_bits",
    "assemble",
    "deterministic_strategies",
    "fooling_pair_search",
    "format_pnh_instance",
    "guardian_answers",
    "guardian_values",
    "parse_pnh_instance",
    "parse_pnh_instances",
    "partial_mod",
    "pnh_adviser",
    "pnh_cost",
    "pnh_family",
    "pnh_opt_cost",
    "split_blocks",
]
