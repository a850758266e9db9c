"""Request-answer game engine.

An :class:`OnlineAlgorithm` is fed the requests of an instance one at a time
through :func:`run_game`. Every random bit, noisy oracle and quantum
measurement goes through an :class:`ExecutionContext`, which lets the engine
either draw one outcome (sample mode) or enumerate the full outcome tree
(exact mode). Exact enumeration replays the game from the start with a script
of choice indices; when the script runs out the context forks and each
extension is queued.
"""

from __future__ import annotations

import hashlib
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    Any,
    Callable,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
    Union,
)

import numpy as np

from .errors import (
    BranchCapExceeded,
    ConfigurationError,
    PreconditionError,
    ProtocolError,
    ValidationError,
)
from .qcore import (
    PRUNE_THRESHOLD,
    BranchOutcome,
    QuantumRegister,
    SeedLike,
    apply_gate,
    apply_gates,
    basis_register,
    hadamard,
    init_register,
    make_epr_pair,
    make_rng,
    measure_branches,
    superdense_decode,
    superdense_encode,
)

logger = logging.getLogger(__name__)

BRANCH_CAP = 2**20
PROBABILITY_TOLERANCE = 1e-9

T = TypeVar("T")
Adviser = Callable[[Any], str]


class AlgorithmKind(str, Enum):
    DETERMINISTIC = "deterministic"
    RANDOMIZED = "randomized"
    QUANTUM = "quantum"
    HYBRID = "hybrid"


class ChannelKind(str, Enum):
    CLASSICAL_BITS = "classical-bits"
    PRIVATE_QUBITS = "private-qubits"
    SHARED_EPR = "shared-epr"


@dataclass(frozen=True)
class Resources:
    """Declared resources; ``classical_bits=None`` means unrestricted memory."""

    classical_bits: Optional[int] = None
    qubits: int = 0
    random_bits: int = 0


# Advice ----------------------------------------------------------------------


@dataclass(frozen=True)
class AdviceTranscript:
    """What crossed the channel between adviser and algorithm."""

    kind: ChannelKind
    bits_sent: int = 0
    qubits_sent: int = 0
    # EPR halves the algorithm hands to the adviser before the game starts.
    setup_qubits: int = 0

    @property
    def advice_units(self) -> int:
        if self.kind is ChannelKind.CLASSICAL_BITS:
            return self.bits_sent
        return self.qubits_sent


@dataclass(frozen=True, eq=False)
class AdviceReceipt:
    bits: str
    transcript: AdviceTranscript
    registers: Tuple[QuantumRegister, ...] = ()


def _check_bit_string(bits: str) -> str:
    if not isinstance(bits, str) or any(bit not in "01" for bit in bits):
        raise ValidationError(f"advice must be a string over {{0, 1}}, got {bits!r}")
    return bits


def advice_transmit(kind: Union[ChannelKind, str], bits: str) -> AdviceReceipt:
    """Carry ``bits`` from the adviser to the algorithm over a channel of ``kind``."""

    kind = ChannelKind(kind)
    bits = _check_bit_string(bits)

    if kind is ChannelKind.CLASSICAL_BITS:
        return AdviceReceipt(bits, AdviceTranscript(kind, bits_sent=len(bits)))

    if kind is ChannelKind.PRIVATE_QUBITS:
        received: List[str] = []
        registers: List[QuantumRegister] = []
        for bit in bits:
            (outcome,) = measure_branches(basis_register(bit), (0,))
            received.append(outcome.measured_bits)
            registers.append(outcome.post_state)
        return AdviceReceipt(
            "".join(received),
            AdviceTranscript(kind, qubits_sent=len(bits)),
            tuple(registers),
        )

    padded = bits + "0" * (len(bits) % 2)
    decoded: List[str] = []
    for offset in range(0, len(padded), 2):
        encoded = apply_gates(make_epr_pair(), superdense_encode(padded[offset : offset + 2]))
        decoded.append(superdense_decode(encoded))
    pairs = len(padded) // 2
    logger.debug("sent %d advice bits over %d shared pairs", len(bits), pairs)
    return AdviceReceipt(
        "".join(decoded)[: len(bits)],
        AdviceTranscript(kind, qubits_sent=pairs, setup_qubits=pairs),
    )


# Problems and algorithms -----------------------------------------------------


class OnlineProblem(ABC):
    """An online minimization problem."""

    name: str = "problem"

    @abstractmethod
    def validate(self, instance: Any) -> None:
        """Raise :class:`ValidationError` unless ``instance`` is a valid input."""

    @abstractmethod
    def requests(self, instance: Any) -> Sequence[int]:
        ...

    @abstractmethod
    def cost(self, instance: Any, output: Sequence[int]) -> float:
        ...

    @abstractmethod
    def opt_cost(self, instance: Any) -> float:
        ...

    def describe(self, instance: Any) -> str:
        return "".join(str(request) for request in self.requests(instance))

    def digest(self, instance: Any) -> str:
        return hashlib.sha256(self.describe(instance).encode("utf-8")).hexdigest()[:16]


class OnlineAlgorithm(ABC):
    """Serves requests one at a time; state is threaded through explicitly."""

    name: str = "algorithm"
    kind: AlgorithmKind = AlgorithmKind.DETERMINISTIC
    resources: Resources = Resources()
    advice_channel: Optional[ChannelKind] = None

    def start(self, ctx: "ExecutionContext", advice: Optional[AdviceReceipt]) -> Any:
        return None

    @abstractmethod
    def step(self, ctx: "ExecutionContext", request: int, state: Any) -> Tuple[int, Any]:
        ...

    def finish(self, ctx: "ExecutionContext", state: Any) -> None:
        """Called once after the last request."""

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


# Execution context -----------------------------------------------------------


class _Fork(Exception):
    """Raised by the replay chooser when the script is exhausted."""

    def __init__(self, width: int) -> None:
        super().__init__(width)
        self.width = width


class _Chooser(ABC):
    def __init__(self) -> None:
        self.probability = 1.0

    @abstractmethod
    def pick(self, probabilities: Sequence[float]) -> int:
        ...


class _ReplayChooser(_Chooser):
    def __init__(self, script: Tuple[int, ...]) -> None:
        super().__init__()
        self._script = script
        self._position = 0

    def pick(self, probabilities: Sequence[float]) -> int:
        if self._position >= len(self._script):
            raise _Fork(len(probabilities))
        index = self._script[self._position]
        self._position += 1
        self.probability *= probabilities[index]
        return index


class _SampleChooser(_Chooser):
    def __init__(self, rng: np.random.Generator) -> None:
        super().__init__()
        self._rng = rng

    def pick(self, probabilities: Sequence[float]) -> int:
        index = int(self._rng.choice(len(probabilities), p=probabilities))
        self.probability *= probabilities[index]
        return index


class _NoChoice(_Chooser):
    def pick(self, probabilities: Sequence[float]) -> int:
        raise PreconditionError("algorithm made a probabilistic choice where none is allowed")


class ExecutionContext:
    """Per-run gateway for randomness, measurement and qubit accounting."""

    def __init__(self, chooser: _Chooser, resources: Resources) -> None:
        self._chooser = chooser
        self.resources = resources
        self.qubits_in_use = 0
        self.peak_qubits = 0
        self.random_bits_used = 0

    def choose(self, support: Iterable[Tuple[T, float]]) -> T:
        kept = [(value, weight) for value, weight in support if weight >= PRUNE_THRESHOLD]
        if not kept:
            raise ValidationError("choice support has no outcome with positive probability")
        if len(kept) == 1:
            return kept[0][0]
        total = math.fsum(weight for _, weight in kept)
        index = self._chooser.pick([weight / total for _, weight in kept])
        return kept[index][0]

    def random_bit(self) -> int:
        if self.random_bits_used >= self.resources.random_bits:
            raise ProtocolError(
                f"random tape exhausted after {self.resources.random_bits} declared bits"
            )
        self.random_bits_used += 1
        return self.choose(((0, 0.5), (1, 0.5)))

    def measure(self, register: QuantumRegister, qubits: Sequence[int]) -> BranchOutcome:
        outcomes = measure_branches(register, qubits)
        return self.choose((outcome, outcome.probability) for outcome in outcomes)

    def allocate(self, num_qubits: int = 1) -> QuantumRegister:
        self._claim(num_qubits)
        return init_register(num_qubits)

    def acquire(self, register: QuantumRegister) -> QuantumRegister:
        """Take ownership of a register created elsewhere (e.g. an advice qubit)."""

        self._claim(register.num_qubits)
        return register

    def release(self, register: QuantumRegister) -> None:
        self.qubits_in_use -= register.num_qubits

    def _claim(self, num_qubits: int) -> None:
        if self.qubits_in_use + num_qubits > self.resources.qubits:
            raise ProtocolError(
                f"algorithm declared {self.resources.qubits} qubits but tried to hold "
                f"{self.qubits_in_use + num_qubits}"
            )
        self.qubits_in_use += num_qubits
        self.peak_qubits = max(self.peak_qubits, self.qubits_in_use)


# Outcomes --------------------------------------------------------------------


@dataclass(frozen=True)
class Branch:
    output: Tuple[int, ...]
    cost: float
    probability: float


@dataclass
class OutcomeDistribution:
    """All branches of an exact execution."""

    branches: List[Branch]
    transcript: Optional[AdviceTranscript] = None
    peak_qubits: int = 0

    def total_probability(self) -> float:
        return math.fsum(branch.probability for branch in self.branches)

    def expected_cost(self) -> float:
        return expected_cost(self)

    def output_probabilities(self) -> Dict[Tuple[int, ...], float]:
        merged: Dict[Tuple[int, ...], float] = {}
        for branch in self.branches:
            merged[branch.output] = merged.get(branch.output, 0.0) + branch.probability
        return merged

    def cost_probabilities(self) -> Dict[float, float]:
        merged: Dict[float, float] = {}
        for branch in self.branches:
            merged[branch.cost] = merged.get(branch.cost, 0.0) + branch.probability
        return merged


@dataclass(frozen=True)
class RunRecord:
    """A single sampled execution."""

    output: Tuple[int, ...]
    cost: float
    probability: float
    transcript: Optional[AdviceTranscript] = None
    peak_qubits: int = 0


def expected_cost(distribution: OutcomeDistribution) -> float:
    total = distribution.total_probability()
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
        raise ValidationError(f"branch probabilities sum to {total!r}, not 1")
    return math.fsum(branch.probability * branch.cost for branch in distribution.branches)


def distributions_match(
    first: OutcomeDistribution, second: OutcomeDistribution, tol: float = 1e-12
) -> bool:
    """Branch-multiset equality with probabilities compared within ``tol``."""

    if len(first.branches) != len(second.branches):
        return False
    key = lambda branch: (branch.output, branch.cost, branch.probability)  # noqa: E731
    for left, right in zip(sorted(first.branches, key=key), sorted(second.branches, key=key)):
        if left.output != right.output or left.cost != right.cost:
            return False
        if abs(left.probability - right.probability) > tol:
            return False
    return True


# Game loop -------------------------------------------------------------------


def _serve(
    algorithm: OnlineAlgorithm,
    requests: Iterable[int],
    ctx: ExecutionContext,
    receipt: Optional[AdviceReceipt],
    *,
    finish: bool = True,
) -> Tuple[int, ...]:
    state = algorithm.start(ctx, receipt)
    answers: List[int] = []
    for request in requests:
        answer, state = algorithm.step(ctx, request, state)
        answers.append(int(answer))
    if finish:
        algorithm.finish(ctx, state)
    return tuple(answers)


def _deliver_advice(
    algorithm: OnlineAlgorithm, instance: Any, adviser: Optional[Adviser]
) -> Optional[AdviceReceipt]:
    channel = algorithm.advice_channel
    if channel is None:
        if adviser is not None:
            raise ConfigurationError(f"{algorithm.name} takes no advice but an adviser was given")
        return None
    if adviser is None:
        raise ConfigurationError(f"{algorithm.name} needs advice over {channel.value}")
    return advice_transmit(channel, adviser(instance))


def _enumerate(
    problem: OnlineProblem,
    algorithm: OnlineAlgorithm,
    instance: Any,
    receipt: Optional[AdviceReceipt],
    branch_cap: int,
) -> OutcomeDistribution:
    requests = problem.requests(instance)
    pending: List[Tuple[int, ...]] = [()]
    branches: List[Branch] = []
    peak = 0
    while pending:
        script = pending.pop()
        chooser = _ReplayChooser(script)
        ctx = ExecutionContext(chooser, algorithm.resources)
        try:
            output = _serve(algorithm, requests, ctx, receipt)
        except _Fork as fork:
            if len(branches) + len(pending) + fork.width > branch_cap:
                raise BranchCapExceeded(
                    f"{algorithm.name} exceeds the cap of {branch_cap} branches"
                ) from None
            pending.extend(script + (index,) for index in reversed(range(fork.width)))
            continue
        branches.append(Branch(output, problem.cost(instance, output), chooser.probability))
        peak = max(peak, ctx.peak_qubits)
    logger.debug("%s: %d branches on %s", algorithm.name, len(branches), problem.digest(instance))
    return OutcomeDistribution(
        branches=branches,
        transcript=receipt.transcript if receipt else None,
        peak_qubits=peak,
    )


def run_game(
    problem: OnlineProblem,
    algorithm: OnlineAlgorithm,
    instance: Any,
    mode: str = "exact",
    *,
    seed: SeedLike = None,
    adviser: Optional[Adviser] = None,
    branch_cap: int = BRANCH_CAP,
) -> Union[OutcomeDistribution, RunRecord]:
    """Play ``algorithm`` on ``instance``.

    ``mode="exact"`` returns the full :class:`OutcomeDistribution`;
    ``mode="sample"`` returns one :class:`RunRecord` drawn from ``seed``.
    """

    problem.validate(instance)
    receipt = _deliver_advice(algorithm, instance, adviser)
    if mode == "exact":
        return _enumerate(problem, algorithm, instance, receipt, branch_cap)
    if mode == "sample":
        chooser = _SampleChooser(make_rng(seed))
        ctx = ExecutionContext(chooser, algorithm.resources)
        output = _serve(algorithm, problem.requests(instance), ctx, receipt)
        return RunRecord(
            output=output,
            cost=problem.cost(instance, output),
            probability=chooser.probability,
            transcript=receipt.transcript if receipt else None,
            peak_qubits=ctx.peak_qubits,
        )
    raise ConfigurationError(f"unknown execution mode: {mode}")


def play_prefix(algorithm: OnlineAlgorithm, requests: Sequence[int]) -> Tuple[int, ...]:
    """Answers of a choice-free algorithm to a request prefix."""

    ctx = ExecutionContext(_NoChoice(), algorithm.resources)
    return _serve(algorithm, requests, ctx, None, finish=False)


# Evaluation ------------------------------------------------------------------


@dataclass(frozen=True)
class InstanceEvaluation:
    label: str
    digest: str
    expected_cost: float
    opt_cost: float
    branch_count: int

    @property
    def ratio(self) -> float:
        return self.expected_cost / self.opt_cost


@dataclass
class CompetitiveReport:
    """Per-instance expected and optimal costs over an instance family."""

    evaluations: List[InstanceEvaluation] = field(default_factory=list)

    @property
    def witness(self) -> InstanceEvaluation:
        if not self.evaluations:
            raise PreconditionError("competitive ratio of an empty family is undefined")
        return max(self.evaluations, key=lambda evaluation: evaluation.ratio)

    @property
    def ratio(self) -> float:
        return self.witness.ratio

    def additive_constant(self, c: float) -> float:
        return additive_constant(self, c)


def additive_constant(report: CompetitiveReport, c: float) -> float:
    """Least ``alpha >= 0`` with ``E[cost] <= c * opt + alpha`` on every instance."""

    if not report.evaluations:
        raise PreconditionError("competitive ratio of an empty family is undefined")
    return max(0.0, max(e.expected_cost - c * e.opt_cost for e in report.evaluations))


def _label(problem: OnlineProblem, instance: Any, limit: int = 48) -> str:
    text = problem.describe(instance)
    return text if len(text) <= limit else text[: limit - 3] + "..."


def strict_competitive_ratio(
    problem: OnlineProblem,
    algorithm: OnlineAlgorithm,
    instances: Sequence[Any],
    *,
    adviser: Optional[Adviser] = None,
    branch_cap: int = BRANCH_CAP,
    inspect: Optional[Callable[[Any, OutcomeDistribution], None]] = None,
) -> CompetitiveReport:
    """Exact expected cost over opt for each instance; the ratio is the maximum.

    ``inspect`` is called with every instance and its distribution.
    """

    if not instances:
        raise PreconditionError("instance family is empty")
    report = CompetitiveReport()
    for instance in instances:
        distribution = run_game(
            problem, algorithm, instance, "exact", adviser=adviser, branch_cap=branch_cap
        )
        if inspect is not None:
            inspect(instance, distribution)
        report.evaluations.append(
            InstanceEvaluation(
                label=_label(problem, instance),
                digest=problem.digest(instance),
                expected_cost=expected_cost(distribution),
                opt_cost=problem.opt_cost(instance),
                branch_count=len(distribution.branches),
            )
        )
    logger.info("%s: strict ratio %.6f over %d instances", algorithm.name, report.ratio, len(instances))
    return report


def derive_seeds(
    root: Union[None, int, np.random.SeedSequence], count: int
) -> List[np.random.SeedSequence]:
    """Independent per-instance seeds, fixed by the root seed alone."""

    if not isinstance(root, np.random.SeedSequence):
        root = np.random.SeedSequence(root)
    return root.spawn(count)


def monte_carlo_cost(
    problem: OnlineProblem,
    algorithm: OnlineAlgorithm,
    instance: Any,
    trials: int,
    seed: SeedLike = None,
    *,
    adviser: Optional[Adviser] = None,
) -> Tuple[float, int]:
    """Mean sampled cost and the number of distinct outputs seen."""

    if trials < 1:
        raise PreconditionError("at least one trial is required")
    rng = make_rng(seed)
    costs: List[float] = []
    outputs = set()
    for _ in range(trials):
        record = run_game(problem, algorithm, instance, "sample", seed=rng, adviser=adviser)
        costs.append(record.cost)
        outputs.add(record.output)
    return math.fsum(costs) / trials, len(outputs)


def monte_carlo_ratio(
    problem: OnlineProblem,
    algorithm: OnlineAlgorithm,
    instances: Sequence[Any],
    trials: int,
    seed: Union[None, int, np.random.SeedSequence],
    *,
    adviser: Optional[Adviser] = None,
) -> CompetitiveReport:
    """Sampled mean cost over opt per instance, ``trials`` runs each."""

    if not instances:
        raise PreconditionError("instance family is empty")
    report = CompetitiveReport()
    for instance, instance_seed in zip(instances, derive_seeds(seed, len(instances))):
        mean, distinct = monte_carlo_cost(
            problem, algorithm, instance, trials, instance_seed, adviser=adviser
        )
        report.evaluations.append(
            InstanceEvaluation(
                label=_label(problem, instance),
                digest=problem.digest(instance),
                expected_cost=mean,
                opt_cost=problem.opt_cost(instance),
                branch_count=distinct,
            )
        )
    return report


# Emulation -------------------------------------------------------------------


class _CoinContext:
    """Context proxy that answers random-bit reads with a measured qubit."""

    def __init__(self, outer: ExecutionContext, coin: QuantumRegister, budget: int, used: int):
        self._outer = outer
        self.coin = coin
        self.budget = budget
        self.used = used

    def random_bit(self) -> int:
        if self.used >= self.budget:
            raise ProtocolError(f"random tape exhausted after {self.budget} declared bits")
        self.used += 1
        outcome = self._outer.measure(apply_gate(self.coin, hadamard(0)), (0,))
        self.coin = outcome.post_state
        return outcome.value

    def __getattr__(self, name: str) -> Any:
        return getattr(self._outer, name)


@dataclass(frozen=True, eq=False)
class _EmulationState:
    inner: Any
    coin: QuantumRegister
    used: int


class EmulatedAlgorithm(OnlineAlgorithm):
    """A randomized algorithm whose random tape is replaced by one measured qubit.

    Only the coin is simulated on a qubit. With ``pure=True`` the declared
    resources move the ``s`` classical bits into ``s + 1`` qubits, but the inner
    state is still an ordinary Python value: basis-state qubits that are only
    ever read classically behave the same, so the relabelling is accounting only.
    """

    def __init__(
        self,
        inner: OnlineAlgorithm,
        *,
        pure: bool = False,
        advice_channel: Optional[ChannelKind] = None,
    ) -> None:
        if inner.kind not in (AlgorithmKind.DETERMINISTIC, AlgorithmKind.RANDOMIZED):
            raise PreconditionError(f"{inner.name} is not a classical algorithm")
        declared = inner.resources
        if pure and declared.classical_bits is None:
            raise PreconditionError("pure emulation needs a bounded classical memory")
        if advice_channel is not None:
            if inner.advice_channel is None:
                raise ConfigurationError(f"{inner.name} takes no advice")
            advice_channel = ChannelKind(advice_channel)

        self.inner = inner
        self.name = f"quantum[{inner.name}]"
        self.advice_channel = advice_channel or inner.advice_channel
        if pure:
            self.kind = AlgorithmKind.QUANTUM
            self.resources = Resources(
                classical_bits=0, qubits=declared.qubits + declared.classical_bits + 1
            )
        else:
            self.kind = (
                AlgorithmKind.QUANTUM if declared.classical_bits == 0 else AlgorithmKind.HYBRID
            )
            self.resources = Resources(
                classical_bits=declared.classical_bits, qubits=declared.qubits + 1
            )

    def start(self, ctx: ExecutionContext, advice: Optional[AdviceReceipt]) -> _EmulationState:
        proxy = _CoinContext(ctx, ctx.allocate(1), self.inner.resources.random_bits, 0)
        inner_state = self.inner.start(proxy, advice)  # type: ignore[arg-type]
        return _EmulationState(inner_state, proxy.coin, proxy.used)

    def step(
        self, ctx: ExecutionContext, request: int, state: _EmulationState
    ) -> Tuple[int, _EmulationState]:
        proxy = _CoinContext(ctx, state.coin, self.inner.resources.random_bits, state.used)
        answer, inner_state = self.inner.step(proxy, request, state.inner)  # type: ignore[arg-type]
        return answer, _EmulationState(inner_state, proxy.coin, proxy.used)

    def finish(self, ctx: ExecutionContext, state: _EmulationState) -> None:
        proxy = _CoinContext(ctx, state.coin, self.inner.resources.random_bits, state.used)
        self.inner.finish(proxy, state.inner)  # type: ignore[arg-type]


def wrap_randomized_as_quantum(
    algorithm: OnlineAlgorithm,
    *,
    pure: bool = False,
    advice_channel: Optional[Union[ChannelKind, str]] = None,
) -> EmulatedAlgorithm:
    """Quantum algorithm with the same outcome distribution as ``algorithm``.

    By default it keeps the classical memory and adds one qubit; with
    ``pure=True`` the memory is declared as basis-state qubits instead.
    ``advice_channel`` moves an advice-using algorithm onto a qubit channel.
    """

    channel = ChannelKind(advice_channel) if advice_channel is not None else None
    return EmulatedAlgorithm(algorithm, pure=pure, advice_channel=channel)


__all__ = [
    "AdviceReceipt",
    "AdviceTranscript",
    "Adviser",
    "AlgorithmKind",
    "BRANCH_CAP",
    "Branch",
    "ChannelKind",
    "CompetitiveReport",
    "EmulatedAlgorithm",
    "ExecutionContext",
    "InstanceEvaluation",
    "OnlineAlgorithm",
    "OnlineProblem",
    "OutcomeDistribution",
    "Resources",
    "RunRecord",
    "additive_constant",
    "advice_transmit",
    "derive_seeds",
    "distributions_match",
    "expected_cost",
    "monte_carlo_cost",
    "monte_carlo_ratio",
    "play_prefix",
    "run_game",
    "strict_competitive_ratio",
    "wrap_randomized_as_quantum",
]
