"""(n, r, w)-Parity-Number-of-Equality-Hats.

Same guardian layout as PNH, with ``EQ`` (do the two halves of a block
agree?) in place of PartialMOD. The quantum algorithm learns each ``EQ`` value
with a streaming fingerprint whose error is one-sided: equal halves are always
accepted, unequal halves are accepted with probability at most ``epsilon``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    PreconditionError,
    ProtocolError,
    SearchFailure,
    ValidationError,
)
from .game import (
    AdviceReceipt,
    AlgorithmKind,
    ExecutionContext,
    OnlineAlgorithm,
    OnlineProblem,
    Resources,
    expected_cost,
    run_game,
)
from .pnh import (
    GUARD,
    GUARDIANS,
    Bits,
    adversarial_symbols,
    as_bits,
    assemble,
    guardian_answers,
    guardian_values,
    split_blocks,
)
from .qcore import (
    QuantumRegister,
    apply_gate,
    apply_gates,
    basis_register,
    cnot,
    hadamard,
    init_register,
    make_rng,
    measure_branches,
    pauli_x,
    tensor,
    ucrot,
)

logger = logging.getLogger(__name__)

MAX_VERIFY_L = 16
DEFAULT_RETRIES = 10
# Distances verified per numpy batch.
_VERIFY_CHUNK = 4096

PATTERNS = tuple("".join(bits) for bits in product("01", repeat=GUARDIANS))


def eq_m(bits: Bits) -> int:
    """1 iff the first half of ``bits`` equals the second half."""

    values = as_bits(bits)
    if len(values) < 2 or len(values) % 2:
        raise DomainError(f"EQ needs an even block length of at least 2, got {len(values)}")
    half = len(values) // 2
    return int(values[:half] == values[half:])


def eq_pattern(blocks: Sequence[Bits]) -> str:
    return "".join(str(eq_m(block)) for block in blocks)


@dataclass(frozen=True)
class PnehParams:
    r: float = 1.0
    w: float = 3.0

    def __post_init__(self) -> None:
        if not 0 < self.r < self.w:
            raise ValidationError(f"costs must satisfy 0 < r < w, got r={self.r}, w={self.w}")


@dataclass(frozen=True)
class PnehInstance:
    symbols: Tuple[int, ...]
    blocks: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        blocks = split_blocks(self.symbols)
        for index, block in enumerate(blocks, start=1):
            if len(block) < 2 or len(block) % 2:
                raise ValidationError(
                    f"block X_{index} must have even length >= 2, got {len(block)}"
                )
        object.__setattr__(self, "blocks", blocks)

    @property
    def block_lengths(self) -> Tuple[int, ...]:
        return tuple(len(block) for block in self.blocks)

    @property
    def eq_values(self) -> Tuple[int, ...]:
        return tuple(eq_m(block) for block in self.blocks)

    @property
    def pattern(self) -> str:
        return "".join(map(str, self.eq_values))

    @property
    def guardian_values(self) -> Tuple[int, ...]:
        return guardian_values(self.eq_values)

    def __len__(self) -> int:
        return len(self.symbols)


class PnehProblem(OnlineProblem):
    name = "pneh"

    def __init__(self, params: PnehParams) -> None:
        self.params = params

    def validate(self, instance: PnehInstance) -> None:
        if not isinstance(instance, PnehInstance):
            raise ValidationError(f"expected a PnehInstance, got {type(instance).__name__}")

    def requests(self, instance: PnehInstance) -> Sequence[int]:
        return instance.symbols

    def cost(self, instance: PnehInstance, output: Sequence[int]) -> float:
        answers = guardian_answers(instance.symbols, output)
        return self.params.r if answers == instance.guardian_values else self.params.w

    def opt_cost(self, instance: PnehInstance) -> float:
        return self.params.r


def parse_pneh_instance(text: Union[str, Sequence[int]]) -> PnehInstance:
    symbols = [int(ch) for ch in text if not str(ch).isspace()] if isinstance(text, str) else text
    try:
        return PnehInstance(tuple(symbols))
    except ValueError as exc:
        raise ValidationError(f"invalid PNEH instance: {exc}") from exc


def parse_pneh_instances(text: str) -> List[PnehInstance]:
    instances = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            instances.append(parse_pneh_instance(line))
    return instances


# Fingerprint configuration ---------------------------------------------------


def _is_power_of_two(value: int) -> bool:
    return isinstance(value, (int, np.integer)) and value >= 1 and value & (value - 1) == 0


@dataclass(frozen=True)
class FingerprintVerification:
    passed: bool
    max_accept: float
    worst_distance: int
    epsilon: float


@dataclass(frozen=True)
class FingerprintConfig:
    """Coefficients ``K`` for fingerprinting ``L``-bit halves modulo ``q = 2**L``."""

    L: int
    epsilon: float
    t: int
    K: Tuple[int, ...]
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if not isinstance(self.L, (int, np.integer)) or not 1 <= self.L <= MAX_VERIFY_L:
            raise PreconditionError(f"L must be between 1 and {MAX_VERIFY_L}, got {self.L!r}")
        if not 0 < self.epsilon < 1:
            raise ValidationError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if not _is_power_of_two(self.t):
            raise PreconditionError(f"t must be a power of two, got {self.t!r}")
        coefficients = tuple(int(k) for k in self.K)
        if not coefficients:
            raise ValidationError("coefficient set K is empty")
        if len(coefficients) != self.t:
            raise ValidationError(f"K has {len(coefficients)} coefficients, expected t={self.t}")
        if any(not 1 <= k < self.q for k in coefficients):
            raise ValidationError(f"coefficients must lie in [1, {self.q - 1}]")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "K", coefficients)

    @property
    def q(self) -> int:
        return 2**self.L

    @property
    def tau(self) -> int:
        return self.t.bit_length() - 1

    @property
    def block_length(self) -> int:
        return 2 * self.L

    def accept_probability(self, distance: int) -> float:
        """``((1/t) * sum_i cos(2 pi k_i D / q))**2``."""

        phases = 2 * np.pi * np.asarray(self.K, dtype=float) * (distance % self.q) / self.q
        return float(np.mean(np.cos(phases)) ** 2)

    def accept_probabilities(self) -> np.ndarray:
        """Accept probability for every nonzero distance ``D = 1 .. q-1``."""

        coefficients = np.asarray(self.K, dtype=float)
        result = np.empty(self.q - 1)
        for start in range(1, self.q, _VERIFY_CHUNK):
            distances = np.arange(start, min(start + _VERIFY_CHUNK, self.q), dtype=float)
            phases = 2 * np.pi * np.outer(distances, coefficients) / self.q
            result[start - 1 : start - 1 + len(distances)] = np.cos(phases).mean(axis=1) ** 2
        return result

    def verify(self) -> FingerprintVerification:
        probabilities = self.accept_probabilities()
        worst = int(np.argmax(probabilities))
        max_accept = float(probabilities[worst])
        return FingerprintVerification(
            passed=max_accept <= self.epsilon,
            max_accept=max_accept,
            worst_distance=worst + 1,
            epsilon=self.epsilon,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"L": self.L, "epsilon": self.epsilon, "t": self.t, "K": list(self.K), "seed": self.seed}

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "FingerprintConfig":
        missing = [key for key in ("L", "epsilon", "t", "K") if key not in payload]
        if missing:
            raise ValidationError(f"fingerprint config is missing {', '.join(missing)}")
        if not isinstance(payload["K"], (list, tuple)) or not payload["K"]:
            raise ValidationError("coefficient set K is empty")
        try:
            return cls(
                L=int(payload["L"]),
                epsilon=float(payload["epsilon"]),
                t=int(payload["t"]),
                K=tuple(int(k) for k in payload["K"]),
                seed=payload.get("seed"),
            )
        except (ValidationError, PreconditionError):
            raise
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed fingerprint config: {exc}") from exc


def build_fingerprint_config(
    L: int,
    epsilon: float,
    t: int,
    seed: Optional[int] = None,
    *,
    retries: int = DEFAULT_RETRIES,
) -> FingerprintConfig:
    """Draw seeded coefficient sets until one passes exhaustive verification."""

    if not _is_power_of_two(t):
        raise PreconditionError(f"t must be a power of two, got {t!r}")
    if not isinstance(L, int) or not 1 <= L <= MAX_VERIFY_L:
        raise PreconditionError(f"L must be between 1 and {MAX_VERIFY_L}, got {L!r}")
    q = 2**L
    rng = make_rng(seed)
    best = math.inf
    for attempt in range(1, retries + 1):
        coefficients = tuple(int(k) for k in rng.integers(1, q, size=t))
        config = FingerprintConfig(L=L, epsilon=epsilon, t=t, K=coefficients, seed=seed)
        report = config.verify()
        logger.debug("attempt %d: max accept %.6f at D=%d", attempt, report.max_accept, report.worst_distance)
        if report.passed:
            logger.info("fingerprint config L=%d t=%d verified on attempt %d", L, t, attempt)
            return config
        best = min(best, report.max_accept)
    raise SearchFailure(
        f"no coefficient set with max accept <= {epsilon} in {retries} draws "
        f"(best {best:.6f}); increase t"
    )


# Streaming fingerprint -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FingerprintState:
    """Index qubits ``0 .. tau-1`` in superposition, target qubit ``tau``."""

    config: FingerprintConfig
    register: QuantumRegister
    fed: int = 0


def fp_init(config: FingerprintConfig, register: Optional[QuantumRegister] = None) -> FingerprintState:
    if register is None:
        register = init_register(config.tau + 1)
    elif register.num_qubits != config.tau + 1:
        raise ConfigurationError(
            f"fingerprint needs {config.tau + 1} qubits, got {register.num_qubits}"
        )
    return FingerprintState(config, apply_gates(register, (hadamard(i) for i in range(config.tau))))


def feed_weight(config: FingerprintConfig, position: int) -> int:
    """``+2**j`` for bit ``j`` of the first half, ``-2**j mod q`` for the second."""

    if position < config.L:
        return 2**position
    return (-(2 ** (position - config.L))) % config.q


def fp_feed(state: FingerprintState, bit: int, weight: int) -> FingerprintState:
    if bit not in (0, 1):
        raise ValidationError(f"fingerprint input must be a bit, got {bit!r}")
    if not bit:
        return FingerprintState(state.config, state.register, state.fed + 1)
    config = state.config
    angles = [2 * math.pi * k * (weight % config.q) / config.q for k in config.K]
    register = apply_gate(state.register, ucrot(range(config.tau), config.tau, angles))
    return FingerprintState(config, register, state.fed + 1)


def fp_accept_register(state: FingerprintState, expected_feeds: int) -> QuantumRegister:
    """The register after the closing Hadamards; accept is the all-zero outcome."""

    if state.fed != expected_feeds:
        raise ProtocolError(f"fingerprint fed {state.fed} bits, expected {expected_feeds}")
    tau = state.config.tau
    return apply_gates(state.register, (hadamard(i) for i in range(tau)))


def fp_finalize(
    state: FingerprintState,
    expected_feeds: Optional[int] = None,
    mode: str = "branch",
    seed: Any = None,
) -> Union[Dict[int, float], int]:
    """Accept distribution ``{1: p, 0: 1 - p}`` in branch mode, one accept bit in sample mode."""

    expected = state.config.block_length if expected_feeds is None else expected_feeds
    register = fp_accept_register(state, expected)
    qubits = tuple(range(register.num_qubits))
    accept = math.fsum(
        outcome.probability
        for outcome in measure_branches(register, qubits)
        if outcome.value == 0
    )
    distribution = {1: accept, 0: max(0.0, 1.0 - accept)}
    if mode == "branch":
        return distribution
    if mode == "sample":
        return int(make_rng(seed).random() < accept)
    raise ConfigurationError(f"unknown measurement mode: {mode}")


def fingerprint_accept_probability(config: FingerprintConfig, block: Bits) -> float:
    """Simulated probability that the fingerprint accepts ``block`` (length ``2L``)."""

    bits = as_bits(block)
    if len(bits) != config.block_length:
        raise ConfigurationError(f"block length {len(bits)} != 2L = {config.block_length}")
    state = fp_init(config)
    for position, bit in enumerate(bits):
        state = fp_feed(state, bit, feed_weight(config, position))
    return fp_finalize(state)[1]


def block_distance(config: FingerprintConfig, block: Bits) -> int:
    bits = as_bits(block)
    return sum(bit * feed_weight(config, position) for position, bit in enumerate(bits)) % config.q


# Equality-hats algorithm -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class _EqualityState:
    psi: QuantumRegister
    guardians: int = 0
    position: int = 0
    fingerprint: Optional[FingerprintState] = None
    buffer: Tuple[int, ...] = ()


class EqualityParityAlgorithm(OnlineAlgorithm):
    """Quantum PNEH algorithm.

    ``y_1`` comes from a measured ``H|0>``. At the end of ``X_1`` and ``X_2``
    the block's EQ estimate ``v`` is loaded into a fresh qubit, CNOT'ed onto
    the answer qubit and the answer qubit is measured, so ``y_{i+1} = y_i xor v``.
    ``X_3`` is not read. With a :class:`FingerprintConfig` the estimate comes
    from the streaming fingerprint; with ``epsilon`` it comes from a one-sided
    oracle that reports 1 on unequal halves with probability exactly ``epsilon``.
    """

    kind = AlgorithmKind.QUANTUM

    def __init__(
        self, config: Optional[FingerprintConfig] = None, *, epsilon: Optional[float] = None
    ) -> None:
        if (config is None) == (epsilon is None):
            raise ConfigurationError("give exactly one of a fingerprint config or an idealized epsilon")
        if epsilon is not None and not 0 <= epsilon < 1:
            raise ConfigurationError(f"epsilon must lie in [0, 1), got {epsilon!r}")
        self.config = config
        self.epsilon = config.epsilon if config is not None else float(epsilon)
        if config is not None:
            self.mode = "real"
            self.name = f"pneh-alg2[L={config.L},t={config.t}]"
            counter_bits = math.ceil(math.log2(config.block_length + 1)) + 2
            self.resources = Resources(classical_bits=counter_bits, qubits=config.tau + 3)
        else:
            self.mode = "idealized"
            self.name = f"pneh-alg2[eps={self.epsilon}]"
            self.resources = Resources(classical_bits=None, qubits=2)

    def start(self, ctx: ExecutionContext, advice: Optional[AdviceReceipt]) -> _EqualityState:
        psi = apply_gate(ctx.allocate(1), hadamard(0))
        return _EqualityState(psi=ctx.measure(psi, (0,)).post_state)

    def _open_block(self, ctx: ExecutionContext) -> Optional[FingerprintState]:
        if self.config is None:
            return None
        return fp_init(self.config, ctx.allocate(self.config.tau + 1))

    def _estimate(self, ctx: ExecutionContext, state: _EqualityState) -> int:
        if self.config is None:
            if eq_m(state.buffer):
                return 1
            return ctx.choose(((1, self.epsilon), (0, 1.0 - self.epsilon)))
        if state.position != self.config.block_length:
            raise ConfigurationError(
                f"block of length {state.position} does not match 2L = {self.config.block_length}"
            )
        accept = fp_finalize(state.fingerprint, self.config.block_length)[1]
        ctx.release(state.fingerprint.register)
        return ctx.choose(((1, accept), (0, 1.0 - accept)))

    def _transfer(self, ctx: ExecutionContext, psi: QuantumRegister, v: int) -> Tuple[int, QuantumRegister]:
        phi = ctx.allocate(1)
        if v:
            phi = apply_gate(phi, pauli_x(0))
        joint = apply_gate(tensor(phi, psi), cnot(0, 1))
        outcome = ctx.measure(joint, (1,))
        ctx.release(phi)
        return outcome.value, basis_register(outcome.measured_bits)

    def step(
        self, ctx: ExecutionContext, request: int, state: _EqualityState
    ) -> Tuple[int, _EqualityState]:
        if request == GUARD:
            guardians = state.guardians + 1
            if guardians == 1:
                outcome = ctx.measure(state.psi, (0,))
                return outcome.value, _EqualityState(
                    psi=outcome.post_state, guardians=1, fingerprint=self._open_block(ctx)
                )
            answer, psi = self._transfer(ctx, state.psi, self._estimate(ctx, state))
            fingerprint = self._open_block(ctx) if guardians < GUARDIANS else None
            return answer, _EqualityState(psi=psi, guardians=guardians, fingerprint=fingerprint)

        if state.guardians >= GUARDIANS:
            return 0, state
        if self.config is None:
            return 0, _EqualityState(
                psi=state.psi,
                guardians=state.guardians,
                position=state.position + 1,
                buffer=state.buffer + (request,),
            )
        if state.position >= self.config.block_length:
            raise ConfigurationError(
                f"block longer than 2L = {self.config.block_length} for this fingerprint"
            )
        weight = feed_weight(self.config, state.position)
        return 0, _EqualityState(
            psi=state.psi,
            guardians=state.guardians,
            position=state.position + 1,
            fingerprint=fp_feed(state.fingerprint, request, weight),
        )


def alg2_quantum(
    config: Optional[FingerprintConfig] = None, *, epsilon: Optional[float] = None
) -> EqualityParityAlgorithm:
    return EqualityParityAlgorithm(config, epsilon=epsilon)


# Probabilities and closed forms ----------------------------------------------

_REPRESENTATIVE = {0: (1, 0), 1: (1, 1)}


def pattern_instance(pattern: str, block_length: int = 2) -> PnehInstance:
    """An instance whose blocks have the given EQ pattern.

    Equal blocks are all ones; unequal blocks differ in the first bit of the halves.
    """

    if pattern not in PATTERNS:
        raise ValidationError(f"EQ pattern must be three bits, got {pattern!r}")
    if block_length < 2 or block_length % 2:
        raise ValidationError(f"block length must be even and >= 2, got {block_length}")
    half = block_length // 2
    blocks = []
    for bit in pattern:
        if bit == "1":
            blocks.append((1,) * block_length)
        else:
            blocks.append((1,) + (0,) * (half - 1) + (0,) * half)
    return PnehInstance(assemble(blocks))


def _oracle_probability(eq_value: int, reported: int, epsilon: float) -> float:
    if eq_value:
        return float(reported == 1)
    return epsilon if reported else 1.0 - epsilon


def closed_form_cell(
    pattern: str, outcome: str, r: float, w: float, epsilon: float
) -> Tuple[float, float]:
    """Probability and cost of answers ``outcome`` on an instance with EQ ``pattern``."""

    eq_values = [int(bit) for bit in pattern]
    answers = [int(bit) for bit in outcome]
    probability = 0.5
    for index in range(GUARDIANS - 1):
        probability *= _oracle_probability(
            eq_values[index], answers[index] ^ answers[index + 1], epsilon
        )
    cost = r if tuple(answers) == guardian_values(eq_values) else w
    return probability, cost


def probability_table(
    r: float, w: float, epsilon: float
) -> Dict[str, Dict[str, Tuple[float, float]]]:
    """``table[pattern][outcome] = (probability, cost)`` from exact idealized runs.

    Every one of the 64 cells is present; outcomes that never occur have probability 0.
    """

    problem = PnehProblem(PnehParams(r, w))
    algorithm = alg2_quantum(epsilon=epsilon)
    table: Dict[str, Dict[str, Tuple[float, float]]] = {}
    for pattern in PATTERNS:
        instance = pattern_instance(pattern)
        distribution = run_game(problem, algorithm, instance, "exact")
        z = instance.guardian_values
        column = {outcome: (0.0, r if tuple(map(int, outcome)) == z else w) for outcome in PATTERNS}
        for branch in distribution.branches:
            outcome = "".join(map(str, guardian_answers(instance.symbols, branch.output)))
            probability, cost = column[outcome]
            column[outcome] = (probability + branch.probability, cost)
        table[pattern] = column
    return table


def pneh_expected_cost_closed_form(pattern: str, r: float, w: float, epsilon: float) -> float:
    if pattern not in PATTERNS:
        raise ValidationError(f"EQ pattern must be three bits, got {pattern!r}")
    if pattern in ("000", "001"):
        return r * (1 - epsilon) ** 2 / 2 + w * ((1 - epsilon**2) / 2 + epsilon)
    if pattern in ("110", "111"):
        return r / 2 + w / 2
    return r * (1 - epsilon) / 2 + w * (1 + epsilon) / 2


def pneh_ratio_summary(r: float, w: float, epsilon: float) -> Dict[str, Any]:
    """Per-pattern ratios, the headline ratio of the ``{000, 001}`` patterns and the worst one."""

    classes = {
        pattern: pneh_expected_cost_closed_form(pattern, r, w, epsilon) / r for pattern in PATTERNS
    }
    return {"classes": classes, "headline": classes["000"], "worst": max(classes.values())}


# Instances for experiments ---------------------------------------------------


def adversary_pneh(algorithm: OnlineAlgorithm, block_length: int = 2) -> PnehInstance:
    """Instance on which a deterministic algorithm pays ``w``."""

    unequal = pattern_instance("000", block_length).blocks[0]
    equal = pattern_instance("111", block_length).blocks[0]
    return PnehInstance(adversarial_symbols(algorithm, unequal, equal))


def pneh_family(
    block_length: int = 2, *, per_pattern: int = 1, seed: Optional[int] = 0
) -> List[PnehInstance]:
    """``per_pattern`` seeded instances for each of the eight EQ patterns."""

    if block_length < 2 or block_length % 2:
        raise ValidationError(f"block length must be even and >= 2, got {block_length}")
    rng = np.random.default_rng(seed)
    half = block_length // 2
    family: List[PnehInstance] = []
    for pattern in PATTERNS:
        for _ in range(per_pattern):
            blocks = []
            for bit in pattern:
                first = tuple(int(b) for b in rng.integers(0, 2, size=half))
                if bit == "1":
                    second = first
                else:
                    flip = int(rng.integers(0, half))
                    second = tuple(b ^ (i == flip) for i, b in enumerate(first))
                blocks.append(first + second)
            family.append(PnehInstance(assemble(blocks)))
    return family


def idealized_expected_costs(
    instances: Sequence[PnehInstance], r: float, w: float, epsilon: float
) -> List[float]:
    problem = PnehProblem(PnehParams(r, w))
    algorithm = alg2_quantum(epsilon=epsilon)
    return [expected_cost(run_game(problem, algorithm, instance, "exact")) for instance in instances]


__all__ = [
    "DEFAULT_RETRIES",
    "EqualityParityAlgorithm",
    "FingerprintConfig",
    "FingerprintState",
    "FingerprintVerification",
    "MAX_VERIFY_L",
    "PATTERNS",
    "PnehInstance",
    "PnehParams",
    "PnehProblem",
    "adversary_pneh",
    "alg2_quantum",
    "block_distance",
    "build_fingerprint_config",
    "closed_form_cell",
    "eq_m",
    "eq_pattern",
    "feed_weight",
    "fingerprint_accept_probability",
    "fp_accept_register",
    "fp_feed",
    "fp_finalize",
    "fp_init",
    "idealized_expected_costs",
    "parse_pneh_instance",
    "parse_pneh_instances",
    "pattern_instance",
    "pneh_expected_cost_closed_form",
    "pneh_family",
    "pneh_ratio_summary",
    "probability_table",
]
