"""State-vector simulator: registers, gates, measurement and superdense coding.

Qubit 0 is the most significant bit of an amplitude index, so ``|10>`` on two
qubits is index 2. Registers are immutable; every operation returns a new one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import (
    ConfigurationError,
    DecodeIntegrityError,
    PreconditionError,
    ValidationError,
)

logger = logging.getLogger(__name__)

MAX_QUBITS = 24
NORM_TOLERANCE = 1e-12
FIDELITY_TOLERANCE = 1e-9
PRUNE_THRESHOLD = 1e-15

# Index of the qubit the adviser holds in a superdense-coded pair.
ADVISER_QUBIT = 0

SeedLike = Union[None, int, np.random.Generator, np.random.SeedSequence]
BitsLike = Union[str, Sequence[int]]


class GateKind(str, Enum):
    H = "H"
    X = "X"
    Z = "Z"
    ROT = "ROT"
    CNOT = "CNOT"
    CROT = "CROT"
    # Rotation of the last target by an angle selected by the other targets.
    UCROT = "UCROT"


_SQRT2_INV = 1 / math.sqrt(2)
_FIXED_MATRICES: Dict[GateKind, np.ndarray] = {
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.CNOT: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
        dtype=complex,
    ),
}
_SINGLE_QUBIT = {GateKind.H, GateKind.X, GateKind.Z, GateKind.ROT}
_TWO_QUBIT = {GateKind.CNOT, GateKind.CROT}


def rotation_matrix(theta: float) -> np.ndarray:
    """Real rotation ``[[cos, -sin], [sin, cos]]``."""

    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def is_unitary(matrix: np.ndarray, tol: float = NORM_TOLERANCE) -> bool:
    identity = np.eye(matrix.shape[0], dtype=complex)
    return bool(np.allclose(matrix @ matrix.conj().T, identity, rtol=0.0, atol=tol))


@dataclass(frozen=True)
class GateSpec:
    """A gate from the fixed gate set applied to ``targets`` (controls first)."""

    kind: GateKind
    targets: Tuple[int, ...]
    theta: float = 0.0
    angles: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if any(t < 0 for t in self.targets):
            raise ValidationError(f"negative qubit index in {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValidationError(f"gate targets must be distinct: {self.targets}")
        if self.kind in _SINGLE_QUBIT and len(self.targets) != 1:
            raise ValidationError(f"{self.kind.value} acts on exactly one qubit")
        if self.kind in _TWO_QUBIT and len(self.targets) != 2:
            raise ValidationError(f"{self.kind.value} acts on exactly two qubits")
        if self.kind is GateKind.UCROT:
            if not self.targets:
                raise ValidationError("UCROT needs a target qubit")
            expected = 2 ** (len(self.targets) - 1)
            if len(self.angles) != expected:
                raise ValidationError(
                    f"UCROT over {len(self.targets) - 1} controls needs {expected} angles, "
                    f"got {len(self.angles)}"
                )

    def matrix(self) -> np.ndarray:
        """Local unitary; the first target is the most significant bit."""

        if self.kind in _FIXED_MATRICES:
            return _FIXED_MATRICES[self.kind]
        if self.kind is GateKind.ROT:
            return rotation_matrix(self.theta)
        if self.kind is GateKind.CROT:
            return _multiplexed_matrix((0.0, self.theta))
        return _multiplexed_matrix(self.angles)


def _multiplexed_matrix(angles: Sequence[float]) -> np.ndarray:
    dim = 2 * len(angles)
    matrix = np.zeros((dim, dim), dtype=complex)
    for index, angle in enumerate(angles):
        matrix[2 * index : 2 * index + 2, 2 * index : 2 * index + 2] = rotation_matrix(angle)
    return matrix


def hadamard(qubit: int) -> GateSpec:
    return GateSpec(GateKind.H, (qubit,))


def pauli_x(qubit: int) -> GateSpec:
    return GateSpec(GateKind.X, (qubit,))


def pauli_z(qubit: int) -> GateSpec:
    return GateSpec(GateKind.Z, (qubit,))


def rot(qubit: int, theta: float) -> GateSpec:
    return GateSpec(GateKind.ROT, (qubit,), theta=theta)


def cnot(control: int, target: int) -> GateSpec:
    return GateSpec(GateKind.CNOT, (control, target))


def crot(control: int, target: int, theta: float) -> GateSpec:
    return GateSpec(GateKind.CROT, (control, target), theta=theta)


def ucrot(controls: Sequence[int], target: int, angles: Sequence[float]) -> GateSpec:
    return GateSpec(GateKind.UCROT, tuple(controls) + (target,), angles=tuple(angles))


@dataclass(frozen=True, eq=False)
class QuantumRegister:
    """Normalized pure state over ``num_qubits`` qubits."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.num_qubits, (int, np.integer)) or not (
            1 <= self.num_qubits <= MAX_QUBITS
        ):
            raise ConfigurationError(
                f"register size must be between 1 and {MAX_QUBITS} qubits, got {self.num_qubits}"
            )
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != 2**self.num_qubits:
            raise ValidationError(
                f"{self.num_qubits} qubits need {2 ** self.num_qubits} amplitudes, "
                f"got {amplitudes.shape[0]}"
            )
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValidationError(f"state is not normalized (squared norm {norm!r})")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "num_qubits", int(self.num_qubits))
        object.__setattr__(self, "amplitudes", amplitudes)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))


@dataclass(frozen=True, eq=False)
class BranchOutcome:
    """One outcome of a measurement: the bits read, their probability and the collapsed state."""

    measured_bits: str
    probability: float
    post_state: QuantumRegister

    @property
    def value(self) -> int:
        return int(self.measured_bits, 2)


def init_register(num_qubits: int) -> QuantumRegister:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"cannot allocate {num_qubits} qubits (simulator capacity is {MAX_QUBITS})"
        )
    amplitudes = np.zeros(2**num_qubits, dtype=complex)
    amplitudes[0] = 1.0
    return QuantumRegister(num_qubits, amplitudes)


def _as_bits(bits: BitsLike) -> Tuple[int, ...]:
    values = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in values):
        raise ValidationError(f"not a bit string: {bits!r}")
    return values


def basis_register(bits: BitsLike) -> QuantumRegister:
    """Computational basis state ``|bits>``."""

    values = _as_bits(bits)
    if not 1 <= len(values) <= MAX_QUBITS:
        raise ConfigurationError(
            f"cannot allocate {len(values)} qubits (simulator capacity is {MAX_QUBITS})"
        )
    amplitudes = np.zeros(2 ** len(values), dtype=complex)
    amplitudes[int("".join(map(str, values)), 2)] = 1.0
    return QuantumRegister(len(values), amplitudes)


def tensor(first: QuantumRegister, second: QuantumRegister) -> QuantumRegister:
    """Joint register; the qubits of ``first`` come first."""

    return QuantumRegister(
        first.num_qubits + second.num_qubits,
        np.kron(first.amplitudes, second.amplitudes),
    )


def _check_targets(state: QuantumRegister, targets: Iterable[int]) -> Tuple[int, ...]:
    checked = tuple(int(t) for t in targets)
    for target in checked:
        if not 0 <= target < state.num_qubits:
            raise PreconditionError(
                f"qubit index {target} out of range for a {state.num_qubits}-qubit register"
            )
    if len(set(checked)) != len(checked):
        raise PreconditionError(f"qubit indices must be distinct: {checked}")
    return checked


def _apply_local(
    amplitudes: np.ndarray, num_qubits: int, matrix: np.ndarray, targets: Tuple[int, ...]
) -> np.ndarray:
    k = len(targets)
    front = list(range(k))
    moved = np.moveaxis(amplitudes.reshape([2] * num_qubits), targets, front)
    shape = moved.shape
    updated = (matrix @ moved.reshape(2**k, -1)).reshape(shape)
    return np.moveaxis(updated, front, targets).reshape(-1)


def _apply_multiplexed(
    amplitudes: np.ndarray, num_qubits: int, angles: Sequence[float], targets: Tuple[int, ...]
) -> np.ndarray:
    k = len(targets)
    front = list(range(k))
    moved = np.moveaxis(amplitudes.reshape([2] * num_qubits), targets, front)
    shape = moved.shape
    blocks = moved.reshape(len(angles), 2, -1)
    angles_arr = np.asarray(angles, dtype=float)
    cos, sin = np.cos(angles_arr), np.sin(angles_arr)
    rotations = np.stack(
        [np.stack([cos, -sin], axis=-1), np.stack([sin, cos], axis=-1)], axis=1
    ).astype(complex)
    updated = np.einsum("iab,ibr->iar", rotations, blocks).reshape(shape)
    return np.moveaxis(updated, front, targets).reshape(-1)


def apply_gate(state: QuantumRegister, gate: GateSpec) -> QuantumRegister:
    """Return ``U |state>`` for the gate lifted to the whole register."""

    targets = _check_targets(state, gate.targets)
    if gate.kind is GateKind.UCROT:
        amplitudes = _apply_multiplexed(state.amplitudes, state.num_qubits, gate.angles, targets)
    else:
        amplitudes = _apply_local(state.amplitudes, state.num_qubits, gate.matrix(), targets)
    return QuantumRegister(state.num_qubits, amplitudes)


def apply_gates(state: QuantumRegister, gates: Iterable[GateSpec]) -> QuantumRegister:
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def measure_branches(state: QuantumRegister, qubits: Sequence[int]) -> List[BranchOutcome]:
    """Every outcome of measuring ``qubits`` (in the given order) with nonzero probability."""

    if not qubits:
        raise PreconditionError("cannot measure an empty set of qubits")
    targets = _check_targets(state, qubits)
    n, m = state.num_qubits, len(targets)
    front = list(range(m))
    moved = np.moveaxis(state.amplitudes.reshape([2] * n), targets, front).reshape(2**m, -1)
    weights = np.sum(np.abs(moved) ** 2, axis=1)
    kept = [index for index in range(2**m) if weights[index] >= PRUNE_THRESHOLD]
    total = float(sum(weights[index] for index in kept))

    outcomes: List[BranchOutcome] = []
    for index in kept:
        collapsed = np.zeros_like(moved)
        collapsed[index] = moved[index] / math.sqrt(weights[index])
        post = np.moveaxis(collapsed.reshape([2] * n), front, targets).reshape(-1)
        outcomes.append(
            BranchOutcome(
                measured_bits=format(index, f"0{m}b"),
                probability=float(weights[index]) / total,
                post_state=QuantumRegister(n, post),
            )
        )
    return outcomes


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def measure_sample(state: QuantumRegister, qubits: Sequence[int], seed: SeedLike) -> BranchOutcome:
    """Draw one measurement outcome; a fixed seed always yields the same outcome."""

    outcomes = measure_branches(state, qubits)
    rng = make_rng(seed)
    probabilities = np.array([outcome.probability for outcome in outcomes])
    return outcomes[int(rng.choice(len(outcomes), p=probabilities / probabilities.sum()))]


def measure(
    state: QuantumRegister,
    qubits: Sequence[int],
    mode: str = "branch",
    seed: SeedLike = None,
) -> Union[List[BranchOutcome], BranchOutcome]:
    if mode == "branch":
        return measure_branches(state, qubits)
    if mode == "sample":
        return measure_sample(state, qubits, seed)
    raise ConfigurationError(f"unknown measurement mode: {mode}")


def quantum_coin(mode: str = "branch", seed: SeedLike = None) -> Union[Dict[int, float], int]:
    """Fair bit from ``H|0>``: the distribution in branch mode, one draw in sample mode."""

    superposed = apply_gate(init_register(1), hadamard(0))
    if mode == "branch":
        return {outcome.value: outcome.probability for outcome in measure_branches(superposed, (0,))}
    if mode == "sample":
        return measure_sample(superposed, (0,), seed).value
    raise ConfigurationError(f"unknown measurement mode: {mode}")


def fidelity(first: QuantumRegister, second: QuantumRegister) -> float:
    if first.num_qubits != second.num_qubits:
        return 0.0
    return float(abs(np.vdot(first.amplitudes, second.amplitudes)) ** 2)


def states_equal(first: QuantumRegister, second: QuantumRegister) -> bool:
    """Equality up to global phase."""

    return fidelity(first, second) >= 1.0 - FIDELITY_TOLERANCE


def make_epr_pair() -> QuantumRegister:
    """The singlet ``(|01> - |10>)/sqrt(2)``."""

    return QuantumRegister(2, np.array([0.0, _SQRT2_INV, -_SQRT2_INV, 0.0], dtype=complex))


def _bit_pair(bit_pair: BitsLike) -> str:
    values = _as_bits(bit_pair)
    if len(values) != 2:
        raise ValidationError(f"superdense coding carries exactly two bits, got {bit_pair!r}")
    return "".join(map(str, values))


_ENCODING: Dict[str, Tuple[GateSpec, ...]] = {
    "00": (),
    "01": (pauli_x(ADVISER_QUBIT),),
    "10": (pauli_z(ADVISER_QUBIT),),
    "11": (pauli_z(ADVISER_QUBIT), pauli_x(ADVISER_QUBIT)),
}

# Computational-basis outcome after CNOT(0, 1) and H(0) for each encoded pair.
_DECODING: Dict[str, str] = {"11": "00", "10": "01", "01": "10", "00": "11"}


def superdense_encode(bit_pair: BitsLike) -> Tuple[GateSpec, ...]:
    """Gates the adviser applies to its half of the shared pair."""

    return _ENCODING[_bit_pair(bit_pair)]


@lru_cache(maxsize=None)
def encoded_pair_states() -> Dict[str, QuantumRegister]:
    epr = make_epr_pair()
    return {bits: apply_gates(epr, gates) for bits, gates in _ENCODING.items()}


def superdense_decode(state: QuantumRegister) -> str:
    """Recover the two bits carried by an encoded pair."""

    if state.num_qubits != 2:
        raise DecodeIntegrityError(f"expected a 2-qubit pair, got {state.num_qubits} qubits")
    best = max(fidelity(state, reference) for reference in encoded_pair_states().values())
    if best < 1.0 - FIDELITY_TOLERANCE:
        raise DecodeIntegrityError(
            f"state is not one of the encoded pair states (best fidelity {best:.6f})"
        )
    rotated = apply_gates(state, (cnot(0, 1), hadamard(0)))
    outcome = max(measure_branches(rotated, (0, 1)), key=lambda branch: branch.probability)
    return _DECODING[outcome.measured_bits]


__all__ = [
    "ADVISER_QUBIT",
    "BranchOutcome",
    "FIDELITY_TOLERANCE",
    "GateKind",
    "GateSpec",
    "MAX_QUBITS",
    "NORM_TOLERANCE",
    "PRUNE_THRESHOLD",
    "QuantumRegister",
    "apply_gate",
    "apply_gates",
    "basis_register",
    "cnot",
    "crot",
    "encoded_pair_states",
    "fidelity",
    "hadamard",
    "init_register",
    "is_unitary",
    "make_epr_pair",
    "make_rng",
    "measure",
    "measure_branches",
    "measure_sample",
    "pauli_x",
    "pauli_z",
    "quantum_coin",
    "rot",
    "rotation_matrix",
    "states_equal",
    "superdense_decode",
    "superdense_encode",
    "tensor",
    "ucrot",
]
