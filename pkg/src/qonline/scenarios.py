"""Named, reproducible experiments and their acceptance predicates."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .errors import ConfigurationError
from .game import (
    Adviser,
    ChannelKind,
    InstanceEvaluation,
    OnlineAlgorithm,
    OnlineProblem,
    OutcomeDistribution,
    advice_transmit,
    derive_seeds,
    distributions_match,
    expected_cost,
    monte_carlo_ratio,
    run_game,
    strict_competitive_ratio,
    wrap_randomized_as_quantum,
)
from .instances import load_paging_instances, load_pneh_instances, load_pnh_instances
from .paging import (
    NO_EVICTION,
    PagingProblem,
    alg_paging_with_advice,
    belady,
    brute_force_min_faults,
    paging_adviser,
    random_paging_instances,
)
from .pneh import (
    PATTERNS,
    PnehInstance,
    PnehParams,
    PnehProblem,
    alg2_quantum,
    block_distance,
    build_fingerprint_config,
    closed_form_cell,
    fingerprint_accept_probability,
    pattern_instance,
    pneh_expected_cost_closed_form,
    pneh_family,
    pneh_ratio_summary,
    probability_table,
)
from .pnh import (
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
    deterministic_strategies,
    fooling_pair_search,
    guardian_answers,
    partial_mod,
    pnh_adviser,
    pnh_family,
)
from .qcore import apply_gates, make_epr_pair, superdense_decode, superdense_encode

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EXACT_TOLERANCE = 1e-9
MC_TOLERANCE = 0.05
DEFAULT_TRIALS = 100_000
MODES = ("exact", "mc")


@dataclass(frozen=True)
class ScenarioConfig:
    """One run, assembled from command line flags."""

    scenario: str
    params: Mapping[str, str] = field(default_factory=dict)
    mode: str = "exact"
    trials: int = DEFAULT_TRIALS
    seed: Optional[int] = 0
    output: Optional[Path] = None
    instances: Optional[Path] = None
    format: str = "text"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be positive, got {self.trials}")
        object.__setattr__(self, "params", dict(self.params))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Report:
    scenario: str
    annotation: str
    mode: str
    seed: Optional[int]
    params: Dict[str, Any]
    records: List[InstanceEvaluation] = field(default_factory=list)
    expected_ratio: Optional[float] = None
    transcript: Dict[str, Any] = field(default_factory=dict)
    checks: List[Check] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)
    version: str = __version__

    @property
    def ratio(self) -> Optional[float]:
        """Aggregate strict ratio: the largest per-instance ratio."""

        if not self.records:
            return None
        return max(record.ratio for record in self.records)

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        self.checks.append(Check(name, bool(passed), detail))
        if not passed:
            logger.warning("%s: check %s failed: %s", self.scenario, name, detail)
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def exit_code(self) -> int:
        return 0 if self.passed else 1


Runner = Callable[[ScenarioConfig, Dict[str, Any], Report], None]


@dataclass(frozen=True)
class Scenario:
    name: str
    formula: str
    summary: str
    runner: Runner
    defaults: Mapping[str, Any] = field(default_factory=dict)
    supports_mc: bool = False
    # Format of --instances files, or None when the scenario takes none.
    instance_format: Optional[str] = None

    @property
    def annotation(self) -> str:
        return f"{self.formula} - {self.summary}"


SCENARIOS: Dict[str, Scenario] = {}


def _register(
    name: str,
    formula: str,
    summary: str,
    defaults: Optional[Mapping[str, Any]] = None,
    *,
    supports_mc: bool = False,
    instance_format: Optional[str] = None,
) -> Callable[[Runner], Runner]:
    def decorate(runner: Runner) -> Runner:
        SCENARIOS[name] = Scenario(
            name, formula, summary, runner, dict(defaults or {}), supports_mc, instance_format
        )
        return runner

    return decorate


def list_scenarios() -> List[Scenario]:
    return list(SCENARIOS.values())


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown scenario {name!r}; use --list-scenarios to see the catalog"
        ) from None


def _coerce(name: str, raw: Any, default: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    try:
        if default is None or isinstance(default, bool) or isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigurationError(f"parameter {name}={raw!r} is not a number") from None
    return raw


def resolve_params(scenario: Scenario, overrides: Mapping[str, Any]) -> Dict[str, Any]:
    values = dict(scenario.defaults)
    for key, raw in overrides.items():
        if key not in scenario.defaults:
            known = ", ".join(sorted(scenario.defaults)) or "none"
            raise ConfigurationError(
                f"unknown parameter {key!r} for {scenario.name} (accepted: {known})"
            )
        values[key] = _coerce(key, raw, scenario.defaults[key])
    return values


def run_scenario(config: ScenarioConfig) -> Report:
    scenario = get_scenario(config.scenario)
    if config.mode == "mc" and not scenario.supports_mc:
        raise ConfigurationError(f"{scenario.name} has no Monte-Carlo mode")
    if config.instances is not None and scenario.instance_format is None:
        raise ConfigurationError(f"{scenario.name} does not read instance files")
    params = resolve_params(scenario, config.params)
    report = Report(
        scenario=scenario.name,
        annotation=scenario.annotation,
        mode=config.mode,
        seed=config.seed,
        params=params,
    )
    logger.info("running %s (%s mode, seed %s)", scenario.name, config.mode, config.seed)
    scenario.runner(config, params, report)
    if report.expected_ratio is not None and report.records:
        tolerance = EXACT_TOLERANCE if config.mode == "exact" else MC_TOLERANCE
        report.check(
            "ratio",
            abs(report.ratio - report.expected_ratio) <= tolerance,
            f"ratio {report.ratio:.12g}, expected {report.expected_ratio:.12g} (tolerance {tolerance:g})",
        )
    return report


# Helpers ---------------------------------------------------------------------


def _prefixed(evaluations: Sequence[InstanceEvaluation], prefix: str) -> List[InstanceEvaluation]:
    return [replace(evaluation, label=f"{prefix} {evaluation.label}") for evaluation in evaluations]


def _evaluate(
    config: ScenarioConfig,
    problem: OnlineProblem,
    algorithm: OnlineAlgorithm,
    instances: Sequence[Any],
    seed: Any,
    *,
    adviser: Optional[Adviser] = None,
    inspect: Optional[Callable[[Any, OutcomeDistribution], None]] = None,
) -> List[InstanceEvaluation]:
    if config.mode == "exact":
        report = strict_competitive_ratio(
            problem, algorithm, instances, adviser=adviser, inspect=inspect
        )
    else:
        trials = max(1, config.trials // len(instances))
        report = monte_carlo_ratio(problem, algorithm, instances, trials, seed, adviser=adviser)
    return report.evaluations


def _pnh_families(
    config: ScenarioConfig, params: Mapping[str, Any]
) -> Iterator[Tuple[PnhParams, List[PnhInstance], np.random.SeedSequence]]:
    """Instance families per ``k``: the file when given, else the enumerated family."""

    if config.instances is not None:
        if params["k"] is None:
            raise ConfigurationError("--params k=<int> is required with --instances")
        ks = [params["k"]]
    elif params["k"] is not None:
        ks = [params["k"]]
    else:
        ks = [1] if config.mode == "mc" else [0, 1, 2]
    for k, seed in zip(ks, derive_seeds(config.seed, len(ks))):
        pnh = PnhParams(k, params["r"], params["w"])
        if config.instances is not None:
            instances = load_pnh_instances(config.instances, pnh)
        elif config.mode == "mc":
            instances = pnh_family(pnh, (3 * pnh.unit,))
        else:
            instances = pnh_family(pnh)
        yield pnh, instances, seed


def _algorithm_summary(algorithm: OnlineAlgorithm) -> Dict[str, Any]:
    return {
        "kind": algorithm.kind.value,
        "classical_bits": algorithm.resources.classical_bits,
        "qubits": algorithm.resources.qubits,
        "random_bits": algorithm.resources.random_bits,
    }


def _advice_summary(
    algorithm: OnlineAlgorithm, adviser: Adviser, instances: Sequence[Any]
) -> Dict[str, Any]:
    transcripts = [advice_transmit(algorithm.advice_channel, adviser(i)).transcript for i in instances]
    return {
        "channel": algorithm.advice_channel.value,
        "max_advice_units": max(t.advice_units for t in transcripts),
        "max_setup_qubits": max(t.setup_qubits for t in transcripts),
    }


PNH_DEFAULTS = {"k": None, "r": 1.0, "w": 3.0}


# PNH -------------------------------------------------------------------------


@_register(
    "pnh-alg1",
    "(r+w)/(2r)",
    "single-qubit quantum algorithm for PNH, exact over every PartialMOD parity pattern",
    PNH_DEFAULTS,
    supports_mc=True,
    instance_format="pnh",
)
def _run_pnh_alg1(config: ScenarioConfig, params: Dict[str, Any], report: Report) -> None:
    r, w = params["r"], params["w"]
    report.expected_ratio = (r + w) / (2 * r)
    failures: List[str] = []

    def inspect(instance: PnhInstance, distribution: OutcomeDistribution) -> None:
        costs = distribution.cost_probabilities()
        halves = set(costs) == {r, w} and all(abs(p - 0.5) <= EXACT_TOLERANCE for p in costs.values())
        mods = instance.partial_mods
        recurrence = True
        for branch in distribution.branches:
            y = guardian_answers(instance.symbols, branch.output)
            recurrence &= y[1] == y[0] ^ mods[0] and y[2] == y[1] ^ mods[1]
        if not (halves and recurrence):
            failures.append("".join(map(str, instance.symbols)))

    for pnh, instances, seed in _pnh_families(config, params):
        algorithm = alg1_quantum(pnh.k)
        evaluations = _evaluate(config, PnhProblem(pnh), algorithm, instances, seed, inspect=inspect)
        report.records.extend(_prefixed(evaluations, f"k={pnh.k}"))
        report.transcript[f"k={pnh.k}"] = _algorithm_summary(algorithm)
    if config.mode == "exact":
        report.check(
            "conditional-determinism",
            not failures,
            f"{len(failures)} instances without a 1/2-1/2 split of r and w or with a broken recurrence",
        )


@_register(
    "pnh-blind",
    "(r+7w)/(8r)",
    "memoryless blind guessing of the three guardian answers",
    PNH_DEFAULTS,
    supports_mc=True,
    instance_format="pnh",
)
def _run_pnh_blind(config: ScenarioConfig, params: Dict[str, Any], report: Report) -> None:
    r, w = params["r"], params["w"]
    expected = (r + 7 * w) / (8 * r)
    report.expected_ratio = expected
    shapes: List[bool] = []

    def inspect(instance: PnhInstance, distribution: OutcomeDistribution) -> None:
        right = [branch for branch in distribution.branches if branch.cost == r]
        shapes.append(len(distribution.branches) == 8 and len(right) == 1)

    for pnh, instances, seed in _pnh_families(config, params):
        algorithm = alg_blind_guess()
        evaluations = _evaluate(config, PnhProblem(pnh), algorithm, instances, seed, inspect=inspect)
        report.records.extend(_prefixed(evaluations, f"k={pnh.k}"))
    report.transcript["algorithm"] = _algorithm_summary(alg_blind_guess())
    tolerance = EXACT_TOLERANCE if config.mode == "exact" else MC_TOLERANCE
    report.check(
        "every-instance",
        all(abs(record.ratio - expected) <= tolerance for record in report.records),
        "each instance has ratio (r+7w)/(8r)",
    )
    if config.mode == "exact":
        report.check("eight-branches", all(shapes), "8 branches, exactly one of cost r")


@_register(
    "pnh-adversary",
    "w/r",
    "adaptive adversary against deterministic algorithms, plus fooling pairs for bounded readers",
    {"k": 1, "r": 1.0, "w": 3.0},
)
def _run_pnh_adversary(config: ScenarioConfig, params: Dict[str, Any], report: Report) -> None:
    pnh = PnhParams(params["k"], params["r"], params["w"])
    report.expected_ratio = pnh.w / pnh.r
    problem = PnhProblem(pnh)
    forced = []
    for strategy in deterministic_strategies():
        instance = adversary_unrestricted(strategy, pnh)
        (evaluation,) = strict_competitive_ratio(problem, strategy, [instance]).evaluations
        report.records.append(replace(evaluation, label=f"{strategy.name} {evaluation.label}"))
        forced.append(evaluation.expected_cost == pnh.w)
    report.check("forced-cost", all(forced), f"cost w against {len(forced)} deterministic strategies")

    length = 3 * pnh.unit
    readers = {
        "stateless": FiniteStateReader.stateless(),
        "ones-mod-2": FiniteStateReader.ones_counter(2),
        "full-counter": FiniteStateReader.ones_counter(2 * pnh.unit),
    }
    pairs = {name: fooling_pair_search(reader, pnh.k, length) for name, reader in readers.items()}
    report.extras["fooling_pairs"] = {
        name: list(pair) if pair else None for name, pair in pairs.items()
    }
    separating = "full-counter"
    fooled = all(
        partial_mod(pair[0], pnh.k) != partial_mod(pair[1], pnh.k)
        and readers[name].run(pair[0]) == readers[name].run(pair[1])
        for name, pair in pairs.items()
        if pair is not None
    )
    report.check(
        "fooling-pairs",
        pairs["stateless"] is not None and pairs[separating] is None and fooled,
        "stateless reader fooled, full counter separates parities",
    )


@_register(
    "pnh-advice1",
    "1",
    "one advice bit or one advice qubit (z_1) makes PNH optimal",
    PNH_DEFAULTS,
    supports_mc=True,
    instance_format="pnh",
)
def _run_pnh_advice(config: ScenarioConfig, params: Dict[str, Any], report: Report) -> None:
    report.expected_ratio = 1.0
    for pnh, instances, seed in _pnh_families(config, params):
        problem = PnhProblem(pnh)
        for label, algorithm in (
            ("bit", alg_advice_1bit(pnh.k)),
            ("qubit", alg_advice_1qubit(pnh.k)),
        ):
            evaluations = _evaluate(config, problem, algorithm, instances, seed, adviser=pnh_adviser)
            report.records.extend(_prefixed(evaluations, f"k={pnh.k} {label}"))
            summary = _algorithm_summary(algorithm)
            summary["advice"] = _advice_summary(algorithm, pnh_adviser, instances)
            report.transcript[label] = summary


@_register(
    "pnh-emulation",
    "same distribution",
    "randomized PNH algorithms rerun with a measured qubit in place of each random bit",
    PNH_DEFAULTS,
    instance_format="pnh",
)
def _run_pnh_emulation(config: ScenarioConfig, params: Dict[str, Any], report: Report) -> None:
    mismatches: List[str] = []
    compared = 0
    for pnh, instances, _ in _pnh_families(config, params):
        problem = PnhProblem(pnh)
        cases = [
            (alg_guess_count(pnh.k), None, {}),
            (alg_blind_guess(), None, {}),
            (alg_guess_count(pnh.k), None, {"pure": True}),
            (alg_blind_guess(), None, {"pure": True}),
            (alg_advice_1bit(pnh.k), pnh_adviser, {"advice_channel": ChannelKind.PRIVATE_QUBITS}),
        ]
        for base, adviser, options in cases:
            wrapped = wrap_randomized_as_quantum(base, **options)
            for instance in instances:
                original = run_game(problem, base, instance, "exact", adviser=adviser)
                emulated = run_game(problem, wrapped, instance, "exact", adviser=adviser)
                compared += 1
                if not distributions_match(original, emulated, tol=1e-12):
                    mismatches.append(f"{wrapped.name} on {problem.digest(instance)}")
            evaluations = strict_competitive_ratio(problem, wrapped, instances, adviser=adviser)
            tag = "pure " if options.get("pure") else ""
            report.records.extend(_prefixed(evaluations.evaluations, f"k={pnh.k} {tag}{wrapped.name}"))
            report.transcript[f"{tag}{wrapped.name}"] = _algorithm_summary(wrapped)
    report.check(
        "distributions-match",
        not mismatches,
        f"{compared - len(mismatches)}/{compared} emulated distributions equal to the originals",
    )


# PNEH ------------------------------------------------------------------------


def _pneh_instances(config: ScenarioConfig, block_length: int) -> List[PnehInstance]:
    if config.instances is not None:
        return load_pneh_instances(config.instances)
    return pneh_family(block_length, seed=config.seed)


@_register(
    "pneh-table1",
    "r(1-e)^2/2 + w((1-e^2)/2 + e)",
    "idealized equality-hats algorithm: all 64 probability/cost cells and per-pattern costs",
    {"epsilon": 0.25, "r": 1.0, "w": 3.0},
    instance_format="pneh",
)
def _run_pneh_table(config: ScenarioConfig, params: Dict[str, Any], report: Report) -> None:
    r, w, eps = params["r"], params["w"], params["epsilon"]
    summary = pneh_ratio_summary(r, w, eps)
    report.expected_ratio = summary["worst"]

    table = probability_table(r, w, eps)
    cell_errors = 0
    for pattern in PATTERNS:
        for outcome in PATTERNS:
            probability, cost = table[pattern][outcome]
            want_probability, want_cost = closed_form_cell(pattern, outcome, r, w, eps)
            if abs(probability - want_probability) > EXACT_TOLERANCE or cost != want_cost:
                cell_errors += 1
    report.check("cells", cell_errors == 0, f"{64 - cell_errors}/64 cells match")

    class_costs = {
        pattern: math.fsum(p * c for p, c in table[pattern].values()) for pattern in PATTERNS
    }
    report.check(
        "pattern-costs",
        all(
            abs(class_costs[p] - pneh_expected_cost_closed_form(p, r, w, eps)) <= EXACT_TOLERANCE
            for p in PATTERNS
        ),
        "table expected cost per EQ pattern equals the closed form",
    )

    problem = PnehProblem(PnehParams(r, w))
    algorithm = alg2_quantum(epsilon=eps)
    instances = [pattern_instance(pattern) for pattern in PATTERNS]
    instances += _pneh_instances(config, 4)
    evaluations = strict_competitive_ratio(problem, algorithm, instances).evaluations
    report.records.extend(evaluations)
    report.check(
        "family-costs",
        all(
            abs(e.expected_cost - pneh_expected_cost_closed_form(i.pattern, r, w, eps)) <= EXACT_TOLERANCE
            for e, i in zip(evaluations, instances)
        ),
        f"{len(instances)} instances follow the closed form of their EQ pattern",
    )
    report.transcript["algorithm"] = _algorithm_summary(algorithm)
    report.extras["table"] = {
        pattern: {outcome: list(cell) for outcome, cell in column.items()}
        for pattern, column in table.items()
    }
    report.extras["summary"] = summary


@_register(
    "pneh-fingerprint",
    "accept <= epsilon",
    "verified fingerprint coefficients and the real-fingerprint equality-hats algorithm",
    {"L": 12, "epsilon": 0.25, "t": 64, "retries": 10, "samples": 20, "r": 1.0, "w": 3.0},
    instance_format="pneh",
)
def _run_pneh_fingerprint(config: ScenarioConfig, params: Dict[str, Any], report: Report) -> None:
    fp = build_fingerprint_config(
        params["L"], params["epsilon"], params["t"], config.seed, retries=params["retries"]
    )
    verification = fp.verify()
    report.check(
        "verified",
        verification.passed,
        f"max accept {verification.max_accept:.6g} at D={verification.worst_distance} over {fp.q - 1} distances",
    )
    report.extras["config"] = fp.to_dict()
    report.extras["verification"] = {
        "max_accept": verification.max_accept,
        "worst_distance": verification.worst_distance,
        "distances": fp.q - 1,
    }

    rng = np.random.default_rng(derive_seeds(config.seed, 1)[0])
    equal_ok, unequal_ok = True, True
    for _ in range(params["samples"]):
        half = tuple(int(b) for b in rng.integers(0, 2, size=fp.L))
        equal_ok &= abs(fingerprint_accept_probability(fp, half + half) - 1.0) <= EXACT_TOLERANCE
        other = tuple(int(b) for b in rng.integers(0, 2, size=fp.L))
        if other == half:
            continue
        block = half + other
        simulated = fingerprint_accept_probability(fp, block)
        closed = fp.accept_probability(block_distance(fp, block))
        unequal_ok &= abs(simulated - closed) <= EXACT_TOLERANCE and simulated <= fp.epsilon + EXACT_TOLERANCE
    report.check("equal-halves", equal_ok, "equal halves are accepted with probability 1")
    report.check("unequal-halves", unequal_ok, "simulated accept matches the cosine average and stays <= epsilon")

    r, w = params["r"], params["w"]
    problem = PnehProblem(PnehParams(r, w))
    algorithm = alg2_quantum(fp)
    instances = _pneh_instances(config, fp.block_length)
    evaluations = strict_competitive_ratio(problem, algorithm, instances).evaluations
    report.records.extend(evaluations)
    report.check(
        "dominated-by-idealized",
        all(
            e.expected_cost <= pneh_expected_cost_closed_form(i.pattern, r, w, fp.epsilon) + EXACT_TOLERANCE
            for e, i in zip(evaluations, instances)
        ),
        "real-fingerprint cost never exceeds the idealized closed form",
    )
    report.transcript["algorithm"] = _algorithm_summary(algorithm)


# Advice transport ------------------------------------------------------------


@_register(
    "epr-advice",
    "ceil(b/2) qubits",
    "superdense coding over shared pairs carries b advice bits in ceil(b/2) qubits",
    {"max_bits": 64},
)
def _run_epr_advice(config: ScenarioConfig, params: Dict[str, Any], report: Report) -> None:
    pairs = ("00", "01", "10", "11")
    decoded = {bits: superdense_decode(apply_gates(make_epr_pair(), superdense_encode(bits))) for bits in pairs}
    report.check("pairs", all(decoded[bits] == bits for bits in pairs), "all four bit pairs round-trip")

    rng = np.random.default_rng(derive_seeds(config.seed, 1)[0])
    lossless, counted = 0, 0
    for length in range(params["max_bits"] + 1):
        bits = "".join(str(int(b)) for b in rng.integers(0, 2, size=length))
        receipt = advice_transmit(ChannelKind.SHARED_EPR, bits)
        lossless += receipt.bits == bits
        counted += receipt.transcript.qubits_sent == math.ceil(length / 2)
    total = params["max_bits"] + 1
    report.check("lossless", lossless == total, f"{lossless}/{total} advice strings recovered")
    report.check("qubit-count", counted == total, f"{counted}/{total} transcripts use ceil(b/2) qubits")
    report.transcript["strings"] = total


# Paging ----------------------------------------------------------------------


@_register(
    "paging-epr",
    "ceil(n/2) advice qubits",
    "optimal paging with n advice bits, delivered as ceil(n/2) qubits over shared pairs",
    {"count": 200, "max_pages": 8, "max_cache": 4, "max_length": 24, "brute_force_limit": 14},
    instance_format="paging",
)
def _run_paging(config: ScenarioConfig, params: Dict[str, Any], report: Report) -> None:
    if config.instances is not None:
        instances = load_paging_instances(config.instances)
    else:
        instances = random_paging_instances(
            params["count"],
            config.seed,
            max_pages=params["max_pages"],
            max_cache=params["max_cache"],
            max_length=params["max_length"],
        )
    report.expected_ratio = 1.0
    problem = PagingProblem()
    oracle_ok, channels_ok, transcript_ok = True, True, True
    expected_units = {
        ChannelKind.CLASSICAL_BITS: lambda n: n,
        ChannelKind.PRIVATE_QUBITS: lambda n: n,
        ChannelKind.SHARED_EPR: lambda n: math.ceil(n / 2),
    }
    units: Dict[str, int] = {channel.value: 0 for channel in expected_units}
    # faults include cold fills; evictions do not
    faults_total, evictions_total, evictions_ok = 0, 0, True
    for instance in instances:
        run = belady(instance)
        optimum = run.fault_count
        faults_total += optimum
        evictions_total += run.evicted_count
        if len(instance) <= params["brute_force_limit"]:
            oracle_ok &= brute_force_min_faults(instance) == optimum
        for channel, expected in expected_units.items():
            algorithm = alg_paging_with_advice(instance.cache_size, channel)
            distribution = run_game(problem, algorithm, instance, "exact", adviser=paging_adviser)
            faults = expected_cost(distribution)
            channels_ok &= faults == optimum
            transcript_ok &= distribution.transcript.advice_units == expected(len(instance))
            units[channel.value] += distribution.transcript.advice_units
            if channel is ChannelKind.SHARED_EPR:
                (branch,) = distribution.branches
                evicted = sum(1 for answer in branch.output if answer != NO_EVICTION)
                evictions_ok &= evicted == run.evicted_count
                report.records.append(
                    InstanceEvaluation(
                        label=problem.describe(instance)[:48],
                        digest=problem.digest(instance),
                        expected_cost=faults,
                        opt_cost=float(optimum),
                        branch_count=len(distribution.branches),
                    )
                )
    report.check("oracle", oracle_ok, "Belady equals the brute-force optimum on short instances")
    report.check("advice-optimal", channels_ok, "advice faults equal Belady on every channel")
    report.check("advice-units", transcript_ok, "n bits, n qubits and ceil(n/2) shared-pair qubits")
    report.check("evictions", evictions_ok, "advice evictions equal Belady evictions")
    report.transcript["advice_units_total"] = units
    report.transcript["faults_total"] = faults_total
    report.transcript["evictions_total"] = evictions_total


__all__ = [
    "Check",
    "DEFAULT_TRIALS",
    "EXACT_TOLERANCE",
    "MC_TOLERANCE",
    "Report",
    "SCENARIOS",
    "SCHEMA_VERSION",
    "Scenario",
    "ScenarioConfig",
    "get_scenario",
    "list_scenarios",
    "resolve_params",
    "run_scenario",
]
