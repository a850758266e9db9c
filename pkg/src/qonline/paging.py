"""Paging with an optimal one-bit-per-request advice scheme.

The cost of a run is its fault count. Answers of a paging algorithm are the
id of the page evicted while serving the request, or 0 when nothing is evicted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, ProtocolError, ValidationError
from .game import (
    AdviceReceipt,
    AlgorithmKind,
    ChannelKind,
    ExecutionContext,
    OnlineAlgorithm,
    OnlineProblem,
    Resources,
)

logger = logging.getLogger(__name__)

NO_EVICTION = 0


@dataclass(frozen=True)
class PagingInstance:
    num_pages: int
    cache_size: int
    requests: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "requests", tuple(int(page) for page in self.requests))
        if self.num_pages < 2:
            raise ValidationError(f"need at least two pages, got N={self.num_pages}")
        if not 1 <= self.cache_size < self.num_pages:
            raise ValidationError(
                f"cache size must satisfy 1 <= cache_size < N, got {self.cache_size} with N={self.num_pages}"
            )
        if not self.requests:
            raise ValidationError("a paging instance needs at least one request")
        bad = [page for page in self.requests if not 1 <= page <= self.num_pages]
        if bad:
            raise ValidationError(f"requests out of range [1, {self.num_pages}]: {bad}")

    def __len__(self) -> int:
        return len(self.requests)


@dataclass(frozen=True)
class PagingRun:
    fault_count: int
    # (step, evicted page) for every eviction
    evictions: Tuple[Tuple[int, int], ...]
    final_cache: Tuple[int, ...]
    answers: Tuple[int, ...] = field(default=(), repr=False)

    @property
    def evicted_count(self) -> int:
        return len(self.evictions)


def next_uses(requests: Sequence[int]) -> List[float]:
    """Index of the next request for the same page, ``inf`` if there is none."""

    upcoming: List[float] = [math.inf] * len(requests)
    last_seen: Dict[int, int] = {}
    for index in reversed(range(len(requests))):
        page = requests[index]
        upcoming[index] = last_seen.get(page, math.inf)
        last_seen[page] = index
    return upcoming


def belady(instance: PagingInstance) -> PagingRun:
    """Evict the cached page requested farthest in the future (smallest id on ties)."""

    upcoming = next_uses(instance.requests)
    cache: Dict[int, float] = {}
    faults = 0
    evictions: List[Tuple[int, int]] = []
    answers: List[int] = []
    for step, page in enumerate(instance.requests):
        if page in cache:
            cache[page] = upcoming[step]
            answers.append(NO_EVICTION)
            continue
        faults += 1
        evicted = NO_EVICTION
        if len(cache) >= instance.cache_size:
            evicted = max(cache, key=lambda cached: (cache[cached], -cached))
            del cache[evicted]
            evictions.append((step, evicted))
        cache[page] = upcoming[step]
        answers.append(evicted)
    return PagingRun(faults, tuple(evictions), tuple(sorted(cache)), tuple(answers))


def paging_advice_bits(instance: PagingInstance) -> str:
    """Bit ``i`` is 1 iff Belady keeps the page of request ``i`` cached until its next request."""

    upcoming = next_uses(instance.requests)
    run = belady(instance)
    evicted_at: Dict[int, List[int]] = {}
    for step, page in run.evictions:
        evicted_at.setdefault(page, []).append(step)
    bits = []
    for step, page in enumerate(instance.requests):
        following = upcoming[step]
        if math.isinf(following):
            bits.append("0")
            continue
        kept = not any(step < when < following for when in evicted_at.get(page, ()))
        bits.append("1" if kept else "0")
    return "".join(bits)


def paging_adviser(instance: PagingInstance) -> str:
    return paging_advice_bits(instance)


def brute_force_min_faults(instance: PagingInstance) -> int:
    """Minimum fault count over every eviction schedule."""

    requests = instance.requests
    capacity = instance.cache_size

    @lru_cache(maxsize=None)
    def solve(step: int, cache: FrozenSet[int]) -> int:
        if step == len(requests):
            return 0
        page = requests[step]
        if page in cache:
            return solve(step + 1, cache)
        if len(cache) < capacity:
            return 1 + solve(step + 1, cache | {page})
        return 1 + min(solve(step + 1, (cache - {victim}) | {page}) for victim in cache)

    return solve(0, frozenset())


def replay_faults(instance: PagingInstance, answers: Sequence[int]) -> int:
    """Fault count of an answer sequence; infeasible answers raise :class:`ValidationError`."""

    if len(answers) != len(instance):
        raise ValidationError(f"{len(answers)} answers for {len(instance)} requests")
    cache: set = set()
    faults = 0
    for step, (page, evicted) in enumerate(zip(instance.requests, answers)):
        if page in cache:
            if evicted != NO_EVICTION:
                raise ValidationError(f"step {step}: evicted page {evicted} on a hit")
            continue
        faults += 1
        if len(cache) < instance.cache_size:
            if evicted != NO_EVICTION:
                raise ValidationError(f"step {step}: evicted page {evicted} with free space")
        elif evicted not in cache:
            raise ValidationError(f"step {step}: page {evicted} is not cached and cannot be evicted")
        else:
            cache.discard(evicted)
        cache.add(page)
    return faults


class PagingProblem(OnlineProblem):
    name = "paging"

    def validate(self, instance: PagingInstance) -> None:
        if not isinstance(instance, PagingInstance):
            raise ValidationError(f"expected a PagingInstance, got {type(instance).__name__}")

    def requests(self, instance: PagingInstance) -> Sequence[int]:
        return instance.requests

    def cost(self, instance: PagingInstance, output: Sequence[int]) -> float:
        return float(replay_faults(instance, output))

    def opt_cost(self, instance: PagingInstance) -> float:
        return float(belady(instance).fault_count)

    def describe(self, instance: PagingInstance) -> str:
        return format_paging_instance(instance).replace("\n", "|")


@dataclass(frozen=True)
class _AdviceState:
    advice: str
    position: int
    # page -> keep flag from the advice bit of its latest request
    cache: Tuple[Tuple[int, int], ...]


class PagingWithAdvice(OnlineAlgorithm):
    """Evicts the smallest unflagged page; a page is flagged by the advice bit of its last request."""

    kind = AlgorithmKind.DETERMINISTIC
    resources = Resources()

    def __init__(self, cache_size: int, channel: ChannelKind = ChannelKind.CLASSICAL_BITS) -> None:
        if cache_size < 1:
            raise ConfigurationError(f"cache size must be positive, got {cache_size}")
        self.cache_size = cache_size
        self.advice_channel = ChannelKind(channel)
        self.name = f"paging-advice[{self.advice_channel.value}]"

    def start(self, ctx: ExecutionContext, advice: Optional[AdviceReceipt]) -> _AdviceState:
        if advice is None:
            raise ProtocolError("paging with advice started without advice")
        return _AdviceState(advice.bits, 0, ())

    def step(
        self, ctx: ExecutionContext, request: int, state: _AdviceState
    ) -> Tuple[int, _AdviceState]:
        if state.position >= len(state.advice):
            raise ProtocolError(f"advice has {len(state.advice)} bits but more requests arrived")
        flag = int(state.advice[state.position])
        cache = dict(state.cache)
        evicted = NO_EVICTION
        if request not in cache and len(cache) >= self.cache_size:
            unflagged = sorted(page for page, keep in cache.items() if not keep)
            evicted = unflagged[0] if unflagged else min(cache)
            if not unflagged:
                logger.warning("every cached page is flagged; evicting page %d", evicted)
            del cache[evicted]
        cache[request] = flag
        return evicted, _AdviceState(state.advice, state.position + 1, tuple(sorted(cache.items())))

    def finish(self, ctx: ExecutionContext, state: _AdviceState) -> None:
        if state.position != len(state.advice):
            raise ProtocolError(
                f"advice has {len(state.advice)} bits for {state.position} requests"
            )


def alg_paging_with_advice(
    cache_size: int, channel: ChannelKind = ChannelKind.CLASSICAL_BITS
) -> PagingWithAdvice:
    return PagingWithAdvice(cache_size, channel)


def parse_paging_instance(text: str) -> PagingInstance:
    """``"N cache_size"`` on the first line, request ids on the second."""

    lines = [line.strip() for line in text.strip().splitlines() if line.strip()]
    if len(lines) != 2:
        raise ValidationError(f"paging instance needs two lines, got {len(lines)}")
    try:
        header = [int(field_) for field_ in lines[0].split()]
        requests = tuple(int(field_) for field_ in lines[1].split())
    except ValueError as exc:
        raise ValidationError(f"paging instance fields must be integers: {exc}") from exc
    if len(header) != 2:
        raise ValidationError(f"header must be 'N cache_size', got {lines[0]!r}")
    return PagingInstance(header[0], header[1], requests)


def parse_paging_instances(text: str) -> List[PagingInstance]:
    """Instances separated by blank lines; ``#`` starts a comment."""

    instances: List[PagingInstance] = []
    chunk: List[str] = []
    for raw in text.splitlines() + [""]:
        line = raw.split("#", 1)[0].strip()
        if line:
            chunk.append(line)
        elif chunk:
            instances.append(parse_paging_instance("\n".join(chunk)))
            chunk = []
    return instances


def format_paging_instance(instance: PagingInstance) -> str:
    return f"{instance.num_pages} {instance.cache_size}\n" + " ".join(map(str, instance.requests))


def random_paging_instances(
    count: int,
    seed: Optional[int] = 0,
    *,
    max_pages: int = 8,
    max_cache: int = 4,
    max_length: int = 24,
) -> List[PagingInstance]:
    rng = np.random.default_rng(seed)
    instances = []
    for _ in range(count):
        num_pages = int(rng.integers(2, max_pages + 1))
        cache_size = int(rng.integers(1, min(max_cache, num_pages - 1) + 1))
        length = int(rng.integers(1, max_length + 1))
        requests = tuple(int(page) for page in rng.integers(1, num_pages + 1, size=length))
        instances.append(PagingInstance(num_pages, cache_size, requests))
    return instances


__all__ = [
    "NO_EVICTION",
    "PagingInstance",
    "PagingProblem",
    "PagingRun",
    "PagingWithAdvice",
    "alg_paging_with_advice",
    "belady",
    "brute_force_min_faults",
    "format_paging_instance",
    "next_uses",
    "paging_advice_bits",
    "paging_adviser",
    "parse_paging_instance",
    "parse_paging_instances",
    "random_paging_instances",
    "replay_faults",
]
