"""k-partition transformations, piecewise-constant schedules and set counting."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .errors import DomainError

#: Largest n for which the counting helpers are defined; Bell(20) < 2**63.
MAX_COUNT_N = 20


@dataclass(frozen=True)
class PartitionTransform:
    """Diagonal terms ``s_1..s_N`` of a k-partition transformation.

    Followers sharing a term (compared exactly, no tolerance) land in the
    same set of the induced partition.
    """

    terms: tuple[float, ...]

    def __post_init__(self):
        terms = tuple(float(s) for s in self.terms)
        if not terms:
            raise ValueError("a partition transformation needs at least one term")
        object.__setattr__(self, "terms", terms)

    @property
    def n(self) -> int:
        return len(self.terms)

    @property
    def k(self) -> int:
        return len(set(self.terms))

    def __getitem__(self, i: int) -> float:
        return self.terms[i]


def partition_sets(p: PartitionTransform) -> list[list[int]]:
    """Group zero-based follower indices by equal term.

    Sets are ordered by the first occurrence of their term.
    """
    groups: dict[float, list[int]] = {}
    for i, s in enumerate(p.terms):
        groups.setdefault(s, []).append(i)
    return list(groups.values())


def is_gauge(p: PartitionTransform) -> bool:
    return all(s == 1.0 or s == -1.0 for s in p.terms)


@dataclass(frozen=True)
class PartitionSchedule:
    """Piecewise-constant transformation: segment ``k`` is ``[t_k, t_{k+1})``."""

    segments: tuple[tuple[float, PartitionTransform], ...]
    horizon: float

    def __post_init__(self):
        segs = tuple((float(t), p) for t, p in self.segments)
        if not segs:
            raise ValueError("schedule needs at least one segment")
        if segs[0][0] != 0.0:
            raise ValueError("first segment must start at t=0")
        for (t0, _), (t1, _) in zip(segs, segs[1:]):
            if not t1 > t0:
                raise ValueError("segment start times must be strictly increasing")
        n = segs[0][1].n
        if any(p.n != n for _, p in segs):
            raise ValueError("all transformations in a schedule must have the same size")
        if not float(self.horizon) > segs[-1][0]:
            raise ValueError("horizon must lie after the last segment start")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "horizon", float(self.horizon))

    @classmethod
    def constant(cls, terms: Sequence[float], horizon: float) -> "PartitionSchedule":
        return cls(((0.0, PartitionTransform(tuple(terms))),), horizon)

    @property
    def n(self) -> int:
        return self.segments[0][1].n

    def at(self, t: float) -> PartitionTransform:
        active = self.segments[0][1]
        for start, p in self.segments:
            if start <= t:
                active = p
        return active


def _check_count_domain(n: int, k: int | None = None) -> None:
    if not 1 <= n <= MAX_COUNT_N:
        raise DomainError(f"n must be in [1, {MAX_COUNT_N}], got {n}")
    if k is not None and not 1 <= k <= n:
        raise DomainError(f"k must be in [1, n={n}], got {k}")


@lru_cache(maxsize=None)
def _stirling2(n: int, k: int) -> int:
    if k == 1 or k == n:
        return 1
    return k * _stirling2(n - 1, k) + _stirling2(n - 1, k - 1)


def stirling2(n: int, k: int) -> int:
    """Number of ways to split an n-set into k nonempty blocks."""
    _check_count_domain(n, k)
    return _stirling2(n, k)


def bell(n: int) -> int:
    """Number of partitions of an n-set."""
    _check_count_domain(n)
    return sum(_stirling2(n, k) for k in range(1, n + 1))
