"""Timing of the partition-dependent steps of both design strategies.

For a set of ``M`` partition terms, the partition-dependent strategy solves
the regulator equations once per term; the partition-independent one
rescales a stored solution.  Both then form ``K2 = U - K1 X``.  The one-off
solves the second strategy needs up front are timed separately.
"""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import solve
from .errors import Infeasible, NotApplicable, NotStabilizable
from .plant import Exosystem, FollowerModel
from .synth import theorem2_pair

DEFAULT_SEED = 20240613
TERM_RANGE = (-3.0, 3.0)


@dataclass
class BenchReport:
    term_counts: list[int]
    elapsed_one: list[float]
    elapsed_two: list[float]
    solver_calls_one: int
    solver_calls_two: int
    setup_two: float = 0.0
    setup_calls_two: int = 0
    repetitions: int = 0
    seed: int | None = None
    spot_check_residual: float = 0.0
    extra: dict = field(default_factory=dict)

    def speedup(self, m: int | None = None) -> float:
        if not self.term_counts:
            return float("nan")
        idx = -1 if m is None else self.term_counts.index(m)
        return self.elapsed_one[idx] / self.elapsed_two[idx]

    def as_dict(self) -> dict:
        out = asdict(self)
        out["speedup"] = self.speedup() if self.term_counts else None
        return out


def random_terms(count: int, seed: int = DEFAULT_SEED) -> list[float]:
    rng = np.random.default_rng(seed)
    return rng.uniform(*TERM_RANGE, size=count).tolist()


def _strategy_one_pass(fm, exo, k1, terms) -> np.ndarray:
    stamps = np.empty(len(terms))
    start = time.perf_counter()
    for j, s in enumerate(terms):
        sol = solve.solve_regulator(fm, exo, s)
        sol.u - k1 @ sol.x
        stamps[j] = time.perf_counter()
    return stamps - start


def _strategy_two_pass(x, u, y, k1, terms) -> np.ndarray:
    stamps = np.empty(len(terms))
    start = time.perf_counter()
    for j, s in enumerate(terms):
        xt, ut = theorem2_pair(x, u, y, s)
        ut - k1 @ xt
        stamps[j] = time.perf_counter()
    return stamps - start


def run_benchmark(fm: FollowerModel, exo: Exosystem, terms: Sequence[float],
                  repetitions: int = 5, seed: int | None = None, spot_checks: int = 10) -> BenchReport:
    """Cumulative elapsed time of both strategies after each of the first ``M`` terms.

    Each repetition walks the full term list once per strategy and records a
    monotonic timestamp after every term; the report holds the per-``M``
    median across repetitions.

    Raises
    ------
    NotApplicable
        If either strategy cannot handle the follower or one of the terms.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    terms = [float(s) for s in terms]
    try:
        k1 = solve.stabilizing_gain(fm.a, fm.b)
    except NotStabilizable as exc:
        raise NotApplicable(str(exc)) from exc

    t0 = time.perf_counter()
    calls0 = solve.solve_counter.total()
    try:
        base = solve.solve_regulator(fm, exo, 1.0)
    except Infeasible as exc:
        raise NotApplicable(f"regulator equations at s=1: {exc}") from exc
    lme = solve.solve_lme(fm)
    setup = time.perf_counter() - t0
    setup_calls = solve.solve_counter.total() - calls0
    if not lme.feasible:
        raise NotApplicable(f"matched-disturbance equation infeasible (residual {lme.residual:.3e})")

    if not terms:
        return BenchReport([], [], [], 0, 0, setup, setup_calls, repetitions, seed)

    one_runs, two_runs = [], []
    calls_one = calls_two = 0
    for _ in range(repetitions):
        c0 = solve.solve_counter.total()
        try:
            one_runs.append(_strategy_one_pass(fm, exo, k1, terms))
        except Infeasible as exc:
            raise NotApplicable(f"regulator equations infeasible for a term: {exc}") from exc
        c1 = solve.solve_counter.total()
        two_runs.append(_strategy_two_pass(base.x, base.u, lme.y, k1, terms))
        c2 = solve.solve_counter.total()
        calls_one, calls_two = c1 - c0, c2 - c1

    rng = np.random.default_rng(0 if seed is None else seed)
    picks = rng.choice(len(terms), size=min(spot_checks, len(terms)), replace=False)
    worst = 0.0
    for j in picks:
        s = terms[j]
        sol = solve.solve_regulator(fm, exo, s)
        xt, ut = theorem2_pair(base.x, base.u, lme.y, s)
        worst = max(worst, sol.residual, solve.regulator_residual(fm, exo, s, xt, ut))

    return BenchReport(
        term_counts=list(range(1, len(terms) + 1)),
        elapsed_one=np.median(np.vstack(one_runs), axis=0).tolist(),
        elapsed_two=np.median(np.vstack(two_runs), axis=0).tolist(),
        solver_calls_one=calls_one,
        solver_calls_two=calls_two,
        setup_two=setup,
        setup_calls_two=setup_calls,
        repetitions=repetitions,
        seed=seed,
        spot_check_residual=worst,
    )


def write_csv(report: BenchReport, path) -> None:
    """Columns ``M, elapsed_one_s, elapsed_two_s, calls_one, calls_two``.

    Call counts are per prefix: the first strategy makes one solve per term,
    the second none.
    """
    per_term_one = report.solver_calls_one // len(report.term_counts) if report.term_counts else 0
    per_term_two = report.solver_calls_two // len(report.term_counts) if report.term_counts else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["M", "elapsed_one_s", "elapsed_two_s", "calls_one", "calls_two"])
        for m, one, two in zip(report.term_counts, report.elapsed_one, report.elapsed_two):
            w.writerow([m, repr(one), repr(two), m * per_term_one, m * per_term_two])
