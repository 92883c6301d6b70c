"""Controller synthesis for the feedforward distributed control law.

Each follower runs::

    eta_i' = A0 eta_i + mu * (sum_j |a_ij| (eta_j - eta_i) + f_i (v - eta_i))
    u_i    = K1_i x_i + K2_i eta_i

Two routes produce ``K2_i``.  The partition-dependent route solves the
regulator equations at each follower's own term ``s_i``; the
partition-independent route solves them once at ``s = 1`` together with
the matched-disturbance equation ``[B; D] Y = [E; G]`` and rescales the
solution for any ``s_i`` without further solves.
"""

from __future__ import annotations

import enum
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import solve
from .errors import ConditionFailed, Failure, Infeasible, NotStabilizable
from .graph import h_matrix, has_spanning_tree
from .partition import PartitionTransform
from .plant import MasModel, exosystem_antistable, validate


class Strategy(str, enum.Enum):
    PARTITION_DEPENDENT = "one"
    PARTITION_INDEPENDENT = "two"


# condition names used in failure reports and diagnostics
STABILIZABLE = "stabilizable"
REGULATOR = "regulator"                    # equations at the follower's own term
REGULATOR_INDEPENDENT = "regulator_unit"   # equations at s = 1
MATCHED = "matched_disturbance"            # [B; D] Y = [E; G] solvable
SPANNING_TREE = "spanning_tree"
LEADER_ANTISTABLE = "leader_antistable"    # informational only


@dataclass(frozen=True)
class DesignOptions:
    mu_min: float = 1.0
    mu_rel_margin: float = 0.1
    mu_abs_margin: float = 0.01
    q_scale: float = 1.0
    r_scale: float = 1.0
    workers: int | None = None


@dataclass(frozen=True, eq=False)
class FollowerDesign:
    """Gains for one follower.

    For the partition-independent strategy ``x``/``u`` solve the equations at
    ``s = 1`` and ``y`` the matched-disturbance equation; ``x_tilde`` and
    ``u_tilde`` are the pair actually used for ``k2`` at the current term.
    For the partition-dependent strategy ``x_tilde is x`` and ``y`` is None.
    """

    k1: np.ndarray
    k2: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray | None
    x_tilde: np.ndarray
    u_tilde: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class ControllerDesign:
    strategy: Strategy
    mu: float
    mu_bound: float
    terms: PartitionTransform
    followers: tuple[FollowerDesign, ...]
    solver_calls: dict = field(default_factory=dict, compare=False)

    @property
    def k1(self) -> list[np.ndarray]:
        return [f.k1 for f in self.followers]

    @property
    def k2(self) -> list[np.ndarray]:
        return [f.k2 for f in self.followers]


def theorem2_pair(x, u, y, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Regulator pair for term ``s`` built from the ``s = 1`` pair and ``Y``.

    ``x_tilde = s X`` and ``u_tilde = s (U + Y) - Y``.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    return s * x, s * (u + y) - y


def choose_mu(bound: float, opts: DesignOptions) -> float:
    return max(bound * (1.0 + opts.mu_rel_margin) + opts.mu_abs_margin, opts.mu_min)


def _map(fn: Callable, items: Sequence, workers: int | None) -> list:
    if workers and workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _check_model(model: MasModel, p: PartitionTransform) -> None:
    problems = validate(model)
    if p.n != model.n_followers:
        problems.append(f"partition has {p.n} terms for {model.n_followers} followers")
    if problems:
        raise ValueError("invalid model: " + "; ".join(problems))


def _observer_coupling(model: MasModel, opts: DesignOptions) -> tuple[float, float]:
    bound = solve.mu_lower_bound(model.exosystem, h_matrix(model.graph))
    return choose_mu(bound, opts), bound


def _warn_leader(model: MasModel) -> None:
    if not exosystem_antistable(model.exosystem):
        warnings.warn(
            "leader has modes in the open left half plane; the solvability "
            "conditions are sufficient but no longer necessary",
            stacklevel=3,
        )


def _gain_or_failure(fm, i, opts):
    try:
        return solve.stabilizing_gain(fm.a, fm.b, opts.q_scale, opts.r_scale), None
    except NotStabilizable as exc:
        return None, Failure(STABILIZABLE, i, str(exc))


def design_strategy_one(model: MasModel, p: PartitionTransform,
                        opts: DesignOptions = DesignOptions()) -> ControllerDesign:
    """Partition-dependent design: regulator equations solved at each ``s_i``.

    Raises
    ------
    ConditionFailed
        Listing every violated condition (stabilizability, regulator
        equations at ``s_i``, spanning tree).
    """
    _check_model(model, p)
    _warn_leader(model)
    exo = model.exosystem
    failures = []
    if not has_spanning_tree(model.graph):
        failures.append(Failure(SPANNING_TREE))

    def per_follower(i):
        fm = model.followers[i]
        fails = []
        k1, fail = _gain_or_failure(fm, i, opts)
        if fail:
            fails.append(fail)
        try:
            sol = solve.solve_regulator(fm, exo, p[i])
        except Infeasible as exc:
            sol = None
            fails.append(Failure(REGULATOR, i, str(exc)))
        return k1, sol, fails

    results = _map(per_follower, range(model.n_followers), opts.workers)
    for _, _, fails in results:
        failures.extend(fails)
    if failures:
        raise ConditionFailed(failures)

    mu, bound = _observer_coupling(model, opts)
    followers = tuple(
        FollowerDesign(k1=k1, k2=sol.u - k1 @ sol.x, x=sol.x, u=sol.u, y=None,
                       x_tilde=sol.x, u_tilde=sol.u, residual=sol.residual)
        for k1, sol, _ in results
    )
    return ControllerDesign(Strategy.PARTITION_DEPENDENT, mu, bound, p, followers,
                            {"regulator": model.n_followers, "lme": 0})


def design_strategy_two(model: MasModel, p: PartitionTransform,
                        opts: DesignOptions = DesignOptions()) -> ControllerDesign:
    """Partition-independent design: one regulator solve at ``s = 1`` and one
    matched-disturbance solve per follower, rescaled to each ``s_i``.

    Raises
    ------
    ConditionFailed
        Listing every violated condition (stabilizability, regulator
        equations at ``s = 1``, matched-disturbance equation, spanning tree).
    """
    _check_model(model, p)
    _warn_leader(model)
    exo = model.exosystem
    failures = []
    if not has_spanning_tree(model.graph):
        failures.append(Failure(SPANNING_TREE))

    def per_follower(i):
        fm = model.followers[i]
        fails = []
        k1, fail = _gain_or_failure(fm, i, opts)
        if fail:
            fails.append(fail)
        try:
            sol = solve.solve_regulator(fm, exo, 1.0)
        except Infeasible as exc:
            sol = None
            fails.append(Failure(REGULATOR_INDEPENDENT, i, str(exc)))
        lme = solve.solve_lme(fm)
        if not lme.feasible:
            fails.append(Failure(MATCHED, i, f"residual {lme.residual:.3e}"))
        return k1, sol, lme, fails

    results = _map(per_follower, range(model.n_followers), opts.workers)
    for *_, fails in results:
        failures.extend(fails)
    if failures:
        raise ConditionFailed(failures)

    mu, bound = _observer_coupling(model, opts)
    followers = []
    for i, (k1, sol, lme, _) in enumerate(results):
        xt, ut = theorem2_pair(sol.x, sol.u, lme.y, p[i])
        followers.append(FollowerDesign(k1=k1, k2=ut - k1 @ xt, x=sol.x, u=sol.u, y=lme.y,
                                        x_tilde=xt, u_tilde=ut, residual=sol.residual))
    return ControllerDesign(Strategy.PARTITION_INDEPENDENT, mu, bound, p, tuple(followers),
                            {"regulator": model.n_followers, "lme": model.n_followers})


def design(model: MasModel, p: PartitionTransform, strategy: Strategy | str,
           opts: DesignOptions = DesignOptions()) -> ControllerDesign:
    if Strategy(strategy) is Strategy.PARTITION_DEPENDENT:
        return design_strategy_one(model, p, opts)
    return design_strategy_two(model, p, opts)


def retarget(d: ControllerDesign, p_new: PartitionTransform, model: MasModel) -> ControllerDesign:
    """Recompute the feedforward gains for new partition terms.

    ``K1`` and ``mu`` are kept.  The partition-independent strategy only
    rescales its stored solutions; the partition-dependent one re-solves the
    regulator equations for every follower whose term changed.
    """
    if p_new.n != len(d.followers):
        raise ValueError(f"partition has {p_new.n} terms for {len(d.followers)} followers")
    if p_new == d.terms:
        return d
    calls = dict(d.solver_calls)
    followers = list(d.followers)
    if d.strategy is Strategy.PARTITION_INDEPENDENT:
        for i, fd in enumerate(followers):
            if p_new[i] == d.terms[i]:
                continue
            xt, ut = theorem2_pair(fd.x, fd.u, fd.y, p_new[i])
            followers[i] = replace(fd, k2=ut - fd.k1 @ xt, x_tilde=xt, u_tilde=ut)
    else:
        failures = []
        for i, fd in enumerate(followers):
            if p_new[i] == d.terms[i]:
                continue
            calls["regulator"] = calls.get("regulator", 0) + 1
            try:
                sol = solve.solve_regulator(model.followers[i], model.exosystem, p_new[i])
            except Infeasible as exc:
                failures.append(Failure(REGULATOR, i, str(exc)))
                continue
            followers[i] = replace(fd, k2=sol.u - fd.k1 @ sol.x, x=sol.x, u=sol.u,
                                   x_tilde=sol.x, u_tilde=sol.u, residual=sol.residual)
        if failures:
            raise ConditionFailed(failures)
    return replace(d, terms=p_new, followers=tuple(followers), solver_calls=calls)


def closed_loop_certificates(model: MasModel, d: ControllerDesign) -> dict:
    """Largest real part of each ``A_i + B_i K1_i`` and of the observer matrix."""
    follower_re = [
        float(np.max(np.linalg.eigvals(fm.a + fm.b @ fd.k1).real))
        for fm, fd in zip(model.followers, d.followers)
    ]
    obs = solve.observer_matrix(model.exosystem, model.graph, d.mu)
    return {
        "follower_max_real": follower_re,
        "observer_max_real": float(np.max(np.linalg.eigvals(obs).real)),
        "all_hurwitz": all(solve.is_hurwitz(fm.a + fm.b @ fd.k1)
                           for fm, fd in zip(model.followers, d.followers))
        and solve.is_hurwitz(obs),
    }
