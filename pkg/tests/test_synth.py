import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morp import solve
from morp.errors import ConditionFailed
from morp.graph import SignedDigraph
from morp.partition import PartitionTransform
from morp.plant import Exosystem, FollowerModel, MasModel
from morp.scenario import load_scenario
from morp.synth import (MATCHED, REGULATOR, REGULATOR_INDEPENDENT, SPANNING_TREE, STABILIZABLE,
                        DesignOptions, Strategy, choose_mu, closed_loop_certificates, design,
                        retarget, theorem2_pair)

from randmodels import data_norm, feasible_unit_instance, spanning_graph


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5))
def test_rescaled_pair_solves_regulator_equations(seed, s):
    fm, exo, x, u, y = feasible_unit_instance(np.random.default_rng(seed))
    xt, ut = theorem2_pair(x, u, y, s)
    assert solve.regulator_residual(fm, exo, s, xt, ut) <= 1e-9 * (1 + data_norm(fm, exo))


def test_rescaled_pair_at_unit_term_is_identity():
    x, u, y = np.ones((2, 1)), np.full((1, 1), 3.0), np.full((1, 1), -1.0)
    xt, ut = theorem2_pair(x, u, y, 1.0)
    assert np.array_equal(xt, x) and np.array_equal(ut, u)


def test_choose_mu():
    assert choose_mu(0.0, DesignOptions()) == 1.0
    assert choose_mu(10.0, DesignOptions()) == pytest.approx(11.01)
    assert choose_mu(0.5, DesignOptions(mu_min=10.0)) == 10.0


@pytest.fixture(scope="module")
def exp1():
    return load_scenario("experiment1")


def test_three_followers_partition_independent(exp1):
    p = exp1.schedule.segments[0][1]
    d = design(exp1.model, p, "two", exp1.options)
    assert d.mu == 10.0 and d.mu_bound == 0.0
    assert d.solver_calls == {"regulator": 3, "lme": 3}
    gamma = exp1.model.exosystem.a0
    for i, fd in enumerate(d.followers):
        assert np.allclose(fd.y, 0.0)
        assert np.allclose(fd.x, np.vstack([np.eye(2), gamma]), atol=1e-12)
        assert np.allclose(fd.x_tilde, p[i] * fd.x)
    assert closed_loop_certificates(exp1.model, d)["all_hurwitz"]


def test_strategies_agree_on_unique_solutions(exp1):
    p = exp1.schedule.segments[0][1]
    one = design(exp1.model, p, Strategy.PARTITION_DEPENDENT, exp1.options)
    two = design(exp1.model, p, Strategy.PARTITION_INDEPENDENT, exp1.options)
    for a, b in zip(one.followers, two.followers):
        assert np.array_equal(a.k1, b.k1)
        assert np.allclose(a.k2, b.k2, atol=1e-12)


def test_retarget_partition_independent_makes_no_solves(exp1):
    p = exp1.schedule.segments[0][1]
    q = exp1.schedule.segments[1][1]
    d = design(exp1.model, p, "two", exp1.options)
    assert retarget(d, p, exp1.model) is d
    before = solve.solve_counter.total()
    r = retarget(d, q, exp1.model)
    assert solve.solve_counter.total() == before
    fresh = design(exp1.model, q, "two", exp1.options)
    for a, b in zip(r.followers, fresh.followers):
        assert np.allclose(a.k2, b.k2, atol=1e-12)
    assert r.terms == q and r.solver_calls == d.solver_calls


def test_retarget_partition_dependent_resolves_changed_terms(exp1):
    p = exp1.schedule.segments[0][1]
    d = design(exp1.model, p, "one", exp1.options)
    q = PartitionTransform((p[0], 9.0, p[2]))
    before = solve.solve_counter.total()
    r = retarget(d, q, exp1.model)
    assert solve.solve_counter.total() - before == 1
    assert r.solver_calls["regulator"] == d.solver_calls["regulator"] + 1
    assert r.followers[0] is d.followers[0]
    assert np.allclose(r.followers[1].x, 9.0 * d.followers[1].x / p[1], atol=1e-12)


def test_threads_give_same_design(exp1):
    p = exp1.schedule.segments[1][1]
    serial = design(exp1.model, p, "one", exp1.options)
    threaded = design(exp1.model, p, "one", DesignOptions(mu_min=10.0, workers=3))
    for a, b in zip(serial.followers, threaded.followers):
        assert np.array_equal(a.k2, b.k2)


def test_every_failure_is_reported():
    good = FollowerModel(1.0, 1.0, 1.0, 0.0, 0.0, 0.0, -1.0)
    stuck = FollowerModel(1.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0)           # no input authority
    clash = FollowerModel(1.0, 1.0, 1.0, 1.0, -2.0, 0.0, -1.0)          # needs s = 2
    adj = np.zeros((3, 3))
    model = MasModel(Exosystem(0.0), (good, stuck, clash), SignedDigraph(adj, [1.0, 1.0, 0.0]))
    p = PartitionTransform((1.0, 1.0, 1.0))
    with pytest.raises(ConditionFailed) as err:
        design(model, p, "two")
    got = {(f.which, f.follower) for f in err.value.failures}
    assert (SPANNING_TREE, None) in got
    assert (STABILIZABLE, 1) in got
    assert (REGULATOR_INDEPENDENT, 1) in got
    assert (REGULATOR_INDEPENDENT, 2) in got and (MATCHED, 2) in got
    assert not any(f == 0 for _, f in got)
    with pytest.raises(ConditionFailed) as err:
        design(model, p, "one")
    assert {REGULATOR, STABILIZABLE, SPANNING_TREE} <= err.value.which()


def test_mismatched_partition_rejected(exp1):
    with pytest.raises(ValueError):
        design(exp1.model, PartitionTransform((1.0, 2.0)), "two")


def test_stable_leader_warns():
    fm = FollowerModel(1.0, 1.0, 1.0, 0.0, 0.0, 0.0, -1.0)
    model = MasModel(Exosystem(-1.0), (fm,), SignedDigraph([[0.0]], [1.0]))
    with pytest.warns(UserWarning, match="leader"):
        design(model, PartitionTransform((1.0,)), "one")


def test_random_networks_are_certified():
    rng = np.random.default_rng(11)
    for _ in range(10):
        a0 = np.array([[0.0, 1.0], [-1.0, 0.0]]) * rng.uniform(0.1, 2)
        followers = tuple(feasible_unit_instance(rng, a0=a0)[0] for _ in range(3))
        model = MasModel(Exosystem(a0), followers, spanning_graph(rng, 3))
        d = design(model, PartitionTransform(tuple(rng.uniform(-3, 3, 3))), "two")
        assert closed_loop_certificates(model, d)["all_hurwitz"]
