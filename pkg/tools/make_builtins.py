"""Regenerate the built-in scenario files under src/morp/scenarios/."""

from pathlib import Path

import numpy as np

from morp.bench import DEFAULT_SEED
from morp.graph import SignedDigraph
from morp.partition import PartitionSchedule
from morp.plant import Exosystem, FollowerModel, MasModel
from morp.scenario import Scenario, dump_scenario
from morp.sim import SimConfig
from morp.synth import DesignOptions, Strategy

OUT = Path(__file__).resolve().parents[1] / "src" / "morp" / "scenarios"

Z2 = np.zeros((2, 2))
A_ALPHA = np.block([[Z2, np.eye(2)], [Z2, Z2]])
B_ALPHA = np.vstack([Z2, np.eye(2)])
GAMMA = np.array([[0.0, 0.0025], [-0.0025, 0.0]])
A_BETA = np.array([[0.2, 3.0], [0.1, -0.1]])
B_BETA = np.array([[0.0, 3.0], [1.0, 0.0]])


def single(fm, a0, s, horizon, v0, strategy, description, name, x0=None, bench=None, options=None):
    graph = SignedDigraph([[0.0]], [1.0])
    return Scenario(
        name=name,
        model=MasModel(Exosystem(a0), (fm,), graph),
        schedule=PartitionSchedule.constant([s], horizon),
        sim=SimConfig(dt=1e-3, horizon=horizon, x0=x0, v0=v0),
        strategy=strategy,
        options=options or DesignOptions(),
        bench=bench or {},
        description=description,
    )


def scalar_follower(e=-2.0):
    return FollowerModel(1.0, 1.0, 1.0, 1.0, [[e]], 0.0, -1.0)


def remark4():
    return single(scalar_follower(), [[0.0]], 2.0, 20.0, [1.0], Strategy.PARTITION_DEPENDENT,
                  "Scalar follower solvable at s=2 but not through the unit-term equations "
                  "plus matched-disturbance route.", "remark4", x0=[[0.0]])


def remark8_phi_not_theta():
    fm = FollowerModel(
        a=[[0.0, 1.0], [0.0, 0.0]], b=[[0.0], [1.0]], c=np.eye(2), d=[[0.0], [0.0]],
        e=[[0.0, 0.0], [0.0, 0.5]], g=Z2, f=-np.eye(2),
    )
    return single(fm, [[0.0, 1.0], [-1.0, 0.0]], 2.0, 20.0, [0.0, 1.0], Strategy.PARTITION_INDEPENDENT,
                  "Matched disturbance holds, transmission-zeros rank test fails.",
                  "remark8_phi_not_theta", x0=[[0.0, 0.0]])


def remark8_theta_not_phi():
    # unstable leader: a coupling well above the minimum keeps the observer transient short
    return single(scalar_follower(), [[1.0]], 2.0, 10.0, [1.0], Strategy.PARTITION_DEPENDENT,
                  "Transmission-zeros rank test holds, matched disturbance fails.",
                  "remark8_theta_not_phi", x0=[[0.0]], options=DesignOptions(mu_min=5.0))


def remark8_intersection():
    return single(scalar_follower(e=0.0), [[1.0]], 2.0, 10.0, [1.0], Strategy.PARTITION_INDEPENDENT,
                  "Both the matched-disturbance and the transmission-zeros tests hold.",
                  "remark8_intersection", x0=[[0.0]], options=DesignOptions(mu_min=5.0))


def experiment1():
    fm = FollowerModel(A_ALPHA, B_ALPHA, np.hstack([np.eye(2), Z2]), Z2, np.zeros((4, 2)), Z2, -np.eye(2))
    adj = np.zeros((3, 3))
    adj[1, 0] = -1.0
    adj[2, 1] = 5.0
    first, second = [1.0, 0.75, 0.5], [2.3, 1.65, 1.0]
    sched = PartitionSchedule(((0.0, _pt(first)), (86.5, _pt(second)), (161.0, _pt(first))), 212.0)
    return Scenario(
        name="experiment1",
        model=MasModel(Exosystem(GAMMA), (fm,) * 3, SignedDigraph(adj, [1.0, 0.0, 0.0])),
        schedule=sched,
        sim=SimConfig(
            dt=1e-3, horizon=212.0,
            x0=[[1.2, 1.5, 0, 0], [0.1, 1.7, 0, 0], [-0.5, 1.3, 0, 0]],
            eta0=[[0.0, 0.0]] * 3, v0=[0.0, 1.0],
        ),
        strategy=Strategy.PARTITION_INDEPENDENT,
        options=DesignOptions(mu_min=10.0),
        description="Three double-integrator hand-position followers on a slowly rotating "
                    "reference with a three-segment partition schedule.",
    )


def _pt(terms):
    from morp.partition import PartitionTransform
    return PartitionTransform(tuple(terms))


def example2_model():
    followers = []
    for i in range(1, 101):
        if i <= 50:
            followers.append(FollowerModel(A_BETA, B_BETA, [[1.0, 0.0]], [[0.0, 0.0]],
                                           [[0.0], [0.0]], [[0.0]], [[-1.0]]))
        else:
            followers.append(FollowerModel(A_ALPHA, B_ALPHA, [[1.0, 0.0, 0.0, 0.0]], [[0.0, 0.0]],
                                           np.zeros((4, 1)), [[0.0]], [[-1.0]]))
    adj = np.zeros((100, 100))
    for i in range(2, 101):
        adj[i - 1, 0] = 1.0 if i % 2 else -1.0
    pin = np.zeros(100)
    pin[0] = 1.0
    return MasModel(Exosystem([[0.0]]), tuple(followers), SignedDigraph(adj, pin))


def example2():
    x0 = [[3 * i / 50, 0.0] for i in range(1, 51)] + [[-3 * i / 50 + 3, 0.0, 0.0, 0.0] for i in range(51, 101)]
    terms = np.kron(np.ones(50), [1.0, -1.0]).tolist()
    return Scenario(
        name="example2",
        model=example2_model(),
        schedule=PartitionSchedule.constant(terms, 30.0),
        sim=SimConfig(dt=1e-3, horizon=30.0, x0=x0, eta0=[[0.0]] * 100, v0=[1.0]),
        strategy=Strategy.PARTITION_INDEPENDENT,
        description="One hundred heterogeneous followers, constant reference, alternating "
                    "gauge transformation over a signed star graph.",
    )


def example3():
    fm = FollowerModel(A_BETA, B_BETA, [[1.0, 0.0]], [[0.0, 1.0]], [[0.0], [-4.0]], [[0.0]], [[-1.0]])
    return single(fm, [[0.0]], 1.0, 10.0, [1.0], Strategy.PARTITION_INDEPENDENT,
                  "Single follower with feedthrough and a matched disturbance; used for the "
                  "strategy timing comparison.", "example3", x0=[[0.0, 0.0]],
                  bench={"terms": 1000, "reps": 5, "seed": DEFAULT_SEED})


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    for build in (remark4, remark8_phi_not_theta, remark8_theta_not_phi, remark8_intersection,
                  experiment1, example2, example3):
        sc = build()
        dump_scenario(sc, OUT / f"{sc.name}.json")
        print("wrote", sc.name)
