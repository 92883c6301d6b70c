"""Follower and exosystem data.

Follower ``i`` evolves as::

    x' = A x + B u + E v
    y  = C x + D u + G v

and must drive ``e = y + s F v`` to zero, where ``v' = A0 v`` is the
leader (exosystem) state and ``s`` its partition term.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .graph import SignedDigraph


def _matrix(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    if out.ndim == 0:
        out = out.reshape(1, 1)
    elif out.ndim == 1:
        out = out.reshape(1, -1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Exosystem:
    a0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a0", _matrix(self.a0))

    @property
    def n0(self) -> int:
        return self.a0.shape[0]


@dataclass(frozen=True, eq=False)
class FollowerModel:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    e: np.ndarray
    g: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        for fld in fields(self):
            object.__setattr__(self, fld.name, _matrix(getattr(self, fld.name)))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]

    @property
    def p(self) -> int:
        return self.c.shape[0]

    def matrices(self) -> dict[str, np.ndarray]:
        return {fld.name: getattr(self, fld.name) for fld in fields(self)}


@dataclass(frozen=True, eq=False)
class MasModel:
    exosystem: Exosystem
    followers: tuple[FollowerModel, ...]
    graph: SignedDigraph

    def __post_init__(self):
        object.__setattr__(self, "followers", tuple(self.followers))

    @property
    def n_followers(self) -> int:
        return len(self.followers)


def follower_mismatches(m: FollowerModel, n0: int, index: int | None = None) -> list[str]:
    """Dimension problems of one follower, as human-readable strings.

    State, input and output sizes are taken from ``a`` (rows), ``b``
    (columns) and ``c`` (rows); every other matrix is checked against them.
    """
    tag = "follower" if index is None else f"follower {index}"
    n = m.a.shape[0]
    mi = m.b.shape[1]
    p = m.c.shape[0]
    expected = {
        "a": (n, n),
        "b": (n, mi),
        "c": (p, n),
        "d": (p, mi),
        "e": (n, n0),
        "g": (p, n0),
        "f": (p, n0),
    }
    out = []
    for name, shape in expected.items():
        got = getattr(m, name).shape
        if got != shape:
            out.append(f"{tag}: {name} has shape {got[0]}x{got[1]}, expected {shape[0]}x{shape[1]}")
    for name, mat in m.matrices().items():
        if not np.all(np.isfinite(mat)):
            out.append(f"{tag}: {name} has non-finite entries")
    return out


def validate(model: MasModel) -> list[str]:
    """Every dimension mismatch in ``model``; an empty list means well-formed."""
    report = []
    a0 = model.exosystem.a0
    if a0.shape[0] != a0.shape[1] or a0.shape[0] < 1:
        report.append(f"exosystem: a0 has shape {a0.shape[0]}x{a0.shape[1]}, expected square")
    n0 = a0.shape[0]
    if model.n_followers != model.graph.n_followers:
        report.append(
            f"graph: has {model.graph.n_followers} nodes but model has {model.n_followers} followers"
        )
    for i, fm in enumerate(model.followers):
        report.extend(follower_mismatches(fm, n0, i))
    return report


def rewritten_f(m: FollowerModel, s: float) -> np.ndarray:
    """Output offset ``G + s F`` seen by the error equation for term ``s``."""
    return m.g + s * m.f


def exosystem_antistable(exo: Exosystem) -> bool:
    """Whether every leader mode sits in the closed right half plane.

    Only needed for the necessity half of the solvability result, so it is
    reported rather than enforced.
    """
    return bool(np.all(np.linalg.eigvals(exo.a0).real >= 0.0))
