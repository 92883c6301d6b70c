"""Signed leader-follower communication graphs.

Followers exchange information over a signed directed graph; the leader
(node 0) reaches follower ``i`` when its pinning gain ``f_i`` is positive.
Row ``i`` of the adjacency matrix lists the neighbours follower ``i``
listens to, so ``adjacency[i, j] != 0`` encodes the edge ``j -> i``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import EigenFailure


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SignedDigraph:
    adjacency: np.ndarray
    pinning: np.ndarray

    def __post_init__(self):
        adj = _frozen(np.atleast_2d(self.adjacency))
        pin = _frozen(np.atleast_1d(self.pinning))
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        n = adj.shape[0]
        if n < 1:
            raise ValueError("graph needs at least one follower")
        if pin.shape != (n,):
            raise ValueError(f"pinning must have length {n}, got shape {pin.shape}")
        if np.any(np.diag(adj) != 0.0):
            raise ValueError("self-loops are not allowed (nonzero adjacency diagonal)")
        if np.any(pin < 0.0):
            raise ValueError("pinning gains must be nonnegative")
        if not (np.all(np.isfinite(adj)) and np.all(np.isfinite(pin))):
            raise ValueError("graph weights must be finite")
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "pinning", pin)

    @property
    def n_followers(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True, eq=False)
class SpectralReport:
    h_matrix: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    min_real_part: float


def unsigned_laplacian(g: SignedDigraph) -> np.ndarray:
    """Laplacian of the graph with every weight replaced by its magnitude."""
    abs_adj = np.abs(g.adjacency)
    return np.diag(abs_adj.sum(axis=1)) - abs_adj


def h_matrix(g: SignedDigraph) -> SpectralReport:
    """Unsigned Laplacian plus the pinning gains, together with its spectrum."""
    h = unsigned_laplacian(g) + np.diag(g.pinning)
    try:
        eig = np.linalg.eigvals(h)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    h.setflags(write=False)
    return SpectralReport(h_matrix=h, eigenvalues=eig, min_real_part=float(np.min(eig.real)))


def has_spanning_tree(g: SignedDigraph) -> bool:
    """True iff every follower is reachable from the leader.

    Negative weights count as edges just like positive ones.
    """
    n = g.n_followers
    seen = [False] * n
    queue = deque(i for i in range(n) if g.pinning[i] > 0.0)
    for i in queue:
        seen[i] = True
    # out-neighbours of j: every i with adjacency[i, j] != 0
    listeners = [np.flatnonzero(g.adjacency[:, j] != 0.0) for j in range(n)]
    while queue:
        j = queue.popleft()
        for i in listeners[j]:
            if not seen[i]:
                seen[i] = True
                queue.append(i)
    return all(seen)
