"""Linear-algebra kernels: feasibility tests, matrix-equation solves and gains.

Tolerances
----------
``FEAS_RTOL``
    A matrix equation is feasible when the least-squares residual is at
    most ``FEAS_RTOL * (1 + |rhs|)``.
``RANK_RTOL``
    Singular values below ``RANK_RTOL * sigma_max`` count as zero.
``HURWITZ_EPS``
    A matrix is Hurwitz when every eigenvalue has real part below
    ``-HURWITZ_EPS``; spectra in ``[-eps, 0]`` are classified unstable.
"""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from .errors import CareFailure, DomainError, EigenFailure, Infeasible, NotStabilizable
from .graph import SignedDigraph, SpectralReport, h_matrix
from .plant import Exosystem, FollowerModel

FEAS_RTOL = 1e-8
RANK_RTOL = 1e-10
HURWITZ_EPS = 1e-9


class SolveCounter:
    """Thread-safe tally of linear-system solves, keyed by equation kind."""

    def __init__(self):
        self._lock = threading.Lock()
        self._counts: Counter[str] = Counter()

    def bump(self, kind: str) -> None:
        with self._lock:
            self._counts[kind] += 1

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return dict(self._counts)

    def total(self) -> int:
        with self._lock:
            return sum(self._counts.values())

    def reset(self) -> None:
        with self._lock:
            self._counts.clear()


#: Every regulator and LME solve in the process is counted here.
solve_counter = SolveCounter()


@dataclass(frozen=True, eq=False)
class RegulatorSolution:
    x: np.ndarray
    u: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class LmeSolution:
    y: np.ndarray
    residual: float
    feasible: bool


def _eigvals(a: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc


def matrix_rank(a: np.ndarray) -> int:
    """Numerical rank with a relative singular-value cutoff (real or complex)."""
    if a.size == 0:
        return 0
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > RANK_RTOL * sv[0]))


def is_hurwitz(a: np.ndarray) -> bool:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return True
    return bool(np.max(_eigvals(a).real) < -HURWITZ_EPS)


def is_stabilizable(a: np.ndarray, b: np.ndarray) -> bool:
    """PBH test over the eigenvalues of ``a`` that are not strictly stable."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    n = a.shape[0]
    eye = np.eye(n)
    for lam in _eigvals(a):
        if lam.real >= -HURWITZ_EPS:
            if matrix_rank(np.hstack([a - lam * eye, b.astype(complex)])) < n:
                return False
    return True


# -- regulator equations ---------------------------------------------------

def regulator_system(m: FollowerModel, exo: Exosystem, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Stacked linear system ``M z = r`` for ``z = [vec X; vec U]`` (column-major vec).

    Uses ``vec(P X Q) = (Q^T kron P) vec X`` on::

        X A0 - A X - B U = E
        C X + D U        = -(G + s F)
    """
    a0 = exo.a0
    n0 = a0.shape[0]
    i0 = np.eye(n0)
    top = np.hstack([np.kron(a0.T, np.eye(m.n)) - np.kron(i0, m.a), -np.kron(i0, m.b)])
    bottom = np.hstack([np.kron(i0, m.c), np.kron(i0, m.d)])
    rhs = np.concatenate([m.e.ravel(order="F"), -(m.g + s * m.f).ravel(order="F")])
    return np.vstack([top, bottom]), rhs


def regulator_residual(m: FollowerModel, exo: Exosystem, s: float, x, u) -> float:
    """Largest Frobenius norm among the two regulator-equation defects."""
    x = np.asarray(x, dtype=float).reshape(m.n, exo.n0)
    u = np.asarray(u, dtype=float).reshape(m.m, exo.n0)
    r1 = x @ exo.a0 - m.a @ x - m.b @ u - m.e
    r2 = m.c @ x + m.d @ u + m.g + s * m.f
    return float(max(np.linalg.norm(r1), np.linalg.norm(r2)))


def feasibility_tolerance(rhs_norm: float) -> float:
    return FEAS_RTOL * (1.0 + rhs_norm)


def solve_regulator(m: FollowerModel, exo: Exosystem, s: float = 1.0) -> RegulatorSolution:
    """Minimum-norm solution of the regulator equations for partition term ``s``.

    ``s = 1`` gives the partition-independent equations.

    Raises
    ------
    Infeasible
        If the least-squares residual exceeds the feasibility tolerance.
    """
    solve_counter.bump("regulator")
    mat, rhs = regulator_system(m, exo, s)
    z = np.linalg.lstsq(mat, rhs, rcond=None)[0]
    nx = m.n * exo.n0
    x = z[:nx].reshape(m.n, exo.n0, order="F")
    u = z[nx:].reshape(m.m, exo.n0, order="F")
    residual = regulator_residual(m, exo, s, x, u)
    tol = feasibility_tolerance(float(np.linalg.norm(rhs)))
    if residual > tol:
        raise Infeasible(residual, tol, x, u)
    return RegulatorSolution(x=x, u=u, residual=residual)


# -- matched-disturbance LME -----------------------------------------------

def _stacked_input(m: FollowerModel) -> tuple[np.ndarray, np.ndarray]:
    return np.vstack([m.b, m.d]), np.vstack([m.e, m.g])


def lme_residual(m: FollowerModel, y) -> float:
    lhs, rhs = _stacked_input(m)
    return float(np.linalg.norm(lhs @ np.asarray(y, dtype=float).reshape(m.m, -1) - rhs))


def solve_lme(m: FollowerModel) -> LmeSolution:
    """Minimum-norm least-squares solve of ``[B; D] Y = [E; G]``."""
    solve_counter.bump("lme")
    lhs, rhs = _stacked_input(m)
    y = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    residual = float(np.linalg.norm(lhs @ y - rhs))
    feasible = residual <= feasibility_tolerance(float(np.linalg.norm(rhs)))
    return LmeSolution(y=y, residual=residual, feasible=feasible)


def lme_rank_feasible(m: FollowerModel) -> bool:
    """Rank test: ``rank [B E; D G] == rank [B; D]``."""
    lhs, rhs = _stacked_input(m)
    return matrix_rank(np.hstack([lhs, rhs])) == matrix_rank(lhs)


def transmission_zeros_ok(m: FollowerModel, exo: Exosystem) -> bool:
    """Full row rank of ``[A - lam I, B; C, D]`` at every leader eigenvalue."""
    full = m.n + m.p
    eye = np.eye(m.n)
    for lam in _eigvals(exo.a0):
        block = np.block([[m.a - lam * eye, m.b.astype(complex)], [m.c.astype(complex), m.d.astype(complex)]])
        if matrix_rank(block) != full:
            return False
    return True


# -- distributed observer --------------------------------------------------

def mu_lower_bound(exo: Exosystem, spectral: SpectralReport) -> float:
    """Supremum of observer couplings that fail; any larger ``mu`` works.

    Returns ``max_{j,i} Re(lam_j(A0)) / Re(lam_i(H))``.
    """
    h_re = np.asarray(spectral.eigenvalues).real
    if np.any(h_re <= 0.0):
        raise DomainError("every eigenvalue of H must have positive real part")
    a0_re = _eigvals(exo.a0).real
    return float(np.max(a0_re[:, None] / h_re[None, :]))


def observer_matrix(exo: Exosystem, g: SignedDigraph, mu: float) -> np.ndarray:
    """Compact observer system matrix ``(I_N kron A0) - mu (H kron I_n0)``."""
    h = h_matrix(g).h_matrix
    return np.kron(np.eye(g.n_followers), exo.a0) - mu * np.kron(h, np.eye(exo.n0))


# -- state-feedback gain ---------------------------------------------------

def care_hamiltonian(a, b, q, r) -> np.ndarray:
    rinv_bt = np.linalg.solve(r, b.T)
    return np.block([[a, -b @ rinv_bt], [-q, -a.T]])


def solve_care(a, b, q, r) -> np.ndarray:
    """Stabilizing solution of ``A'P + PA - PBR^{-1}B'P + Q = 0``.

    The stable invariant subspace of the Hamiltonian is read off an ordered
    real Schur form; ``P = U21 U11^{-1}``.
    """
    n = a.shape[0]
    ham = care_hamiltonian(a, b, q, r)
    try:
        _, z, sdim = spla.schur(ham, output="real", sort="lhp")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise CareFailure(f"Schur decomposition failed: {exc}") from exc
    if sdim != n:
        raise CareFailure(f"Hamiltonian has {sdim} stable eigenvalues, expected {n}")
    u11, u21 = z[:n, :n], z[n:, :n]
    if np.linalg.cond(u11) > 1e12:
        raise CareFailure("stable subspace is not a graph over the state coordinates")
    p = np.linalg.solve(u11.T, u21.T).T
    return (p + p.T) / 2.0


def stabilizing_gain(a, b, q_scale: float = 1.0, r_scale: float = 1.0) -> np.ndarray:
    """LQR gain ``K`` with ``A + B K`` Hurwitz, for ``Q = q I`` and ``R = r I``.

    Raises
    ------
    NotStabilizable
        If ``(A, B)`` fails the PBH test.
    CareFailure
        If the Riccati solve fails or its gain does not pass the Hurwitz check.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    if q_scale <= 0 or r_scale <= 0:
        raise DomainError("q_scale and r_scale must be positive")
    if not is_stabilizable(a, b):
        raise NotStabilizable("(A, B) is not stabilizable")
    n, m = b.shape
    r = r_scale * np.eye(m)
    p = solve_care(a, b, q_scale * np.eye(n), r)
    k = -np.linalg.solve(r, b.T @ p)
    if not is_hurwitz(a + b @ k):
        raise CareFailure("Riccati gain does not stabilize the closed loop")
    return k
