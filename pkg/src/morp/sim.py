"""Closed-loop simulation under a piecewise-constant partition schedule.

The leader, the followers and the distributed observers form one linear
time-invariant system on each schedule segment.  It is assembled once per
segment and integrated with the classical fixed-step Runge-Kutta scheme.
States are continuous across switches; only ``K2`` and the partition terms
change.

State layout: ``z = [x_1, ..., x_N, eta_1, ..., eta_N, v]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sps

from .errors import ConfigError
from .graph import SignedDigraph, h_matrix
from .partition import PartitionSchedule
from .plant import Exosystem, MasModel
from .synth import ControllerDesign, closed_loop_certificates, retarget

#: Above this many states the closed loop is stored as a sparse matrix.
SPARSE_THRESHOLD = 64


@dataclass(frozen=True, eq=False)
class SimConfig:
    dt: float = 1e-3
    horizon: float = 10.0
    x0: Sequence | None = None
    eta0: Sequence | None = None
    v0: Sequence | None = None
    tail_fraction: float = 0.1
    stride: int = 10

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.horizon >= self.dt * (1 - 1e-9):
            raise ConfigError("horizon must be at least one step")
        if not 0 < self.tail_fraction < 1:
            raise ConfigError("tail_fraction must lie in (0, 1)")
        if self.stride < 1:
            raise ConfigError("stride must be a positive integer")


@dataclass(frozen=True)
class SegmentSummary:
    t_start: float
    t_end: float
    terms: tuple[float, ...]
    tail_max_error: float
    observer_error_end: float


@dataclass(eq=False)
class SimResult:
    t: np.ndarray
    v: np.ndarray                 # (T, n0)
    eta: np.ndarray               # (T, N, n0)
    x: list[np.ndarray]           # per follower (T, n_i)
    u: list[np.ndarray]
    y: list[np.ndarray]
    e: list[np.ndarray]
    terms: np.ndarray             # (T, N) active partition term per sample
    segments: list[SegmentSummary]
    mu: float
    certificates: dict = field(default_factory=dict)

    @property
    def n_followers(self) -> int:
        return len(self.x)

    def max_error(self) -> np.ndarray:
        """``max_i |e_i(t)|_2`` at every stored sample."""
        return np.max(np.stack([np.linalg.norm(e, axis=1) for e in self.e]), axis=0)


def control_input(d: ControllerDesign, i: int, x_i, eta_i) -> np.ndarray:
    fd = d.followers[i]
    return fd.k1 @ np.asarray(x_i, dtype=float) + fd.k2 @ np.asarray(eta_i, dtype=float)


def observer_rhs(d: ControllerDesign, exo: Exosystem, g: SignedDigraph, eta, v) -> np.ndarray:
    """Right-hand side of every observer, neighbour by neighbour.

    ``eta`` has shape ``(N, n0)``; the result has the same shape.  Edge
    weights enter through their magnitudes, so signed graphs are fine.
    """
    eta = np.asarray(eta, dtype=float)
    v = np.asarray(v, dtype=float)
    n = g.n_followers
    out = np.empty_like(eta)
    for i in range(n):
        coupling = g.pinning[i] * (v - eta[i])
        for j in range(n):
            if g.adjacency[i, j] != 0.0:
                coupling = coupling + abs(g.adjacency[i, j]) * (eta[j] - eta[i])
        out[i] = exo.a0 @ eta[i] + d.mu * coupling
    return out


def rk4_step(f: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + h / 2, y + (h / 2) * k1)
    k3 = f(t + h / 2, y + (h / 2) * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


class _Layout:
    def __init__(self, model: MasModel):
        self.n0 = model.exosystem.n0
        self.nf = model.n_followers
        sizes = [fm.n for fm in model.followers]
        self.x_off = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self.eta_off = int(self.x_off[-1])
        self.v_off = self.eta_off + self.nf * self.n0
        self.size = self.v_off + self.n0

    def x(self, i):
        return slice(self.x_off[i], self.x_off[i + 1])

    def eta(self, i):
        return slice(self.eta_off + i * self.n0, self.eta_off + (i + 1) * self.n0)

    @property
    def v(self):
        return slice(self.v_off, self.size)

    @property
    def eta_all(self):
        return slice(self.eta_off, self.v_off)


def closed_loop(model: MasModel, d: ControllerDesign, layout: _Layout | None = None):
    """System matrix of ``z`` and the map from ``z`` to the stacked tracking errors."""
    lay = layout or _Layout(model)
    exo, g = model.exosystem, model.graph
    n0 = lay.n0
    a_cl = np.zeros((lay.size, lay.size))
    n_err = sum(fm.p for fm in model.followers)
    c_err = np.zeros((n_err, lay.size))
    row = 0
    for i, (fm, fd) in enumerate(zip(model.followers, d.followers)):
        xs, es = lay.x(i), lay.eta(i)
        a_cl[xs, xs] = fm.a + fm.b @ fd.k1
        a_cl[xs, es] = fm.b @ fd.k2
        a_cl[xs, lay.v] = fm.e
        rows = slice(row, row + fm.p)
        c_err[rows, xs] = fm.c + fm.d @ fd.k1
        c_err[rows, es] = fm.d @ fd.k2
        c_err[rows, lay.v] = fm.g + d.terms[i] * fm.f
        row += fm.p
    h = h_matrix(g).h_matrix
    a_cl[lay.eta_all, lay.eta_all] = np.kron(np.eye(lay.nf), exo.a0) - d.mu * np.kron(h, np.eye(n0))
    a_cl[lay.eta_all, lay.v] = d.mu * np.kron(g.pinning.reshape(-1, 1), np.eye(n0))
    a_cl[lay.v, lay.v] = exo.a0
    return a_cl, c_err


def _initial_state(model: MasModel, cfg: SimConfig, lay: _Layout) -> np.ndarray:
    z = np.zeros(lay.size)

    def put(name, values, slot):
        if len(values) != lay.nf:
            raise ConfigError(f"{name} has {len(values)} entries for {lay.nf} followers")
        for i, val in enumerate(values):
            val = np.asarray(val, dtype=float).ravel()
            sl = slot(i)
            if val.size != sl.stop - sl.start:
                raise ConfigError(f"{name}[{i}] has {val.size} entries, expected {sl.stop - sl.start}")
            z[sl] = val

    if cfg.x0 is not None:
        put("x0", cfg.x0, lay.x)
    if cfg.eta0 is not None:
        put("eta0", cfg.eta0, lay.eta)
    if cfg.v0 is not None:
        v0 = np.asarray(cfg.v0, dtype=float).ravel()
        if v0.size != lay.n0:
            raise ConfigError(f"v0 has {v0.size} entries, expected {lay.n0}")
        z[lay.v] = v0
    return z


def snap_schedule(sched: PartitionSchedule, cfg: SimConfig) -> tuple[int, list[int]]:
    """Total step count and the step index at which each segment starts."""
    n_steps = int(round(sched.horizon / cfg.dt))
    if n_steps < 1:
        raise ConfigError("horizon is shorter than half a step")
    starts = [int(round(t / cfg.dt)) for t, _ in sched.segments]
    for (t, _), k in zip(sched.segments, starts):
        if abs(k * cfg.dt - t) > cfg.dt / 2 * (1 + 1e-9):
            raise ConfigError(f"switch at t={t} cannot be snapped to the step grid")
    if any(b <= a for a, b in zip(starts, starts[1:])) or starts[-1] >= n_steps:
        raise ConfigError("switch times collapse onto the same grid step or reach the horizon")
    return n_steps, starts


def simulate(model: MasModel, d: ControllerDesign, sched: PartitionSchedule,
             cfg: SimConfig) -> SimResult:
    """Integrate the closed loop over the schedule.

    The design is retargeted to each segment's partition terms.  The tail
    metric of a segment is the largest ``max_i |e_i|_2`` over its final
    ``tail_fraction`` of steps, including the left limit at its end.
    """
    if sched.n != model.n_followers:
        raise ConfigError(f"schedule has {sched.n} terms for {model.n_followers} followers")
    if len(d.followers) != model.n_followers:
        raise ConfigError("design does not match the model")
    lay = _Layout(model)
    n_steps, starts = snap_schedule(sched, cfg)
    bounds = starts + [n_steps]
    h = cfg.dt

    sample_steps = list(range(0, n_steps, cfg.stride)) + [n_steps]
    samples = np.empty((len(sample_steps), lay.size))
    sample_seg = np.empty(len(sample_steps), dtype=int)
    next_sample = 0

    designs = []
    summaries = []
    z = _initial_state(model, cfg, lay)
    err_rows = np.cumsum([0] + [fm.p for fm in model.followers])

    def err_norm(c_err, zz):
        e = c_err @ zz
        sq = np.add.reduceat(e * e, err_rows[:-1]) if e.size else np.zeros(1)
        return float(np.sqrt(np.max(sq)))

    for seg, ((_, p), k0, k1) in enumerate(zip(sched.segments, bounds[:-1], bounds[1:])):
        ds = retarget(d, p, model)
        designs.append(ds)
        a_cl, c_err = closed_loop(model, ds, lay)
        a_op = sps.csr_array(a_cl) if lay.size > SPARSE_THRESHOLD else a_cl

        def rhs(_t, zz, a_op=a_op):
            return a_op @ zz

        k_tail = k1 - max(1, int(math.ceil(cfg.tail_fraction * (k1 - k0))))
        tail = 0.0
        for k in range(k0, k1):
            if next_sample < len(sample_steps) and sample_steps[next_sample] == k:
                samples[next_sample] = z
                sample_seg[next_sample] = seg
                next_sample += 1
            if k >= k_tail:
                tail = max(tail, err_norm(c_err, z))
            z = rk4_step(rhs, k * h, z, h)
        tail = max(tail, err_norm(c_err, z))
        v_end = z[lay.v]
        obs_err = max(float(np.linalg.norm(z[lay.eta(i)] - v_end)) for i in range(lay.nf))
        summaries.append(SegmentSummary(t_start=k0 * h, t_end=k1 * h, terms=p.terms,
                                        tail_max_error=tail, observer_error_end=obs_err))
    samples[next_sample] = z
    sample_seg[next_sample] = len(designs) - 1

    return _assemble(model, designs, lay, np.asarray(sample_steps) * h, samples, sample_seg,
                     summaries, d.mu, closed_loop_certificates(model, d))


def tracking_outputs(fm, fd, s, x, eta, v):
    """Control input, output and tracking error for stacked samples (rows)."""
    u = x @ fd.k1.T + eta @ fd.k2.T
    y = x @ fm.c.T + u @ fm.d.T + v @ fm.g.T
    e = y + s * (v @ fm.f.T)
    return u, y, e


def _assemble(model, designs, lay, t, samples, sample_seg, summaries, mu, certs) -> SimResult:
    T = len(t)
    v = samples[:, lay.v].copy()
    eta = samples[:, lay.eta_all].reshape(T, lay.nf, lay.n0).copy()
    xs, us, ys, es = [], [], [], []
    terms = np.empty((T, lay.nf))
    for seg, ds in enumerate(designs):
        terms[sample_seg == seg] = ds.terms.terms
    for i, fm in enumerate(model.followers):
        x = samples[:, lay.x(i)].copy()
        u = np.empty((T, fm.m))
        y = np.empty((T, fm.p))
        e = np.empty((T, fm.p))
        for seg, ds in enumerate(designs):
            rows = sample_seg == seg
            u[rows], y[rows], e[rows] = tracking_outputs(
                fm, ds.followers[i], ds.terms[i], x[rows], eta[rows, i], v[rows])
        xs.append(x)
        us.append(u)
        ys.append(y)
        es.append(e)
    return SimResult(t=t, v=v, eta=eta, x=xs, u=us, y=ys, e=es, terms=terms,
                     segments=summaries, mu=mu, certificates=certs)


def csv_header(result: SimResult) -> list[str]:
    cols = ["t"] + [f"v_{j + 1}" for j in range(result.v.shape[1])]
    for i in range(result.n_followers):
        k = i + 1
        cols.append(f"s{k}")
        cols += [f"x{k}_{j + 1}" for j in range(result.x[i].shape[1])]
        cols += [f"eta{k}_{j + 1}" for j in range(result.eta.shape[2])]
        cols += [f"u{k}_{j + 1}" for j in range(result.u[i].shape[1])]
        cols += [f"y{k}_{j + 1}" for j in range(result.y[i].shape[1])]
        cols += [f"e{k}_{j + 1}" for j in range(result.e[i].shape[1])]
    return cols


def write_csv(result: SimResult, path) -> None:
    """One row per stored sample; floats written with ``repr`` so they round-trip."""
    blocks = [result.t[:, None], result.v]
    for i in range(result.n_followers):
        blocks += [result.terms[:, i:i + 1], result.x[i], result.eta[:, i, :],
                   result.u[i], result.y[i], result.e[i]]
    table = np.hstack(blocks)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(result))
        for row in table:
            w.writerow([repr(float(val)) for val in row])


def summary(result: SimResult) -> dict:
    return {
        "mu": result.mu,
        "samples": int(len(result.t)),
        "horizon": float(result.t[-1]),
        "segments": [
            {
                "t_start": s.t_start,
                "t_end": s.t_end,
                "terms": list(s.terms),
                "tail_max_error": s.tail_max_error,
                "observer_error_end": s.observer_error_end,
            }
            for s in result.segments
        ],
        "certificates": result.certificates,
    }
