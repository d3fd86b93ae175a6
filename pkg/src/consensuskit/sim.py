"""Closed-loop integration of agent states and adaptive coupling weights.

The coupled ODE (agent states, one weight per undirected edge, leader
extras when present) is integrated with the classical fixed-step
fourth-order Runge-Kutta scheme. Fixed stepping keeps runs bit-for-bit
reproducible for a given configuration and seed, which golden-file and
determinism checks rely on. Each undirected edge owns exactly one
coupling variable read by both endpoints, so recorded weights are
symmetric by construction, and since the adaptation rates are
nonnegative quadratic forms every Runge-Kutta increment is nonnegative:
weights never decrease, even in floating point.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import LinearModel, NonlinearModel
from .errors import ConfigError, DivergenceError
from .graph import Topology, build_topology, is_connected
from .protocol import (
    CouplingState,
    LeaderCoupling,
    edge_quadratic_rates,
    relative_feedback_sum,
    static_control,
)

__all__ = [
    "SimConfig",
    "Trajectory",
    "ConsensusVerdict",
    "simulate_adaptive",
    "simulate_static",
    "simulate_leader",
    "consensus_error",
    "lyapunov_v1",
    "lyapunov_trace",
    "verdict",
    "benchmark_topology",
]


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration settings and initial-condition randomization.

    Initial agent states are drawn uniformly from
    [-init_state_scale, init_state_scale]^n, initial couplings uniformly
    from [init_coupling_low, init_coupling_high], from one generator
    seeded with ``seed``. Draw order is: agent states, then the leader
    state (leader runs only, when not supplied), then edge couplings,
    then leader couplings. Samples are recorded every ``record_stride``
    steps, plus the final step.
    """

    t_final: float
    dt: float = 1e-3
    seed: int = 0
    init_state_scale: float = 1.0
    init_coupling_low: float = 0.0
    init_coupling_high: float = 1.0
    record_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_final < self.dt:
            raise ValueError("t_final must be at least one step long")
        if self.init_coupling_low > self.init_coupling_high:
            raise ValueError("init_coupling_low must be <= init_coupling_high")
        if self.record_stride < 1 or int(self.record_stride) != self.record_stride:
            raise ValueError("record_stride must be an integer >= 1")


@dataclass(frozen=True)
class Trajectory:
    """Recorded closed-loop run.

    ``states`` is (samples, N, n); ``couplings`` holds one column per
    edge of ``edges`` (None for static runs). ``consensus_error`` is
    max_i ||x_i - mean|| for leaderless runs and max_i ||x_i - x_0||
    for leader runs, whose per-follower offsets are also kept in
    ``tracking_errors``. ``lyapunov`` is an optional diagnostic filled
    by :func:`lyapunov_trace`.
    """

    times: np.ndarray
    states: np.ndarray
    consensus_error: np.ndarray
    edges: tuple[tuple[int, int], ...]
    couplings: np.ndarray | None = None
    kappa_edges: np.ndarray | None = None
    leader_states: np.ndarray | None = None
    leader_couplings: np.ndarray | None = None
    kappa_leader: np.ndarray | None = None
    tracking_errors: np.ndarray | None = None
    lyapunov: np.ndarray | None = None


@dataclass(frozen=True)
class ConsensusVerdict:
    achieved: bool
    final_error: float
    error_threshold: float
    weight_drift: float


def benchmark_topology() -> Topology:
    """Built-in 8-agent benchmark graph: an 8-cycle plus chords (0,4), (1,5).

    The benchmark only needs some fixed connected 8-node graph; this one
    is the documented default.
    """
    edges = [(i, (i + 1) % 8) for i in range(8)] + [(0, 4), (1, 5)]
    return build_topology(8, edges)


def consensus_error(states) -> float:
    """Largest Euclidean deviation of any agent from the ensemble mean."""
    X = np.atleast_2d(np.asarray(states, dtype=float))
    dev = X - X.mean(axis=0)
    return float(np.sqrt((dev * dev).sum(axis=1)).max()) if X.size else 0.0


def _as_edge_array(values, t: Topology, name: str) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape == (t.n_agents, t.n_agents):
        ei, ej = t.edge_arrays()
        return v[ei, ej]
    v = v.reshape(-1)
    if v.shape[0] != t.n_edges:
        raise ValueError(f"{name} must have one value per edge ({t.n_edges})")
    return v


def lyapunov_v1(states, couplings, P, alpha: float, kappa, t: Topology) -> float:
    """Energy-style diagnostic: sum_i e_i^T P^{-1} e_i + sum over edge
    orientations of (c_ij - alpha)^2 / (2 kappa_ij).

    ``couplings`` and ``kappa`` may be per-edge vectors (aligned with
    ``t.edges``) or full N x N matrices. Only edge weights enter: weights
    on non-edges never change, so they would only add a constant.
    The default diagnostic choice alpha = 1/lambda_2 makes the quantity
    non-increasing along adaptive closed-loop trajectories of linear
    agents.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    X = np.atleast_2d(np.asarray(states, dtype=float))
    P = np.asarray(P, dtype=float)
    dev = X - X.mean(axis=0)
    try:
        sol = np.linalg.solve(P, dev.T)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("P is singular; the diagnostic needs P > 0")
    quad = float((dev.T * sol).sum())
    c_e = _as_edge_array(couplings, t, "couplings")
    kap_e = np.broadcast_to(
        np.asarray(kappa, dtype=float)
        if np.ndim(kappa) < 2 else _as_edge_array(kappa, t, "kappa"),
        c_e.shape,
    )
    # both orientations of each edge contribute, hence /kappa not /(2 kappa)
    return quad + float(((c_e - alpha) ** 2 / kap_e).sum())


def lyapunov_trace(traj: Trajectory, P, alpha: float, t: Topology) -> Trajectory:
    """Return a copy of ``traj`` with the diagnostic evaluated per sample."""
    if traj.couplings is None or traj.kappa_edges is None:
        raise ValueError("trajectory carries no coupling channel")
    values = np.array([
        lyapunov_v1(traj.states[k], traj.couplings[k], P, alpha,
                    traj.kappa_edges, t)
        for k in range(len(traj.times))
    ])
    return replace(traj, lyapunov=values)


def verdict(traj: Trajectory, error_threshold: float) -> ConsensusVerdict:
    """Threshold the final error and measure weight drift over the last
    10% of the horizon (0 when the run has no coupling channel)."""
    if len(traj.times) == 0:
        raise ValueError("empty trajectory")
    final_error = float(traj.consensus_error[-1])
    t0, t1 = float(traj.times[0]), float(traj.times[-1])
    window = traj.times >= t1 - 0.1 * (t1 - t0)
    drift = 0.0
    for channel in (traj.couplings, traj.leader_couplings):
        if channel is not None and channel.shape[1] and window.sum() >= 2:
            w = channel[window]
            drift = max(drift, float((w.max(axis=0) - w.min(axis=0)).max()))
    return ConsensusVerdict(
        achieved=final_error <= error_threshold,
        final_error=final_error,
        error_threshold=float(error_threshold),
        weight_drift=drift,
    )


def _warn_if_disconnected(t: Topology) -> None:
    if not is_connected(t):
        warnings.warn(
            "topology is disconnected; consensus guarantees assume a "
            "connected graph", stacklevel=3)


def _n_steps(cfg: SimConfig) -> int:
    return max(1, int(round(cfg.t_final / cfg.dt)))


def _model_parts(model):
    if isinstance(model, NonlinearModel):
        return model.A, model.B, model.D1, model.f
    if isinstance(model, LinearModel):
        return model.A, model.B, None, None
    raise TypeError(f"unsupported model type {type(model).__name__}")


def _state_drift(X, A, B, U, D1, f):
    Xdot = X @ A.T + U @ B.T
    if D1 is not None:
        fx = np.stack([np.asarray(f(x), dtype=float) for x in X])
        Xdot = Xdot + fx @ D1.T
    return Xdot


def _rk4(drift, y0: np.ndarray, dt: float, n_steps: int, stride: int):
    """Fixed-step RK4; returns (times, stacked samples) including t = 0."""
    y = np.array(y0, dtype=float)
    times = [0.0]
    samples = [y.copy()]
    for k in range(1, n_steps + 1):
        k1 = drift(y)
        k2 = drift(y + (0.5 * dt) * k1)
        k3 = drift(y + (0.5 * dt) * k2)
        k4 = drift(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if not np.isfinite(y).all():
            raise DivergenceError(
                f"trajectory left the finite range at t = {k * dt:.6g}",
                time=k * dt,
            )
        if k % stride == 0 or k == n_steps:
            times.append(k * dt)
            samples.append(y.copy())
    return np.array(times), np.stack(samples)


def _draw_states(rng, cfg: SimConfig, N: int, n: int, override):
    if override is not None:
        X0 = np.asarray(override, dtype=float).reshape(N, n)
        return X0
    s = cfg.init_state_scale
    return rng.uniform(-s, s, size=(N, n))


def _draw_couplings(rng, cfg: SimConfig, count: int, override):
    if override is not None:
        v = np.asarray(override, dtype=float).reshape(-1)
        if v.shape[0] != count:
            raise ValueError(f"expected {count} initial couplings, got {v.shape[0]}")
        return v.copy()
    return rng.uniform(cfg.init_coupling_low, cfg.init_coupling_high, size=count)


def simulate_adaptive(model, gain, t: Topology, cfg: SimConfig, *,
                      kappa=1.0, initial_states=None,
                      initial_couplings=None) -> Trajectory:
    """Closed loop under the adaptive protocol (linear or Lipschitz agents).

    ``kappa`` is a positive scalar or per-edge vector of adaptation gains
    (default 1 on every edge). Explicit initial conditions override the
    seeded draw described on :class:`SimConfig`.
    """
    _warn_if_disconnected(t)
    A, B, D1, f = _model_parts(model)
    N, n = t.n_agents, A.shape[0]
    ei, ej = t.edge_arrays()
    E = t.n_edges
    kap_e = np.broadcast_to(np.asarray(kappa, dtype=float), (E,)).astype(float)
    if E and np.any(kap_e <= 0):
        raise ValueError("kappa must be positive on every edge")
    F = np.atleast_2d(np.asarray(gain.F, dtype=float))
    Gamma = np.asarray(gain.Gamma, dtype=float)

    rng = np.random.default_rng(cfg.seed)
    X0 = _draw_states(rng, cfg, N, n, initial_states)
    c0 = _draw_couplings(rng, cfg, E, initial_couplings)

    def drift(y):
        X = y[:N * n].reshape(N, n)
        ce = y[N * n:]
        S = relative_feedback_sum(t, ce, X)
        Xdot = _state_drift(X, A, B, S @ F.T, D1, f)
        cdot = edge_quadratic_rates(Gamma, kap_e, X[ei] - X[ej])
        return np.concatenate([Xdot.reshape(-1), cdot])

    y0 = np.concatenate([X0.reshape(-1), c0])
    times, ys = _rk4(drift, y0, cfg.dt, _n_steps(cfg), cfg.record_stride)
    states = ys[:, :N * n].reshape(len(times), N, n)
    couplings = ys[:, N * n:]
    errors = np.array([consensus_error(s) for s in states])
    return Trajectory(times=times, states=states, consensus_error=errors,
                      edges=t.edges, couplings=couplings, kappa_edges=kap_e)


def simulate_static(model: LinearModel, K, c: float, t: Topology,
                    cfg: SimConfig, *, initial_states=None) -> Trajectory:
    """Closed loop under the static protocol; the coupling channel is empty."""
    _warn_if_disconnected(t)
    A, B, _, _ = _model_parts(model)
    N, n = t.n_agents, A.shape[0]
    K = np.atleast_2d(np.asarray(K, dtype=float))

    rng = np.random.default_rng(cfg.seed)
    X0 = _draw_states(rng, cfg, N, n, initial_states)

    def drift(y):
        X = y.reshape(N, n)
        U = static_control(K, c, t, X)
        return _state_drift(X, A, B, U, None, None).reshape(-1)

    times, ys = _rk4(drift, X0.reshape(-1), cfg.dt, _n_steps(cfg),
                     cfg.record_stride)
    states = ys.reshape(len(times), N, n)
    errors = np.array([consensus_error(s) for s in states])
    return Trajectory(times=times, states=states, consensus_error=errors,
                      edges=t.edges)


def simulate_leader(model, gain, t: Topology, lc: LeaderCoupling,
                    cfg: SimConfig, *, kappa=1.0, initial_states=None,
                    initial_couplings=None) -> Trajectory:
    """Followers under the leader protocol; the leader runs open loop.

    Raises :class:`ConfigError` when no follower is pinned: tracking
    requires at least one d_i > 0 on a connected follower graph.
    """
    if lc.d.shape[0] != t.n_agents:
        raise ConfigError("pin gain vector d must have one entry per follower")
    if not np.any(lc.d > 0):
        raise ConfigError(
            "leader tracking requires at least one follower with a "
            "positive pin gain d_i"
        )
    _warn_if_disconnected(t)
    A, B, D1, f = _model_parts(model)
    N, n = t.n_agents, A.shape[0]
    ei, ej = t.edge_arrays()
    E = t.n_edges
    kap_e = np.broadcast_to(np.asarray(kappa, dtype=float), (E,)).astype(float)
    kap_l = lc.kappa_leader
    d = lc.d
    F = np.atleast_2d(np.asarray(gain.F, dtype=float))
    Gamma = np.asarray(gain.Gamma, dtype=float)

    rng = np.random.default_rng(cfg.seed)
    X0 = _draw_states(rng, cfg, N, n, initial_states)
    if lc.leader_state is not None:
        x0_leader = np.asarray(lc.leader_state, dtype=float).reshape(n)
    else:
        x0_leader = rng.uniform(-cfg.init_state_scale, cfg.init_state_scale,
                                size=n)
    c0 = _draw_couplings(rng, cfg, E, initial_couplings)
    cl0 = (np.asarray(lc.c_leader, dtype=float).reshape(N).copy()
           if lc.c_leader is not None
           else rng.uniform(cfg.init_coupling_low, cfg.init_coupling_high,
                            size=N))

    def drift(y):
        X = y[:N * n].reshape(N, n)
        x0 = y[N * n:N * n + n]
        ce = y[N * n + n:N * n + n + E]
        cl = y[N * n + n + E:]
        S = relative_feedback_sum(t, ce, X)
        delta = X - x0
        S = S + (cl * d)[:, None] * delta
        Xdot = _state_drift(X, A, B, S @ F.T, D1, f)
        x0dot = _state_drift(x0[None, :], A, B, np.zeros((1, B.shape[1])),
                             D1, f)[0]
        cedot = edge_quadratic_rates(Gamma, kap_e, X[ei] - X[ej])
        cldot = kap_l * d * ((delta @ Gamma) * delta).sum(axis=1)
        return np.concatenate([Xdot.reshape(-1), x0dot, cedot, cldot])

    y0 = np.concatenate([X0.reshape(-1), x0_leader, c0, cl0])
    times, ys = _rk4(drift, y0, cfg.dt, _n_steps(cfg), cfg.record_stride)
    S = len(times)
    states = ys[:, :N * n].reshape(S, N, n)
    leader_states = ys[:, N * n:N * n + n]
    couplings = ys[:, N * n + n:N * n + n + E]
    leader_couplings = ys[:, N * n + n + E:]
    tracking = np.sqrt(
        ((states - leader_states[:, None, :]) ** 2).sum(axis=2)
    )
    return Trajectory(times=times, states=states,
                      consensus_error=tracking.max(axis=1),
                      edges=t.edges, couplings=couplings, kappa_edges=kap_e,
                      leader_states=leader_states,
                      leader_couplings=leader_couplings,
                      kappa_leader=kap_l, tracking_errors=tracking)
