"""Control laws and coupling-weight adaptation laws.

Three variants: the static relative-state law with one global coupling
weight, the distributed adaptive law where every edge carries its own
time-varying weight driven by the local disagreement, and the
leader-follower extension where pinned followers additionally feed back
their offset from a virtual leader.

All laws act on relative states. The implementation forms each pairwise
difference explicitly and accumulates per edge, so a common shift of all
states cancels exactly (bit-for-bit when the shifted inputs are exactly
representable) and edge rate matrices come out exactly symmetric: both
orientations of an edge are written from one shared scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Topology

__all__ = [
    "CouplingState",
    "LeaderCoupling",
    "static_control",
    "adaptive_control",
    "adaptive_weight_rates",
    "leader_control",
    "leader_weight_rates",
]


@dataclass
class CouplingState:
    """Symmetric time-varying edge weights c_ij with their gains kappa_ij.

    Both matrices are dense N x N; only entries on edges of the topology
    are meaningful. Non-edge entries are carried but never read, and
    their adaptation rates are forced to exact zero.
    """

    c: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        kappa = np.asarray(self.kappa, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"c must be square, got shape {c.shape}")
        if kappa.shape != c.shape:
            raise ValueError(
                f"kappa shape {kappa.shape} does not match c shape {c.shape}"
            )
        if not np.array_equal(c, c.T):
            raise ValueError("c must be exactly symmetric")
        if not np.array_equal(kappa, kappa.T):
            raise ValueError("kappa must be exactly symmetric")
        self.c = c
        self.kappa = kappa

    @classmethod
    def from_edge_values(cls, t: Topology, edge_values, kappa=1.0) -> "CouplingState":
        """Build symmetric matrices from per-edge values (aligned with t.edges).

        ``kappa`` may be a positive scalar (applied to every edge) or a
        per-edge array.
        """
        N = t.n_agents
        ei, ej = t.edge_arrays()
        values = np.asarray(edge_values, dtype=float).reshape(-1)
        if values.shape[0] != t.n_edges:
            raise ValueError(
                f"expected {t.n_edges} edge values, got {values.shape[0]}"
            )
        kap = np.broadcast_to(np.asarray(kappa, dtype=float), values.shape).copy()
        if np.any(kap <= 0):
            raise ValueError("kappa must be positive on every edge")
        c = np.zeros((N, N))
        kmat = np.ones((N, N))
        c[ei, ej] = values
        c[ej, ei] = values
        kmat[ei, ej] = kap
        kmat[ej, ei] = kap
        return cls(c=c, kappa=kmat)

    def edge_values(self, t: Topology) -> np.ndarray:
        ei, ej = t.edge_arrays()
        return self.c[ei, ej]


@dataclass
class LeaderCoupling:
    """Pinning data for the leader-follower protocol.

    ``d`` holds the constant pin gains (positive for followers that see
    the leader, zero otherwise); ``c_leader`` the time-varying weights
    toward the leader; ``kappa_leader`` their positive adaptation gains;
    ``leader_state`` the leader's current state. ``c_leader`` and
    ``leader_state`` may be left None when a simulation is expected to
    draw them from its own initial-condition generator.
    """

    d: np.ndarray
    c_leader: np.ndarray | None = None
    kappa_leader: np.ndarray | None = None
    leader_state: np.ndarray | None = None

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float).reshape(-1)
        if np.any(d < 0):
            raise ValueError("pin gains d must be nonnegative")
        self.d = d
        if self.c_leader is not None:
            self.c_leader = np.asarray(self.c_leader, dtype=float).reshape(-1)
            if self.c_leader.shape != d.shape:
                raise ValueError("c_leader must have one entry per follower")
        if self.kappa_leader is None:
            self.kappa_leader = np.ones_like(d)
        else:
            self.kappa_leader = np.asarray(self.kappa_leader, dtype=float).reshape(-1)
            if self.kappa_leader.shape != d.shape:
                raise ValueError("kappa_leader must have one entry per follower")
            if np.any(self.kappa_leader <= 0):
                raise ValueError("kappa_leader must be positive")
        if self.leader_state is not None:
            self.leader_state = np.asarray(self.leader_state, dtype=float).reshape(-1)


def _check_states(t: Topology, states) -> np.ndarray:
    X = np.atleast_2d(np.asarray(states, dtype=float))
    if X.shape[0] != t.n_agents:
        raise ValueError(
            f"states has {X.shape[0]} rows but the topology has "
            f"{t.n_agents} agents"
        )
    return X


def _check_gain_rows(G, n: int, name: str) -> np.ndarray:
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if G.shape[1] != n:
        raise ValueError(f"{name} has {G.shape[1]} columns, expected {n}")
    return G


def relative_feedback_sum(t: Topology, edge_weights: np.ndarray,
                          states: np.ndarray) -> np.ndarray:
    """Per-agent weighted relative-state sum: row i is sum_j w_ij (x_i - x_j).

    ``edge_weights`` is one weight per edge of ``t``. This is the shared
    core of all control laws.
    """
    ei, ej = t.edge_arrays()
    S = np.zeros_like(states)
    if len(ei):
        wd = edge_weights[:, None] * (states[ei] - states[ej])
        np.add.at(S, ei, wd)
        np.subtract.at(S, ej, wd)
    return S


def edge_quadratic_rates(Gamma: np.ndarray, kappa_e: np.ndarray,
                         diffs: np.ndarray) -> np.ndarray:
    """Per-edge adaptation rates kappa_e * d_e^T Gamma d_e for d_e = x_i - x_j."""
    if diffs.shape[0] == 0:
        return np.zeros(0)
    return kappa_e * ((diffs @ Gamma) * diffs).sum(axis=1)


def static_control(K, c: float, t: Topology, states) -> np.ndarray:
    """Static protocol u_i = c K sum_j a_ij (x_i - x_j).

    ``c`` = 0 is allowed as the degenerate open-loop case (used to probe
    the failure side of the coupling bound); negative c is rejected.
    """
    if c < 0:
        raise ValueError(f"coupling weight c must be nonnegative, got {c}")
    X = _check_states(t, states)
    K = _check_gain_rows(K, X.shape[1], "K")
    S = relative_feedback_sum(t, np.ones(t.n_edges), X)
    return c * (S @ K.T)


def adaptive_control(F, cs: CouplingState, t: Topology, states) -> np.ndarray:
    """Adaptive protocol u_i = F sum_j c_ij a_ij (x_i - x_j)."""
    X = _check_states(t, states)
    F = _check_gain_rows(F, X.shape[1], "F")
    S = relative_feedback_sum(t, cs.edge_values(t), X)
    return S @ F.T


def adaptive_weight_rates(Gamma, cs: CouplingState, t: Topology,
                          states) -> np.ndarray:
    """Rates cdot_ij = kappa_ij a_ij (x_i - x_j)^T Gamma (x_i - x_j).

    Returned matrix is exactly symmetric and exactly zero off the edge set.
    """
    X = _check_states(t, states)
    Gamma = _check_gain_rows(Gamma, X.shape[1], "Gamma")
    N = t.n_agents
    ei, ej = t.edge_arrays()
    rates = np.zeros((N, N))
    if len(ei):
        r = edge_quadratic_rates(Gamma, cs.kappa[ei, ej], X[ei] - X[ej])
        rates[ei, ej] = r
        rates[ej, ei] = r
    return rates


def leader_control(F, cs: CouplingState, lc: LeaderCoupling, t: Topology,
                   states) -> np.ndarray:
    """Leader protocol u_i = F (sum_j c_ij a_ij (x_i - x_j) + c_i d_i (x_i - x_0))."""
    X = _check_states(t, states)
    F = _check_gain_rows(F, X.shape[1], "F")
    if lc.c_leader is None or lc.leader_state is None:
        raise ValueError("leader_control needs c_leader and leader_state set")
    if lc.d.shape[0] != t.n_agents:
        raise ValueError("pin gain vector d must have one entry per follower")
    S = relative_feedback_sum(t, cs.edge_values(t), X)
    S = S + (lc.c_leader * lc.d)[:, None] * (X - lc.leader_state)
    return S @ F.T


def leader_weight_rates(Gamma, cs: CouplingState, lc: LeaderCoupling,
                        t: Topology, states) -> tuple[np.ndarray, np.ndarray]:
    """Edge rates as in the adaptive law plus leader-weight rates.

    The leader rates are cdot_i = kappa_i d_i (x_i - x_0)^T Gamma (x_i - x_0),
    identically zero for unpinned followers.
    """
    X = _check_states(t, states)
    Gamma = _check_gain_rows(Gamma, X.shape[1], "Gamma")
    if lc.leader_state is None:
        raise ValueError("leader_weight_rates needs leader_state set")
    edge_rates = adaptive_weight_rates(Gamma, cs, t, X)
    delta = X - lc.leader_state
    leader_rates = lc.kappa_leader * lc.d * ((delta @ Gamma) * delta).sum(axis=1)
    return edge_rates, leader_rates
