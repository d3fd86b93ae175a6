"""Feedback gain synthesis from matrix-inequality feasibility conditions.

Two routes are implemented:

* Linear agents: a positive definite P with A P + P A^T - 2 B B^T < 0 is
  constructed through the continuous algebraic Riccati equation
  A^T W + W A - W B B^T W + I = 0. Its stabilizing solution W > 0 gives
  P = W^{-1}, because A P + P A^T - 2 B B^T = P (-I - W B B^T W) P < 0.
  The gains are F = -B^T P^{-1} and Gamma = P^{-1} B B^T P^{-1} = F^T F.
  Existence of such a P is equivalent to stabilizability of (A, B),
  checked up front with the eigenvector (PBH) test.

* Lipschitz agents: find Q > 0, a scalar tau > 0 and a diagonal T > 0
  making the block matrix

      [ A Q + Q A^T - tau B B^T + gamma^2 D1 T D1^T    Q ]
      [ Q                                             -T ]

  negative definite. This is solved as a semidefinite feasibility
  problem by alternating projections between the range of the affine
  parameter map and the shifted negative semidefinite cone. The
  constraint map is linear in (Q, tau, T), so any strictly feasible
  point scales to an arbitrarily comfortable margin; the projection
  target margin is therefore fixed at 1. Every returned solution is
  re-verified by a symmetric eigensolve before it leaves the solver.

All definiteness checks use the symmetric part (M + M^T) / 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .dynamics import LinearModel, NonlinearModel
from .errors import NumericalError, SynthesisError
from .graph import SpectralInfo

__all__ = [
    "SolverOptions",
    "ConsensusGain",
    "LipschitzGain",
    "solve_linear_gain",
    "solve_lipschitz_gain",
    "verify_consensus_gain",
    "verify_lipschitz_gain",
    "lipschitz_block_matrix",
    "gamma_residual",
    "static_coupling_bound",
    "gain_document",
    "parse_gain_document",
    "save_gain_document",
    "load_gain_document",
]


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class SolverOptions:
    """Numerical tolerances for the synthesis routines.

    ``tol_pd`` is the required positive-definiteness margin on P / Q,
    ``tol_neg`` the required negative-definiteness margin on the tested
    inequality, ``max_iterations`` caps the feasibility iterations and
    ``care_tolerance`` bounds the max-abs Riccati residual.
    """

    tol_pd: float = 1e-8
    tol_neg: float = 1e-8
    max_iterations: int = 10_000
    care_tolerance: float = 1e-10

    def __post_init__(self):
        for name in ("tol_pd", "tol_neg", "care_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class ConsensusGain:
    """Linear-route gain: P > 0 solving the strict inequality, with
    F = -B^T P^{-1} and Gamma = F^T F."""

    P: np.ndarray
    F: np.ndarray
    Gamma: np.ndarray


@dataclass(frozen=True)
class LipschitzGain:
    """Lipschitz-route gain: (Q, tau, T) solving the block inequality,
    with F = -B^T Q^{-1} and Gamma = F^T F."""

    Q: np.ndarray
    tau: float
    T: np.ndarray
    F: np.ndarray
    Gamma: np.ndarray


def _assert_stabilizable(A: np.ndarray, B: np.ndarray) -> None:
    """PBH test: every eigenvalue of A with Re >= 0 must be controllable.

    Rank of [A - lambda I, B] is read off the singular values with
    threshold 1e-9 * ||A||_2. Stabilizability of (A, B) is necessary and
    sufficient for a P > 0 with A P + P A^T - 2 B B^T < 0 to exist.
    """
    n = A.shape[0]
    thresh = 1e-9 * np.linalg.norm(A, 2)
    for lam in np.linalg.eigvals(A):
        if lam.real < 0.0:
            continue
        pencil = np.hstack([A - lam * np.eye(n), B]).astype(complex)
        rank = int((np.linalg.svd(pencil, compute_uv=False) > thresh).sum())
        if rank < n:
            raise SynthesisError(
                f"(A, B) is not stabilizable: the mode at eigenvalue "
                f"{lam:.6g} (Re >= 0) is uncontrollable. A positive "
                f"definite P with A P + P A^T - 2 B B^T < 0 exists if and "
                f"only if the pair is stabilizable."
            )


def _care_residual(A, BBt, W) -> float:
    return float(np.abs(A.T @ W + W @ A - W @ BBt @ W + np.eye(A.shape[0])).max())


def _solve_care(A: np.ndarray, B: np.ndarray, opts: SolverOptions) -> np.ndarray:
    """Stabilizing solution of A^T W + W A - W B B^T W + I = 0.

    The stable invariant subspace of the 2n x 2n Hamiltonian matrix gives
    the initial W; Newton-Kleinman iteration (one Lyapunov solve per step)
    then polishes the residual down to ``care_tolerance``. The tolerance
    is relaxed to the floating-point floor of the equation terms when the
    solution is badly scaled.
    """
    n = A.shape[0]
    BBt = B @ B.T
    H = np.block([[A, -BBt], [-np.eye(n), -A.T]])
    try:
        _, Z, sdim = scipy.linalg.schur(
            H, output="real", sort=lambda re, im: re < 0.0
        )
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"Hamiltonian Schur decomposition failed: {exc}")
    if sdim != n:
        raise NumericalError(
            f"Hamiltonian matrix has {sdim} stable eigenvalues, expected "
            f"{n}; the pair sits numerically on the stabilizability boundary"
        )
    U1 = Z[:n, :n]
    U2 = Z[n:, :n]
    try:
        W = _sym(np.linalg.solve(U1.T, U2.T).T)
    except np.linalg.LinAlgError:
        raise NumericalError("stable invariant subspace has a singular basis")

    res = _care_residual(A, BBt, W)
    for _ in range(50):
        if res <= opts.care_tolerance:
            break
        K = B.T @ W
        Acl = A - B @ K
        try:
            W_next = _sym(
                scipy.linalg.solve_continuous_lyapunov(
                    Acl.T, -(np.eye(n) + K.T @ K)
                )
            )
        except np.linalg.LinAlgError:  # pragma: no cover
            break
        res_next = _care_residual(A, BBt, W_next)
        if not np.isfinite(res_next) or res_next >= res:
            break
        W, res = W_next, res_next

    scale = 1.0 + float(np.abs(W @ BBt @ W).max()) + float(np.abs(A.T @ W).max())
    if res > max(opts.care_tolerance, 64.0 * np.finfo(float).eps * scale):
        raise NumericalError(
            f"Riccati iteration did not converge: residual {res:.3e} "
            f"exceeds tolerance {opts.care_tolerance:.1e}"
        )
    return W


def solve_linear_gain(m: LinearModel, opts: SolverOptions | None = None) -> ConsensusGain:
    """Synthesize (P, F, Gamma) for linear agents via the Riccati route.

    Raises :class:`SynthesisError` when (A, B) is not stabilizable and
    :class:`NumericalError` when the Riccati solve or the final margin
    check fails.
    """
    opts = opts or SolverOptions()
    A, B = m.A, m.B
    _assert_stabilizable(A, B)
    W = _solve_care(A, B, opts)
    P = _sym(np.linalg.inv(W))
    F = -(B.T @ W)
    gain = ConsensusGain(P=P, F=F, Gamma=F.T @ F)
    margins = verify_consensus_gain(m, gain, opts)
    if margins["lmi_max_eig"] > -opts.tol_neg or margins["p_min_eig"] < opts.tol_pd:
        raise NumericalError(
            f"synthesized P fails the strict margin check: inequality max "
            f"eigenvalue {margins['lmi_max_eig']:.3e}, P min eigenvalue "
            f"{margins['p_min_eig']:.3e}"
        )
    return gain


def verify_consensus_gain(m: LinearModel, g: ConsensusGain,
                          opts: SolverOptions | None = None) -> dict:
    """Diagnostics for a linear-route gain (pure; never raises on bad margins).

    Returns the max eigenvalue of sym(A P + P A^T - 2 B B^T), the min
    eigenvalue of P and the max-abs residual of Gamma - F^T F.
    """
    A, B = m.A, m.B
    P = np.asarray(g.P, dtype=float)
    lmi = _sym(A @ P + P @ A.T - 2.0 * (B @ B.T))
    return {
        "lmi_max_eig": float(np.linalg.eigvalsh(lmi)[-1]),
        "p_min_eig": float(np.linalg.eigvalsh(_sym(P))[0]),
        "gamma_residual": gamma_residual(g.F, g.Gamma),
    }


def gamma_residual(F: np.ndarray, Gamma: np.ndarray) -> float:
    """Max-abs entry of Gamma - F^T F."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    Gamma = np.asarray(Gamma, dtype=float)
    return float(np.abs(Gamma - F.T @ F).max())


def lipschitz_block_matrix(m: NonlinearModel, Q: np.ndarray, tau: float,
                           T: np.ndarray) -> np.ndarray:
    """Assemble the symmetric 2n x 2n feasibility block for given (Q, tau, T)."""
    A, B, D1, g = m.A, m.B, m.D1, m.gamma
    top = _sym(A @ Q + Q @ A.T) - tau * (B @ B.T) + (g * g) * (D1 @ T @ D1.T)
    return np.block([[_sym(top), Q], [Q, -T]])


class _BlockParameterMap:
    """Linear map from (Q upper triangle, tau, diag T) to the block matrix."""

    def __init__(self, m: NonlinearModel):
        n = m.n
        self.n = n
        self.dim = n * (n + 1) // 2 + 1 + n
        cols = []
        for theta_idx in range(self.dim):
            theta = np.zeros(self.dim)
            theta[theta_idx] = 1.0
            Q, tau, tdiag = self.unpack(theta)
            cols.append(
                lipschitz_block_matrix(m, Q, tau, np.diag(tdiag)).reshape(-1)
            )
        self.matrix = np.column_stack(cols)
        self.pinv = np.linalg.pinv(self.matrix)

    def unpack(self, theta: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
        n = self.n
        Q = np.zeros((n, n))
        idx = 0
        for k in range(n):
            for l in range(k, n):
                Q[k, l] = theta[idx]
                Q[l, k] = theta[idx]
                idx += 1
        tau = float(theta[idx])
        tdiag = np.array(theta[idx + 1:idx + 1 + n])
        return Q, tau, tdiag

    def pack(self, Q: np.ndarray, tau: float, tdiag: np.ndarray) -> np.ndarray:
        theta = np.empty(self.dim)
        idx = 0
        for k in range(self.n):
            for l in range(k, self.n):
                theta[idx] = Q[k, l]
                idx += 1
        theta[idx] = tau
        theta[idx + 1:] = tdiag
        return theta

    def fit(self, X: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
        """Least-squares parameters whose block matrix is closest to X."""
        return self.unpack(self.pinv @ X.reshape(-1))


def solve_lipschitz_gain(m: NonlinearModel,
                         opts: SolverOptions | None = None) -> LipschitzGain:
    """Find (Q, tau, T) making the Lipschitz block inequality hold.

    Deterministic alternating projections: starting from the Riccati
    solution of the nonlinearity-free problem (Q = P, tau = 2, T = I),
    alternately project the assembled block matrix onto
    {X : X <= -I} in its eigenbasis and back onto the range of the
    parameter map by least squares, nudging Q and T back into the
    positive cone after each sweep. Succeeds as soon as an assembled
    iterate passes the full margin check by symmetric eigensolve. The
    constraint map is homogeneous in (Q, tau, T), so the accepted
    solution is rescaled to min-eig(Q) = 1, which widens every margin
    and keeps the derived feedback gains moderate.

    Raises :class:`SynthesisError` when infeasible or not converged
    within ``max_iterations`` (reporting the best achieved margin), or
    ``ValueError`` when D1 is not square (the block inequality couples
    T to both the state and the nonlinearity channel, so it is only
    posed for D1 with as many columns as rows).
    """
    opts = opts or SolverOptions()
    n = m.n
    if m.D1.shape[1] != n:
        raise ValueError(
            f"the block inequality needs a square D1; got {m.D1.shape}"
        )

    # Infeasible for unstabilizable pairs: the (1,1) block alone would
    # contradict stabilizability. Let the Riccati route report that.
    init = solve_linear_gain(m.linear, opts)
    pmap = _BlockParameterMap(m)

    shift = 1.0          # target margin of the cone projection
    floor = 1e-6         # positivity nudge for Q eigenvalues, tau, diag T
    Q = np.array(init.P)
    tau = 2.0
    tdiag = np.ones(n)
    best_margin = np.inf

    for _ in range(opts.max_iterations):
        M = lipschitz_block_matrix(m, Q, tau, np.diag(tdiag))
        w, V = np.linalg.eigh(M)
        margin = float(w[-1])
        q_min = float(np.linalg.eigvalsh(_sym(Q))[0])
        if margin < best_margin:
            best_margin = margin
        if (margin <= -opts.tol_neg and q_min >= opts.tol_pd
                and tdiag.min() >= opts.tol_pd and tau >= opts.tol_pd):
            s = 1.0 / q_min
            if (s * margin <= -opts.tol_neg and s * tdiag.min() >= opts.tol_pd
                    and s * tau >= opts.tol_pd):
                Q, tau, tdiag = s * Q, s * tau, s * tdiag
            Qs = _sym(Q)
            F = -np.linalg.solve(Qs, m.B).T
            return LipschitzGain(Q=Qs, tau=float(tau), T=np.diag(tdiag),
                                 F=F, Gamma=F.T @ F)
        X = (V * np.minimum(w, -shift)) @ V.T
        Q, tau, tdiag = pmap.fit(X)
        wq, Vq = np.linalg.eigh(_sym(Q))
        Q = (Vq * np.maximum(wq, floor)) @ Vq.T
        tau = max(tau, floor)
        tdiag = np.maximum(tdiag, floor)

    raise SynthesisError(
        f"block inequality feasibility not reached within "
        f"{opts.max_iterations} iterations; best margin {best_margin:.3e} "
        f"(needed <= {-opts.tol_neg:.1e}). Feasibility requires the "
        f"distance to unobservability of the pair to exceed the Lipschitz "
        f"bound gamma = {m.gamma:g}."
    )


def verify_lipschitz_gain(m: NonlinearModel, g: LipschitzGain,
                          opts: SolverOptions | None = None) -> dict:
    """Independent eigensolve diagnostics for a Lipschitz-route gain."""
    M = lipschitz_block_matrix(m, np.asarray(g.Q, dtype=float), g.tau,
                               np.asarray(g.T, dtype=float))
    return {
        "block_max_eig": float(np.linalg.eigvalsh(_sym(M))[-1]),
        "q_min_eig": float(np.linalg.eigvalsh(_sym(np.asarray(g.Q)))[0]),
        "t_min": float(np.diag(g.T).min()),
        "tau": float(g.tau),
        "gamma_residual": gamma_residual(g.F, g.Gamma),
    }


def static_coupling_bound(s: SpectralInfo) -> float:
    """Minimum admissible coupling weight 1/lambda_2 for the static protocol."""
    if not s.fiedler > 1e-9:
        raise ValueError(
            f"static coupling bound needs a connected graph; fiedler value "
            f"is {s.fiedler:.3e}"
        )
    return 1.0 / s.fiedler


# -- gain documents ----------------------------------------------------------
#
# Gains round-trip through plain JSON (row-major nested lists; floats keep
# full precision via repr) so a verified synthesis can be reused by later
# simulation runs.

def gain_document(gain, margins: dict) -> dict:
    if isinstance(gain, ConsensusGain):
        return {
            "kind": "linear",
            "n": int(gain.P.shape[0]),
            "p": int(gain.F.shape[0]),
            "P": gain.P.tolist(),
            "F": gain.F.tolist(),
            "Gamma": gain.Gamma.tolist(),
            "margins": dict(margins),
        }
    if isinstance(gain, LipschitzGain):
        return {
            "kind": "lipschitz",
            "n": int(gain.Q.shape[0]),
            "p": int(gain.F.shape[0]),
            "Q": gain.Q.tolist(),
            "tau": float(gain.tau),
            "T_diag": np.diag(gain.T).tolist(),
            "F": gain.F.tolist(),
            "Gamma": gain.Gamma.tolist(),
            "margins": dict(margins),
        }
    raise TypeError(f"unsupported gain type {type(gain).__name__}")


def parse_gain_document(doc: dict):
    """Rebuild (gain, margins) from a document produced by gain_document."""
    kind = doc.get("kind")
    margins = dict(doc.get("margins", {}))
    if kind == "linear":
        gain = ConsensusGain(
            P=np.asarray(doc["P"], dtype=float),
            F=np.atleast_2d(np.asarray(doc["F"], dtype=float)),
            Gamma=np.asarray(doc["Gamma"], dtype=float),
        )
        return gain, margins
    if kind == "lipschitz":
        gain = LipschitzGain(
            Q=np.asarray(doc["Q"], dtype=float),
            tau=float(doc["tau"]),
            T=np.diag(np.asarray(doc["T_diag"], dtype=float)),
            F=np.atleast_2d(np.asarray(doc["F"], dtype=float)),
            Gamma=np.asarray(doc["Gamma"], dtype=float),
        )
        return gain, margins
    raise ValueError(f"unknown gain document kind {kind!r}")


def save_gain_document(path, gain, margins: dict) -> None:
    Path(path).write_text(
        json.dumps(gain_document(gain, margins), indent=2) + "\n",
        encoding="utf-8",
    )


def load_gain_document(path):
    return parse_gain_document(
        json.loads(Path(path).read_text(encoding="utf-8"))
    )
