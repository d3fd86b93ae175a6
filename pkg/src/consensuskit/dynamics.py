"""Agent open-loop models: general linear and Lipschitz-nonlinear dynamics.

A linear agent evolves as xdot = A x + B u. The nonlinear variant adds a
channelled nonlinearity: xdot = A x + D1 f(x) + B u, where f is declared
Lipschitz with constant gamma. The declared gamma is verified by sampling
(:func:`check_lipschitz`), not symbolically; synthesis takes it as given.

The built-in single-link manipulator network (revolute joint driven by a
DC motor) is exposed through :func:`manipulator_model` together with the
reference feedback gains shipped with that benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "LinearModel",
    "NonlinearModel",
    "linear_drift",
    "nonlinear_drift",
    "check_lipschitz",
    "manipulator_model",
    "manipulator_reference_gains",
]


@dataclass(frozen=True)
class LinearModel:
    """Identical-agent linear dynamics xdot = A x + B u."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ValueError(
                f"B has {B.shape[0]} rows but A is {A.shape[0]}x{A.shape[1]}"
            )
        if A.shape[0] < 1 or B.shape[1] < 1:
            raise ValueError("state and input dimensions must be >= 1")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class NonlinearModel:
    """Lipschitz-nonlinear dynamics xdot = A x + D1 f(x) + B u.

    ``f`` maps an n-vector to an m-vector and must be pure; ``gamma`` is
    the claimed Lipschitz constant of f in the Euclidean norm.
    """

    linear: LinearModel
    D1: np.ndarray
    f: Callable[[np.ndarray], np.ndarray]
    gamma: float

    def __post_init__(self):
        D1 = np.atleast_2d(np.asarray(self.D1, dtype=float))
        if D1.shape[0] != self.linear.n:
            raise ValueError(
                f"D1 has {D1.shape[0]} rows but the state dimension is {self.linear.n}"
            )
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        object.__setattr__(self, "D1", D1)

    @property
    def A(self) -> np.ndarray:
        return self.linear.A

    @property
    def B(self) -> np.ndarray:
        return self.linear.B

    @property
    def n(self) -> int:
        return self.linear.n

    @property
    def p(self) -> int:
        return self.linear.p


def _check_vec(x, dim: int, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape[0] != dim:
        raise ValueError(f"{name} must have length {dim}, got {v.shape[0]}")
    return v


def linear_drift(m: LinearModel, x, u) -> np.ndarray:
    """A x + B u."""
    x = _check_vec(x, m.n, "x")
    u = _check_vec(u, m.p, "u")
    return m.A @ x + m.B @ u


def nonlinear_drift(m: NonlinearModel, x, u) -> np.ndarray:
    """A x + D1 f(x) + B u."""
    x = _check_vec(x, m.n, "x")
    u = _check_vec(u, m.linear.p, "u")
    fx = np.asarray(m.f(x), dtype=float).reshape(-1)
    if fx.shape[0] != m.D1.shape[1]:
        raise ValueError(
            f"f(x) returned length {fx.shape[0]}, expected {m.D1.shape[1]}"
        )
    return m.A @ x + m.D1 @ fx + m.B @ u


def check_lipschitz(m: NonlinearModel, n_samples: int, radius: float,
                    seed: int) -> dict:
    """Spot-check the declared Lipschitz constant by random sampling.

    Draws ``n_samples`` pairs (x, y) uniformly in the ball of the given
    radius and reports the largest observed ratio ||f(x)-f(y)|| / ||x-y||.
    Degenerate pairs with x == y are skipped.

    Returns a dict with ``max_ratio`` and ``pass`` (true iff the maximum
    ratio does not exceed gamma up to a 1e-9 relative slack).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(seed)
    n = m.n

    def sample_ball(count: int) -> np.ndarray:
        g = rng.standard_normal((count, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = radius * rng.random(count) ** (1.0 / n)
        return g * r[:, None]

    xs = sample_ball(n_samples)
    ys = sample_ball(n_samples)
    max_ratio = 0.0
    for x, y in zip(xs, ys):
        dx = np.linalg.norm(x - y)
        if dx == 0.0:
            continue
        df = np.linalg.norm(
            np.asarray(m.f(x), dtype=float) - np.asarray(m.f(y), dtype=float)
        )
        ratio = df / dx
        if ratio > max_ratio:
            max_ratio = float(ratio)
    return {"max_ratio": max_ratio, "pass": max_ratio <= m.gamma * (1.0 + 1e-9)}


def _manipulator_f(x: np.ndarray) -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, -0.333 * np.sin(x[2])])


def manipulator_model() -> NonlinearModel:
    """Single-link manipulator with a revolute joint driven by a DC motor.

    State is (motor angle, motor velocity, link angle, link velocity); the
    only nonlinearity is the gravity torque, a sine of the link angle with
    Lipschitz constant 0.333.
    """
    A = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-48.6, -1.25, 48.6, 0.0],
        [0.0, 0.0, 0.0, 10.0],
        [1.95, 0.0, -1.95, 0.0],
    ])
    B = np.array([[0.0], [21.6], [0.0], [0.0]])
    linear = LinearModel(A=A, B=B)
    return NonlinearModel(linear=linear, D1=np.eye(4), f=_manipulator_f,
                          gamma=0.333)


def manipulator_reference_gains() -> tuple[np.ndarray, np.ndarray]:
    """Reference feedback gains distributed with the manipulator benchmark.

    Quoted to roughly five significant digits, so Gamma matches F^T F only
    to about 2e-4; use them for consistency checks, not as a bit-exact
    target (the feasibility problem has infinitely many solutions).
    """
    F = np.array([[-1.8351, -0.2144, 1.0309, -2.247]])
    Gamma = np.array([
        [3.3676, 0.3935, -1.8917, 4.1236],
        [0.3935, 0.046, -0.221, 0.4818],
        [-1.8917, -0.221, 1.0627, -2.3164],
        [4.1236, 0.4818, -2.3164, 5.0492],
    ])
    return F, Gamma
