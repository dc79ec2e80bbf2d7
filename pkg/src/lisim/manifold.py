"""First-order descent on the product-of-complex-circles manifold.

The feasible set is {v in C^M : |v_m| = 1}. Gradients follow the Wirtinger
convention grad f = 2 df/d(conj v), so central finite differences along the
real (imaginary) coordinate axes recover the real (imaginary) parts.

The engine minimizes; callers negate maximization objectives.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

UNIT_MODULUS_TOL = 1e-10


class RetractionError(ValueError):
    """A zero entry cannot be normalized back onto the manifold."""


class LineSearchError(RuntimeError):
    """Armijo backtracking exhausted its shrink budget."""


@dataclass(frozen=True)
class PhaseVector:
    """Unit-modulus complex vector: the LIS reflection state."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 1:
            raise ValueError("entries must be a 1-D complex vector")
        if np.max(np.abs(np.abs(entries) - 1.0)) > UNIT_MODULUS_TOL:
            raise ValueError("entries must have unit modulus")

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class DescentConfig:
    """Stopping rule and Armijo backtracking constants."""

    epsilon: float = 1e-4
    max_iters: int = 500
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    initial_step: float = 1.0
    max_shrinks: int = 50

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not (0 < self.armijo_shrink < 1 and 0 < self.armijo_slope < 1):
            raise ValueError("armijo constants must lie in (0, 1)")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")


Objective = Callable[[np.ndarray], float]
Gradient = Callable[[np.ndarray], np.ndarray]


def tangent_project(v: PhaseVector, g: np.ndarray) -> np.ndarray:
    """Project a Euclidean gradient onto the tangent space at v."""
    entries = v.entries
    g = np.asarray(g, dtype=complex)
    if g.shape != entries.shape:
        raise ValueError("gradient length must match the phase vector")
    return g - np.real(g * entries.conj()) * entries


def retract(v_bar: np.ndarray) -> PhaseVector:
    """Map a point back onto the manifold by entrywise normalization."""
    v_bar = np.asarray(v_bar, dtype=complex)
    mags = np.abs(v_bar)
    if np.any(mags == 0.0):
        raise RetractionError("cannot retract a vector with a zero entry")
    return PhaseVector(v_bar / mags)


def armijo_step(f: Objective, v: PhaseVector, riem_grad: np.ndarray,
                cfg: DescentConfig) -> float:
    """Largest step initial_step * shrink^t meeting the sufficient decrease
    f(retract(v - step * g)) <= f(v) - slope * step * ||g||^2."""
    grad_sq = float(np.real(np.vdot(riem_grad, riem_grad)))
    if grad_sq == 0.0:
        return cfg.initial_step
    f_v = f(v.entries)
    step = cfg.initial_step
    for _ in range(cfg.max_shrinks + 1):
        candidate = retract(v.entries - step * riem_grad)
        if f(candidate.entries) <= f_v - cfg.armijo_slope * step * grad_sq:
            return step
        step *= cfg.armijo_shrink
    raise LineSearchError("no Armijo step accepted")


def ccm_descent(f: Objective, grad_f: Gradient, v0: PhaseVector,
                cfg: DescentConfig) -> tuple[PhaseVector, list[float]]:
    """Riemannian gradient descent with Armijo backtracking.

    The Armijo trial step is warm-started each iteration: the first iteration
    normalizes cfg.initial_step to a unit RMS per-element displacement, later
    iterations use the Barzilai-Borwein quotient from the previous step. A
    fixed trial step stalls badly on the composite-path objective because its
    curvature scales with the LIS size; backtracking still guards descent.

    Returns the final point and the objective trace (including the start).
    Stops when the objective gap drops below cfg.epsilon, the iteration
    budget is exhausted, or the line search fails (treated as converged).
    """
    v = v0
    f_v = float(f(v.entries))
    if not np.isfinite(f_v):
        raise FloatingPointError("objective is not finite at the start point")
    trace = [f_v]
    prev_entries = prev_riem = None
    for _ in range(cfg.max_iters):
        grad = grad_f(v.entries)
        riem = tangent_project(v, grad)
        grad_norm = float(np.linalg.norm(riem))
        if grad_norm == 0.0:
            trace.append(f_v)
            break
        trial = cfg.initial_step * np.sqrt(len(v)) / grad_norm
        if prev_entries is not None:
            move = v.entries - prev_entries
            curvature = abs(np.real(np.vdot(move, riem - prev_riem)))
            if curvature > 0:
                trial = float(np.real(np.vdot(move, move)) / curvature)
        try:
            step = armijo_step(f, v, riem, replace(cfg, initial_step=trial))
        except LineSearchError:
            break
        prev_entries, prev_riem = v.entries, riem
        v_next = retract(v.entries - step * riem)
        f_next = float(f(v_next.entries))
        if not np.isfinite(f_next):
            raise FloatingPointError("objective became non-finite")
        v, gap = v_next, abs(f_next - f_v)
        f_v = f_next
        trace.append(f_v)
        if gap < cfg.epsilon:
            break
    return v, trace
