"""Passive-beamforming objectives and solvers for the LIS phase vector.

Two optimizers share the manifold engine:
- `optimize_tsvd` maximizes the per-stream composite-path rate surrogate
  sum_i log2(1 + a_i |v^H p^{ii}|^2) over the top-N_s sorted paths;
- `optimize_spgm` maximizes the Frobenius norm of the cascade channel
  (the sum-path-gain baseline) via the quadratic form w^H Q w.

`coupling_matrix` exposes the D matrix and the off-diagonal diagnostic
ratio used to check that the optimized phases suppress cross-path leakage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (
    ArrayGeometry,
    CompositePathBank,
    LinkBudget,
    MmWaveChannel,
    PathSet,
    composite_path_vectors,
    sort_paths_descending,
)
from .manifold import DescentConfig, PhaseVector, ccm_descent

_LN2 = np.log(2.0)


class StreamCountError(ValueError):
    """Requested more streams than available composite paths."""


@dataclass(frozen=True)
class TsvdProblem:
    """Diagonal composite vectors p^{ii} plus per-stream effective SNRs."""

    diag_vectors: np.ndarray  # (N_s, M)
    weights: np.ndarray       # (N_s,) positive

    def __post_init__(self):
        if self.diag_vectors.ndim != 2 or len(self.weights) != len(self.diag_vectors):
            raise ValueError("need one weight per diagonal composite vector")
        if np.any(np.asarray(self.weights) < 0):
            raise ValueError("weights must be non-negative")

    @property
    def n_streams(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class CouplingMatrix:
    """Path-coupling matrix D(i,j) = beta_i alpha_j d_ij and the raw gains d_ij."""

    d: np.ndarray      # (L, P) complex, beta_i alpha_j v^H p^{ij}
    gains: np.ndarray  # (L, P) complex, v^H p^{ij}

    def offdiag_ratio(self, n_streams: int) -> float:
        """mean |d_ij| off the diagonal over mean |d_ii|, top-N_s block."""
        block = np.abs(self.gains[:n_streams, :n_streams])
        diag = np.mean(np.diag(block))
        off = block[~np.eye(n_streams, dtype=bool)]
        if off.size == 0:
            return 0.0
        return float(np.mean(off) / diag)


def tsvd_objective(v: np.ndarray, prob: TsvdProblem) -> float:
    """Negated rate surrogate -sum_i log2(1 + a_i |v^H p^{ii}|^2)."""
    entries = np.asarray(getattr(v, "entries", v))
    d = prob.diag_vectors @ entries.conj()
    return float(-np.sum(np.log2(1.0 + prob.weights * np.abs(d) ** 2)))


def tsvd_euclidean_gradient(v: np.ndarray, prob: TsvdProblem) -> np.ndarray:
    """Wirtinger gradient of `tsvd_objective` with respect to v."""
    entries = np.asarray(getattr(v, "entries", v))
    d = prob.diag_vectors @ entries.conj()          # v^H p^{ii} per stream
    coeff = 2.0 * prob.weights * d.conj() / (_LN2 * (1.0 + prob.weights * np.abs(d) ** 2))
    return -(coeff[:, None] * prob.diag_vectors).sum(axis=0)


def random_phases(rng: np.random.Generator, m: int) -> PhaseVector:
    """Unit-modulus vector with independent Uniform(0, 2pi) phases."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return PhaseVector(np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, m)))


def stream_weights(paths: PathSet, budget: LinkBudget, n_streams: int,
                   tx_gain: float = 1.0, rx_gain: float = 1.0) -> np.ndarray:
    """Per-stream effective SNRs a_i = rho |g alpha_i beta_i|^2 / (N_s sigma^2).

    `paths` must already be sorted descending; the scalar antenna gains enter
    because they scale the cascade channel the rates are evaluated on.
    """
    alpha = paths.bs_lis_gain[:n_streams]
    beta = paths.lis_ue_gain[:n_streams]
    scale = (tx_gain * rx_gain) ** 2
    return budget.tx_power * scale * np.abs(alpha * beta) ** 2 / (
        n_streams * budget.noise_power)


def build_tsvd_problem(paths: PathSet, geometry: ArrayGeometry, budget: LinkBudget,
                       n_streams: int, tx_gain: float = 1.0,
                       rx_gain: float = 1.0) -> TsvdProblem:
    """Sort paths, pair the strongest N_s, and collect p^{ii} plus weights."""
    if n_streams > min(paths.n_bs_lis, paths.n_lis_ue):
        raise StreamCountError("n_streams exceeds the available path count")
    paths = sort_paths_descending(paths)
    bank = composite_path_vectors(paths, geometry)
    diag = np.stack([bank.vectors[i, i] for i in range(n_streams)])
    weights = stream_weights(paths, budget, n_streams, tx_gain, rx_gain)
    return TsvdProblem(diag_vectors=diag, weights=weights)


def optimize_tsvd(paths: PathSet, geometry: ArrayGeometry, budget: LinkBudget,
                  n_streams: int, cfg: DescentConfig, rng: np.random.Generator,
                  tx_gain: float = 1.0, rx_gain: float = 1.0,
                  ) -> tuple[PhaseVector, list[float]]:
    """Manifold descent on the truncated-SVD rate surrogate from a random start."""
    prob = build_tsvd_problem(paths, geometry, budget, n_streams, tx_gain, rx_gain)
    v0 = random_phases(rng, geometry.m)
    return ccm_descent(
        lambda v: tsvd_objective(v, prob),
        lambda v: tsvd_euclidean_gradient(v, prob),
        v0, cfg)


def optimize_spgm(channel: MmWaveChannel, cfg: DescentConfig,
                  rng: np.random.Generator) -> PhaseVector:
    """Maximize tr(H_eff H_eff^H) over the LIS phases.

    Uses tr(Phi^H R^H R Phi G G^H) = w^H Q w with w_m = e^{j phi_m} and
    Q = (R^H R) o (G G^H)^T, solved by manifold ascent; returns v = conj(w).
    """
    q = (channel.r.conj().T @ channel.r) * (channel.g @ channel.g.conj().T).T

    def f(w):
        return float(-np.real(np.vdot(w, q @ w)))

    def grad(w):
        return -2.0 * (q @ w)

    w0 = random_phases(rng, channel.m)
    w_opt, _ = ccm_descent(f, grad, w0, cfg)
    return PhaseVector(w_opt.entries.conj())


def coupling_matrix(v: np.ndarray, paths: PathSet,
                    composite: CompositePathBank) -> CouplingMatrix:
    """Evaluate every passive beamforming gain d_ij = v^H p^{ij} at v."""
    entries = np.asarray(getattr(v, "entries", v))
    l, p, m = composite.vectors.shape
    if entries.shape != (m,) or l != paths.n_lis_ue or p != paths.n_bs_lis:
        raise ValueError("phase vector / paths / composite bank are inconsistent")
    gains = composite.vectors @ entries.conj()
    d = paths.lis_ue_gain[:, None] * paths.bs_lis_gain[None, :] * gains
    return CouplingMatrix(d=d, gains=gains)
