"""Digital-optimal and hybrid precoder/combiner construction.

The fully digital optimum comes from the truncated SVD of the cascade
channel with water-filling (or the near-optimal equal-power split).
The hybrid factorization approximates that optimum with a unit-modulus
analog matrix times a small digital matrix via alternating least squares,
where the analog stage is updated by manifold descent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .manifold import DescentConfig, PhaseVector, ccm_descent
from .passive_bf import random_phases

PINV_RTOL = 1e-12


class RankError(ValueError):
    """The channel does not support the requested stream count."""


@dataclass(frozen=True)
class TruncatedSvd:
    """Top-N_s singular triplets of a channel matrix."""

    u1: np.ndarray      # (N_r, N_s)
    sigma1: np.ndarray  # (N_s,) descending
    v1: np.ndarray      # (N_t, N_s)


@dataclass(frozen=True)
class PowerAllocation:
    """Per-stream powers summing to the budget, plus the water level."""

    powers: np.ndarray
    water_level: float


@dataclass(frozen=True)
class HybridPrecoder:
    f_rf: np.ndarray  # (N_t, R_t) unit-modulus entries
    f_bb: np.ndarray  # (R_t, N_s)

    @property
    def full(self) -> np.ndarray:
        return self.f_rf @ self.f_bb


@dataclass(frozen=True)
class HybridCombiner:
    w_rf: np.ndarray  # (N_r, R_r) unit-modulus entries
    w_bb: np.ndarray  # (R_r, N_s)

    @property
    def full(self) -> np.ndarray:
        return self.w_rf @ self.w_bb


def truncated_svd(h: np.ndarray, n_streams: int) -> TruncatedSvd:
    """Best rank-N_s factors of h, singular values descending."""
    h = np.asarray(h)
    if n_streams > min(h.shape):
        raise ValueError("n_streams exceeds the matrix rank bound")
    if not np.all(np.isfinite(h)):
        raise FloatingPointError("channel matrix has non-finite entries")
    u, s, vh = np.linalg.svd(h, full_matrices=False)
    return TruncatedSvd(u1=u[:, :n_streams], sigma1=s[:n_streams],
                        v1=vh[:n_streams].conj().T)


def water_filling(sigma1: np.ndarray, rho: float, sigma2_noise: float) -> PowerAllocation:
    """Classic water-filling over parallel channels with gains sigma1^2.

    Active-set solution: try support sizes from largest to smallest until the
    water level keeps every active stream's power positive.
    """
    sigma1 = np.asarray(sigma1, dtype=float)
    if rho <= 0:
        raise ValueError("rho must be positive")
    if np.all(sigma1 == 0):
        raise RankError("all singular values are zero; no channel to allocate on")
    inv_gain = np.full_like(sigma1, np.inf)
    nz = sigma1 > 0
    inv_gain[nz] = sigma2_noise / sigma1[nz] ** 2
    n = len(sigma1)
    for k in range(n, 0, -1):
        if not np.all(np.isfinite(inv_gain[:k])):
            continue
        level = (rho + inv_gain[:k].sum()) / k
        if level > inv_gain[k - 1]:
            powers = np.maximum(level - inv_gain, 0.0)
            powers[k:] = 0.0
            return PowerAllocation(powers=powers, water_level=level)
    raise RankError("water-filling found no feasible support")


def digital_precoder(svd: TruncatedSvd, rho: float,
                     alloc: PowerAllocation | None = None) -> np.ndarray:
    """V_1 scaled per-stream: equal power when alloc is None, else sqrt(p_i)."""
    if alloc is None:
        return np.sqrt(rho / svd.v1.shape[1]) * svd.v1
    return svd.v1 * np.sqrt(alloc.powers)[None, :]


def digital_combiner(svd: TruncatedSvd) -> np.ndarray:
    """The left singular block U_1."""
    return svd.u1


def _pinv(a: np.ndarray) -> np.ndarray:
    return np.linalg.pinv(a, rcond=PINV_RTOL)


def hybrid_factorize(target: np.ndarray, n_rf: int, cfg: DescentConfig,
                     rng: np.random.Generator,
                     power_norm: float | None = None,
                     max_alternations: int = 30) -> tuple[np.ndarray, np.ndarray]:
    """Factor `target` (N x N_s) into unit-modulus analog x digital matrices.

    Alternates the least-squares digital update with manifold descent on the
    vectorized analog matrix until the relative residual change drops below
    cfg.epsilon. When `power_norm` is given (precoder side), the digital
    matrix is rescaled so the product has squared Frobenius norm power_norm.
    """
    target = np.asarray(target)
    n, n_streams = target.shape
    if not (n_streams <= n_rf <= n):
        raise ValueError("need N_s <= n_rf <= N")

    f_rf = random_phases(rng, n * n_rf).entries.reshape(n, n_rf)
    inner_cfg = replace(cfg, max_iters=min(cfg.max_iters, 20))
    prev_residual = np.inf
    for _ in range(max_alternations):
        f_bb = _pinv(f_rf) @ target

        def f(w):
            diff = target - w.reshape(n, n_rf) @ f_bb
            return float(np.real(np.vdot(diff, diff)))

        def grad(w):
            diff = target - w.reshape(n, n_rf) @ f_bb
            return (-2.0 * diff @ f_bb.conj().T).reshape(-1)

        w0 = PhaseVector(f_rf.reshape(-1))
        w_opt, _ = ccm_descent(f, grad, w0, inner_cfg)
        f_rf = w_opt.entries.reshape(n, n_rf)

        residual = float(np.linalg.norm(target - f_rf @ f_bb))
        denom = max(prev_residual, np.finfo(float).tiny)
        if residual == 0.0 or abs(prev_residual - residual) / denom < cfg.epsilon:
            prev_residual = residual
            break
        prev_residual = residual

    f_bb = _pinv(f_rf) @ target
    if power_norm is not None:
        norm = np.linalg.norm(f_rf @ f_bb)
        if norm == 0:
            raise RankError("degenerate factorization; cannot normalize power")
        f_bb = f_bb * (np.sqrt(power_norm) / norm)
    return f_rf, f_bb
