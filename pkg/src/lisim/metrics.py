"""Link-quality functionals: spectral efficiency, bounds, condition number."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PINV_RTOL = 1e-12


class CombinerRankError(ValueError):
    """The combiner is rank deficient."""


@dataclass(frozen=True)
class LinkMetrics:
    spectral_efficiency: float
    truncated_condition_number: float
    frobenius_bound: float
    offdiag_ratio: float


def spectral_efficiency(h_eff: np.ndarray, f: np.ndarray, w: np.ndarray,
                        sigma2: float) -> float:
    """Rate log2 det(I + (1/sigma2) (W)^+ H F F^H H^H W) in bits/s/Hz.

    Evaluated as the Hermitian form F^H H^H P_W H F with P_W the orthogonal
    projector onto the combiner column space, accumulated in the log domain.
    """
    w = np.asarray(w)
    rank = np.linalg.matrix_rank(w, tol=None)
    if rank < w.shape[1]:
        raise CombinerRankError("combiner must have full column rank")
    projector = w @ np.linalg.pinv(w, rcond=PINV_RTOL)
    s = h_eff @ f
    inner = s.conj().T @ projector @ s
    inner = (inner + inner.conj().T) / 2.0
    eigs = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(np.sum(np.log2(1.0 + eigs / sigma2)))


def spectral_efficiency_digital(sigma1: np.ndarray, powers: np.ndarray,
                                sigma2: float) -> float:
    """Closed form sum_i log2(1 + p_i sigma_i^2 / sigma2)."""
    sigma1 = np.asarray(sigma1, dtype=float)
    powers = np.asarray(powers, dtype=float)
    if sigma1.shape != powers.shape:
        raise ValueError("sigma1 and powers must have equal length")
    return float(np.sum(np.log2(1.0 + powers * sigma1 ** 2 / sigma2)))


def truncated_condition_number(h_eff: np.ndarray, n_streams: int) -> float:
    """(sigma_1 / sigma_{N_s})^2 of the cascade channel."""
    s = np.linalg.svd(h_eff, compute_uv=False)
    if n_streams > len(s) or s[n_streams - 1] == 0.0:
        raise CombinerRankError("channel is rank deficient at the stream count")
    return float((s[0] / s[n_streams - 1]) ** 2)


def frobenius_bound(h_eff: np.ndarray, rho: float, n_streams: int,
                    sigma2: float) -> float:
    """Jensen/Frobenius upper bound N_s log2(1 + rho ||H||_F^2 / (N_s^2 sigma2))."""
    fro_sq = float(np.linalg.norm(h_eff) ** 2)
    return n_streams * np.log2(1.0 + rho * fro_sq / (n_streams ** 2 * sigma2))
