"""Predictable variance-stabilization weights from importance-weighted
empirical moments.

For each in-fold round t the past rounds of the same fold are reweighted to
the round-t evaluation policy, the first and second moments of the scores
(rebuilt with round-t propensity denominators) are formed in Gram form, and
the weight is the inverse square root of the implied conditional variance.
Rounds with fewer than ``warmup_min`` past points receive weight 1.

Given the fold-level inputs (score basis and outcome Gram), the weight at
position t reads only rows/columns strictly before t plus the row-t policy
snapshot, so the weights are predictable by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError
from .scores import PROPENSITY_CLIP
from .smoothers import score_operators
from .trajectory import snapshot_propensity

__all__ = [
    "WeightConfig",
    "StabilizationWeights",
    "importance_ratios",
    "conditional_moments",
    "stabilization_weight",
    "weight_series",
]


@dataclass(frozen=True)
class WeightConfig:
    warmup_min: int = 2          # past points required before estimating
    var_floor: float = 1e-12
    omega_max: float = 1e6
    clip: float = PROPENSITY_CLIP

    def __post_init__(self):
        if self.warmup_min < 1:
            raise ValueError("warmup_min must be at least 1")
        if not (self.var_floor > 0 and self.omega_max > 0):
            raise ValueError("var_floor and omega_max must be positive")


@dataclass(frozen=True)
class StabilizationWeights:
    fold_id: int
    omega: np.ndarray
    warmup: np.ndarray  # True where the default weight 1 was used
    omega_max: float


def importance_ratios(snapshot, contexts, actions, logged_propensities,
                      clip: float = PROPENSITY_CLIP) -> np.ndarray:
    """Change-of-measure ratios pi_t(A_s|X_s) / pi_s(A_s|X_s) for past rounds.

    ``snapshot`` is the round-t policy state; the remaining arrays describe
    the past rounds s < t.  An empty past yields an empty vector.
    """
    contexts = np.asarray(contexts, dtype=np.float64)
    actions = np.asarray(actions)
    logged = np.asarray(logged_propensities, dtype=np.float64)
    if actions.size == 0:
        return np.zeros(0)
    if np.any(logged <= 0.0) or np.any(logged >= 1.0):
        raise ValueError("logged propensities must lie strictly in (0, 1)")
    p1 = np.array([snapshot_propensity(snapshot, x) for x in contexts])
    num = np.where(actions == 1, p1, 1.0 - p1)
    den = np.clip(logged, clip, 1.0 - clip)
    return num / den


def conditional_moments(d_t, k_yy, u) -> tuple[float, float]:
    """Importance-weighted first/second score moments in Gram form.

    Parameters
    ----------
    d_t : DrCoefficients or ndarray, shape (B, n)
        Coefficient matrix built with the round-t propensity denominators.
    k_yy : ndarray, shape (B, B)
        Outcome Gram over the basis rounds.
    u : ndarray, shape (n,)
        Normalized past weights rho_{s,t} / |S_t|, zero off the past set.

    Returns
    -------
    (m1_sq, m2) : the squared norm of the weighted mean score and the
        weighted mean squared score norm.
    """
    d = d_t.matrix if hasattr(d_t, "matrix") else np.asarray(d_t, dtype=np.float64)
    k = np.asarray(getattr(k_yy, "values", k_yy), dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if not np.any(u):
        raise ValueError("empty past: the moments are undefined")
    m1 = d @ u
    m1_sq = float(m1 @ (k @ m1))
    colq = ((k @ d) * d).sum(axis=0)
    m2 = float(colq @ u)
    return m1_sq, m2


def stabilization_weight(m1_sq: float, m2: float, floor: float = 1e-12,
                         cap: float = 1e6) -> float:
    """omega = min((max(m2 - m1_sq, floor))^(-1/2), cap)."""
    if not (math.isfinite(m1_sq) and math.isfinite(m2)):
        raise NumericalError(f"non-finite moments: m1_sq={m1_sq}, m2={m2}")
    var = max(m2 - m1_sq, floor)
    return min(var**-0.5, cap)


def weight_series(actions, logged_propensities, prop_matrix, basis, k_yy,
                  config: WeightConfig | None = None, fold_id: int = 0,
                  return_moments: bool = False):
    """Predictable stabilization weights for one fold, in chronological order.

    Parameters
    ----------
    actions, logged_propensities : arrays over the fold's rounds
    prop_matrix : ndarray, shape (n, n)
        Row i holds pi_{t_i}(1 | X_{t_j}) for all in-fold j (snapshot of the
        policy before the round-i update).
    basis : FoldSmoothers or FoldScoreBasis
        The fold's score operators.
    k_yy : ndarray, shape (B, B)
        Outcome Gram over the basis rounds.
    """
    config = config or WeightConfig()
    actions = np.asarray(actions)
    logged = np.asarray(logged_propensities, dtype=np.float64)
    delta, resid = score_operators(basis)
    k = np.asarray(getattr(k_yy, "values", k_yy), dtype=np.float64)
    n = delta.shape[1]
    p = np.asarray(prop_matrix, dtype=np.float64)
    if p.shape != (n, n):
        raise ValueError(
            f"propensity matrix shape {p.shape} does not match fold size {n} "
            "(one snapshot row per in-fold round)"
        )
    if actions.shape[0] != n or logged.shape[0] != n:
        raise ValueError("actions/propensities length does not match the fold")
    if k.shape != (delta.shape[0], delta.shape[0]):
        raise ValueError("k_yy must be square over the basis rounds")

    kd = k @ delta
    kr = k @ resid
    v_dd = (delta * kd).sum(axis=0)
    v_dr = (delta * kr).sum(axis=0)
    v_rr = (resid * kr).sum(axis=0)

    is_treated = actions == 1
    logged_c = np.clip(logged, config.clip, 1.0 - config.clip)

    omega = np.ones(n)
    warmup = np.zeros(n, dtype=bool)
    m1_trace = np.full(n, np.nan)
    m2_trace = np.full(n, np.nan)
    for t in range(n):
        if t < config.warmup_min:
            warmup[t] = True
            continue
        pt = np.clip(p[t], config.clip, 1.0 - config.clip)
        w_t = np.where(is_treated, 1.0 / pt, -1.0 / (1.0 - pt))
        # ratio numerators stay unclipped; only inverted quantities are clipped
        num = np.where(is_treated[:t], p[t, :t], 1.0 - p[t, :t])
        rho = num / logged_c[:t]
        # self-normalized weights keep m2 - m1_sq a genuine weighted variance
        # (non-negative); the raw 1/|S_t| scaling can push it below zero when
        # ratios exceed one and the past scores align, which would trip the
        # floor and hand a single round the capped weight
        mass = float(rho.sum())
        u = rho / mass
        wu = w_t[:t] * u
        m1v = delta[:, :t] @ u + resid[:, :t] @ wu
        km1 = kd[:, :t] @ u + kr[:, :t] @ wu
        m1_sq = float(m1v @ km1)
        colq = v_dd[:t] + 2.0 * w_t[:t] * v_dr[:t] + w_t[:t] ** 2 * v_rr[:t]
        m2 = float(colq @ u)
        omega[t] = stabilization_weight(m1_sq, m2, config.var_floor, config.omega_max)
        m1_trace[t] = m1_sq
        m2_trace[t] = m2

    weights = StabilizationWeights(fold_id=fold_id, omega=omega, warmup=warmup,
                                   omega_max=config.omega_max)
    if return_moments:
        return weights, m1_trace, m2_trace
    return weights
