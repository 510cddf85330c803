"""Doubly robust score coefficients in Gram form and their cross products.

A score is represented by a coefficient column over basis outcomes, so all
inner products reduce to quadratic forms in outcome Gram blocks (the kernel
trick).  The coefficient matrix is assembled as ``delta + resid @ diag(w)``
with ``w`` the signed inverse-propensity multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "IpwMultipliers",
    "DrCoefficients",
    "ipw_multipliers",
    "dr_coefficients",
    "cross_matrix",
    "canonical_gradient",
    "PROPENSITY_CLIP",
]

PROPENSITY_CLIP = 1e-3  # numerical strong-positivity floor applied before inversion


@dataclass(frozen=True)
class IpwMultipliers:
    """Signed inverse-propensity multipliers w_i (sign = 2 A_i - 1, |w_i| >= 1)."""

    w: np.ndarray
    propensities: np.ndarray  # arm-1 propensities after clipping
    clip: float


@dataclass(frozen=True)
class DrCoefficients:
    """Doubly robust coefficient matrix; column i encodes the score of round i."""

    matrix: np.ndarray
    provenance: str


def ipw_multipliers(actions, propensities, clip: float = PROPENSITY_CLIP) -> IpwMultipliers:
    """Multipliers -1/(1-p_i) on control rounds and +1/p_i on treated rounds.

    ``propensities`` are pi(1 | X_i); values outside (0, 1) are rejected,
    then clipped into [clip, 1 - clip] before inversion.
    """
    actions = np.asarray(actions)
    p = np.asarray(propensities, dtype=np.float64)
    if actions.shape != p.shape:
        raise ValueError("actions and propensities must have matching length")
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("propensities must lie strictly in (0, 1) before clipping")
    pc = np.clip(p, clip, 1.0 - clip)
    w = np.where(actions == 1, 1.0 / pc, -1.0 / (1.0 - pc))
    return IpwMultipliers(w=w, propensities=pc, clip=clip)


def dr_coefficients(basis, mult: IpwMultipliers | np.ndarray,
                    provenance: str = "logged") -> DrCoefficients:
    """Assemble D = delta + resid @ diag(w) for a fold.

    ``basis`` may be a FoldSmoothers or FoldScoreBasis; ``mult`` the
    multipliers (or a raw weight vector) aligned with the fold's rounds.
    """
    from .smoothers import score_operators

    delta, resid = score_operators(basis)
    w = mult.w if isinstance(mult, IpwMultipliers) else np.asarray(mult, dtype=np.float64)
    if w.shape[0] != delta.shape[1]:
        raise ValueError("multiplier length does not match the fold size")
    return DrCoefficients(matrix=delta + resid * w[None, :], provenance=provenance)


def cross_matrix(d0, k_cross, d1) -> np.ndarray:
    """Cross inner products G0[i, j] = <score_i^(0), score_j^(1)> via Grams.

    ``k_cross`` is the outcome Gram block between the two folds' score bases.
    """
    m0 = d0.matrix if isinstance(d0, DrCoefficients) else np.asarray(d0)
    m1 = d1.matrix if isinstance(d1, DrCoefficients) else np.asarray(d1)
    k = np.asarray(getattr(k_cross, "values", k_cross), dtype=np.float64)
    if k.shape != (m0.shape[0], m1.shape[0]):
        raise ValueError(
            f"Gram block {k.shape} does not link bases of sizes "
            f"{m0.shape[0]} and {m1.shape[0]}"
        )
    return m0.T @ k @ m1


def canonical_gradient(phi_y, observed_action, mu_observed, target_action,
                       target_propensity, mu_target) -> np.ndarray:
    """Doubly robust score for one observation in an explicit feature space.

    Computes 1{A = a} / pi(a|x) * (phi(y) - mu(A, x)) + mu(a, x) with all
    feature-space quantities passed in as vectors.  Used for enumeration
    oracles and as the reference for the Gram-matrix fast path.
    """
    out = np.asarray(mu_target, dtype=np.float64).copy()
    if observed_action == target_action:
        phi = np.asarray(phi_y, dtype=np.float64)
        mu_obs = np.asarray(mu_observed, dtype=np.float64)
        out += (phi - mu_obs) / float(target_propensity)
    return out
