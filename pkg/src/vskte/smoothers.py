"""Per-arm kernel-ridge smoothers as fold-local hat matrices, plus the
score-basis form consumed by the test statistics.

The hat matrices act on outcome vectors: ``mu_a @ y`` gives the arm-a ridge
predictions at every fold point, so column j of ``mu_a`` is zero whenever
round j belongs to the other arm.  ``resid = I - mu`` and
``delta = mu1 - mu0`` are the residual-maker and arm-contrast operators the
doubly robust coefficients are assembled from.

Two nuisance modes are supported.  "crossfit" (the default for the test
statistics) fits arm-wise ridge coefficients on the opposite fold and
evaluates them on the current fold's covariates, which keeps each fold's
scores conditionally mean-zero given the fitted nuisance; "hat" builds the
operators within the evaluated fold (the fully Gram-local construction,
whose in-sample coupling inflates the cross statistic's dispersion).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import DegenerateFoldError

__all__ = ["FoldSmoothers", "FoldScoreBasis", "arm_smoothers", "crossfit_basis",
           "score_operators"]


@dataclass(frozen=True)
class FoldSmoothers:
    """Fold-local kernel-ridge hat matrices (chronological indexing)."""

    fold_id: int
    n: int
    control_idx: np.ndarray
    treated_idx: np.ndarray
    mu0: np.ndarray
    mu1: np.ndarray
    mu: np.ndarray
    resid: np.ndarray
    delta: np.ndarray
    ridge: float


@dataclass(frozen=True)
class FoldScoreBasis:
    """Score operators for one fold over a basis of outcome rounds.

    Column i of ``delta + resid @ diag(w)`` holds the coefficients (over the
    basis outcomes) of the doubly robust score of the fold's i-th round.  In
    "hat" mode the basis is the fold itself; in "crossfit" mode it spans all
    rounds.
    """

    fold_id: int
    fold_positions: np.ndarray   # global round positions of the fold
    basis_positions: np.ndarray  # global positions of the basis outcomes
    delta: np.ndarray            # (B, n)
    resid: np.ndarray            # (B, n)

    @classmethod
    def from_smoothers(cls, s: FoldSmoothers, fold_positions) -> "FoldScoreBasis":
        # Hat matrices map outcomes to fitted values (rows = evaluation
        # points); score columns need coefficient vectors over outcomes, so
        # the score operators are the transposes: column i of delta.T is the
        # arm-contrast prediction at round i, column i of resid.T places the
        # round's own outcome net of the fitted values at its covariate.
        pos = np.asarray(fold_positions, dtype=np.int64)
        if pos.shape[0] != s.n:
            raise ValueError("fold_positions length does not match the fold size")
        return cls(fold_id=s.fold_id, fold_positions=pos, basis_positions=pos,
                   delta=s.delta.T, resid=s.resid.T)


def score_operators(basis) -> tuple[np.ndarray, np.ndarray]:
    """(delta, resid) column operators of the doubly robust scores.

    Accepts either a FoldSmoothers (transposing its hat-oriented matrices)
    or a ready FoldScoreBasis.
    """
    if isinstance(basis, FoldSmoothers):
        return basis.delta.T, basis.resid.T
    if isinstance(basis, FoldScoreBasis):
        return basis.delta, basis.resid
    raise TypeError("expected FoldSmoothers or FoldScoreBasis")


def _arm_indices(actions: np.ndarray):
    actions = np.asarray(actions)
    if not np.isin(actions, (0, 1)).all():
        raise ValueError("actions must be binary (0/1)")
    idx0 = np.flatnonzero(actions == 0)
    idx1 = np.flatnonzero(actions == 1)
    if idx0.size == 0 or idx1.size == 0:
        raise DegenerateFoldError(
            "fold contains a single arm; resample or enlarge the fold"
        )
    return idx0, idx1


def arm_smoothers(k_xx, actions, ridge: float, fold_id: int = 0) -> FoldSmoothers:
    """Build the per-arm hat matrices for one fold.

    Parameters
    ----------
    k_xx : ndarray or GramBlock, shape (n, n)
        Fold-local covariate Gram matrix, chronological order.
    actions : array-like of {0, 1}, length n
        Realized arms; both must be present.
    ridge : float
        Positive ridge level; the (K_aa + ridge I) systems are solved with a
        Cholesky factorization, which the ridge guarantees to exist.
    """
    k = np.asarray(getattr(k_xx, "values", k_xx), dtype=np.float64)
    n = k.shape[0]
    if k.shape != (n, n):
        raise ValueError(f"k_xx must be square, got {k.shape}")
    actions = np.asarray(actions)
    if actions.shape[0] != n:
        raise ValueError("actions length does not match the Gram size")
    if not ridge > 0:
        raise ValueError("ridge must be positive")
    idx0, idx1 = _arm_indices(actions)

    def smoother(idx):
        kaa = k[np.ix_(idx, idx)] + ridge * np.eye(idx.size)
        block = k[:, idx] @ cho_solve(cho_factor(kaa, lower=True), np.eye(idx.size))
        full = np.zeros((n, n))
        full[:, idx] = block
        return full

    mu0 = smoother(idx0)
    mu1 = smoother(idx1)
    mu = mu0 + mu1
    return FoldSmoothers(
        fold_id=fold_id,
        n=n,
        control_idx=idx0,
        treated_idx=idx1,
        mu0=mu0,
        mu1=mu1,
        mu=mu,
        resid=np.eye(n) - mu,
        delta=mu1 - mu0,
        ridge=float(ridge),
    )


def crossfit_basis(k_x_full, actions, fold_positions, opp_positions, ridge: float,
                   fold_id: int = 0) -> FoldScoreBasis:
    """Cross-fitted score basis: arm-wise ridge coefficients are fit on the
    opposite fold and evaluated at the current fold's covariates.

    The basis spans all rounds; score columns place the round's own outcome
    with unit weight and reference opposite-fold outcomes through the fitted
    coefficients.
    """
    k = np.asarray(getattr(k_x_full, "values", k_x_full), dtype=np.float64)
    t = k.shape[0]
    actions = np.asarray(actions)
    fold_pos = np.asarray(fold_positions, dtype=np.int64)
    opp_pos = np.asarray(opp_positions, dtype=np.int64)
    if not ridge > 0:
        raise ValueError("ridge must be positive")
    opp_actions = actions[opp_pos]
    if (opp_actions == 0).sum() == 0 or (opp_actions == 1).sum() == 0:
        raise DegenerateFoldError(
            "opposite fold contains a single arm; cannot cross-fit"
        )
    n = fold_pos.size
    delta = np.zeros((t, n))
    resid = np.zeros((t, n))
    resid[fold_pos, np.arange(n)] = 1.0

    fold_actions = actions[fold_pos]
    for arm, sign in ((0, -1.0), (1, 1.0)):
        rows = opp_pos[opp_actions == arm]
        kaa = k[np.ix_(rows, rows)] + ridge * np.eye(rows.size)
        # coefficient columns of the arm's ridge prediction at each fold point
        alpha = cho_solve(cho_factor(kaa, lower=True), k[np.ix_(rows, fold_pos)])
        delta[rows, :] = sign * alpha
        own = np.flatnonzero(fold_actions == arm)
        resid[np.ix_(rows, own)] -= alpha[:, own]

    return FoldScoreBasis(fold_id=fold_id, fold_positions=fold_pos,
                          basis_positions=np.arange(t), delta=delta, resid=resid)
