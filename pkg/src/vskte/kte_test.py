"""Sample-split kernel treatment effect tests on logged bandit trajectories.

``vs_dr_kte`` is the variance-stabilized test: per fold it builds the
kernel-ridge smoothers, the doubly robust coefficient columns under the
logged propensities, and predictable stabilization weights; the statistic is
the studentized cross inner product of the two folds' stabilized score sums

    T = sum(G) / sqrt(sum(G^2)),   G[i, j] = w_i^(0) w_j^(1) <score_i, score_j>,

which is asymptotically standard normal under the null of equal
counterfactual outcome distributions.  ``dr_kte_unstabilized`` is the plain
sample-split statistic (row means studentized across fold-0 rounds), valid
under i.i.d. logging but miscalibrated under adaptive policies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._normal import normal_sf, two_sided_p
from .exceptions import DegenerateFoldError, DegenerateStatisticError
from .kernels import KernelSpec, gram_matrix, resolve_lengthscale
from .policies import fold_propensity_snapshots
from .scores import cross_matrix, dr_coefficients, ipw_multipliers
from .smoothers import FoldScoreBasis, arm_smoothers, crossfit_basis
from .splits import FoldSplit
from .stabilization import WeightConfig, weight_series
from .trajectory import Trajectory

__all__ = [
    "TestOutcome",
    "KteEstimate",
    "FoldSplit",
    "vs_dr_kte",
    "dr_kte_unstabilized",
    "kte_estimate",
    "prepare_folds",
    "stabilized_cross_statistic",
    "PreparedFold",
    "PreparedTest",
]


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    p_value: float
    reject: bool
    alpha: float
    diagnostics: dict


class KteEstimate(NamedTuple):
    raw: float      # may be negative in finite samples
    clamped: float  # max(raw, 0)


@dataclass
class PreparedFold:
    positions: np.ndarray
    actions: np.ndarray
    logged: np.ndarray
    basis: FoldScoreBasis
    k_yy: np.ndarray
    prop_matrix: np.ndarray
    d_logged: np.ndarray
    weights: object  # StabilizationWeights, filled by prepare_folds


@dataclass
class PreparedTest:
    gamma_x: float
    gamma_y: float
    folds: tuple
    k_cross: np.ndarray


def _p_value(t_stat: float, alternative: str) -> float:
    if alternative == "greater":
        return normal_sf(t_stat)
    if alternative == "two-sided":
        return two_sided_p(t_stat)
    raise ValueError(f"unknown alternative: {alternative!r}")


def _check_folds(actions, split: FoldSplit) -> None:
    for fold in (split.i0, split.i1):
        arms = set(int(actions[i]) for i in fold)
        if arms != {0, 1}:
            raise DegenerateFoldError("each fold must contain both arms")


def prepare_folds(traj: Trajectory, split: FoldSplit, *,
                  covariate_kernel: KernelSpec | None = None,
                  outcome_kernel: KernelSpec | None = None,
                  ridge: float = 1e-2,
                  nuisance: str = "crossfit",
                  weight_config: WeightConfig | None = None,
                  compute_weights: bool = True) -> PreparedTest:
    """Resolve kernels and assemble per-fold score bases, Grams, and weights.

    Exposed separately from :func:`vs_dr_kte` so the assembly can be rerun
    on modified Gram blocks (for exactness checks) without resimulating.
    """
    if nuisance not in ("hat", "crossfit"):
        raise ValueError(f"unknown nuisance mode: {nuisance!r}")
    x = traj.contexts()
    y = traj.outcomes()
    actions = traj.actions()
    logged = traj.propensities()
    arm1 = traj.arm1_propensities()
    _check_folds(actions, split)

    cov_spec = covariate_kernel or KernelSpec.median()
    out_spec = outcome_kernel or KernelSpec.half_median()
    gamma_x = resolve_lengthscale(cov_spec, x, "covariate")
    gamma_y = resolve_lengthscale(out_spec, y, "outcome")

    prop_mats = fold_propensity_snapshots(traj, split)
    folds = []
    fold_positions = (np.asarray(split.i0, dtype=np.int64),
                      np.asarray(split.i1, dtype=np.int64))
    if nuisance == "crossfit":
        k_x_full = gram_matrix(gamma_x, x, x)
        k_y_full = gram_matrix(gamma_y, y, y)
    for r, pos in enumerate(fold_positions):
        opp = fold_positions[1 - r]
        if nuisance == "hat":
            k_xx = gram_matrix(gamma_x, x[pos], x[pos])
            sm = arm_smoothers(k_xx, actions[pos], ridge, fold_id=r)
            basis = FoldScoreBasis.from_smoothers(sm, pos)
            k_yy = gram_matrix(gamma_y, y[pos], y[pos])
        else:
            basis = crossfit_basis(k_x_full, actions, pos, opp, ridge, fold_id=r)
            k_yy = k_y_full
        mult = ipw_multipliers(actions[pos], arm1[pos])
        d_logged = dr_coefficients(basis, mult).matrix
        folds.append(PreparedFold(
            positions=pos, actions=actions[pos], logged=logged[pos],
            basis=basis, k_yy=k_yy, prop_matrix=prop_mats[r],
            d_logged=d_logged, weights=None,
        ))
    if nuisance == "hat":
        k_cross = gram_matrix(gamma_y, y[fold_positions[0]], y[fold_positions[1]])
    else:
        k_cross = k_y_full

    prep = PreparedTest(gamma_x=gamma_x, gamma_y=gamma_y, folds=tuple(folds),
                        k_cross=k_cross)
    if compute_weights:
        compute_fold_weights(prep, weight_config)
    return prep


def compute_fold_weights(prep: PreparedTest, config: WeightConfig | None = None) -> None:
    """(Re)compute the stabilization weights of both prepared folds."""
    for fold in prep.folds:
        fold.weights = weight_series(
            fold.actions, fold.logged, fold.prop_matrix, fold.basis, fold.k_yy,
            config=config, fold_id=fold.basis.fold_id,
        )


def stabilized_cross_statistic(g0: np.ndarray, omega0: np.ndarray,
                               omega1: np.ndarray, keep0=None, keep1=None):
    """Numerator, variance proxy, and studentized statistic from the pieces.

    ``keep0/keep1`` restrict the double sum to a subset of rounds (used to
    exclude warmup rounds from the stabilized sums).
    """
    g = omega0[:, None] * g0 * omega1[None, :]
    if keep0 is not None:
        g = g[np.asarray(keep0, dtype=bool)]
    if keep1 is not None:
        g = g[:, np.asarray(keep1, dtype=bool)]
    m0, m1 = g.shape
    if m0 == 0 or m1 == 0:
        raise DegenerateStatisticError("no rounds left after trimming")
    scale = math.sqrt(m0 * m1)
    numerator = float(g.sum()) / scale
    variance_proxy = float((g * g).sum()) / (m0 * m1)
    if variance_proxy <= 0.0:
        raise DegenerateStatisticError("variance proxy is zero")
    return numerator, variance_proxy, numerator / math.sqrt(variance_proxy)


def vs_dr_kte(traj: Trajectory, split: FoldSplit | None = None, *,
              covariate_kernel: KernelSpec | None = None,
              outcome_kernel: KernelSpec | None = None,
              ridge: float = 1e-2,
              weight_config: WeightConfig | None = None,
              nuisance: str = "crossfit",
              alpha: float = 0.05,
              alternative: str = "greater",
              drop_warmup: bool = False) -> TestOutcome:
    """Variance-stabilized sample-split kernel treatment effect test.

    Parameters
    ----------
    traj : Trajectory
        Logged rounds with policy snapshots.
    split : FoldSplit, optional
        Defaults to the alternating split.
    nuisance : {"crossfit", "hat"}
        Opposite-fold ridge coefficients (default; keeps the fold scores
        conditionally mean-zero given the nuisance, which the calibration of
        the cross statistic relies on) or within-fold hat matrices.
    drop_warmup : bool
        Exclude warmup rounds (weight 1) from the stabilized sums instead of
        including them.

    Returns
    -------
    TestOutcome with the studentized statistic, its p-value under the
    standard normal reference, and diagnostics (numerator, variance proxy,
    fold sizes, warmup counts, and the unstabilized squared-effect estimate).
    """
    t_len = len(traj)
    if t_len < 4:
        raise ValueError("need at least 4 rounds")
    split = split or FoldSplit.alternating(t_len)
    prep = prepare_folds(
        traj, split, covariate_kernel=covariate_kernel,
        outcome_kernel=outcome_kernel, ridge=ridge, nuisance=nuisance,
        weight_config=weight_config,
    )
    f0, f1 = prep.folds
    g0 = cross_matrix(f0.d_logged, prep.k_cross, f1.d_logged)
    keep0 = ~f0.weights.warmup if drop_warmup else None
    keep1 = ~f1.weights.warmup if drop_warmup else None
    numerator, variance_proxy, t_stat = stabilized_cross_statistic(
        g0, f0.weights.omega, f1.weights.omega, keep0, keep1)
    p = _p_value(t_stat, alternative)
    return TestOutcome(
        statistic=t_stat, p_value=p, reject=bool(p < alpha), alpha=alpha,
        diagnostics={
            "numerator": numerator,
            "variance_proxy": variance_proxy,
            "n0": len(split.i0),
            "n1": len(split.i1),
            "warmup_counts": (int(f0.weights.warmup.sum()),
                              int(f1.weights.warmup.sum())),
            "kte_sq_estimate": float(g0.mean()),
            "gamma_x": prep.gamma_x,
            "gamma_y": prep.gamma_y,
            "method": "vs-dr-kte",
        },
    )


def dr_kte_unstabilized(traj: Trajectory, split: FoldSplit | None = None, *,
                        covariate_kernel: KernelSpec | None = None,
                        outcome_kernel: KernelSpec | None = None,
                        ridge: float = 1e-2,
                        nuisance: str = "crossfit",
                        alpha: float = 0.05,
                        alternative: str = "greater") -> TestOutcome:
    """Unstabilized sample-split test: sqrt(N0) * mean(U) / sd(U) with
    U_i the fold-1 mean of the cross inner products of round i's score."""
    t_len = len(traj)
    if t_len < 4:
        raise ValueError("need at least 4 rounds")
    split = split or FoldSplit.alternating(t_len)
    prep = prepare_folds(
        traj, split, covariate_kernel=covariate_kernel,
        outcome_kernel=outcome_kernel, ridge=ridge, nuisance=nuisance,
        compute_weights=False,
    )
    f0, f1 = prep.folds
    g0 = cross_matrix(f0.d_logged, prep.k_cross, f1.d_logged)
    u = g0.mean(axis=1)
    u_bar = float(u.mean())
    sd = float(np.sqrt(np.mean((u - u_bar) ** 2)))
    if sd == 0.0:
        raise DegenerateStatisticError("row means are constant")
    t_stat = math.sqrt(u.shape[0]) * u_bar / sd
    p = _p_value(t_stat, alternative)
    return TestOutcome(
        statistic=t_stat, p_value=p, reject=bool(p < alpha), alpha=alpha,
        diagnostics={
            "numerator": u_bar,
            "variance_proxy": sd**2,
            "n0": len(split.i0),
            "n1": len(split.i1),
            "warmup_counts": (0, 0),
            "kte_sq_estimate": float(g0.mean()),
            "gamma_x": prep.gamma_x,
            "gamma_y": prep.gamma_y,
            "method": "dr-kte",
        },
    )


def kte_estimate(traj: Trajectory, split: FoldSplit | None = None, *,
                 covariate_kernel: KernelSpec | None = None,
                 outcome_kernel: KernelSpec | None = None,
                 ridge: float = 1e-2,
                 nuisance: str = "crossfit") -> KteEstimate:
    """Cross-fold estimate of the squared kernel treatment effect.

    The mean of the unstabilized cross matrix estimates the squared RKHS
    norm of the counterfactual embedding difference; it can be negative in
    finite samples, so a clamped companion is returned alongside.
    """
    t_len = len(traj)
    if t_len < 4:
        raise ValueError("need at least 4 rounds")
    split = split or FoldSplit.alternating(t_len)
    prep = prepare_folds(
        traj, split, covariate_kernel=covariate_kernel,
        outcome_kernel=outcome_kernel, ridge=ridge, nuisance=nuisance,
        compute_weights=False,
    )
    f0, f1 = prep.folds
    g0 = cross_matrix(f0.d_logged, prep.k_cross, f1.d_logged)
    raw = float(g0.mean())
    return KteEstimate(raw=raw, clamped=max(raw, 0.0))
