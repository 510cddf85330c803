"""Scalar adaptive ATE baselines: stabilized doubly robust (sequential,
history-only nuisances) and adaptively-weighted AIPW.

Both consume scalarized outcomes (vector outcomes enter through their mean,
e.g. the mean pixel of an image) and test the two-sided null of zero average
treatment effect, so they are blind to equal-mean distributional shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._normal import two_sided_p
from .policies import OnlineRidge
from .scores import PROPENSITY_CLIP
from .stabilization import WeightConfig
from .trajectory import Trajectory, augment, propensity_matrix

__all__ = ["ScalarTestOutcome", "cadr_ate_test", "aw_aipw_test",
           "constant_allocation_lambda"]


def constant_allocation_lambda(t: int, t_len: int) -> float:
    """Constant allocation fraction lambda_t = 1 / (T - t + 1), 1-based t."""
    if not 1 <= t <= t_len:
        raise ValueError("t must lie in 1..T")
    return 1.0 / (t_len - t + 1)


@dataclass(frozen=True)
class ScalarTestOutcome:
    estimate: float
    statistic: float
    p_value: float
    reject: bool
    alpha: float
    method: str


def _scalarize(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    return y.ravel() if y.ndim == 1 or y.shape[1] == 1 else y.mean(axis=1)


def _ordered_score_matrix(thetas: np.ndarray, z: np.ndarray) -> np.ndarray:
    # accumulate feature by feature so entries match the scalar dot path
    out = np.zeros((thetas.shape[0], z.shape[0]))
    for k in range(z.shape[1]):
        out += np.outer(thetas[:, k], z[:, k])
    return out


def cadr_ate_test(traj: Trajectory, ridge: float = 1e-2, alpha: float = 0.05,
                  weight_config: WeightConfig | None = None) -> ScalarTestOutcome:
    """Stabilized doubly robust ATE test on one chronological pass.

    Each round's score combines inverse-propensity-weighted residuals with
    per-arm online ridge outcome models fit on strictly past data.  The
    score is scaled by a predictable inverse-standard-deviation weight built
    from importance-reweighted past scores (the scalar specialization of the
    kernel stabilization), and the studentized sum over post-warmup rounds
    is referenced to the standard normal.

    Scalar variance estimates from very few points are heavy-tailed near
    zero, so the default warmup is longer than the kernel path's (10 rounds
    at weight 1, excluded from the studentized sum).
    """
    cfg = weight_config or WeightConfig(warmup_min=10)
    t_len = len(traj)
    x = traj.contexts()
    y = _scalarize(traj.outcomes())
    a = traj.actions()
    logged = traj.propensities()
    z = np.concatenate([np.ones((t_len, 1)), x], axis=1)

    # outcome models before each round (theta columns indexed by round)
    models = [OnlineRidge(x.shape[1], ridge) for _ in range(2)]
    thetas = np.zeros((2, t_len, x.shape[1] + 1))
    for t in range(t_len):
        thetas[0, t] = models[0].theta()
        thetas[1, t] = models[1].theta()
        models[a[t]].update(augment(x[t]), float(y[t]))

    # q_hat[arm][s, t] = prediction for context s under the round-t model
    q_hat = [_ordered_score_matrix(thetas[arm], z).T for arm in range(2)]
    # p1[s, t] = pi_t(1 | X_s) from the stored snapshots
    p1 = propensity_matrix(traj.snapshots, x).T
    p1c = np.clip(p1, cfg.clip, 1.0 - cfg.clip)
    treated = (a == 1)[:, None]
    w_mat = np.where(treated, 1.0 / p1c, -1.0 / (1.0 - p1c))
    fitted = np.where(treated, q_hat[1], q_hat[0])
    phi_mat = w_mat * (y[:, None] - fitted) + q_hat[1] - q_hat[0]

    # realized scores use the logged propensity of the chosen action
    logged_c = np.clip(logged, cfg.clip, 1.0 - cfg.clip)
    w_log = np.where(a == 1, 1.0 / logged_c, -1.0 / logged_c)
    diag_fit = np.where(a == 1, np.diagonal(q_hat[1]), np.diagonal(q_hat[0]))
    phi = w_log * (y - diag_fit) + np.diagonal(q_hat[1]) - np.diagonal(q_hat[0])

    # importance ratios to the round-t policy, past rounds only; the scalar
    # moments are self-normalized (weights sum to one) so the implied
    # variance is never negative
    num = np.where(treated, p1, 1.0 - p1)
    rho = num / logged_c[:, None]
    cum_r = np.cumsum(rho, axis=0)
    cum_rp = np.cumsum(rho * phi_mat, axis=0)
    cum_rp2 = np.cumsum(rho * phi_mat**2, axis=0)

    warm = min(cfg.warmup_min, t_len - 1)
    omega = np.ones(t_len)
    for t in range(warm, t_len):
        mass = cum_r[t - 1, t]
        m1 = cum_rp[t - 1, t] / mass
        m2 = cum_rp2[t - 1, t] / mass
        var = max(m2 - m1 * m1, cfg.var_floor)
        omega[t] = min(var**-0.5, cfg.omega_max)

    stabilized = omega[warm:] * phi[warm:]
    n_eff = stabilized.shape[0]
    # the stabilized scores have unit conditional variance in the limit; the
    # empirical sd replaces that proxy to absorb early weight misestimation
    sd = float(np.sqrt(np.mean((stabilized - stabilized.mean()) ** 2)))
    if sd == 0.0:
        statistic = 0.0
    else:
        statistic = float(math.sqrt(n_eff) * stabilized.mean() / sd)
    estimate = float(stabilized.sum() / omega[warm:].sum())
    p = two_sided_p(statistic)
    return ScalarTestOutcome(estimate=estimate, statistic=statistic, p_value=p,
                             reject=bool(p < alpha), alpha=alpha, method="cadr")


def _constant_allocation_weights(e: np.ndarray) -> np.ndarray:
    # lambda_t = 1/(T-t+1) stick-breaking collapses to h_t = sqrt(e_t / T)
    return np.sqrt(e / e.shape[0])


def aw_aipw_test(traj: Trajectory, allocation: str = "constant",
                 alpha: float = 0.05, clip: float = PROPENSITY_CLIP,
                 propensity_forecast=None) -> ScalarTestOutcome:
    """Adaptively-weighted AIPW contrast of the two arm means.

    Per-arm AIPW scores (with past-only arm-mean outcome models) are
    averaged under variance-stabilizing weights h_t = sqrt(e_t / T) from the
    constant allocation lambda_t = 1/(T-t+1).  The "two_point" allocation is
    under-determined without a forecast of future propensities; absent a
    ``propensity_forecast`` callback it falls back to the constant scheme.
    """
    if allocation not in ("constant", "two_point"):
        raise ValueError(f"unknown allocation: {allocation!r}")
    t_len = len(traj)
    y = _scalarize(traj.outcomes())
    a = traj.actions()
    arm1 = np.clip(traj.arm1_propensities(), clip, 1.0 - clip)
    e = np.stack([1.0 - arm1, arm1])  # e[arm, t]

    # past-only running means per arm (0 before the first observation)
    m_hat = np.zeros((2, t_len))
    sums = [0.0, 0.0]
    counts = [0, 0]
    for t in range(t_len):
        for arm in range(2):
            m_hat[arm, t] = sums[arm] / counts[arm] if counts[arm] else 0.0
        sums[a[t]] += float(y[t])
        counts[a[t]] += 1

    ind = np.stack([a == 0, a == 1]).astype(np.float64)
    gamma = ind / e * (y[None, :] - m_hat) + m_hat

    if allocation == "two_point" and propensity_forecast is not None:
        e_eff = np.stack([
            np.asarray(propensity_forecast(0, e[0]), dtype=np.float64),
            np.asarray(propensity_forecast(1, e[1]), dtype=np.float64),
        ])
    else:
        e_eff = e
    h = np.stack([_constant_allocation_weights(e_eff[0]),
                  _constant_allocation_weights(e_eff[1])])

    h_sum = h.sum(axis=1)
    q = (h * gamma).sum(axis=1) / h_sum
    resid = gamma - q[:, None]
    v = (h**2 * resid**2).sum(axis=1) / h_sum**2
    cov = (h[0] * h[1] * resid[0] * resid[1]).sum() / (h_sum[0] * h_sum[1])
    var = float(v[0] + v[1] - 2.0 * cov)
    estimate = float(q[1] - q[0])
    if var <= 0.0:
        statistic = 0.0 if estimate == 0.0 else math.inf * np.sign(estimate)
    else:
        statistic = estimate / math.sqrt(var)
    p = two_sided_p(statistic)
    method = "aw_aipw_constant" if allocation == "constant" else "aw_aipw_two_point"
    return ScalarTestOutcome(estimate=estimate, statistic=float(statistic),
                             p_value=p, reject=bool(p < alpha), alpha=alpha,
                             method=method)
