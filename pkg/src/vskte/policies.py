"""Adaptive logging policies producing trajectories with full propensity
provenance: epsilon-greedy with per-arm online ridge, explore-then-commit,
and a uniform logger.

All policies are expressed through the same snapshot format (per-arm linear
scores plus an exploration rate), so one evaluation rule serves logging,
replay, and fold-level propensity matrices.  Explore-then-commit encodes its
regimes with intercept-only scores: zero scores tie (propensity 0.5) and the
committed arm carries a unit intercept, which reproduces the commit
propensities epsilon / 1 - epsilon with epsilon_t = 2 * commit epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .splits import FoldSplit
from .trajectory import (
    LoggedRound,
    PolicySnapshot,
    Trajectory,
    augment,
    propensity_matrix,
    snapshot_propensity,
)

__all__ = [
    "EpsGreedyConfig",
    "EtcConfig",
    "OnlineRidge",
    "run_eps_greedy",
    "run_etc",
    "run_uniform",
    "fold_propensity_snapshots",
]

_SV_CUTOFF = 1e-10  # singular values below cutoff * largest are dropped


@dataclass(frozen=True)
class EpsGreedyConfig:
    eps0: float = 0.2
    eps_min: float = 0.05
    decay: float = 0.99
    ridge: float = 1e-2

    def __post_init__(self):
        if not 0 < self.eps0 <= 1 or not 0 < self.eps_min <= 1:
            raise ValueError("exploration rates must lie in (0, 1]")
        if not 0 < self.decay <= 1:
            raise ValueError("decay exponent must lie in (0, 1]")
        if not self.ridge > 0:
            raise ValueError("ridge must be positive")

    def epsilon(self, t: int) -> float:
        return max(self.eps_min, self.eps0 / (t + 1) ** self.decay)


@dataclass(frozen=True)
class EtcConfig:
    t0: int = 15
    epsilon: float = 1e-3

    def __post_init__(self):
        if self.t0 < 1:
            raise ValueError("t0 must be at least 1")
        if not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")


class OnlineRidge:
    """Per-arm online ridge on augmented features (1, x).

    The intercept is unpenalized (zero in the initial diagonal), so the
    initial system is singular and solved in the least-squares sense with an
    SVD cutoff; before any update this yields theta = 0 exactly.
    """

    def __init__(self, dim: int, ridge: float):
        diag = np.full(dim + 1, ridge)
        diag[0] = 0.0
        self.s = np.diag(diag)
        self.b = np.zeros(dim + 1)

    def theta(self) -> np.ndarray:
        return np.linalg.lstsq(self.s, self.b, rcond=_SV_CUTOFF)[0]

    def update(self, z: np.ndarray, y: float) -> None:
        self.s += np.outer(z, z)
        self.b += z * y


def _scalar_reward(y: np.ndarray) -> float:
    # vector outcomes (e.g. images) feed the bandit through their mean
    return float(np.mean(y))


def _simulate(env, contexts, snapshots_for, on_round, rng, meta) -> Trajectory:
    rounds, snapshots = [], []
    for t in range(contexts.shape[0]):
        x = contexts[t]
        snap = snapshots_for(t, x)
        p1 = snapshot_propensity(snap, x)
        a = 1 if rng.random() < p1 else 0
        y0, y1 = env.draw_potential_outcomes(x, rng)
        y = y1 if a == 1 else y0
        logged = p1 if a == 1 else 1.0 - p1
        rounds.append(LoggedRound(t=t, x=x, a=a, y=y, propensity=logged))
        snapshots.append(snap)
        on_round(t, x, a, y)
    return Trajectory(rounds=rounds, snapshots=snapshots, meta=meta)


def run_eps_greedy(env, t_max: int, config: EpsGreedyConfig | None = None,
                   seed=None) -> Trajectory:
    """Simulate an epsilon-greedy contextual bandit for ``t_max`` rounds.

    Each arm keeps an online ridge model; the round's propensity follows the
    greedy rule on the arms' predicted rewards with exploration rate
    max(eps_min, eps0 / (t+1)^decay), and only the chosen arm's model is
    updated afterwards.
    """
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    config = config or EpsGreedyConfig()
    rng = np.random.default_rng(seed)
    arms = [OnlineRidge(env.context_dim, config.ridge) for _ in range(2)]

    def snapshots_for(t, x):
        return PolicySnapshot(
            t=t,
            theta0=arms[0].theta(),
            theta1=arms[1].theta(),
            epsilon=config.epsilon(t),
        )

    def on_round(t, x, a, y):
        arms[a].update(augment(x), _scalar_reward(y))

    contexts = env.draw_contexts(rng, t_max)
    meta = {
        "policy": "eps_greedy",
        "params": {"eps0": config.eps0, "eps_min": config.eps_min,
                   "decay": config.decay, "ridge": config.ridge},
        "seed": _seed_repr(seed),
        "env": _describe(env),
    }
    return _simulate(env, contexts, snapshots_for, on_round, rng, meta)


def run_etc(env, t_max: int, config: EtcConfig | None = None, seed=None) -> Trajectory:
    """Explore-then-commit: uniform for t <= t0, then near-deterministic
    commitment to the arm with the higher mean observed (scalarized) outcome.

    An arm never observed during exploration loses the comparison; an exact
    tie commits to arm 0.
    """
    config = config or EtcConfig()
    if config.t0 >= t_max:
        raise ValueError(f"t0={config.t0} must be smaller than t_max={t_max}")
    rng = np.random.default_rng(seed)
    dim = env.context_dim
    zeros = np.zeros(dim + 1)
    unit = np.zeros(dim + 1)
    unit[0] = 1.0
    state = {"committed": None, "sums": [0.0, 0.0], "counts": [0, 0]}

    def snapshots_for(t, x):
        # rounds are 0-based internally; exploration covers the first t0 rounds
        if t < config.t0:
            return PolicySnapshot(t=t, theta0=zeros, theta1=zeros, epsilon=1.0)
        if state["committed"] is None:
            means = [
                state["sums"][a] / state["counts"][a] if state["counts"][a] else -np.inf
                for a in range(2)
            ]
            state["committed"] = 1 if means[1] > means[0] else 0
        arm = state["committed"]
        return PolicySnapshot(
            t=t,
            theta0=unit if arm == 0 else zeros,
            theta1=unit if arm == 1 else zeros,
            epsilon=2.0 * config.epsilon,
        )

    def on_round(t, x, a, y):
        if t < config.t0:
            state["sums"][a] += _scalar_reward(y)
            state["counts"][a] += 1

    contexts = env.draw_contexts(rng, t_max)
    meta = {
        "policy": "etc",
        "params": {"t0": config.t0, "epsilon": config.epsilon},
        "seed": _seed_repr(seed),
        "env": _describe(env),
    }
    return _simulate(env, contexts, snapshots_for, on_round, rng, meta)


def run_uniform(env, t_max: int, seed=None) -> Trajectory:
    """I.i.d. uniform logging (pi = 0.5 every round)."""
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    rng = np.random.default_rng(seed)
    zeros = np.zeros(env.context_dim + 1)

    def snapshots_for(t, x):
        return PolicySnapshot(t=t, theta0=zeros, theta1=zeros, epsilon=1.0)

    contexts = env.draw_contexts(rng, t_max)
    meta = {"policy": "uniform", "params": {}, "seed": _seed_repr(seed),
            "env": _describe(env)}
    return _simulate(env, contexts, snapshots_for, lambda *a: None, rng, meta)


def fold_propensity_snapshots(traj: Trajectory, split: FoldSplit):
    """Per-fold propensity matrices P_r[i, j] = pi_{t_i}(1 | X_{t_j}).

    Row i uses the policy snapshot of the i-th in-fold round; columns run
    over the same fold's contexts.  Entry (i, i) therefore reproduces the
    logged arm-1 propensity of that round exactly.
    """
    contexts = traj.contexts()
    out = []
    for fold in (split.i0, split.i1):
        idx = np.asarray(fold, dtype=np.int64)
        snaps = [traj.snapshots[i] for i in idx]
        out.append(propensity_matrix(snaps, contexts[idx]))
    return tuple(out)


def _describe(env) -> dict:
    return env.describe() if hasattr(env, "describe") else {"kind": type(env).__name__}


def _seed_repr(seed):
    if seed is None or isinstance(seed, (int, np.integer)):
        return None if seed is None else int(seed)
    return str(seed)
