"""Logged trajectories: per-round records, policy snapshots, serialization.

A snapshot stores the per-arm linear scores (ridge weights on the augmented
feature (1, x)) plus the exploration rate in force when the round's action
was drawn.  Propensities are always re-derivable from the snapshot, bit for
bit, which is what makes logged data replayable and lets fold-level
machinery evaluate any past policy on any context.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PolicySnapshot",
    "LoggedRound",
    "Trajectory",
    "augment",
    "snapshot_propensity",
    "propensity_matrix",
    "save_jsonl",
    "load_jsonl",
]


@dataclass(frozen=True)
class PolicySnapshot:
    """Policy state immediately before a round's action was sampled."""

    t: int
    theta0: np.ndarray
    theta1: np.ndarray
    epsilon: float


@dataclass(frozen=True)
class LoggedRound:
    """One logged interaction: context, action, outcome, realized propensity."""

    t: int
    x: np.ndarray
    a: int
    y: np.ndarray
    propensity: float  # pi_t(a | x) of the action actually taken


@dataclass
class Trajectory:
    rounds: list[LoggedRound]
    snapshots: list[PolicySnapshot]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.rounds) != len(self.snapshots):
            raise ValueError("one snapshot per round is required")
        ts = [r.t for r in self.rounds]
        if ts != sorted(ts) or len(set(ts)) != len(ts):
            raise ValueError("rounds must be strictly ascending in t")

    def __len__(self) -> int:
        return len(self.rounds)

    def contexts(self) -> np.ndarray:
        return np.array([r.x for r in self.rounds], dtype=np.float64)

    def outcomes(self) -> np.ndarray:
        return np.array([r.y for r in self.rounds], dtype=np.float64)

    def actions(self) -> np.ndarray:
        return np.array([r.a for r in self.rounds], dtype=np.int64)

    def propensities(self) -> np.ndarray:
        return np.array([r.propensity for r in self.rounds], dtype=np.float64)

    def arm1_propensities(self) -> np.ndarray:
        """pi_t(1 | X_t) per round, recomputed exactly from the snapshots."""
        return np.array(
            [snapshot_propensity(s, r.x) for s, r in zip(self.snapshots, self.rounds)],
            dtype=np.float64,
        )


def augment(x) -> np.ndarray:
    """Prepend the intercept feature: x -> (1, x)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    return np.concatenate(([1.0], x))


def _ordered_dot(theta: np.ndarray, z: np.ndarray) -> float:
    # Plain left-to-right accumulation; propensity_matrix reproduces the same
    # rounding per entry, so scalar and matrix evaluations agree bitwise.
    acc = 0.0
    for k in range(theta.shape[0]):
        acc += theta[k] * z[k]
    return acc


def _greedy_propensity(q0: float, q1: float, epsilon: float) -> float:
    if q1 > q0:
        return 1.0 - 0.5 * epsilon
    if q1 < q0:
        return 0.5 * epsilon
    return 0.5


def snapshot_propensity(snapshot: PolicySnapshot, x) -> float:
    """pi_t(1 | x) under the epsilon-greedy rule frozen in ``snapshot``."""
    z = augment(x)
    q0 = _ordered_dot(np.asarray(snapshot.theta0, dtype=np.float64), z)
    q1 = _ordered_dot(np.asarray(snapshot.theta1, dtype=np.float64), z)
    return _greedy_propensity(q0, q1, snapshot.epsilon)


def propensity_matrix(snapshots, contexts) -> np.ndarray:
    """Dense matrix P[i, j] = pi_{snapshots[i]}(1 | contexts[j]).

    Scores accumulate feature by feature in the same order as the scalar
    path, so P's entries match :func:`snapshot_propensity` bitwise.
    """
    contexts = np.asarray(contexts, dtype=np.float64)
    if contexts.ndim == 1:
        contexts = contexts[:, None]
    z = np.concatenate([np.ones((contexts.shape[0], 1)), contexts], axis=1)
    th0 = np.array([s.theta0 for s in snapshots], dtype=np.float64)
    th1 = np.array([s.theta1 for s in snapshots], dtype=np.float64)
    if th0.shape[1] != z.shape[1]:
        raise ValueError(
            f"snapshot dimension {th0.shape[1]} does not match contexts ({z.shape[1]})"
        )
    q0 = np.zeros((th0.shape[0], z.shape[0]))
    q1 = np.zeros_like(q0)
    for k in range(z.shape[1]):
        q0 += np.outer(th0[:, k], z[:, k])
        q1 += np.outer(th1[:, k], z[:, k])
    eps = np.array([s.epsilon for s in snapshots], dtype=np.float64)[:, None]
    return np.where(q1 > q0, 1.0 - 0.5 * eps, np.where(q1 < q0, 0.5 * eps, 0.5))


def save_jsonl(traj: Trajectory, path) -> None:
    """Write one JSON record per round (replayable, diffable format)."""
    with open(path, "w") as fh:
        for r, s in zip(traj.rounds, traj.snapshots):
            rec = {
                "t": int(r.t),
                "x": [float(v) for v in np.ravel(r.x)],
                "a": int(r.a),
                "y": [float(v) for v in np.ravel(r.y)],
                "prop": float(r.propensity),
                "theta0": [float(v) for v in np.ravel(s.theta0)],
                "theta1": [float(v) for v in np.ravel(s.theta1)],
                "eps": float(s.epsilon),
            }
            fh.write(json.dumps(rec) + "\n")


def load_jsonl(path) -> Trajectory:
    rounds, snapshots = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            rounds.append(
                LoggedRound(
                    t=int(rec["t"]),
                    x=np.asarray(rec["x"], dtype=np.float64),
                    a=int(rec["a"]),
                    y=np.asarray(rec["y"], dtype=np.float64),
                    propensity=float(rec["prop"]),
                )
            )
            snapshots.append(
                PolicySnapshot(
                    t=int(rec["t"]),
                    theta0=np.asarray(rec["theta0"], dtype=np.float64),
                    theta1=np.asarray(rec["theta1"], dtype=np.float64),
                    epsilon=float(rec["eps"]),
                )
            )
    return Trajectory(rounds=rounds, snapshots=snapshots, meta={"source": str(path)})
