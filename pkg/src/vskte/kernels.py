"""Gaussian kernel evaluation, Gram blocks, and length-scale selection.

Everything is expressed in the length-scale parametrization

    k(a, b) = exp(-||a - b||^2 / (2 * gamma^2)),

so k(h, h) = 1 and all Gram entries lie in (0, 1].  Code that prefers the
precision parametrization exp(-c * ||a - b||^2) can convert it with
:func:`precision_to_lengthscale`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelSpec",
    "GramBlock",
    "kernel_eval",
    "gram",
    "gram_matrix",
    "resolve_lengthscale",
    "resolve",
    "precision_to_lengthscale",
    "pairwise_sq_dists",
]

_RULES = ("fixed", "median", "half_median")


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian (RBF) kernel configuration.

    The length-scale ``gamma`` is either fixed in advance or resolved from
    data: ``"median"`` sets it to the median of the pairwise Euclidean
    distances, ``"half_median"`` to one half of that median (the usual
    outcome-kernel convention).
    """

    family: str = "gaussian"
    rule: str = "median"
    lengthscale: float | None = None

    def __post_init__(self):
        if self.family != "gaussian":
            raise ValueError(f"unsupported kernel family: {self.family!r}")
        if self.rule not in _RULES:
            raise ValueError(f"unknown lengthscale rule: {self.rule!r}")
        if self.rule == "fixed":
            if self.lengthscale is None or not self.lengthscale > 0:
                raise ValueError("fixed rule requires a lengthscale > 0")
        elif self.lengthscale is not None:
            raise ValueError("lengthscale may only be set with the 'fixed' rule")

    @classmethod
    def fixed(cls, lengthscale: float) -> "KernelSpec":
        return cls(rule="fixed", lengthscale=float(lengthscale))

    @classmethod
    def median(cls) -> "KernelSpec":
        return cls(rule="median")

    @classmethod
    def half_median(cls) -> "KernelSpec":
        return cls(rule="half_median")

    @property
    def resolved(self) -> bool:
        return self.rule == "fixed"


@dataclass(frozen=True)
class GramBlock:
    """Dense kernel block between two point sets.

    ``values[i, j] = k(rows[i], cols[j])``.  When the row and column index
    sets coincide the block is symmetric positive semi-definite.
    """

    row_ids: tuple
    col_ids: tuple
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.row_ids), len(self.col_ids)):
            raise ValueError(
                f"values shape {self.values.shape} does not match index sets "
                f"({len(self.row_ids)}, {len(self.col_ids)})"
            )


def _as_points(data) -> np.ndarray:
    pts = np.asarray(data, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError(f"expected a 2-d point set, got shape {pts.shape}")
    return pts


def pairwise_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between the rows of ``a`` and ``b``."""
    a = _as_points(a)
    b = _as_points(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.maximum(sq, 0.0)


def kernel_eval(spec: KernelSpec, a, b) -> float:
    """Evaluate k(a, b) for a spec with a resolved length-scale."""
    if not spec.resolved:
        raise ValueError("kernel_eval needs a resolved (fixed) lengthscale")
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    sq = float(((a - b) ** 2).sum())
    return float(np.exp(-sq / (2.0 * spec.lengthscale**2)))


def gram_matrix(lengthscale: float, rows, cols) -> np.ndarray:
    """Plain ndarray Gram block; see :func:`gram` for the wrapped form."""
    if not lengthscale > 0:
        raise ValueError("lengthscale must be positive")
    sq = pairwise_sq_dists(rows, cols)
    return np.exp(-sq / (2.0 * lengthscale**2))


def gram(spec: KernelSpec, rows, cols, row_ids=None, col_ids=None) -> GramBlock:
    """Gram block between two point sets under a resolved kernel spec.

    Parameters
    ----------
    spec : KernelSpec
        Must carry a fixed length-scale.
    rows, cols : array-like, shape (n, d) / (m, d)
        Point sets; empty sets are rejected.
    row_ids, col_ids : sequence, optional
        Round identifiers attached to the block (defaults to positions).
    """
    if not spec.resolved:
        raise ValueError("gram needs a resolved (fixed) lengthscale")
    rows = _as_points(rows)
    cols = _as_points(cols)
    if rows.shape[0] == 0 or cols.shape[0] == 0:
        raise ValueError("empty point set")
    values = gram_matrix(spec.lengthscale, rows, cols)
    row_ids = tuple(range(rows.shape[0])) if row_ids is None else tuple(row_ids)
    col_ids = tuple(range(cols.shape[0])) if col_ids is None else tuple(col_ids)
    return GramBlock(row_ids=row_ids, col_ids=col_ids, values=values)


def resolve_lengthscale(spec: KernelSpec, data, role: str = "covariate") -> float:
    """Resolve the kernel length-scale from data.

    ``"median"`` returns the median of all pairwise Euclidean distances over
    i < j, ``"half_median"`` one half of it, ``"fixed"`` the configured value.
    If all points coincide (median distance 0) the fallback gamma = 1 is
    returned so degenerate simulations still run.

    ``role`` ("covariate" or "outcome") only labels error messages; by
    convention covariate kernels use the median rule and outcome kernels the
    half-median rule.
    """
    if role not in ("covariate", "outcome"):
        raise ValueError(f"unknown role: {role!r}")
    if spec.rule == "fixed":
        return float(spec.lengthscale)
    pts = _as_points(data)
    n = pts.shape[0]
    if n < 2:
        raise ValueError(
            f"median lengthscale rule for {role} data needs >= 2 points, got {n}"
        )
    sq = pairwise_sq_dists(pts, pts)
    dists = np.sqrt(sq[np.triu_indices(n, k=1)])
    med = float(np.median(dists))
    if med <= 0.0:
        return 1.0
    return med / 2.0 if spec.rule == "half_median" else med


def resolve(spec: KernelSpec, data, role: str = "covariate") -> KernelSpec:
    """Return a fixed-lengthscale copy of ``spec`` resolved on ``data``."""
    if spec.resolved:
        return spec
    return KernelSpec.fixed(resolve_lengthscale(spec, data, role))


def precision_to_lengthscale(precision: float) -> float:
    """Convert the precision convention exp(-c * ||.||^2) to a length-scale.

    Solving exp(-c r^2) = exp(-r^2 / (2 gamma^2)) gives gamma = 1/sqrt(2c).
    """
    if not precision > 0:
        raise ValueError("precision must be positive")
    return 1.0 / np.sqrt(2.0 * precision)
