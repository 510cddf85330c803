"""Synthetic environments: scalar outcome models, a blob-image environment,
and CSV covariate pools for semi-synthetic runs.

Environments are immutable descriptions; every sampling method takes the
caller's RNG stream so replications can run in parallel with independent
generators.  Both potential outcomes of a round share the same noise draw,
so Y = Y(a) holds pointwise for whichever arm is queried.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CsvParseError

__all__ = [
    "ScenarioSpec",
    "ImageEnvSpec",
    "SyntheticEnv",
    "ImageEnv",
    "CovariatePool",
    "PoolEnv",
    "make_synthetic_env",
    "make_image_env",
    "load_covariate_pool",
]

_MODELS = ("cosine", "linear", "sigmoid")
_SCENARIOS = ("I", "II", "III", "IV")

DEFAULT_BETA = (0.1, 0.2, 0.3, 0.4, 0.5)
DEFAULT_NOISE_SD = math.sqrt(0.5)  # noise variance 0.5


@dataclass(frozen=True)
class ScenarioSpec:
    """Scalar-outcome environment description.

    ``scenario`` selects the per-round treatment shift: I none, II constant
    +2, III symmetric +/-2, IV uniform on [-4, 4].
    """

    model: str = "cosine"
    scenario: str = "I"
    d: int = 5
    beta: tuple = DEFAULT_BETA
    noise_sd: float = DEFAULT_NOISE_SD

    def __post_init__(self):
        if self.model not in _MODELS:
            raise ValueError(f"unknown outcome model: {self.model!r}")
        if self.scenario not in _SCENARIOS:
            raise ValueError(f"unknown scenario: {self.scenario!r}")
        if len(self.beta) != self.d:
            raise ValueError(f"beta has length {len(self.beta)}, expected d={self.d}")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be positive")


@dataclass(frozen=True)
class ImageEnvSpec:
    """Blob-image environment: a Gaussian blob rendered on a square grid.

    Arm 1 places the blob shifted rightward by ``shift_delta`` (in unit
    coordinates); pixel noise is i.i.d. Gaussian and images are clamped to
    [0, 1].  Shapes leaving the grid are clipped at the border, never
    wrapped.
    """

    grid: int = 32
    shift_delta: float = 0.0
    pixel_noise_sd: float = 0.1
    shape: str = "blob"
    blob_radius: float = 0.1  # fraction of the grid side

    def __post_init__(self):
        if self.grid < 8:
            raise ValueError("grid must be at least 8")
        if self.shape != "blob":
            raise ValueError(f"unsupported shape: {self.shape!r}")
        if not 0 < self.blob_radius < 0.5:
            raise ValueError("blob_radius must lie in (0, 0.5)")


def _model_fn(model: str):
    if model == "cosine":
        return np.cos
    if model == "linear":
        return lambda z: z
    # log-amplitude ramp with a sign flip at z = 0.5
    return lambda z: np.log(np.abs(16.0 * z - 8.0) + 1.0) * np.sign(z - 0.5)


def _draw_shift(scenario: str, rng: np.random.Generator) -> float:
    if scenario == "I":
        return 0.0
    if scenario == "II":
        return 2.0
    if scenario == "III":
        return 2.0 if rng.random() < 0.5 else -2.0
    return float(rng.uniform(-4.0, 4.0))


class _ScalarOutcomeModel:
    """Shared potential-outcome sampler: Y(a) = f(beta'x) + shift*1{a=1} + eps."""

    def __init__(self, model, scenario, beta, noise_sd):
        self.model = model
        self.scenario = scenario
        self.beta = np.asarray(beta, dtype=np.float64)
        self.noise_sd = float(noise_sd)
        self._f = _model_fn(model)
        self.outcome_dim = 1

    def draw_potential_outcomes(self, x, rng):
        x = np.asarray(x, dtype=np.float64).ravel()
        base = float(self._f(float(self.beta @ x)))
        eps = float(rng.normal(0.0, self.noise_sd))
        shift = _draw_shift(self.scenario, rng)
        y0 = np.array([base + eps])
        y1 = np.array([base + shift + eps])
        return y0, y1


class SyntheticEnv(_ScalarOutcomeModel):
    """Gaussian contexts with a scalar outcome model."""

    def __init__(self, spec: ScenarioSpec, seed=None):
        super().__init__(spec.model, spec.scenario, spec.beta, spec.noise_sd)
        self.spec = spec
        self.context_dim = spec.d
        self._fallback = np.random.default_rng(seed)

    def draw_contexts(self, rng, n):
        rng = self._fallback if rng is None else rng
        return rng.standard_normal((n, self.context_dim))

    def describe(self) -> dict:
        return {
            "kind": "synthetic",
            "model": self.spec.model,
            "scenario": self.spec.scenario,
            "d": self.spec.d,
            "noise_sd": self.spec.noise_sd,
        }


class ImageEnv:
    """Uniform 2-d contexts mapped to noisy blob images (flattened)."""

    def __init__(self, spec: ImageEnvSpec, seed=None):
        self.spec = spec
        self.context_dim = 2
        self.outcome_dim = spec.grid * spec.grid
        self._radius_px = spec.blob_radius * spec.grid
        self._axis = np.arange(spec.grid, dtype=np.float64)
        self._fallback = np.random.default_rng(seed)

    def draw_contexts(self, rng, n):
        rng = self._fallback if rng is None else rng
        return rng.random((n, 2))

    def render(self, x, arm: int) -> np.ndarray:
        """Noise-free blob image for context ``x`` under ``arm``."""
        x = np.asarray(x, dtype=np.float64).ravel()
        g = self.spec.grid
        shift = self.spec.shift_delta if arm == 1 else 0.0
        px = (x[0] + shift) * (g - 1)
        py = x[1] * (g - 1)
        dc = (self._axis - px) ** 2
        dr = (self._axis - py) ** 2
        return np.exp(-(dr[:, None] + dc[None, :]) / (2.0 * self._radius_px**2))

    def draw_potential_outcomes(self, x, rng):
        rng = self._fallback if rng is None else rng
        g = self.spec.grid
        noise = rng.normal(0.0, self.spec.pixel_noise_sd, size=(g, g))
        y0 = np.clip(self.render(x, 0) + noise, 0.0, 1.0).ravel()
        y1 = np.clip(self.render(x, 1) + noise, 0.0, 1.0).ravel()
        return y0, y1

    def describe(self) -> dict:
        return {
            "kind": "image",
            "grid": self.spec.grid,
            "shift_delta": self.spec.shift_delta,
            "pixel_noise_sd": self.spec.pixel_noise_sd,
            "blob_radius": self.spec.blob_radius,
        }


@dataclass
class CovariatePool:
    """Numeric covariate rows loaded from CSV, reusable across replications."""

    columns: list
    rows: np.ndarray
    standardized: bool = False

    def __len__(self) -> int:
        return self.rows.shape[0]

    def environment(self, model="cosine", scenario="I", beta=None,
                    noise_sd=DEFAULT_NOISE_SD) -> "PoolEnv":
        d = self.rows.shape[1]
        beta = np.ones(d) if beta is None else np.asarray(beta, dtype=np.float64)
        if beta.shape != (d,):
            raise ValueError(f"beta has shape {beta.shape}, expected ({d},)")
        return PoolEnv(self, model, scenario, beta, noise_sd)


class PoolEnv(_ScalarOutcomeModel):
    """Covariate pool contexts (sampled without replacement) with the scalar
    outcome overlay."""

    def __init__(self, pool: CovariatePool, model, scenario, beta, noise_sd):
        super().__init__(model, scenario, beta, noise_sd)
        self.pool = pool
        self.context_dim = pool.rows.shape[1]

    def draw_contexts(self, rng, n):
        if n > len(self.pool):
            raise ValueError(
                f"requested {n} contexts from a pool of {len(self.pool)}"
            )
        idx = rng.choice(len(self.pool), size=n, replace=False)
        return self.pool.rows[idx]

    def describe(self) -> dict:
        return {
            "kind": "pool",
            "n_rows": len(self.pool),
            "model": self.model,
            "scenario": self.scenario,
        }


def make_synthetic_env(spec: ScenarioSpec, seed=None) -> SyntheticEnv:
    return SyntheticEnv(spec, seed=seed)


def make_image_env(spec: ImageEnvSpec, seed=None) -> ImageEnv:
    return ImageEnv(spec, seed=seed)


def load_covariate_pool(path, standardize: bool = False) -> CovariatePool:
    """Load a rectangular numeric CSV (header row required).

    Categorical columns must be numerically encoded upstream.  Ragged rows
    and non-numeric cells raise :class:`CsvParseError` with their location.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: empty file") from None
        width = len(header)
        data = []
        for i, row in enumerate(reader, start=2):  # header is line 1
            if not row:
                continue
            if len(row) != width:
                raise CsvParseError(
                    f"{path}: row {i} has {len(row)} fields, expected {width}"
                )
            vals = []
            for j, cell in enumerate(row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise CsvParseError(
                        f"{path}: row {i}, column {j + 1} ({header[j]!r}): "
                        f"non-numeric value {cell!r}"
                    ) from None
            data.append(vals)
    if not data:
        raise CsvParseError(f"{path}: no data rows")
    rows = np.asarray(data, dtype=np.float64)
    if standardize:
        mean = rows.mean(axis=0)
        sd = rows.std(axis=0, ddof=0)
        if np.any(sd == 0):
            col = header[int(np.argmax(sd == 0))]
            raise ValueError(f"cannot standardize constant column {col!r}")
        rows = (rows - mean) / sd
    return CovariatePool(columns=list(header), rows=rows, standardized=standardize)
