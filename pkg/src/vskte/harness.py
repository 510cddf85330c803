"""Monte-Carlo experiment orchestration: replication loops, calibration and
power aggregation, and the named desk-scale presets.

Determinism contract: replication i draws its generator from
``numpy.random.SeedSequence((master_seed, i))``, so reports depend only on
(config, master_seed) and never on the number of worker processes.
Aggregation always runs in replication order.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._normal import normal_cdf, normal_quantile
from .baselines import aw_aipw_test, cadr_ate_test
from .envs import (
    ImageEnvSpec,
    ScenarioSpec,
    load_covariate_pool,
    make_image_env,
    make_synthetic_env,
)
from .kernels import KernelSpec
from .kte_test import FoldSplit, dr_kte_unstabilized, vs_dr_kte
from .policies import EpsGreedyConfig, EtcConfig, run_eps_greedy, run_etc, run_uniform

__all__ = [
    "ExperimentConfig",
    "ReplicationReport",
    "run_experiment",
    "ks_distance",
    "replication_seed",
    "simulate_trajectory",
    "run_method",
    "PRESETS",
    "run_preset",
    "METHODS",
]

METHODS = ("vs-dr-kte", "dr-kte", "cadr", "aw-aipw", "aw-aipw-two-point")


@dataclass
class ExperimentConfig:
    """One Monte-Carlo experiment: environment, logging policy, and methods.

    ``env`` and ``policy`` are plain dicts so configs round-trip through
    JSON; unspecified fields fall back to the standard defaults.
    """

    env: dict = field(default_factory=lambda: {"kind": "synthetic"})
    policy: dict = field(default_factory=lambda: {"kind": "eps_greedy"})
    t_len: int = 1000
    n_replications: int = 200
    split: str = "alternating"
    methods: tuple = ("vs-dr-kte",)
    alpha: float = 0.05
    ridge: float = 1e-2
    nuisance: str = "crossfit"
    alternative: str = "greater"
    master_seed: int = 0
    n_jobs: int = 1
    max_failure_fraction: float = 0.1

    def __post_init__(self):
        if self.n_replications < 1:
            raise ValueError("n_replications must be at least 1")
        self.methods = tuple(self.methods)
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; available: {METHODS}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def replication_seed(master_seed: int, rep: int) -> np.random.SeedSequence:
    """Stable per-replication seed: SeedSequence((master_seed, rep))."""
    return np.random.SeedSequence((master_seed, rep))


def build_env(env_cfg: dict):
    cfg = dict(env_cfg)
    kind = cfg.pop("kind", "synthetic")
    if kind == "synthetic":
        cfg.setdefault("beta", None)
        beta = cfg.pop("beta")
        spec = ScenarioSpec(**cfg) if beta is None else ScenarioSpec(beta=tuple(beta), **cfg)
        return make_synthetic_env(spec)
    if kind == "image":
        return make_image_env(ImageEnvSpec(**cfg))
    if kind == "pool":
        path = cfg.pop("path")
        standardize = cfg.pop("standardize", True)
        pool = load_covariate_pool(path, standardize=standardize)
        return pool.environment(**cfg)
    raise ValueError(f"unknown env kind: {kind!r}")


def simulate_trajectory(config: ExperimentConfig, seed):
    env = build_env(config.env)
    pol = dict(config.policy)
    kind = pol.pop("kind", "eps_greedy")
    if kind == "eps_greedy":
        return run_eps_greedy(env, config.t_len, EpsGreedyConfig(**pol), seed=seed)
    if kind == "etc":
        return run_etc(env, config.t_len, EtcConfig(**pol), seed=seed)
    if kind == "uniform":
        return run_uniform(env, config.t_len, seed=seed)
    raise ValueError(f"unknown policy kind: {kind!r}")


def run_method(name: str, traj, config: ExperimentConfig) -> dict:
    split = FoldSplit.make(config.split, len(traj))
    if name == "vs-dr-kte":
        out = vs_dr_kte(traj, split, ridge=config.ridge, nuisance=config.nuisance,
                        alpha=config.alpha, alternative=config.alternative)
        return {"statistic": out.statistic, "p_value": out.p_value,
                "reject": out.reject}
    if name == "dr-kte":
        out = dr_kte_unstabilized(traj, split, ridge=config.ridge,
                                  nuisance=config.nuisance, alpha=config.alpha,
                                  alternative=config.alternative)
        return {"statistic": out.statistic, "p_value": out.p_value,
                "reject": out.reject}
    if name == "cadr":
        out = cadr_ate_test(traj, ridge=config.ridge, alpha=config.alpha)
    elif name == "aw-aipw":
        out = aw_aipw_test(traj, allocation="constant", alpha=config.alpha)
    elif name == "aw-aipw-two-point":
        out = aw_aipw_test(traj, allocation="two_point", alpha=config.alpha)
    else:
        raise ValueError(f"unknown method {name!r}; available: {METHODS}")
    return {"statistic": out.statistic, "p_value": out.p_value,
            "reject": out.reject, "estimate": out.estimate}


def _replication_worker(config: ExperimentConfig, rep: int) -> dict:
    seed = replication_seed(config.master_seed, rep)
    traj = simulate_trajectory(config, seed)
    return {"rep": rep,
            "methods": {m: run_method(m, traj, config) for m in config.methods}}


@dataclass
class ReplicationReport:
    config: dict
    results: list          # per successful replication, in replication order
    failures: list         # {"rep": i, "error": "..."}
    aggregates: dict       # per method: rate, stderr, ks, moments, hist, qq

    def summary_rows(self) -> list:
        rows = []
        env = self.config.get("env", {})
        for method, agg in self.aggregates.items():
            rows.append({
                "method": method,
                "scenario": env.get("scenario", env.get("shift_delta", "")),
                "T": self.config.get("t_len"),
                "n_reps": agg["n"],
                "reject_rate": agg["reject_rate"],
                "stderr": agg["stderr"],
                "ks": agg["ks"],
                "mean_stat": agg["mean_stat"],
                "var_stat": agg["var_stat"],
            })
        return rows

    def write(self, outdir) -> None:
        """Write statistics.csv, summary.json, hist.csv, and qq.csv."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        methods = list(self.aggregates)
        with open(outdir / "statistics.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rep"] + [f"{m}_{c}" for m in methods
                                       for c in ("statistic", "p_value", "reject")])
            for res in self.results:
                row = [res["rep"]]
                for m in methods:
                    r = res["methods"][m]
                    row += [r["statistic"], r["p_value"], int(r["reject"])]
                writer.writerow(row)
        summary = {
            "config": self.config,
            "n_failures": len(self.failures),
            "failures": self.failures,
            "aggregates": {
                m: {k: v for k, v in agg.items() if k not in ("hist", "qq")}
                for m, agg in self.aggregates.items()
            },
        }
        (outdir / "summary.json").write_text(json.dumps(summary, indent=2))
        with open(outdir / "hist.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "bin_left", "bin_right", "count"])
            for m in methods:
                edges, counts = self.aggregates[m]["hist"]
                for i, c in enumerate(counts):
                    writer.writerow([m, edges[i], edges[i + 1], c])
        with open(outdir / "qq.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "normal_quantile", "sample_quantile"])
            for m in methods:
                for nq, sq in self.aggregates[m]["qq"]:
                    writer.writerow([m, nq, sq])


def ks_distance(samples) -> float:
    """Sup distance between the empirical CDF and the standard normal CDF."""
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = x.shape[0]
    if n == 0:
        raise ValueError("ks_distance needs at least one sample")
    cdf = np.array([normal_cdf(v) for v in x])
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def _aggregate(method: str, results: list) -> dict:
    stats = np.array([r["methods"][method]["statistic"] for r in results])
    rejects = np.array([r["methods"][method]["reject"] for r in results], dtype=bool)
    n = stats.shape[0]
    rate = float(rejects.mean())
    stderr = math.sqrt(rate * (1.0 - rate) / n)
    hist_counts, hist_edges = np.histogram(stats, bins=min(30, max(5, n // 5)))
    qq = [(normal_quantile((i + 0.5) / n), float(v))
          for i, v in enumerate(np.sort(stats))]
    return {
        "n": n,
        "reject_rate": rate,
        "stderr": stderr,
        "mean_stat": float(stats.mean()),
        "var_stat": float(stats.var(ddof=0)),
        "ks": ks_distance(stats),
        "hist": (hist_edges.tolist(), hist_counts.tolist()),
        "qq": qq,
    }


def run_experiment(config: ExperimentConfig) -> ReplicationReport:
    """Run all replications (optionally in parallel) and aggregate.

    Failed replications are recorded with their error and excluded from the
    aggregates; more than ``max_failure_fraction`` failures aborts the run.
    """
    n = config.n_replications
    results, failures = [], []
    if config.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            futures = {rep: pool.submit(_replication_worker, config, rep)
                       for rep in range(n)}
            outcomes = []
            for rep in range(n):
                try:
                    outcomes.append(futures[rep].result())
                except Exception as exc:  # noqa: BLE001 - recorded per rep
                    outcomes.append({"rep": rep, "error": f"{type(exc).__name__}: {exc}"})
    else:
        outcomes = []
        for rep in range(n):
            try:
                outcomes.append(_replication_worker(config, rep))
            except Exception as exc:  # noqa: BLE001 - recorded per rep
                outcomes.append({"rep": rep, "error": f"{type(exc).__name__}: {exc}"})
    for out in outcomes:
        (failures if "error" in out else results).append(out)
    if len(failures) > config.max_failure_fraction * n:
        raise RuntimeError(
            f"{len(failures)}/{n} replications failed "
            f"(first: {failures[0]['error']})"
        )
    aggregates = {m: _aggregate(m, results) for m in config.methods} if results else {}
    return ReplicationReport(config=config.to_dict(), results=results,
                             failures=failures, aggregates=aggregates)


def _preset_fig1() -> list:
    return [ExperimentConfig(
        env={"kind": "synthetic", "model": "cosine", "scenario": "I"},
        policy={"kind": "etc", "t0": 15, "epsilon": 1e-3},
        t_len=700, n_replications=200, methods=("vs-dr-kte", "dr-kte"),
    )]


def _preset_fig2() -> list:
    return [ExperimentConfig(
        env={"kind": "synthetic", "model": "cosine", "scenario": "I"},
        policy={"kind": "eps_greedy"},
        t_len=1000, n_replications=200, methods=("vs-dr-kte",),
    )]


def _preset_fig3(model: str) -> list:
    return [ExperimentConfig(
        env={"kind": "synthetic", "model": model, "scenario": s},
        policy={"kind": "eps_greedy"},
        t_len=1000, n_replications=100,
        methods=("vs-dr-kte", "cadr", "aw-aipw"),
    ) for s in ("II", "III", "IV")]


def _preset_table2() -> list:
    return [ExperimentConfig(
        env={"kind": "image", "grid": 32, "shift_delta": delta},
        policy={"kind": "eps_greedy"},
        t_len=600, n_replications=100,
        methods=("vs-dr-kte", "cadr", "aw-aipw"),
    ) for delta in (0.0, 0.15)]


PRESETS = {
    "fig1": _preset_fig1,
    "fig2": _preset_fig2,
    "fig3-cosine": lambda: _preset_fig3("cosine"),
    "fig3-linear": lambda: _preset_fig3("linear"),
    "fig3-sigmoid": lambda: _preset_fig3("sigmoid"),
    "table2-blob": _preset_table2,
}


def run_preset(name: str, outdir, n_jobs: int = 1, n_replications: int | None = None,
               t_len: int | None = None, master_seed: int | None = None) -> list:
    """Run a named preset; writes one report directory per configuration
    plus a combined power.csv, and returns the reports."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    configs = PRESETS[name]()
    reports = []
    rows = []
    for i, config in enumerate(configs):
        config.n_jobs = n_jobs
        if n_replications is not None:
            config.n_replications = n_replications
        if t_len is not None:
            config.t_len = t_len
        if master_seed is not None:
            config.master_seed = master_seed
        report = run_experiment(config)
        sub = outdir if len(configs) == 1 else outdir / f"config{i}"
        report.write(sub)
        rows.extend(report.summary_rows())
        reports.append(report)
    write_power_csv(rows, outdir / "power.csv")
    return reports


def write_power_csv(rows: list, path) -> None:
    cols = ["method", "scenario", "T", "n_reps", "reject_rate", "stderr",
            "ks", "mean_stat", "var_stat"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
