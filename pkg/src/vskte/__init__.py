"""Variance-stabilized doubly robust kernel treatment effect inference for
adaptively collected bandit data."""

from .baselines import ScalarTestOutcome, aw_aipw_test, cadr_ate_test
from .envs import (
    ImageEnvSpec,
    ScenarioSpec,
    load_covariate_pool,
    make_image_env,
    make_synthetic_env,
)
from .exceptions import (
    CsvParseError,
    DegenerateFoldError,
    DegenerateStatisticError,
    NumericalError,
)
from .harness import ExperimentConfig, ReplicationReport, ks_distance, run_experiment
from .kernels import (
    GramBlock,
    KernelSpec,
    gram,
    kernel_eval,
    precision_to_lengthscale,
    resolve_lengthscale,
)
from .kte_test import (
    FoldSplit,
    KteEstimate,
    TestOutcome,
    dr_kte_unstabilized,
    kte_estimate,
    vs_dr_kte,
)
from .policies import (
    EpsGreedyConfig,
    EtcConfig,
    fold_propensity_snapshots,
    run_eps_greedy,
    run_etc,
    run_uniform,
)
from .scores import DrCoefficients, IpwMultipliers, cross_matrix, dr_coefficients, ipw_multipliers
from .smoothers import FoldScoreBasis, FoldSmoothers, arm_smoothers, crossfit_basis
from .stabilization import (
    StabilizationWeights,
    WeightConfig,
    conditional_moments,
    importance_ratios,
    stabilization_weight,
    weight_series,
)
from .trajectory import LoggedRound, PolicySnapshot, Trajectory, load_jsonl, save_jsonl

__version__ = "0.1.0"
