"""
experiments.py

Scripted Monte-Carlo experiments on data drawn from the model itself.

Experiment 1 (posterior check):
    fix a true tree m0, draw x ~ p(x | m0) `signals` times and for each x
    draw y = x + eps `noise_draws` times; average p(m | y) over all draws
    for every model of the catalog. The true tree should come out on top.

Experiment 2 (Bayes risk):
    for every g in a sweep, draw m ~ p(m) `trees` times, x ~ p(x | m)
    `signals` times per tree and y `noise_draws` times per signal; record
    the per-pixel squared loss of delta* and of the fixed-tree estimators
    delta^i built on the perfect trees of depth 1..d_max.

Every trial's random stream is derived from (seed, loop indices) and
results are accumulated in loop order, so a seed fixes every output byte.
"""

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from bayes.denoise import bayes_denoise, mean_squared_loss
from bayes.hyperparams import (
    DEFAULT_MU_SCALE,
    DEFAULT_BRANCH_PROBABILITY,
    DEFAULT_NOISE_SIGMA2,
    DEFAULT_SIGMA2,
    HyperParams,
    synthetic_mu,
)
from bayes.posterior import compute_posterior_state, posterior_probabilities
from bayes.sampling import add_noise, sample_theta_and_signal
from store.corpus import estimate_mu, load_corpus
from store.hyperparams_file import read_hyperparams
from store.results import parse_model, serialize_model, write_results_csv
from tree.prior import BranchProbabilities, sample_model
from tree.quadtree import MAX_ENUMERATION_DEPTH, ModelCatalog, average_depth, perfect_tree
from utils.errors import DomainError, ParseError, SignalIOError
from utils.run_logger import RunLogger
from wavelet.packets import PacketTable, synthesize_tree

SWEEP_G_VALUES = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DEFAULT_TRUE_MODEL_INDEX = 6

EXPERIMENT1_HEADER = ("index", "model", "avg_posterior", "std_error", "prior", "is_true", "is_max")
EXPERIMENT2_RISK_HEADER = ("noise_sigma2", "g", "method", "risk", "std_error", "diff_vs_bayes", "diff_std_error")
EXPERIMENT2_DEPTH_HEADER = ("noise_sigma2", "g", "average_depth", "std_error")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Settings of one harness run. `seed` has no default: every run must be
    reproducible. Loop counts: `trees` sampled trees (Experiment 2 only),
    `signals` signals per tree, `noise_draws` observations per signal.
    """

    seed: int
    d_max: int = 2
    sigma2: float = DEFAULT_SIGMA2
    noise_sigma2: Tuple[float, ...] = (DEFAULT_NOISE_SIGMA2,)
    g_values: Tuple[float, ...] = (DEFAULT_BRANCH_PROBABILITY,)
    trees: int = 1
    signals: int = 50
    noise_draws: int = 50
    mu: str = "synthetic"
    mu_scale: float = DEFAULT_MU_SCALE
    true_model: Optional[str] = None
    true_model_index: int = DEFAULT_TRUE_MODEL_INDEX
    output_dir: str = "results"

    def __post_init__(self):
        object.__setattr__(self, "noise_sigma2", tuple(float(v) for v in _as_sequence(self.noise_sigma2)))
        object.__setattr__(self, "g_values", tuple(float(v) for v in _as_sequence(self.g_values)))
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise DomainError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.d_max < 0:
            raise DomainError(f"d_max must be non-negative, got {self.d_max}")
        for name in ("trees", "signals", "noise_draws"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.sigma2 <= 0.0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")
        if not self.noise_sigma2 or any(v < 0.0 for v in self.noise_sigma2):
            raise DomainError(f"noise variances must be non-negative, got {self.noise_sigma2}")
        if not self.g_values or any(not 0.0 <= g <= 1.0 for g in self.g_values):
            raise DomainError(f"branch probabilities must lie in [0, 1], got {self.g_values}")

    @classmethod
    def experiment1(cls, seed: int, **overrides) -> "ExperimentConfig":
        return cls(seed=seed, **overrides)

    @classmethod
    def experiment2(cls, seed: int, **overrides) -> "ExperimentConfig":
        settings = dict(d_max=5, g_values=SWEEP_G_VALUES, trees=30, signals=10, noise_draws=10)
        settings.update(overrides)
        return cls(seed=seed, **settings)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


def _as_sequence(value) -> Sequence:
    if isinstance(value, (int, float)):
        return (value,)
    return value


def read_config_fields(path) -> dict:
    """The JSON object of ExperimentConfig fields stored in a file."""
    path = Path(path)
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise SignalIOError(path, e.strerror or e) from e
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path, e.lineno, e.colno) from None
    if not isinstance(data, dict):
        raise ParseError("configuration file must hold a JSON object", path)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise DomainError(f"{path}: unknown configuration fields {unknown}")
    return data


def load_config(path, base: ExperimentConfig) -> ExperimentConfig:
    """Overlay the fields stored in a JSON file on `base`."""
    return replace(base, **read_config_fields(path))


def resolve_mu(source: str, d_max: int, scale: float = DEFAULT_MU_SCALE) -> PacketTable:
    """
    Prior means from a source description:
    "zeros", "synthetic", "corpus:<dir>" or the path of a hyperparameter file.
    """
    if source == "zeros":
        return PacketTable.zeros(d_max)
    if source == "synthetic":
        return synthetic_mu(d_max, scale)
    if source.startswith("corpus:"):
        return estimate_mu(load_corpus(source[len("corpus:"):], d_max), d_max)
    hp = read_hyperparams(source)
    if hp.d_max != d_max:
        raise DomainError(f"{source}: file has d_max={hp.d_max}, expected {d_max}")
    return hp.mu


def _standard_error(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        return 0.0
    return float(stats.sem(values))


@dataclass
class Experiment1Result:
    models: List[str]
    average_posterior: np.ndarray
    std_error: np.ndarray
    prior: np.ndarray
    true_index: int
    expanded_neighbours: List[int] = field(default_factory=list)
    contracted_neighbours: List[int] = field(default_factory=list)

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.average_posterior))

    @property
    def ranks(self) -> np.ndarray:
        """1-based rank of every model by average posterior (1 = largest)."""
        order = np.argsort(-self.average_posterior, kind="stable")
        ranks = np.empty(len(order), dtype=int)
        ranks[order] = np.arange(1, len(order) + 1)
        return ranks

    def rows(self) -> List[dict]:
        best = self.argmax
        return [
            {
                "index": index,
                "model": bits,
                "avg_posterior": float(self.average_posterior[index]),
                "std_error": float(self.std_error[index]),
                "prior": float(self.prior[index]),
                "is_true": int(index == self.true_index),
                "is_max": int(index == best),
            }
            for index, bits in enumerate(self.models)
        ]

    def summary(self) -> dict:
        ranks = self.ranks
        return {
            "true_model": self.models[self.true_index],
            "argmax_model": self.models[self.argmax],
            "true_is_max": self.argmax == self.true_index,
            "best_expanded_rank": int(min(ranks[self.expanded_neighbours])) if self.expanded_neighbours else None,
            "best_contracted_rank": int(min(ranks[self.contracted_neighbours])) if self.contracted_neighbours else None,
        }


@dataclass
class Experiment2Result:
    risk_rows: List[dict]
    depth_rows: List[dict]

    def risk(self, g: float, method: str, noise_sigma2: float = None) -> dict:
        for row in self.risk_rows:
            if row["g"] == g and row["method"] == method and (noise_sigma2 is None or row["noise_sigma2"] == noise_sigma2):
                return row
        raise KeyError((noise_sigma2, g, method))


class ExperimentHarness:
    """
    Runs the scripted experiments for one ExperimentConfig and writes their
    CSV tables into the configured output directory.
    """

    def __init__(self, config: ExperimentConfig, logger: RunLogger = None, verbose: bool = True):
        self.config = config
        self.logger = logger
        self.verbose = verbose
        self.mu = resolve_mu(config.mu, config.d_max, config.mu_scale)

    def _report(self, message: str):
        if self.verbose:
            print(message)

    def _log(self, event: str, details: dict):
        if self.logger is not None:
            self.logger.log(event, details)

    def hyperparams(self, g: float, noise_sigma2: float) -> HyperParams:
        return HyperParams(
            g=BranchProbabilities.constant(self.config.d_max, g),
            sigma2=self.config.sigma2,
            noise_sigma2=noise_sigma2,
            mu=self.mu,
        )

    # ------------------------------------------------------------------
    # Experiment 1
    # ------------------------------------------------------------------

    def run_experiment1(self, hp: HyperParams = None) -> Experiment1Result:
        cfg = self.config
        if cfg.d_max > MAX_ENUMERATION_DEPTH:
            raise DomainError(f"experiment 1 enumerates every model; d_max must be <= {MAX_ENUMERATION_DEPTH}")
        if hp is None:
            if len(cfg.g_values) != 1 or len(cfg.noise_sigma2) != 1:
                raise DomainError(
                    f"experiment 1 takes a single g and noise variance, got g={list(cfg.g_values)} "
                    f"and noise_sigma2={list(cfg.noise_sigma2)}"
                )
            hp = self.hyperparams(cfg.g_values[0], cfg.noise_sigma2[0])
        catalog = ModelCatalog(cfg.d_max)
        if cfg.true_model is not None:
            true_model = parse_model(cfg.true_model, cfg.d_max)
        else:
            if not 0 <= cfg.true_model_index < len(catalog):
                raise DomainError(f"true_model_index {cfg.true_model_index} outside [0, {len(catalog) - 1}]")
            true_model = catalog.models[cfg.true_model_index]
        true_index = catalog.index_of(true_model)

        self._report(
            f"Experiment 1: {len(catalog)} models, true model {serialize_model(true_model)} "
            f"(index {true_index}), {cfg.signals} signals x {cfg.noise_draws} noise draws"
        )
        per_signal = np.zeros((cfg.signals, len(catalog)))
        for a in range(cfg.signals):
            rng = np.random.default_rng([cfg.seed, a])
            x = sample_theta_and_signal(true_model, hp, rng)
            total = np.zeros(len(catalog))
            for _ in range(cfg.noise_draws):
                y = add_noise(x, hp.noise_sigma2, rng)
                total += posterior_probabilities(catalog, compute_posterior_state(y, hp))
            per_signal[a] = total / cfg.noise_draws

        expanded, contracted = catalog.neighbours(true_model)
        result = Experiment1Result(
            models=[serialize_model(m) for m in catalog.models],
            average_posterior=per_signal.mean(axis=0),
            std_error=np.array([_standard_error(per_signal[:, k]) for k in range(len(catalog))]),
            prior=np.exp(catalog.log_prior(hp.g)),
            true_index=true_index,
            expanded_neighbours=expanded,
            contracted_neighbours=contracted,
        )
        summary = result.summary()
        self._report(
            f"Experiment 1: argmax model {summary['argmax_model']} "
            f"({'true model' if summary['true_is_max'] else 'NOT the true model'}); "
            f"best one-expansion rank {summary['best_expanded_rank']}, "
            f"best one-contraction rank {summary['best_contracted_rank']}"
        )
        self._log("experiment1_summary", summary)
        return result

    def write_experiment1(self, result: Experiment1Result) -> Path:
        out_dir = self._output_dir()
        return write_results_csv(result.rows(), out_dir / "experiment1_posterior.csv", EXPERIMENT1_HEADER)

    # ------------------------------------------------------------------
    # Experiment 2
    # ------------------------------------------------------------------

    def run_experiment2(self) -> Experiment2Result:
        cfg = self.config
        d_max = cfg.d_max
        methods = ["bayes"] + [f"perfect_{i}" for i in range(1, d_max + 1)]
        baseline_means = {f"perfect_{i}": synthesize_tree(perfect_tree(i, d_max), self.mu) for i in range(1, d_max + 1)}

        risk_rows, depth_rows = [], []
        for v, noise_sigma2 in enumerate(cfg.noise_sigma2):
            for gi, g in enumerate(cfg.g_values):
                hp = self.hyperparams(g, noise_sigma2)
                a = hp.shrinkage
                tree_losses = {method: np.zeros(cfg.trees) for method in methods}
                depths = np.zeros(cfg.trees)
                for t in range(cfg.trees):
                    rng = np.random.default_rng([cfg.seed, v, gi, t])
                    m = sample_model(hp.g, rng)
                    depths[t] = average_depth(m)
                    for _ in range(cfg.signals):
                        x = sample_theta_and_signal(m, hp, rng)
                        for _ in range(cfg.noise_draws):
                            y = add_noise(x, noise_sigma2, rng)
                            tree_losses["bayes"][t] += mean_squared_loss(x, bayes_denoise(y, hp))
                            for method, mean in baseline_means.items():
                                tree_losses[method][t] += mean_squared_loss(x, a * y + (1.0 - a) * mean)
                draws = cfg.signals * cfg.noise_draws
                for method in methods:
                    tree_losses[method] /= draws

                bayes_losses = tree_losses["bayes"]
                for method in methods:
                    diff = tree_losses[method] - bayes_losses
                    risk_rows.append({
                        "noise_sigma2": noise_sigma2,
                        "g": g,
                        "method": method,
                        "risk": float(tree_losses[method].mean()),
                        "std_error": _standard_error(tree_losses[method]),
                        "diff_vs_bayes": float(diff.mean()),
                        "diff_std_error": _standard_error(diff),
                    })
                depth_rows.append({
                    "noise_sigma2": noise_sigma2,
                    "g": g,
                    "average_depth": float(depths.mean()),
                    "std_error": _standard_error(depths),
                })
                self._report(
                    f"Experiment 2: noise {noise_sigma2:g}, g {g:g}: BR(bayes) {bayes_losses.mean():.4f}, "
                    f"average depth {depths.mean():.3f}"
                )
        result = Experiment2Result(risk_rows=risk_rows, depth_rows=depth_rows)
        self._log("experiment2_summary", {"rows": len(risk_rows), "g_values": list(cfg.g_values)})
        return result

    def write_experiment2(self, result: Experiment2Result) -> Tuple[Path, Path]:
        out_dir = self._output_dir()
        risk = write_results_csv(result.risk_rows, out_dir / "experiment2_risk.csv", EXPERIMENT2_RISK_HEADER)
        depth = write_results_csv(result.depth_rows, out_dir / "experiment2_depth.csv", EXPERIMENT2_DEPTH_HEADER)
        return risk, depth

    # ------------------------------------------------------------------

    def _output_dir(self) -> Path:
        out_dir = Path(self.config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        settings = out_dir / "settings.json"
        settings.write_text(json.dumps(self.config.to_dict(), indent=2) + "\n")
        return out_dir


def risk_table(result: Experiment2Result, noise_sigma2: float = None) -> Dict[float, Dict[str, dict]]:
    """Risk rows regrouped as {g: {method: row}}."""
    table: Dict[float, Dict[str, dict]] = {}
    for row in result.risk_rows:
        if noise_sigma2 is not None and row["noise_sigma2"] != noise_sigma2:
            continue
        table.setdefault(row["g"], {})[row["method"]] = row
    return table
