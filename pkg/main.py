"""
main.py

wpbayes: Bayes-optimal denoising of 2D signals whose Walsh wavelet
packet basis is itself random.

Subcommands:
    transform     forward / inverse packet transform of a signal for one tree
    sample        draw a tree, a clean signal and a noisy observation
    posterior     posterior over trees (and per-node quantities) for an observation
    denoise       Bayes-optimal or fixed-tree estimate of the clean signal
    estimate-mu   prior means from a corpus of images
    experiment1   averaged posterior of every tree for data from a fixed tree
    experiment2   Bayes risk of delta* against perfect-tree baselines over a g sweep

Exit codes: 0 on success, 1 on runtime errors, 2 on usage errors.
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from bayes.denoise import bayes_denoise, fixed_tree_denoise
from bayes.hyperparams import (
    DEFAULT_MU_SCALE,
    DEFAULT_BRANCH_PROBABILITY,
    DEFAULT_NOISE_SIGMA2,
    DEFAULT_SIGMA2,
    HyperParams,
)
from bayes.posterior import compute_posterior_state, leaf_marginals, posterior_probabilities
from bayes.sampling import add_noise, sample_theta_and_signal
from experiments import ExperimentConfig, ExperimentHarness, read_config_fields, resolve_mu
from store.corpus import estimate_mu, load_corpus
from store.hyperparams_file import read_hyperparams, write_hyperparams
from store.results import (
    models_table,
    parse_model,
    read_coefficients,
    serialize_model,
    write_coefficients,
    write_results_csv,
)
from store.signals import read_signal, write_signal
from tree.prior import BranchProbabilities, sample_model
from tree.quadtree import MAX_ENUMERATION_DEPTH, ModelCatalog, QuadTreeModel, perfect_tree
from utils.errors import DomainError, UsageError, WPBayesError
from utils.run_logger import RunLogger
from utils.time_utils import elapsed_since
from wavelet.nodes import all_nodes
from wavelet.packets import analyze_full, depth_of_side, synthesize_tree


# ======================
# ARGUMENT PARSING
# ======================

def _float_list(text: str):
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned integer, got {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {value}")
    return value


def _add_model_flags(parser, require_seed=False):
    parser.add_argument("--hyper", help="hyperparameter JSON file")
    parser.add_argument("--dmax", type=int, help="depth of the complete quadtree (side 2^dmax)")
    parser.add_argument("--sigma2", type=float, help=f"prior coefficient variance (default {DEFAULT_SIGMA2:g})")
    parser.add_argument("--noise-sigma2", type=float, help=f"noise variance (default {DEFAULT_NOISE_SIGMA2:g})")
    parser.add_argument("--g", type=float, help="branch probability for every node above dmax")
    parser.add_argument("--mu", help="prior means: zeros | synthetic | corpus:<dir> | <hyperparameter file>")
    parser.add_argument("--mu-scale", type=float, default=DEFAULT_MU_SCALE, help="scale of the synthetic mu")
    parser.add_argument("--seed", type=_seed, required=require_seed, help="random seed (unsigned 64-bit)")
    parser.add_argument("--out", help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wpbayes", description="Bayesian wavelet-packet denoising of 2D signals.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="packet transform for one tree")
    p.add_argument("input", help="signal (.pgm/.csv) for forward, coefficient CSV for inverse")
    p.add_argument("--inverse", action="store_true", help="synthesize a signal from leaf coefficients")
    p.add_argument("--tree", help="model bit-string (default: the perfect tree of depth dmax)")
    p.add_argument("--dmax", type=int, help="required with --inverse")
    p.add_argument("--out", required=True, help="output file")

    p = sub.add_parser("sample", help="draw m ~ p(m), x ~ p(x|m), y = x + eps")
    _add_model_flags(p, require_seed=True)
    p.add_argument("--tree", help="fix the tree (bit-string) instead of sampling it")

    p = sub.add_parser("posterior", help="posterior over trees for an observation")
    p.add_argument("input", help="observation y (.pgm/.csv)")
    _add_model_flags(p)

    p = sub.add_parser("denoise", help="estimate x from an observation")
    p.add_argument("input", help="observation y (.pgm/.csv)")
    _add_model_flags(p)
    p.add_argument("--tree", help="use the fixed-tree estimator for this model bit-string")

    p = sub.add_parser("estimate-mu", help="prior means from a corpus")
    p.add_argument("corpus", help="directory of .pgm/.csv images")
    _add_model_flags(p)

    for name, help_text in (("experiment1", "posterior check on data from a fixed tree"),
                            ("experiment2", "Bayes risk over a sweep of g")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="experiment configuration JSON")
        p.add_argument("--seed", type=_seed, help="random seed (required unless set in --config)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--dmax", type=int)
        p.add_argument("--sigma2", type=float)
        p.add_argument("--noise-sigma2", type=_float_list, help="one value or a comma-separated sweep")
        p.add_argument("--g", type=_float_list, help="one value or a comma-separated sweep")
        p.add_argument("--mu", help="zeros | synthetic | corpus:<dir> | <hyperparameter file>")
        p.add_argument("--mu-scale", type=float)
        p.add_argument("--trees", type=int)
        p.add_argument("--signals", type=int)
        p.add_argument("--noise-draws", type=int)
        if name == "experiment1":
            p.add_argument("--true-model", help="true tree as a bit-string")
            p.add_argument("--true-model-index", type=int, help="true tree as an index into the model list")
    return parser


# ======================
# HYPERPARAMETERS FROM FLAGS
# ======================

def hyperparams_from_args(args, d_max_hint: int = None) -> HyperParams:
    """Hyperparameter file (if any) overridden by individual flags."""
    base = read_hyperparams(args.hyper) if args.hyper else None
    d_max = args.dmax if args.dmax is not None else (base.d_max if base else d_max_hint)
    if d_max is None:
        raise UsageError("--dmax is required when no hyperparameter file or input signal fixes it")
    if base is not None and base.d_max != d_max:
        raise DomainError(f"--dmax {d_max} conflicts with d_max={base.d_max} in {args.hyper}")

    if args.g is not None:
        g = BranchProbabilities.constant(d_max, args.g)
    elif base is not None:
        g = base.g
    else:
        g = BranchProbabilities.constant(d_max, DEFAULT_BRANCH_PROBABILITY)

    if args.mu is not None:
        mu = resolve_mu(args.mu, d_max, args.mu_scale)
    elif base is not None:
        mu = base.mu
    else:
        mu = resolve_mu("zeros", d_max)

    sigma2 = args.sigma2 if args.sigma2 is not None else (base.sigma2 if base else DEFAULT_SIGMA2)
    noise = args.noise_sigma2 if args.noise_sigma2 is not None else (base.noise_sigma2 if base else DEFAULT_NOISE_SIGMA2)
    return HyperParams(g=g, sigma2=sigma2, noise_sigma2=noise, mu=mu)


def _out_path(args, default_name: str) -> Path:
    out = Path(args.out) if args.out else Path(default_name)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


# ======================
# SUBCOMMANDS
# ======================

def cmd_transform(args) -> int:
    if args.inverse:
        if args.dmax is None:
            raise UsageError("--dmax is required with --inverse")
        blocks = read_coefficients(args.input, args.dmax)
        m = parse_model(args.tree, args.dmax) if args.tree else QuadTreeModel.from_leaves(blocks.keys(), args.dmax)
        write_signal(_out_path(args, "signal.csv"), synthesize_tree(m, blocks))
        print(f"Synthesized {1 << args.dmax}x{1 << args.dmax} signal from {len(m.leaves)} leaf blocks.")
        return 0

    x = read_signal(args.input, d_max=args.dmax)
    d_max = depth_of_side(x.shape[0])
    m = parse_model(args.tree, d_max) if args.tree else perfect_tree(d_max, d_max)
    write_coefficients(_out_path(args, "coefficients.csv"), m, analyze_full(x))
    print(f"Wrote {len(m.leaves)} leaf blocks of model {serialize_model(m)}.")
    return 0


def cmd_sample(args, logger: RunLogger) -> int:
    hp = hyperparams_from_args(args)
    rng = np.random.default_rng(args.seed)
    m = parse_model(args.tree, hp.d_max) if args.tree else sample_model(hp.g, rng)
    x = sample_theta_and_signal(m, hp, rng)
    y = add_noise(x, hp.noise_sigma2, rng)

    out_dir = Path(args.out or "sample")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_signal(out_dir / "clean.csv", x)
    write_signal(out_dir / "observed.csv", y)
    (out_dir / "model.txt").write_text(serialize_model(m) + "\n")
    logger.log("sample", {"model": serialize_model(m), "d_max": hp.d_max})
    print(f"Sampled model {serialize_model(m)}; wrote clean.csv, observed.csv, model.txt to {out_dir}")
    return 0


def cmd_posterior(args, logger: RunLogger) -> int:
    y = read_signal(args.input)
    hp = hyperparams_from_args(args, depth_of_side(y.shape[0]))
    st = compute_posterior_state(y, hp)
    out_dir = Path(args.out or "posterior")
    out_dir.mkdir(parents=True, exist_ok=True)

    marginals = leaf_marginals(st)
    g_tilde = st.g_tilde
    node_rows = [
        {
            "node": s.key,
            "g": float(hp.g.levels[s.i][s.j0, s.j1]),
            "g_tilde": float(g_tilde[s.i][s.j0, s.j1]),
            "log_psi": float(st.log_psi[s.i][s.j0, s.j1]),
            "leaf_marginal": float(marginals[s.i][s.j0, s.j1]),
        }
        for s in all_nodes(hp.d_max)
    ]
    write_results_csv(node_rows, out_dir / "nodes.csv")

    if hp.d_max <= MAX_ENUMERATION_DEPTH:
        catalog = ModelCatalog(hp.d_max)
        probabilities = posterior_probabilities(catalog, st)
        write_results_csv(models_table(catalog.models, probabilities, "posterior"), out_dir / "models.csv")
        best = int(np.argmax(probabilities))
        print(f"{len(catalog)} models, posterior sum {probabilities.sum():.12f}; "
              f"most probable {serialize_model(catalog.models[best])} ({probabilities[best]:.4f})")
        logger.log("posterior", {"models": len(catalog), "best": serialize_model(catalog.models[best])})
    else:
        print(f"d_max={hp.d_max}: too many models to list; wrote per-node quantities only")
    return 0


def cmd_denoise(args, logger: RunLogger) -> int:
    y = read_signal(args.input)
    hp = hyperparams_from_args(args, depth_of_side(y.shape[0]))
    start = time.perf_counter()
    if args.tree:
        m = parse_model(args.tree, hp.d_max)
        estimate = fixed_tree_denoise(y, m, hp)
        method = f"fixed tree {serialize_model(m)}"
    else:
        estimate = bayes_denoise(y, hp)
        method = "Bayes-optimal"
    out = _out_path(args, "denoised.csv")
    write_signal(out, estimate)
    logger.log("denoise", {"method": method, "input": args.input, "output": str(out)})
    print(f"{method} estimate written to {out} ({elapsed_since(start)})")
    return 0


def cmd_estimate_mu(args, logger: RunLogger) -> int:
    corpus = load_corpus(args.corpus, args.dmax)
    d_max = depth_of_side(corpus[0].shape[0])
    mu = estimate_mu(corpus, d_max)
    args.dmax = d_max
    args.mu = None
    hp = hyperparams_from_args(args).replace(mu=mu)
    out = _out_path(args, "hyperparams.json")
    write_hyperparams(out, hp)
    logger.log("estimate_mu", {"images": len(corpus), "d_max": d_max, "output": str(out)})
    print(f"Estimated mu from {len(corpus)} images; hyperparameters written to {out}")
    return 0


def experiment_config_from_args(args, experiment: str) -> ExperimentConfig:
    stored = read_config_fields(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else stored.get("seed")
    if seed is None:
        raise UsageError("--seed is required for reproducible experiments (or set 'seed' in --config)")
    base = ExperimentConfig.experiment1(seed) if experiment == "experiment1" else ExperimentConfig.experiment2(seed)
    base = replace(base, **stored)
    overrides = dict(
        seed=args.seed,
        output_dir=args.out,
        d_max=args.dmax,
        sigma2=args.sigma2,
        noise_sigma2=args.noise_sigma2,
        g_values=args.g,
        mu=args.mu,
        mu_scale=args.mu_scale,
        trees=args.trees,
        signals=args.signals,
        noise_draws=args.noise_draws,
    )
    if experiment == "experiment1":
        overrides.update(true_model=args.true_model, true_model_index=args.true_model_index)
    return base.with_overrides(**overrides)


def cmd_experiment(args, logger: RunLogger, cfg: ExperimentConfig) -> int:
    start = time.perf_counter()
    harness = ExperimentHarness(cfg, logger=logger)
    if args.command == "experiment1":
        result = harness.run_experiment1()
        path = harness.write_experiment1(result)
        print(f"Experiment 1 table written to {path} ({elapsed_since(start)})")
    else:
        result = harness.run_experiment2()
        risk, depth = harness.write_experiment2(result)
        print(f"Experiment 2 tables written to {risk} and {depth} ({elapsed_since(start)})")
    return 0


# ======================
# ENTRY POINT
# ======================

def _log_dir(args, cfg: ExperimentConfig = None) -> Path:
    if cfg is not None:
        directory = Path(cfg.output_dir)
    elif args.command in ("sample", "posterior"):
        directory = Path(args.out or args.command)
    elif getattr(args, "out", None):
        directory = Path(args.out).parent
    else:
        directory = Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logger = None
    try:
        cfg = None
        if args.command in ("experiment1", "experiment2"):
            cfg = experiment_config_from_args(args, args.command)
        logger = RunLogger(str(_log_dir(args, cfg) / "run_log.json"))
        logger.log_run_start(args.command, cfg.to_dict() if cfg else {"argv": list(argv or sys.argv[1:])})

        if args.command == "transform":
            status = cmd_transform(args)
        elif args.command == "sample":
            status = cmd_sample(args, logger)
        elif args.command == "posterior":
            status = cmd_posterior(args, logger)
        elif args.command == "denoise":
            status = cmd_denoise(args, logger)
        elif args.command == "estimate-mu":
            status = cmd_estimate_mu(args, logger)
        else:
            status = cmd_experiment(args, logger, cfg)

        logger.log_run_end("ok")
        return status

    except UsageError as e:
        if logger is not None:
            logger.log_run_end("usage_error", {"message": str(e)})
        parser.error(str(e))

    except (WPBayesError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        if logger is not None:
            logger.log_run_end("error", {"message": str(e)})
        return 1

    except KeyboardInterrupt:
        print("\nInterrupted; partial results were not written.", file=sys.stderr)
        if logger is not None:
            logger.log_run_end("interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
