"""Command-line entry point.

Subcommands:
    simulate    draw a synthetic system and write its observations and truth
    run         run a (multi-run) sampling experiment from a config file
    em          point-estimate the transition matrix (and optionally the
                state covariance) from a CSV of observations
    analyze     summarise saved chains: edge probabilities and, when a truth
                file is given, sparsity metrics
    export-dot  render pooled edge probabilities of saved chains as DOT
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    classify_sparsity,
    compute_metrics,
    edge_probabilities,
    export_dot,
    posterior_mean,
)
from .em import em_estimate
from .experiments import (
    ExperimentSpec,
    build_regime,
    load_csv_series,
    parse_spec_file,
    run_experiment,
)
from .model_space import SparsityModel
from .sampler import SamplerConfig, load_chain_jsonl

__all__ = ["build_parser", "main"]

_SAMPLER_FLAGS = (
    ("pi0", float),
    ("pi_minus1", float),
    ("lambda_prior", float),
    ("lambda_j", float),
    ("sigma_walk", float),
    ("sigma_completion", float),
    ("n_iters", int),
    ("burn_in", int),
)


def _add_sampler_flags(p: argparse.ArgumentParser) -> None:
    for name, caster in _SAMPLER_FLAGS:
        p.add_argument(f"--{name.replace('_', '-')}", type=caster, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparselds",
        description="Sparse Bayesian identification of linear-Gaussian state-space dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a synthetic system and observations")
    p.add_argument("--regime", required=True)
    p.add_argument("--dx", type=int, default=3)
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--n-sparse", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", default="simulated")

    p = sub.add_parser("run", help="run a sampling experiment")
    p.add_argument("--config", default=None, help="flat key=value experiment file")
    p.add_argument("--regime", default=None)
    p.add_argument("--dx", type=int, default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--n-runs", type=int, default=None)
    p.add_argument("--n-sparse", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--method", choices=("sparse-rj", "dense-mcmc"), default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--csv-path", default=None)
    p.add_argument("--columns", default=None, help="comma-separated CSV columns")
    p.add_argument("--year-filter", type=int, default=None)
    p.add_argument("--em-iters", type=int, default=None)
    _add_sampler_flags(p)

    p = sub.add_parser("em", help="EM point estimation from a CSV")
    p.add_argument("--csv-path", required=True)
    p.add_argument("--columns", required=True, help="comma-separated CSV columns")
    p.add_argument("--year-filter", type=int, default=None)
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--estimate-q", action="store_true")
    p.add_argument("--obs-noise", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="optional .npz path for the estimates")

    p = sub.add_parser("analyze", help="summarise saved chains")
    p.add_argument("chains", nargs="+", help="chain_<i>.jsonl files")
    p.add_argument("--burn-in", type=int, default=5000)
    p.add_argument("--truth", default=None, help=".npz with arrays 'A' and 'mask'")

    p = sub.add_parser("export-dot", help="write the edge-probability graph as DOT")
    p.add_argument("chains", nargs="+", help="chain_<i>.jsonl files")
    p.add_argument("--burn-in", type=int, default=5000)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--labels", default=None, help="comma-separated node labels")
    p.add_argument("--no-self-loops", action="store_true")
    p.add_argument("--output", default="graph.dot")
    return parser


def _sampler_overrides(args) -> dict:
    return {
        name: getattr(args, name)
        for name, _ in _SAMPLER_FLAGS
        if getattr(args, name) is not None
    }


def _cmd_simulate(args) -> int:
    spec = ExperimentSpec(
        regime=args.regime,
        dx=args.dx,
        T=args.T,
        n_runs=1,
        n_sparse=args.n_sparse,
        seed=args.seed,
    )
    params, y, mask = build_regime(spec, args.seed)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ",".join(f"y{i + 1}" for i in range(y.shape[1]))
    np.savetxt(out / "observations.csv", y, delimiter=",", header=header, comments="")
    np.savez(
        out / "truth.npz",
        A=params.A,
        Q=params.Q,
        R=params.R,
        mask=mask.mask(),
    )
    print(f"wrote {out / 'observations.csv'} and {out / 'truth.npz'}")
    return 0


def _cmd_run(args) -> int:
    overrides = {
        k: getattr(args, k)
        for k in (
            "regime",
            "dx",
            "T",
            "n_runs",
            "n_sparse",
            "seed",
            "output_dir",
            "method",
            "workers",
            "csv_path",
            "columns",
            "year_filter",
            "em_iters",
        )
        if getattr(args, k) is not None
    }
    sampler_over = _sampler_overrides(args)
    if args.config is not None:
        spec = parse_spec_file(args.config, {**overrides, **sampler_over})
    else:
        if "regime" not in overrides:
            print("error: --regime (or --config) is required", file=sys.stderr)
            return 2
        if "columns" in overrides:
            overrides["columns"] = tuple(
                c.strip() for c in overrides["columns"].split(",") if c.strip()
            )
        spec = ExperimentSpec(sampler=SamplerConfig(**sampler_over), **overrides)
    result = run_experiment(spec)
    print(f"wrote artefacts to {result['output_dir']}")
    row = result["summary"]
    print(",".join(str(row[k]) for k in ("method", "dx", "rmse", "spec", "recall", "prec", "f1", "time_s")))
    return 0


def _cmd_em(args) -> int:
    columns = [c.strip() for c in args.columns.split(",") if c.strip()]
    y = load_csv_series(args.csv_path, columns, args.year_filter)
    dy = y.shape[1]
    rng = np.random.default_rng(args.seed)
    res = em_estimate(
        y,
        H=np.eye(dy),
        R=args.obs_noise * np.eye(dy),
        x0_mean=y[0].astype(float),
        P0=np.eye(dy),
        A_init=rng.standard_normal((dy, dy)) * 0.1 + 0.5 * np.eye(dy),
        n_iters=args.iters,
        estimate_A=True,
        estimate_Q=args.estimate_q,
    )
    np.set_printoptions(precision=4, suppress=True)
    print("A_hat =")
    print(res.A_hat)
    if args.estimate_q:
        print("Q_hat =")
        print(res.Q_hat)
    print(f"final log-likelihood: {res.loglik_trace[-1]:.4f}")
    if args.output:
        np.savez(args.output, A_hat=res.A_hat, Q_hat=res.Q_hat, loglik_trace=res.loglik_trace)
        print(f"wrote {args.output}")
    return 0


def _load_chains(paths):
    return [load_chain_jsonl(p) for p in paths]


def _cmd_analyze(args) -> int:
    chains = _load_chains(args.chains)
    graph = edge_probabilities(chains, args.burn_in)
    np.set_printoptions(precision=3, suppress=True)
    print("edge probabilities (row i <- col j):")
    print(graph.prob)
    if args.truth is not None:
        truth = np.load(args.truth)
        true_mask = SparsityModel.from_mask(truth["mask"])
        for i, chain in enumerate(chains):
            est_mask = classify_sparsity(chain, args.burn_in)
            metrics = compute_metrics(
                est_mask, true_mask, posterior_mean(chain, args.burn_in), truth["A"]
            )
            row = metrics.as_row()
            print(
                f"chain {i}: "
                + ", ".join(
                    f"{k}={v if isinstance(v, str) else f'{v:.4f}'}" for k, v in row.items()
                )
            )
    return 0


def _cmd_export_dot(args) -> int:
    chains = _load_chains(args.chains)
    labels = None
    if args.labels:
        labels = tuple(s.strip() for s in args.labels.split(",") if s.strip())
    graph = edge_probabilities(chains, args.burn_in, labels=labels)
    dot = export_dot(graph, args.threshold, include_self_loops=not args.no_self_loops)
    Path(args.output).write_text(dot)
    print(f"wrote {args.output}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "run": _cmd_run,
    "em": _cmd_em,
    "analyze": _cmd_analyze,
    "export-dot": _cmd_export_dot,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
