"""Posterior summaries, sparsity classification metrics, convergence traces,
and probabilistic edge-graph export.

Classification follows the convention that a sparse entry is a positive, so
e.g. recall is the fraction of truly sparse entries recovered as sparse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lgssm import as_rng
from .model_space import SparsityModel
from .sampler import Chain

__all__ = [
    "EdgeGraph",
    "SparsityMetrics",
    "bootstrap_edge_interval",
    "classify_sparsity",
    "compute_metrics",
    "edge_probabilities",
    "export_dot",
    "posterior_mean",
    "trace_diagnostics",
]


@dataclass(frozen=True)
class SparsityMetrics:
    """RMSE plus the sparse/dense confusion-matrix metrics.

    ``precision`` is None when no entry was predicted sparse (rendered as
    "--" in tables and excluded from averages).
    """

    rmse: float
    specificity: float
    recall: float
    precision: float | None
    f1: float

    def as_row(self) -> dict:
        return {
            "rmse": self.rmse,
            "spec": self.specificity,
            "recall": self.recall,
            "prec": "--" if self.precision is None else self.precision,
            "f1": self.f1,
        }


@dataclass(frozen=True)
class EdgeGraph:
    """Edge-probability matrix of the state-interaction graph.

    ``prob[i, j]`` is the posterior probability that entry (i+1, j+1) of the
    transition matrix is non-zero, i.e. that state j+1 feeds state i+1.
    """

    dx: int
    prob: np.ndarray
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "prob", np.asarray(self.prob, dtype=float))
        if self.prob.shape != (self.dx, self.dx):
            raise ValueError("prob must be dx-by-dx")
        if np.any(self.prob < 0) or np.any(self.prob > 1):
            raise ValueError("edge probabilities must lie in [0, 1]")
        labels = tuple(self.labels) if self.labels else tuple(f"x{i + 1}" for i in range(self.dx))
        if len(labels) != self.dx:
            raise ValueError("need one label per node")
        object.__setattr__(self, "labels", labels)


def _post_burnin(chain: Chain, burn_in: int) -> slice:
    if not (0 <= burn_in < len(chain)):
        raise ValueError("burn_in must be smaller than the chain length")
    return slice(burn_in, None)


def posterior_mean(chain: Chain, burn_in: int) -> np.ndarray:
    """Entrywise mean of the post-burn-in samples."""
    return chain.A[_post_burnin(chain, burn_in)].mean(axis=0)


def classify_sparsity(chain: Chain, burn_in: int) -> SparsityModel:
    """Majority vote: an entry is sparse iff sparse in more than half of the
    post-burn-in samples; exact ties are classified dense."""
    dense_frac = chain.masks[_post_burnin(chain, burn_in)].mean(axis=0)
    return SparsityModel.from_mask(dense_frac >= 0.5)


def compute_metrics(
    est_mask: SparsityModel,
    true_mask: SparsityModel,
    A_est: np.ndarray,
    A_true: np.ndarray,
) -> SparsityMetrics:
    """Confusion-matrix metrics of an estimated pattern plus entrywise RMSE."""
    if est_mask.dx != true_mask.dx:
        raise ValueError("masks have different dimensions")
    A_est = np.asarray(A_est, dtype=float)
    A_true = np.asarray(A_true, dtype=float)
    if A_est.shape != A_true.shape or A_est.shape != (true_mask.dx, true_mask.dx):
        raise ValueError("matrix shapes do not match the masks")
    est_sparse = ~est_mask.mask()
    true_sparse = ~true_mask.mask()
    tp = int(np.sum(est_sparse & true_sparse))
    fp = int(np.sum(est_sparse & ~true_sparse))
    fn = int(np.sum(~est_sparse & true_sparse))
    tn = int(np.sum(~est_sparse & ~true_sparse))
    specificity = tn / (tn + fp) if tn + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    precision = tp / (tp + fp) if tp + fp else None
    if precision is not None and precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
    rmse = float(np.sqrt(np.mean((A_est - A_true) ** 2)))
    return SparsityMetrics(rmse, specificity, recall, precision, f1)


def edge_probabilities(chains, burn_in: int, labels=None) -> EdgeGraph:
    """Pooled fraction of post-burn-in samples in which each entry is dense."""
    chains = list(chains)
    if not chains:
        raise ValueError("need at least one chain")
    dx = chains[0].dx
    total = np.zeros((dx, dx))
    count = 0
    for chain in chains:
        sl = _post_burnin(chain, burn_in)
        total += chain.masks[sl].sum(axis=0)
        count += len(chain) - burn_in
    return EdgeGraph(dx, total / count, tuple(labels) if labels else ())


def bootstrap_edge_interval(
    presence, level: float, n_boot: int, seed
) -> tuple[float, float]:
    """Percentile bootstrap interval for an edge probability.

    ``presence`` holds the per-chain post-burn-in edge frequencies; chains
    are resampled with replacement and the mean recomputed ``n_boot`` times.
    """
    freqs = np.asarray(list(presence), dtype=float)
    if freqs.size < 2:
        raise ValueError("need at least two chains to bootstrap")
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie in (0, 1)")
    rng = as_rng(seed)
    idx = rng.integers(0, freqs.size, size=(n_boot, freqs.size))
    means = freqs[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    low, high = np.quantile(means, [alpha, 1.0 - alpha])
    return float(low), float(high)


def trace_diagnostics(chain: Chain) -> tuple[np.ndarray, np.ndarray]:
    """Per-iteration spectral norm of the sample and its sparse-entry count."""
    norms = np.array([np.linalg.norm(chain.A[i], 2) for i in range(len(chain))])
    sparse_counts = (~chain.masks).sum(axis=(1, 2))
    return norms, sparse_counts.astype(int)


_PENWIDTH_MAX = 5.0


def export_dot(graph: EdgeGraph, threshold: float, include_self_loops: bool = True) -> str:
    """Render the edge-probability graph as DOT text.

    Edges with probability >= threshold are drawn with pen width
    proportional to the probability; self-loops can be suppressed.
    """
    if not (0.0 <= threshold <= 1.0):
        raise ValueError("threshold must lie in [0, 1]")
    lines = ["digraph states {"]
    for label in graph.labels:
        lines.append(f'    "{label}";')
    for i in range(graph.dx):
        for j in range(graph.dx):
            if i == j and not include_self_loops:
                continue
            p = graph.prob[i, j]
            if p >= threshold:
                lines.append(
                    f'    "{graph.labels[j]}" -> "{graph.labels[i]}" '
                    f'[penwidth={_PENWIDTH_MAX * p:.3f}, label="{p:.2f}"];'
                )
    lines.append("}")
    return "\n".join(lines) + "\n"
