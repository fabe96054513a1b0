"""Sparsity-pattern model space over a square transition matrix.

A model is a set of (row, col) index pairs allowed to be non-zero ("dense");
every other entry is pinned to exactly zero.  This module provides the model
objects, the jump proposal kernel, the doubly-truncated Poisson jump-length
distribution, and the detailed-balance correction terms for asymmetric model
moves.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "JumpKind",
    "ModelProposal",
    "SparsityModel",
    "k_adjacency",
    "log_correction",
    "propose_model",
    "tpoi_logpmf",
    "tpoi_pmf",
    "tpoi_sample",
]


class JumpKind(enum.Enum):
    RETAIN = "retain"
    SPARSER = "sparser"
    DENSER = "denser"


@dataclass(frozen=True)
class SparsityModel:
    """A zero/non-zero pattern over a dx-by-dx matrix.

    ``dense_indices`` holds 1-based (row, col) pairs of entries allowed to be
    non-zero.  Instances are immutable and hashable.
    """

    dx: int
    dense_indices: frozenset

    def __post_init__(self):
        if self.dx < 1:
            raise ValueError("dx must be positive")
        pairs = frozenset((int(r), int(c)) for r, c in self.dense_indices)
        for r, c in pairs:
            if not (1 <= r <= self.dx and 1 <= c <= self.dx):
                raise ValueError(f"index {(r, c)} outside [1, {self.dx}]^2")
        object.__setattr__(self, "dense_indices", pairs)

    @classmethod
    def fully_dense(cls, dx: int) -> "SparsityModel":
        return cls(dx, frozenset((r, c) for r in range(1, dx + 1) for c in range(1, dx + 1)))

    @classmethod
    def fully_sparse(cls, dx: int) -> "SparsityModel":
        return cls(dx, frozenset())

    @property
    def n_dense(self) -> int:
        return len(self.dense_indices)

    @property
    def n_sparse(self) -> int:
        return self.dx * self.dx - len(self.dense_indices)

    @cached_property
    def sorted_indices(self) -> tuple:
        return tuple(sorted(self.dense_indices))

    @cached_property
    def sorted_sparse_indices(self) -> tuple:
        all_pairs = ((r, c) for r in range(1, self.dx + 1) for c in range(1, self.dx + 1))
        return tuple(p for p in all_pairs if p not in self.dense_indices)

    @cached_property
    def index_arrays(self) -> tuple:
        """0-based (rows, cols) arrays of the dense entries, sorted."""
        if not self.dense_indices:
            empty = np.zeros(0, dtype=np.intp)
            return empty, empty
        idx = np.array(self.sorted_indices, dtype=np.intp) - 1
        return idx[:, 0], idx[:, 1]

    def mask(self) -> np.ndarray:
        """Boolean dx-by-dx array, True where dense."""
        m = np.zeros((self.dx, self.dx), dtype=bool)
        rows, cols = self.index_arrays
        m[rows, cols] = True
        return m

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "SparsityModel":
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
            raise ValueError("mask must be square")
        rows, cols = np.nonzero(mask)
        return cls(mask.shape[0], frozenset(zip(rows + 1, cols + 1)))

    def to_bitstring(self) -> str:
        """Row-major 0/1 string of length dx^2, '1' marking dense entries."""
        return "".join(self.mask().astype(int).astype(str).ravel())

    @classmethod
    def from_bitstring(cls, bits: str) -> "SparsityModel":
        dx = math.isqrt(len(bits))
        if dx * dx != len(bits) or not set(bits) <= {"0", "1"}:
            raise ValueError("bitstring must be 0/1 of square length")
        arr = np.frombuffer(bits.encode(), dtype=np.uint8).reshape(dx, dx) == ord("1")
        return cls.from_mask(arr)

    def __contains__(self, pair) -> bool:
        return pair in self.dense_indices


@dataclass(frozen=True)
class ModelProposal:
    """Outcome of one model-proposal draw.

    ``forced`` marks jumps whose direction was deterministic because the
    previous model sat at a boundary of the model space (fully dense or
    fully sparse).
    """

    proposed: SparsityModel
    kind: JumpKind
    changed_indices: tuple
    forced: bool = False

    def __post_init__(self):
        if self.kind is JumpKind.RETAIN and self.changed_indices:
            raise ValueError("retain proposals change no indices")

    def previous_model(self) -> SparsityModel:
        """Reconstruct the model the proposal was made from."""
        if self.kind is JumpKind.RETAIN:
            return self.proposed
        changed = frozenset(self.changed_indices)
        if self.kind is JumpKind.SPARSER:
            return SparsityModel(self.proposed.dx, self.proposed.dense_indices | changed)
        return SparsityModel(self.proposed.dx, self.proposed.dense_indices - changed)


def _tpoi_logweights(lam: float, a: int, b: int) -> np.ndarray:
    ns = np.arange(a, b + 1)
    if lam == 0.0:
        # Point mass at a: the lam -> 0 limit of the truncated pmf.
        w = np.full(ns.shape, -np.inf)
        w[0] = 0.0
        return w
    return ns * np.log(lam) - np.array([math.lgamma(n + 1) for n in ns])


def tpoi_logpmf(n: int, lam: float, a: int, b: int) -> float:
    """Log-pmf of the Poisson(lam) distribution truncated to integers in [a, b]."""
    if a > b:
        raise ValueError("need a <= b")
    if lam < 0:
        raise ValueError("rate must be non-negative")
    if not (a <= n <= b):
        return -np.inf
    w = _tpoi_logweights(lam, a, b)
    wmax = w.max()
    logz = wmax + np.log(np.sum(np.exp(w - wmax)))
    return float(w[n - a] - logz)


def tpoi_pmf(n: int, lam: float, a: int, b: int) -> float:
    """Pmf of the Poisson(lam) distribution truncated to integers in [a, b].

    Returns 0 outside the support.  ``lam = 0`` is defined as a point mass
    at ``a``.
    """
    return float(np.exp(tpoi_logpmf(n, lam, a, b)))


def tpoi_sample(lam: float, a: int, b: int, seed) -> int:
    """Inverse-CDF draw from the truncated Poisson over [a, b].

    Consumes exactly one uniform from the generator.
    """
    if a > b:
        raise ValueError("need a <= b")
    if lam < 0:
        raise ValueError("rate must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    w = _tpoi_logweights(lam, a, b)
    p = np.exp(w - w.max())
    cdf = np.cumsum(p)
    u = rng.random() * cdf[-1]
    return a + int(np.searchsorted(cdf, u, side="right").clip(0, b - a))


def _select_without_replacement(items: list, k: int, rng: np.random.Generator) -> list:
    # Partial Fisher-Yates shuffle: uniform k-subset in selection order.
    items = list(items)
    n = len(items)
    for i in range(k):
        j = i + int(rng.integers(0, n - i))
        items[i], items[j] = items[j], items[i]
    return items[:k]


def propose_model(
    prev: SparsityModel,
    pi0: float,
    pi_minus1: float,
    lambda_j: float,
    seed,
) -> ModelProposal:
    """One draw of the model-jump kernel.

    Retains the previous model w.p. ``pi0``.  Otherwise jumps sparser w.p.
    ``pi_minus1`` (the direction is forced at the boundaries), with a jump
    length drawn from TPoi(lambda_j, 1, max distance) and the changed entries
    selected uniformly without replacement.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if rng.random() < pi0:
        return ModelProposal(prev, JumpKind.RETAIN, ())
    D, S = prev.n_dense, prev.n_sparse
    dx2 = prev.dx * prev.dx
    forced = False
    if D == 0:
        kind, forced = JumpKind.DENSER, True
    elif D == dx2:
        kind, forced = JumpKind.SPARSER, True
    else:
        kind = JumpKind.SPARSER if rng.random() < pi_minus1 else JumpKind.DENSER
    if kind is JumpKind.SPARSER:
        k = tpoi_sample(lambda_j, 1, D, rng)
        changed = _select_without_replacement(prev.sorted_indices, k, rng)
        dense = prev.dense_indices - frozenset(changed)
    else:
        k = tpoi_sample(lambda_j, 1, S, rng)
        changed = _select_without_replacement(prev.sorted_sparse_indices, k, rng)
        dense = prev.dense_indices | frozenset(changed)
    return ModelProposal(SparsityModel(prev.dx, dense), kind, tuple(changed), forced)


def k_adjacency(m1: SparsityModel, m2: SparsityModel):
    """Directed adjacency of two models.

    Returns ``(JumpKind.DENSER, k)`` when m1 is denser than m2 by exactly k
    entries (and sparser in none), ``(JumpKind.SPARSER, k)`` for the mirror
    case, and None when the models are equal or differ in both directions.
    """
    if m1.dx != m2.dx:
        raise ValueError("models have different dimensions")
    only1 = len(m1.dense_indices - m2.dense_indices)
    only2 = len(m2.dense_indices - m1.dense_indices)
    if only1 > 0 and only2 == 0:
        return (JumpKind.DENSER, only1)
    if only2 > 0 and only1 == 0:
        return (JumpKind.SPARSER, only2)
    return None


def log_correction(
    kind: JumpKind,
    J: int,
    D_before: int,
    S_before: int,
    pi_minus1: float,
    lambda_j: float,
    dx2: int,
) -> float:
    """Log ratio of reverse to forward model-jump probabilities.

    Accounts for the direction probability (replaced by 1 when the move is
    deterministic at a model-space boundary), the truncated-Poisson length
    pmf whose truncation bound differs between the two directions, and the
    uniform choice of the changed index set.  Everything is evaluated in
    log-space via log-gamma.
    """
    if J < 1:
        raise ValueError("J must be positive")
    if D_before + S_before != dx2:
        raise ValueError("D_before + S_before must equal dx2")
    if kind is JumpKind.SPARSER:
        if J > D_before:
            raise ValueError("cannot remove more entries than are dense")
        p_fwd = 1.0 if D_before == dx2 else pi_minus1
        p_rev = 1.0 if D_before - J == 0 else 1.0 - pi_minus1
        lognum = tpoi_logpmf(J, lambda_j, 1, S_before + J)
        logden = tpoi_logpmf(J, lambda_j, 1, D_before)
        logcomb = (
            math.lgamma(S_before + 1)
            + math.lgamma(D_before + 1)
            - math.lgamma(S_before + J + 1)
            - math.lgamma(D_before - J + 1)
        )
    elif kind is JumpKind.DENSER:
        if J > S_before:
            raise ValueError("cannot add more entries than are sparse")
        p_fwd = 1.0 if D_before == 0 else 1.0 - pi_minus1
        p_rev = 1.0 if D_before + J == dx2 else pi_minus1
        lognum = tpoi_logpmf(J, lambda_j, 1, D_before + J)
        logden = tpoi_logpmf(J, lambda_j, 1, S_before)
        logcomb = (
            math.lgamma(S_before + 1)
            + math.lgamma(D_before + 1)
            - math.lgamma(D_before + J + 1)
            - math.lgamma(S_before - J + 1)
        )
    else:
        raise ValueError("correction applies to sparser/denser jumps only")
    return math.log(p_rev) - math.log(p_fwd) + lognum - logden + logcomb
