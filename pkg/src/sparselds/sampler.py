"""Reversible-jump sampler for the transition-matrix posterior.

Each iteration proposes a sparsity model (retain / sparser / denser), maps or
walks the transition matrix accordingly, evaluates the Kalman likelihood
exactly once, and jointly accepts or rejects the pair.  Accepted samples
carry exact zeros at sparse positions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from ._filtering import loglik_core
from .lgssm import FilterError, ModelParams, _check_cov, _check_series, as_rng
from .model_space import (
    JumpKind,
    ModelProposal,
    SparsityModel,
    log_correction,
    propose_model,
)

__all__ = [
    "Chain",
    "ChainState",
    "KnownParams",
    "LaplaceDist",
    "SamplerConfig",
    "StepDiagnostics",
    "dense_mcmc_run",
    "lambda_penalty",
    "load_chain_jsonl",
    "propose_parameter",
    "rj_run",
    "rj_step",
    "save_chain_jsonl",
]


@dataclass(frozen=True)
class LaplaceDist:
    """Laplace distribution; used for walk steps and completion draws."""

    location: float
    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def log_density(self, x):
        return -np.log(2.0 * self.scale) - np.abs(np.asarray(x) - self.location) / self.scale

    def density(self, x):
        return np.exp(self.log_density(x))

    def sample(self, rng: np.random.Generator, size=None):
        return rng.laplace(self.location, self.scale, size=size)


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler hyper-parameters.

    Defaults follow the recommended operating point: retain the model w.p.
    0.8, jump sparser w.p. 0.5, jump-length rate 0.2, walk and completion
    scales 0.1, L1 prior weight 1.
    """

    pi0: float = 0.8
    pi_minus1: float = 0.5
    lambda_prior: float = 1.0
    lambda_j: float = 0.2
    sigma_walk: float = 0.1
    sigma_completion: float = 0.1
    n_iters: int = 15000
    burn_in: int = 5000

    def __post_init__(self):
        if not (0.0 <= self.pi0 <= 1.0 and 0.0 <= self.pi_minus1 <= 1.0):
            raise ValueError("pi0 and pi_minus1 must be probabilities")
        if self.lambda_prior < 0:
            raise ValueError("lambda_prior must be non-negative")
        if not (0.0 <= self.lambda_j < 1.0):
            raise ValueError("lambda_j must lie in [0, 1)")
        if self.sigma_walk <= 0 or self.sigma_completion <= 0:
            raise ValueError("walk scales must be positive")
        if self.n_iters < 1:
            raise ValueError("n_iters must be positive")
        if not (0 <= self.burn_in < self.n_iters):
            raise ValueError("need 0 <= burn_in < n_iters")


@dataclass(frozen=True)
class KnownParams:
    """All model parameters except the transition matrix."""

    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    x0_mean: np.ndarray
    P0: np.ndarray

    def __post_init__(self):
        for name in ("H", "Q", "R", "x0_mean", "P0"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if self.H.ndim != 2:
            raise ValueError("H must be a matrix")
        dx = self.H.shape[1]
        dy = self.H.shape[0]
        if self.x0_mean.shape != (dx,):
            raise ValueError(f"x0_mean must have length {dx}")
        _check_cov("Q", self.Q, dx)
        _check_cov("R", self.R, dy)
        _check_cov("P0", self.P0, dx)

    @property
    def dx(self) -> int:
        return self.H.shape[1]

    @property
    def dy(self) -> int:
        return self.H.shape[0]

    @classmethod
    def from_params(cls, params: ModelParams) -> "KnownParams":
        return cls(params.H, params.Q, params.R, params.x0_mean, params.P0)

    def with_transition(self, A: np.ndarray) -> ModelParams:
        return ModelParams(A, self.H, self.Q, self.R, self.x0_mean, self.P0)


@dataclass(frozen=True)
class ChainState:
    """One retained sample: transition matrix, its model, and log-likelihood."""

    A: np.ndarray
    model: SparsityModel
    log_lik: float


@dataclass
class StepDiagnostics:
    kind: JumpKind
    accepted: bool
    log_accept_ratio: float
    filter_failed: bool = False


@dataclass
class Chain:
    """Ordered sampler output stored as dense arrays.

    ``A`` has shape (N, dx, dx); ``masks`` is True where an entry was dense
    in that sample.  Counters are None for chains read back from disk.
    """

    A: np.ndarray
    log_liks: np.ndarray
    masks: np.ndarray
    accept_count_within: int | None = None
    accept_count_jump: int | None = None
    propose_count_jump: int | None = None
    n_filter_evals: int | None = None
    filter_failures: int | None = None

    def __len__(self) -> int:
        return self.A.shape[0]

    @property
    def dx(self) -> int:
        return self.A.shape[1]

    def state(self, i: int) -> ChainState:
        return ChainState(
            self.A[i].copy(),
            SparsityModel.from_mask(self.masks[i]),
            float(self.log_liks[i]),
        )

    def __iter__(self):
        return (self.state(i) for i in range(len(self)))

    @property
    def within_acceptance_rate(self) -> float:
        n_within = len(self) - self.propose_count_jump
        return self.accept_count_within / max(n_within, 1)


def lambda_penalty(A_prev: np.ndarray, A_prop: np.ndarray, lambda_prior: float) -> float:
    """L1 prior log-ratio: lambda * (||A_prev||_1 - ||A_prop||_1), entrywise."""
    A_prev = np.asarray(A_prev, dtype=float)
    A_prop = np.asarray(A_prop, dtype=float)
    if A_prev.shape != A_prop.shape:
        raise ValueError("matrices must have the same shape")
    return float(lambda_prior * (np.abs(A_prev).sum() - np.abs(A_prop).sum()))


def propose_parameter(
    A_prev: np.ndarray,
    proposal: ModelProposal,
    sigma_walk: float,
    sigma_completion: float,
    seed,
) -> tuple[np.ndarray, float]:
    """Map or walk the transition matrix according to a model proposal.

    Retain: every dense entry takes an independent Laplace(0, sigma_walk)
    step; completion term 0.  Sparser: the removed entries are zeroed and the
    completion term is the summed log-density of their old values under the
    completion distribution.  Denser: the added entries are drawn from
    Laplace(0, sigma_completion) and the term is minus their summed
    log-density.  All other entries are copied verbatim.
    """
    rng = as_rng(seed)
    A_prev = np.asarray(A_prev, dtype=float)
    prev_model = proposal.previous_model()
    if A_prev.shape != (prev_model.dx, prev_model.dx):
        raise ValueError("A_prev shape does not match the proposal's model")
    off = A_prev[~prev_model.mask()]
    if off.size and np.any(off != 0.0):
        raise ValueError("A_prev has non-zero entries outside its dense set")
    g = LaplaceDist(0.0, sigma_completion)
    A_prop = A_prev.copy()
    if proposal.kind is JumpKind.RETAIN:
        rows, cols = proposal.proposed.index_arrays
        if rows.size:
            A_prop[rows, cols] += rng.laplace(0.0, sigma_walk, size=rows.size)
        return A_prop, 0.0
    idx = np.array(proposal.changed_indices, dtype=np.intp) - 1
    rows, cols = idx[:, 0], idx[:, 1]
    if proposal.kind is JumpKind.SPARSER:
        c = float(np.sum(g.log_density(A_prop[rows, cols])))
        A_prop[rows, cols] = 0.0
    else:
        u = rng.laplace(0.0, sigma_completion, size=rows.size)
        A_prop[rows, cols] = u
        c = -float(np.sum(g.log_density(u)))
    return A_prop, c


def _loglik_or_none(known: KnownParams, A: np.ndarray, y: np.ndarray):
    try:
        ll = loglik_core(A, known.H, known.Q, known.R, known.x0_mean, known.P0, y)
    except np.linalg.LinAlgError:
        return None
    if not math.isfinite(ll):
        return None
    return float(ll)


def rj_step(
    state: ChainState,
    params_known: KnownParams,
    y: np.ndarray,
    config: SamplerConfig,
    seed,
) -> tuple[ChainState, StepDiagnostics]:
    """One sampler iteration: propose model and matrix, joint accept-reject.

    Performs exactly one Kalman likelihood evaluation.  A proposal on which
    the filter fails numerically is treated as having log-likelihood -inf
    (certain rejection) and flagged in the diagnostics.

    The generator is consumed in a fixed order (retain draw, direction draw,
    length draw, index selection, parameter draws, acceptance draw) so runs
    with the model fixed are reproducible stream-for-stream.
    """
    rng = as_rng(seed)
    proposal = propose_model(state.model, config.pi0, config.pi_minus1, config.lambda_j, rng)
    A_prop, c = propose_parameter(
        state.A, proposal, config.sigma_walk, config.sigma_completion, rng
    )
    if proposal.kind is not JumpKind.RETAIN:
        c += log_correction(
            proposal.kind,
            len(proposal.changed_indices),
            state.model.n_dense,
            state.model.n_sparse,
            config.pi_minus1,
            config.lambda_j,
            state.model.dx ** 2,
        )
    l_prop = _loglik_or_none(params_known, A_prop, y)
    failed = l_prop is None
    if failed:
        log_ar = -np.inf
    else:
        log_ar = (
            l_prop
            - state.log_lik
            + lambda_penalty(state.A, A_prop, config.lambda_prior)
            + c
        )
    u = rng.random()
    accepted = log_ar >= 0.0 or (u > 0.0 and math.log(u) < log_ar)
    diag = StepDiagnostics(proposal.kind, accepted, float(log_ar), failed)
    if accepted:
        return ChainState(A_prop, proposal.proposed, l_prop), diag
    return state, diag


def rj_run(params_known, A0: np.ndarray, y: np.ndarray, config: SamplerConfig, seed) -> Chain:
    """Run the sparsity-exploring sampler for ``config.n_iters`` iterations.

    The initial model is fully dense regardless of zeros in ``A0``; the
    initial log-likelihood is evaluated from ``A0`` before any proposal (a
    filter failure there is fatal).  All iterations are stored; burn-in is
    discarded only at analysis time.
    """
    if isinstance(params_known, ModelParams):
        params_known = KnownParams.from_params(params_known)
    rng = as_rng(seed)
    A0 = np.asarray(A0, dtype=float)
    dx = params_known.dx
    if A0.shape != (dx, dx):
        raise ValueError(f"A0 must be {dx}x{dx}")
    if not np.isfinite(A0).all():
        raise ValueError("A0 must be finite")
    y = _check_series(params_known.with_transition(A0), y)
    l0 = _loglik_or_none(params_known, A0, y)
    if l0 is None:
        raise FilterError("filter failed on the initial transition matrix")
    state = ChainState(A0.copy(), SparsityModel.fully_dense(dx), l0)
    N = config.n_iters
    A_out = np.zeros((N, dx, dx))
    ll_out = np.zeros(N)
    mask_out = np.zeros((N, dx, dx), dtype=bool)
    acc_within = acc_jump = prop_jump = failures = 0
    cur_mask = state.model.mask()
    for n in range(N):
        new_state, diag = rj_step(state, params_known, y, config, rng)
        if diag.kind is not JumpKind.RETAIN:
            prop_jump += 1
            if diag.accepted:
                acc_jump += 1
        elif diag.accepted:
            acc_within += 1
        if diag.filter_failed:
            failures += 1
        if new_state.model is not state.model:
            cur_mask = new_state.model.mask()
        state = new_state
        A_out[n] = state.A
        ll_out[n] = state.log_lik
        mask_out[n] = cur_mask
    return Chain(
        A_out,
        ll_out,
        mask_out,
        accept_count_within=acc_within,
        accept_count_jump=acc_jump,
        propose_count_jump=prop_jump,
        n_filter_evals=N,
        filter_failures=failures,
    )


def dense_mcmc_run(params_known, A0: np.ndarray, y: np.ndarray, config: SamplerConfig, seed) -> Chain:
    """Reference chain with the model fixed fully dense.

    Identical loop with the model-jump branch never taken, i.e. retention
    probability forced to 1; with ``pi0 = 1`` the sparsity-exploring run is
    stream-for-stream identical to this baseline.
    """
    return rj_run(params_known, A0, y, replace(config, pi0=1.0), seed)


def save_chain_jsonl(chain: Chain, path, compact: bool = False) -> None:
    """Write one JSON record per iteration: iter, loglik, mask bitstring, A.

    In compact mode the (row-major) A array is stored only on iterations
    where it changed.
    """
    dx = chain.dx
    with open(path, "w") as fh:
        prev = None
        for i in range(len(chain)):
            bits = "".join("1" if b else "0" for b in chain.masks[i].ravel())
            rec = {"iter": i + 1, "loglik": float(chain.log_liks[i]), "mask": bits}
            flat = chain.A[i].ravel().tolist()
            if not (compact and prev is not None and flat == prev):
                rec["A"] = flat
            prev = flat
            fh.write(json.dumps(rec) + "\n")


def load_chain_jsonl(path) -> Chain:
    """Read a chain written by :func:`save_chain_jsonl` (either mode)."""
    A_list, ll_list, mask_list = [], [], []
    prev = None
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            flat = rec.get("A", prev)
            if flat is None:
                raise ValueError("first record of a chain file must carry A")
            prev = flat
            dx = int(round(math.sqrt(len(flat))))
            A_list.append(np.array(flat, dtype=float).reshape(dx, dx))
            ll_list.append(float(rec["loglik"]))
            mask_list.append(
                np.array([ch == "1" for ch in rec["mask"]], dtype=bool).reshape(dx, dx)
            )
    if not A_list:
        raise ValueError(f"empty chain file: {path}")
    return Chain(np.array(A_list), np.array(ll_list), np.array(mask_list))
