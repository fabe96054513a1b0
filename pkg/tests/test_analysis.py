import re
from itertools import product

import numpy as np
import pytest

from sparselds import (
    Chain,
    EdgeGraph,
    SparsityModel,
    bootstrap_edge_interval,
    classify_sparsity,
    compute_metrics,
    edge_probabilities,
    export_dot,
    posterior_mean,
    trace_diagnostics,
)


def chain_from_As(As, masks=None):
    As = np.asarray(As, dtype=float)
    if masks is None:
        masks = As != 0.0
    return Chain(As, np.zeros(len(As)), np.asarray(masks, dtype=bool))


def check_dot_grammar(text):
    """Minimal reference DOT well-formedness check.

    Accepts: a 'digraph NAME {' header, quoted node statements, quoted
    edge statements with an optional [key=value, ...] attribute list, and
    a closing brace.
    """
    lines = [ln.strip() for ln in text.strip().splitlines()]
    assert re.fullmatch(r"digraph \w+ \{", lines[0])
    assert lines[-1] == "}"
    node_re = re.compile(r'"[^"]+";')
    edge_re = re.compile(r'"[^"]+" -> "[^"]+"( \[(\w+=[^,\]]+)(, \w+=[^,\]]+)*\])?;')
    for ln in lines[1:-1]:
        assert node_re.fullmatch(ln) or edge_re.fullmatch(ln), ln


class TestPosteriorMean:
    def test_constant_chain(self):
        A = np.array([[0.5, 0.0], [0.2, -0.1]])
        chain = chain_from_As([A] * 5)
        assert np.array_equal(posterior_mean(chain, 0), A)

    def test_two_sample_average(self):
        chain = chain_from_As([[[0.0]], [[0.0]], [[0.0]], [[2.0]]])
        assert posterior_mean(chain, 2) == pytest.approx(np.array([[1.0]]))

    def test_always_sparse_entry_exactly_zero(self):
        As = [np.array([[0.5, 0.0], [0.3, 0.1]]) for _ in range(4)]
        chain = chain_from_As(As)
        assert posterior_mean(chain, 1)[0, 1] == 0.0

    def test_burn_in_bounds(self):
        chain = chain_from_As([[[1.0]]] * 3)
        with pytest.raises(ValueError):
            posterior_mean(chain, 3)


class TestClassifySparsity:
    def _chain_with_fraction(self, frac_sparse, n=10):
        # Entry (1, 2) sparse in round(frac*n) of n samples.
        masks = np.ones((n, 2, 2), dtype=bool)
        k = int(round(frac_sparse * n))
        masks[:k, 0, 1] = False
        As = np.where(masks, 0.5, 0.0)
        return Chain(As, np.zeros(n), masks)

    def test_all_dense_stays_dense(self):
        m = classify_sparsity(self._chain_with_fraction(0.0), 0)
        assert (1, 2) in m

    def test_majority_sparse(self):
        m = classify_sparsity(self._chain_with_fraction(0.6), 0)
        assert (1, 2) not in m

    def test_exact_tie_classified_dense(self):
        m = classify_sparsity(self._chain_with_fraction(0.5), 0)
        assert (1, 2) in m


class TestComputeMetrics:
    def test_perfect_recovery(self):
        mask = SparsityModel(2, frozenset({(1, 1), (2, 2)}))
        A = np.diag([0.5, 0.3])
        m = compute_metrics(mask, mask, A, A)
        assert (m.specificity, m.recall, m.precision, m.f1) == (1.0, 1.0, 1.0, 1.0)
        assert m.rmse == 0.0

    def test_fully_dense_estimate(self):
        est = SparsityModel.fully_dense(2)
        true = SparsityModel(2, frozenset({(1, 1)}))  # 3 sparse entries
        m = compute_metrics(est, true, np.ones((2, 2)), np.ones((2, 2)))
        assert m.specificity == 1.0 and m.recall == 0.0
        assert m.precision is None and m.f1 == 0.0
        assert m.as_row()["prec"] == "--"

    def test_balanced_confusion_matrix(self):
        # 2x2: TP=(1,1), FP=(1,2), FN=(2,1), TN=(2,2).
        est = SparsityModel(2, frozenset({(2, 1), (2, 2)}))  # sparse: (1,1),(1,2)
        true = SparsityModel(2, frozenset({(1, 2), (2, 2)}))  # sparse: (1,1),(2,1)
        m = compute_metrics(est, true, np.zeros((2, 2)), np.zeros((2, 2)))
        assert m.precision == m.recall == m.specificity == 0.5
        assert m.f1 == 0.5

    def test_rmse_entrywise(self):
        mask = SparsityModel.fully_dense(2)
        A_est = np.zeros((2, 2))
        A_true = np.full((2, 2), 2.0)
        m = compute_metrics(mask, mask, A_est, A_true)
        assert m.rmse == pytest.approx(2.0)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(0)
        A_true = rng.standard_normal((3, 3))
        A_est = A_true + 0.1 * rng.standard_normal((3, 3))
        est = SparsityModel.from_mask(rng.random((3, 3)) > 0.4)
        true = SparsityModel.from_mask(rng.random((3, 3)) > 0.4)
        perm = rng.permutation(3)
        m1 = compute_metrics(est, true, A_est, A_true)
        m2 = compute_metrics(
            SparsityModel.from_mask(est.mask()[perm][:, perm]),
            SparsityModel.from_mask(true.mask()[perm][:, perm]),
            A_est[perm][:, perm],
            A_true[perm][:, perm],
        )
        assert m1 == m2

    def test_f1_harmonic_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            est = SparsityModel.from_mask(rng.random((3, 3)) > 0.5)
            true = SparsityModel.from_mask(rng.random((3, 3)) > 0.5)
            m = compute_metrics(est, true, np.zeros((3, 3)), np.zeros((3, 3)))
            if m.precision is not None and m.precision + m.recall > 0:
                assert m.f1 == pytest.approx(
                    2 * m.precision * m.recall / (m.precision + m.recall)
                )


class TestEdgeProbabilities:
    def test_extremes_and_counting(self):
        masks = np.ones((4, 2, 2), dtype=bool)
        masks[:, 0, 1] = False  # always sparse
        masks[0, 1, 0] = False  # dense in 3 of 4
        chain = Chain(np.where(masks, 0.5, 0.0), np.zeros(4), masks)
        g = edge_probabilities([chain], 0)
        assert g.prob[0, 0] == 1.0
        assert g.prob[0, 1] == 0.0
        assert g.prob[1, 0] == 0.75

    def test_complement_identity(self):
        rng = np.random.default_rng(2)
        masks = rng.random((20, 3, 3)) > 0.5
        chain = Chain(np.where(masks, 1.0, 0.0), np.zeros(20), masks)
        g = edge_probabilities([chain], 4)
        sparse_frac = (~chain.masks[4:]).mean(axis=0)
        assert np.max(np.abs(g.prob + sparse_frac - 1.0)) == 0.0

    def test_pools_across_chains(self):
        dense = chain_from_As([np.ones((1, 1))] * 2)
        sparse = Chain(np.zeros((2, 1, 1)), np.zeros(2), np.zeros((2, 1, 1), dtype=bool))
        g = edge_probabilities([dense, sparse], 0)
        assert g.prob[0, 0] == 0.5

    def test_requires_a_chain(self):
        with pytest.raises(ValueError):
            edge_probabilities([], 0)


class TestBootstrap:
    def test_degenerate_all_ones(self):
        assert bootstrap_edge_interval([1.0] * 5, 0.95, 200, seed=0) == (1.0, 1.0)

    def test_degenerate_all_zeros(self):
        assert bootstrap_edge_interval([0.0] * 5, 0.95, 200, seed=0) == (0.0, 0.0)

    def test_split_frequencies_cover_half(self):
        low, high = bootstrap_edge_interval([0.0, 1.0, 0.0, 1.0], 0.95, 20_000, seed=1)
        assert low <= 0.5 <= high
        # Exhaustive resampling oracle on 4 chains: means live on {0, .25,
        # .5, .75, 1}; the 95% percentile interval cannot be degenerate.
        means = sorted(
            np.mean(pick) for pick in product([0.0, 1.0, 0.0, 1.0], repeat=4)
        )
        assert low >= means[0] and high <= means[-1]

    def test_requires_two_chains(self):
        with pytest.raises(ValueError):
            bootstrap_edge_interval([1.0], 0.95, 100, seed=0)


class TestTraceDiagnostics:
    def test_identity_chain(self):
        chain = chain_from_As([np.eye(3)] * 4)
        norms, counts = trace_diagnostics(chain)
        assert np.allclose(norms, 1.0)
        assert np.all(counts == 6)  # off-diagonal entries are sparse

    def test_fully_sparse_sample(self):
        chain = Chain(np.zeros((1, 2, 2)), np.zeros(1), np.zeros((1, 2, 2), dtype=bool))
        norms, counts = trace_diagnostics(chain)
        assert norms[0] == 0.0 and counts[0] == 4

    def test_spectral_norm_matches_svd(self):
        rng = np.random.default_rng(3)
        As = rng.standard_normal((10, 3, 3))
        chain = chain_from_As(As, masks=np.ones((10, 3, 3), dtype=bool))
        norms, _ = trace_diagnostics(chain)
        for i in range(10):
            top = np.linalg.svd(As[i], compute_uv=False)[0]
            assert abs(norms[i] - top) / top < 1e-8


class TestExportDot:
    def test_nodes_only_below_threshold(self):
        g = EdgeGraph(2, np.zeros((2, 2)), ())
        text = export_dot(g, 0.5)
        check_dot_grammar(text)
        assert "->" not in text
        assert '"x1";' in text and '"x2";' in text

    def test_single_certain_edge_max_penwidth(self):
        prob = np.zeros((2, 2))
        prob[0, 1] = 1.0
        text = export_dot(EdgeGraph(2, prob, ()), 0.5)
        check_dot_grammar(text)
        assert '"x2" -> "x1" [penwidth=5.000, label="1.00"];' in text

    def test_self_loop_suppression(self):
        prob = np.eye(2)
        with_loops = export_dot(EdgeGraph(2, prob, ()), 0.5, include_self_loops=True)
        without = export_dot(EdgeGraph(2, prob, ()), 0.5, include_self_loops=False)
        assert '"x1" -> "x1"' in with_loops
        assert "->" not in without

    def test_custom_labels_and_grammar(self):
        rng = np.random.default_rng(4)
        g = EdgeGraph(3, rng.random((3, 3)), ("alpha", "beta", "gamma"))
        text = export_dot(g, 0.3)
        check_dot_grammar(text)
        assert '"alpha";' in text

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            export_dot(EdgeGraph(1, [[0.5]], ()), 1.5)


class TestEdgeGraphValidation:
    def test_rejects_bad_probabilities(self):
        with pytest.raises(ValueError):
            EdgeGraph(1, [[1.5]], ())

    def test_rejects_label_mismatch(self):
        with pytest.raises(ValueError):
            EdgeGraph(2, np.zeros((2, 2)), ("only-one",))
