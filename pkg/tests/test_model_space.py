import math

import numpy as np
import pytest

from sparselds import JumpKind, SparsityModel, k_adjacency, log_correction, propose_model
from sparselds.model_space import ModelProposal, tpoi_logpmf, tpoi_pmf, tpoi_sample

from oracles import tpoi_pmf_direct


class TestSparsityModel:
    def test_counts(self):
        m = SparsityModel(3, frozenset({(1, 1), (2, 3)}))
        assert m.n_dense == 2 and m.n_sparse == 7

    def test_rejects_out_of_range_index(self):
        with pytest.raises(ValueError):
            SparsityModel(2, frozenset({(3, 1)}))

    def test_fully_dense_and_sparse(self):
        assert SparsityModel.fully_dense(2).n_dense == 4
        assert SparsityModel.fully_sparse(2).n_dense == 0

    def test_mask_round_trip(self):
        m = SparsityModel(3, frozenset({(1, 2), (3, 3)}))
        assert SparsityModel.from_mask(m.mask()) == m

    def test_bitstring_round_trip(self):
        m = SparsityModel(2, frozenset({(1, 1), (1, 2), (2, 2)}))
        assert m.to_bitstring() == "1101"
        assert SparsityModel.from_bitstring("1101") == m

    def test_bitstring_rejects_bad_input(self):
        with pytest.raises(ValueError):
            SparsityModel.from_bitstring("110")
        with pytest.raises(ValueError):
            SparsityModel.from_bitstring("12a1")

    def test_membership_and_sorted_order(self):
        m = SparsityModel(2, frozenset({(2, 1), (1, 2)}))
        assert (2, 1) in m and (1, 1) not in m
        assert m.sorted_indices == ((1, 2), (2, 1))
        assert m.sorted_sparse_indices == ((1, 1), (2, 2))


class TestTruncatedPoisson:
    def test_single_point_support(self):
        assert tpoi_pmf(1, 0.1, 1, 1) == 1.0

    def test_two_point_value(self):
        # lam^1/1! over (lam^1/1! + lam^2/2!) with lam = 0.1 -> 20/21.
        assert tpoi_pmf(1, 0.1, 1, 2) == pytest.approx(20.0 / 21.0, rel=1e-12)
        assert tpoi_pmf(1, 0.1, 1, 2) == pytest.approx(0.952381, abs=1e-6)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            lam = rng.uniform(0.0, 5.0)
            a = int(rng.integers(1, 20))
            b = a + int(rng.integers(0, 15))
            n = int(rng.integers(a, b + 1))
            assert tpoi_pmf(n, lam, a, b) == pytest.approx(
                tpoi_pmf_direct(n, lam, a, b), rel=1e-10
            )

    def test_zero_outside_support(self):
        assert tpoi_pmf(3, 0.5, 1, 2) == 0.0
        assert tpoi_logpmf(0, 0.5, 1, 2) == -np.inf

    def test_lambda_zero_point_mass(self):
        assert tpoi_pmf(1, 0.0, 1, 5) == 1.0
        assert tpoi_pmf(2, 0.0, 1, 5) == 0.0

    def test_sample_degenerate_cases(self):
        rng = np.random.default_rng(1)
        assert all(tpoi_sample(0.0, 1, 5, rng) == 1 for _ in range(20))
        assert all(tpoi_sample(0.7, 3, 3, rng) == 3 for _ in range(20))

    def test_sample_frequency_matches_pmf(self):
        rng = np.random.default_rng(2)
        draws = np.array([tpoi_sample(0.1, 1, 2, rng) for _ in range(100_000)])
        assert abs(np.mean(draws == 1) - 20.0 / 21.0) < 0.01

    def test_rejects_invalid_arguments(self):
        with pytest.raises(ValueError):
            tpoi_pmf(1, 0.1, 3, 2)
        with pytest.raises(ValueError):
            tpoi_sample(-0.5, 1, 2, 0)


class TestProposeModel:
    def test_always_retain_at_pi0_one(self):
        m = SparsityModel(2, frozenset({(1, 1)}))
        rng = np.random.default_rng(0)
        for _ in range(50):
            prop = propose_model(m, 1.0, 0.5, 0.2, rng)
            assert prop.kind is JumpKind.RETAIN and prop.proposed == m

    def test_forced_sparser_from_fully_dense(self):
        m = SparsityModel(2, frozenset())
        full = SparsityModel.fully_dense(2)
        rng = np.random.default_rng(1)
        prop = propose_model(full, 0.0, 0.5, 0.2, rng)
        assert prop.kind is JumpKind.SPARSER and prop.forced
        prop = propose_model(m, 0.0, 0.5, 0.2, rng)
        assert prop.kind is JumpKind.DENSER and prop.forced

    def test_retention_frequency(self):
        m = SparsityModel(3, frozenset({(1, 1), (2, 2), (3, 3), (1, 2)}))
        rng = np.random.default_rng(3)
        retained = sum(
            propose_model(m, 0.8, 0.5, 0.2, rng).kind is JumpKind.RETAIN
            for _ in range(100_000)
        )
        assert abs(retained / 100_000 - 0.8) < 0.01

    def test_proposals_are_k_adjacent(self):
        rng = np.random.default_rng(4)
        m = SparsityModel(3, frozenset({(1, 1), (2, 2), (3, 3), (1, 3)}))
        for _ in range(500):
            prop = propose_model(m, 0.0, 0.5, 0.5, rng)
            adj = k_adjacency(m, prop.proposed)
            assert adj is not None
            kind, k = adj
            # k_adjacency reports the direction m sits relative to the
            # proposal: a sparser proposal leaves m denser.
            assert k == len(prop.changed_indices)
            assert (kind is JumpKind.DENSER) == (prop.kind is JumpKind.SPARSER)

    def test_previous_model_round_trip(self):
        rng = np.random.default_rng(5)
        m = SparsityModel(3, frozenset({(1, 1), (2, 2), (3, 1)}))
        for _ in range(200):
            prop = propose_model(m, 0.3, 0.5, 0.4, rng)
            assert prop.previous_model() == m

    def test_changed_indices_within_eligible_set(self):
        rng = np.random.default_rng(6)
        m = SparsityModel(2, frozenset({(1, 1), (2, 2)}))
        for _ in range(200):
            prop = propose_model(m, 0.0, 0.5, 0.6, rng)
            changed = set(prop.changed_indices)
            if prop.kind is JumpKind.SPARSER:
                assert changed <= m.dense_indices
            else:
                assert changed.isdisjoint(m.dense_indices)

    def test_two_hops_reach_any_model(self):
        # Sparser to the empty model, then denser to the target: both single
        # proposals with positive probability, for every pair on dx = 2.
        rng = np.random.default_rng(7)
        start = SparsityModel(2, frozenset({(1, 1), (2, 1)}))
        hit = set()
        for _ in range(3000):
            p1 = propose_model(start, 0.0, 1.0, 0.9, rng)  # always sparser
            if p1.proposed.n_dense == 0:
                p2 = propose_model(p1.proposed, 0.0, 0.0, 0.9, rng)  # denser
                hit.add(p2.proposed.to_bitstring())
        # Every non-empty model is reachable this way.
        assert len(hit) == 2 ** 4 - 1


class TestKAdjacency:
    def test_equal_models(self):
        m = SparsityModel(2, frozenset({(1, 1)}))
        assert k_adjacency(m, m) is None

    def test_denser_direction(self):
        m1 = SparsityModel(2, frozenset({(1, 1), (1, 2)}))
        m2 = SparsityModel(2, frozenset({(1, 1)}))
        assert k_adjacency(m1, m2) == (JumpKind.DENSER, 1)
        assert k_adjacency(m2, m1) == (JumpKind.SPARSER, 1)

    def test_mixed_difference(self):
        m1 = SparsityModel(2, frozenset({(1, 1)}))
        m2 = SparsityModel(2, frozenset({(2, 2)}))
        assert k_adjacency(m1, m2) is None

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            k_adjacency(SparsityModel.fully_dense(2), SparsityModel.fully_dense(3))


class TestLogCorrection:
    def test_antisymmetry_interior_and_boundary(self):
        for dx2 in (1, 4, 9):
            for D in range(1, dx2 + 1):
                S = dx2 - D
                for J in range(1, D + 1):
                    c_s = log_correction(JumpKind.SPARSER, J, D, S, 0.4, 0.3, dx2)
                    c_d = log_correction(JumpKind.DENSER, J, D - J, S + J, 0.4, 0.3, dx2)
                    assert abs(c_s + c_d) < 1e-12

    def test_boundary_from_fully_dense(self):
        # Leaving the fully dense model: the sparser move was forced
        # (probability 1) while the reverse denser move happens w.p.
        # 1 - pi_minus1, so that factor enters alone.
        pi, lam = 0.5, 0.2
        got = log_correction(JumpKind.SPARSER, 1, 4, 0, pi, lam, 4)
        want = math.log(
            (1.0 - pi)
            * tpoi_pmf(1, lam, 1, 1)
            / tpoi_pmf(1, lam, 1, 4)
            * (math.factorial(0) * math.factorial(4))
            / (math.factorial(1) * math.factorial(3))
        )
        assert got == pytest.approx(want, rel=1e-12)

    def test_interior_reduces_to_combinatorial_term(self):
        # pi_minus1 = 1/2 and matching truncation bounds (D = S + J) cancel
        # everything except the index-choice count.
        D, J = 4, 1
        S = D - J  # so S + J == D and both truncated pmfs coincide
        dx2 = D + S
        got = log_correction(JumpKind.SPARSER, J, D, S, 0.5, 0.3, dx2)
        want = math.log(
            (math.factorial(D) * math.factorial(S))
            / (math.factorial(S + J) * math.factorial(D - J))
        )
        assert got == pytest.approx(want, rel=1e-12)

    def test_scalar_model_space_correction_is_zero(self):
        # dx2 = 1: both directions are forced and all terms cancel.
        assert log_correction(JumpKind.SPARSER, 1, 1, 0, 0.5, 0.2, 1) == pytest.approx(0.0, abs=1e-15)
        assert log_correction(JumpKind.DENSER, 1, 0, 1, 0.5, 0.2, 1) == pytest.approx(0.0, abs=1e-15)

    def test_large_state_space_no_overflow(self):
        # D can be 144; factorials must be handled in log-space.
        val = log_correction(JumpKind.SPARSER, 5, 144, 0, 0.5, 0.2, 144)
        assert math.isfinite(val)

    def test_rejects_invalid_jump(self):
        with pytest.raises(ValueError):
            log_correction(JumpKind.SPARSER, 3, 2, 2, 0.5, 0.2, 4)
        with pytest.raises(ValueError):
            log_correction(JumpKind.RETAIN, 1, 2, 2, 0.5, 0.2, 4)


class TestModelProposalInvariants:
    def test_retain_with_changes_rejected(self):
        m = SparsityModel.fully_dense(2)
        with pytest.raises(ValueError):
            ModelProposal(m, JumpKind.RETAIN, ((1, 1),))
