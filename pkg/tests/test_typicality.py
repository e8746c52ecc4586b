import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from compound_sk.errors import BudgetError, DomainError
from compound_sk.prob import entropy, mutual_information
from compound_sk.typicality import (TypicalityParams, conditional_probability_bound,
                                    conditional_typical_set, count_windows,
                                    extension_log2count, extension_probability,
                                    is_jointly_typical, is_typical, self_information_surrogate,
                                    typical_probability, typical_set_size_bounds,
                                    windowed_multinomial_prob)

BIN_SEQS = {n: np.array(list(itertools.product((0, 1), repeat=n))) for n in (4, 6, 8)}


class TestParams:
    def test_ordering_enforced(self):
        with pytest.raises(DomainError):
            TypicalityParams(0.1, 0.1, 0.2, 0.3)

    def test_scaled_defaults(self):
        p = TypicalityParams.scaled(0.2)
        assert p.as_tuple() == pytest.approx((0.01, 0.02, 0.03, 0.04))


class TestMembership:
    def test_exact_type_is_typical(self):
        assert is_typical([0, 1, 1, 0, 2, 2], [1 / 3] * 3, 1e-6)

    def test_zero_mass_symbol(self):
        assert not is_typical([0, 0, 1, 0], [1.0, 0.0], 0.9)

    def test_n4_balanced_exactly_six(self):
        typ = [s for s in BIN_SEQS[4] if is_typical(s, [0.5, 0.5], 0.1)]
        assert len(typ) == math.comb(4, 2)
        assert all(s.sum() == 2 for s in typ)

    def test_diagonal_joint(self):
        x = np.array([0, 1, 1, 0, 1, 0])
        assert is_jointly_typical(x, x, np.diag([0.5, 0.5]), 0.05)

    def test_zero_cell_pair(self):
        j = np.array([[0.5, 0.0], [0.25, 0.25]])
        assert not is_jointly_typical([0, 1], [1, 1], j, 0.9)

    @given(st.integers(1, 10), st.integers(0, 2 ** 20), st.floats(0.02, 0.4))
    def test_literal_oracle(self, n, seed, eps):
        rng = np.random.default_rng(seed)
        j = rng.dirichlet(np.ones(4)).reshape(2, 2)
        j[rng.random((2, 2)) < 0.2] = 0
        j = j / j.sum() if j.sum() > 0 else np.full((2, 2), 0.25)
        x, y = rng.integers(0, 2, n), rng.integers(0, 2, n)
        assert is_jointly_typical(x, y, j, eps) == oracles.jointly_typical_literal(
            list(x), list(y), j.tolist(), eps)

    @given(st.integers(0, 2 ** 20), st.floats(0.01, 0.3), st.floats(0.0, 0.3))
    def test_monotone_in_eps(self, seed, eps, extra):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(3))
        x = rng.choice(3, size=12, p=p)
        if is_typical(x, p, eps):
            assert is_typical(x, p, eps + extra)


class TestConditional:
    def test_identity_channel(self):
        x = np.array([0, 2, 1, 1])
        assert conditional_typical_set(x, np.eye(3), 1e-3)(x)

    def test_zero_row_entry(self):
        w = np.array([[1.0, 0.0], [0.5, 0.5]])
        assert not conditional_typical_set([0, 0, 1], w, 0.9)([1, 0, 1])

    def test_bsc_n6_counts(self):
        w = np.array([[0.75, 0.25], [0.25, 0.75]])
        ys = BIN_SEQS[6]
        for x in BIN_SEQS[6]:
            member = conditional_typical_set(x, w, 0.2)
            count = sum(member(y) for y in ys)
            assert count == oracles.COND_TYPICAL_N6[int(x.sum())]

    def test_inclusion_marginal_to_joint(self):
        # typical x and conditionally typical y (slack zeta - xi) give typical pairs
        px = np.array([0.5, 0.5])
        w = np.array([[0.8, 0.2], [0.3, 0.7]])
        joint = px[:, None] * w
        xi, zeta = 0.05, 0.15
        for x in BIN_SEQS[8]:
            if not is_typical(x, px, xi):
                continue
            member = conditional_typical_set(x, w, zeta - xi)
            for y in BIN_SEQS[8]:
                if member(y):
                    assert is_jointly_typical(x, y, joint, zeta)


class TestProbability:
    def test_point_mass(self):
        assert typical_probability([1.0, 0.0], 50, 0.01).empirical == pytest.approx(1.0)

    def test_n4_uniform(self):
        r = typical_probability([0.5, 0.5], 4, 0.1)
        assert r.empirical == pytest.approx(6 / 16, abs=1e-15)
        assert r.bound == pytest.approx(1 - 4 * math.exp(-0.08)) and r.bound < 0

    def test_ber03_n1000(self):
        r = typical_probability([0.7, 0.3], 1000, 0.05)
        assert r.empirical == pytest.approx(oracles.TYPICAL_BER03_N1000, abs=1e-10)
        assert r.empirical >= 1 - 4 * math.exp(-5)

    @given(st.integers(1, 300), st.floats(0.005, 0.3), st.floats(0.05, 0.95))
    def test_binomial_oracle(self, n, xi, p1):
        got = typical_probability([1 - p1, p1], n, xi).empirical
        assert got == pytest.approx(oracles.binary_typical_probability(n, p1, xi), abs=1e-9)

    def test_dp_matches_enumeration_ternary(self):
        p = np.array([0.2, 0.5, 0.3])
        n, eps = 7, 0.15
        lo, hi = count_windows(p, n, eps)
        total = 0.0
        for seq in itertools.product(range(3), repeat=n):
            c = np.bincount(seq, minlength=3)
            if np.all((c >= lo) & (c <= hi)):
                total += float(np.prod(p[list(seq)]))
        assert windowed_multinomial_prob(n, p, lo, hi) == pytest.approx(total, abs=1e-12)

    def test_budget_guard(self):
        with pytest.raises(BudgetError):
            typical_probability([0.5, 0.5], 30000, 0.1)

    def test_conditional_bound_on_markov_triples(self):
        # U - X - Y Markov; probability that (U, X, Y) is typical at sigma
        # given typical (x, y) is at least the stated bound
        px = np.array([0.5, 0.5])
        w_y = np.array([[0.9, 0.1], [0.2, 0.8]])
        w_u = np.array([[0.7, 0.3], [0.4, 0.6]])
        n, xi, sigma = 400, 0.02, 0.12
        xy = px[:, None] * w_y
        counts = np.rint(xy * n).astype(int)
        counts[0, 0] += n - counts.sum()
        law = np.broadcast_to(w_u[:, None, :], (2, 2, 2))
        joint = np.einsum("xy,xu->xyu", xy, w_u)
        prob = extension_probability(counts, law, joint, n, sigma)
        assert prob >= conditional_probability_bound(8, n, sigma, xi)


class TestSizes:
    def test_point_mass(self):
        s = typical_set_size_bounds([1.0, 0.0], 30, 0.1)
        assert s.log_count == 0.0 and s.entropy == 0.0

    def test_uniform_everything(self):
        s = typical_set_size_bounds([0.5, 0.5], 20, 0.5)
        assert s.log_count == pytest.approx(20.0) and s.rate == pytest.approx(1.0)

    def test_ber03_n200(self):
        s = typical_set_size_bounds([0.7, 0.3], 200, 0.02, tau=0.05)
        ref = math.log2(oracles.binary_typical_count(200, 0.3, 0.02)) / 200
        assert s.rate == pytest.approx(ref, abs=1e-10)
        assert s.inside

    def test_self_information_window(self):
        # every typical sequence has per-symbol surprisal within tau of H
        p = np.array([0.2, 0.8])
        xi = 0.05
        tau = self_information_surrogate(p, xi)
        h = entropy(p)
        for x in BIN_SEQS[8]:
            if is_typical(x, p, xi):
                surprisal = -np.log2(p[x]).sum() / 8
                assert abs(surprisal - h) <= tau + 1e-12

    def test_conditional_set_exponent(self):
        # (1/n) log P(T_[X|Y](y)) is close to -I(X;Y) for a typical y
        pxy = np.array([[0.4, 0.1], [0.1, 0.4]])
        n, eps = 400, 0.02
        py = pxy.sum(axis=0)
        y_counts = np.rint(py * n).astype(int)
        px = pxy.sum(axis=1)
        law = np.tile(px, (2, 1))                # X drawn from P_X, independent of y
        joint = pxy.T                             # axes (y, x)
        prob = extension_probability(y_counts, law, joint, n, eps)
        rate = math.log2(prob) / n
        assert abs(rate + mutual_information(pxy)) < 0.12

    def test_extension_count_matches_enumeration(self):
        joint = np.array([[0.3, 0.2], [0.1, 0.4]])      # (y, x)
        n, eps = 8, 0.15
        y = np.array([0, 0, 0, 0, 0, 1, 1, 1])
        count = sum(is_jointly_typical(y, x, joint, eps) for x in BIN_SEQS[8])
        ctx = np.bincount(y, minlength=2)
        got = extension_log2count(ctx, joint, n, eps)
        assert got == pytest.approx(math.log2(count), abs=1e-10)
