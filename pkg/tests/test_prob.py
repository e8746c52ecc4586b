import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from compound_sk.errors import DomainError
from compound_sk.prob import (as_pmf, binary_entropy, conditional_entropy,
                              conditional_mutual_information, entropy, marginalize,
                              mutual_information, variational_distance)


def pmf_arrays(shape):
    masses = st.one_of(st.just(0.0), st.floats(1e-3, 1.0))
    return arrays(float, shape, elements=masses).filter(
        lambda a: a.sum() > 1e-3).map(lambda a: a / a.sum())


class TestEntropy:
    def test_uniform_four(self):
        assert entropy(np.full(4, 0.25)) == pytest.approx(2.0, abs=1e-15)

    def test_point_mass(self):
        assert entropy([0.0, 1.0, 0.0]) == 0.0

    def test_bernoulli_02(self):
        assert entropy([0.2, 0.8]) == pytest.approx(oracles.H_02, abs=1e-12)

    def test_binary_entropy_values(self):
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.22) == pytest.approx(oracles.H_022, abs=1e-12)

    @pytest.mark.parametrize("bad", [-0.01, 1.5, float("nan")])
    def test_binary_entropy_domain(self, bad):
        with pytest.raises(DomainError):
            binary_entropy(bad)

    @given(pmf_arrays(5))
    def test_bounds(self, p):
        h = entropy(p)
        assert -1e-12 <= h <= math.log2(5) + 1e-12

    @given(pmf_arrays((3, 4)))
    def test_chain_rule(self, j):
        h_xy = entropy(j)
        h_x = entropy(j.sum(axis=1))
        assert h_xy == pytest.approx(h_x + conditional_entropy(j, 0), abs=1e-12)


class TestPmfValidation:
    def test_clamps_tiny_negative(self):
        arr = as_pmf([0.5, 0.5 + 5e-13, -5e-13])
        assert arr[2] == 0.0

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            as_pmf([1.1, -0.1])

    def test_rejects_bad_total(self):
        with pytest.raises(DomainError):
            as_pmf([0.5, 0.6])


class TestMutualInformation:
    def test_product_is_zero(self):
        assert mutual_information(np.outer([0.3, 0.7], [0.1, 0.9])) == pytest.approx(0, abs=1e-15)

    def test_copy(self):
        assert mutual_information(np.diag([0.5, 0.5])) == pytest.approx(1.0)

    def test_bsc(self):
        j = 0.5 * np.array([[0.8, 0.2], [0.2, 0.8]])
        assert mutual_information(j) == pytest.approx(oracles.BSC02_MI, abs=1e-12)

    @given(pmf_arrays((3, 3)))
    def test_matches_loop_oracle_and_symmetric(self, j):
        ref = oracles.mi_loop(j.tolist())
        assert mutual_information(j) == pytest.approx(ref, abs=1e-12)
        assert mutual_information(j.T) == pytest.approx(mutual_information(j), abs=1e-12)

    def test_markov_conditional_zero(self, rng):
        pz = np.array([0.3, 0.7])
        a_given_z = rng.dirichlet(np.ones(3), size=2)
        b_given_z = rng.dirichlet(np.ones(2), size=2)
        j = np.einsum("z,za,zb->abz", pz, a_given_z, b_given_z)
        assert conditional_mutual_information(j, 2) == pytest.approx(0.0, abs=1e-12)

    def test_constant_condition(self, rng):
        j2 = rng.dirichlet(np.ones(6)).reshape(2, 3)
        j3 = j2[:, :, None]
        assert conditional_mutual_information(j3, 2) == pytest.approx(
            mutual_information(j2), abs=1e-12)

    @given(pmf_arrays((2, 2, 2)))
    def test_cmi_slice_oracle(self, j):
        for cond in range(3):
            moved = np.moveaxis(j, cond, 2)
            ref = oracles.cmi_by_slices(moved.tolist())
            assert conditional_mutual_information(j, cond) == pytest.approx(ref, abs=1e-12)


class TestDistanceAndMarginals:
    def test_examples(self):
        assert variational_distance([0.5, 0.5], [0.5, 0.5]) == 0.0
        assert variational_distance([1, 0], [0, 1]) == 2.0
        assert variational_distance([0.5, 0.5], [0.6, 0.4]) == pytest.approx(0.2)

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            variational_distance([1.0], [0.5, 0.5])

    @given(pmf_arrays(4), pmf_arrays(4), pmf_arrays(4))
    def test_triangle(self, p, q, r):
        assert variational_distance(p, r) <= (variational_distance(p, q)
                                              + variational_distance(q, r) + 1e-12)

    def test_product_marginal(self):
        px, py = np.array([0.2, 0.8]), np.array([0.1, 0.3, 0.6])
        assert np.allclose(marginalize(np.outer(px, py), 0), px)

    def test_keep_all_identity(self, rng):
        j = rng.dirichlet(np.ones(12)).reshape(2, 3, 2)
        assert np.array_equal(marginalize(j, (0, 1, 2)), j)

    def test_loop_oracle(self, rng):
        j = rng.dirichlet(np.ones(24)).reshape(2, 3, 4)
        ref = np.zeros((4, 2))
        for a in range(2):
            for b in range(3):
                for c in range(4):
                    ref[c, a] += j[a, b, c]
        assert np.allclose(marginalize(j, (2, 0)), ref, atol=1e-15)

    @given(pmf_arrays((2, 3, 2)))
    def test_order_commutes(self, j):
        one = marginalize(marginalize(j, (0, 2)), 0)
        two = marginalize(marginalize(j, (2, 0)), 1)
        assert np.allclose(one, two, atol=1e-14)
