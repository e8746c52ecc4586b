import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import random_joint
from compound_sk.errors import DomainError
from compound_sk.source import (CompoundSource, bsc, cascade_joint, check_degraded,
                                degrading_channel, marginal_partition, sample_block)


def cascade_source(ps=(0.1, 0.2), eve=0.15):
    return CompoundSource([cascade_joint([0.5, 0.5], bsc(p), bsc(eve)) for p in ps])


class TestPartition:
    def test_shared_marginal_one_class(self):
        src = cascade_source()
        classes = marginal_partition(src)
        assert len(classes) == 1 and classes[0].members == (0, 1)

    def test_distinct_marginals_singletons(self):
        src = CompoundSource([cascade_joint([a, 1 - a], bsc(0.1), bsc(0.1)) for a in (0.2, 0.5, 0.7)])
        assert [c.members for c in src.classes] == [(0,), (1,), (2,)]

    def test_pairwise_oracle(self, rng):
        marg = [rng.dirichlet(np.ones(3)) for _ in range(3)]
        which = [0, 1, 0, 2, 1]
        joints = []
        for k in which:
            w = rng.dirichlet(np.ones(4), size=3)
            joints.append((marg[k][:, None] * w).reshape(3, 2, 2))
        src = CompoundSource(joints)
        got = {frozenset(c.members) for c in src.classes}
        ref = set()
        for s in range(5):
            same = frozenset(t for t in range(5)
                             if np.max(np.abs(joints[s].sum(axis=(1, 2))
                                              - joints[t].sum(axis=(1, 2)))) <= 1e-10)
            ref.add(same)
        assert got == ref
        members = sorted(m for c in src.classes for m in c.members)
        assert members == list(range(5))

    def test_class_order_and_label(self):
        src = CompoundSource([cascade_joint([0.3, 0.7], bsc(0.1), bsc(0.1)),
                              cascade_joint([0.5, 0.5], bsc(0.1), bsc(0.1)),
                              cascade_joint([0.3, 0.7], bsc(0.2), bsc(0.1))],
                             labels=["a", "b", "c"])
        assert [c.label for c in src.classes] == ["a", "b"]
        assert src.classes[0].members == (0, 2)


class TestConstruction:
    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            CompoundSource([np.full((2, 2, 2), 1 / 8), np.full((2, 2, 3), 1 / 12)])

    def test_duplicate_labels(self):
        j = np.full((2, 2, 2), 1 / 8)
        with pytest.raises(DomainError):
            CompoundSource([j, j], labels=["x", "x"])

    def test_unknown_state(self):
        with pytest.raises(DomainError):
            sample_block(cascade_source(), "nope", 5, 0)


class TestSampling:
    def test_point_mass(self):
        j = np.zeros((2, 2, 2))
        j[1, 0, 1] = 1.0
        b = sample_block(CompoundSource([j]), 0, 20, 3)
        assert (b.x_seq == 1).all() and (b.y_seq == 0).all() and (b.z_seq == 1).all()

    def test_deterministic(self):
        src = cascade_source()
        a, b = sample_block(src, 1, 100, 7), sample_block(src, 1, 100, 7)
        assert np.array_equal(a.x_seq, b.x_seq) and np.array_equal(a.z_seq, b.z_seq)

    def test_frequencies_within_3_sigma(self):
        src = CompoundSource([cascade_joint([0.3, 0.7], bsc(0.1), bsc(0.2))])
        n = 10 ** 6
        b = sample_block(src, 0, n, 11)
        idx = (b.x_seq.astype(int) * 2 + b.y_seq) * 2 + b.z_seq
        freq = np.bincount(idx, minlength=8) / n
        p = src.joints[0].ravel()
        sd = np.sqrt(p * (1 - p) / n)
        assert np.all(np.abs(freq - p) <= 3 * sd + 1e-12)


class TestDegraded:
    def test_deterministic_function(self):
        j = np.zeros((2, 3, 2))
        j[0, 0, 0], j[0, 1, 1], j[1, 2, 1], j[1, 0, 0] = 0.25, 0.25, 0.3, 0.2
        rep = check_degraded(CompoundSource([j]))
        assert rep.feasible
        # witness need not be unique here; check it is a channel reproducing (X, Z)
        d = rep.witness(0, 0)
        assert np.all(d >= -1e-9) and np.allclose(d.sum(axis=1), 1, atol=1e-9)
        assert np.allclose(j.sum(axis=2) @ d, j.sum(axis=1), atol=1e-9)

    def test_independent_eve(self, rng):
        pxy = rng.dirichlet(np.ones(4)).reshape(2, 2)
        pz = np.array([0.35, 0.65])
        rep = check_degraded(CompoundSource([pxy[:, :, None] * pz]))
        assert rep.feasible
        assert np.allclose(rep.witness(0, 0), np.tile(pz, (2, 1)), atol=1e-7)

    def test_cascade_family(self):
        src = cascade_source()
        rep = check_degraded(src)
        assert rep.feasible
        # matrix-product oracle: every witness reproduces the (X, Z) pair
        for pair in rep.pairs:
            pxz = src.pair(pair.r, (0, 1)) @ pair.witness
            assert np.allclose(pxz, src.pair(pair.t, (0, 2)), atol=1e-9)
        assert np.allclose(rep.witness(0, 0), bsc(0.15), atol=1e-7)

    def test_infeasible_reports_residual(self):
        # Eve sees X exactly, Bob sees noise: no channel Y -> Z can do it
        j = np.zeros((2, 2, 2))
        for x in range(2):
            for y in range(2):
                j[x, y, x] = 0.25
        d, resid = degrading_channel(j.sum(axis=2), j.sum(axis=1))
        assert d is None and resid > 1e-6
        assert not check_degraded(CompoundSource([j])).feasible

    @given(st.integers(0, 10 ** 6))
    def test_random_cascades_always_feasible(self, seed):
        rng = np.random.default_rng(seed)
        px = rng.dirichlet(np.ones(2))
        w = rng.dirichlet(np.ones(3), size=2)
        joints = [cascade_joint(px, w, rng.dirichlet(np.ones(2), size=3)) for _ in range(2)]
        assert check_degraded(CompoundSource(joints)).feasible


def test_cascade_joint_matches_oracle():
    ref = np.array(oracles.bsc_cascade_joint(0.4, 0.1, 0.15))
    assert np.allclose(cascade_joint([0.6, 0.4], bsc(0.1), bsc(0.15)), ref, atol=1e-15)
