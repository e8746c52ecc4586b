import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from compound_sk.capacity import AuxChannelPair
from compound_sk.coding import (ClassModel, CodebookU, codebook_sizes,
                                covering_concentration_check, decode_g, draw_codebook_u,
                                draw_codebook_v, draw_with_retry, encode_uv,
                                nearest_type_sequence, pair_counts, triple_counts)
from compound_sk.errors import BudgetError, DomainError
from compound_sk.source import CompoundSource, bsc, cascade_joint
from compound_sk.typicality import TypicalityParams

PARAMS = TypicalityParams(0.05, 0.1, 0.15, 0.2)


def model(ps=(0.1, 0.2), u_noise=0.1):
    src = CompoundSource([cascade_joint([0.5, 0.5], bsc(p), bsc(0.15)) for p in ps])
    aux = AuxChannelPair(np.eye(2), bsc(u_noise))
    return ClassModel(src, 0, aux)


class TestSizes:
    def test_matches_recomputed_information(self):
        m = model()
        n, delta = 40, 0.02
        sz = codebook_sizes(m, n, delta)
        terms = [m.terms(s) for s in m.members]
        e1 = max(t["I(U;X|Y)"] for t in terms) + 3 * delta
        e2 = min(t["I(U;Y)"] for t in terms) - 2 * delta
        assert sz.N1 == math.ceil(2 ** (n * e1))
        assert sz.N2 == math.ceil(2 ** (n * e2))
        assert sz.exponents[:2] == pytest.approx((e1, e2))

    def test_nonpositive_exponent_clamps_with_warning(self):
        m = model(u_noise=0.45)
        with pytest.warns(UserWarning, match="N2"):
            sz = codebook_sizes(m, 20, 0.1)
        assert sz.N2 == 1 and any("N2" in w for w in sz.warnings)

    def test_bad_delta(self):
        with pytest.raises(DomainError):
            codebook_sizes(model(), 10, 0.0)

    def test_unrepresentable(self):
        with pytest.raises(BudgetError):
            codebook_sizes(model(), 10 ** 5, 0.02)


class TestCounts:
    def test_pair_counts_loop(self, rng):
        batch = rng.integers(0, 3, size=(5, 9))
        other = rng.integers(0, 2, size=9)
        got = pair_counts(batch, other, 3, 2)
        for r in range(5):
            ref = np.zeros((3, 2), int)
            for a, b in zip(batch[r], other):
                ref[a, b] += 1
            assert np.array_equal(got[r], ref)

    def test_triple_counts_loop(self, rng):
        first = rng.integers(0, 2, size=7)
        batch = rng.integers(0, 3, size=(4, 7))
        other = rng.integers(0, 2, size=7)
        got = triple_counts(first, batch, other, 2, 3, 2)
        for r in range(4):
            ref = np.zeros((2, 3, 2), int)
            for a, b, c in zip(first, batch[r], other):
                ref[a, b, c] += 1
            assert np.array_equal(got[r], ref)


def tiny_codebook(m, n, n1, n2, seed):
    rng = np.random.default_rng(seed)
    seqs = rng.choice(m.u_size, size=(n1, n2, n), p=m.p_u).astype(np.int16)
    return CodebookU(0, n, n1, n2, seqs, seed)


class TestEncoderDecoder:
    @settings(max_examples=40)
    @given(st.integers(0, 2 ** 20))
    def test_encoder_matches_scan(self, seed):
        m = model()
        n = 8
        cb = tiny_codebook(m, n, 3, 4, seed)
        x = np.random.default_rng(seed + 1).integers(0, 2, n)
        enc = encode_uv(x, m, cb, None, PARAMS)
        ref = oracles.first_hit_scan(cb.sequences.tolist(), list(x), m.p_ux.tolist(), PARAMS.zeta)
        assert (enc.i, enc.j) == ref

    @settings(max_examples=40)
    @given(st.integers(0, 2 ** 20), st.integers(1, 3))
    def test_decoder_matches_union(self, seed, row):
        m = model()
        n = 8
        cb = tiny_codebook(m, n, 3, 5, seed)
        y = np.random.default_rng(seed + 2).integers(0, 2, n)
        got = decode_g(row, m, y, cb, PARAMS)
        joints = [m.p_uy(s).tolist() for s in m.members]
        ref = oracles.unique_hit_union(cb.sequences[row - 1].tolist(), list(y), joints,
                                       PARAMS.sigma * m.x_size)
        assert got == ref

    def test_abort_sentinel(self):
        m = model()
        assert decode_g(0, m, np.zeros(8, int), tiny_codebook(m, 8, 2, 2, 0), PARAMS) == 0

    def test_encoder_failure(self):
        # a codebook of all-zero words cannot cover a balanced x
        m = model()
        cb = CodebookU(0, 8, 2, 2, np.zeros((2, 2, 8), np.int16), 0)
        assert encode_uv(np.array([0, 1] * 4), m, cb, None, PARAMS).i == 0

    def test_two_layer_indices_in_range(self):
        m = model()
        sz = codebook_sizes(m, 8, 0.05)
        cb = draw_codebook_u(m, sz, 4)
        cbv = draw_codebook_v(m, cb, sz, 4)
        enc = encode_uv(nearest_type_sequence([0.5, 0.5], 8), m, cb, cbv, PARAMS)
        assert 0 <= enc.p <= sz.N3 and 0 <= enc.q <= sz.N4


class TestCodebooks:
    def test_deterministic(self):
        m = model()
        sz = codebook_sizes(m, 10, 0.05)
        a, b = draw_codebook_u(m, sz, 9), draw_codebook_u(m, sz, 9)
        assert np.array_equal(a.sequences, b.sequences)
        assert not np.array_equal(a.sequences, draw_codebook_u(m, sz, 10).sequences)

    def test_symbol_frequencies(self):
        m = model()
        sz = codebook_sizes(m, 30, 0.05)
        cb = draw_codebook_u(m, sz, 1)
        freq = np.bincount(cb.sequences.ravel(), minlength=2) / cb.sequences.size
        sd = math.sqrt(0.25 / cb.sequences.size)
        assert abs(freq[0] - m.p_u[0]) <= 4 * sd

    def test_guard(self, monkeypatch):
        monkeypatch.setenv("COMPOUND_SK_MAX_SYMBOLS", "100")
        m = model()
        with pytest.raises(BudgetError):
            draw_codebook_u(m, codebook_sizes(m, 30, 0.05), 0)

    def test_retry_picks_best_and_stops_on_target(self):
        m = model()
        sz = codebook_sizes(m, 10, 0.05)
        errs = iter([0.5, 0.2, 0.01, 0.0])
        sel = draw_with_retry(m, sz, 100, lambda cb: next(errs), target=0.05, retries=4)
        assert sel.seed == 102 and sel.met_target and len(sel.tried) == 3
        errs = iter([0.5, 0.3, 0.4])
        sel = draw_with_retry(m, sz, 7, lambda cb: next(errs), target=0.0, retries=3)
        assert sel.seed == 8 and not sel.met_target


class TestCovering:
    def test_nearest_type(self):
        x = nearest_type_sequence([0.3, 0.7], 10)
        assert np.bincount(x).tolist() == [3, 7]

    def test_unconditional_concentrates(self):
        m = model(u_noise=0.26)
        info = m.terms(0)["I(U;X)"]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = covering_concentration_check(m, 14, info + 0.2, 200, seed=3, eps=0.09)
        assert rep.fraction_within >= 0.9
        assert rep.target == pytest.approx(0.2)

    def test_rate_must_exceed_information(self):
        m = model()
        with pytest.raises(DomainError):
            covering_concentration_check(m, 10, 0.01, 5, 0, 0.1)
