"""Exact simulation over the random-codebook ensemble without storing tables.

At block lengths where the tables hold ``2^{n I}`` sequences, an explicit
draw is impossible. The protocol's outcome only depends on each codeword
through its joint type with the observed sequences, and codewords are
independent, so one can sample the outcome directly:

* enumerate every joint type a fresh codeword can have against the observed
  context ``(x, y)`` (a product of per-cell multinomials) together with its
  probability and whether it passes Alice's test (``A``) and Bob's union test
  (``B``);
* the first hit in row-major order is geometric with success probability
  ``P(A)``; split it into a row (geometric in whole rows) and a column
  (truncated geometric);
* the hit codeword's type is drawn from the enumeration restricted to ``A``;
* entries before the hit in its row fail ``A`` and pass ``B`` with
  probability ``P(B and not A) / P(not A)``; entries after it pass ``B``
  with probability ``P(B)``. Only "none", "one" or "several" matter to the
  unique-hit decoder, and those three probabilities are computed exactly for
  any table size.

The result is a draw from the same law as building a fresh codebook for the
trial and running the explicit encoder and decoder.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.stats import multinomial

from .errors import BudgetError
from .typicality import count_windows

DEFAULT_CONFIG_BUDGET = 2 ** 21


def _compositions(m: int, parts: int) -> np.ndarray:
    if parts == 1:
        return np.array([[m]], dtype=np.int32)
    rows = []
    for bars in itertools.combinations(range(m + parts - 1), parts - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(m + parts - 2 - prev)
        rows.append(row)
    return np.array(rows, dtype=np.int32)


@dataclass(frozen=True)
class Predicate:
    """Typicality test on the aggregated counts of ``(kept context, W)``.

    ``keep`` lists context axes retained; ``joints`` holds one pmf per
    alternative (a union), each with axes ``keep + (W,)``.
    """

    keep: tuple[int, ...]
    joints: tuple[np.ndarray, ...]
    eps: float


@dataclass(frozen=True)
class TypeTable:
    """All joint types of a fresh codeword against a fixed context."""

    prob: np.ndarray
    counts: np.ndarray          # (K, cells, W)
    passes: tuple[np.ndarray, ...]


def build_type_table(context_counts: np.ndarray, law: np.ndarray,
                     predicates: Sequence[Predicate],
                     budget: int = DEFAULT_CONFIG_BUDGET) -> TypeTable:
    """Enumerate codeword types against the context and evaluate predicates.

    Parameters
    ----------
    context_counts : numpy.ndarray
        Joint counts of the observed sequences, shape ``ctx_shape``.
    law : numpy.ndarray
        Per-symbol law of the codeword given the context cell, shape
        ``ctx_shape + (W,)``.
    predicates : sequence of Predicate
    budget : int
        Maximum number of joint types enumerated.
    """
    ctx_shape = context_counts.shape
    n = int(context_counts.sum())
    w_size = law.shape[-1]
    cells = np.argwhere(context_counts > 0)
    flat_law = law.reshape(-1, w_size)
    flat_ctx = context_counts.ravel()
    cell_ids = np.flatnonzero(flat_ctx)
    total = 1
    per_cell = []
    for c in cell_ids:
        m = int(flat_ctx[c])
        comps = _compositions(m, w_size)
        pr = multinomial.pmf(comps, m, flat_law[c])
        keep = pr > 0
        per_cell.append((comps[keep], pr[keep]))
        total *= int(keep.sum())
        if total > budget:
            raise BudgetError(f"ensemble type enumeration needs more than {budget} joint "
                              "types; reduce n or alphabet sizes")
    prob = np.ones(1)
    counts = np.zeros((1, 0, w_size), dtype=np.int32)
    for comps, pr in per_cell:
        k_old, k_new = prob.size, pr.size
        prob = np.repeat(prob, k_new) * np.tile(pr, k_old)
        counts = np.concatenate([np.repeat(counts, k_new, axis=0),
                                 np.tile(comps, (k_old, 1))[:, None, :]], axis=1)
    passes = []
    for pred in predicates:
        agg_shape = tuple(ctx_shape[a] for a in pred.keep)
        agg = np.zeros((prob.size,) + agg_shape + (w_size,), dtype=np.int32)
        for col, cell in enumerate(cells):
            key = tuple(cell[a] for a in pred.keep)
            agg[(slice(None),) + key] += counts[:, col, :]
        ok = np.zeros(prob.size, dtype=bool)
        for joint in pred.joints:
            lo, hi = count_windows(joint, n, pred.eps)
            inside = (agg >= lo) & (agg <= hi)
            ok |= np.all(inside.reshape(prob.size, -1), axis=1)
        passes.append(ok)
    return TypeTable(prob, counts, tuple(passes))


# ------------------------------------------------------------ sampling


def _prob_zero_one(trials: int, p: float) -> tuple[float, float]:
    """``P(Bin(trials, p) = 0)`` and ``P(= 1)`` for arbitrarily large ``trials``."""
    if trials <= 0 or p <= 0:
        return 1.0, 0.0
    if p >= 1:
        return 0.0, float(trials == 1)
    log_q = math.log1p(-p)
    p0 = math.exp(trials * log_q)
    p1 = math.exp(math.log(trials) + math.log(p) + (trials - 1) * log_q)
    return p0, min(p1, 1.0 - p0)


def _few_hits(rng: np.random.Generator, trials: int, p: float) -> int:
    """Sample ``min(Bin(trials, p), 2)``."""
    p0, p1 = _prob_zero_one(trials, p)
    u = rng.random()
    if u < p0:
        return 0
    if u < p0 + p1:
        return 1
    return 2


def _uniform_index(rng: np.random.Generator, lo: int, hi: int) -> int:
    """Uniform integer in ``[lo, hi]`` for possibly huge ranges."""
    span = hi - lo + 1
    if span < 2 ** 62:
        return lo + int(rng.integers(span))
    return lo + min(span - 1, int(rng.random() * span))


@dataclass(frozen=True)
class LayerOutcome:
    """Alice's indices and Bob's decoded column for one table layer."""

    row: int
    col: int
    bob_col: int
    hit_type: int


def sample_layer(table: TypeTable, rows: int, cols: int,
                 rng: np.random.Generator) -> LayerOutcome:
    """Sample first-hit encoding and unique-hit decoding for one layer.

    ``table.passes`` must be ``(A, B)``: Alice's acceptance and Bob's test.
    """
    a_ok, b_ok = table.passes
    pa = float(table.prob[a_ok].sum())
    pb = float(table.prob[b_ok].sum())
    pab = float(table.prob[a_ok & b_ok].sum())
    if pa <= 0:
        return LayerOutcome(0, 0, 0, -1)
    if pa >= 1:
        row_miss = 0
        col0 = 0
    else:
        log_q = math.log1p(-pa)
        row_success = -math.expm1(cols * log_q)
        if row_success >= 1:
            row_miss = 0
        else:
            row_miss = math.floor(math.log(1.0 - rng.random()) / math.log1p(-row_success))
        if row_miss >= rows:
            return LayerOutcome(0, 0, 0, -1)
        u = rng.random()
        col0 = math.floor(math.log1p(-u * row_success) / log_q)
        col0 = min(max(col0, 0), cols - 1)
    row, col = row_miss + 1, int(col0) + 1
    weights = table.prob * a_ok
    k = int(rng.choice(weights.size, p=weights / weights.sum()))
    hit_in_b = bool(b_ok[k])
    p_before = 0.0 if pa >= 1 else max(0.0, (pb - pab) / (1.0 - pa))
    before = _few_hits(rng, col - 1, p_before)
    after = _few_hits(rng, cols - col, pb)
    others = before + after
    if hit_in_b and others == 0:
        bob = col
    elif not hit_in_b and others == 1:
        bob = _uniform_index(rng, 1, col - 1) if before == 1 else _uniform_index(rng, col + 1, cols)
    else:
        bob = 0
    return LayerOutcome(row, col, bob, k)


class TypeTableCache:
    """Memoises type tables on the context counts (many trials share types)."""

    def __init__(self, builder, maxsize: int = 4096):
        self._get = lru_cache(maxsize=maxsize)(self._build)
        self._builder = builder

    def _build(self, key: tuple, shape: tuple) -> TypeTable:
        return self._builder(np.array(key, dtype=np.int64).reshape(shape))

    def __call__(self, counts: np.ndarray) -> TypeTable:
        return self._get(tuple(int(v) for v in counts.ravel()), counts.shape)
