"""Strongly typical sequences with the zero-mass clause.

A tuple of sequences is typical for a joint pmf ``P`` with slack ``eps`` when
every cell count ``N`` satisfies ``|P - N/n| <= eps`` and cells of zero mass are
never visited. All exact set computations here work on type counts rather than
on sequences: the typicality predicate only constrains per-cell counts, so the
probability or size of a typical set factorises into windowed multinomial sums
that a short dynamic program evaluates for ``n`` up to about ``10^4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from .errors import BudgetError, DomainError
from .prob import as_channel, as_pmf

#: Float slack used when converting ``|P - N/n| <= eps`` into integer windows.
WINDOW_TOL = 1e-9
MAX_DP_LENGTH = 20000


@dataclass(frozen=True)
class TypicalityParams:
    """Slack parameters ``xi < zeta < sigma < vartheta``.

    ``xi`` governs marginal typicality, ``zeta`` Alice's encoder, ``sigma`` the
    row decoder and the good-set construction, ``vartheta`` the second-layer
    decoder.
    """

    xi: float
    zeta: float
    sigma: float
    vartheta: float

    def __post_init__(self):
        if not (0 < self.xi < self.zeta < self.sigma < self.vartheta):
            raise DomainError(
                "typicality slacks must satisfy 0 < xi < zeta < sigma < vartheta, "
                f"got {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.xi, self.zeta, self.sigma, self.vartheta)

    @classmethod
    def scaled(cls, min_mass: float,
               factors: Sequence[float] = (0.05, 0.10, 0.15, 0.20)) -> "TypicalityParams":
        """Default slacks as multiples of a minimum positive probability."""
        return cls(*(f * min_mass for f in factors))


# ---------------------------------------------------------------- counting

def cell_counts(seqs: Sequence[np.ndarray], shape: Sequence[int]) -> np.ndarray:
    """Joint empirical counts of aligned symbol sequences."""
    seqs = [np.asarray(s, dtype=np.int64) for s in seqs]
    if len(seqs) != len(shape):
        raise DomainError("one sequence per joint component required")
    n = len(seqs[0])
    if any(len(s) != n for s in seqs):
        raise DomainError("sequences must have equal length")
    for s, size in zip(seqs, shape):
        if n and (s.min() < 0 or s.max() >= size):
            raise DomainError("symbol outside alphabet")
    flat = np.ravel_multi_index(seqs, tuple(shape)) if n else np.zeros(0, dtype=np.int64)
    return np.bincount(flat, minlength=int(np.prod(shape))).reshape(tuple(shape))


def count_windows(mass: np.ndarray, n: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Integer count windows ``[lo, hi]`` equivalent to ``|mass - N/n| <= eps``.

    Zero-mass cells get the window ``[0, 0]``. ``mass`` may already be scaled
    per cell (as in the conditional definition), in which case pass the
    per-cell centre divided by ``n``.
    """
    mass = np.asarray(mass, dtype=float)
    lo = np.ceil(n * (mass - eps) - WINDOW_TOL)
    hi = np.floor(n * (mass + eps) + WINDOW_TOL)
    lo = np.clip(lo, 0, n).astype(np.int64)
    hi = np.clip(hi, 0, n).astype(np.int64)
    zero = mass <= 0
    lo[zero] = 0
    hi[zero] = 0
    return lo, hi


def counts_in_windows(counts: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                      cell_axes: int | None = None) -> np.ndarray | bool:
    """Whether every cell count lies in its window.

    With ``cell_axes`` given, the trailing ``cell_axes`` axes are the cell
    grid and the result is an array over the leading (batch) axes.
    """
    ok = (counts >= lo) & (counts <= hi)
    if cell_axes is None:
        return bool(np.all(ok))
    return np.all(ok.reshape(ok.shape[:ok.ndim - cell_axes] + (-1,)), axis=-1)


# ------------------------------------------------------------- membership

def is_typical(x_seq, p, eps: float) -> bool:
    """Membership of ``x_seq`` in the typical set of pmf ``p``."""
    p = as_pmf(p, ndim=1)
    return _typical_counts(cell_counts([x_seq], p.shape), p, eps)


def is_jointly_typical(x_seq, y_seq, joint, eps: float) -> bool:
    """Membership of the pair in the jointly typical set of a 2-d joint."""
    joint = as_pmf(joint, ndim=2)
    return _typical_counts(cell_counts([x_seq, y_seq], joint.shape), joint, eps)


def is_tuple_typical(seqs: Sequence, joint, eps: float) -> bool:
    """Joint typicality for any number of aligned sequences."""
    joint = as_pmf(joint, ndim=len(seqs))
    return _typical_counts(cell_counts(seqs, joint.shape), joint, eps)


def _typical_counts(counts: np.ndarray, joint: np.ndarray, eps: float) -> bool:
    if eps <= 0:
        raise DomainError("typicality slack must be positive")
    n = int(counts.sum())
    lo, hi = count_windows(joint, n, eps)
    return counts_in_windows(counts, lo, hi)


def conditional_typical_set(x_seq, channel, eps: float) -> Callable[[np.ndarray], bool]:
    """Membership predicate for the conditionally typical set given ``x_seq``.

    ``y`` belongs when ``|N(x) W(y|x)/n - N(x,y)/n| <= eps`` for all cells and
    ``W(y|x) = 0`` forces ``N(x,y) = 0``.
    """
    if eps <= 0:
        raise DomainError("typicality slack must be positive")
    w = as_channel(channel)
    x_seq = np.asarray(x_seq)
    n = len(x_seq)
    nx = np.bincount(x_seq, minlength=w.shape[0])
    centre = nx[:, None] * w / max(n, 1)
    lo, hi = count_windows(centre, n, eps)

    def member(y_seq) -> bool:
        return counts_in_windows(cell_counts([x_seq, y_seq], w.shape), lo, hi)

    return member


# ------------------------------------------------ windowed multinomial DPs

def _check_dp(m: int):
    if m > MAX_DP_LENGTH:
        raise BudgetError(f"type-count DP limited to n <= {MAX_DP_LENGTH}, got {m}")


def windowed_multinomial_prob(m: int, probs, lo, hi) -> float:
    """``P(N in windows)`` for ``N ~ Multinomial(m, probs)``.

    The multinomial is peeled into successive binomials; the DP state is the
    number of draws still unassigned.
    """
    _check_dp(m)
    probs = np.asarray(probs, dtype=float)
    lo, hi = np.asarray(lo), np.asarray(hi)
    a = probs.size
    dist = np.zeros(m + 1)
    dist[m] = 1.0
    r = np.arange(m + 1)
    for sym in range(a - 1):
        rest = probs[sym:].sum()
        q = 0.0 if rest <= 0 else min(1.0, probs[sym] / rest)
        new = np.zeros(m + 1)
        for k in range(int(lo[sym]), int(min(hi[sym], m)) + 1):
            src = r[k:]
            w = dist[k:] * binom.pmf(k, src, q)
            new[:m + 1 - k] += w
        dist = new
        if not dist.any():
            return 0.0
    last = slice(int(lo[-1]), int(min(hi[-1], m)) + 1)
    return float(min(1.0, dist[last].sum()))


def windowed_multinomial_log2count(m: int, lo, hi) -> float:
    """``log2`` of the number of sequences whose counts lie in the windows."""
    _check_dp(m)
    lo, hi = np.asarray(lo), np.asarray(hi)
    a = lo.size
    ldist = np.full(m + 1, -np.inf)
    ldist[m] = 0.0
    r = np.arange(m + 1, dtype=float)
    for sym in range(a - 1):
        new = np.full(m + 1, -np.inf)
        for k in range(int(lo[sym]), int(min(hi[sym], m)) + 1):
            src = r[k:]
            term = ldist[k:] + gammaln(src + 1) - gammaln(k + 1) - gammaln(src - k + 1)
            new[:m + 1 - k] = np.logaddexp(new[:m + 1 - k], term)
        ldist = new
    last = ldist[int(lo[-1]):int(min(hi[-1], m)) + 1]
    if last.size == 0 or np.all(np.isneginf(last)):
        return -np.inf
    return float(np.logaddexp.reduce(last) / math.log(2))


def extension_probability(context_counts, law, joint, n: int, eps: float) -> float:
    """Probability that a fresh sequence completes a typical tuple.

    The given sequences have joint counts ``context_counts`` over context
    cells ``c``. A new sequence ``W`` is drawn symbol-wise from ``law[c]`` and
    the extended tuple must be typical for ``joint`` (context cells x ``W``)
    with slack ``eps``. The event factorises over context cells.
    """
    ctx = np.asarray(context_counts).ravel()
    law = np.asarray(law, dtype=float).reshape(ctx.size, -1)
    joint = np.asarray(joint, dtype=float).reshape(ctx.size, -1)
    lo, hi = count_windows(joint, n, eps)
    total = 1.0
    for c in range(ctx.size):
        if ctx[c] == 0:
            if lo[c].any():
                return 0.0
            continue
        total *= windowed_multinomial_prob(int(ctx[c]), law[c], lo[c], hi[c])
        if total == 0.0:
            break
    return total


def extension_log2count(context_counts, joint, n: int, eps: float) -> float:
    """``log2`` of the number of completions making the tuple typical."""
    ctx = np.asarray(context_counts).ravel()
    joint = np.asarray(joint, dtype=float).reshape(ctx.size, -1)
    lo, hi = count_windows(joint, n, eps)
    total = 0.0
    for c in range(ctx.size):
        if ctx[c] == 0:
            if lo[c].any():
                return -np.inf
            continue
        total += windowed_multinomial_log2count(int(ctx[c]), lo[c], hi[c])
        if np.isneginf(total):
            break
    return total


# -------------------------------------------------- quantitative facts

@dataclass(frozen=True)
class TypicalProbability:
    empirical: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.empirical >= self.bound - 1e-12


def marginal_probability_bound(alphabet_size: int, n: int, xi: float) -> float:
    """Lower bound ``1 - 2|X| exp(-2 xi^2 n)`` (natural exponential)."""
    return 1.0 - 2.0 * alphabet_size * math.exp(-2.0 * xi * xi * n)


def conditional_probability_bound(cells: int, n: int, sigma: float, xi: float) -> float:
    """Lower bound ``1 - 2|U||X||Y| exp(-2 (sigma - xi)^2 n)``."""
    return 1.0 - 2.0 * cells * math.exp(-2.0 * (sigma - xi) ** 2 * n)


def typical_probability(p, n: int, xi: float) -> TypicalProbability:
    """Exact ``P^n`` of the typical set and the exponential lower bound.

    ``p`` may be a joint pmf of any shape; cells are flattened.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    p = as_pmf(p).ravel()
    lo, hi = count_windows(p, n, xi)
    return TypicalProbability(windowed_multinomial_prob(n, p, lo, hi),
                              marginal_probability_bound(p.size, n, xi))


@dataclass(frozen=True)
class SetSize:
    log_count: float
    entropy: float
    tau: float
    n: int

    @property
    def rate(self) -> float:
        return self.log_count / self.n

    @property
    def window(self) -> tuple[float, float]:
        return (self.entropy - self.tau, self.entropy + self.tau)

    @property
    def inside(self) -> bool:
        lo, hi = self.window
        return lo < self.rate < hi or (self.tau == 0 and abs(self.rate - self.entropy) < 1e-12)


def typical_set_size_bounds(p, n: int, eps: float, tau: float = 0.05) -> SetSize:
    """Exact ``log2`` size of the typical set and the entropy window check."""
    from .prob import entropy

    p = as_pmf(p).ravel()
    lo, hi = count_windows(p, n, eps)
    return SetSize(windowed_multinomial_log2count(n, lo, hi), entropy(p), tau, n)


def self_information_surrogate(p, xi: float) -> float:
    """Linear slack surrogate ``xi * sum |log2 P(x)|`` over the support."""
    p = as_pmf(p).ravel()
    pos = p[p > 0]
    return float(xi * np.abs(np.log2(pos)).sum())
