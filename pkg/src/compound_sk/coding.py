"""Random codebooks, typicality encoders and unique-hit decoders.

Codewords ``u_ij`` (``i`` row, ``j`` column) are drawn i.i.d. from ``P_U^n``;
for each ``(i, j)`` a second table ``v^{ij}_{pq}`` is drawn symbol-wise from
``P_{V|U}`` given ``u_ij``. Alice publishes the row ``i`` (and ``p``); the
column ``j`` (or ``q``) is the common randomness Bob recovers.

Indices are 1-based and ``0`` is the failure sentinel throughout.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .capacity import AuxChannelPair, aux_joint, aux_terms
from .errors import BudgetError, DomainError
from .seeds import rng_for
from .source import CompoundSource
from .typicality import TypicalityParams, count_windows

DEFAULT_SYMBOL_GUARD = 2 ** 30


def symbol_guard() -> int:
    """Codebook storage cap in symbols (``COMPOUND_SK_MAX_SYMBOLS`` overrides)."""
    return int(os.environ.get("COMPOUND_SK_MAX_SYMBOLS", DEFAULT_SYMBOL_GUARD))


# ------------------------------------------------------------- class model

@dataclass
class ClassModel:
    """Joint laws of ``(U, V, X, Y, Z)`` for every member state of one class.

    Attributes
    ----------
    class_index : int
    members : tuple of int
        Member state indices.
    aux : AuxChannelPair
    full : dict
        State index to the 5-d joint ``P(u, v, x, y, z)``.
    """

    src: CompoundSource
    class_index: int
    aux: AuxChannelPair
    members: tuple[int, ...] = field(init=False)
    full: dict = field(init=False)

    def __post_init__(self):
        cls = self.src.classes[self.class_index]
        if self.aux.p_v_given_x.shape[0] != self.src.sizes[0]:
            raise DomainError("auxiliary channel input size must equal |X|")
        self.members = cls.members
        self.full = {s: aux_joint(self.src.joints[s], self.aux) for s in self.members}

    @property
    def u_size(self) -> int:
        return self.aux.u_size

    @property
    def v_size(self) -> int:
        return self.aux.v_size

    @property
    def x_size(self) -> int:
        return self.src.sizes[0]

    def _any(self) -> np.ndarray:
        return self.full[self.members[0]]

    @property
    def p_u(self) -> np.ndarray:
        return self._any().sum(axis=(1, 2, 3, 4))

    @property
    def p_ux(self) -> np.ndarray:
        """``P(u, x)``; identical across members."""
        return self._any().sum(axis=(1, 3, 4))

    @property
    def p_uvx(self) -> np.ndarray:
        return self._any().sum(axis=(3, 4))

    @property
    def p_v_given_u(self) -> np.ndarray:
        p_uv = self._any().sum(axis=(2, 3, 4))
        p_u = p_uv.sum(axis=1, keepdims=True)
        return np.where(p_u > 0, p_uv / np.where(p_u > 0, p_u, 1.0), 1.0 / p_uv.shape[1])

    def p_uy(self, s: int) -> np.ndarray:
        return self.full[s].sum(axis=(1, 2, 4))

    def p_uvy(self, s: int) -> np.ndarray:
        return self.full[s].sum(axis=(2, 4))

    def p_uxz(self, s: int) -> np.ndarray:
        return self.full[s].sum(axis=(1, 3))

    def p_z(self, s: int) -> np.ndarray:
        return self.full[s].sum(axis=(0, 1, 2, 3))

    def terms(self, s: int) -> dict[str, float]:
        return aux_terms(self.src.joints[s], self.aux)


# ---------------------------------------------------------- codebook sizes

@dataclass(frozen=True)
class CodebookSizes:
    """Table sizes and the rate exponents (bits per symbol) behind them."""

    n: int
    N1: int
    N2: int
    N3: int
    N4: int
    exponents: tuple[float, float, float, float]
    warnings: tuple[str, ...] = ()

    @property
    def log2(self) -> tuple[float, float, float, float]:
        return tuple(math.log2(v) for v in (self.N1, self.N2, self.N3, self.N4))


def _table_size(n: int, exponent: float) -> int:
    val = n * exponent
    if val > 1000:
        raise BudgetError(f"table size 2^{val:.1f} is not representable")
    size = 2.0 ** val
    nearest = round(size)
    if nearest >= 1 and abs(size - nearest) <= 1e-9 * nearest:
        return int(nearest)
    return max(1, math.ceil(size))


def codebook_sizes(model: ClassModel, n: int, delta: float) -> CodebookSizes:
    """Table sizes from the binning rates with slack ``delta``.

    ``N1 = ceil(2^{n(max_s I(U;X|Y_s) + 3 delta)})``,
    ``N2 = ceil(2^{n(min_s I(U;Y_s) - 2 delta)})`` and analogously for the
    second layer with ``I(V;X|U,Y_s)`` and ``I(V;Y_s|U)``. Nonpositive
    exponents give size 1 and a warning.
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    if n < 1:
        raise DomainError("n must be at least 1")
    terms = [model.terms(s) for s in model.members]
    e1 = max(t["I(U;X|Y)"] for t in terms) + 3 * delta
    e2 = min(t["I(U;Y)"] for t in terms) - 2 * delta
    e3 = max(t["I(V;X|U,Y)"] for t in terms) + 3 * delta
    e4 = min(t["I(V;Y|U)"] for t in terms) - 2 * delta
    notes = []
    for name, e in zip(("N2", "N4"), (e2, e4)):
        if e <= 0:
            msg = f"{name}: rate exponent {e:.4g} <= 0, table size clamped to 1"
            notes.append(msg)
            warnings.warn(msg, stacklevel=2)
    sizes = [_table_size(n, e) if e > 0 else 1 for e in (e1, e2, e3, e4)]
    return CodebookSizes(n, *sizes, exponents=(e1, e2, e3, e4), warnings=tuple(notes))


# --------------------------------------------------------------- codebooks

@dataclass(frozen=True)
class CodebookU:
    """``N1 x N2`` table of length-``n`` sequences drawn from ``P_U^n``."""

    class_index: int
    n: int
    N1: int
    N2: int
    sequences: np.ndarray
    seed: int


@dataclass(frozen=True)
class CodebookV:
    """``(N1, N2, N3, N4)`` tables drawn from ``P_{V|U}`` given each ``u_ij``."""

    parent: CodebookU
    N3: int
    N4: int
    sequences: np.ndarray
    seed: int


def _check_guard(total: int):
    cap = symbol_guard()
    if total > cap:
        raise BudgetError(f"codebook needs {total} symbols, above the guard of {cap}; "
                          "use ensemble mode or a smaller n")


def draw_codebook_u(model: ClassModel, sizes: CodebookSizes, seed: int) -> CodebookU:
    """Draw the ``U`` table for one class."""
    _check_guard(sizes.N1 * sizes.N2 * sizes.n)
    rng = rng_for(seed, model.class_index, "codebook")
    seqs = rng.choice(model.u_size, size=(sizes.N1, sizes.N2, sizes.n), p=model.p_u)
    return CodebookU(model.class_index, sizes.n, sizes.N1, sizes.N2,
                     seqs.astype(np.int16), seed)


def draw_codebook_v(model: ClassModel, cb_u: CodebookU, sizes: CodebookSizes,
                    seed: int) -> CodebookV:
    """Draw the ``V`` tables conditionally on every ``u_ij``."""
    _check_guard(sizes.N1 * sizes.N2 * (1 + sizes.N3 * sizes.N4) * sizes.n)
    rng = rng_for(seed, 1_000_003 + model.class_index, "codebook")
    cond = model.p_v_given_u
    cdf = np.cumsum(cond, axis=1)
    cdf[:, -1] = 1.0
    shape = (sizes.N1, sizes.N2, sizes.N3, sizes.N4, sizes.n)
    draws = rng.random(shape)
    u = np.broadcast_to(cb_u.sequences[:, :, None, None, :], shape)
    v = np.zeros(shape, dtype=np.int16)
    for a in range(model.u_size):
        mask = u == a
        v[mask] = np.searchsorted(cdf[a], draws[mask], side="right")
    return CodebookV(cb_u, sizes.N3, sizes.N4, np.minimum(v, model.v_size - 1), seed)


# ----------------------------------------------------- batched typicality

def pair_counts(batch: np.ndarray, other: np.ndarray, a_size: int, b_size: int) -> np.ndarray:
    """Counts ``N(a, b)`` of each row of ``batch`` against a fixed sequence.

    ``batch`` has shape ``(..., n)``; the result has shape ``(..., a, b)``.
    """
    out = np.zeros(batch.shape[:-1] + (a_size, b_size), dtype=np.int32)
    for b in range(b_size):
        cols = other == b
        if not cols.any():
            continue
        sub = batch[..., cols]
        for a in range(a_size):
            out[..., a, b] = (sub == a).sum(axis=-1)
    return out


def triple_counts(first: np.ndarray, batch: np.ndarray, other: np.ndarray,
                  a_size: int, b_size: int, c_size: int) -> np.ndarray:
    """Counts ``N(a, b, c)`` for a fixed ``first``, batched ``batch`` and fixed ``other``.

    ``first`` may be a single sequence or broadcast against ``batch``.
    """
    out = np.zeros(batch.shape[:-1] + (a_size, b_size, c_size), dtype=np.int32)
    first = np.broadcast_to(first, batch.shape)
    for c in range(c_size):
        cols = other == c
        if not cols.any():
            continue
        f = first[..., cols]
        sub = batch[..., cols]
        for a in range(a_size):
            fa = f == a
            for b in range(b_size):
                out[..., a, b, c] = (fa & (sub == b)).sum(axis=-1)
    return out


def _in_windows(counts: np.ndarray, joint: np.ndarray, eps: float, n: int) -> np.ndarray:
    lo, hi = count_windows(joint, n, eps)
    ok = (counts >= lo) & (counts <= hi)
    return np.all(ok.reshape(ok.shape[:ok.ndim - joint.ndim] + (-1,)), axis=-1)


# --------------------------------------------------------------- encoders

@dataclass(frozen=True)
class EncodeResult:
    """Encoder output; zeros mean failure."""

    i: int
    j: int
    p: int = 0
    q: int = 0


def encode_uv(x_seq, model: ClassModel, cb_u: CodebookU, cb_v: CodebookV | None,
              params: TypicalityParams) -> EncodeResult:
    """First-hit typicality encoder.

    Scans ``(i, j)`` row-major for the first ``u_ij`` jointly typical with
    ``x`` (slack ``zeta``). With a ``V`` table, then scans ``(p, q)`` for the
    first ``v`` with ``(u_ij, v, x)`` typical (slack ``sigma``).
    """
    x = np.asarray(x_seq)
    n = cb_u.n
    counts = pair_counts(cb_u.sequences, x, model.u_size, model.x_size)
    ok = _in_windows(counts, model.p_ux, params.zeta, n)
    hits = np.flatnonzero(ok.ravel())
    if hits.size == 0:
        return EncodeResult(0, 0)
    i, j = divmod(int(hits[0]), cb_u.N2)
    if cb_v is None:
        return EncodeResult(i + 1, j + 1)
    u = cb_u.sequences[i, j]
    vs = cb_v.sequences[i, j]
    counts = triple_counts(u, vs, x, model.u_size, model.v_size, model.x_size)
    ok = _in_windows(counts, model.p_uvx, params.sigma, n)
    hits = np.flatnonzero(ok.ravel())
    if hits.size == 0:
        return EncodeResult(i + 1, j + 1, 0, 0)
    p, q = divmod(int(hits[0]), cb_v.N4)
    return EncodeResult(i + 1, j + 1, p + 1, q + 1)


def _unique(ok: np.ndarray) -> int:
    hits = np.flatnonzero(ok)
    return int(hits[0]) + 1 if hits.size == 1 else 0


def decode_g(i: int, model: ClassModel, y_seq, cb_u: CodebookU,
             params: TypicalityParams) -> int:
    """Bob's column decoder: the unique ``j`` in row ``i`` typical with ``y``.

    Membership is the union over member states of the jointly typical sets
    with slack ``sigma * |X|``. Returns 0 for none or several.
    """
    if i < 1:
        return 0
    y = np.asarray(y_seq)
    row = cb_u.sequences[i - 1]
    counts = pair_counts(row, y, model.u_size, model.src.sizes[1])
    eps = params.sigma * model.x_size
    ok = np.zeros(row.shape[0], dtype=bool)
    for s in model.members:
        ok |= _in_windows(counts, model.p_uy(s), eps, cb_u.n)
    return _unique(ok)


def decode_rho(i: int, j: int, p: int, model: ClassModel, y_seq, cb_u: CodebookU,
               cb_v: CodebookV, params: TypicalityParams) -> int:
    """Bob's second-layer decoder with slack ``vartheta * |X|``."""
    if min(i, j, p) < 1:
        return 0
    y = np.asarray(y_seq)
    u = cb_u.sequences[i - 1, j - 1]
    vs = cb_v.sequences[i - 1, j - 1, p - 1]
    counts = triple_counts(u, vs, y, model.u_size, model.v_size, model.src.sizes[1])
    eps = params.vartheta * model.x_size
    ok = np.zeros(vs.shape[0], dtype=bool)
    for s in model.members:
        ok |= _in_windows(counts, model.p_uvy(s), eps, cb_u.n)
    return _unique(ok)


# ------------------------------------------------------------ covering

@dataclass(frozen=True)
class CoveringReport:
    """Log-count concentration across independently drawn codebooks."""

    n: int
    rate: float
    information: float
    target: float
    tau: float
    log_rates: np.ndarray
    fraction_within: float


def covering_concentration_check(model: ClassModel, n: int, rate: float, trials: int,
                                 seed: int, eps: float, tau: float = 0.1,
                                 x_seq=None, conditional: bool = False,
                                 u_seq=None) -> CoveringReport:
    """Count codewords typical with a fixed sequence, over many codebooks.

    Unconditional variant: ``2^{nR}`` codewords from ``P_U^n``, counting
    those with ``(u, x)`` typical; the count should concentrate at
    ``2^{n(R - I(U;X))}``. Conditional variant: codewords drawn from
    ``P_{V|U}`` given ``u_seq``, counting ``(u, v, x)`` typical, with target
    ``R - I(V;X|U)``.

    ``x_seq`` defaults to a sequence whose type is the closest to ``P_X``.
    """
    terms = model.terms(model.members[0])
    info = terms["I(V;X|U)"] if conditional else terms["I(U;X)"]
    if rate <= info:
        raise DomainError(f"rate {rate} must exceed the mutual information {info:.4f}")
    if x_seq is None:
        x_seq = nearest_type_sequence(model.src.classes[model.class_index].x_marginal, n)
    x = np.asarray(x_seq)
    size = _table_size(n, rate)
    _check_guard(size * n * trials)
    logs = np.empty(trials)
    if conditional:
        if u_seq is None:
            raise DomainError("conditional variant needs u_seq")
        u = np.asarray(u_seq)
        cdf = np.cumsum(model.p_v_given_u, axis=1)
        cdf[:, -1] = 1.0
    for t in range(trials):
        rng = rng_for(seed, t, "codebook")
        if conditional:
            draws = rng.random((size, n))
            v = np.zeros((size, n), dtype=np.int16)
            for a in range(model.u_size):
                cols = u == a
                v[:, cols] = np.searchsorted(cdf[a], draws[:, cols], side="right")
            counts = triple_counts(u, v, x, model.u_size, model.v_size, model.x_size)
            ok = _in_windows(counts, model.p_uvx, eps, n)
        else:
            cw = rng.choice(model.u_size, size=(size, n), p=model.p_u)
            counts = pair_counts(cw, x, model.u_size, model.x_size)
            ok = _in_windows(counts, model.p_ux, eps, n)
        c = int(ok.sum())
        logs[t] = math.log2(c) / n if c > 0 else -math.inf
    target = rate - info
    frac = float(np.mean(np.abs(logs - target) <= tau))
    return CoveringReport(n, rate, info, target, tau, logs, frac)


def nearest_type_sequence(p: Sequence[float], n: int) -> np.ndarray:
    """A sorted sequence whose type rounds ``n p`` by largest remainders."""
    p = np.asarray(p, dtype=float)
    raw = p * n
    counts = np.floor(raw).astype(int)
    short = n - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return np.repeat(np.arange(p.size), counts)


@dataclass(frozen=True)
class SelectedCodebook:
    """Codebook chosen by measured error, with the seeds tried."""

    codebook: CodebookU
    seed: int
    error: float
    tried: tuple[tuple[int, float], ...]

    @property
    def met_target(self) -> bool:
        return self.error <= self.tried_target

    tried_target: float = math.inf


def draw_with_retry(model: ClassModel, sizes: CodebookSizes, seed: int, error_fn,
                    target: float, retries: int = 5) -> SelectedCodebook:
    """Draw ``U`` tables at ``seed, seed + 1, ...`` until ``error_fn`` meets ``target``.

    ``error_fn(codebook) -> float`` measures whatever error matters to the
    caller. The best draw is returned when no seed meets the target; check
    ``met_target``.
    """
    if retries < 1:
        raise DomainError("retries must be at least 1")
    tried = []
    best = None
    for k in range(retries):
        cb = draw_codebook_u(model, sizes, seed + k)
        err = float(error_fn(cb))
        tried.append((seed + k, err))
        if best is None or err < best[2]:
            best = (cb, seed + k, err)
        if err <= target:
            break
    return SelectedCodebook(best[0], best[1], best[2], tuple(tried), target)
