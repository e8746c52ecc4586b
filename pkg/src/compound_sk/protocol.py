"""End-to-end simulation of one-way key agreement over a compound source.

A run fixes the true state, then per trial: Alice decides her marginal class,
encodes with that class's codebook and publishes the class, the row ``i``
(and ``p``). Bob decodes the common randomness and both parties pass it
through the class extractor.

Two codebook modes are available. ``explicit`` draws one codebook per class
from the codebook seed and reuses it across trials. ``ensemble`` samples the
encoder/decoder outcome over a fresh random codebook per trial from joint
types only, which reaches block lengths where the tables cannot be stored.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .capacity import AuxChannelPair, aux_joint
from .coding import (ClassModel, CodebookSizes, CodebookU, CodebookV, codebook_sizes,
                     decode_g, decode_rho, draw_codebook_u, draw_codebook_v, encode_uv,
                     pair_counts, symbol_guard, triple_counts)
from .ensemble import Predicate, TypeTableCache, build_type_table, sample_layer
from .errors import BudgetError, DomainError
from .estimation import class_log_likelihoods, decide
from .extraction import (EXACT_BUDGET, ExactLaw, KeyExtractor, SecurityAssessment,
                         plugin_security_index, security_index_from_ids)
from .seeds import derive_seed, rng_for
from .source import CompoundSource, sample_block_rng
from .typicality import TypicalityParams, count_windows

EXPLICIT_ROW_LIMIT = 2 ** 20
TRIAL_STRIDE = 2 ** 32


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything that determines a simulation run.

    Attributes
    ----------
    n : int
        Block length.
    delta : float
        Rate slack in the table sizes and in the achievability checks.
    typicality : TypicalityParams or None
        Slacks; ``None`` scales defaults from the smallest positive mass.
    gamma : float
        Public-rate constraint in bits per symbol (``inf`` for none).
    aux : AuxChannelPair, dict or None
        Auxiliary channels, either shared or per class index. ``None`` uses
        ``U = V = X``.
    seed : int
        Master seed; codebooks, extractors and trials use distinct tags.
    trials : int
    layer : {"a", "ab"}
        Common randomness from the first table only, or from both.
    security_mode : {"exact", "plugin", "none"}
    codebook_mode : {"explicit", "ensemble", "auto"}
    key_rate : float or None
        Target key rate; the key has ``ceil(n * key_rate)`` bits. ``None``
        uses all the common randomness.
    states : tuple of int or None
        True states to simulate (``None`` means all).
    plugin_samples : int
        Sample count for plug-in security estimation.
    workers : int
        Process count for trials; results do not depend on it.
    """

    n: int
    delta: float = 0.05
    typicality: TypicalityParams | None = None
    gamma: float = math.inf
    aux: object = None
    seed: int = 0
    trials: int = 1000
    layer: str = "a"
    security_mode: str = "exact"
    codebook_mode: str = "auto"
    key_rate: float | None = None
    states: tuple[int, ...] | None = None
    plugin_samples: int = 10 ** 6
    workers: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be at least 1")
        if not self.delta > 0:
            raise DomainError("delta must be positive")
        if self.trials < 0:
            raise DomainError("trials must be nonnegative")
        if self.layer not in ("a", "ab"):
            raise DomainError("layer must be 'a' or 'ab'")
        if self.security_mode not in ("exact", "plugin", "none"):
            raise DomainError("security_mode must be exact, plugin or none")
        if self.codebook_mode not in ("explicit", "ensemble", "auto"):
            raise DomainError("codebook_mode must be explicit, ensemble or auto")
        if self.key_rate is not None and self.key_rate < 0:
            raise DomainError("key_rate must be nonnegative")

    def echo(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, TypicalityParams):
                v = dict(zip(("xi", "zeta", "sigma", "vartheta"), v.as_tuple()))
            elif isinstance(v, AuxChannelPair):
                v = v.to_dict()
            elif isinstance(v, dict):
                v = {str(k): a.to_dict() for k, a in v.items()}
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


def default_typicality(src: CompoundSource) -> TypicalityParams:
    """Slacks scaled to the smallest positive cell of any state."""
    masses = np.concatenate([j[j > 0].ravel() for j in src.joints])
    return TypicalityParams.scaled(float(masses.min()))


# ------------------------------------------------------------ context

@dataclass
class ClassCode:
    """Per-class codebook material."""

    model: ClassModel
    sizes: CodebookSizes
    cb_u: CodebookU | None = None
    cb_v: CodebookV | None = None
    extractor: KeyExtractor | None = None
    cache_a: TypeTableCache | None = None
    cache_b: TypeTableCache | None = None


class ProtocolContext:
    """Codebooks, extractors and type caches for one configuration."""

    def __init__(self, src: CompoundSource, config: ProtocolConfig):
        self.src = src
        self.config = config
        self.params = config.typicality or default_typicality(src)
        self.classes = src.classes
        self.codes: list[ClassCode] = []
        for cls in self.classes:
            aux = self._aux_for(cls.index)
            model = ClassModel(src, cls.index, aux)
            self.codes.append(ClassCode(model, codebook_sizes(model, config.n, config.delta)))
        self.mode = self._pick_mode()
        cr_sizes = [self._cr_size(c) for c in self.codes]
        if config.key_rate is None:
            bits = max(0, int(math.floor(math.log2(min(cr_sizes)) + 1e-12)))
        else:
            bits = int(math.ceil(config.n * config.key_rate - 1e-12))
        self.key_bits = bits
        self.k = 2 ** bits
        for code in self.codes:
            ci = code.model.class_index
            code.extractor = KeyExtractor(self._cr_size(code) + 1, self.k,
                                          derive_seed(config.seed, ci, "extractor"))
            if self.mode == "explicit":
                code.cb_u = draw_codebook_u(code.model, code.sizes, config.seed)
                if config.layer == "ab":
                    code.cb_v = draw_codebook_v(code.model, code.cb_u, code.sizes, config.seed)
            else:
                code.cache_a = TypeTableCache(self._builder_a(code.model))
                code.cache_b = TypeTableCache(self._builder_b(code.model))

    def _aux_for(self, class_index: int) -> AuxChannelPair:
        aux = self.config.aux
        if aux is None:
            return AuxChannelPair.identity(self.src.sizes[0])
        if isinstance(aux, dict):
            return aux[class_index]
        return aux

    def _cr_size(self, code: ClassCode) -> int:
        return code.sizes.N4 if self.config.layer == "ab" else code.sizes.N2

    def _pick_mode(self) -> str:
        mode = self.config.codebook_mode
        if mode != "auto":
            return mode
        n = self.config.n
        for code in self.codes:
            s = code.sizes
            rows = s.N1 * s.N2
            total = rows * n * (1 + (s.N3 * s.N4 if self.config.layer == "ab" else 0))
            if rows > EXPLICIT_ROW_LIMIT or total > symbol_guard():
                return "ensemble"
        return "explicit"

    # -- ensemble type tables

    def _builder_a(self, model: ClassModel):
        nx = model.x_size
        p = self.params
        pred_a = Predicate((0,), (model.p_ux.T,), p.zeta)
        pred_b = Predicate((1,), tuple(model.p_uy(s).T for s in model.members), p.sigma * nx)
        p_u = model.p_u
        ny = self.src.sizes[1]

        def build(xy_counts):
            law = np.broadcast_to(p_u, (nx, ny, p_u.size))
            return build_type_table(xy_counts, law, (pred_a, pred_b))
        return build

    def _builder_b(self, model: ClassModel):
        nx = model.x_size
        p = self.params
        pred_a = Predicate((0, 1), (model.p_uvx.transpose(0, 2, 1),), p.sigma)
        pred_b = Predicate((0, 2), tuple(model.p_uvy(s).transpose(0, 2, 1)
                                         for s in model.members), p.vartheta * nx)
        cond = model.p_v_given_u
        ny = self.src.sizes[1]

        def build(uxy_counts):
            law = np.broadcast_to(cond[:, None, None, :], (cond.shape[0], nx, ny, cond.shape[1]))
            return build_type_table(uxy_counts, law, (pred_a, pred_b))
        return build

    # -- public rate

    @property
    def public_rate(self) -> float:
        """``(1/n)(log N1 [+ log N3] + log |classes|)``, maximised over classes."""
        n = self.config.n
        best = 0.0
        for code in self.codes:
            s = code.sizes
            bits = math.log2(s.N1) + (math.log2(s.N3) if self.config.layer == "ab" else 0.0)
            best = max(best, bits)
        return (best + math.log2(len(self.classes))) / n

    @property
    def key_rate(self) -> float:
        return self.key_bits / self.config.n


# ------------------------------------------------------------ one trial

@dataclass(frozen=True)
class TranscriptSample:
    """One trial. Index 0 is the failure sentinel; ``class_index`` is -1
    when no class explains Alice's sequence."""

    state: int
    class_index: int
    i: int
    j: int
    p: int
    q: int
    j_bob: int
    q_bob: int
    key_alice: int
    key_bob: int

    @property
    def aborted(self) -> bool:
        return self.j == 0 or (self.q == 0 and self.p != 0) or self.class_index < 0

    @property
    def mismatch(self) -> bool:
        return self.key_alice != self.key_bob


def _explicit_trial(ctx: ProtocolContext, s: int, rng: np.random.Generator,
                    ab: bool) -> TranscriptSample:
    block = sample_block_rng(ctx.src, s, ctx.config.n, rng)
    counts = np.bincount(block.x_seq.astype(np.int64), minlength=ctx.src.sizes[0])
    c = int(decide(class_log_likelihoods(counts, ctx.classes)))
    if c < 0:
        return TranscriptSample(s, -1, 0, 0, 0, 0, 0, 0, 0, -1)
    code = ctx.codes[c]
    enc = encode_uv(block.x_seq, code.model, code.cb_u, code.cb_v if ab else None, ctx.params)
    j_bob = decode_g(enc.i, code.model, block.y_seq, code.cb_u, ctx.params)
    q_bob = 0
    if ab:
        q_bob = decode_rho(enc.i, j_bob, enc.p, code.model, block.y_seq,
                           code.cb_u, code.cb_v, ctx.params) if enc.p else 0
        cr_a, cr_b = enc.q, q_bob
    else:
        cr_a, cr_b = enc.j, j_bob
    ka, kb = code.extractor(cr_a), code.extractor(cr_b)
    return TranscriptSample(s, c, enc.i, enc.j, enc.p, enc.q, j_bob, q_bob, int(ka), int(kb))


def _ensemble_trial(ctx: ProtocolContext, s: int, rng_src: np.random.Generator,
                    rng_ens: np.random.Generator, ab: bool) -> TranscriptSample:
    nx, ny, _ = ctx.src.sizes
    p_xy = ctx.src.pair(s, (0, 1))
    xy = rng_src.multinomial(ctx.config.n, p_xy.ravel() / p_xy.sum()).reshape(nx, ny)
    c = int(decide(class_log_likelihoods(xy.sum(axis=1), ctx.classes)))
    if c < 0:
        return TranscriptSample(s, -1, 0, 0, 0, 0, 0, 0, 0, -1)
    code = ctx.codes[c]
    sz = code.sizes
    table = code.cache_a(xy)
    out = sample_layer(table, sz.N1, sz.N2, rng_ens)
    i, j, j_bob = out.row, out.col, out.bob_col
    p = q = q_bob = 0
    if ab and i:
        cells = np.flatnonzero(xy.ravel())
        hit = table.counts[out.hit_type]               # (cells, U)
        uxy = np.zeros((code.model.u_size, nx, ny), dtype=np.int64)
        for col, cell in enumerate(cells):
            a, b = divmod(int(cell), ny)
            uxy[:, a, b] = hit[col]
        out_b = sample_layer(code.cache_b(uxy), sz.N3, sz.N4, rng_ens)
        p, q = out_b.row, out_b.col
        # a wrong first-layer column changes the second table entirely; count it as lost
        q_bob = out_b.bob_col if j_bob == j else 0
    cr_a, cr_b = (q, q_bob) if ab else (j, j_bob)
    return TranscriptSample(s, c, i, j, p, q, j_bob, q_bob,
                            int(code.extractor(cr_a)), int(code.extractor(cr_b)))


def run_trial(ctx: ProtocolContext, s: int, t: int) -> TranscriptSample:
    """Trial ``t`` for true state ``s``; streams are derived from ``(s, t)``."""
    idx = s * TRIAL_STRIDE + t
    rng_src = rng_for(ctx.config.seed, idx, "source")
    ab = ctx.config.layer == "ab"
    if ctx.mode == "explicit":
        return _explicit_trial(ctx, s, rng_src, ab)
    return _ensemble_trial(ctx, s, rng_src, rng_for(ctx.config.seed, idx, "ensemble"), ab)


# ------------------------------------------------------------ aggregation

@dataclass(frozen=True)
class StateStats:
    """Counts for one true state over all trials."""

    state: int
    label: str
    trials: int
    mismatches: int
    failures: int
    aborts: int
    class_errors: int

    @staticmethod
    def _rate_ci(count: int, trials: int) -> tuple[float, float, float]:
        if trials == 0:
            return math.nan, math.nan, math.nan
        r = count / trials
        half = 3.0 * math.sqrt(r * (1 - r) / trials)
        return r, max(0.0, r - half), min(1.0, r + half)

    @property
    def disagreement(self) -> tuple[float, float, float]:
        """``Pr(K_A != K_B)`` with a 3-sigma interval."""
        return self._rate_ci(self.mismatches, self.trials)

    @property
    def failure(self) -> tuple[float, float, float]:
        """Mismatch or abort, with a 3-sigma interval."""
        return self._rate_ci(self.failures, self.trials)

    def to_dict(self) -> dict:
        d, f = self.disagreement, self.failure
        return {"state": self.state, "label": self.label, "trials": self.trials,
                "mismatches": self.mismatches, "failures": self.failures,
                "aborts": self.aborts, "class_errors": self.class_errors,
                "disagreement": d[0], "disagreement_ci": [d[1], d[2]],
                "failure": f[0], "failure_ci": [f[1], f[2]]}


def _run_chunk(src: CompoundSource, config: ProtocolConfig, s: int,
               start: int, stop: int) -> tuple[int, int, int, int]:
    ctx = ProtocolContext(src, config)
    return _tally(ctx, s, start, stop)


def _tally(ctx: ProtocolContext, s: int, start: int, stop: int) -> tuple[int, int, int, int]:
    true_class = next(c.index for c in ctx.classes if s in c.members)
    mism = fail = abort = cls_err = 0
    for t in range(start, stop):
        tr = run_trial(ctx, s, t)
        mism += tr.mismatch
        abort += tr.aborted
        fail += tr.mismatch or tr.aborted
        cls_err += tr.class_index != true_class
    return mism, fail, abort, cls_err


def _state_stats(ctx: ProtocolContext, s: int) -> StateStats:
    cfg = ctx.config
    if cfg.workers <= 1 or cfg.trials < 2 * cfg.workers:
        tot = _tally(ctx, s, 0, cfg.trials)
    else:
        edges = np.linspace(0, cfg.trials, cfg.workers + 1).astype(int)
        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(_run_chunk, itertools.repeat(ctx.src), itertools.repeat(cfg),
                                  itertools.repeat(s), edges[:-1], edges[1:]))
        tot = tuple(int(sum(v)) for v in zip(*parts))
    return StateStats(s, ctx.src.labels[s], cfg.trials, *tot)


# ------------------------------------------------------------ security

def _all_sequences(size: int, n: int) -> np.ndarray:
    grids = np.indices((size,) * n).reshape(n, -1).T
    return grids.astype(np.int16)


def _block_probability(p_xz: np.ndarray, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    prob = np.ones((xs.shape[0], zs.shape[0]))
    for t in range(xs.shape[1]):
        prob *= p_xz[xs[:, t]][:, zs[:, t]]
    return prob


def _typical_domain(model: ClassModel, xs: np.ndarray, eps: float) -> np.ndarray:
    """``x`` for which some ``u`` makes ``(u, x)`` typical (per-cell check)."""
    n = xs.shape[1]
    lo, hi = count_windows(model.p_ux, n, eps)
    counts = np.stack([(xs == a).sum(axis=1) for a in range(model.x_size)], axis=1)
    return np.all((counts >= lo.sum(axis=0)) & (counts <= hi.sum(axis=0)), axis=1)


@dataclass(frozen=True)
class EncoderTables:
    """Alice's deterministic maps over all of ``X^n``."""

    xs: np.ndarray
    est: np.ndarray
    i: np.ndarray
    j: np.ndarray
    p: np.ndarray
    q: np.ndarray
    domain: np.ndarray
    key: np.ndarray
    msg: np.ndarray


def encoder_tables(ctx: ProtocolContext) -> EncoderTables:
    """Run Alice's encoder on every ``x^n`` (explicit mode only)."""
    if ctx.mode != "explicit":
        raise BudgetError("encoder tables need explicit codebooks")
    n = ctx.config.n
    nx = ctx.src.sizes[0]
    if nx ** n > EXACT_BUDGET:
        raise BudgetError(f"|X|^n = {nx ** n} exceeds the exact budget; use plug-in mode")
    xs = _all_sequences(nx, n)
    counts = np.stack([(xs == a).sum(axis=1) for a in range(nx)], axis=1)
    est = decide(class_log_likelihoods(counts, ctx.classes))
    m = xs.shape[0]
    i, j, p, q = (np.zeros(m, dtype=np.int64) for _ in range(4))
    domain = np.zeros(m, dtype=bool)
    key = np.zeros(m, dtype=np.int64)
    ab = ctx.config.layer == "ab"
    for c, code in enumerate(ctx.codes):
        rows = np.flatnonzero(est == c)
        domain[rows] = _typical_domain(code.model, xs[rows], ctx.params.zeta)
        for r in rows:
            enc = encode_uv(xs[r], code.model, code.cb_u, code.cb_v if ab else None, ctx.params)
            i[r], j[r], p[r], q[r] = enc.i, enc.j, enc.p, enc.q
        cr = q[rows] if ab else j[rows]
        key[rows] = code.extractor(cr)
    # class, i and p make up the public message
    n1 = max(c.sizes.N1 for c in ctx.codes) + 1
    n3 = max(c.sizes.N3 for c in ctx.codes) + 1 if ab else 1
    msg = ((est.astype(np.int64) + 1) * n1 + i) * n3 + p
    return EncoderTables(xs, est, i, j, p, q, domain, key, msg)


def _indicator(ctx: ProtocolContext, tables: EncoderTables, s: int,
               zs: np.ndarray) -> np.ndarray:
    """``1{x in T and (u, x, z) typical for state s}`` over all ``(x, z)``."""
    n = ctx.config.n
    nz = ctx.src.sizes[2]
    out = np.zeros((tables.xs.shape[0], zs.shape[0]), dtype=bool)
    for c, code in enumerate(ctx.codes):
        model = code.model
        p_uxz = aux_joint(ctx.src.joints[s], model.aux).sum(axis=(1, 3))
        p_uzx = p_uxz.transpose(0, 2, 1)
        lo, hi = count_windows(p_uzx, n, ctx.params.sigma)
        rows = np.flatnonzero((tables.est == c) & tables.domain & (tables.j > 0))
        for r in rows:
            u = code.cb_u.sequences[tables.i[r] - 1, tables.j[r] - 1]
            cnt = triple_counts(u, zs, tables.xs[r], model.u_size, nz, model.x_size)
            ok = (cnt >= lo) & (cnt <= hi)
            out[r] = np.all(ok.reshape(zs.shape[0], -1), axis=1)
    return out


def exact_law(ctx: ProtocolContext, s: int, tables: EncoderTables | None = None) -> ExactLaw:
    """Joint law of ``(x, z)`` and Alice's outputs for true state ``s``."""
    n = ctx.config.n
    nx, _, nz = ctx.src.sizes
    if (nx * nz) ** n > EXACT_BUDGET:
        raise BudgetError(f"|X|^n |Z|^n = {(nx * nz) ** n} exceeds the exact budget "
                          f"of {EXACT_BUDGET}; use plug-in mode")
    tables = tables or encoder_tables(ctx)
    zs = _all_sequences(nz, n)
    prob = _block_probability(ctx.src.pair(s, (0, 2)), tables.xs, zs)
    ind = _indicator(ctx, tables, s, zs)
    cr = tables.q if ctx.config.layer == "ab" else tables.j
    return ExactLaw(s, n, prob, tables.est, tables.i, cr, tables.msg, ind)


def assess_security(ctx: ProtocolContext, mode: str = "exact",
                    states: Sequence[int] | None = None) -> SecurityAssessment:
    """Security index against ``(Z^n, public message)`` per true state.

    Both the literal conditioning and the one that adds the typicality
    indicator are reported. Plug-in mode samples ``(x, z)`` pairs, maps them
    through the exact encoder tables and applies a Miller-Madow correction.
    """
    states = range(ctx.src.n_states) if states is None else states
    k = ctx.k
    if k == 1:
        zero = {s: 0.0 for s in states}
        return SecurityAssessment(mode, 1, zero, dict(zero), "Z^n, message")
    tables = encoder_tables(ctx)
    nz = ctx.src.sizes[2]
    n = ctx.config.n
    public, with_ind = {}, {}
    notes = []
    for s in states:
        if mode == "exact":
            law = exact_law(ctx, s, tables)
            z_ids = np.arange(law.prob.shape[1])[None, :]
            side = tables.msg[:, None] * law.prob.shape[1] + z_ids
            public[s] = security_index_from_ids(tables.key[:, None], side, law.prob, k)
            with_ind[s] = security_index_from_ids(tables.key[:, None], side * 2 + law.indicator,
                                                  law.prob, k)
        elif mode == "plugin":
            rng = rng_for(ctx.config.seed, s, "plugin")
            p_xz = ctx.src.pair(s, (0, 2))
            cells = rng.choice(p_xz.size, size=(ctx.config.plugin_samples, n),
                               p=p_xz.ravel() / p_xz.sum())
            x, z = np.divmod(cells, nz)
            nx = ctx.src.sizes[0]
            weights_x = nx ** np.arange(n - 1, -1, -1)
            weights_z = nz ** np.arange(n - 1, -1, -1)
            x_id = x @ weights_x
            z_id = z @ weights_z
            side = tables.msg[x_id] * nz ** n + z_id
            public[s] = plugin_security_index(tables.key[x_id], side, k)[1]
            zs = _all_sequences(nz, n)
            ind_tab = _indicator(ctx, tables, s, zs)
            with_ind[s] = plugin_security_index(tables.key[x_id],
                                                side * 2 + ind_tab[x_id, z_id], k)[1]
            notes.append("plug-in with Miller-Madow correction; residual bias "
                         "is O(cells^2 / samples^2)")
        else:
            raise DomainError("mode must be exact or plugin")
    return SecurityAssessment(mode, k, public, with_ind,
                              "Z^n, message (and typicality indicator)", tuple(dict.fromkeys(notes)))


# ------------------------------------------------------------ run report

@dataclass(frozen=True)
class RunReport:
    """Outcome of :func:`run_protocol`.

    ``conditions`` maps each achievability requirement to its measured value,
    threshold and pass flag (``None`` when not evaluated).
    """

    config: dict
    mode: str
    sizes: list
    per_state: list
    security: SecurityAssessment | None
    key_bits: int
    key_rate: float
    public_rate: float
    conditions: dict
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        sec = None
        if self.security is not None:
            sec = {"mode": self.security.mode, "k": self.security.k,
                   "conditioning": self.security.conditioning,
                   "per_state": {str(k): v for k, v in self.security.per_state.items()},
                   "per_state_indicator": {str(k): v for k, v
                                           in self.security.per_state_indicator.items()},
                   "max_public": self.security.value_public,
                   "max_indicator": self.security.value,
                   "notes": list(self.security.notes)}
        return {"config": self.config, "codebook_mode": self.mode, "sizes": self.sizes,
                "key_bits": self.key_bits, "key_rate": self.key_rate,
                "public_rate": self.public_rate,
                "per_state": [st.to_dict() for st in self.per_state],
                "security": sec, "conditions": self.conditions, "notes": list(self.notes)}


def _condition(value, threshold, holds) -> dict:
    return {"value": value, "threshold": threshold, "holds": holds}


def run_protocol(src: CompoundSource, config: ProtocolConfig) -> RunReport:
    """Simulate the protocol and check the four achievability conditions."""
    ctx = ProtocolContext(src, config)
    states = tuple(range(src.n_states)) if config.states is None else tuple(config.states)
    for s in states:
        if not 0 <= s < src.n_states:
            raise DomainError(f"state {s} out of range")
    stats = [_state_stats(ctx, s) for s in states] if config.trials else []
    security = None
    notes = [w for c in ctx.codes for w in c.sizes.warnings]
    if config.security_mode != "none":
        if ctx.mode == "explicit":
            security = assess_security(ctx, config.security_mode, states)
        else:
            notes.append("security not evaluated: ensemble mode has no fixed codebook")
    d = config.delta
    target = ctx.key_rate if config.key_rate is None else config.key_rate
    worst_dis = max((st.disagreement[0] for st in stats), default=math.nan)
    worst_fail = max((st.failure[0] for st in stats), default=math.nan)
    conds = {
        "public_rate": _condition(ctx.public_rate, config.gamma + d,
                                  ctx.public_rate < config.gamma + d),
        "key_rate": _condition(target, ctx.key_rate + d, target < ctx.key_rate + d),
        "reliability": _condition(worst_dis, d, bool(worst_dis < d) if stats else None),
        "reliability_with_aborts": _condition(worst_fail, d,
                                              bool(worst_fail < d) if stats else None),
        "security": _condition(security.value_public if security else None, d,
                               bool(security.value_public < d) if security else None),
        "security_with_indicator": _condition(security.value if security else None, d,
                                              bool(security.value < d) if security else None),
    }
    sizes = [{"class": c.model.class_index, "N1": c.sizes.N1, "N2": c.sizes.N2,
              "N3": c.sizes.N3, "N4": c.sizes.N4,
              "log2": list(c.sizes.log2)} for c in ctx.codes]
    return RunReport(config.echo(), ctx.mode, sizes, stats, security, ctx.key_bits,
                     ctx.key_rate, ctx.public_rate, conds, tuple(notes))


# ------------------------------------------------------------ sweeps

SWEEP_AXES = ("n", "gamma", "rate", "seed")


def sweep(src: CompoundSource, config: ProtocolConfig, axis: str,
          values: Sequence, u_size: int = 1, v_size: int | None = None) -> list[dict]:
    """One row per value of ``axis``.

    ``n``, ``rate`` and ``seed`` rerun the protocol; ``gamma`` evaluates the
    lower bound on a warm-started grid of constraints.
    """
    if axis not in SWEEP_AXES:
        raise DomainError(f"axis must be one of {SWEEP_AXES}")
    rows = []
    if axis == "gamma":
        from .capacity import lower_bound_curve
        reports = lower_bound_curve(src, list(values), u_size=u_size, v_size=v_size)
        for g, rep in zip(values, reports):
            rows.append({"gamma": g, "lower_bound": rep.value})
        return rows
    for v in values:
        if axis == "n":
            cfg = replace(config, n=int(v))
        elif axis == "rate":
            cfg = replace(config, key_rate=float(v))
        else:
            cfg = replace(config, seed=int(v))
        rep = run_protocol(src, cfg)
        row = {axis: v, "key_rate": rep.key_rate, "public_rate": rep.public_rate}
        for st in rep.per_state:
            row[f"disagreement_{st.label}"] = st.disagreement[0]
            row[f"failure_{st.label}"] = st.failure[0]
        if rep.security is not None:
            row["security"] = rep.security.value_public
            row["security_indicator"] = rep.security.value
        rows.append(row)
    return rows


@dataclass(frozen=True)
class EnsembleSecurity:
    """Security over independent codebook and extractor draws.

    A single draw fluctuates strongly at small ``n``; the random-coding
    guarantees concern the draw ensemble, so the mean is the stable summary.
    """

    seeds: tuple[int, ...]
    assessments: tuple[SecurityAssessment, ...]

    @property
    def mean_public(self) -> float:
        return float(np.mean([a.value_public for a in self.assessments]))

    @property
    def mean_indicator(self) -> float:
        return float(np.mean([a.value for a in self.assessments]))

    @property
    def stderr_indicator(self) -> float:
        vals = [a.value for a in self.assessments]
        return float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.nan


def security_over_draws(src: CompoundSource, config: ProtocolConfig, draws: int,
                        mode: str = "exact") -> EnsembleSecurity:
    """Assess security for ``draws`` codebook/extractor seeds derived from
    ``config.seed``."""
    seeds = tuple(derive_seed(config.seed, d, "draw") for d in range(draws))
    out = []
    for sd in seeds:
        ctx = ProtocolContext(src, replace(config, seed=sd, codebook_mode="explicit"))
        out.append(assess_security(ctx, mode, config.states))
    return EnsembleSecurity(seeds, tuple(out))


def good_sets(ctx: ProtocolContext, class_index: int, state: int, tau: float,
              k: int | None = None):
    """Good-set family for a class and true state, from the exact law.

    ``tau`` is the self-information slack in the scaling of ``alpha``.
    """
    from .extraction import build_good_sets

    if ctx.config.layer != "a":
        raise DomainError("good sets are built for the first-layer common randomness")
    code = ctx.codes[class_index]
    if state not in code.model.members:
        raise DomainError(f"state {state} is not in class {class_index}")
    law = exact_law(ctx, state)
    zs = _all_sequences(ctx.src.sizes[2], ctx.config.n)
    return build_good_sets(law, code.cb_u.sequences, zs, code.model.p_z(state),
                           code.model.p_uxz(state), class_index, ctx.params.xi,
                           ctx.params.sigma, ctx.config.delta, tau, k,
                           members=len(code.model.members))
