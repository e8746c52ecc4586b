"""Key extraction from common randomness and security evaluation.

The extractor is a uniformly random table ``kappa: C -> {1..k}``. The security
index of a key ``K`` against side information ``V`` is
``S(K|V) = log2 k - H(K|V)``; it is small only when the key is both nearly
uniform and nearly independent of ``V``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetError, DomainError
from .prob import as_pmf, binary_entropy
from .seeds import rng_for

TABLE_LIMIT = 2 ** 22
EXACT_BUDGET = 2 ** 24


# ------------------------------------------------------------ extractor

class KeyExtractor:
    """Random map from ``{0, ..., domain_size - 1}`` onto ``{1, ..., k}``.

    Small domains hold an explicit table drawn with numpy; larger ones
    evaluate a keyed BLAKE2b hash of the index lazily, which plays the role of
    an i.i.d. uniform table. With ``k`` a power of two both are exactly
    uniform per entry.
    """

    def __init__(self, domain_size: int, k: int, seed: int):
        if k < 1:
            raise DomainError("key size must be at least 1")
        if domain_size < 1:
            raise DomainError("domain must be nonempty")
        self.domain_size = int(domain_size)
        self.k = int(k)
        self.seed = int(seed)
        self.table = None
        if self.domain_size <= TABLE_LIMIT and self.k < 2 ** 62:
            rng = rng_for(self.seed, 0, "extractor")
            self.table = rng.integers(1, self.k + 1, size=self.domain_size, dtype=np.int64)
        self._key = self.seed.to_bytes(8, "little", signed=False)

    def _hash(self, c: int) -> int:
        nbytes = max(8, (self.k.bit_length() + 71) // 8)
        c = int(c)
        h = hashlib.blake2b(c.to_bytes(max(16, (c.bit_length() + 7) // 8), "little"),
                            key=self._key,
                            digest_size=min(64, nbytes)).digest()
        return int.from_bytes(h, "little") % self.k + 1

    def __call__(self, c):
        if self.table is not None:
            return self.table[c] if not np.isscalar(c) else int(self.table[int(c)])
        if np.isscalar(c):
            return self._hash(int(c))
        return np.array([self._hash(int(v)) for v in np.ravel(c)], dtype=object).reshape(np.shape(c))

    def push_forward(self, pmf) -> np.ndarray:
        """Key distribution induced by a pmf on the domain."""
        pmf = np.asarray(pmf, dtype=float)
        if pmf.size != self.domain_size or self.table is None:
            raise DomainError("push_forward needs a tabulated extractor of matching size")
        return np.bincount(self.table - 1, weights=pmf, minlength=self.k)


def draw_extractor(domain_size: int, k: int, seed: int) -> KeyExtractor:
    """Seeded uniform extractor table."""
    return KeyExtractor(domain_size, k, seed)


def extractor_deviation_bound(lam: float, eps: float, eta: float, k: int) -> float:
    """``2k exp(-lam eps^2 (1 - eta) / (2k (1 + eps)))``.

    Bounds the probability that a random extractor leaves the key more than
    ``eps + 2 eta`` away from uniform (1-norm) when the input law puts at most
    ``1/lam`` on any point outside a set of mass ``eta``.
    """
    if lam <= 0 or eps <= 0 or eta < 0 or k < 1:
        raise DomainError("extractor_deviation_bound needs lam > 0, eps > 0, eta >= 0, k >= 1")
    return 2.0 * k * math.exp(-lam * eps * eps * (1.0 - eta) / (2.0 * k * (1.0 + eps)))


# ------------------------------------------------------------- security

def _entropy_bits(weights: np.ndarray) -> float:
    w = weights[weights > 0]
    tot = w.sum()
    if tot <= 0:
        return 0.0
    p = w / tot
    return float(-(p * np.log2(p)).sum())


def security_index(joint, k: int | None = None) -> float:
    """``log2 k - H(K) + I(K;V)`` for a joint pmf with axes ``(K, V...)``."""
    arr = as_pmf(joint)
    if arr.ndim == 1:
        arr = arr[:, None]
    arr = arr.reshape(arr.shape[0], -1)
    k = arr.shape[0] if k is None else k
    if arr.shape[0] != k:
        raise DomainError("first axis must have size k")
    h_kv = _entropy_bits(arr.ravel())
    h_v = _entropy_bits(arr.sum(axis=0))
    return max(0.0, math.log2(k) - (h_kv - h_v))


def security_index_from_ids(keys: np.ndarray, side: np.ndarray, weights: np.ndarray,
                            k: int) -> float:
    """Security index from aligned arrays of key values, side-information ids
    and probabilities (any shapes that broadcast together)."""
    keys, side, weights = np.broadcast_arrays(np.asarray(keys), np.asarray(side),
                                              np.asarray(weights, dtype=float))
    keys = keys.ravel().astype(np.int64)
    side = side.ravel()
    weights = weights.ravel()
    nz = weights > 0
    keys, side, weights = keys[nz], side[nz], weights[nz]
    _, side_ids = np.unique(side, return_inverse=True)
    joint_ids = side_ids.astype(np.int64) * k + (keys - 1)
    _, inv = np.unique(joint_ids, return_inverse=True)
    h_kv = _entropy_bits(np.bincount(inv, weights=weights))
    h_v = _entropy_bits(np.bincount(side_ids, weights=weights))
    total = weights.sum()
    if abs(total - 1.0) > 1e-9:
        raise DomainError(f"weights sum to {total}, expected 1")
    return max(0.0, math.log2(k) - (h_kv - h_v))


def plugin_security_index(keys: np.ndarray, side: np.ndarray, k: int) -> tuple[float, float]:
    """Plug-in estimate from samples, with the Miller-Madow correction.

    Returns ``(plug_in, corrected)``. The plug-in estimate of ``H(K|V)`` is
    biased low by roughly ``(cells_KV - cells_V) / (2 N ln 2)``, so the raw
    security index is biased high; the corrected value adds that term back to
    the entropy.
    """
    keys = np.asarray(keys).ravel().astype(np.int64)
    side = np.asarray(side).ravel()
    n = keys.size
    _, side_ids = np.unique(side, return_inverse=True)
    joint_ids = side_ids.astype(np.int64) * k + (keys - 1)
    _, inv = np.unique(joint_ids, return_inverse=True)
    c_kv = np.bincount(inv)
    c_v = np.bincount(side_ids)
    h_kv = _entropy_bits(c_kv.astype(float))
    h_v = _entropy_bits(c_v.astype(float))
    raw = math.log2(k) - (h_kv - h_v)
    bias = ((c_kv > 0).sum() - (c_v > 0).sum()) / (2.0 * n * math.log(2))
    return max(0.0, raw), max(0.0, raw - bias)


@dataclass(frozen=True)
class SecurityAssessment:
    """Security index per true state.

    ``per_state`` maps state index to the index against Eve's view
    ``(Z^n, public message)``; ``per_state_indicator`` additionally conditions
    on the joint-typicality indicator used in the analysis. ``value`` is the
    maximum over states of the latter.
    """

    mode: str
    k: int
    per_state: dict
    per_state_indicator: dict
    conditioning: str
    notes: tuple[str, ...] = ()

    @property
    def value(self) -> float:
        vals = list(self.per_state_indicator.values()) or list(self.per_state.values())
        return max(vals) if vals else float("nan")

    @property
    def value_public(self) -> float:
        return max(self.per_state.values()) if self.per_state else float("nan")


# ------------------------------------------------------------ good sets

@dataclass(frozen=True)
class ExactLaw:
    """Exact joint law of everything Alice does, for one true state.

    All arrays are indexed by ``x`` (all of ``X^n`` in lexicographic order)
    and, where two-dimensional, by ``z`` as the second axis.

    Attributes
    ----------
    prob : numpy.ndarray
        ``P(x, z)``, shape ``(|X|^n, |Z|^n)``.
    est : numpy.ndarray
        Alice's class decision per ``x``.
    row : numpy.ndarray
        Public row index ``i`` (0 on failure).
    cr : numpy.ndarray
        Common randomness ``j`` (0 on failure).
    msg : numpy.ndarray
        Id of the full public message (class decision, ``i`` and ``p``).
    indicator : numpy.ndarray
        Joint-typicality indicator of ``(u, x, z)``, shape as ``prob``.
    """

    state: int
    n: int
    prob: np.ndarray
    est: np.ndarray
    row: np.ndarray
    cr: np.ndarray
    msg: np.ndarray
    indicator: np.ndarray


@dataclass(frozen=True)
class GoodSetFamily:
    """Good sets for one class and the checks on them.

    ``checks`` maps a condition name to a pass flag and ``slack`` to the
    numeric margins (positive means satisfied).
    """

    class_index: int
    alpha: float
    eta: float
    lam: float
    set_sizes: dict
    min_section: int
    d_size: int
    checks: dict
    slack: dict
    k_max: int | None
    failures: tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return all(self.checks.values())


def good_set_parameters(n: int, delta: float, tau: float) -> tuple[float, float]:
    """``alpha = 2^{-n(delta + 5 tau)}``, ``eta = 2^{-n delta}``."""
    return 2.0 ** (-n * (delta + 5 * tau)), 2.0 ** (-n * delta)


def good_set_security_bound(alpha: float, eta: float, k: int) -> float:
    """``(alpha + 2 eta) log2 k + h(alpha + eta)``."""
    return (alpha + 2 * eta) * math.log2(k) + binary_entropy(min(1.0, alpha + eta))


def good_set_failure_probability(alpha: float, k: int, d_size: int, members: int,
                               min_section: int) -> float:
    """``2 k |I| |D| exp(-alpha^5 min|B_sd| / k)``, capped at 1."""
    log_val = (math.log(2 * k * members * d_size)
               - alpha ** 5 * min_section / k)
    return 1.0 if log_val >= 0 else math.exp(log_val)


def largest_key_size(alpha: float, min_section: int, d_size: int, members: int) -> int | None:
    """Largest power of two strictly below both key-size limits, or ``None``."""
    first = alpha ** 6 * min_section
    log_second = 1.0 / alpha - math.log(2 * d_size * members)    # natural log
    limit_log2 = min(math.log2(first) if first > 0 else -math.inf, log_second / math.log(2))
    if limit_log2 <= 0:
        return None
    m = math.ceil(limit_log2) - 1
    return 2 ** m


def check_good_sets(p_cd: np.ndarray, in_b: np.ndarray, alpha: float, eta: float,
                    k: int | None, members: int = 1, class_index: int = 0) -> GoodSetFamily:
    """Verify the good-set conditions on an explicit ``(C, D)`` law.

    ``p_cd`` and ``in_b`` have shape ``(|C|, |D|)``; ``in_b`` marks the good
    set. With several states, call once per state and combine.
    """
    b_size = int(in_b.sum())
    sections = in_b.sum(axis=0)
    nonempty = sections[sections > 0]
    min_section = int(nonempty.min()) if nonempty.size else 0
    d_size = p_cd.shape[1]
    mass_b = float(p_cd[in_b].sum())
    max_cell = float(p_cd[in_b].max()) if b_size else 0.0
    cell_limit = 1.0 / (alpha * b_size) if b_size else 0.0
    cover_need = 1.0 - (eta ** 2 - alpha ** 2)
    k_max = largest_key_size(alpha, min_section, d_size, members) if min_section else None
    first_limit = alpha ** 6 * min_section
    checks = {
        "regime": alpha <= 1 / 6 and eta <= 1 / 3 and alpha <= eta,
        "cell_mass": b_size > 0 and max_cell < cell_limit,
        "coverage": mass_b >= cover_need,
    }
    slack = {"cell_mass": cell_limit - max_cell, "coverage": mass_b - cover_need,
             "key_size": (first_limit - k) if k is not None else float("nan")}
    if k is not None:
        checks["key_size"] = k_max is not None and k <= k_max
    failures = tuple(name for name, ok in checks.items() if not ok)
    lam = alpha ** 3 * min_section
    return GoodSetFamily(class_index, alpha, eta, lam, {"B": b_size, "mass": mass_b},
                         min_section, d_size, checks, slack, k_max, failures)


def build_good_sets(law: ExactLaw, codewords: np.ndarray, z_seqs: np.ndarray,
                    p_z: np.ndarray, p_uxz: np.ndarray, class_index: int,
                    xi: float, sigma: float, delta: float, tau: float,
                    k: int | None = None, members: int = 1) -> GoodSetFamily:
    """Good sets for one state, built literally from the coding scheme.

    ``C`` is the common randomness ``j`` and ``D = (i, z^n, indicator)``; the
    good set collects ``(j, (i, z, 1))`` with ``z`` typical and
    ``(u_ij, x, z)`` completable to a typical triple. The law is conditioned on
    Alice deciding ``class_index``.

    Parameters
    ----------
    law : ExactLaw
    codewords : numpy.ndarray
        ``(N1, N2, n)`` table of the class.
    z_seqs : numpy.ndarray
        All ``z^n`` in the order of ``law.prob``'s second axis.
    p_z, p_uxz : numpy.ndarray
        ``P_Z`` and ``P_{UXZ}`` for the state.
    """
    from .typicality import count_windows

    n = law.n
    n1, n2 = codewords.shape[:2]
    alpha, eta = good_set_parameters(n, delta, tau)
    nu, nx, nz = p_uxz.shape
    # z typicality
    z_counts = np.stack([(z_seqs == c).sum(axis=1) for c in range(nz)], axis=1)
    lo_z, hi_z = count_windows(p_z, n, xi)
    z_typ = np.all((z_counts >= lo_z) & (z_counts <= hi_z), axis=1)
    # (u, z) cell counts for every codeword and every z
    flat_u = codewords.reshape(n1 * n2, n)
    uz = np.zeros((n1 * n2, z_seqs.shape[0], nu, nz), dtype=np.int32)
    for a in range(nu):
        ua = (flat_u == a).astype(np.int32)
        for c in range(nz):
            uz[:, :, a, c] = ua @ (z_seqs == c).T.astype(np.int32)
    # completion exists iff each (u, z) count fits the summed x-windows
    lo, hi = count_windows(p_uxz, n, sigma)
    lo_sum = lo.sum(axis=1)
    hi_sum = hi.sum(axis=1)
    fits = np.all((uz >= lo_sum) & (uz <= hi_sum), axis=(2, 3))    # (codeword, z)
    good = fits & z_typ[None, :]
    # D index: (i, z, ind); only ind = 1 cells can be good
    nzs = z_seqs.shape[0]
    d_size = (n1 + 1) * nzs * 2
    c_size = n2 + 1
    sel = law.est == class_index
    p_sel = law.prob[sel].sum()
    if p_sel <= 0:
        raise DomainError("class is never decided; good sets undefined")
    rows = law.row[sel]
    crs = law.cr[sel]
    prob = law.prob[sel] / p_sel
    ind = law.indicator[sel].astype(np.int64)
    d_ids = (rows[:, None] * nzs + np.arange(nzs)[None, :]) * 2 + ind
    c_ids = np.broadcast_to(crs[:, None], d_ids.shape)
    p_cd = np.zeros((c_size, d_size))
    np.add.at(p_cd, (c_ids.ravel(), d_ids.ravel()), prob.ravel())
    in_b = np.zeros((c_size, d_size), dtype=bool)
    ii, zz = np.divmod(np.arange(n1 * n2), n2)
    for cw in range(n1 * n2):
        i, j = ii[cw] + 1, zz[cw] + 1
        zs = np.flatnonzero(good[cw])
        in_b[j, (i * nzs + zs) * 2 + 1] = True
    fam = check_good_sets(p_cd, in_b, alpha, eta, k, members, class_index)
    return fam
