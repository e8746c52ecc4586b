"""Compound discrete memoryless multiple sources.

A :class:`CompoundSource` holds one joint pmf over ``X x Y x Z`` per state.
Alice observes ``X``, Bob ``Y`` and the eavesdropper ``Z``. States sharing the
same ``X``-marginal are grouped into a :class:`MarginalClass`; Alice can only
ever distinguish classes, never states inside a class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError
from .prob import as_pmf, marginalize
from .seeds import rng_for

MARGINAL_TOL = 1e-10
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class MarginalClass:
    """States sharing one ``X``-marginal.

    Attributes
    ----------
    index : int
        Position of the class in the partition (0-based).
    label : str
        Label of the first member, used as the class label.
    x_marginal : numpy.ndarray
        The common ``X``-marginal.
    members : tuple of int
        State indices belonging to the class, in source order.
    """

    index: int
    label: str
    x_marginal: np.ndarray
    members: tuple[int, ...]


@dataclass(frozen=True)
class SampleBlock:
    """Length-``n`` i.i.d. block drawn from one state."""

    n: int
    x_seq: np.ndarray
    y_seq: np.ndarray
    z_seq: np.ndarray
    true_state: int


@dataclass
class CompoundSource:
    """Finite family of joint pmfs over ``X x Y x Z``.

    Parameters
    ----------
    joints : sequence of array_like
        One ``(|X|, |Y|, |Z|)`` array per state.
    labels : sequence of str, optional
        State labels; defaults to ``s0, s1, ...``.
    """

    joints: Sequence[np.ndarray]
    labels: Sequence[str] | None = None
    _classes: list[MarginalClass] | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if len(self.joints) == 0:
            raise DomainError("compound source needs at least one state")
        arrs = [as_pmf(j, ndim=3, name=f"state {i}") for i, j in enumerate(self.joints)]
        shape = arrs[0].shape
        for i, a in enumerate(arrs):
            if a.shape != shape:
                raise DomainError(f"state {i} has shape {a.shape}, expected {shape}")
        self.joints = tuple(arrs)
        for a in self.joints:
            a.setflags(write=False)
        if self.labels is None:
            self.labels = tuple(f"s{i}" for i in range(len(arrs)))
        else:
            self.labels = tuple(str(s) for s in self.labels)
            if len(self.labels) != len(arrs) or len(set(self.labels)) != len(arrs):
                raise DomainError("state labels must be unique, one per state")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.joints[0].shape

    @property
    def n_states(self) -> int:
        return len(self.joints)

    def state_index(self, state) -> int:
        """Resolve a state given by index or label."""
        if isinstance(state, (int, np.integer)):
            if 0 <= state < self.n_states:
                return int(state)
        elif state in self.labels:
            return self.labels.index(state)
        raise DomainError(f"unknown state {state!r}")

    def pair(self, state: int, axes: tuple[int, int]) -> np.ndarray:
        return marginalize(self.joints[state], axes)

    def x_marginal(self, state: int) -> np.ndarray:
        return marginalize(self.joints[state], 0)

    @property
    def classes(self) -> list[MarginalClass]:
        if self._classes is None:
            self._classes = marginal_partition(self)
        return self._classes

    def class_of(self, state: int) -> MarginalClass:
        for c in self.classes:
            if state in c.members:
                return c
        raise DomainError(f"state {state} belongs to no class")

    def restrict(self, states: Sequence[int]) -> "CompoundSource":
        """Sub-source with the given states only."""
        states = list(states)
        return CompoundSource([self.joints[s] for s in states],
                              [self.labels[s] for s in states])


def marginal_partition(src: CompoundSource) -> list[MarginalClass]:
    """Group states by equality of their ``X``-marginals.

    Classes are ordered by their first-appearing member, and a state joins the
    first class whose marginal matches its own within ``1e-10`` (sup norm).
    """
    reps: list[np.ndarray] = []
    members: list[list[int]] = []
    for s in range(src.n_states):
        px = src.x_marginal(s)
        for k, rep in enumerate(reps):
            if np.max(np.abs(rep - px)) <= MARGINAL_TOL:
                members[k].append(s)
                break
        else:
            reps.append(px)
            members.append([s])
    return [MarginalClass(k, src.labels[m[0]], reps[k], tuple(m))
            for k, m in enumerate(members)]


def sample_block(src: CompoundSource, state, n: int, seed: int) -> SampleBlock:
    """Draw ``n`` i.i.d. triples from one state's joint pmf."""
    s = src.state_index(state)
    if n < 1:
        raise DomainError("block length must be at least 1")
    rng = rng_for(seed, s, "source")
    return sample_block_rng(src, s, n, rng)


def sample_block_rng(src: CompoundSource, s: int, n: int,
                     rng: np.random.Generator) -> SampleBlock:
    """As :func:`sample_block` but drawing from an existing generator."""
    joint = src.joints[s]
    nx, ny, nz = joint.shape
    flat = joint.ravel()
    idx = rng.choice(flat.size, size=n, p=flat / flat.sum())
    x, rest = np.divmod(idx, ny * nz)
    y, z = np.divmod(rest, nz)
    return SampleBlock(n, x.astype(np.int8 if nx < 128 else np.int32),
                       y.astype(np.int8 if ny < 128 else np.int32),
                       z.astype(np.int8 if nz < 128 else np.int32), s)


@dataclass(frozen=True)
class DegradedPair:
    """Outcome of the feasibility test for one ``(class, r, t)`` triple.

    ``witness`` is the channel ``D(z|y)`` when feasible. Otherwise
    ``residual`` is the smallest achievable 1-norm mismatch, which certifies
    infeasibility when it exceeds the tolerance.
    """

    class_index: int
    r: int
    t: int
    feasible: bool
    witness: np.ndarray | None
    residual: float


@dataclass(frozen=True)
class DegradedReport:
    feasible: bool
    pairs: tuple[DegradedPair, ...]

    def witness(self, r: int, t: int) -> np.ndarray | None:
        for p in self.pairs:
            if p.r == r and p.t == t:
                return p.witness
        return None


def degrading_channel(p_xy: np.ndarray, p_xz: np.ndarray) -> tuple[np.ndarray | None, float]:
    """Find a stochastic ``D`` with ``p_xz = p_xy @ D``.

    Solved as a phase-one linear program: minimise the total slack of the
    equality constraints over nonnegative ``D`` with unit row sums. A zero
    optimum means the transport exists.

    Returns
    -------
    witness : numpy.ndarray or None
        Row-stochastic ``(|Y|, |Z|)`` matrix, or ``None`` when infeasible.
    residual : float
        Minimal 1-norm mismatch ``sum |p_xy @ D - p_xz|``.
    """
    nx, ny = p_xy.shape
    nz = p_xz.shape[1]
    nd = ny * nz
    n_eq = nx * nz
    # Variables: D (row-major y,z), then slack+ and slack- per (x,z).
    a_transport = np.zeros((n_eq, nd))
    for x in range(nx):
        for z in range(nz):
            a_transport[x * nz + z, z::nz] = p_xy[x]
    a_eq = np.block([
        [a_transport, np.eye(n_eq), -np.eye(n_eq)],
        [np.kron(np.eye(ny), np.ones((1, nz))), np.zeros((ny, 2 * n_eq))],
    ])
    b_eq = np.concatenate([p_xz.ravel(), np.ones(ny)])
    cost = np.concatenate([np.zeros(nd), np.ones(2 * n_eq)])
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        return None, float("inf")
    d = np.clip(res.x[:nd].reshape(ny, nz), 0.0, None)
    d /= d.sum(axis=1, keepdims=True)
    residual = float(np.abs(p_xy @ d - p_xz).sum())
    if residual > FEASIBILITY_TOL:
        return None, residual
    return d, residual


def check_degraded(src: CompoundSource) -> DegradedReport:
    """Test the cross-state chain ``X - Y_r - Z_t`` for every class.

    For each class and each ordered pair ``(r, t)`` of its members, decides
    whether one channel ``D: Y -> Z`` carries state ``r``'s ``(X, Y)`` pair onto
    state ``t``'s ``(X, Z)`` pair.
    """
    pairs = []
    for cls in src.classes:
        for r in cls.members:
            p_xy = src.pair(r, (0, 1))
            for t in cls.members:
                p_xz = src.pair(t, (0, 2))
                d, resid = degrading_channel(p_xy, p_xz)
                pairs.append(DegradedPair(cls.index, r, t, d is not None, d, resid))
    return DegradedReport(all(p.feasible for p in pairs), tuple(pairs))


def bsc(p: float) -> np.ndarray:
    """Binary symmetric channel matrix with crossover ``p``."""
    return np.array([[1 - p, p], [p, 1 - p]])


def cascade_joint(p_x, w_xy, d_yz) -> np.ndarray:
    """Joint ``P(x,y,z) = P(x) W(y|x) D(z|y)`` of a Markov cascade."""
    p_x = np.asarray(p_x, dtype=float)
    return p_x[:, None, None] * np.asarray(w_xy)[:, :, None] * np.asarray(d_yz)[None, :, :]
