"""Secret-key rate formulas, auxiliary-channel search and related bounds.

The achievable-rate objective for one marginal class is::

    min_s I(V;Y_s|U) - max_s I(V;Z_s|U)

over auxiliary channels ``P(v|x)``, ``P(u|v)`` subject to the public-rate
constraint ``max_s I(U;X|Y_s) + max_s I(V;X|U,Y_s) < gamma``. The search is a
deterministic simplex grid followed by cyclic coordinate ascent; the result is
a certified lower bound on the optimum, never a claim of global optimality.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetError, DomainError, GuardError
from .prob import as_channel, binary_entropy, conditional_mutual_information, mutual_information
from .source import CompoundSource, check_degraded

STRICT_MARGIN = 1e-9


# ------------------------------------------------------------ degraded case

@dataclass(frozen=True)
class DegradedCapacity:
    """Degraded-case capacity with per-class inner values.

    ``value`` is clamped at zero; ``raw_value`` keeps the sign.
    ``within_hypothesis`` is false when some cross-state chain is infeasible,
    in which case the formula is reported but carries no capacity claim.
    """

    value: float
    raw_value: float
    per_class: tuple[float, ...]
    within_hypothesis: bool
    clamped: bool


def degraded_capacity_report(src: CompoundSource, check: bool = True) -> DegradedCapacity:
    """Evaluate ``min_class [min_r I(X;Y_r) - max_t I(X;Z_t)]``."""
    inner = []
    for cls in src.classes:
        i_y = min(mutual_information(src.pair(r, (0, 1))) for r in cls.members)
        i_z = max(mutual_information(src.pair(t, (0, 2))) for t in cls.members)
        inner.append(i_y - i_z)
    raw = min(inner)
    ok = check_degraded(src).feasible if check else True
    return DegradedCapacity(max(raw, 0.0), raw, tuple(inner), ok, raw < 0)


def degraded_capacity(src: CompoundSource) -> float:
    """Degraded-case secret-key capacity (bits per symbol, clamped at 0)."""
    return degraded_capacity_report(src, check=False).value


# ------------------------------------------------------- auxiliary channels

@dataclass(frozen=True)
class AuxChannelPair:
    """Auxiliary channels ``P(v|x)`` (``|X| x |V|``) and ``P(u|v)`` (``|V| x |U|``)."""

    p_v_given_x: np.ndarray
    p_u_given_v: np.ndarray

    def __post_init__(self):
        vx = as_channel(self.p_v_given_x, name="p_v_given_x")
        uv = as_channel(self.p_u_given_v, name="p_u_given_v")
        if uv.shape[0] != vx.shape[1]:
            raise DomainError("p_u_given_v must have one row per V symbol")
        object.__setattr__(self, "p_v_given_x", vx)
        object.__setattr__(self, "p_u_given_v", uv)

    @property
    def v_size(self) -> int:
        return self.p_v_given_x.shape[1]

    @property
    def u_size(self) -> int:
        return self.p_u_given_v.shape[1]

    @classmethod
    def identity(cls, x_size: int, u_equals_x: bool = True) -> "AuxChannelPair":
        """``V = X`` and either ``U = V`` or ``U`` constant."""
        eye = np.eye(x_size)
        return cls(eye, eye.copy() if u_equals_x else np.ones((x_size, 1)))

    def to_dict(self) -> dict:
        return {"p_v_given_x": self.p_v_given_x.tolist(),
                "p_u_given_v": self.p_u_given_v.tolist()}


def aux_joint(joint_xyz: np.ndarray, aux: AuxChannelPair) -> np.ndarray:
    """Joint ``P(u, v, x, y, z) = P(u|v) P(v|x) P(x, y, z)``."""
    return np.einsum("vu,xv,xyz->uvxyz", aux.p_u_given_v, aux.p_v_given_x, joint_xyz)


def aux_terms(joint_xyz: np.ndarray, aux: AuxChannelPair) -> dict[str, float]:
    """All mutual-information terms used by codebook sizes and rate formulas."""
    full = aux_joint(joint_xyz, aux)
    nu, nv, nx, ny, nz = full.shape
    uvxy = full.sum(axis=4)
    uvxz = full.sum(axis=3)
    ux = uvxy.sum(axis=(1, 3))
    uy = uvxy.sum(axis=(1, 2))
    uz = uvxz.sum(axis=(1, 2))
    # Group (U) or (U, something) as a single conditioning axis where needed.
    u_x_y = uvxy.sum(axis=1)                          # u, x, y
    v_y_u = np.moveaxis(uvxy.sum(axis=2), 0, 2)       # v, y, u
    v_z_u = np.moveaxis(uvxz.sum(axis=2), 0, 2)       # v, z, u
    v_x_uy = np.moveaxis(uvxy, 0, 2).reshape(nv, nx, nu * ny)
    return {
        "I(U;X)": mutual_information(ux),
        "I(U;Y)": mutual_information(uy),
        "I(U;Z)": mutual_information(uz),
        "I(U;X|Y)": conditional_mutual_information(u_x_y, 2),
        "I(V;Y|U)": conditional_mutual_information(v_y_u, 2),
        "I(V;Z|U)": conditional_mutual_information(v_z_u, 2),
        "I(V;X|U,Y)": conditional_mutual_information(v_x_uy, 2),
        "I(V;X|U)": conditional_mutual_information(
            np.moveaxis(uvxy.sum(axis=3), 0, 2), 2),
    }


# ----------------------------------------------------- batched evaluation

def _h(p: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -t.sum(axis=axes)


def _batch_terms(joint_xyz: np.ndarray, vx: np.ndarray, uv: np.ndarray):
    """Objective and constraint pieces for a batch of candidates.

    ``vx`` has shape ``(B, X, V)`` and ``uv`` shape ``(B, V, U)``. Returns
    arrays of ``I(V;Y|U)``, ``I(V;Z|U)``, ``I(U;X|Y)``, ``I(V;X|U,Y)``.
    """
    p_xy = joint_xyz.sum(axis=2)
    p_xz = joint_xyz.sum(axis=1)
    uvx = np.einsum("bvu,bxv->buvx", uv, vx)                 # P(u,v|x)
    uvxy = uvx[..., None] * p_xy[None, None, None]           # b,u,v,x,y
    uvxz = uvx[..., None] * p_xz[None, None, None]
    uvy = uvxy.sum(axis=3)
    uvz = uvxz.sum(axis=3)
    uxy = uvxy.sum(axis=2)
    h_u = _h(uvy.sum(axis=(2, 3)), (1,))
    h_uv = _h(uvy.sum(axis=3), (1, 2))
    h_uy = _h(uvy.sum(axis=2), (1, 2))
    h_uz = _h(uvz.sum(axis=2), (1, 2))
    h_uvy = _h(uvy, (1, 2, 3))
    h_uvz = _h(uvz, (1, 2, 3))
    h_uxy = _h(uxy, (1, 2, 3))
    h_uvxy = _h(uvxy, (1, 2, 3, 4))
    h_xy = _h(p_xy, (0, 1))
    h_y = _h(p_xy.sum(axis=0), (0,))
    i_vy_u = h_uv + h_uy - h_uvy - h_u
    i_vz_u = h_uv + h_uz - h_uvz - h_u
    i_ux_y = h_uy + h_xy - h_uxy - h_y
    i_vx_uy = h_uvy + h_uxy - h_uvxy - h_uy
    clip = lambda a: np.maximum(a, 0.0)
    return clip(i_vy_u), clip(i_vz_u), clip(i_ux_y), clip(i_vx_uy)


def _class_objective(src: CompoundSource, members: Sequence[int], vx, uv):
    """Objective and constraint load for a batch of candidates on one class."""
    obj_y = None
    obj_z = None
    load_u = None
    load_v = None
    for s in members:
        i_vy, i_vz, i_ux, i_vx = _batch_terms(src.joints[s], vx, uv)
        obj_y = i_vy if obj_y is None else np.minimum(obj_y, i_vy)
        obj_z = i_vz if obj_z is None else np.maximum(obj_z, i_vz)
        load_u = i_ux if load_u is None else np.maximum(load_u, i_ux)
        load_v = i_vx if load_v is None else np.maximum(load_v, i_vx)
    return obj_y - obj_z, load_u + load_v


# --------------------------------------------------------------- searching

@dataclass(frozen=True)
class SearchConfig:
    """Optimizer settings.

    Attributes
    ----------
    grid : int
        Lattice denominator ``q`` of the simplex grid and initial step ``1/q``.
    max_candidates : int
        Cap on the seeding grid size; the seeding resolution is lowered
        until the full product grid fits.
    restarts : int
        Number of best grid points refined by coordinate ascent.
    max_sweeps : int
        Sweep cap for coordinate ascent.
    tol : float
        Minimal improvement per sweep before the step is halved.
    min_step : float
        Coordinate ascent stops once the step falls below this.
    """

    grid: int = 32
    max_candidates: int = 200_000
    restarts: int = 4
    max_sweeps: int = 200
    tol: float = 1e-7
    min_step: float = 1e-6
    batch: int = 20_000


def simplex_grid(dim: int, q: int) -> np.ndarray:
    """All points of the probability simplex with coordinates in ``(1/q) Z``."""
    pts = []
    for bars in itertools.combinations(range(q + dim - 1), dim - 1):
        prev = -1
        comp = []
        for b in bars:
            comp.append(b - prev - 1)
            prev = b
        comp.append(q + dim - 2 - prev)
        pts.append(comp)
    return np.array(pts, dtype=float) / q


def _grid_size(dim: int, q: int) -> int:
    return math.comb(q + dim - 1, dim - 1)


def _seed_resolution(x_size: int, v_size: int, u_size: int, q: int, cap: int) -> int:
    for qs in range(q, 0, -1):
        total = _grid_size(v_size, qs) ** x_size * _grid_size(u_size, qs) ** v_size
        if total <= cap:
            return qs
    return 1


def _grid_candidates(x_size: int, v_size: int, u_size: int, q: int, batch: int):
    vrows = simplex_grid(v_size, q)
    urows = simplex_grid(u_size, q)
    row_sets = [vrows] * x_size + [urows] * v_size
    idx_iter = itertools.product(*[range(len(r)) for r in row_sets])
    while True:
        chunk = list(itertools.islice(idx_iter, batch))
        if not chunk:
            return
        idx = np.array(chunk)
        vx = np.stack([vrows[idx[:, i]] for i in range(x_size)], axis=1)
        uv = np.stack([urows[idx[:, x_size + i]] for i in range(v_size)], axis=1)
        yield vx, uv


@dataclass
class ClassOptimum:
    value: float
    load: float
    aux: AuxChannelPair
    sweeps: int


def _coordinate_ascent(src, members, vx, uv, gamma, cfg: SearchConfig) -> ClassOptimum:
    limit = gamma - STRICT_MARGIN
    vx = vx.copy()
    uv = uv.copy()
    val, load = (float(a[0]) for a in _class_objective(src, members, vx[None], uv[None]))
    step = 1.0 / cfg.grid
    sweeps = 0
    while sweeps < cfg.max_sweeps and step >= cfg.min_step:
        sweeps += 1
        start = val
        for which, mat in (("v", vx), ("u", uv)):
            rows, cols = mat.shape
            if cols < 2:
                continue
            pairs = [(a, b) for a in range(cols) for b in range(cols) if a != b]
            for r in range(rows):
                props = []
                for a, b in pairs:
                    amt = min(step, mat[r, a])
                    if amt <= 0:
                        continue
                    cand = mat.copy()
                    cand[r, a] -= amt
                    cand[r, b] += amt
                    props.append(cand)
                if not props:
                    continue
                stack = np.stack(props)
                if which == "v":
                    vals, loads = _class_objective(src, members, stack,
                                                   np.broadcast_to(uv, (len(props),) + uv.shape))
                else:
                    vals, loads = _class_objective(src, members,
                                                   np.broadcast_to(vx, (len(props),) + vx.shape), stack)
                vals = np.where(loads <= limit, vals, -np.inf)
                k = int(np.argmax(vals))
                if vals[k] > val:
                    val, load = float(vals[k]), float(loads[k])
                    mat[:] = stack[k]
        if val - start < cfg.tol:
            step /= 2
    return ClassOptimum(val, load, AuxChannelPair(vx, uv), sweeps)


@dataclass(frozen=True)
class RateReport:
    """Lower-bound search result.

    ``value`` is the minimum over classes of the best inner objective, clamped
    at zero; ``constraint_slack`` is ``gamma`` minus the constraint load of
    each reported optimizer.
    """

    value: float
    raw_value: float
    per_class: tuple[float, ...]
    optimizers: tuple[AuxChannelPair, ...]
    constraint_slack: tuple[float, ...]
    gamma: float
    method: dict = field(default_factory=dict)
    flags: tuple[str, ...] = ()


def optimize_class(src: CompoundSource, members: Sequence[int], gamma: float,
                   u_size: int, v_size: int, cfg: SearchConfig,
                   extra_seeds: Iterable[AuxChannelPair] = ()) -> tuple[ClassOptimum | None, dict]:
    """Grid seeding plus coordinate ascent for one marginal class."""
    x_size = src.sizes[0]
    limit = gamma - STRICT_MARGIN
    q_seed = _seed_resolution(x_size, v_size, u_size, cfg.grid, cfg.max_candidates)
    top: list[tuple[float, np.ndarray, np.ndarray]] = []
    evaluated = 0
    for vx, uv in _grid_candidates(x_size, v_size, u_size, q_seed, cfg.batch):
        vals, loads = _class_objective(src, members, vx, uv)
        evaluated += len(vals)
        vals = np.where(loads <= limit, vals, -np.inf)
        order = np.argsort(-vals, kind="stable")[:cfg.restarts]
        for k in order:
            if np.isfinite(vals[k]):
                top.append((float(vals[k]), vx[k], uv[k]))
        top.sort(key=lambda t: -t[0])
        top = top[:cfg.restarts]
    seeds = [(vx, uv) for _, vx, uv in top]
    for aux in extra_seeds:
        if aux.p_v_given_x.shape != (x_size, v_size) or aux.u_size != u_size:
            raise DomainError("extra seed has wrong auxiliary alphabet sizes")
        _, load = _class_objective(src, members, aux.p_v_given_x[None], aux.p_u_given_v[None])
        if load[0] <= limit:
            seeds.append((aux.p_v_given_x, aux.p_u_given_v))
    meta = {"grid": cfg.grid, "seed_grid": q_seed, "grid_points": evaluated,
            "restarts": len(seeds)}
    best = None
    for vx, uv in seeds:
        opt = _coordinate_ascent(src, members, vx, uv, gamma, cfg)
        if best is None or opt.value > best.value:
            best = opt
    return best, meta


def auxiliary_lower_bound(src: CompoundSource, gamma: float = math.inf, u_size: int = 1,
                     v_size: int | None = None, config: SearchConfig | None = None,
                     extra_seeds: Sequence[Sequence[AuxChannelPair]] | None = None) -> RateReport:
    """Lower bound on the secret-key capacity under public rate ``gamma``.

    Parameters
    ----------
    src : CompoundSource
    gamma : float
        Public-rate budget in bits per symbol (``math.inf`` for none).
    u_size, v_size : int
        Auxiliary alphabet sizes; ``v_size`` defaults to ``|X|``.
    config : SearchConfig, optional
    extra_seeds : list of list of AuxChannelPair, optional
        Additional starting points per class (for warm starts).
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    if u_size < 1 or (v_size is not None and v_size < 1):
        raise DomainError("auxiliary alphabet sizes must be positive")
    cfg = config or SearchConfig()
    v_size = v_size or src.sizes[0]
    values, opts, slacks, flags = [], [], [], []
    method = {"u_size": u_size, "v_size": v_size, "classes": []}
    for k, cls in enumerate(src.classes):
        seeds = extra_seeds[k] if extra_seeds else ()
        best, meta = optimize_class(src, cls.members, gamma, u_size, v_size, cfg, seeds)
        method["classes"].append(meta)
        if best is None:
            flags.append(f"class {cls.label}: constraint-infeasible at searched resolution")
            values.append(0.0)
            opts.append(None)
            slacks.append(float("nan"))
            continue
        values.append(best.value)
        opts.append(best.aux)
        slacks.append(gamma - best.load)
    raw = min(values)
    if raw < 0:
        flags.append("negative objective clamped to 0")
    method.update({k: v for k, v in cfg.__dict__.items()})
    return RateReport(max(raw, 0.0), raw, tuple(values), tuple(opts), tuple(slacks),
                      gamma, method, tuple(flags))


def lower_bound_curve(src: CompoundSource, gammas: Sequence[float], u_size: int = 1,
                      v_size: int | None = None,
                      config: SearchConfig | None = None) -> list[RateReport]:
    """Lower bound over increasing ``gamma`` with warm starts.

    Each optimizer is passed on as a seed for the next (larger) budget, so the
    returned values are non-decreasing in ``gamma`` by construction.
    """
    order = sorted(range(len(gammas)), key=lambda i: gammas[i])
    out: list[RateReport | None] = [None] * len(gammas)
    prev = None
    for i in order:
        seeds = [[a] if a is not None else [] for a in prev.optimizers] if prev else None
        rep = auxiliary_lower_bound(src, gammas[i], u_size, v_size, config, seeds)
        out[i] = rep
        prev = rep
    return out  # type: ignore[return-value]


# ------------------------------------------------------------- multi-letter

def product_source(src: CompoundSource, n: int) -> CompoundSource:
    """The ``n``-fold memoryless extension over super-alphabets ``X^n`` etc."""
    nx, ny, nz = src.sizes
    joints = []
    for j in src.joints:
        full = j
        for _ in range(n - 1):
            full = np.multiply.outer(full, j)
        # axes are (x1,y1,z1,x2,y2,z2,...); regroup to (x..., y..., z...)
        order = [3 * k for k in range(n)] + [3 * k + 1 for k in range(n)] + \
                [3 * k + 2 for k in range(n)]
        joints.append(np.transpose(full, order).reshape(nx ** n, ny ** n, nz ** n))
    return CompoundSource(joints, src.labels)


def product_aux(aux: AuxChannelPair, n: int) -> AuxChannelPair:
    """Letter-wise product of an auxiliary pair (Kronecker power)."""
    vx, uv = aux.p_v_given_x, aux.p_u_given_v
    out_vx, out_uv = vx, uv
    for _ in range(n - 1):
        out_vx = np.kron(out_vx, vx)
        out_uv = np.kron(out_uv, uv)
    return AuxChannelPair(out_vx, out_uv)


@dataclass(frozen=True)
class MultiLetterReport:
    n: int
    value: float
    total: float
    single_letter: float
    report: RateReport


def multi_letter_value(src: CompoundSource, n: int, u_size: int = 1, v_size: int | None = None,
                  config: SearchConfig | None = None, alphabet_cap: int = 16) -> MultiLetterReport:
    """Finite-``n`` multi-letter value ``a_n / n``.

    ``u_size`` and ``v_size`` are per-letter sizes; the ``n``-letter search
    uses ``u_size**n`` and ``v_size**n`` and is seeded with the letter-wise
    product of the single-letter optimizer in addition to its own grid.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    x_size = src.sizes[0]
    if x_size ** n > alphabet_cap:
        raise BudgetError(f"|X|^n = {x_size ** n} exceeds the cap {alphabet_cap}")
    v_size = v_size or x_size
    single = auxiliary_lower_bound(src, math.inf, u_size, v_size, config)
    if n == 1:
        return MultiLetterReport(1, single.value, single.value, single.value, single)
    big = product_source(src, n)
    seeds = [[product_aux(a, n)] if a is not None else [] for a in single.optimizers]
    rep = auxiliary_lower_bound(big, math.inf, u_size ** n, v_size ** n, config, seeds)
    return MultiLetterReport(n, rep.value / n, rep.value, single.value, rep)


# -------------------------------------------------------------- quantizing

@dataclass(frozen=True)
class QuantizedFamily:
    """Lattice net for a channel family.

    Attributes
    ----------
    l : int
        Lattice denominator; every net entry is a multiple of ``1/l``.
    net : list of numpy.ndarray
        Distinct lattice channels.
    assignment : tuple of int
        Net index for each input channel.
    max_abs_error : float
        Largest ``|W - W'|`` seen.
    max_log_ratio : float
        Largest ``ln(W / W')`` over positive entries.
    """

    l: int
    net: list
    assignment: tuple[int, ...]
    max_abs_error: float
    max_log_ratio: float

    def bound_abs(self, out_size: int) -> float:
        return out_size / self.l

    def bound_log_ratio(self, out_size: int) -> float:
        return 2.0 * out_size ** 2 / self.l


def lattice_channel(w: np.ndarray, l: int) -> np.ndarray:
    """Round a channel onto the ``1/l`` lattice.

    Every entry but the row maximum is rounded up, and the row maximum takes
    up the excess. Rounding up keeps small entries from shrinking, which is
    what the multiplicative bound needs; the maximum is at least ``1/|U|`` so
    its relative change stays within ``|U|(|U|-1)/l``.
    """
    units = np.ceil(w * l - 1e-9)
    units[w <= 0] = 0
    top = np.argmax(w, axis=1)
    rows = np.arange(w.shape[0])
    units[rows, top] = 0
    units[rows, top] = l - units.sum(axis=1)
    if np.any(units < 0):
        raise GuardError("lattice rounding produced a negative entry; increase l")
    return units / l


def quantize_family(family: Iterable, l: int) -> QuantizedFamily:
    """Map each channel ``X -> Y x Z`` to a nearby lattice channel.

    Channels may be given as ``(|X|, |Y|, |Z|)`` or ``(|X|, |Y||Z|)`` arrays.
    Both approximation bounds are verified for every channel and entry.

    Raises
    ------
    DomainError
        If ``l < 2 |U|^2`` where ``U`` is the output alphabet.
    GuardError
        If a bound fails after construction.
    """
    net: list[np.ndarray] = []
    keys: dict[bytes, int] = {}
    assignment = []
    max_abs = 0.0
    max_ratio = 0.0
    out_size = None
    for idx, w in enumerate(family):
        w = np.asarray(w, dtype=float)
        w = as_channel(w.reshape(w.shape[0], -1), name=f"channel {idx}")
        if out_size is None:
            out_size = w.shape[1]
            if l < 2 * out_size ** 2:
                raise DomainError(f"l={l} below 2|U|^2 = {2 * out_size ** 2}")
        elif w.shape[1] != out_size:
            raise DomainError("all channels must share one output alphabet")
        wq = lattice_channel(w, l)
        abs_err = np.abs(w - wq)
        pos = w > 0
        if np.any(pos & (wq <= 0)):
            x, u = np.argwhere(pos & (wq <= 0))[0]
            raise GuardError(f"support lost at (channel {idx}, x={x}, u={u})")
        ratio = np.zeros_like(w)
        ratio[pos] = np.log(w[pos] / wq[pos])
        bad_abs = abs_err > out_size / l + 1e-12
        bad_ratio = ratio > 2.0 * out_size ** 2 / l + 1e-12
        if bad_abs.any() or bad_ratio.any():
            x, u = np.argwhere(bad_abs | bad_ratio)[0]
            raise GuardError(f"lattice bound violated at (channel {idx}, x={x}, u={u})")
        max_abs = max(max_abs, float(abs_err.max()))
        max_ratio = max(max_ratio, float(ratio.max()))
        key = np.rint(wq * l).astype(np.int64).tobytes()
        if key not in keys:
            keys[key] = len(net)
            net.append(wq)
        assignment.append(keys[key])
    return QuantizedFamily(l, net, tuple(assignment), max_abs, max_ratio)


def source_channels(src: CompoundSource) -> list[np.ndarray]:
    """Per-state channels ``P(y, z | x)`` as ``(|X|, |Y||Z|)`` arrays.

    ``X`` symbols of zero marginal mass get a uniform row.
    """
    out = []
    for j in src.joints:
        px = j.sum(axis=(1, 2))
        flat = j.reshape(j.shape[0], -1)
        rows = np.where(px[:, None] > 0, flat / np.where(px > 0, px, 1.0)[:, None],
                        1.0 / flat.shape[1])
        out.append(rows)
    return out


def quantized_source(src: CompoundSource, qf: QuantizedFamily) -> CompoundSource:
    """Replace each state's channel by its net representative."""
    nx, ny, nz = src.sizes
    joints = []
    for s, j in enumerate(src.joints):
        px = j.sum(axis=(1, 2))
        wq = qf.net[qf.assignment[s]]
        joints.append((px[:, None] * wq).reshape(nx, ny, nz))
    return CompoundSource(joints, src.labels)


# ------------------------------------------------------- continuity, converse

def mi_continuity_bound(gamma: float, x_size: int, y_size: int) -> float:
    """``3 gamma log2(|X||Y| - 1) + 3 h(gamma)`` for half-1-norm distance ``gamma``."""
    cells = x_size * y_size
    if x_size < 1 or y_size < 1:
        raise DomainError("alphabet sizes must be positive")
    if not (0.0 <= gamma <= 1.0 - 1.0 / cells):
        raise DomainError(f"gamma={gamma} outside [0, 1 - 1/{cells}]")
    if gamma == 0.0:
        return 0.0
    return 3.0 * gamma * math.log2(cells - 1) + 3.0 * binary_entropy(gamma)


@dataclass(frozen=True)
class ConverseCheck:
    class_index: int
    r: int
    t: int
    lhs: float
    rhs: float
    marginal_error: float

    @property
    def holds(self) -> bool:
        return abs(self.lhs - self.rhs) <= 1e-9 and self.marginal_error <= 1e-9


@dataclass(frozen=True)
class ConverseReport:
    checked: tuple[ConverseCheck, ...]
    skipped: tuple[str, ...]

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checked)

    @property
    def max_error(self) -> float:
        return max((abs(c.lhs - c.rhs) for c in self.checked), default=0.0)


def converse_identity_check(src: CompoundSource) -> ConverseReport:
    """Check ``I(X;Y_r) - I(X;Z_t) = I(X;Y_r|Z_t)`` on the coupled joints.

    The coupled joint is ``P_{XY,r}(x, y) D(z|y)`` with ``D`` the degrading
    channel found for the pair. Pairs without a degrading channel are skipped.
    """
    rep = check_degraded(src)
    checked, skipped = [], []
    for pair in rep.pairs:
        if not pair.feasible:
            skipped.append(f"class {pair.class_index}: ({src.labels[pair.r]}, "
                           f"{src.labels[pair.t]}) not degraded; no identity claim")
            continue
        p_xy = src.pair(pair.r, (0, 1))
        coupled = p_xy[:, :, None] * pair.witness[None, :, :]
        p_xz = coupled.sum(axis=1)
        lhs = mutual_information(p_xy) - mutual_information(src.pair(pair.t, (0, 2)))
        rhs = conditional_mutual_information(coupled, 2)
        err = float(np.abs(p_xz - src.pair(pair.t, (0, 2))).sum())
        checked.append(ConverseCheck(pair.class_index, pair.r, pair.t, lhs, rhs, err))
    return ConverseReport(tuple(checked), tuple(skipped))
