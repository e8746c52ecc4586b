"""Finite-alphabet probability primitives.

Probability mass functions are plain numpy arrays. A pmf is a 1-d array, a
joint pmf is a 2-d or 3-d array whose axes index the component alphabets, and
a channel is a 2-d array whose rows are pmfs (one row per input symbol).

All information quantities are in bits.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DomainError

#: Tolerance for mass sums and for clamping tiny negative entries.
PMF_TOL = 1e-12


def as_pmf(p, *, ndim: int | None = None, name: str = "pmf") -> np.ndarray:
    """Return a validated float copy of a probability array.

    Entries in ``[-PMF_TOL, 0)`` are clamped to zero; anything more negative
    or a total mass off by more than ``PMF_TOL`` raises :class:`DomainError`.

    Parameters
    ----------
    p : array_like
        Candidate probability array of any shape.
    ndim : int, optional
        Required number of dimensions.
    name : str
        Label used in error messages.

    Returns
    -------
    numpy.ndarray
        A float64 copy with clamped entries.
    """
    arr = np.array(p, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise DomainError(f"{name}: expected {ndim}-d array, got shape {arr.shape}")
    if arr.size == 0:
        raise DomainError(f"{name}: empty alphabet")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: non-finite entries")
    if np.any(arr < -PMF_TOL):
        raise DomainError(f"{name}: negative mass {arr.min():.3e}")
    arr[arr < 0] = 0.0
    total = arr.sum()
    if abs(total - 1.0) > PMF_TOL * max(1, arr.size):
        raise DomainError(f"{name}: total mass {total!r} differs from 1")
    return arr


def as_channel(w, *, name: str = "channel") -> np.ndarray:
    """Validate a row-stochastic matrix (each row a pmf)."""
    arr = np.array(w, dtype=float)
    if arr.ndim != 2:
        raise DomainError(f"{name}: expected 2-d array, got shape {arr.shape}")
    if np.any(arr < -PMF_TOL) or not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: invalid entries")
    arr[arr < 0] = 0.0
    sums = arr.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > PMF_TOL * max(1, arr.shape[1]))
    if bad.size:
        raise DomainError(f"{name}: row {bad[0]} sums to {sums[bad[0]]!r}")
    return arr


def _plogp(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p, dtype=float)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def entropy(p) -> float:
    """Shannon entropy of a pmf (any shape, treated as one flat alphabet).

    Examples
    --------
    >>> entropy([0.25, 0.25, 0.25, 0.25])
    2.0
    """
    arr = as_pmf(p)
    return max(0.0, float(-_plogp(arr).sum()))


def binary_entropy(a: float) -> float:
    """Binary entropy ``h(a)`` in bits."""
    if not (0.0 <= a <= 1.0) or not np.isfinite(a):
        raise DomainError(f"binary_entropy: {a!r} outside [0, 1]")
    if a == 0.0 or a == 1.0:
        return 0.0
    return float(-a * np.log2(a) - (1 - a) * np.log2(1 - a))


def marginalize(joint, keep: Sequence[int] | int) -> np.ndarray:
    """Sum out every axis not listed in ``keep``.

    The returned array has its axes in the order given by ``keep``.
    """
    arr = np.asarray(joint, dtype=float)
    if isinstance(keep, (int, np.integer)):
        keep = (int(keep),)
    keep = tuple(int(k) for k in keep)
    if len(set(keep)) != len(keep) or any(k < 0 or k >= arr.ndim for k in keep):
        raise DomainError(f"marginalize: bad axes {keep} for {arr.ndim}-d joint")
    drop = tuple(ax for ax in range(arr.ndim) if ax not in keep)
    summed = arr.sum(axis=drop) if drop else arr
    remaining = [ax for ax in range(arr.ndim) if ax in keep]
    order = [remaining.index(k) for k in keep]
    return np.transpose(summed, order)


def mutual_information(joint) -> float:
    """``I(A;B)`` for a 2-d joint pmf."""
    arr = as_pmf(joint, ndim=2, name="joint")
    h_a = -_plogp(arr.sum(axis=1)).sum()
    h_b = -_plogp(arr.sum(axis=0)).sum()
    h_ab = -_plogp(arr).sum()
    return max(0.0, float(h_a + h_b - h_ab))


def conditional_mutual_information(joint, condition: int = 2) -> float:
    """``I(A;B|C)`` for a 3-d joint pmf, ``condition`` naming the C axis.

    Computed as ``H(A,C) + H(B,C) - H(A,B,C) - H(C)``.
    """
    arr = as_pmf(joint, ndim=3, name="joint")
    if condition not in (0, 1, 2):
        raise DomainError(f"conditional_mutual_information: bad axis {condition}")
    a, b = (ax for ax in range(3) if ax != condition)
    h = lambda q: -_plogp(q).sum()
    val = (h(marginalize(arr, (a, condition))) + h(marginalize(arr, (b, condition)))
           - h(arr) - h(marginalize(arr, condition)))
    return max(0.0, float(val))


def variational_distance(p, q) -> float:
    """1-norm distance ``sum |p - q|`` between two pmfs on one alphabet."""
    pa, qa = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if pa.shape != qa.shape:
        raise DomainError(f"variational_distance: shapes {pa.shape} vs {qa.shape}")
    return float(np.abs(pa - qa).sum())


def conditional_entropy(joint, given: Sequence[int] | int) -> float:
    """``H(rest | given)`` for a joint pmf."""
    arr = as_pmf(joint)
    return max(0.0, entropy(arr) - entropy(marginalize(arr, given)))


def joint_from_channel(p, channel) -> np.ndarray:
    """Joint ``P(a, b) = p(a) W(b|a)``."""
    return np.asarray(p, dtype=float)[:, None] * np.asarray(channel, dtype=float)
