"""Maximum-likelihood decision on Alice's marginal class."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError
from .seeds import rng_for
from .source import CompoundSource, MarginalClass

TIE_TOL = 1e-12


@dataclass(frozen=True)
class EstimatorResult:
    """ML decision and the per-class log-likelihoods (natural log)."""

    estimated_class: int
    log_likelihoods: tuple[float, ...]


def _log_marginals(classes: Sequence[MarginalClass]) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.stack([c.x_marginal for c in classes]))


def class_log_likelihoods(counts: np.ndarray, classes: Sequence[MarginalClass]) -> np.ndarray:
    """Log-likelihood of symbol counts under each class.

    ``counts`` has shape ``(..., |X|)``; the result has shape ``(..., classes)``.
    A zero-mass symbol that occurs gives ``-inf``.
    """
    logp = _log_marginals(classes)
    counts = np.asarray(counts)
    finite = np.where(np.isfinite(logp), logp, 0.0)
    ll = counts @ finite.T
    hits_zero = (counts[..., None, :] > 0) & ~np.isfinite(logp)
    return np.where(hits_zero.any(axis=-1), -np.inf, ll)


def decide(log_likelihoods: np.ndarray) -> np.ndarray:
    """Arg-max over the last axis with ties to the smallest index.

    Values within a relative ``1e-12`` of the maximum count as tied. Rows
    that are ``-inf`` everywhere return ``-1``.
    """
    ll = np.asarray(log_likelihoods, dtype=float)
    top = np.max(ll, axis=-1, keepdims=True)
    # values equal up to rounding count as ties
    tol = TIE_TOL * (1.0 + np.abs(np.where(np.isfinite(top), top, 0.0)))
    best = np.argmax(ll >= top - tol, axis=-1)
    dead = np.all(np.isneginf(ll), axis=-1)
    return np.where(dead, -1, best)


def estimate_marginal(x_seq, classes: Sequence[MarginalClass]) -> EstimatorResult:
    """ML class decision from Alice's observation.

    Raises
    ------
    DomainError
        If the sequence is impossible under every class.
    """
    if not classes:
        raise DomainError("no classes to choose from")
    size = classes[0].x_marginal.size
    counts = np.bincount(np.asarray(x_seq, dtype=np.int64), minlength=size)
    if counts.size > size:
        raise DomainError("symbol outside alphabet")
    ll = class_log_likelihoods(counts, classes)
    k = int(decide(ll))
    if k < 0:
        raise DomainError("no admissible class: sequence impossible under every class")
    return EstimatorResult(k, tuple(float(v) for v in ll))


@dataclass(frozen=True)
class ErrorCurve:
    """Monte Carlo misclassification rates and the fitted exponent.

    ``slope`` is the least-squares slope of ``ln(error)`` against ``n`` over
    the block lengths with nonzero error.
    """

    n_values: tuple[int, ...]
    error_rates: tuple[float, ...]
    trials: int
    slope: float | None


def estimate_error_curve(src: CompoundSource, class_index: int, n_list: Sequence[int],
                         trials: int, seed: int) -> ErrorCurve:
    """Misclassification rate when the truth is ``class_index``.

    The decision depends on the sample only through its type, so each trial
    draws a multinomial count vector directly.
    """
    if trials < 1:
        raise DomainError("trials must be positive")
    classes = src.classes
    truth = classes[class_index].x_marginal
    rates = []
    for idx, n in enumerate(n_list):
        rng = rng_for(seed, idx, "estimation")
        counts = rng.multinomial(int(n), truth, size=trials)
        wrong = decide(class_log_likelihoods(counts, classes)) != class_index
        rates.append(float(wrong.mean()))
    ns = np.array(n_list, dtype=float)
    err = np.array(rates)
    keep = err > 0
    slope = None
    if keep.sum() >= 2:
        slope = float(np.polyfit(ns[keep], np.log(err[keep]), 1)[0])
    return ErrorCurve(tuple(int(n) for n in n_list), tuple(rates), trials, slope)


def chernoff_exponent(p, q) -> float:
    """``min_lambda ln sum p^lambda q^(1-lambda)`` over ``lambda`` in [0, 1].

    The value is nonpositive; misclassification decays roughly as
    ``exp(n * value)``.
    """
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    both = (p > 0) & (q > 0)
    if not both.any():
        return -math.inf
    lp, lq = np.log(p[both]), np.log(q[both])

    def f(lam):
        return float(np.log(np.exp(lam * lp + (1 - lam) * lq).sum()))

    res = minimize_scalar(f, bounds=(0.0, 1.0), method="bounded",
                          options={"xatol": 1e-10})
    return min(res.fun, f(0.0), f(1.0))
