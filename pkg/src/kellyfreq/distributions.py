"""Finite discrete joint laws of one-step asset returns.

A :class:`JointReturnDistribution` is the i.i.d. ground truth for every other
module: the per-step return vector ``X(k)`` takes one of ``S`` support points
with known probabilities. Compound (block) returns over ``n`` steps are
obtained by exact product expansion or by seeded sampling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from os import PathLike
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DistributionError",
    "EnumerationCapError",
    "JointReturnDistribution",
    "CompoundOutcome",
    "DEFAULT_ENUMERATION_CAP",
    "make_distribution",
    "add_riskless",
    "compound",
    "compound_arrays",
    "sample",
    "sample_many",
    "load_distribution",
    "distribution_to_json",
]

DEFAULT_ENUMERATION_CAP = 10**6
_PROB_REJECT_TOL = 1e-9
_SEED_MASK = (1 << 64) - 1


class DistributionError(ValueError):
    """Invalid return distribution input."""


class EnumerationCapError(ValueError):
    """Exact enumeration would exceed the configured outcome cap."""


@dataclass(frozen=True, eq=False)
class JointReturnDistribution:
    """Finite joint law of the one-step return vector.

    Built through :func:`make_distribution`; the constructor does not
    validate. ``returns`` has shape ``(S, m)`` and ``probs`` shape ``(S,)``.
    Support points are stored in descending-probability order (ties keep
    input order) and both arrays are read-only.
    """

    asset_names: tuple[str, ...]
    returns: np.ndarray
    probs: np.ndarray
    riskless_flags: tuple[bool, ...]

    @property
    def m(self) -> int:
        return len(self.asset_names)

    @property
    def size(self) -> int:
        return len(self.probs)

    @property
    def support(self) -> list[tuple[tuple[float, ...], float]]:
        return [(tuple(float(v) for v in row), float(p)) for row, p in zip(self.returns, self.probs)]

    def mean_returns(self) -> np.ndarray:
        return self.probs @ self.returns

    def index(self, name: str) -> int:
        try:
            return self.asset_names.index(name)
        except ValueError:
            raise KeyError(f"unknown asset {name!r}") from None

    def __repr__(self) -> str:
        return f"JointReturnDistribution(assets={list(self.asset_names)}, support_size={self.size})"


@dataclass(frozen=True)
class CompoundOutcome:
    """One realization of the n-step compound return vector and its probability."""

    total_return_vector: tuple[float, ...]
    probability: float


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _merge_rows(rows: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge bitwise-identical rows, summing probabilities; keeps first-seen order."""
    rows = np.ascontiguousarray(rows)
    keys = rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()
    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    merged = np.bincount(inverse.ravel(), weights=probs, minlength=len(first))
    order = np.argsort(first, kind="stable")
    return rows[first[order]], merged[order]


def _riskless_scan(returns: np.ndarray) -> tuple[bool, ...]:
    return tuple(bool(np.all(returns[:, i] == returns[0, i])) for i in range(returns.shape[1]))


def make_distribution(
    names: Sequence[str],
    outcomes: Iterable[tuple[Sequence[float], float]],
) -> JointReturnDistribution:
    """Validate, merge and normalize a list of ``(return_vector, probability)`` outcomes.

    Raises
    ------
    DistributionError
        On inconsistent lengths, non-positive probabilities, a return
        component at or below -1 (loss per step must be < 100%), a non-finite
        return, or a probability total off by more than 1e-9.
    """
    names = tuple(str(n) for n in names)
    if len(names) < 2:
        raise DistributionError("need at least two assets")
    if len(set(names)) != len(names):
        raise DistributionError(f"duplicate asset names: {list(names)}")
    outcomes = list(outcomes)
    if not outcomes:
        raise DistributionError("need at least one outcome")

    rows = []
    probs = []
    for pos, (vec, p) in enumerate(outcomes):
        vec = [float(v) for v in vec]
        if len(vec) != len(names):
            raise DistributionError(f"outcome {pos}: expected {len(names)} returns, got {len(vec)}")
        p = float(p)
        if not np.isfinite(p) or p <= 0.0 or p > 1.0:
            raise DistributionError(f"outcome {pos}: probability must lie in (0, 1], got {p}")
        for name, v in zip(names, vec):
            if not np.isfinite(v):
                raise DistributionError(f"outcome {pos}: non-finite return for {name}")
            if v <= -1.0:
                raise DistributionError(
                    f"outcome {pos}: return {v} for {name} is <= -1 (loss per step must be < 100%)"
                )
        rows.append(vec)
        probs.append(p)

    total = float(np.sum(probs))
    if abs(total - 1.0) > _PROB_REJECT_TOL:
        raise DistributionError(f"probabilities sum to {total!r}, not 1")

    returns, merged = _merge_rows(np.asarray(rows, dtype=float), np.asarray(probs))
    merged = merged / merged.sum()
    order = np.argsort(-merged, kind="stable")
    returns = returns[order]
    merged = merged[order]
    return JointReturnDistribution(
        asset_names=names,
        returns=_freeze(returns),
        probs=_freeze(merged),
        riskless_flags=_riskless_scan(returns),
    )


def add_riskless(
    dist: JointReturnDistribution,
    rate: float,
    name: str = "CASH",
    allow_negative: bool = False,
) -> JointReturnDistribution:
    """Append an asset whose return equals ``rate`` in every support point.

    Negative rates are rejected unless ``allow_negative`` is set; a best
    riskless asset losing money is a rare but legitimate case.
    """
    rate = float(rate)
    if rate < 0.0 and not allow_negative:
        raise DistributionError(f"negative riskless rate {rate} requires allow_negative=True")
    names = list(dist.asset_names) + [name]
    outcomes = [(list(row) + [rate], p) for row, p in zip(dist.returns, dist.probs)]
    return make_distribution(names, outcomes)


def _check_cap(dist: JointReturnDistribution, n: int, cap: int) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if dist.size**n > cap:
        raise EnumerationCapError(
            f"{dist.size}^{n} outcomes exceed the enumeration cap {cap}; use Monte Carlo (growth_mc)"
        )


def compound_arrays(
    dist: JointReturnDistribution, n: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> tuple[np.ndarray, np.ndarray]:
    """Exact law of the n-step compound returns as ``(totals, probs)``.

    ``totals`` holds gross block returns ``prod(1 + x)`` with shape
    ``(outcomes, m)``; identical vectors are merged after each expansion step.
    """
    _check_cap(dist, n, cap)
    step = 1.0 + dist.returns
    totals = step.copy()
    probs = dist.probs.copy()
    for _ in range(n - 1):
        totals = (totals[:, None, :] * step[None, :, :]).reshape(-1, dist.m)
        probs = (probs[:, None] * dist.probs[None, :]).ravel()
        totals, probs = _merge_rows(totals, probs)
    return totals, probs


def compound(
    dist: JointReturnDistribution, n: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[CompoundOutcome]:
    """Exact distribution of the n-step compound return vector."""
    if n == 1:
        return [CompoundOutcome(tuple(float(v) for v in row), float(p)) for row, p in zip(dist.returns, dist.probs)]
    totals, probs = compound_arrays(dist, n, cap)
    return [
        CompoundOutcome(tuple(float(v) for v in row - 1.0), float(p)) for row, p in zip(totals, probs)
    ]


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & _SEED_MASK)


def _draw_indices(dist: JointReturnDistribution, rng: np.random.Generator, shape) -> np.ndarray:
    cdf = np.cumsum(dist.probs)
    idx = np.searchsorted(cdf, rng.random(shape), side="right")
    return np.minimum(idx, dist.size - 1)


def sample_many(dist: JointReturnDistribution, n: int, count: int, seed: int) -> np.ndarray:
    """``count`` independent n-step compound return vectors, shape ``(count, m)``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    idx = _draw_indices(dist, _rng(seed), (count, n))
    gross = np.prod(1.0 + dist.returns[idx], axis=1)
    return gross - 1.0


def sample(dist: JointReturnDistribution, n: int, seed: int) -> np.ndarray:
    """One realized n-step compound return vector; deterministic in ``seed``."""
    return sample_many(dist, n, 1, seed)[0]


def load_distribution(source: str | PathLike | dict) -> JointReturnDistribution:
    """Read the JSON distribution format (a path or an already-parsed dict)."""
    if isinstance(source, dict):
        doc = source
    else:
        with open(source, encoding="utf-8") as fh:
            doc = json.load(fh)
    try:
        names = doc["assets"]
        outcomes = [(o["returns"], o["p"]) for o in doc["outcomes"]]
    except (KeyError, TypeError) as exc:
        raise DistributionError(f"malformed distribution document: {exc}") from exc
    return make_distribution(names, outcomes)


def distribution_to_json(dist: JointReturnDistribution) -> dict:
    return {
        "assets": list(dist.asset_names),
        "outcomes": [{"returns": list(vec), "p": p} for vec, p in dist.support],
    }
