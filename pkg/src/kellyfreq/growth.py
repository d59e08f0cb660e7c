"""Frequency-dependent expected log-growth and its maximization over the simplex.

For weights ``K`` held fixed and rebalanced every ``n`` steps the growth rate
per step is ``g_n(K) = E[log(1 + K.X_n)] / n`` where ``X_n`` is the compound
return over one block. ``g_n`` is concave on the simplex, so a point whose
simplex first-order gap is below ``tol`` is within ``tol`` of the optimum.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Literal, NamedTuple, Sequence

import numpy as np

from .distributions import (
    DEFAULT_ENUMERATION_CAP,
    JointReturnDistribution,
    compound_arrays,
    sample_many,
)

__all__ = [
    "WeightVector",
    "GrowthReport",
    "OptimizeConfig",
    "OptimizationResult",
    "SweepRow",
    "BlockLaw",
    "growth_exact",
    "growth_mc",
    "optimize",
    "frequency_sweep",
    "first_order_gap",
    "sweep_rows_to_csv",
]

SIMPLEX_TOL = 1e-12
CLIP_BELOW = 1e-12


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Long-only, fully invested weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-d vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < -SIMPLEX_TOL) or np.any(w > 1.0 + SIMPLEX_TOL):
            raise ValueError(f"weights must lie in [0, 1]: {w.tolist()}")
        if abs(w.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def vertex(cls, m: int, j: int) -> "WeightVector":
        w = np.zeros(m)
        w[j] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, m: int) -> "WeightVector":
        return cls(np.full(m, 1.0 / m))

    def __len__(self) -> int:
        return self.weights.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)

    def tolist(self) -> list[float]:
        return [float(w) for w in self.weights]


def _weights(K, m: int) -> np.ndarray:
    w = K.weights if isinstance(K, WeightVector) else WeightVector(K).weights
    if w.size != m:
        raise ValueError(f"expected {m} weights, got {w.size}")
    return w


@dataclass(frozen=True, eq=False)
class GrowthReport:
    value: float
    gradient: np.ndarray
    method: Literal["exact", "monte_carlo"]
    std_error: float
    n: int
    sample_count: int = 0


class BlockLaw:
    """Exact law of one rebalancing block, computed once per (dist, n).

    ``evaluate`` skips simplex validation so callers (finite differences,
    line searches) may probe nearby points.
    """

    def __init__(self, dist: JointReturnDistribution, n: int, cap: int):
        totals, probs = compound_arrays(dist, n, cap)
        self.n = n
        self.excess = totals - 1.0
        self.probs = probs

    def evaluate(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        growth = 1.0 + self.excess @ w
        value = float(self.probs @ np.log(growth)) / self.n
        grad = (self.probs / growth) @ self.excess / self.n
        return value, grad

    def values(self, W: np.ndarray) -> np.ndarray:
        """``g_n`` at each row of ``W``; no simplex validation."""
        W = np.atleast_2d(np.asarray(W, dtype=float))
        return np.log(1.0 + W @ self.excess.T) @ self.probs / self.n


def first_order_gap(K, gradient) -> float:
    """``max_i dg/dK_i - sum_i K_i dg/dK_i``; zero exactly at simplex-stationary points."""
    g = np.asarray(gradient, dtype=float)
    return float(np.max(g) - np.asarray(K, dtype=float) @ g)


def growth_exact(
    dist: JointReturnDistribution, K, n: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> GrowthReport:
    """Exact ``g_n(K)`` and gradient by enumerating all ``S**n`` block outcomes."""
    w = _weights(K, dist.m)
    value, grad = BlockLaw(dist, n, cap).evaluate(w)
    return GrowthReport(value=value, gradient=grad, method="exact", std_error=0.0, n=n)


def growth_mc(dist: JointReturnDistribution, K, n: int, samples: int, seed: int) -> GrowthReport:
    """Monte Carlo estimate of ``g_n(K)`` from ``samples`` independent blocks."""
    if samples < 100:
        raise ValueError(f"samples must be >= 100, got {samples}")
    w = _weights(K, dist.m)
    excess = sample_many(dist, n, samples, seed)
    growth = 1.0 + excess @ w
    terms = np.log(growth) / n
    grad = (excess / growth[:, None]).mean(axis=0) / n
    return GrowthReport(
        value=float(terms.mean()),
        gradient=grad,
        method="monte_carlo",
        std_error=float(terms.std(ddof=1) / math.sqrt(samples)),
        n=n,
        sample_count=samples,
    )


@dataclass(frozen=True)
class OptimizeConfig:
    """Knobs for :func:`optimize`.

    ``vertex_screen`` tests every single-asset portfolio for optimality before
    iterating; ``sparsify_every`` is how often the ascent tries snapping small
    weights to zero (0 disables both the periodic and the final attempt).
    """

    tol: float = 1e-9
    max_iter: int = 100_000
    step: float = 1.0
    cap: int = DEFAULT_ENUMERATION_CAP
    vertex_screen: bool = True
    sparsify_every: int = 25
    min_step: float = 1e-18


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    optimal_weights: WeightVector
    optimal_value: float
    iterations: int
    converged: bool
    first_order_gap: float
    n: int = 1
    gradient: np.ndarray = field(default=None, repr=False)

    def to_json(self, asset_names: Sequence[str] | None = None) -> dict:
        doc = {
            "n": self.n,
            "optimal_weights": self.optimal_weights.tolist(),
            "optimal_value": self.optimal_value,
            "iterations": self.iterations,
            "converged": self.converged,
            "first_order_gap": self.first_order_gap,
        }
        if asset_names is not None:
            doc["assets"] = list(asset_names)
        return doc


_SPARSIFY_THRESHOLDS = (1e-3, 1e-6, 1e-9)


def _sparsify(law: BlockLaw, w, value, tol):
    """Largest-threshold snap of small weights to zero that keeps a certified tol-optimum."""
    for tau in _SPARSIFY_THRESHOLDS:
        mask = w < tau
        if not mask.any() or mask.all():
            continue
        cand = np.where(mask, 0.0, w)
        cand /= cand.sum()
        v, g = law.evaluate(cand)
        if first_order_gap(cand, g) <= tol and v >= value - tol:
            return cand, v, g
    return None


def _finish(law, w, iterations, tol, n) -> OptimizationResult:
    w = np.where(w < CLIP_BELOW, 0.0, w)
    w = w / w.sum()
    value, grad = law.evaluate(w)
    gap = first_order_gap(w, grad)
    return OptimizationResult(
        optimal_weights=WeightVector(w),
        optimal_value=value,
        iterations=iterations,
        converged=gap <= tol,
        first_order_gap=gap,
        n=n,
        gradient=grad,
    )


def optimize(
    dist: JointReturnDistribution, n: int, config: OptimizeConfig | None = None
) -> OptimizationResult:
    """Maximize ``g_n`` over the simplex by multiplicative-weights ascent.

    Each step sets ``K_i <- K_i * exp(step * dg/dK_i)`` and renormalizes; the
    step is halved whenever the objective fails to improve. Iteration stops
    once the first-order gap is at most ``config.tol``. Degenerate (flat)
    problems resolve to the lowest-index optimal vertex.
    """
    cfg = config or OptimizeConfig()
    law = BlockLaw(dist, n, cfg.cap)
    m = dist.m

    if cfg.vertex_screen:
        for j in range(m):
            e = np.zeros(m)
            e[j] = 1.0
            _, g = law.evaluate(e)
            if first_order_gap(e, g) <= cfg.tol:
                return _finish(law, e, 0, cfg.tol, n)

    w = np.full(m, 1.0 / m)
    value, grad = law.evaluate(w)
    gap = first_order_gap(w, grad)
    step = cfg.step
    it = 0
    while it < cfg.max_iter and gap > cfg.tol:
        it += 1
        if cfg.sparsify_every and it % cfg.sparsify_every == 0:
            snapped = _sparsify(law, w, value, cfg.tol)
            if snapped is not None:
                w, value, grad = snapped
                gap = first_order_gap(w, grad)
                break
        trial = w * np.exp(step * (grad - grad.max()))
        trial /= trial.sum()
        t_value, t_grad = law.evaluate(trial)
        t_gap = first_order_gap(trial, t_grad)
        # near the optimum value changes drop below rounding; let the gap decide there
        noise = 8.0 * np.finfo(float).eps * max(abs(value), 1.0)
        if t_value > value or (t_value >= value - noise and t_gap < gap):
            w, value, grad, gap = trial, t_value, t_grad, t_gap
        else:
            step *= 0.5
            if step < cfg.min_step:
                break

    if gap > cfg.tol and cfg.sparsify_every:
        snapped = _sparsify(law, w, value, cfg.tol)
        if snapped is not None:
            w = snapped[0]
    return _finish(law, w, it, cfg.tol, n)


class SweepRow(NamedTuple):
    n: int
    result: OptimizationResult | None
    error: str | None = None


def frequency_sweep(
    dist: JointReturnDistribution,
    n_list: Iterable[int],
    config: OptimizeConfig | None = None,
    workers: int | None = None,
) -> list[SweepRow]:
    """Independent optimizations for each rebalancing period, ordered by ``n``.

    A failure for one ``n`` (e.g. enumeration cap) is recorded in that row's
    ``error`` and the sweep continues.
    """
    ns = sorted(set(int(n) for n in n_list))

    def run(n: int) -> SweepRow:
        try:
            return SweepRow(n, optimize(dist, n, config))
        except ValueError as exc:
            return SweepRow(n, None, str(exc))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, ns))
    return [run(n) for n in ns]


def sweep_rows_to_csv(rows: Sequence[SweepRow], m: int) -> str:
    header = ["n", "g_star", "converged", "iterations"] + [f"K_{i + 1}" for i in range(m)]
    lines = [",".join(header)]
    for row in rows:
        if row.result is None:
            lines.append(",".join([str(row.n), "", "", ""] + [""] * m))
            continue
        r = row.result
        fields = [str(row.n), f"{r.optimal_value:.17g}", str(int(r.converged)), str(r.iterations)]
        fields += [f"{k:.17g}" for k in r.optimal_weights.weights]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"
