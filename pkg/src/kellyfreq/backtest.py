"""Closed-loop account simulation under fixed weights and a rebalancing period.

Holdings are reset to ``K * V`` every ``n`` steps and otherwise ride their own
returns, so the value at each block boundary is ``(1 + K.X_n) * V_prev``.
No transaction costs are modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import JointReturnDistribution, _draw_indices, _rng
from .growth import WeightVector, _weights

__all__ = ["Trajectory", "simulate", "replay"]


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    values: np.ndarray
    rebalance_times: np.ndarray
    realized_log_growth: float
    block_log_growth: np.ndarray

    def to_csv(self) -> str:
        rebalanced = np.zeros(self.times.size, dtype=int)
        rebalanced[self.rebalance_times] = 1
        lines = ["k,V,rebalanced"]
        lines += [f"{k},{v:.17g},{flag}" for k, v, flag in zip(self.times, self.values, rebalanced)]
        return "\n".join(lines) + "\n"


def _run(path: np.ndarray, w: np.ndarray, n: int, v0: float) -> Trajectory:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not v0 > 0:
        raise ValueError(f"V0 must be positive, got {v0}")
    steps = path.shape[0]
    values = np.empty(steps + 1)
    values[0] = v0
    block_logs = []
    value = v0
    for start in range(0, steps, n):
        block = 1.0 + path[start : start + n]
        holdings = w * value
        for offset, gross in enumerate(block, start=1):
            holdings = holdings * gross
            values[start + offset] = holdings.sum()
        # log-growth from the block formula keeps long runs free of overflow
        block_logs.append(math.log1p(float(w @ (np.prod(block, axis=0) - 1.0))))
        value = values[start + len(block)]
    block_logs = np.asarray(block_logs)
    times = np.arange(steps + 1)
    return Trajectory(
        times=times,
        values=values,
        rebalance_times=np.arange(0, steps, n),
        realized_log_growth=float(block_logs.sum() / steps),
        block_log_growth=block_logs,
    )


def simulate(
    dist: JointReturnDistribution,
    K,
    n: int,
    blocks: int,
    V0: float = 1.0,
    seed: int = 0,
) -> Trajectory:
    """Run ``blocks`` rebalancing periods of ``n`` i.i.d. steps each.

    The ``blocks * n`` return vectors come from one seeded stream, so the same
    seed and total length give the same market path for any ``n``.
    """
    if blocks < 1:
        raise ValueError(f"blocks must be >= 1, got {blocks}")
    w = _weights(K, dist.m)
    idx = _draw_indices(dist, _rng(seed), blocks * n)
    return _run(dist.returns[idx], w, n, float(V0))


def replay(history_returns, K, n: int, V0: float = 1.0) -> Trajectory:
    """Same dynamics on a fixed path of return vectors (rows are steps)."""
    path = np.asarray(history_returns, dtype=float)
    if path.ndim != 2 or path.shape[0] < 1:
        raise ValueError("history must be a non-empty 2-d array of return vectors")
    bad = np.argwhere(~(path > -1.0))
    if bad.size:
        k, i = bad[0]
        raise ValueError(f"return at step {k}, asset {i} is {path[k, i]} (must be > -1)")
    w = _weights(K if isinstance(K, WeightVector) else np.asarray(K, dtype=float), path.shape[1])
    return _run(path, w, n, float(V0))
