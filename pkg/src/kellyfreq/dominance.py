"""Pairwise relative attractiveness and dominant-asset detection.

Asset ``j`` is relatively more attractive than asset ``i`` when
``E[(1 + X_i) / (1 + X_j)] <= 1``; it is dominant when that holds against
every other asset. A dominant asset is log-optimal on its own at every
rebalancing period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import JointReturnDistribution

__all__ = [
    "AttractivenessMatrix",
    "DominanceVerdict",
    "attractiveness_matrix",
    "find_dominant",
    "riskless_dominance_rate",
    "jensen_necessity_check",
]


@dataclass(frozen=True, eq=False)
class AttractivenessMatrix:
    """``ratios[i, j] = E[(1 + X_i) / (1 + X_j)]``."""

    ratios: np.ndarray
    asset_names: tuple[str, ...]

    def __getitem__(self, key):
        return self.ratios[key]

    def to_csv(self) -> str:
        lines = [",".join([""] + list(self.asset_names))]
        for name, row in zip(self.asset_names, self.ratios):
            lines.append(",".join([name] + [f"{v:.17g}" for v in row]))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class DominanceVerdict:
    dominant_asset: int | None
    qualifiers: tuple[int, ...]
    margins: np.ndarray
    tolerance: float
    asset_names: tuple[str, ...]

    @property
    def dominant_name(self) -> str | None:
        return None if self.dominant_asset is None else self.asset_names[self.dominant_asset]

    def to_json(self) -> dict:
        return {
            "dominant": self.dominant_name,
            "qualifiers": [self.asset_names[q] for q in self.qualifiers],
            "margins": {name: float(v) for name, v in zip(self.asset_names, self.margins)},
        }


def attractiveness_matrix(dist: JointReturnDistribution) -> AttractivenessMatrix:
    """Exact ratio expectations over the support.

    Terms are accumulated one support point at a time in the stored
    (descending-probability) order.
    """
    gross = 1.0 + dist.returns
    ratios = np.zeros((dist.m, dist.m))
    for row, p in zip(gross, dist.probs):
        ratios += p * (row[:, None] / row[None, :])
    np.fill_diagonal(ratios, 1.0)
    ratios.setflags(write=False)
    return AttractivenessMatrix(ratios=ratios, asset_names=dist.asset_names)


def _margins(ratios: np.ndarray) -> np.ndarray:
    off = np.array(ratios, dtype=float)
    np.fill_diagonal(off, -np.inf)
    return off.max(axis=0)


def find_dominant(dist: JointReturnDistribution, tolerance: float = 0.0) -> DominanceVerdict:
    """Report every asset ``j`` with ``max_{i != j} ratios[i, j] <= 1 + tolerance``.

    The canonical dominant asset is the lowest-index qualifier; ``None`` when
    no asset qualifies.
    """
    matrix = attractiveness_matrix(dist)
    margins = _margins(matrix.ratios)
    qualifiers = tuple(int(j) for j in np.flatnonzero(margins <= 1.0 + tolerance))
    return DominanceVerdict(
        dominant_asset=qualifiers[0] if qualifiers else None,
        qualifiers=qualifiers,
        margins=margins,
        tolerance=tolerance,
        asset_names=dist.asset_names,
    )


def riskless_dominance_rate(dist: JointReturnDistribution) -> float:
    """Largest mean return among risky assets.

    A riskless asset paying ``r`` is dominant exactly when ``r`` is at least
    this value.
    """
    risky = [i for i, flag in enumerate(dist.riskless_flags) if not flag]
    if not risky:
        raise ValueError("distribution has no risky asset")
    return float(np.max(dist.mean_returns()[risky]))


def jensen_necessity_check(
    dist: JointReturnDistribution, j: int, i_riskless: int, slack: float = 1e-12
) -> bool:
    """Check ``ratios[i, j] <= 1  =>  E[X_j] >= r`` for riskless ``i`` paying ``r``.

    By Jensen's inequality this implication always holds; the function is an
    oracle for property tests.
    """
    if not dist.riskless_flags[i_riskless]:
        raise ValueError(f"asset {dist.asset_names[i_riskless]!r} is not riskless")
    rate = float(dist.returns[0, i_riskless])
    ratio = attractiveness_matrix(dist).ratios[i_riskless, j]
    if ratio > 1.0:
        return True
    return float(dist.mean_returns()[j]) >= rate - slack
