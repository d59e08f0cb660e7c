"""Kelly log-growth optimization with the rebalancing period as a parameter."""

from .backtest import Trajectory, replay, simulate
from .distributions import (
    CompoundOutcome,
    DistributionError,
    EnumerationCapError,
    JointReturnDistribution,
    add_riskless,
    compound,
    load_distribution,
    make_distribution,
    sample,
)
from .dominance import (
    AttractivenessMatrix,
    DominanceVerdict,
    attractiveness_matrix,
    find_dominant,
    jensen_necessity_check,
    riskless_dominance_rate,
)
from .empirical import (
    PriceDataError,
    PriceHistory,
    ReturnHistory,
    WindowScan,
    dominance_rate_series,
    load_prices,
    scan,
    window_ratio,
)
from .growth import (
    GrowthReport,
    OptimizationResult,
    OptimizeConfig,
    WeightVector,
    frequency_sweep,
    growth_exact,
    growth_mc,
    optimize,
)

__version__ = "0.1.0"
