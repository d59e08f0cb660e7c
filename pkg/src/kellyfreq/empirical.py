"""Sliding-window attractiveness statistics over historical prices.

Window convention: the statistic at return index ``k`` averages the ``N``
returns ``X(k-N+1) .. X(k)``, where ``X(k) = S(k+1) / S(k) - 1``. ``X(k)`` is
known at the close of price row ``k+1``, so each output row carries the date
of price row ``k+1``, the latest close the window uses. The first emitted row
is ``k = N-1``, i.e. the first ``N`` returns form the training window.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from os import PathLike
from typing import Iterable, Sequence, TextIO

import numpy as np

__all__ = [
    "PriceDataError",
    "PriceHistory",
    "ReturnHistory",
    "WindowScan",
    "DEFAULT_WINDOW",
    "RESYNC_EVERY",
    "load_prices",
    "window_ratio",
    "scan",
    "dominance_rate_series",
]

DEFAULT_WINDOW = 126
RESYNC_EVERY = 1024
CONVENTION = (
    "row date = date of the latest close in the window; "
    "window at return index k averages X(k-N+1)..X(k), X(k) = S(k+1)/S(k) - 1"
)


class PriceDataError(ValueError):
    """Rejected price file, with the offending CSV line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class ReturnHistory:
    """Simple returns per date transition; ``dates[k]`` is the close realizing ``X(k)``."""

    dates: tuple[str, ...]
    returns: np.ndarray
    asset_names: tuple[str, ...]
    riskless_flags: tuple[bool, ...] = ()

    def __len__(self) -> int:
        return self.returns.shape[0]

    def index(self, name: str) -> int:
        return self.asset_names.index(name)

    def with_riskless(self, rate: float, name: str = "CASH") -> "ReturnHistory":
        if name in self.asset_names:
            raise ValueError(f"asset name {name!r} already in use")
        flags = self.riskless_flags or (False,) * len(self.asset_names)
        column = np.full((len(self), 1), float(rate))
        return ReturnHistory(
            dates=self.dates,
            returns=np.hstack([self.returns, column]),
            asset_names=self.asset_names + (name,),
            riskless_flags=flags + (True,),
        )


@dataclass(frozen=True, eq=False)
class PriceHistory:
    dates: tuple[str, ...]
    prices: np.ndarray
    asset_names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.dates)

    def returns(self) -> ReturnHistory:
        p = self.prices
        return ReturnHistory(
            dates=self.dates[1:],
            returns=(p[1:] - p[:-1]) / p[:-1],
            asset_names=self.asset_names,
        )


def _open_text(source) -> tuple[TextIO, bool]:
    if isinstance(source, io.IOBase):
        return source, False
    return open(source, encoding="utf-8-sig", newline=""), True


def load_prices(source: str | PathLike | TextIO) -> PriceHistory:
    """Read a wide price CSV (``date,<name>,...``) and validate every cell.

    Rows with missing cells, non-positive or unparsable prices, and dates that
    do not strictly increase are rejected; nothing is filled in.
    """
    fh, owned = _open_text(source)
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PriceDataError("empty file", 1) from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0].lower() != "date":
            raise PriceDataError("header must be 'date,<name>,...'", 1)
        names = tuple(header[1:])
        if len(set(names)) != len(names) or any(not n for n in names):
            raise PriceDataError("asset names must be unique and non-empty", 1)

        dates: list[str] = []
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise PriceDataError(f"expected {len(header)} cells, got {len(row)}", line_no)
            date = row[0].strip()
            if not date:
                raise PriceDataError("missing date", line_no)
            if dates and not date > dates[-1]:
                raise PriceDataError(f"date {date!r} does not follow {dates[-1]!r}", line_no)
            values = []
            for name, cell in zip(names, row[1:]):
                cell = cell.strip()
                if not cell:
                    raise PriceDataError(f"missing price for {name}", line_no)
                try:
                    price = float(cell)
                except ValueError:
                    raise PriceDataError(f"unparsable price {cell!r} for {name}", line_no) from None
                if not math.isfinite(price) or price <= 0.0:
                    raise PriceDataError(f"price for {name} must be positive, got {cell}", line_no)
                values.append(price)
            dates.append(date)
            rows.append(values)
    finally:
        if owned:
            fh.close()
    if not rows:
        raise PriceDataError("no price rows")
    prices = np.asarray(rows, dtype=float)
    prices.setflags(write=False)
    return PriceHistory(dates=tuple(dates), prices=prices, asset_names=names)


def _as_returns(returns) -> np.ndarray:
    if isinstance(returns, ReturnHistory):
        return returns.returns
    return np.asarray(returns, dtype=float)


def window_ratio(returns, i: int, j: int, k: int, N: int = DEFAULT_WINDOW) -> float:
    """Sample mean of ``(1 + X_i) / (1 + X_j)`` over the ``N`` returns ending at ``k``.

    For a riskless ``j`` pass a history built with
    :meth:`ReturnHistory.with_riskless`.
    """
    x = _as_returns(returns)
    if N < 1:
        raise ValueError(f"window must be >= 1, got {N}")
    if k < N - 1 or k >= x.shape[0]:
        raise ValueError(f"window of {N} ending at {k} is outside a history of {x.shape[0]} returns")
    total = 0.0
    # newest first, accumulated sequentially
    for ell in range(N):
        total += (1.0 + float(x[k - ell, i])) / (1.0 + float(x[k - ell, j]))
    return total / N


def _rolling_mean(terms: np.ndarray, N: int, resync: int = RESYNC_EVERY) -> np.ndarray:
    """Rolling means along axis 0 by add-new/drop-old updates, recomputed every ``resync`` rows."""
    T = terms.shape[0]
    if N < 1:
        raise ValueError(f"window must be >= 1, got {N}")
    if T < N:
        raise ValueError(f"need at least {N} returns, history has {T}")
    out = np.empty((T - N + 1,) + terms.shape[1:])
    acc = terms[:N].sum(axis=0)
    out[0] = acc / N
    for t in range(1, T - N + 1):
        if t % resync == 0:
            acc = terms[t : t + N].sum(axis=0)
        else:
            acc = acc + terms[t + N - 1] - terms[t - 1]
        out[t] = acc / N
    return out


@dataclass(frozen=True, eq=False)
class WindowScan:
    """Rolling attractiveness statistics; row ``t`` is return index ``first_index + t``."""

    window: int
    dates: tuple[str, ...]
    first_index: int
    asset_names: tuple[str, ...]
    pairs: tuple[tuple[int, int], ...]
    ratios: np.ndarray
    rmax: np.ndarray
    dominant_flags: np.ndarray
    dominant_asset: tuple[int | None, ...]
    r_star: np.ndarray
    rate: float | None

    def pair_series(self, i: int, j: int) -> np.ndarray:
        return self.ratios[:, i, j]

    def to_csv(self) -> str:
        names = self.asset_names
        header = ["date"]
        header += [f"R_{names[i]}/{names[j]}" for i, j in self.pairs]
        header += [f"Rmax_{n}" for n in names]
        header += ["dominant_asset", "r_star"]
        lines = [f"# window={self.window}; riskless_rate={self.rate}; {CONVENTION}", ",".join(header)]
        for t, date in enumerate(self.dates):
            fields = [date]
            fields += [f"{self.ratios[t, i, j]:.17g}" for i, j in self.pairs]
            fields += [f"{v:.17g}" for v in self.rmax[t]]
            dom = self.dominant_asset[t]
            fields.append("" if dom is None else names[dom])
            fields.append(f"{self.r_star[t]:.17g}")
            lines.append(",".join(fields))
        return "\n".join(lines) + "\n"


def _resolve_pairs(pairs, names: Sequence[str]) -> tuple[tuple[int, int], ...]:
    m = len(names)
    if pairs is None:
        return tuple((i, j) for j in range(m) for i in range(m) if i != j)
    out = []
    for i, j in pairs:
        i = names.index(i) if isinstance(i, str) else int(i)
        j = names.index(j) if isinstance(j, str) else int(j)
        out.append((i, j))
    return tuple(out)


def _risky_mean_max(x: np.ndarray, risky: Sequence[int], N: int) -> np.ndarray:
    return _rolling_mean(x[:, list(risky)], N).max(axis=1)


def dominance_rate_series(prices: PriceHistory | ReturnHistory, N: int = DEFAULT_WINDOW) -> np.ndarray:
    """Per-date ``r*(k)``: the largest rolling mean return among the risky assets."""
    hist = prices.returns() if isinstance(prices, PriceHistory) else prices
    flags = hist.riskless_flags or (False,) * len(hist.asset_names)
    risky = [i for i, f in enumerate(flags) if not f]
    return _risky_mean_max(hist.returns, risky, N)


def scan(
    prices: PriceHistory,
    pairs: Iterable[tuple[int | str, int | str]] | None = None,
    r: float | None = 0.0,
    N: int = DEFAULT_WINDOW,
    riskless_name: str = "CASH",
) -> WindowScan:
    """Rolling ``R_ij(k)``, per-asset maxima, dominance flags and ``r*(k)``.

    With ``r`` not None a riskless asset paying ``r`` per step is appended as
    ``riskless_name``. ``pairs`` selects which ``(i, j)`` series appear in the
    CSV output; maxima and flags always use every pair. Flags use ``R <= 1``
    with no tolerance.
    """
    hist = prices.returns()
    if len(hist) < N:
        raise ValueError(f"history has {len(prices)} prices; window {N} needs more than {N}")
    risky = list(range(len(hist.asset_names)))
    if r is not None:
        hist = hist.with_riskless(r, riskless_name)
    x = hist.returns
    m = x.shape[1]
    gross = 1.0 + x
    terms = gross[:, :, None] / gross[:, None, :]
    ratios = _rolling_mean(terms, N)
    idx = np.arange(m)
    ratios[:, idx, idx] = 1.0
    off = ratios.copy()
    off[:, idx, idx] = -np.inf
    rmax = off.max(axis=1)
    flags = rmax <= 1.0
    dominant = tuple(int(np.argmax(row)) if row.any() else None for row in flags)
    return WindowScan(
        window=N,
        dates=hist.dates[N - 1 :],
        first_index=N - 1,
        asset_names=hist.asset_names,
        pairs=_resolve_pairs(pairs, hist.asset_names),
        ratios=ratios,
        rmax=rmax,
        dominant_flags=flags,
        dominant_asset=dominant,
        r_star=_risky_mean_max(x, risky, N),
        rate=r,
    )
