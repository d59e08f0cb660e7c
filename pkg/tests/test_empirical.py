import io
from pathlib import Path

import numpy as np
import pytest

from kellyfreq.empirical import (
    PriceDataError,
    PriceHistory,
    dominance_rate_series,
    load_prices,
    scan,
    window_ratio,
)

DATA = Path(__file__).parent / "data"


def price_csv(names, rows, dates=None):
    dates = dates or [f"2020-01-{i + 1:02d}" if i < 31 else f"d{i:05d}" for i in range(len(rows))]
    lines = ["date," + ",".join(names)]
    lines += [d + "," + ",".join(repr(float(v)) for v in row) for d, row in zip(dates, rows)]
    return io.StringIO("\n".join(lines) + "\n")


def history(prices, names=None):
    prices = np.asarray(prices, dtype=float)
    names = tuple(names or [f"S{i}" for i in range(prices.shape[1])])
    dates = tuple(f"t{i:06d}" for i in range(prices.shape[0]))
    return PriceHistory(dates=dates, prices=prices, asset_names=names)


def brute_ratio(x, i, j, k, N):
    total = 0.0
    for ell in range(N):
        total += (1.0 + x[k - ell][i]) / (1.0 + x[k - ell][j])
    return total / N


def brute_mean(x, i, k, N):
    total = 0.0
    for ell in range(N):
        total += x[k - ell][i]
    return total / N


def test_constant_prices_give_zero_returns():
    prices = load_prices(price_csv(["A", "B"], [[10, 20]] * 3))
    assert len(prices) == 3
    assert np.all(prices.returns().returns == 0.0)
    assert prices.returns().dates == prices.dates[1:]


@pytest.mark.parametrize(
    "text, line",
    [
        ("date,A,B\n2020-01-01,1,2\n2020-01-02,0,2\n", 3),
        ("date,A,B\n2020-01-01,1,2\n2020-01-02,-1,2\n", 3),
        ("date,A,B\n2020-01-01,1,2\n2020-01-01,1,2\n", 3),
        ("date,A,B\n2020-01-02,1,2\n2020-01-01,1,2\n", 3),
        ("date,A,B\n2020-01-01,1,\n", 2),
        ("date,A,B\n2020-01-01,1\n", 2),
        ("date,A,B\n2020-01-01,1,x\n", 2),
        ("price,A,B\n2020-01-01,1,2\n", 1),
    ],
)
def test_rejections_carry_line_numbers(text, line):
    with pytest.raises(PriceDataError) as err:
        load_prices(io.StringIO(text))
    assert err.value.line == line


def test_load_from_path_with_bom(tmp_path):
    path = tmp_path / "p.csv"
    path.write_bytes("\ufeffdate,A,B\n2020-01-01,1,2\n2020-01-02,1.5,2\n".encode("utf-8"))
    prices = load_prices(path)
    assert prices.asset_names == ("A", "B")
    assert prices.returns().returns[0].tolist() == [0.5, 0.0]


def test_127_rows_give_one_scan_date():
    rng = np.random.default_rng(3)
    rows = 100 * np.cumprod(1 + rng.normal(0, 0.01, size=(127, 2)), axis=0)
    prices = history(rows)
    assert len(prices.returns()) == 126
    result = scan(prices, N=126)
    assert result.dates == (prices.dates[-1],)
    assert result.first_index == 125
    with pytest.raises(ValueError):
        scan(history(rows[:126]), N=126)


def test_window_ratio_examples():
    x = np.zeros((4, 2))
    assert window_ratio(x, 0, 1, 3, 4) == 1.0
    hist = history([[1.0, 5.0], [1.1, 5.0], [0.99, 5.0]]).returns().with_riskless(0.0)
    cash = hist.index("CASH")
    assert window_ratio(hist, 0, cash, 1, 2) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        window_ratio(hist, 0, cash, 0, 2)
    with pytest.raises(ValueError):
        window_ratio(hist, 0, cash, 2, 2)


def test_window_ratio_matches_brute_force_bitwise():
    rng = np.random.default_rng(11)
    x = rng.uniform(-0.05, 0.05, size=(60, 3))
    rows = x.tolist()
    for _ in range(50):
        i, j = rng.choice(3, size=2, replace=False)
        N = int(rng.integers(1, 30))
        k = int(rng.integers(N - 1, 60))
        fast = window_ratio(x, i, j, k, N)
        assert fast == brute_ratio(rows, i, j, k, N)


def test_constant_prices_scan_all_ones():
    result = scan(history([[5.0, 7.0]] * 12), r=0.0, N=5)
    assert np.all(result.ratios == 1.0)
    assert np.all(result.dominant_flags)
    assert all(d == 0 for d in result.dominant_asset)
    assert np.all(result.r_star == 0.0)


def test_geometric_growth_asset_dominates():
    k = np.arange(40)
    prices = history(np.column_stack([100 * 1.001**k, np.full(40, 50.0)]), ["UP", "FLAT"])
    result = scan(prices, r=0.0, N=10)
    up = result.asset_names.index("UP")
    assert all(d == up for d in result.dominant_asset)
    np.testing.assert_allclose(result.ratios[:, 1, 0], 1 / 1.001, rtol=1e-12)
    np.testing.assert_allclose(result.ratios[:, 0, 1], 1.001, rtol=1e-12)


def test_dominance_rate_examples():
    flat = history([[3.0, 4.0]] * 20)
    assert np.all(dominance_rate_series(flat, N=7) == 0.0)
    k = np.arange(30)
    growing = history(np.column_stack([10 * 1.002**k, np.full(30, 1.0)]))
    np.testing.assert_allclose(dominance_rate_series(growing, N=8), 0.002, atol=1e-12)
    with pytest.raises(ValueError):
        dominance_rate_series(flat, N=20)


def test_recorded_fixture_matches_brute_force():
    prices = load_prices(DATA / "two_stock.csv")
    N = 126
    result = scan(prices, r=0.0, N=N)
    hist = prices.returns().with_riskless(0.0)
    x = hist.returns.tolist()
    m = len(hist.asset_names)
    for t, k in enumerate(range(N - 1, len(x))):
        for i in range(m):
            for j in range(m):
                expected = 1.0 if i == j else brute_ratio(x, i, j, k, N)
                assert abs(result.ratios[t, i, j] - expected) <= 1e-12
        expected_r = max(brute_mean(x, i, k, N) for i in range(2))
        assert abs(result.r_star[t] - expected_r) <= 1e-12
    np.testing.assert_allclose(dominance_rate_series(prices, N), result.r_star, rtol=0, atol=1e-15)


def test_riskless_ratio_is_mean_gross_return():
    prices = load_prices(DATA / "two_stock.csv")
    result = scan(prices, r=0.0, N=50)
    x = prices.returns().returns
    cash = result.asset_names.index("CASH")
    rolling = np.array([np.mean(1 + x[k - 49 : k + 1, 0]) for k in range(49, len(x))])
    np.testing.assert_allclose(result.ratios[:, 0, cash], rolling, rtol=0, atol=1e-12)


def test_scan_csv_layout():
    prices = load_prices(DATA / "two_stock.csv")
    result = scan(prices, pairs=[("FB", "NFLX"), ("CASH", "NFLX")], r=0.0, N=126)
    lines = result.to_csv().splitlines()
    assert lines[0].startswith("# window=126")
    assert lines[1] == "date,R_FB/NFLX,R_CASH/NFLX,Rmax_NFLX,Rmax_FB,Rmax_CASH,dominant_asset,r_star"
    assert len(lines) == 2 + len(prices) - 126
    first = lines[2].split(",")
    assert first[0] == prices.dates[126]
    assert float(first[1]) == result.ratios[0, 1, 0]
    assert first[6] in ("", "NFLX", "FB", "CASH")


def test_resync_bounds_drift():
    rng = np.random.default_rng(5)
    rows = 100 * np.cumprod(1 + rng.normal(0.0, 0.02, size=(3000, 3)), axis=0)
    result = scan(history(rows), r=0.0001, N=20)
    x = history(rows).returns().with_riskless(0.0001).returns.tolist()
    for t in (0, 1023, 1024, 1025, 2047, 2048, len(result.dates) - 1):
        k = t + 19
        assert abs(result.ratios[t, 0, 3] - brute_ratio(x, 0, 3, k, 20)) <= 1e-12
