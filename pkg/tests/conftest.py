import numpy as np
import pytest

from kellyfreq.distributions import make_distribution

ACCEPTANCE_LINES: list[str] = []


def coin_and_cash(rate=0.05):
    """Risky +/-50% with P(up)=0.6 alongside a riskless asset paying ``rate``."""
    return make_distribution(["J", "CASH"], [([0.5, rate], 0.6), ([-0.5, rate], 0.4)])


def dominant_risky():
    """Risky {+10%, -5%} at 50/50 against cash at 0; the risky asset is dominant."""
    return make_distribution(["J", "CASH"], [([0.1, 0.0], 0.5), ([-0.05, 0.0], 0.5)])


def random_distribution(rng, m=None, S=None, riskless=None, low=-0.6, high=0.9):
    m = int(m if m is not None else rng.integers(2, 5))
    S = int(S if S is not None else rng.integers(2, 7))
    with_cash = bool(rng.random() < 0.5) if riskless is None else riskless
    risky = m - 1 if with_cash else m
    returns = rng.uniform(low, high, size=(S, risky))
    probs = rng.dirichlet(np.ones(S))
    names = [f"A{i}" for i in range(risky)]
    rate = float(rng.uniform(0.0, 0.05))
    outcomes = [(row + ([rate] if with_cash else []), p) for row, p in zip(returns.tolist(), probs)]
    return make_distribution(names + (["CASH"] if with_cash else []), outcomes)


@pytest.fixture
def rng():
    return np.random.default_rng(20181217)


@pytest.fixture
def acceptance_report():
    def record(number, name, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {name}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
