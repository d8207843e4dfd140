import datetime as dt
import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sigval.panel import SignalPanel

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

D0 = dt.date(2024, 9, 6)


def make_panel(records, name="test"):
    """records: iterable of (date, ticker, sector, signal_label, return)."""
    records = list(records)
    return SignalPanel(
        name,
        np.array([np.datetime64(r[0], "D") for r in records], dtype="datetime64[D]"),
        [r[1] for r in records],
        [r[2] for r in records],
        [int(__import__("sigval").SignalClass.parse(r[3])) for r in records],
        [r[4] for r in records],
    )


@pytest.fixture
def tiny_panel():
    """Two dates, four tickers, all five classes represented."""
    d1, d2 = D0, dt.date(2024, 10, 4)
    return make_panel([
        (d1, "AAA", "Tech", "strong_buy", 0.04),
        (d1, "BBB", "Tech", "buy", 0.02),
        (d1, "CCC", "Energy", "hold", 0.00),
        (d1, "DDD", "Energy", "sell", -0.02),
        (d2, "AAA", "Tech", "strong_buy", 0.01),
        (d2, "BBB", "Tech", "hold", -0.03),
        (d2, "CCC", "Energy", "buy", 0.05),
        (d2, "DDD", "Energy", "strong_sell", -0.01),
    ])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
