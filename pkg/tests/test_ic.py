import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_panel
from oracles import spearman_bruteforce, t_upper_tail
from sigval.errors import ScopeViolation, TooFewDates
from sigval.ic import (best_agent_timeline, class_mean_returns, date_level_ic, ic_table, ic_table_markdown,
                       icir_threshold, ordinal_score, pooled_ic, render_winner_counts, winner_counts)
from sigval.panel import SignalClass
from sigval.synth import SynthSpec, generate_synthetic_cohort

D0 = dt.date(2024, 9, 6)


def cross_sections(signal_rows, return_rows, label="buy"):
    recs = []
    for d, (xs, rs) in enumerate(zip(signal_rows, return_rows)):
        for i, r in enumerate(rs):
            recs.append((D0 + dt.timedelta(days=28 * d), f"T{i:02d}", "X", label, r))
    return make_panel(recs), np.concatenate([np.asarray(x, float) for x in signal_rows])


def test_symmetric_ics_give_zero_t():
    # mirrored returns flip the sign of the cross-sectional IC
    x = [1, 2, 3, 4]
    neg = [0.04, 0.01, 0.03, 0.02]
    rho_neg = spearman_bruteforce(x, neg)
    assert rho_neg == pytest.approx(-0.4)
    mirror = [-v for v in neg]
    panel, sig = cross_sections([x] * 4, [neg, mirror, neg, mirror])
    s = date_level_ic(panel, sig)
    np.testing.assert_allclose([p["ic"] for p in s.per_date], [rho_neg, -rho_neg] * 2)
    assert s.mean_ic == pytest.approx(0.0, abs=1e-15)
    assert s.t_stat == pytest.approx(0.0, abs=1e-12)
    assert s.p_one == pytest.approx(0.5)
    assert s.p_two == pytest.approx(1.0)


def test_constructed_series_matches_oracle():
    g = np.random.default_rng(19)
    xs = [g.permutation(8) for _ in range(19)]
    rs = [(np.arange(8) + 3.0 * g.standard_normal(8)) / 100 for _ in range(19)]
    panel, sig = cross_sections(xs, rs)
    s = date_level_ic(panel, sig, "demo")
    ics = [spearman_bruteforce(x, r) for x, r in zip(xs, rs)]
    np.testing.assert_allclose([p["ic"] for p in s.per_date], ics, atol=1e-14)
    mean = math.fsum(ics) / 19
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in ics) / 18)
    assert s.icir == pytest.approx(mean / sd, rel=1e-12)
    assert s.t_stat == pytest.approx(mean / sd * math.sqrt(19), rel=1e-12)
    assert s.p_one == pytest.approx(t_upper_tail(abs(s.t_stat), 18), rel=1e-9)


def test_constant_dates_are_skipped():
    x = [1, 2, 3, 4]
    panel, sig = cross_sections([x, x, [2, 2, 2, 2]], [[0.01, 0.02, 0.03, 0.05], [0.02, 0.01, 0.03, 0.04],
                                                     [0.01, 0.02, 0.03, 0.04]])
    s = date_level_ic(panel, sig)
    assert s.n_dates == 2 and s.skipped_dates == [D0 + dt.timedelta(days=56)]
    with pytest.raises(TooFewDates):
        date_level_ic(panel.take(np.arange(4, 12)), sig[4:])


def test_icir_threshold_values():
    # frozen from t quantiles computed with an independent high-precision integrator
    assert icir_threshold(19) == pytest.approx(0.48198457, abs=1e-7)
    assert icir_threshold(19, tails="one") == pytest.approx(0.39782, abs=1e-5)
    assert icir_threshold(35) == pytest.approx(0.34351, abs=1e-5)
    assert icir_threshold(35, tails="one") == pytest.approx(0.28582, abs=1e-5)
    for T in (5, 19, 35):
        thr = icir_threshold(T)
        assert t_upper_tail(thr * math.sqrt(T), T - 1) == pytest.approx(0.025, rel=1e-8)
    with pytest.raises(TooFewDates):
        icir_threshold(1)


def test_icir_threshold_monotone_and_normal_limit():
    vals = [icir_threshold(T) for T in range(3, 200)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert icir_threshold(100_000) * math.sqrt(100_000) == pytest.approx(1.959964, abs=1e-4)
    assert icir_threshold(19, alpha=0.01) > icir_threshold(19, alpha=0.05)


def test_scope_violation(tiny_panel):
    with pytest.raises(ScopeViolation):
        date_level_ic(tiny_panel, np.zeros(len(tiny_panel)))
    with pytest.raises(ScopeViolation):
        ic_table(tiny_panel, {"x": np.zeros(len(tiny_panel))})


def test_pooled_equals_date_level_on_one_cross_section():
    x = [3, 1, 4, 1, 5, 9, 2, 6]
    r = [0.01, -0.02, 0.03, 0.0, 0.02, 0.05, -0.01, 0.04]
    panel, sig = cross_sections([x], [r])
    assert pooled_ic(sig, panel.returns).rho == pytest.approx(spearman_bruteforce(x, r), abs=1e-14)


def test_best_agent_is_return_rank_copy():
    g = np.random.default_rng(2)
    recs, W = [], []
    for d in range(5):
        r = g.standard_normal(10) / 20
        for i in range(10):
            recs.append((D0 + dt.timedelta(days=28 * d), f"T{i}", "X", "strong_buy", r[i]))
        w = g.random((10, 4))
        w[:, 2] = np.argsort(np.argsort(r)) + 1
        W.append(w)
    panel = make_panel(recs)
    tl = best_agent_timeline(panel, np.vstack(W))
    assert [row["winner"] for row in tl] == ["Dynamics"] * 5
    assert all(row["winner_ic"] == pytest.approx(1.0) for row in tl)
    assert winner_counts(tl) == {"News": 0, "Fundamentals": 0, "Dynamics": 5, "Macro": 0}


@pytest.mark.parametrize("seed", range(3))
def test_regime_recovery_on_synthetic(seed):
    c = generate_synthetic_cohort(SynthSpec(n_stocks=200, n_dates=12, picks_per_date=25,
                                            weight_return_coupling=0.5, seed=seed))
    m = c.panel.class_mask(["buy", "strong_buy"])
    tl = best_agent_timeline(c.panel.take(m), c.true_weights[m])
    hits = np.mean([row["winner"].lower() == reg for row, reg in zip(tl, c.regimes)])
    assert hits >= 0.9


def test_render_winner_counts():
    counts = {"News": 3, "Fundamentals": 5, "Dynamics": 5, "Macro": 6}
    assert render_winner_counts(counts) == "Macro 6, Dynamics 5, Fundamentals 5, News 3"


def test_class_means(tiny_panel):
    cm = class_mean_returns(tiny_panel)
    assert cm.means[SignalClass.STRONG_BUY] == pytest.approx(0.025)
    assert cm.means[SignalClass.BUY] == pytest.approx(0.035)
    assert cm.buy_lt_strong_buy is False
    assert cm.counts[SignalClass.HOLD] == 2
    only_sb = tiny_panel.take(tiny_panel.class_mask("strong_buy"))
    assert class_mean_returns(only_sb).buy_lt_strong_buy is None
    flipped = make_panel([(D0, "A", "X", "buy", 0.0), (D0, "B", "X", "strong_buy", 0.1)])
    assert class_mean_returns(flipped).buy_lt_strong_buy is True


def test_ic_table_rows_and_markdown():
    g = np.random.default_rng(4)
    xs = [g.integers(1, 3, 12) for _ in range(6)]
    rs = [g.standard_normal(12) / 10 for _ in range(6)]
    panel, _ = cross_sections(xs, rs)
    recs = [(panel.dates[i].item(), panel.tickers[i], "X",
             "strong_buy" if np.concatenate(xs)[i] == 2 else "buy", panel.returns[i]) for i in range(len(panel))]
    panel = make_panel(recs)
    rows, series = ic_table(panel, {"Signal": ordinal_score(panel)})
    assert rows[0].n_obs == 72 and rows[0].n_dates == series["Signal"].n_dates
    md = ic_table_markdown(rows)
    assert md.startswith("| Agent / Signal | Pool IC |")
    assert "| Signal |" in md


@given(st.lists(st.integers(-50, 50), min_size=5, max_size=5, unique=True),
       st.lists(st.integers(-50, 50), min_size=5, max_size=5, unique=True))
def test_ic_invariant_under_monotone_transform(x, r):
    # the two fixed dates have rho +0.8 and -0.8, so the series never has zero spread
    base = [1, 2, 3, 4, 5]
    panel, sig = cross_sections([x, base, base], [np.array(r) / 100, [0.01, 0.03, 0.02, 0.05, 0.04],
                                                  [0.04, 0.05, 0.02, 0.03, 0.01]])
    a = date_level_ic(panel, sig)
    b = date_level_ic(panel, np.exp(sig / 10))
    np.testing.assert_allclose([p["ic"] for p in a.per_date], [p["ic"] for p in b.per_date])
