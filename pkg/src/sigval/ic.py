"""Information coefficients on the actionable (buy + strong_buy) universe.

Pooled IC is one Spearman correlation over every stock-date pair and is
reported as directional only. Date-level IC takes one cross-sectional
Spearman per date and t-tests the series: ICIR = mean / sd, t = ICIR * sqrt(T).
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConstantInput, ScopeViolation, TooFewDates
from .panel import ALL_CLASSES, SignalClass, SignalPanel
from .stats import SpearmanResult, one_sample_t, spearman, student_t_quantile

AGENT_SIGNALS = ("News", "Fundamentals", "Dynamics", "Macro")
MIN_CROSS_SECTION = 3


def require_actionable(panel: SignalPanel) -> None:
    if not panel.is_actionable:
        n_bad = int(np.count_nonzero(panel.signals < int(SignalClass.BUY)))
        raise ScopeViolation(f"{n_bad} non-actionable row(s) passed to an IC computation")


def ordinal_score(panel: SignalPanel) -> np.ndarray:
    return panel.signals.astype(np.float64)


@dataclass
class IcSeries:
    signal_name: str
    per_date: list[dict]
    mean_ic: float
    sd_ic: float
    icir: float
    t_stat: float
    p_one: float
    p_two: float
    skipped_dates: list[dt.date] = field(default_factory=list)

    @property
    def n_dates(self) -> int:
        return len(self.per_date)


def pooled_ic(values, returns) -> SpearmanResult:
    """Spearman IC over all rows. Treat as directional: rows within a date are dependent."""
    return spearman(values, returns)


def _cross_section_ic(x: np.ndarray, r: np.ndarray) -> float | None:
    if x.size < MIN_CROSS_SECTION or np.all(x == x[0]) or np.all(r == r[0]):
        return None
    return spearman(x, r).rho


def date_level_ic(panel: SignalPanel, signal, name: str = "signal") -> IcSeries:
    """Per-date cross-sectional ICs of ``signal`` (aligned with panel rows)."""
    require_actionable(panel)
    x = np.asarray(signal, dtype=np.float64)
    if x.size != len(panel):
        raise ValueError(f"signal has {x.size} values for {len(panel)} rows")
    per_date, skipped = [], []
    for d, s in panel.date_slices():
        ic = _cross_section_ic(x[s], panel.returns[s])
        if ic is None:
            skipped.append(d)
        else:
            per_date.append({"date": d, "ic": ic, "n_stocks": s.stop - s.start})
    if len(per_date) < 2:
        raise TooFewDates(f"{name}: only {len(per_date)} date(s) with a defined IC")
    res = one_sample_t([p["ic"] for p in per_date])
    return IcSeries(name, per_date, res.mean, res.sd, res.icir, res.t, res.p_one_tailed,
                    res.p_two_tailed, skipped)


def icir_threshold(T: int, alpha: float = 0.05, tails: str = "two") -> float:
    """Smallest |ICIR| significant at ``alpha`` over T dates (df = T - 1)."""
    if T < 2:
        raise TooFewDates("icir_threshold needs T >= 2")
    if tails not in ("one", "two"):
        raise ValueError("tails must be 'one' or 'two'")
    tail = alpha / 2.0 if tails == "two" else alpha
    return student_t_quantile(tail, T - 1) / math.sqrt(T)


def best_agent_timeline(panel: SignalPanel, weights, agent_names=AGENT_SIGNALS) -> list[dict]:
    """Per date, the agent whose weight has the highest cross-sectional IC.

    Ties go to the earliest agent in ``agent_names`` and are flagged.
    """
    require_actionable(panel)
    W = np.asarray(weights, dtype=np.float64)
    out = []
    for d, s in panel.date_slices():
        ics = [_cross_section_ic(W[s, k], panel.returns[s]) for k in range(W.shape[1])]
        valid = [(v, k) for k, v in enumerate(ics) if v is not None]
        if not valid:
            continue
        best = max(v for v, _ in valid)
        winners = [k for v, k in valid if v == best]
        out.append({
            "date": d,
            "winner": agent_names[winners[0]],
            "winner_ic": best,
            "tie": len(winners) > 1,
            "per_agent_ic": {agent_names[k]: (None if v is None else v) for k, v in enumerate(ics)},
            "n_stocks": s.stop - s.start,
        })
    if len(out) < 2:
        raise TooFewDates(f"only {len(out)} date(s) with a defined IC")
    return out


def winner_counts(timeline: list[dict], agent_names=AGENT_SIGNALS) -> dict[str, int]:
    counts = {a: 0 for a in agent_names}
    for row in timeline:
        counts[row["winner"]] += 1
    return counts


def render_winner_counts(counts: Mapping[str, int]) -> str:
    """e.g. 'Macro 6, Dynamics 5, Fundamentals 5, News 3' (by count, ties alphabetical)."""
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ", ".join(f"{k} {v}" for k, v in ranked)


@dataclass(frozen=True)
class ClassMeans:
    means: dict[SignalClass, float]
    counts: dict[SignalClass, int]
    buy_lt_strong_buy: bool | None


def class_mean_returns(panel: SignalPanel) -> ClassMeans:
    means, counts = {}, {}
    for c in ALL_CLASSES:
        m = panel.signals == int(c)
        if m.any():
            means[c] = float(panel.returns[m].mean())
            counts[c] = int(m.sum())
    flag = None
    if SignalClass.BUY in means and SignalClass.STRONG_BUY in means:
        flag = means[SignalClass.BUY] < means[SignalClass.STRONG_BUY]
    return ClassMeans(means, counts, flag)


@dataclass
class IcTableRow:
    signal: str
    pooled_ic: float
    pooled_p: float
    n_obs: int
    mean_ic: float
    icir: float
    t_stat: float
    p_t: float
    p_t_two: float
    n_dates: int


def ic_table(panel: SignalPanel, signals: Mapping[str, np.ndarray]) -> tuple[list[IcTableRow], dict[str, IcSeries]]:
    """Pooled and date-level IC rows for each named signal.

    ``p_t`` is one-tailed in the direction of the observed mean IC; pooled p is
    two-tailed.
    """
    require_actionable(panel)
    rows, series = [], {}
    for name, x in signals.items():
        x = np.asarray(x, dtype=np.float64)
        try:
            pooled = pooled_ic(x, panel.returns)
            pic, pp = pooled.rho, pooled.p_two_tailed
        except ConstantInput:
            pic, pp = math.nan, math.nan
        s = date_level_ic(panel, x, name)
        series[name] = s
        rows.append(IcTableRow(name, pic, pp, len(panel), s.mean_ic, s.icir, s.t_stat,
                               s.p_one, s.p_two, s.n_dates))
    return rows, series


def _f(x, spec):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else format(x, spec)


def ic_table_markdown(rows: list[IcTableRow]) -> str:
    lines = ["| Agent / Signal | Pool IC | Pool p | DL mean IC | ICIR | t | p_t |",
             "|---|---:|---:|---:|---:|---:|---:|"]
    for r in rows:
        lines.append(f"| {r.signal} | {_f(r.pooled_ic, '+.3f')} | {_f(r.pooled_p, '.3f')} | "
                     f"{_f(r.mean_ic, '+.3f')} | {_f(r.icir, '+.3f')} | {_f(r.t_stat, '+.2f')} | "
                     f"{_f(r.p_t, '.3f')} |")
    return "\n".join(lines) + "\n"


def ic_table_csv(rows: list[IcTableRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["signal", "pooled_ic", "pooled_p", "n_obs", "mean_ic", "icir", "t_stat", "p_t", "p_t_two", "n_dates"]
    w.writerow(cols)
    for r in rows:
        w.writerow([getattr(r, c) if isinstance(getattr(r, c), (str, int)) else repr(float(getattr(r, c)))
                    for c in cols])
    return buf.getvalue()


def ic_series_csv(series: Mapping[str, IcSeries]) -> str:
    """Long-format per-date ICs: date, signal, ic, n_stocks."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "signal", "ic", "n_stocks"])
    for name, s in series.items():
        for p in s.per_date:
            w.writerow([p["date"].isoformat(), name, repr(float(p["ic"])), p["n_stocks"]])
    return buf.getvalue()
