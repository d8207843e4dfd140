"""Monte Carlo selection-skill test.

For every date the actual portfolio is the equal-weight basket of the target
class. The null draws the same number of tickers uniformly without
replacement from that date's universe, independently per date and per
simulation, and aggregates across dates by arithmetic mean and by
compounding. p-values are the fraction of simulations at or above the actual
statistic.

Sums over a selection are always accumulated left to right in universe order
(tickers sorted within the date), so identical selections give bit-identical
returns whether they come from the actual portfolio or from a simulation.
"""

from __future__ import annotations

import datetime as dt
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import EmptySelection, NoSelectedDates, OverdrawnSelection, UnknownTicker
from .panel import SignalClass, SignalPanel
from .stats import empirical_percentile

SIM_BLOCK = 2048


@dataclass(frozen=True)
class McConfig:
    num_sims: int = 10_000
    seed: int = 0
    target_class: SignalClass = SignalClass.STRONG_BUY
    workers: int = 1

    def __post_init__(self):
        if self.num_sims < 1:
            raise ValueError("num_sims must be >= 1")
        rng.split_seed(self.seed)
        object.__setattr__(self, "target_class", SignalClass.parse(self.target_class))


@dataclass(frozen=True)
class McDateRow:
    date: dt.date
    n_selected: int
    universe_size: int
    actual_return: float
    ew_return: float
    null_mean: float
    excess: float
    percentile: float
    p_value: float


@dataclass
class McResult:
    config: McConfig
    per_date: list[McDateRow]
    mean_monthly: dict
    compound: dict
    win_rate: float
    null_mean_monthly_samples: np.ndarray = field(repr=False)
    null_compound_samples: np.ndarray = field(repr=False)
    # (num_sims, n_dates) matrix of simulated per-date returns
    null_returns: np.ndarray = field(repr=False)
    skipped_dates: list[dt.date] = field(default_factory=list)

    @property
    def dates(self) -> list[dt.date]:
        return [r.date for r in self.per_date]

    def to_dict(self) -> dict:
        return {
            "config": {
                "num_sims": self.config.num_sims,
                "seed": self.config.seed,
                "target_class": self.config.target_class.label,
            },
            "per_date": [
                {
                    "date": r.date.isoformat(),
                    "n_selected": r.n_selected,
                    "universe_size": r.universe_size,
                    "actual_return": r.actual_return,
                    "ew_return": r.ew_return,
                    "null_mean": r.null_mean,
                    "excess": r.excess,
                    "percentile": r.percentile,
                    "p_value": r.p_value,
                }
                for r in self.per_date
            ],
            "mean_monthly": dict(self.mean_monthly),
            "compound": dict(self.compound),
            "win_rate": self.win_rate,
            "n_dates": len(self.per_date),
            "skipped_dates": [d.isoformat() for d in self.skipped_dates],
            "conventions": {
                "p_value": "fraction of simulations >= actual (no +1 smoothing)",
                "percentile": "100 * (1 - p_value)",
                "null": "per-date uniform draw without replacement, independent across dates",
                "rng": "philox4x32-10 keyed by (seed, simulation, date)",
            },
        }


def _sequential_sum(values) -> float:
    acc = 0.0
    for v in values:
        acc += float(v)
    return acc


def equal_weight_return(panel: SignalPanel, date, selection) -> float:
    """Arithmetic mean forward return of ``selection`` on ``date``."""
    s = panel.date_slice(date)
    tickers = panel.tickers[s]
    wanted = set(selection)
    if not wanted:
        raise EmptySelection(f"empty selection on {date}")
    mask = np.isin(tickers, list(wanted))
    if int(mask.sum()) != len(wanted):
        missing = sorted(wanted - set(tickers.tolist()))
        raise UnknownTicker(f"not in universe on {date}: {', '.join(map(str, missing))}")
    return _sequential_sum(panel.returns[s][mask]) / len(wanted)


def ew_benchmark(panel: SignalPanel, date) -> float:
    """Mean forward return of every stock in the universe on ``date``."""
    r = panel.returns[panel.date_slice(date)]
    return _sequential_sum(r) / r.size


def draw_random_selection(universe, n: int, seed: int, sim: int = 0, cell: int = 0) -> list:
    """``n`` distinct members of ``universe`` for simulation ``sim`` of ``cell``.

    The draw is a pure function of ``(seed, sim, cell)``.
    """
    universe = list(universe)
    idx = _draw_indices(len(universe), n, seed, np.array([sim]), cell)[0]
    return [universe[i] for i in idx]


def _draw_indices(universe_size: int, n: int, seed: int, sims: np.ndarray, cell: int) -> np.ndarray:
    """Sorted selected positions, shape (len(sims), n), by partial Fisher-Yates."""
    if n < 1:
        raise EmptySelection("selection size must be >= 1")
    if n > universe_size:
        raise OverdrawnSelection(f"cannot draw {n} from a universe of {universe_size}")
    S = len(sims)
    u = rng.uniforms(seed, rng.STREAM_MC, sims, cell, n)
    idx = np.tile(np.arange(universe_size, dtype=np.int32), (S, 1))
    rows = np.arange(S)
    for j in range(n):
        r = j + (u[:, j] * (universe_size - j)).astype(np.int64)
        tmp = idx[rows, j].copy()
        idx[rows, j] = idx[rows, r]
        idx[rows, r] = tmp
    return np.sort(idx[:, :n], axis=1)


def _null_block(returns_by_date, n_by_date, seed, sims) -> np.ndarray:
    out = np.empty((len(sims), len(returns_by_date)))
    for d, (ret, n) in enumerate(zip(returns_by_date, n_by_date)):
        idx = _draw_indices(ret.size, n, seed, sims, d)
        picked = ret[idx]
        acc = np.zeros(len(sims))
        for j in range(n):
            acc += picked[:, j]
        out[:, d] = acc / n
    return out


def _aggregate(per_date: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise mean-monthly and compound returns with a fixed summation order."""
    T = per_date.shape[1]
    acc = np.zeros(per_date.shape[0])
    growth = np.ones(per_date.shape[0])
    for d in range(T):
        acc += per_date[:, d]
        growth *= 1.0 + per_date[:, d]
    return acc / T, growth - 1.0


def simulate_null(panel: SignalPanel, config: McConfig):
    """Simulated per-date returns, shape (num_sims, n_dates_with_selection)."""
    return _prepare_and_simulate(panel, config)[-1]


def _prepare(panel: SignalPanel, target: SignalClass):
    dates, rets, sel_masks, skipped = [], [], [], []
    for d, s in panel.date_slices():
        mask = panel.signals[s] == int(target)
        if not mask.any():
            skipped.append(d)
            continue
        dates.append(d)
        rets.append(np.ascontiguousarray(panel.returns[s]))
        sel_masks.append(mask)
    return dates, rets, sel_masks, skipped


def _prepare_and_simulate(panel, config):
    dates, rets, masks, skipped = _prepare(panel, config.target_class)
    if not dates:
        raise NoSelectedDates(f"no date has a {config.target_class.label} selection")
    ns = [int(m.sum()) for m in masks]
    sims = np.arange(config.num_sims, dtype=np.uint64)
    blocks = [sims[i:i + SIM_BLOCK] for i in range(0, sims.size, SIM_BLOCK)]
    if config.workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as ex:
            parts = list(ex.map(lambda b: _null_block(rets, ns, config.seed, b), blocks))
    else:
        parts = [_null_block(rets, ns, config.seed, b) for b in blocks]
    return dates, rets, masks, skipped, np.vstack(parts)


def run_mc(panel: SignalPanel, config: McConfig | None = None) -> McResult:
    config = config or McConfig()
    dates, rets, masks, skipped, null = _prepare_and_simulate(panel, config)
    T = len(dates)
    actual = np.array([_sequential_sum(r[m]) / int(m.sum()) for r, m in zip(rets, masks)])
    ew = np.array([_sequential_sum(r) / r.size for r in rets])

    null_mean, null_comp = _aggregate(null)
    act_mean, act_comp = _aggregate(actual[None, :])
    ew_mean, ew_comp = _aggregate(ew[None, :])
    act_mean, act_comp, ew_mean, ew_comp = map(float, (act_mean[0], act_comp[0], ew_mean[0], ew_comp[0]))

    rows = []
    for d in range(T):
        ep = empirical_percentile(null[:, d], actual[d])
        rows.append(McDateRow(
            dates[d], int(masks[d].sum()), int(rets[d].size), float(actual[d]), float(ew[d]),
            float(null[:, d].mean()), float(actual[d] - ew[d]), ep.percentile, ep.p_upper,
        ))

    ep_mean = empirical_percentile(null_mean, act_mean)
    ep_comp = empirical_percentile(null_comp, act_comp)
    mean_monthly = {
        "actual": act_mean,
        "ew": ew_mean,
        "null_mean": float(null_mean.mean()),
        "null_sd": float(null_mean.std(ddof=1)) if null_mean.size > 1 else 0.0,
        "null_median": float(np.median(null_mean)),
        "excess": act_mean - ew_mean,
        "percentile": ep_mean.percentile,
        "p_value": ep_mean.p_upper,
    }
    compound = {
        "actual": act_comp,
        "ew": ew_comp,
        "null_median": float(np.median(null_comp)),
        "excess": act_comp - ew_comp,
        "excess_pp": 100.0 * (act_comp - ew_comp),
        "percentile": ep_comp.percentile,
        "p_value": ep_comp.p_upper,
    }
    win_rate = float(np.mean(actual > ew))
    return McResult(config, rows, mean_monthly, compound, win_rate, null_mean, null_comp,
                    null, skipped)


def compound_paths(result: McResult, quantiles=(0.05, 0.25, 0.5, 0.75, 0.95)) -> list[dict]:
    """Cumulative growth of actual, EW and null quantiles after each date."""
    growth = np.cumprod(1.0 + result.null_returns, axis=1) - 1.0
    actual = np.cumprod([1.0 + r.actual_return for r in result.per_date]) - 1.0
    ew = np.cumprod([1.0 + r.ew_return for r in result.per_date]) - 1.0
    out = []
    for d, row in enumerate(result.per_date):
        entry = {"date": row.date.isoformat(), "actual": float(actual[d]), "ew": float(ew[d])}
        for q in quantiles:
            entry[f"null_q{int(round(q * 100)):02d}"] = float(np.quantile(growth[:, d], q))
        out.append(entry)
    return out


def render_percentile(p: float) -> str:
    if p >= 99.5:
        return ">99"
    if p <= 0.5:
        return "<1"
    return f"{int(math.floor(p + 0.5))}"


def pct(x: float, digits: int = 2) -> str:
    """Signed percentage without the % sign, e.g. 0.1411 -> '+14.11'."""
    return f"{100.0 * x:+.{digits}f}"


def _date_labels(dates) -> list[str]:
    months = [d.strftime("%Y-%m") for d in dates]
    return months if len(set(months)) == len(months) else [d.isoformat() for d in dates]


def per_date_table(result: McResult) -> list[dict]:
    """Display rows (one per date plus a final 'Mean' row) with formatted cells."""
    labels = _date_labels(result.dates)
    rows = []
    for label, r in zip(labels, result.per_date):
        rows.append({
            "date": label,
            "n_selected": str(r.n_selected),
            "actual_pct": pct(r.actual_return),
            "null_mean_pct": pct(r.null_mean),
            "excess_pct": pct(r.actual_return - r.null_mean),
            "percentile": render_percentile(r.percentile),
        })
    pd_ = result.per_date
    rows.append({
        "date": "Mean",
        "n_selected": f"{np.mean([r.n_selected for r in pd_]):.1f}",
        "actual_pct": pct(np.mean([r.actual_return for r in pd_])),
        "null_mean_pct": pct(np.mean([r.null_mean for r in pd_])),
        "excess_pct": pct(np.mean([r.actual_return - r.null_mean for r in pd_])),
        "percentile": f"{np.mean([r.percentile for r in pd_]):.1f}",
    })
    return rows


TABLE_HEADER = ("Date", "n_SB", "Actual (%)", "Null mean (%)", "Excess (%)", "Pct")


def per_date_text(result: McResult) -> str:
    rows = per_date_table(result)
    cells = [list(TABLE_HEADER)] + [list(r.values()) for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(TABLE_HEADER))]
    lines = []
    for k, c in enumerate(cells):
        lines.append("  ".join(s.ljust(w) if i == 0 else s.rjust(w) for i, (s, w) in enumerate(zip(c, widths))))
        if k == 0 or k == len(cells) - 2:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def per_date_csv_rows(result: McResult) -> list[dict]:
    """Machine-readable per-date rows (raw decimals)."""
    return [
        {
            "date": r.date.isoformat(),
            "n_selected": r.n_selected,
            "universe_size": r.universe_size,
            "actual_return": r.actual_return,
            "ew_return": r.ew_return,
            "null_mean": r.null_mean,
            "excess_vs_ew": r.excess,
            "excess_vs_null": r.actual_return - r.null_mean,
            "percentile": r.percentile,
            "p_value": r.p_value,
        }
        for r in result.per_date
    ]


def write_null_samples(samples, path) -> None:
    """Length-prefixed little-endian float64 dump: u64 count, then the values."""
    a = np.ascontiguousarray(samples, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(np.uint64(a.size).astype("<u8").tobytes())
        fh.write(a.tobytes())


def read_null_samples(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    count = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    data = np.frombuffer(raw[8:], dtype="<f8")
    if data.size != count:
        raise ValueError(f"null sample file declares {count} values but holds {data.size}")
    return data.copy()
