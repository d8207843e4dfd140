"""Synthetic cohorts with planted ground truth.

Returns are a market factor plus a sector factor plus idiosyncratic noise,
with ``planted_excess_monthly`` added to strong_buy picks. Agent embeddings
share a row-level common component and a persistent sector direction so that
they are mutually correlated; the thesis is ``A @ w_true`` plus optional noise
and an optional sector "theme" that drifts over time.

Agent vectors are quantised to a 2**-12 grid and true weights to multiples of
1/256, so that in the noiseless case ``A @ w_true`` is exactly representable in
float32 and survives a round trip through the binary store.
"""

from __future__ import annotations

import calendar
import datetime as dt
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .panel import SignalClass, SignalPanel, save_panel
from .store import AGENTS, EmbeddingStore, write_store

VECTOR_GRID = 4096.0
WEIGHT_GRID = 256


@dataclass
class SynthSpec:
    n_stocks: int = 120
    n_dates: int = 12
    n_sectors: int = 6
    embed_dim: int = 32
    planted_excess_monthly: float = 0.0
    picks_per_date: int = 10
    buys_per_date: int | None = None
    return_vol: float = 0.06
    market_mean: float = 0.01
    market_vol: float = 0.04
    sector_vol: float = 0.02
    # date index -> dominant agent; dates not listed cycle through AGENTS
    agent_regime_schedule: dict[int, str] = field(default_factory=dict)
    # sector name -> dominant agent, overriding the regime schedule in that sector
    sector_agents: dict[str, str] = field(default_factory=dict)
    dominant_weight: float = 0.55
    weight_concentration: float = 60.0
    agent_common: float = 1.0
    sector_common: float = 0.6
    noise_scale: float = 0.0
    # informative-agent coupling: adds coupling * return_vol * zscore(w_dominant) to returns
    weight_return_coupling: float = 0.0
    # sector theme: drifting direction added to the thesis (off when 0)
    theme_scale: float = 0.0
    # total class counts over the panel; overrides picks/buys per date
    class_counts: dict[str, int] | None = None
    start: str = "2024-09-06"
    seed: int = 0

    def validate(self) -> None:
        if min(self.n_stocks, self.n_dates, self.n_sectors, self.embed_dim) < 1:
            raise InvalidSpec("n_stocks, n_dates, n_sectors and embed_dim must be >= 1")
        if self.embed_dim < 4:
            raise InvalidSpec("embed_dim must be >= 4 (four agent columns)")
        if self.return_vol <= 0:
            raise InvalidSpec("return_vol must be > 0")
        buys = self.picks_per_date if self.buys_per_date is None else self.buys_per_date
        if self.class_counts is None and self.picks_per_date + buys > self.n_stocks:
            raise InvalidSpec("picks_per_date + buys_per_date exceeds n_stocks")
        if self.picks_per_date < 0 or buys < 0:
            raise InvalidSpec("per-date counts must be >= 0")
        if self.class_counts is not None:
            total = sum(self.class_counts.values())
            if total != self.n_stocks * self.n_dates:
                raise InvalidSpec(f"class_counts sum to {total}, panel has {self.n_stocks * self.n_dates} rows")
            for k in self.class_counts:
                SignalClass.parse(k)
        for a in list(self.agent_regime_schedule.values()) + list(self.sector_agents.values()):
            if a not in AGENTS:
                raise InvalidSpec(f"unknown agent {a!r}")
        if not 0 < self.dominant_weight < 1:
            raise InvalidSpec("dominant_weight must be in (0, 1)")
        if self.noise_scale < 0 or self.theme_scale < 0:
            raise InvalidSpec("noise_scale and theme_scale must be >= 0")


@dataclass
class SynthCohort:
    spec: SynthSpec
    panel: SignalPanel
    store: EmbeddingStore
    true_weights: np.ndarray       # (N, 4), aligned with panel rows
    regimes: list[str]             # dominant agent per date
    dates: list[dt.date]

    def ground_truth(self) -> dict:
        return {
            "spec": asdict(self.spec),
            "planted_excess_monthly": self.spec.planted_excess_monthly,
            "regimes": {d.isoformat(): a for d, a in zip(self.dates, self.regimes)},
            "weights_file": "true_weights.csv",
        }


def first_fridays(start: dt.date, n: int) -> list[dt.date]:
    """First Friday of ``n`` consecutive months beginning with ``start``'s month."""
    out = []
    y, m = start.year, start.month
    for _ in range(n):
        first = dt.date(y, m, 1)
        out.append(first + dt.timedelta(days=(calendar.FRIDAY - first.weekday()) % 7))
        m += 1
        if m > 12:
            y, m = y + 1, 1
    return out


def _per_date_counts(spec: SynthSpec) -> list[dict[SignalClass, int]]:
    T, n = spec.n_dates, spec.n_stocks
    if spec.class_counts is None:
        buys = spec.picks_per_date if spec.buys_per_date is None else spec.buys_per_date
        c = {SignalClass.STRONG_BUY: spec.picks_per_date, SignalClass.BUY: buys}
        c[SignalClass.HOLD] = n - spec.picks_per_date - buys
        return [dict(c) for _ in range(T)]
    totals = {SignalClass.parse(k): int(v) for k, v in spec.class_counts.items()}
    out = [dict() for _ in range(T)]
    for c, total in totals.items():
        if c == SignalClass.HOLD:
            continue
        base, extra = divmod(total, T)
        for d in range(T):
            out[d][c] = base + (1 if d < extra else 0)
    for d in range(T):
        rest = n - sum(out[d].values())
        if rest < 0:
            raise InvalidSpec("class_counts leave no room for the per-date universe")
        out[d][SignalClass.HOLD] = rest
    return out


def _quantised_weights(g: np.random.Generator, dominant: int, spec: SynthSpec) -> np.ndarray:
    base = np.full(4, (1.0 - spec.dominant_weight) / 3.0)
    base[dominant] = spec.dominant_weight
    w = g.dirichlet(base * spec.weight_concentration)
    scaled = w * WEIGHT_GRID
    q = np.floor(scaled).astype(int)
    short = WEIGHT_GRID - q.sum()
    q[np.argsort(-(scaled - q), kind="stable")[:short]] += 1
    return q / WEIGHT_GRID


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def generate_synthetic_cohort(spec: SynthSpec) -> SynthCohort:
    spec.validate()
    g = np.random.default_rng(np.random.SeedSequence(spec.seed))
    T, n, D = spec.n_dates, spec.n_stocks, spec.embed_dim
    dates = first_fridays(dt.date.fromisoformat(spec.start), T)
    tickers = [f"S{i:04d}" for i in range(n)]
    sector_names = [f"Sector{j:02d}" for j in range(spec.n_sectors)]
    stock_sector = np.arange(n) % spec.n_sectors
    g.shuffle(stock_sector)
    regimes = [spec.agent_regime_schedule.get(d, AGENTS[d % 4]) for d in range(T)]
    counts = _per_date_counts(spec)

    sector_dirs = _unit(g.standard_normal((spec.n_sectors, D)))
    theme = _unit(g.standard_normal((spec.n_sectors, D)))

    rows_d, rows_t, rows_s, rows_sig, rows_r = [], [], [], [], []
    true_w = []
    store = EmbeddingStore(D)
    for d in range(T):
        signals = np.zeros(n, dtype=int)
        order = g.permutation(n)
        k = 0
        for c in (SignalClass.STRONG_BUY, SignalClass.BUY, SignalClass.SELL, SignalClass.STRONG_SELL):
            m = counts[d].get(c, 0)
            signals[order[k:k + m]] = int(c)
            k += m
        market = g.normal(spec.market_mean, spec.market_vol)
        sec_ret = g.normal(0.0, spec.sector_vol, spec.n_sectors)
        r = market + sec_ret[stock_sector] + g.normal(0.0, spec.return_vol, n)
        r = r + spec.planted_excess_monthly * (signals == int(SignalClass.STRONG_BUY))

        W = np.empty((n, 4))
        for i in range(n):
            sec = sector_names[stock_sector[i]]
            dom = AGENTS.index(spec.sector_agents.get(sec, regimes[d]))
            W[i] = _quantised_weights(g, dom, spec)
        if spec.weight_return_coupling:
            dom_w = W[np.arange(n), [AGENTS.index(spec.sector_agents.get(sector_names[stock_sector[i]], regimes[d]))
                                     for i in range(n)]]
            sd = dom_w.std()
            z = (dom_w - dom_w.mean()) / sd if sd > 0 else np.zeros(n)
            r = r + spec.weight_return_coupling * spec.return_vol * z
        r = np.maximum(r, -0.95)

        # per sector-date theme drift magnitude
        delta = g.uniform(0.0, 1.0, spec.n_sectors)
        if spec.theme_scale:
            theme = _unit(theme + delta[:, None] * g.standard_normal((spec.n_sectors, D)))
        for i in range(n):
            s_idx = stock_sector[i]
            common = g.standard_normal(D) / np.sqrt(D)
            specific = g.standard_normal((4, D)) / np.sqrt(D)
            A = _unit(spec.agent_common * common + spec.sector_common * sector_dirs[s_idx] + specific)
            A = np.round(A * VECTOR_GRID) / VECTOR_GRID
            t = W[i] @ A
            scale = np.linalg.norm(t)
            if spec.noise_scale:
                t = t + spec.noise_scale * scale * g.standard_normal(D) / np.sqrt(D)
            if spec.theme_scale:
                t = t + spec.theme_scale * delta[s_idx] * scale * theme[s_idx]
            store.add_block(dates[d], tickers[i], np.vstack([t, A]))
        rows_d += [dates[d]] * n
        rows_t += tickers
        rows_s += [sector_names[j] for j in stock_sector]
        rows_sig += signals.tolist()
        rows_r += r.tolist()
        true_w.append(W)

    panel = SignalPanel("synthetic", np.array(rows_d, dtype="datetime64[D]"), rows_t, rows_s, rows_sig, rows_r)
    W_all = np.vstack(true_w)
    # panel sorts by (date, ticker); generation order is already (date, ticker)
    return SynthCohort(spec, panel, store, W_all, regimes, dates)


def write_synthetic_cohort(cohort: SynthCohort, out_dir, store_format: str = "binary") -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    store_name = "embeddings.msab" if store_format == "binary" else "embeddings.jsonl"
    paths = {
        "panel": save_panel(cohort.panel, out / "panel.csv"),
        "embeddings": write_store(cohort.store, out / store_name, store_format),
        "ground_truth": out / "ground_truth.json",
        "true_weights": out / "true_weights.csv",
    }
    paths["ground_truth"].write_text(json.dumps(cohort.ground_truth(), indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    with open(paths["true_weights"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date,ticker,w_news,w_fund,w_dyn,w_macro\n")
        for (d, t), w in zip(cohort.panel.keys(), cohort.true_weights):
            fh.write(f"{d.isoformat()},{t}," + ",".join(repr(float(x)) for x in w) + "\n")
    return paths
