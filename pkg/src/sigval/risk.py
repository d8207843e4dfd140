"""Downside behaviour and market-beta checks.

Risk profiles condition on observation-level returns within a signal class:
upside is the mean of positive returns, downside the mean of negative returns,
and UpDn their absolute ratio. Beta analysis regresses the per-date
equal-weight portfolio of a class on the per-date universe (EW) return.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import EmptyClass, InsufficientTailData, TooFewDates
from .mc import equal_weight_return, ew_benchmark
from .panel import SignalClass, SignalPanel
from .stats import MannWhitneyResult, OlsResult, mann_whitney_one_sided, one_sample_t, ols_simple

MAX_REDRAW_ATTEMPTS = 1000
BOOT_BLOCK = 256


@dataclass(frozen=True)
class RiskProfile:
    signal: SignalClass
    n: int
    mean: float
    upside: float
    downside: float
    hit_rate: float
    updn: float
    updn_defined: bool
    n_pos: int
    n_neg: int
    n_zero: int


def _class_returns(panel: SignalPanel, signal) -> np.ndarray:
    signal = SignalClass.parse(signal)
    r = panel.returns[panel.signals == int(signal)]
    if r.size == 0:
        raise EmptyClass(f"no {signal.label} rows")
    return r


def profile_returns(r, signal=SignalClass.HOLD) -> RiskProfile:
    r = np.asarray(r, dtype=np.float64)
    if r.size == 0:
        raise EmptyClass("no returns")
    pos, neg = r > 0, r < 0
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    up = float(r[pos].mean()) if n_pos else 0.0
    down = float(r[neg].mean()) if n_neg else 0.0
    defined = n_neg > 0
    updn = abs(up / down) if defined else math.nan
    return RiskProfile(SignalClass.parse(signal), int(r.size), float(r.mean()), up, down,
                       n_pos / r.size, updn, defined, n_pos, n_neg, int(r.size - n_pos - n_neg))


def risk_profile(panel: SignalPanel, signal) -> RiskProfile:
    return profile_returns(_class_returns(panel, signal), signal)


@dataclass
class BootstrapResult:
    delta: float
    ci_lo: float
    ci_hi: float
    p_one: float
    resamples: int
    redraws: int
    confidence: float
    deltas: np.ndarray = field(repr=False)
    convention: str = "p_one = fraction of resampled deltas <= 0; percentile CI"


def _updn_rows(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise UpDn of a (B, n) sample matrix and a mask of rows with both tails."""
    pos = samples > 0
    neg = samples < 0
    n_pos = pos.sum(axis=1)
    n_neg = neg.sum(axis=1)
    ok = (n_pos > 0) & (n_neg > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        up = np.where(pos, samples, 0.0).sum(axis=1) / n_pos
        down = np.where(neg, samples, 0.0).sum(axis=1) / n_neg
        updn = np.abs(up / down)
    return updn, ok


def _resample_updn(r: np.ndarray, seed: int, rows: np.ndarray, cell: int, attempt: int):
    idx = rng.bounded_integers(seed, rng.STREAM_BOOTSTRAP, rows, cell, r.size, r.size, attempt)
    return _updn_rows(r[idx])


def bootstrap_updn_delta(a, b, resamples: int = 5000, seed: int = 0, confidence: float = 0.95) -> BootstrapResult:
    """Percentile bootstrap of UpDn(a) - UpDn(b), resampling each group independently."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    for name, x in (("class_a", a), ("class_b", b)):
        if np.count_nonzero(x > 0) < 2 or np.count_nonzero(x < 0) < 2:
            raise InsufficientTailData(f"{name} needs >= 2 positive and >= 2 negative returns")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    delta = profile_returns(a).updn - profile_returns(b).updn
    deltas = np.empty(resamples)
    redraws = 0
    for start in range(0, resamples, BOOT_BLOCK):
        rows = np.arange(start, min(start + BOOT_BLOCK, resamples), dtype=np.uint64)
        ua, oka = _resample_updn(a, seed, rows, 0, 0)
        ub, okb = _resample_updn(b, seed, rows, 1, 0)
        d = ua - ub
        bad = ~(oka & okb)
        attempt = 0
        while bad.any():
            attempt += 1
            if attempt > MAX_REDRAW_ATTEMPTS:
                raise InsufficientTailData("bootstrap could not draw both tails")
            redraws += int(bad.sum())
            rr = rows[bad]
            ua2, oka2 = _resample_updn(a, seed, rr, 0, attempt)
            ub2, okb2 = _resample_updn(b, seed, rr, 1, attempt)
            d[bad] = ua2 - ub2
            still = ~(oka2 & okb2)
            idx = np.flatnonzero(bad)
            bad[idx[~still]] = False
        deltas[rows.astype(np.int64)] = d
    tail = 100.0 * (1.0 - confidence) / 2.0
    lo, hi = np.percentile(deltas, [tail, 100.0 - tail])
    p_one = float(np.count_nonzero(deltas <= 0)) / resamples
    return BootstrapResult(float(delta), float(lo), float(hi), p_one, resamples, redraws,
                           confidence, deltas)


def delta_updn_bootstrap(panel: SignalPanel, class_a, class_b, resamples: int = 5000, seed: int = 0,
                         confidence: float = 0.95) -> BootstrapResult:
    return bootstrap_updn_delta(_class_returns(panel, class_a), _class_returns(panel, class_b),
                                resamples, seed, confidence)


def ecdf_exceedance(panel: SignalPanel, class_a, class_b, thresholds) -> list[dict]:
    """Left-tail probabilities P(r <= x) of two classes and their gap P_b - P_a."""
    a = np.sort(_class_returns(panel, class_a))
    b = np.sort(_class_returns(panel, class_b))
    return ecdf_compare(a, b, thresholds)


def ecdf_compare(a, b, thresholds) -> list[dict]:
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise EmptyClass("ECDF comparison needs two non-empty samples")
    out = []
    for x in thresholds:
        pa = np.searchsorted(a, x, side="right") / a.size
        pb = np.searchsorted(b, x, side="right") / b.size
        out.append({"threshold": float(x), "p_a": float(pa), "p_b": float(pb), "gap": float(pb - pa)})
    return out


def magnitude_test(panel: SignalPanel, long_classes=(SignalClass.BUY, SignalClass.STRONG_BUY),
                   baseline=SignalClass.HOLD) -> MannWhitneyResult:
    """One-sided Mann-Whitney: are |r| of the long classes larger than baseline |r|?"""
    long_mask = panel.class_mask(long_classes)
    base_mask = panel.class_mask(baseline)
    if not long_mask.any() or not base_mask.any():
        raise EmptyClass("magnitude test needs rows in both groups")
    return mann_whitney_one_sided(np.abs(panel.returns[long_mask]), np.abs(panel.returns[base_mask]),
                                  alternative="greater")


@dataclass
class RegimeSplit:
    count: int
    portfolio_mean: float
    ew_mean: float
    excess: float
    excess_t: float | None
    excess_p_two: float | None


@dataclass
class BetaReport:
    alpha_monthly: float
    beta: float
    t_alpha: float
    p_alpha: float
    r2: float
    up_months: RegimeSplit
    down_months: RegimeSplit
    stock_beta_mean_selected: float
    stock_beta_mean_universe: float
    n_dates: int
    dates: list = field(default_factory=list)
    portfolio: np.ndarray = field(default=None, repr=False)
    ew: np.ndarray = field(default=None, repr=False)
    regression: OlsResult | None = field(default=None, repr=False)
    stock_betas: dict[str, float] = field(default_factory=dict, repr=False)
    skipped_tickers: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def split(s: RegimeSplit):
            return {"count": s.count, "portfolio_mean": s.portfolio_mean, "ew_mean": s.ew_mean,
                    "excess": s.excess, "excess_t": s.excess_t, "excess_p_two": s.excess_p_two}

        return {
            "alpha_monthly": self.alpha_monthly,
            "beta": self.beta,
            "t_alpha": self.t_alpha,
            "p_alpha": self.p_alpha,
            "r2": self.r2,
            "n_dates": self.n_dates,
            "up_months": split(self.up_months),
            "down_months": split(self.down_months),
            "stock_beta_mean_selected": self.stock_beta_mean_selected,
            "stock_beta_mean_universe": self.stock_beta_mean_universe,
            "n_stock_betas": len(self.stock_betas),
            "skipped_tickers": list(self.skipped_tickers),
            "conventions": {
                "zero_ew_month": "classified as up",
                "p_alpha": "two-tailed, n - 2 df",
                "stock_beta": "in-sample OLS on EW return over dates the ticker is present (>= 3)",
            },
        }


def _split(port: np.ndarray, ew: np.ndarray, mask: np.ndarray) -> RegimeSplit:
    n = int(mask.sum())
    if n == 0:
        return RegimeSplit(0, math.nan, math.nan, math.nan, None, None)
    ex = port[mask] - ew[mask]
    t = p = None
    if n >= 2 and np.std(ex, ddof=1) > 0:
        res = one_sample_t(ex)
        t, p = res.t, res.p_two_tailed
    return RegimeSplit(n, float(port[mask].mean()), float(ew[mask].mean()), float(ex.mean()), t, p)


def beta_analysis(panel: SignalPanel, target_class=SignalClass.STRONG_BUY) -> BetaReport:
    target = SignalClass.parse(target_class)
    dates, port, ew = [], [], []
    ew_by_date = {}
    for d, s in panel.date_slices():
        ew_by_date[d] = ew_benchmark(panel, d)
        sel = panel.selection(d, target)
        if sel:
            dates.append(d)
            port.append(equal_weight_return(panel, d, sel))
            ew.append(ew_by_date[d])
    if len(dates) < 3:
        raise TooFewDates(f"beta analysis needs >= 3 dates with {target.label} picks, got {len(dates)}")
    port = np.array(port)
    ew = np.array(ew)
    reg = ols_simple(ew, port)
    up = ew >= 0

    by_ticker: dict[str, list[int]] = {}
    for i, t in enumerate(panel.tickers):
        by_ticker.setdefault(t, []).append(i)
    ever_selected = set(panel.tickers[panel.signals == int(target)].tolist())
    betas, skipped = {}, []
    for t in sorted(by_ticker):
        idx = np.array(by_ticker[t])
        x = np.array([ew_by_date[panel.dates[i].item()] for i in idx])
        y = panel.returns[idx]
        if idx.size < 3 or np.ptp(x) == 0:
            skipped.append(t)
            continue
        betas[t] = ols_simple(x, y).beta
    sel_betas = [b for t, b in betas.items() if t in ever_selected]
    return BetaReport(
        alpha_monthly=reg.alpha, beta=reg.beta, t_alpha=reg.t_alpha, p_alpha=reg.p_alpha, r2=reg.r2,
        up_months=_split(port, ew, up), down_months=_split(port, ew, ~up),
        stock_beta_mean_selected=float(np.mean(sel_betas)) if sel_betas else math.nan,
        stock_beta_mean_universe=float(np.mean(list(betas.values()))) if betas else math.nan,
        n_dates=len(dates), dates=dates, portfolio=port, ew=ew, regression=reg,
        stock_betas=betas, skipped_tickers=skipped,
    )


def _pct(x: float) -> str:
    return "n/a" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{100 * x:+.2f}%"


def beta_markdown(rep: BetaReport) -> str:
    u, d = rep.up_months, rep.down_months
    lines = [
        f"Jensen's alpha: {_pct(rep.alpha_monthly)}/month (t = {rep.t_alpha:.2f}, p = {rep.p_alpha:.2f}), "
        f"beta = {rep.beta:.3f}, R^2 = {rep.r2:.2f}, T = {rep.n_dates}",
        "",
        "| Regime | Months | Portfolio | EW | Excess |",
        "|---|---:|---:|---:|---:|",
        f"| Up | {u.count} | {_pct(u.portfolio_mean)} | {_pct(u.ew_mean)} | {_pct(u.excess)} |",
        f"| Down | {d.count} | {_pct(d.portfolio_mean)} | {_pct(d.ew_mean)} | {_pct(d.excess)} |",
        "",
        f"Mean stock beta: selected {rep.stock_beta_mean_selected:.2f}, universe {rep.stock_beta_mean_universe:.2f}",
    ]
    return "\n".join(lines) + "\n"


def risk_table_markdown(profiles: list[RiskProfile], deltas: dict) -> str:
    """Risk-profile table; ``deltas`` maps a class to its BootstrapResult vs the reference."""
    lines = ["| Signal | Upside+ | Down- | Hit% | UpDn | dUpDn | 95% CI |",
             "|---|---:|---:|---:|---:|---:|---|"]
    for p in profiles:
        b = deltas.get(p.signal)
        dcol = f"{b.delta:+.2f}" if b else "ref."
        ci = f"[{b.ci_lo:+.2f}, {b.ci_hi:+.2f}]" if b else "--"
        updn = f"{p.updn:.2f}" if p.updn_defined else "n/a"
        lines.append(f"| {p.signal.label} | {_pct(p.upside)} | {_pct(p.downside)} | "
                     f"{100 * p.hit_rate:.1f} | {updn} | {dcol} | {ci} |")
    return "\n".join(lines) + "\n"
