"""Sector heterogeneity: sector-date mean agent weights, the correlation
between attribution residual and thesis-centroid drift, and a permutation
test on the number of distinct per-sector IC winners."""

from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import rng
from .errors import ConstantInput, InsufficientCrossSection, KeyMismatch, TooFewDates
from .ic import AGENT_SIGNALS, MIN_CROSS_SECTION, require_actionable
from .nnls import AttributionTable
from .panel import SignalPanel
from .stats import SpearmanResult, spearman
from .store import EmbeddingStore

DRIFT_DEFINITION = "1 - cosine(mean thesis embedding at (sector, d), same at (sector, previous date))"
PERMUTATION_SCHEME = ("within each date, whole weight vectors are shuffled across the date's stocks; "
                      "statistic = mean over sectors of the number of distinct per-date IC winners")


@dataclass
class SectorCell:
    sector: str
    date: dt.date
    mean_weights: np.ndarray
    n_stocks: int
    mean_residual: float


@dataclass
class SectorWeightPanel:
    entries: dict[tuple[str, dt.date], SectorCell]

    def sectors(self) -> list[str]:
        return sorted({s for s, _ in self.entries})

    def to_long_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sector", "date", "agent", "mean_weight", "n_stocks", "mean_residual"])
        for (s, d), c in sorted(self.entries.items()):
            for name, v in zip(AGENT_SIGNALS, c.mean_weights):
                w.writerow([s, d.isoformat(), name, repr(float(v)), c.n_stocks, repr(c.mean_residual)])
        return buf.getvalue()

    def sector_means(self) -> dict[str, np.ndarray]:
        """Row-count-weighted mean weights per sector over all dates."""
        acc: dict[str, list] = {}
        for (s, _), c in self.entries.items():
            a = acc.setdefault(s, [np.zeros(4), 0])
            a[0] += c.mean_weights * c.n_stocks
            a[1] += c.n_stocks
        return {s: v / n for s, (v, n) in sorted(acc.items())}


def _groups(panel: SignalPanel):
    """(sector, date) -> row indices, iterating dates in order."""
    groups: dict[tuple[str, dt.date], list[int]] = {}
    for d, s in panel.date_slices():
        for i in range(s.start, s.stop):
            groups.setdefault((panel.sectors[i], d), []).append(i)
    return {k: np.array(v) for k, v in groups.items()}


def _check_keys(panel: SignalPanel, weights: AttributionTable) -> None:
    if weights.keys != panel.keys():
        raise KeyMismatch("attribution rows do not match panel rows")


def sector_weight_panel(panel: SignalPanel, weights: AttributionTable) -> SectorWeightPanel:
    _check_keys(panel, weights)
    entries = {}
    for (sec, d), idx in _groups(panel).items():
        entries[(sec, d)] = SectorCell(sec, d, weights.weights[idx].mean(axis=0), int(idx.size),
                                       float(np.mean(1.0 - weights.recon_cosine[idx])))
    return SectorWeightPanel(entries)


@dataclass
class DriftResult:
    residual_vs_drift: SpearmanResult      # residual = 1 - C^TR
    fidelity_vs_drift: SpearmanResult      # fidelity = C^TR
    cells: list[dict] = field(repr=False)
    drift_definition: str = DRIFT_DEFINITION

    def to_dict(self) -> dict:
        def tr(r: SpearmanResult):
            return {"rho": r.rho, "p_two": r.p_two_tailed, "p_one": r.p_one_tailed, "n": r.n}
        return {"residual_vs_drift": tr(self.residual_vs_drift),
                "fidelity_vs_drift": tr(self.fidelity_vs_drift),
                "n_cells": len(self.cells),
                "drift_definition": self.drift_definition,
                "residual_definitions": {"residual": "mean(1 - recon_cosine)", "fidelity": "mean(recon_cosine)"}}


def residual_drift_correlation(store: EmbeddingStore, panel: SignalPanel, weights: AttributionTable) -> DriftResult:
    _check_keys(panel, weights)
    keys = panel.keys()
    groups = _groups(panel)
    centroids = {}
    for key, idx in groups.items():
        vecs = np.stack([store.get(*keys[i], "thesis") for i in idx])
        centroids[key] = vecs.mean(axis=0)
    cells = []
    for sec in sorted({s for s, _ in groups}):
        ds = sorted(d for s, d in groups if s == sec)
        for prev, cur in zip(ds[:-1], ds[1:]):
            a, b = centroids[(sec, prev)], centroids[(sec, cur)]
            na, nb = np.linalg.norm(a), np.linalg.norm(b)
            if na == 0 or nb == 0:
                continue
            # 1 - cos(a, b) written as half the squared chord between unit vectors;
            # avoids cancellation and is exactly 0 for identical centroids
            diff = a / na - b / nb
            drift = 0.5 * float(diff @ diff)
            rc = weights.recon_cosine[groups[(sec, cur)]]
            cells.append({"sector": sec, "date": cur, "drift": drift,
                          "residual": float(np.mean(1.0 - rc)), "fidelity": float(np.mean(rc))})
    if len(cells) < 3:
        raise TooFewDates(f"need >= 3 (sector, date) cells with a previous date, got {len(cells)}")
    drift = [c["drift"] for c in cells]
    res = spearman([c["residual"] for c in cells], drift)
    fid = spearman([c["fidelity"] for c in cells], drift)
    return DriftResult(res, fid, cells)


@dataclass
class PermutationResult:
    statistic: float
    p_upper: float          # fraction of permuted statistics >= observed
    p_lower: float          # fraction <= observed (small when one agent dominates)
    permutations: int
    distinct_winners: dict[str, int]
    null: np.ndarray = field(repr=False)
    n_cells: int = 0
    scheme: str = PERMUTATION_SCHEME

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_upper": self.p_upper, "p_lower": self.p_lower,
                "permutations": self.permutations, "distinct_winners": self.distinct_winners,
                "n_cells": self.n_cells, "null_mean": float(self.null.mean()), "scheme": self.scheme}


def _rank_rows(x: np.ndarray) -> np.ndarray:
    return rankdata(x, axis=-2, method="average")


def _cell_winners(weight_block: np.ndarray, ret_ranks: np.ndarray) -> np.ndarray:
    """Winner agent index per leading row of a (P, m, k) weight block; -1 if none."""
    ranks = _rank_rows(weight_block)  # (P, m, k)
    ranks = ranks - ranks.mean(axis=1, keepdims=True)
    rr = ret_ranks - ret_ranks.mean()
    num = np.einsum("pmk,m->pk", ranks, rr)
    den = np.sqrt(np.einsum("pmk,pmk->pk", ranks, ranks) * float(rr @ rr))
    with np.errstate(invalid="ignore", divide="ignore"):
        ic = np.where(den > 0, num / den, -np.inf)
    win = np.argmax(ic, axis=1)
    none = ~np.isfinite(ic.max(axis=1))
    win[none] = -1
    return win


def winner_permutation_test(panel: SignalPanel, weights, permutations: int = 10_000, seed: int = 0) -> PermutationResult:
    """Permutation test on the mean (over sectors) number of distinct IC winners.

    ``weights`` is an (N, 4) array aligned with ``panel`` rows.
    """
    require_actionable(panel)
    W = np.asarray(weights, dtype=np.float64)
    if W.shape[0] != len(panel):
        raise KeyMismatch(f"weights have {W.shape[0]} rows for {len(panel)} panel rows")
    if permutations < 1:
        raise ValueError("permutations must be >= 1")
    sectors = sorted(set(panel.sectors.tolist()))
    sec_pos = {s: i for i, s in enumerate(sectors)}
    # cells per date: (sector index, positions within the date slice)
    plan = []
    for d_idx, (d, s) in enumerate(panel.date_slices()):
        secs = panel.sectors[s]
        cells = []
        for sec in sorted(set(secs.tolist())):
            pos = np.flatnonzero(secs == sec)
            r = panel.returns[s][pos]
            if pos.size < MIN_CROSS_SECTION or np.all(r == r[0]):
                continue
            cells.append((sec_pos[sec], pos, rankdata(r)))
        if cells:
            plan.append((d_idx, s, cells))
    n_cells = sum(len(c) for _, _, c in plan)
    if n_cells == 0:
        raise InsufficientCrossSection(f"no sector-date cell has >= {MIN_CROSS_SECTION} rows")
    if len({d for d, _, _ in plan}) < 2:
        raise TooFewDates("winner permutation test needs >= 2 dates with eligible cells")

    def masks_for(perm_rows: np.ndarray | None, P: int) -> np.ndarray:
        masks = np.zeros((P, len(sectors)), dtype=np.int64)
        for d_idx, s, cells in plan:
            Wd = W[s]
            if perm_rows is None:
                Wp = Wd[None, :, :]
            else:
                order = rng.random_permutations(seed, rng.STREAM_PERMUTATION, perm_rows, d_idx, Wd.shape[0])
                Wp = Wd[order]
            for sec, pos, rr in cells:
                win = _cell_winners(Wp[:, pos, :], rr)
                has = win >= 0
                masks[has, sec] |= np.left_shift(1, win[has])
        return masks

    def stat(masks: np.ndarray, include: np.ndarray) -> np.ndarray:
        counts = np.zeros(masks.shape, dtype=np.int64)
        for k in range(W.shape[1]):
            counts += (masks >> k) & 1
        return counts[:, include].mean(axis=1)

    obs_mask = masks_for(None, 1)
    include = obs_mask[0] > 0
    if not include.any():
        raise ConstantInput("no sector has a defined IC winner")
    observed = float(stat(obs_mask, include)[0])
    null = np.empty(permutations)
    block = 1000
    for start in range(0, permutations, block):
        rows = np.arange(start, min(start + block, permutations), dtype=np.uint64)
        null[start:start + rows.size] = stat(masks_for(rows, rows.size), include)
    distinct = {sec: int(bin(int(obs_mask[0, i])).count("1")) for sec, i in sec_pos.items() if include[i]}
    return PermutationResult(
        statistic=observed,
        p_upper=float(np.count_nonzero(null >= observed)) / permutations,
        p_lower=float(np.count_nonzero(null <= observed)) / permutations,
        permutations=permutations, distinct_winners=distinct, null=null, n_cells=n_cells,
    )


def highlight(panel: SectorWeightPanel, agent: str = "Macro") -> tuple[str, float]:
    """Sector with the highest mean weight for ``agent`` (e.g. 'Information Technology', 0.093)."""
    k = AGENT_SIGNALS.index(agent)
    means = panel.sector_means()
    best = max(means, key=lambda s: means[s][k])
    return best, float(means[best][k])


def render_highlight(sector: str, agent: str, value: float) -> str:
    return f"{sector}: mean {agent} weight {value:.3f}"
