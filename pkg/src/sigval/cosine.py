"""Cosine diagnostics for the attribution: thesis-agent, agent-agent and
thesis-reconstruction cosines, plus the Spearman agreement between each
agent's thesis cosine and its NNLS weight."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import KeyMismatch, LengthMismatch, ZeroVector
from .nnls import AttributionTable
from .panel import SignalPanel
from .stats import spearman
from .store import AGENTS, EmbeddingStore

AGENT_LABELS = ("News", "Fundamentals", "Dynamics", "Macro")


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.size != v.size:
        raise LengthMismatch(f"vectors have lengths {u.size} and {v.size}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine is undefined for a zero vector")
    return max(-1.0, min(1.0, float(u @ v) / (nu * nv)))


@dataclass
class CosineReport:
    thesis_agent_mean: np.ndarray          # (4,)
    thesis_agent_rows: np.ndarray = field(repr=False)  # (N, 4)
    agent_agent: np.ndarray = field(default=None)      # (4, 4) mean matrix
    thesis_recon_mean: float = math.nan
    agreement: list[dict] = field(default_factory=list)
    n_rows: int = 0
    excluded_fallbacks: int = 0

    def table_rows(self) -> list[dict]:
        rows = [{"agent": lab, "rho": a["rho"], "p": a["p"], "n": a["n"],
                 "mean_thesis_cosine": float(self.thesis_agent_mean[i])}
                for i, (lab, a) in enumerate(zip(AGENT_LABELS, self.agreement))]
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["agent", "rho", "p", "n", "mean_thesis_cosine"])
        for r in self.table_rows():
            w.writerow([r["agent"], repr(r["rho"]), repr(r["p"]), r["n"], repr(r["mean_thesis_cosine"])])
        w.writerow(["thesis_reconstruction_mean", repr(self.thesis_recon_mean), "", "", ""])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = ["| Agent | rho_s | n |", "|---|---:|---:|"]
        for r in self.table_rows():
            lines.append(f"| {r['agent']} | {r['rho']:.3f} | {r['n']:,} |")
        lines.append(f"| Thesis reconstruction (C^TR, mean) | {self.thesis_recon_mean:.3f} | -- |")
        return "\n".join(lines) + "\n"

    def heatmap_csv(self) -> str:
        """5 x 5 plot matrix: thesis row/column holds mean thesis-agent cosines,
        the lower-right block the agent-agent means; the thesis diagonal
        cell holds the mean reconstruction cosine."""
        labels = ("Thesis",) + AGENT_LABELS
        M = np.eye(5)
        M[0, 0] = self.thesis_recon_mean
        M[0, 1:] = M[1:, 0] = self.thesis_agent_mean
        M[1:, 1:] = self.agent_agent
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["", *labels])
        for lab, row in zip(labels, M):
            w.writerow([lab, *(repr(float(v)) for v in row)])
        return buf.getvalue()


def _unit_rows(M: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(M, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ZeroVector("zero embedding vector")
    return M / n


def row_cosines(store: EmbeddingStore, panel: SignalPanel) -> tuple[np.ndarray, np.ndarray]:
    """Per-row thesis-agent cosines (N, 4) and agent-agent cosines (N, 4, 4)."""
    keys = panel.keys()
    ta = np.empty((len(keys), 4))
    aa = np.empty((len(keys), 4, 4))
    for i, (d, tk) in enumerate(keys):
        t, A = store.thesis_and_agents(d, tk)
        tu = _unit_rows(t[None, :])[0]
        Au = _unit_rows(A.T)
        ta[i] = np.clip(Au @ tu, -1.0, 1.0)
        G = np.clip(Au @ Au.T, -1.0, 1.0)
        np.fill_diagonal(G, 1.0)
        aa[i] = G
    return ta, aa


def cosine_report(store: EmbeddingStore, panel: SignalPanel, weights: AttributionTable) -> CosineReport:
    if weights.keys != panel.keys():
        raise KeyMismatch("attribution rows do not match panel rows")
    ta, aa = row_cosines(store, panel)
    agent_agent = aa.mean(axis=0)
    agent_agent = 0.5 * (agent_agent + agent_agent.T)
    np.fill_diagonal(agent_agent, 1.0)
    keep = ~weights.fallback
    agreement = []
    for k in range(4):
        res = spearman(ta[keep, k], weights.weights[keep, k])
        agreement.append({"agent": AGENTS[k], "rho": res.rho, "p": res.p_two_tailed, "n": res.n})
    return CosineReport(
        thesis_agent_mean=ta.mean(axis=0),
        thesis_agent_rows=ta,
        agent_agent=agent_agent,
        thesis_recon_mean=float(np.mean(weights.recon_cosine)),
        agreement=agreement,
        n_rows=len(panel),
        excluded_fallbacks=int((~keep).sum()),
    )
