"""Non-negative least-squares attribution of thesis embeddings onto agent
embeddings.

``nnls_solve`` is a Lawson-Hanson active-set solver. ``attribute`` applies it
to one stock-date: it solves ``min ||t - A w||^2, w >= 0`` with the agent
matrix in (news, fundamentals, dynamics, macro) order, normalises the weights
to sum to one and falls back to uniform weights when the solution is the zero
vector. Reconstruction diagnostics use the raw (unnormalised) solution.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, KeyMismatch, MissingRole, NonFiniteInput
from .panel import SignalPanel
from .store import AGENTS, EmbeddingStore

DEFAULT_TOL = 1e-10
WEIGHT_COLUMNS = ("w_news", "w_fund", "w_dyn", "w_macro")


class NnlsConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class NnlsSolution:
    x: np.ndarray
    iterations: int
    converged: bool


def _check_problem(A, b):
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if A.ndim != 2:
        raise DimensionMismatch("columns must form a 2-d array (D x k)")
    D, k = A.shape
    if b.size != D:
        raise DimensionMismatch(f"target has length {b.size}, columns have {D} rows")
    if k < 1 or D < k:
        raise DimensionMismatch(f"need D >= k >= 1, got D={D}, k={k}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise NonFiniteInput("non-finite value in NNLS problem")
    return A, b


def lawson_hanson(A, b, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> NnlsSolution:
    """Active-set NNLS. Stops when every inactive gradient component satisfies the
    KKT condition at ``tol * (||A^T b||_inf + 1)``."""
    A, b = _check_problem(A, b)
    D, k = A.shape
    max_iter = 3 * k if max_iter is None else max_iter
    scale = float(np.max(np.abs(A.T @ b))) + 1.0
    # w = A^T (b - Ax) = -gradient / 2, hence the factor 0.5
    thresh = 0.5 * tol * scale
    x = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    w = A.T @ b
    it = 0
    converged = False
    while True:
        free = ~passive
        if not free.any() or np.max(np.where(free, w, -np.inf)) <= thresh:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        j = int(np.argmax(np.where(free, w, -np.inf)))
        passive[j] = True
        while True:
            z = np.zeros(k)
            z[passive] = np.linalg.lstsq(A[:, passive], b, rcond=None)[0]
            if np.all(z[passive] > 0):
                x = z
                break
            neg = passive & (z <= 0) & (x - z > 0)
            if not neg.any():
                passive &= z > 0
                x = np.where(passive, z, 0.0)
                break
            alpha = float(np.min(x[neg] / (x[neg] - z[neg])))
            x = x + alpha * (z - x)
            passive &= x > np.finfo(float).eps * max(1.0, float(np.max(np.abs(x))))
            x[~passive] = 0.0
        w = A.T @ (b - A @ x)
    return NnlsSolution(x, it, converged)


def nnls_solve(columns, target, tolerance: float = DEFAULT_TOL) -> np.ndarray:
    """Non-negative coefficients minimising ``||target - columns @ w||_2``."""
    sol = lawson_hanson(columns, target, tolerance)
    if not sol.converged:
        warnings.warn(f"NNLS stopped after {sol.iterations} iterations without meeting KKT tolerance",
                      NnlsConvergenceWarning, stacklevel=2)
    return sol.x


def kkt_violation(A, b, x) -> float:
    """Largest KKT violation of ``x`` relative to ``||A^T b||_inf + 1``."""
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    g = 2.0 * A.T @ (A @ x - b)
    scale = float(np.max(np.abs(A.T @ b))) + 1.0
    pos = x > 0
    v_pos = np.max(np.abs(g[pos]), initial=0.0)
    v_zero = np.max(-g[~pos], initial=0.0)
    return max(v_pos, v_zero) / scale


@dataclass(frozen=True)
class AttributionWeights:
    w_news: float
    w_fund: float
    w_dyn: float
    w_macro: float
    normalized: bool
    recon_cosine: float
    residual_norm: float
    fallback_used: bool
    converged: bool = True

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.w_news, self.w_fund, self.w_dyn, self.w_macro])


def attribute_vectors(thesis, agents, tolerance: float = DEFAULT_TOL) -> tuple[AttributionWeights, np.ndarray]:
    """Attribution for one thesis vector and a D x 4 agent matrix.

    Returns the weights record and the raw solution.
    """
    t = np.asarray(thesis, dtype=np.float64).reshape(-1)
    A = np.asarray(agents, dtype=np.float64)
    if A.ndim != 2 or A.shape[1] != 4:
        raise DimensionMismatch(f"attribution needs a D x 4 agent matrix, got shape {A.shape}")
    t_norm = float(np.linalg.norm(t))
    if t_norm == 0.0:
        raise NonFiniteInput("thesis vector is zero; cosine is undefined")
    sol = lawson_hanson(A, t, tolerance)
    raw = sol.x
    total = float(raw.sum())
    k = raw.size
    if total <= 0.0:
        w = np.full(k, 1.0 / k)
        recon_cos = 0.0
        resid = t_norm
        fallback = True
    else:
        w = raw / total
        recon = A @ raw
        resid = float(np.linalg.norm(t - recon))
        recon_cos = float(recon @ t) / (float(np.linalg.norm(recon)) * t_norm)
        recon_cos = min(1.0, max(-1.0, recon_cos))
        fallback = False
    rec = AttributionWeights(float(w[0]), float(w[1]), float(w[2]), float(w[3]), True,
                             recon_cos, resid, fallback, sol.converged)
    return rec, raw


def attribute(store: EmbeddingStore, date, ticker: str, tolerance: float = DEFAULT_TOL) -> AttributionWeights:
    t, A = store.thesis_and_agents(date, ticker)
    return attribute_vectors(t, A, tolerance)[0]


class AttributionTable:
    """Attribution results aligned row-for-row with a panel."""

    def __init__(self, keys, weights, recon_cosine, residual_norm, fallback, converged):
        self.keys = list(keys)
        self.weights = np.asarray(weights, dtype=np.float64).reshape(-1, 4)
        self.recon_cosine = np.asarray(recon_cosine, dtype=np.float64)
        self.residual_norm = np.asarray(residual_norm, dtype=np.float64)
        self.fallback = np.asarray(fallback, dtype=bool)
        self.converged = np.asarray(converged, dtype=bool)

    def __len__(self) -> int:
        return len(self.keys)

    def row(self, i: int) -> AttributionWeights:
        w = self.weights[i]
        return AttributionWeights(float(w[0]), float(w[1]), float(w[2]), float(w[3]), True,
                                  float(self.recon_cosine[i]), float(self.residual_norm[i]),
                                  bool(self.fallback[i]), bool(self.converged[i]))

    def __getitem__(self, key) -> AttributionWeights:
        return self.row(self.keys.index(key))

    @property
    def summary(self) -> dict:
        return {
            "n_rows": len(self),
            "mean_recon_cosine": float(np.mean(self.recon_cosine)) if len(self) else math.nan,
            "fallback_count": int(self.fallback.sum()),
            "nonconverged_count": int((~self.converged).sum()),
            "mean_weights": {c: float(v) for c, v in zip(WEIGHT_COLUMNS, self.weights.mean(axis=0))},
        }

    def aligned_to(self, panel: SignalPanel) -> "AttributionTable":
        """Rows reordered/filtered to match ``panel`` row order."""
        keys = panel.keys()
        if keys == self.keys:
            return self
        pos = {k: i for i, k in enumerate(self.keys)}
        try:
            idx = np.array([pos[k] for k in keys], dtype=np.int64)
        except KeyError as exc:
            raise KeyMismatch(f"no attribution for {exc.args[0]}") from None
        return AttributionTable(keys, self.weights[idx], self.recon_cosine[idx],
                                self.residual_norm[idx], self.fallback[idx], self.converged[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", "ticker", *WEIGHT_COLUMNS, "recon_cosine", "residual_norm", "fallback"])
        for i, (d, t) in enumerate(self.keys):
            w.writerow([d.isoformat(), t, *(repr(float(v)) for v in self.weights[i]),
                        repr(float(self.recon_cosine[i])), repr(float(self.residual_norm[i])),
                        int(self.fallback[i])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "AttributionTable":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            [(dt.date.fromisoformat(r["date"]), r["ticker"]) for r in rows],
            [[float(r[c]) for c in WEIGHT_COLUMNS] for r in rows],
            [float(r["recon_cosine"]) for r in rows],
            [float(r["residual_norm"]) for r in rows],
            [r["fallback"] in ("1", "true", "True") for r in rows],
            [True] * len(rows),
        )


def attribute_panel(store: EmbeddingStore, panel: SignalPanel, tolerance: float = DEFAULT_TOL) -> AttributionTable:
    """One attribution per panel row, in panel order (sorted by date, ticker)."""
    keys = panel.keys()
    n = len(keys)
    W = np.empty((n, 4))
    rc = np.empty(n)
    rn = np.empty(n)
    fb = np.zeros(n, dtype=bool)
    cv = np.ones(n, dtype=bool)
    for i, (d, tk) in enumerate(keys):
        try:
            rec = attribute(store, d, tk, tolerance)
        except MissingRole as exc:
            raise MissingRole(exc.role, d.isoformat(), tk) from None
        W[i] = rec.weights
        rc[i] = rec.recon_cosine
        rn[i] = rec.residual_norm
        fb[i] = rec.fallback_used
        cv[i] = rec.converged
    return AttributionTable(keys, W, rc, rn, fb, cv)


__all__ = ["AGENTS", "AttributionTable", "AttributionWeights", "attribute", "attribute_panel",
           "attribute_vectors", "kkt_violation", "lawson_hanson", "nnls_solve"]
