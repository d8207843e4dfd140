"""Reference implementations that share no code with the package.

They are slow and simple on purpose: brute-force enumeration, high-precision
quadrature and plain gradient iterations.
"""

from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np


def t_upper_tail(t: float, df: int, dps: int = 40) -> float:
    """P(T >= t) by numerical integration of the Student-t density."""
    with mpmath.workdps(dps):
        nu = mpmath.mpf(df)
        c = mpmath.gamma((nu + 1) / 2) / (mpmath.sqrt(nu * mpmath.pi) * mpmath.gamma(nu / 2))
        dens = lambda x: c * (1 + x * x / nu) ** (-(nu + 1) / 2)
        return float(mpmath.quad(dens, [mpmath.mpf(t), mpmath.inf]))


def mann_whitney_exact(a, b) -> tuple[float, float]:
    """(P(U >= u_obs), P(U <= u_obs)) over all relabellings of the pooled sample.

    U counts pairs with a > b plus half the ties, computed pairwise.
    """
    pooled = list(a) + list(b)
    n = len(a)

    def u_stat(xs, ys):
        return sum((x > y) + 0.5 * (x == y) for x in xs for y in ys)

    u_obs = u_stat(a, b)
    ge = le = total = 0
    idx = range(len(pooled))
    for combo in itertools.combinations(idx, n):
        chosen = set(combo)
        xs = [pooled[i] for i in combo]
        ys = [pooled[i] for i in idx if i not in chosen]
        u = u_stat(xs, ys)
        ge += u >= u_obs - 1e-12
        le += u <= u_obs + 1e-12
        total += 1
    return ge / total, le / total


def mc_exhaustive(universe_returns: list[np.ndarray], n_picks: list[int], actual: list[float]):
    """Exact p-values of the mean-monthly and compound statistics.

    Enumerates every combination of per-date selections (product over dates of
    C(|U_d|, n_d)) with equal probability.
    """
    per_date = []
    for r, k in zip(universe_returns, n_picks):
        per_date.append([float(np.mean([r[i] for i in c])) for c in itertools.combinations(range(len(r)), k)])
    act_mean = float(np.mean(actual))
    act_comp = float(np.prod([1 + x for x in actual]) - 1)
    ge_mean = ge_comp = total = 0
    means, comps = [], []
    for path in itertools.product(*per_date):
        m = float(np.mean(path))
        c = float(np.prod([1 + x for x in path]) - 1)
        means.append(m)
        comps.append(c)
        ge_mean += m >= act_mean - 1e-15
        ge_comp += c >= act_comp - 1e-15
        total += 1
    return {"p_mean": ge_mean / total, "p_compound": ge_comp / total,
            "null_mean": float(np.mean(means)), "paths": total}


def nnls_projected_gradient(A: np.ndarray, b: np.ndarray, iters: int = 20000) -> np.ndarray:
    """Batched accelerated projected gradient for min ||A x - b||^2, x >= 0.

    ``A`` is (B, D, k) and ``b`` is (B, D). Uses a 1/L step with Nesterov
    momentum and adaptive restart.
    """
    G = np.einsum("bdi,bdj->bij", A, A)
    c = np.einsum("bdi,bd->bi", A, b)
    L = np.linalg.eigvalsh(G)[:, -1]
    step = (1.0 / L)[:, None]
    x = np.zeros_like(c)
    y = x.copy()
    t = np.ones(len(c))
    f_prev = np.full(len(c), np.inf)
    for _ in range(iters):
        grad = np.einsum("bij,bj->bi", G, y) - c
        x_new = np.maximum(y - step * grad, 0.0)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        f = 0.5 * np.einsum("bi,bij,bj->b", x_new, G, x_new) - np.einsum("bi,bi->b", c, x_new)
        restart = f > f_prev
        mom = ((t - 1) / t_new)[:, None]
        y = np.where(restart[:, None], x_new, x_new + mom * (x_new - x))
        t = np.where(restart, 1.0, t_new)
        x, f_prev = x_new, f
    return x


def nnls_objective(A: np.ndarray, b: np.ndarray, x: np.ndarray) -> float:
    r = A @ x - b
    return float(r @ r)


def ols_normal_equations(x, y) -> tuple[float, float]:
    """Intercept and slope from the 2x2 normal equations, solved by Cramer's rule."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    n = len(x)
    sx, sy = math.fsum(x), math.fsum(y)
    sxx = math.fsum(v * v for v in x)
    sxy = math.fsum(u * v for u, v in zip(x, y))
    det = n * sxx - sx * sx
    alpha = (sxx * sy - sx * sxy) / det
    beta = (n * sxy - sx * sy) / det
    return alpha, beta


def spearman_bruteforce(x, y) -> float:
    """Spearman rho via explicit mid-rank assignment and the Pearson formula."""
    def ranks(v):
        v = list(v)
        out = []
        for a in v:
            less = sum(1 for u in v if u < a)
            equal = sum(1 for u in v if u == a)
            out.append(less + (equal + 1) / 2.0)
        return out

    rx, ry = ranks(x), ranks(y)
    mx, my = sum(rx) / len(rx), sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    return num / den
