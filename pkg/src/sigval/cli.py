"""Command-line entry point.

Every subcommand writes into ``--output-dir``. ``run-all`` executes the
stages in order and writes ``manifest.json`` describing seeds, conventions
and skipped dates. Outputs contain no timestamps, so identical inputs and
configuration give byte-identical bundles.
"""

from __future__ import annotations

import argparse
import configparser
import contextlib
import csv
import dataclasses
import datetime as dt
import enum
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import cosine as cos_mod
from . import ic as ic_mod
from . import mc as mc_mod
from . import nnls as nnls_mod
from . import panel as panel_mod
from . import risk as risk_mod
from . import sector as sector_mod
from . import synth as synth_mod
from .errors import ComputationError, InputError, InvalidSpec, SigvalError
from .panel import SignalClass
from .stats import MW_EXACT_MAX_N
from .store import read_store

SEED_ENV = "SIGVAL_SEED"
DEFAULT_ECDF = (-0.20, -0.15, -0.10, -0.05, 0.0, 0.05, 0.10)
EXIT_OK, EXIT_INPUT, EXIT_COMPUTE = 0, 2, 3


@dataclass
class RunConfig:
    panel_path: Path | None = None
    embeddings_path: Path | None = None
    output_dir: Path = Path("report")
    seed: int = 0
    mc_sims: int = 10_000
    bootstrap_resamples: int = 5_000
    permutations: int = 10_000
    target_class: SignalClass = SignalClass.STRONG_BUY
    ecdf_thresholds: tuple[float, ...] = DEFAULT_ECDF
    workers: int = 1
    skip_attribution: bool = False

    def validate(self) -> None:
        for name in ("mc_sims", "bootstrap_resamples", "permutations", "workers"):
            if getattr(self, name) < 1:
                raise InvalidSpec(f"{name} must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpec("seed must be an unsigned 64-bit integer")
        self.target_class = SignalClass.parse(self.target_class)


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except SigvalError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise


# -- serialisation -----------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(_plain_key(k)): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, SignalClass):
        return obj.label
    if isinstance(obj, enum.Enum):
        return obj.name
    if isinstance(obj, (dt.date, dt.datetime)):
        return obj.isoformat()
    if isinstance(obj, Path):
        return obj.as_posix()
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return None if math.isnan(x) or math.isinf(x) else x
    return obj


def _plain_key(k):
    if isinstance(k, SignalClass):
        return k.label
    if isinstance(k, dt.date):
        return k.isoformat()
    return k


class Bundle:
    """Writes report files under one directory and remembers what was written."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def _path(self, name: str) -> Path:
        if name not in self.files:
            self.files.append(name)
        return self.root / name

    def text(self, name: str, content: str) -> None:
        with open(self._path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)

    def json(self, name: str, obj) -> None:
        self.text(name, json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")

    def csv(self, name: str, header, rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
        self.text(name, buf.getvalue())

    def binary(self, name: str, writer) -> None:
        writer(self._path(name))


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, dt.date):
        return v.isoformat()
    if isinstance(v, SignalClass):
        return v.label
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    return v


# -- stages ------------------------------------------------------------------

@dataclass
class Context:
    config: RunConfig
    bundle: Bundle
    panel: panel_mod.SignalPanel | None = None
    store: object = None
    attribution: nnls_mod.AttributionTable | None = None
    manifest: dict = field(default_factory=dict)

    def load(self, need_embeddings: bool = False) -> None:
        if self.panel is None:
            if self.config.panel_path is None:
                raise InputError("--panel is required")
            with stage("load"):
                self.panel = panel_mod.load_panel(self.config.panel_path)
        if need_embeddings and self.store is None:
            if self.config.embeddings_path is None:
                raise InputError("--embeddings is required for this stage")
            with stage("load"):
                self.store = read_store(self.config.embeddings_path)

    def conventions(self, key: str, value) -> None:
        self.manifest.setdefault("conventions", {})[key] = value

    def skipped(self, key: str, value) -> None:
        self.manifest.setdefault("skipped", {})[key] = value


def stage_summarize(ctx: Context) -> None:
    ctx.load()
    p, b = ctx.panel, ctx.bundle
    with stage("summarize"):
        dist = panel_mod.signal_distribution(p)
        b.csv("signal_distribution.csv", ["signal", "count", "percent"],
              [(c, n, pc) for c, (n, pc) in dist.items()])
        lines = ["| Signal | Count | % |", "|---|---:|---:|"]
        lines += [f"| {c.label} | {n:,} | {pc:.1f} |" for c, (n, pc) in dist.items()]
        lines.append(f"| Total | {len(p):,} | 100.0 |")
        b.text("signal_distribution.md", "\n".join(lines) + "\n")
        rows = []
        try:
            sh = panel_mod.sector_shares(p, ctx.config.target_class, "pooled")
            for sec in sorted(set(sh.universe["pooled"]) | set(sh.selection["pooled"])):
                rows.append((sec, sh.selection["pooled"].get(sec, 0.0), sh.universe["pooled"].get(sec, 0.0)))
        except ComputationError:
            ctx.skipped("sector_shares", f"no {ctx.config.target_class.label} rows")
        b.csv("sector_shares.csv", ["sector", "selection_share", "universe_share"], rows)
        b.json("panel_summary.json", {
            "cohort": p.cohort_name,
            "n_rows": len(p),
            "n_dates": p.n_dates,
            "n_tickers": len(set(p.tickers.tolist())),
            "n_sectors": len(set(p.sectors.tolist())),
            "first_date": p.date_list[0],
            "last_date": p.date_list[-1],
            "universe_sizes": {d: s.stop - s.start for d, s in p.date_slices()},
            "actionable_rows": int(p.class_mask([SignalClass.BUY, SignalClass.STRONG_BUY]).sum()),
        })


def stage_mc(ctx: Context) -> None:
    ctx.load()
    cfg = ctx.config
    b = ctx.bundle
    with stage("mc-test"):
        res = mc_mod.run_mc(ctx.panel, mc_mod.McConfig(cfg.mc_sims, cfg.seed, cfg.target_class, cfg.workers))
        d = res.to_dict()
        b.json("mc_result.json", d)
        table = mc_mod.per_date_csv_rows(res)
        b.csv("mc_per_date.csv", list(table[0]), [list(r.values()) for r in table])
        b.text("mc_per_date.txt", mc_mod.per_date_text(res))
        b.binary("mc_null_mean_monthly.bin", lambda p: mc_mod.write_null_samples(res.null_mean_monthly_samples, p))
        b.binary("mc_null_compound.bin", lambda p: mc_mod.write_null_samples(res.null_compound_samples, p))
        paths = mc_mod.compound_paths(res)
        b.csv("mc_compound_paths.csv", list(paths[0]), [list(r.values()) for r in paths])
    ctx.conventions("mc", d["conventions"])
    ctx.skipped("mc_dates_without_selection", res.skipped_dates)
    ctx.manifest.setdefault("seeds", {})["mc"] = cfg.seed


def _ensure_attribution(ctx: Context) -> nnls_mod.AttributionTable:
    ctx.load(need_embeddings=True)
    if ctx.attribution is None:
        with stage("attribute"):
            ctx.attribution = nnls_mod.attribute_panel(ctx.store, ctx.panel)
    return ctx.attribution


def stage_attribute(ctx: Context) -> None:
    tab = _ensure_attribution(ctx)
    ctx.bundle.text("attribution.csv", tab.to_csv())
    ctx.bundle.json("attribution_summary.json", tab.summary)
    ctx.conventions("attribution", {
        "solver": "Lawson-Hanson active set",
        "normalisation": "w / sum(w)",
        "fallback": "uniform 0.25 when the NNLS solution is the zero vector",
        "recon_cosine": "cosine(thesis, A @ raw NNLS solution)",
    })


def stage_cosine(ctx: Context) -> None:
    tab = _ensure_attribution(ctx)
    with stage("cosine"):
        rep = cos_mod.cosine_report(ctx.store, ctx.panel, tab)
    ctx.bundle.text("cosine_table.csv", rep.to_csv())
    ctx.bundle.text("cosine_table.md", rep.to_markdown())
    ctx.bundle.text("cosine_heatmap.csv", rep.heatmap_csv())
    ctx.conventions("cosine_agreement", "Spearman(thesis-agent cosine, weight), fallback rows excluded")
    ctx.skipped("cosine_fallback_rows", rep.excluded_fallbacks)


def stage_ic(ctx: Context) -> None:
    ctx.load()
    cfg, b = ctx.config, ctx.bundle
    with stage("ic"):
        act = panel_mod.actionable_subset(ctx.panel)
        signals = {"Score": ic_mod.ordinal_score(act)}
        weights = None
        if not cfg.skip_attribution and cfg.embeddings_path is not None:
            weights = _ensure_attribution(ctx).aligned_to(act).weights
            for k, name in enumerate(ic_mod.AGENT_SIGNALS):
                signals[name] = weights[:, k]
        rows, series = ic_mod.ic_table(act, signals)
        b.csv("ic_table.csv", [f.name for f in dataclasses.fields(ic_mod.IcTableRow)],
              [dataclasses.astuple(r) for r in rows])
        b.text("ic_table.md", ic_mod.ic_table_markdown(rows))
        b.text("ic_series.csv", ic_mod.ic_series_csv(series))
        T = max(s.n_dates for s in series.values())
        extra = {
            "thresholds": {"T": T, "two_tailed_0.05": ic_mod.icir_threshold(T, 0.05, "two"),
                           "one_tailed_0.05": ic_mod.icir_threshold(T, 0.05, "one")},
            "skipped_dates": {n: s.skipped_dates for n, s in series.items()},
        }
        cm = ic_mod.class_mean_returns(act)
        extra["class_means"] = {"means": cm.means, "counts": cm.counts, "buy_lt_strong_buy": cm.buy_lt_strong_buy}
        if weights is not None:
            tl = ic_mod.best_agent_timeline(act, weights)
            counts = ic_mod.winner_counts(tl)
            extra["winner_counts"] = counts
            extra["winner_counts_text"] = ic_mod.render_winner_counts(counts)
            b.csv("best_agent_timeline.csv", ["date", "winner", "winner_ic", "tie", *ic_mod.AGENT_SIGNALS],
                  [[r["date"], r["winner"], r["winner_ic"], r["tie"],
                    *(math.nan if r["per_agent_ic"][a] is None else r["per_agent_ic"][a]
                      for a in ic_mod.AGENT_SIGNALS)] for r in tl])
        b.json("ic_tests.json", extra)
    ctx.conventions("ic", {"scope": "actionable rows (buy, strong_buy)", "ties": "average ranks",
                           "p_t": "one-tailed in the direction of the mean IC, df = T - 1",
                           "pooled_p": "two-tailed t approximation, df = n - 2 (directional only)",
                           "best_agent_ties": "first agent in News, Fundamentals, Dynamics, Macro order",
                           "min_cross_section": ic_mod.MIN_CROSS_SECTION})
    ctx.skipped("ic_dates", extra["skipped_dates"])


def stage_risk(ctx: Context) -> None:
    ctx.load()
    cfg, b, p = ctx.config, ctx.bundle, ctx.panel
    with stage("risk"):
        present = [c for c in panel_mod.ALL_CLASSES if np.any(p.signals == int(c))]
        profiles = [risk_mod.risk_profile(p, c) for c in present]
        deltas, tests = {}, {"bootstrap": {}, "skipped": []}
        if SignalClass.HOLD in present:
            for c in (SignalClass.BUY, SignalClass.STRONG_BUY):
                if c not in present:
                    continue
                try:
                    r = risk_mod.delta_updn_bootstrap(p, c, SignalClass.HOLD, cfg.bootstrap_resamples, cfg.seed)
                except ComputationError as exc:
                    tests["skipped"].append(f"{c.label} vs hold: {exc}")
                    continue
                deltas[c] = r
                tests["bootstrap"][f"{c.label}_vs_hold"] = {
                    "delta": r.delta, "ci_lo": r.ci_lo, "ci_hi": r.ci_hi, "p_one": r.p_one,
                    "resamples": r.resamples, "redraws": r.redraws, "confidence": r.confidence}
            if cfg.target_class in present:
                ec = risk_mod.ecdf_exceedance(p, cfg.target_class, SignalClass.HOLD, cfg.ecdf_thresholds)
                b.csv("ecdf.csv", ["threshold", f"p_{cfg.target_class.label}", "p_hold", "gap"],
                      [[e["threshold"], e["p_a"], e["p_b"], e["gap"]] for e in ec])
            try:
                mw = risk_mod.magnitude_test(p)
                tests["magnitude"] = {"u": mw.u, "z": mw.z, "p": mw.p_one_tailed, "n_long": mw.n_a,
                                      "n_hold": mw.n_b, "method": mw.method}
            except ComputationError as exc:
                tests["skipped"].append(f"magnitude test: {exc}")
        b.csv("risk_profile.csv", ["signal", "n", "mean", "upside", "downside", "hit_rate", "updn",
                                   "updn_defined", "n_pos", "n_neg", "n_zero"],
              [[q.signal, q.n, q.mean, q.upside, q.downside, q.hit_rate, q.updn, q.updn_defined,
                q.n_pos, q.n_neg, q.n_zero] for q in profiles])
        b.text("risk_profile.md", risk_mod.risk_table_markdown(profiles, deltas))
        b.json("risk_tests.json", tests)
    ctx.conventions("risk", {
        "conditioning": "observation-level returns within class",
        "bootstrap": "independent within-class resampling, percentile CI, empty-tail resamples redrawn",
        "bootstrap_p": "fraction of resampled deltas <= 0",
        "ecdf": "P(r <= x)",
        "mann_whitney": f"exact enumeration when n + m <= {MW_EXACT_MAX_N}, else normal approximation "
                        "with tie and continuity correction",
    })
    ctx.manifest.setdefault("seeds", {})["bootstrap"] = cfg.seed


def stage_beta(ctx: Context) -> None:
    ctx.load()
    with stage("beta"):
        rep = risk_mod.beta_analysis(ctx.panel, ctx.config.target_class)
    b = ctx.bundle
    b.json("beta_report.json", rep.to_dict())
    b.text("beta_report.md", risk_mod.beta_markdown(rep))
    b.csv("beta_points.csv", ["date", "ew_return", "portfolio_return", "fitted"],
          [[d, e, q, rep.alpha_monthly + rep.beta * e] for d, e, q in zip(rep.dates, rep.ew, rep.portfolio)])
    b.csv("stock_betas.csv", ["ticker", "beta"], sorted(rep.stock_betas.items()))
    ctx.conventions("beta", rep.to_dict()["conventions"])
    ctx.skipped("beta_tickers", rep.skipped_tickers)


def stage_sector(ctx: Context) -> None:
    cfg, b = ctx.config, ctx.bundle
    tab = _ensure_attribution(ctx)
    out = {}
    with stage("sector"):
        swp = sector_mod.sector_weight_panel(ctx.panel, tab)
        b.text("sector_weights.csv", swp.to_long_csv())
        try:
            out["drift"] = sector_mod.residual_drift_correlation(ctx.store, ctx.panel, tab).to_dict()
        except ComputationError as exc:
            out["drift"] = {"error": f"{type(exc).__name__}: {exc}"}
        act = panel_mod.actionable_subset(ctx.panel)
        try:
            perm = sector_mod.winner_permutation_test(act, tab.aligned_to(act).weights, cfg.permutations, cfg.seed)
            out["winner_permutation"] = perm.to_dict()
        except ComputationError as exc:
            out["winner_permutation"] = {"error": f"{type(exc).__name__}: {exc}"}
        means = swp.sector_means()
        out["sector_mean_weights"] = {s: dict(zip(ic_mod.AGENT_SIGNALS, v)) for s, v in means.items()}
        b.json("sector_tests.json", out)
    ctx.conventions("sector", {"drift": sector_mod.DRIFT_DEFINITION,
                               "permutation": sector_mod.PERMUTATION_SCHEME,
                               "min_cross_section": ic_mod.MIN_CROSS_SECTION})
    ctx.manifest.setdefault("seeds", {})["permutation"] = cfg.seed


PIPELINE = (
    ("summarize", stage_summarize, False),
    ("mc-test", stage_mc, False),
    ("attribute", stage_attribute, True),
    ("cosine", stage_cosine, True),
    ("ic", stage_ic, False),
    ("risk", stage_risk, False),
    ("beta", stage_beta, False),
    ("sector", stage_sector, True),
)


def write_manifest(ctx: Context, stages: list[str]) -> None:
    cfg = ctx.config
    m = dict(ctx.manifest)
    m["version"] = __version__
    m["numpy_version"] = np.__version__
    m["stages"] = stages
    m["config"] = {
        "panel": cfg.panel_path.name if cfg.panel_path else None,
        "embeddings": cfg.embeddings_path.name if cfg.embeddings_path else None,
        "seed": cfg.seed, "mc_sims": cfg.mc_sims, "bootstrap_resamples": cfg.bootstrap_resamples,
        "permutations": cfg.permutations, "target_class": cfg.target_class,
        "ecdf_thresholds": list(cfg.ecdf_thresholds), "skip_attribution": cfg.skip_attribution,
    }
    m["files"] = sorted(ctx.bundle.files)
    ctx.bundle.json("manifest.json", m)


def run_pipeline(config: RunConfig) -> Context:
    config.validate()
    ctx = Context(config, Bundle(config.output_dir))
    done = []
    for name, fn, needs_embeddings in PIPELINE:
        if needs_embeddings and config.skip_attribution:
            continue
        fn(ctx)
        done.append(name)
    write_manifest(ctx, done)
    return ctx


# -- argument handling ---------------------------------------------------------

CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)}


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines (comments with #); keys may use - or _."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    text = Path(path).read_text(encoding="utf-8")
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise InputError(f"config file {path}: {exc}") from None
    out = {}
    for k, v in parser["run"].items():
        key = k.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise InputError(f"config file {path}: unknown key {k!r}")
        out[key] = v.strip().strip('"').strip("'")
    return out


def _floats(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    parts = [p for p in str(text).strip("[]() ").replace(",", " ").split() if p]
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise InputError(f"bad threshold list {text!r}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise InputError(f"bad boolean {text!r}")


_CONVERT = {
    "panel_path": Path, "embeddings_path": Path, "output_dir": Path,
    "seed": int, "mc_sims": int, "bootstrap_resamples": int, "permutations": int, "workers": int,
    "target_class": SignalClass.parse, "ecdf_thresholds": _floats, "skip_attribution": _bool,
}

# CLI flag -> RunConfig field, where the names differ
_FLAG_FIELDS = {"panel": "panel_path", "embeddings": "embeddings_path"}


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    env_seed = os.environ.get(SEED_ENV)
    if env_seed:
        values["seed"] = env_seed
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for name in ("panel", "embeddings", "output_dir", "seed", "mc_sims", "bootstrap_resamples",
                 "permutations", "target_class", "ecdf_thresholds", "workers", "skip_attribution"):
        v = getattr(args, name, None)
        if v is not None and v is not False:
            values[_FLAG_FIELDS.get(name, name)] = v
    kwargs = {}
    for k, v in values.items():
        try:
            kwargs[k] = _CONVERT[k](v)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SigvalError):
                raise
            raise InputError(f"bad value for {k}: {v!r}") from None
    cfg = RunConfig(**kwargs)
    cfg.validate()
    return cfg


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--panel", help="signal panel (csv or jsonl)")
    p.add_argument("--embeddings", help="embedding store (binary .msab or jsonl)")
    p.add_argument("--output-dir", help="report directory (default: report)")
    p.add_argument("--config", help="key = value configuration file; flags override it")
    p.add_argument("--seed", type=int, help=f"RNG seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--mc-sims", type=int)
    p.add_argument("--bootstrap-resamples", type=int)
    p.add_argument("--permutations", type=int)
    p.add_argument("--target-class")
    p.add_argument("--ecdf-thresholds", help="comma-separated decimal returns")
    p.add_argument("--workers", type=int, help="threads for the MC null (output is identical)")
    p.add_argument("--skip-attribution", action="store_true",
                   help="run only the stages that do not need embeddings")


def _add_synth_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output-dir", required=True)
    p.add_argument("--config", help="key = value file with SynthSpec fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-stocks", type=int)
    p.add_argument("--n-dates", type=int)
    p.add_argument("--n-sectors", type=int)
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--planted-excess-monthly", type=float)
    p.add_argument("--picks-per-date", type=int)
    p.add_argument("--return-vol", type=float)
    p.add_argument("--noise-scale", type=float)
    p.add_argument("--theme-scale", type=float)
    p.add_argument("--format", choices=("binary", "jsonl"), default="binary", help="embedding store format")


def build_synth_spec(args: argparse.Namespace) -> synth_mod.SynthSpec:
    fields = {f.name: f for f in dataclasses.fields(synth_mod.SynthSpec)}
    simple = {"seed": int, "n_stocks": int, "n_dates": int, "n_sectors": int, "embed_dim": int,
              "planted_excess_monthly": float, "picks_per_date": int, "buys_per_date": int,
              "return_vol": float, "noise_scale": float, "theme_scale": float, "market_mean": float,
              "market_vol": float, "sector_vol": float, "dominant_weight": float,
              "weight_return_coupling": float, "start": str}
    values: dict = {}
    env_seed = os.environ.get(SEED_ENV)
    if env_seed:
        values["seed"] = int(env_seed)
    if args.config:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
        try:
            parser.read_string("[synth]\n" + Path(args.config).read_text(encoding="utf-8"))
        except configparser.Error as exc:
            raise InputError(f"config file {args.config}: {exc}") from None
        for k, v in parser["synth"].items():
            key = k.replace("-", "_")
            if key not in fields:
                raise InputError(f"unknown synth key {k!r}")
            try:
                values[key] = simple[key](v) if key in simple else json.loads(v)
            except ValueError:
                raise InputError(f"bad value for {key}: {v!r}") from None
    for name in simple:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if "agent_regime_schedule" in values:
        values["agent_regime_schedule"] = {int(k): v for k, v in values["agent_regime_schedule"].items()}
    return synth_mod.SynthSpec(**values)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sigval", description="Validation statistics for recommendation panels.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "summarize": "signal and sector distributions",
        "mc-test": "Monte Carlo selection test",
        "attribute": "NNLS attribution of thesis embeddings",
        "cosine": "cosine diagnostics of the attribution",
        "ic": "pooled and date-level information coefficients",
        "risk": "risk profiles, bootstrap dUpDn, ECDF and magnitude test",
        "beta": "market-beta regression and up/down decomposition",
        "sector": "sector weight panels, residual-drift correlation, winner permutation test",
        "run-all": "every stage plus manifest.json",
    }
    for name, h in helps.items():
        _add_run_flags(sub.add_parser(name, help=h))
    _add_synth_flags(sub.add_parser("synth", help="write a synthetic cohort with ground truth"))
    return ap


STAGES = {name: fn for name, fn, _ in PIPELINE}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "synth":
            spec = build_synth_spec(args)
            cohort = synth_mod.generate_synthetic_cohort(spec)
            paths = synth_mod.write_synthetic_cohort(cohort, args.output_dir, store_format=args.format)
            for k, v in paths.items():
                print(f"{k}: {v}")
            return EXIT_OK
        cfg = build_config(args)
        if args.command == "run-all":
            ctx = run_pipeline(cfg)
        else:
            ctx = Context(cfg, Bundle(cfg.output_dir))
            STAGES[args.command](ctx)
        print(f"wrote {len(ctx.bundle.files)} file(s) to {cfg.output_dir}")
        return EXIT_OK
    except InputError as exc:
        _report(exc)
        return EXIT_INPUT
    except ComputationError as exc:
        _report(exc)
        return EXIT_COMPUTE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def _report(exc: SigvalError) -> None:
    where = getattr(exc, "stage", None)
    prefix = f"error in stage {where}" if where else "error"
    print(f"{prefix}: {type(exc).__name__}: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
