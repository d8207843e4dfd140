"""Signal panels: one row per (date, ticker) with a recommendation and a
one-month forward return.

Rows are held column-wise in numpy arrays sorted by ``(date, ticker)`` so that
each date's universe is a contiguous slice. Panels are immutable; filtered
views return new panels.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DuplicateKey, EmptyResult, MalformedRecord, UnknownDate, UnknownSignal

FIELDS = ("date", "ticker", "sector", "signal", "fwd_return_1m")


class SignalClass(enum.IntEnum):
    """Five-point ordinal recommendation. Integer value is the full-panel score."""

    STRONG_SELL = -2
    SELL = -1
    HOLD = 0
    BUY = 1
    STRONG_BUY = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @property
    def ordinal_score(self) -> int:
        # Within the actionable subset this gives buy -> 1, strong_buy -> 2.
        return int(self)

    @classmethod
    def parse(cls, text) -> "SignalClass":
        if isinstance(text, SignalClass):
            return text
        if isinstance(text, (int, np.integer)) and not isinstance(text, bool):
            try:
                return cls(int(text))
            except ValueError:
                raise UnknownSignal(text) from None
        key = str(text).strip()
        try:
            return _BY_LABEL[key]
        except KeyError:
            raise UnknownSignal(key) from None

    def __str__(self) -> str:
        return self.label


_BY_LABEL = {c.name.lower(): c for c in SignalClass}
ALL_CLASSES = tuple(sorted(SignalClass))
ACTIONABLE = (SignalClass.BUY, SignalClass.STRONG_BUY)


@dataclass(frozen=True)
class ObservationRow:
    date: dt.date
    ticker: str
    sector: str
    signal: SignalClass
    fwd_return_1m: float


def _as_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]").item()
    return dt.date.fromisoformat(str(value).strip())


class SignalPanel:
    """Validated, immutable panel of observation rows.

    Use :meth:`from_rows` or :func:`load_panel` rather than the constructor.
    """

    __slots__ = ("cohort_name", "dates", "tickers", "sectors", "signals", "returns",
                 "_date_values", "_offsets", "_pos")

    def __init__(self, cohort_name, dates, tickers, sectors, signals, returns):
        order = np.lexsort((tickers, dates))
        self.cohort_name = str(cohort_name)
        self.dates = _frozen(np.asarray(dates, dtype="datetime64[D]")[order])
        self.tickers = _frozen(np.asarray(tickers, dtype=object)[order])
        self.sectors = _frozen(np.asarray(sectors, dtype=object)[order])
        self.signals = _frozen(np.asarray(signals, dtype=np.int8)[order])
        self.returns = _frozen(np.asarray(returns, dtype=np.float64)[order])
        values, starts = np.unique(self.dates, return_index=True)
        self._date_values = _frozen(values)
        self._offsets = _frozen(np.append(starts, len(self.dates)))
        self._pos = {d: i for i, d in enumerate(values.tolist())}
        for i in range(len(values)):
            a, b = self._offsets[i], self._offsets[i + 1]
            t = self.tickers[a:b]
            if len(set(t.tolist())) != len(t):
                dup = next(x for j, x in enumerate(t) if x in t[:j])
                raise DuplicateKey(values[i].item().isoformat(), dup)

    @classmethod
    def from_rows(cls, rows: Iterable[ObservationRow], cohort_name: str = "cohort") -> "SignalPanel":
        rows = list(rows)
        seen = set()
        for r in rows:
            key = (r.date, r.ticker)
            if key in seen:
                raise DuplicateKey(r.date.isoformat(), r.ticker)
            seen.add(key)
        return cls(
            cohort_name,
            np.array([np.datetime64(r.date, "D") for r in rows], dtype="datetime64[D]"),
            [r.ticker for r in rows],
            [r.sector for r in rows],
            [int(SignalClass.parse(r.signal)) for r in rows],
            [float(r.fwd_return_1m) for r in rows],
        )

    def __len__(self) -> int:
        return len(self.returns)

    def __repr__(self) -> str:
        return f"SignalPanel({self.cohort_name!r}, rows={len(self)}, dates={self.n_dates})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignalPanel):
            return NotImplemented
        return (
            len(self) == len(other)
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.tickers, other.tickers)
            and np.array_equal(self.sectors, other.sectors)
            and np.array_equal(self.signals, other.signals)
            and np.array_equal(self.returns, other.returns)
        )

    @property
    def n_dates(self) -> int:
        return len(self._date_values)

    @property
    def date_list(self) -> list[dt.date]:
        return [d.item() for d in self._date_values]

    def date_slice(self, date) -> slice:
        try:
            i = self._pos[_as_date(date)]
        except KeyError:
            raise UnknownDate(f"date {date} not in panel") from None
        return slice(int(self._offsets[i]), int(self._offsets[i + 1]))

    def date_slices(self) -> list[tuple[dt.date, slice]]:
        return [
            (d.item(), slice(int(self._offsets[i]), int(self._offsets[i + 1])))
            for i, d in enumerate(self._date_values)
        ]

    @property
    def date_index(self) -> dict[dt.date, range]:
        return {d: range(s.start, s.stop) for d, s in self.date_slices()}

    def universe(self, date) -> list[str]:
        return self.tickers[self.date_slice(date)].tolist()

    def selection(self, date, signal) -> list[str]:
        s = self.date_slice(date)
        mask = self.signals[s] == int(SignalClass.parse(signal))
        return self.tickers[s][mask].tolist()

    def row(self, i: int) -> ObservationRow:
        return ObservationRow(
            self.dates[i].item(), self.tickers[i], self.sectors[i],
            SignalClass(int(self.signals[i])), float(self.returns[i]),
        )

    @property
    def rows(self) -> list[ObservationRow]:
        return [self.row(i) for i in range(len(self))]

    def keys(self) -> list[tuple[dt.date, str]]:
        return list(zip((d.item() for d in self.dates), self.tickers.tolist()))

    def take(self, mask_or_index) -> "SignalPanel":
        idx = np.asarray(mask_or_index)
        return SignalPanel(self.cohort_name, self.dates[idx], self.tickers[idx],
                           self.sectors[idx], self.signals[idx], self.returns[idx])

    def class_mask(self, classes) -> np.ndarray:
        if isinstance(classes, (SignalClass, str, int)):
            classes = [classes]
        codes = [int(SignalClass.parse(c)) for c in classes]
        return np.isin(self.signals, codes)

    @property
    def is_actionable(self) -> bool:
        return bool(np.all(self.signals >= int(SignalClass.BUY)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _parse_record(rec: Mapping, line: int) -> ObservationRow:
    missing = [f for f in FIELDS if f not in rec or rec[f] is None or str(rec[f]).strip() == ""]
    if missing:
        raise MalformedRecord(line, f"missing field(s): {', '.join(missing)}")
    try:
        date = _as_date(rec["date"])
    except ValueError:
        raise MalformedRecord(line, f"bad date {rec['date']!r}") from None
    ticker = str(rec["ticker"]).strip()
    sector = str(rec["sector"]).strip()
    signal = SignalClass.parse(rec["signal"])
    try:
        ret = float(rec["fwd_return_1m"])
    except (TypeError, ValueError):
        raise MalformedRecord(line, f"bad return {rec['fwd_return_1m']!r}") from None
    if not math.isfinite(ret):
        raise MalformedRecord(line, f"non-finite return {ret}")
    if ret <= -1.0:
        raise MalformedRecord(line, f"return {ret} is not > -1")
    return ObservationRow(date, ticker, sector, signal, ret)


def load_panel(path, format: str | None = None, cohort_name: str | None = None) -> SignalPanel:
    """Read a panel from CSV or JSONL. Format is inferred from the suffix if omitted."""
    path = Path(path)
    fmt = (format or ("jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv")).lower()
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            absent = [f for f in FIELDS if f not in header]
            if absent:
                raise MalformedRecord(1, f"header lacks {', '.join(absent)}")
            for rec in reader:
                rows.append(_parse_record(rec, reader.line_num))
        elif fmt == "jsonl":
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedRecord(lineno, f"invalid JSON: {exc.msg}") from None
                if not isinstance(rec, dict):
                    raise MalformedRecord(lineno, "record is not an object")
                rows.append(_parse_record(rec, lineno))
        else:
            raise ValueError(f"unknown panel format {format!r}")
    return SignalPanel.from_rows(rows, cohort_name or path.stem)


def save_panel(panel: SignalPanel, path, format: str | None = None) -> Path:
    path = Path(path)
    fmt = (format or ("jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv")).lower()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            fh.write(panel_to_csv_text(panel))
        else:
            for r in panel.rows:
                fh.write(json.dumps({
                    "date": r.date.isoformat(), "ticker": r.ticker, "sector": r.sector,
                    "signal": r.signal.label, "fwd_return_1m": r.fwd_return_1m,
                }) + "\n")
    return path


def actionable_subset(panel: SignalPanel) -> SignalPanel:
    """Rows with a buy or strong_buy signal; dates without any are dropped."""
    if len(panel) == 0:
        raise EmptyResult("panel is empty")
    mask = panel.signals >= int(SignalClass.BUY)
    if not mask.any():
        raise EmptyResult("panel has no buy or strong_buy rows")
    return panel.take(mask)


def signal_distribution(panel: SignalPanel) -> dict[SignalClass, tuple[int, float]]:
    n = len(panel)
    counts = {c: int(np.count_nonzero(panel.signals == int(c))) for c in ALL_CLASSES}
    return {c: (k, 100.0 * k / n if n else 0.0) for c, k in counts.items()}


@dataclass(frozen=True)
class SectorShares:
    scope: str
    signal: SignalClass
    # unit -> sector -> share; unit is "pooled" or an ISO date string
    selection: dict[str, dict[str, float]]
    universe: dict[str, dict[str, float]]
    counts: dict[str, int]


def _shares(values: Sequence[str]) -> dict[str, float]:
    labels, counts = np.unique(np.asarray(values, dtype=object).astype(str), return_counts=True)
    total = counts.sum()
    return {str(s): float(c) / total for s, c in zip(labels, counts)}


def sector_shares(panel: SignalPanel, signal=SignalClass.STRONG_BUY, scope: str = "pooled") -> SectorShares:
    """Sector composition of one signal class against the universe."""
    signal = SignalClass.parse(signal)
    sel = panel.signals == int(signal)
    if not sel.any():
        raise EmptyResult(f"no {signal.label} rows in panel")
    selection, universe, counts = {}, {}, {}
    if scope == "pooled":
        selection["pooled"] = _shares(panel.sectors[sel])
        universe["pooled"] = _shares(panel.sectors)
        counts["pooled"] = int(sel.sum())
    elif scope == "per_date":
        for d, s in panel.date_slices():
            m = sel[s]
            if not m.any():
                continue
            key = d.isoformat()
            selection[key] = _shares(panel.sectors[s][m])
            universe[key] = _shares(panel.sectors[s])
            counts[key] = int(m.sum())
    else:
        raise ValueError(f"scope must be 'pooled' or 'per_date', got {scope!r}")
    return SectorShares(scope, signal, selection, universe, counts)


def panel_from_records(records: Iterable[Mapping], cohort_name: str = "cohort") -> SignalPanel:
    """Build a panel from dict-like records (same validation as :func:`load_panel`)."""
    return SignalPanel.from_rows(
        (_parse_record(r, i) for i, r in enumerate(records, start=1)), cohort_name
    )


def panel_to_csv_text(panel: SignalPanel) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in panel.rows:
        w.writerow([r.date.isoformat(), r.ticker, r.sector, r.signal.label, repr(r.fwd_return_1m)])
    return buf.getvalue()
