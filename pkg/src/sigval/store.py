"""Embedding store: thesis and agent vectors keyed by (date, ticker, role).

Binary layout (all little-endian)::

    b"MSAB" | version u32 | D u32 | count u64
    per record: days-since-1970 u32 | ticker length u16 | ticker UTF-8
                | role u8 | D x float32

A JSONL file with one ``{"date", "ticker", "role", "vector"}`` object per
line is also accepted, where ``vector`` is base64 of the float32 LE payload.
"""

from __future__ import annotations

import base64
import datetime as dt
import json
import struct
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import DimensionMismatch, MalformedRecord, MissingRole, NonFiniteInput

MAGIC = b"MSAB"
VERSION = 1
ROLES = ("thesis", "news", "fundamentals", "dynamics", "macro")
AGENTS = ROLES[1:]
ROLE_CODE = {r: i for i, r in enumerate(ROLES)}
EPOCH = dt.date(1970, 1, 1)

_HEADER = struct.Struct("<4sIIQ")


def _role_code(role) -> int:
    if isinstance(role, (int, np.integer)):
        if not 0 <= int(role) < len(ROLES):
            raise ValueError(f"unknown role code {role}")
        return int(role)
    try:
        return ROLE_CODE[str(role)]
    except KeyError:
        raise ValueError(f"unknown role {role!r}; expected one of {ROLES}") from None


class EmbeddingStore:
    """In-memory map (date, ticker) -> (5, D) float32 block, one row per role.

    Missing roles are tracked with a mask and only become an error when a
    computation asks for them.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)
        self._vecs: dict[tuple[dt.date, str], np.ndarray] = {}
        self._have: dict[tuple[dt.date, str], np.ndarray] = {}

    def __len__(self) -> int:
        return int(sum(int(h.sum()) for h in self._have.values()))

    def __contains__(self, key) -> bool:
        return key in self._vecs

    def keys(self) -> list[tuple[dt.date, str]]:
        return sorted(self._vecs)

    def add(self, date, ticker: str, role, vector) -> None:
        v = np.asarray(vector, dtype=np.float32).reshape(-1)
        if v.size != self.dim:
            raise DimensionMismatch(f"vector has length {v.size}, store dimension is {self.dim}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteInput(f"non-finite embedding for ({date}, {ticker}, {role})")
        key = (_as_date(date), str(ticker))
        block = self._vecs.get(key)
        if block is None:
            block = self._vecs[key] = np.zeros((len(ROLES), self.dim), dtype=np.float32)
            self._have[key] = np.zeros(len(ROLES), dtype=bool)
        code = _role_code(role)
        block[code] = v
        self._have[key][code] = True

    def add_block(self, date, ticker: str, block) -> None:
        """Add all five roles at once from a (5, D) array in ROLES order."""
        b = np.asarray(block, dtype=np.float32)
        if b.shape != (len(ROLES), self.dim):
            raise DimensionMismatch(f"block shape {b.shape}, expected {(len(ROLES), self.dim)}")
        if not np.all(np.isfinite(b)):
            raise NonFiniteInput(f"non-finite embedding for ({date}, {ticker})")
        key = (_as_date(date), str(ticker))
        self._vecs[key] = b.copy()
        self._have[key] = np.ones(len(ROLES), dtype=bool)

    def get(self, date, ticker: str, role) -> np.ndarray:
        key = (_as_date(date), str(ticker))
        code = _role_code(role)
        if key not in self._vecs or not self._have[key][code]:
            raise MissingRole(ROLES[code], key[0].isoformat(), key[1])
        return self._vecs[key][code].astype(np.float64)

    def thesis_and_agents(self, date, ticker: str) -> tuple[np.ndarray, np.ndarray]:
        """(thesis vector, D x 4 agent matrix in news/fundamentals/dynamics/macro order)."""
        key = (_as_date(date), str(ticker))
        if key not in self._vecs:
            raise MissingRole("thesis", key[0].isoformat(), key[1])
        have = self._have[key]
        if not have.all():
            raise MissingRole(ROLES[int(np.flatnonzero(~have)[0])], key[0].isoformat(), key[1])
        block = self._vecs[key].astype(np.float64)
        return block[0], block[1:].T.copy()

    def records(self) -> Iterator[tuple[dt.date, str, int, np.ndarray]]:
        for key in self.keys():
            block, have = self._vecs[key], self._have[key]
            for code in range(len(ROLES)):
                if have[code]:
                    yield key[0], key[1], code, block[code]


def _as_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]").item()
    return dt.date.fromisoformat(str(value))


def write_store(store: EmbeddingStore, path, format: str | None = None) -> Path:
    path = Path(path)
    fmt = format or ("jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "binary")
    records = list(store.records())
    if fmt == "jsonl":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for date, ticker, code, vec in records:
                payload = base64.b64encode(np.asarray(vec, dtype="<f4").tobytes()).decode("ascii")
                fh.write(json.dumps({"date": date.isoformat(), "ticker": ticker,
                                     "role": ROLES[code], "vector": payload}) + "\n")
        return path
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, store.dim, len(records)))
        for date, ticker, code, vec in records:
            name = ticker.encode("utf-8")
            fh.write(struct.pack("<IH", (date - EPOCH).days, len(name)))
            fh.write(name)
            fh.write(struct.pack("<B", code))
            fh.write(np.asarray(vec, dtype="<f4").tobytes())
    return path


def read_store(path) -> EmbeddingStore:
    """Load a binary or JSONL store; the format is detected from the magic bytes."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return _read_binary(path)
    return _read_jsonl(path)


def _read_binary(path: Path) -> EmbeddingStore:
    raw = memoryview(path.read_bytes())
    if len(raw) < _HEADER.size:
        raise MalformedRecord(0, "truncated header")
    magic, version, dim, count = _HEADER.unpack_from(raw, 0)
    if version != VERSION:
        raise MalformedRecord(0, f"unsupported store version {version}")
    store = EmbeddingStore(dim)
    off = _HEADER.size
    nbytes = 4 * dim
    for i in range(count):
        try:
            days, tlen = struct.unpack_from("<IH", raw, off)
            off += 6
            ticker = bytes(raw[off:off + tlen]).decode("utf-8")
            off += tlen
            (code,) = struct.unpack_from("<B", raw, off)
            off += 1
            if off + nbytes > len(raw):
                raise struct.error("truncated vector")
            vec = np.frombuffer(raw[off:off + nbytes], dtype="<f4")
            off += nbytes
        except (struct.error, UnicodeDecodeError) as exc:
            raise MalformedRecord(i + 1, f"bad record: {exc}") from None
        if code >= len(ROLES):
            raise MalformedRecord(i + 1, f"unknown role code {code}")
        store.add(EPOCH + dt.timedelta(days=days), ticker, code, vec)
    if off != len(raw):
        raise MalformedRecord(count, f"{len(raw) - off} trailing bytes")
    return store


def _read_jsonl(path: Path) -> EmbeddingStore:
    store = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                vec = np.frombuffer(base64.b64decode(rec["vector"], validate=True), dtype="<f4")
                date, ticker, role = rec["date"], rec["ticker"], rec["role"]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedRecord(lineno, f"bad embedding record: {exc}") from None
            if store is None:
                store = EmbeddingStore(vec.size)
            try:
                store.add(date, ticker, role, vec)
            except ValueError as exc:
                if isinstance(exc, (DimensionMismatch, NonFiniteInput)):
                    raise
                raise MalformedRecord(lineno, str(exc)) from None
    if store is None:
        raise MalformedRecord(0, "no embedding records")
    return store
