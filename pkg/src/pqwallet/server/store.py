"""Persistent per-user records: one checksummed JSON line per record.

Every mutation rewrites the whole file through a temporary file and an
atomic rename, so a crash leaves either the old or the new store on disk.
"""

import json
import os
import re
import tempfile
import threading
import zlib
from dataclasses import dataclass, replace
from pathlib import Path

from pqwallet.errors import StoreCorrupt
from pqwallet.lattice import ServerPadSource

_HEX64 = re.compile(r"[0-9a-f]{64}")
_LINE = re.compile(r"(\{.*\}) crc32:([0-9a-f]{8})")
_FIELDS = ("uid", "version", "delta2", "omega2", "k_auth", "created_at")
DELTA_BOUND = 1 << 31


@dataclass(frozen=True)
class ServerRecord:
    uid: bytes
    version: int
    delta2: tuple
    omega2: bytes
    k_auth: bytes | None
    created_at: int

    @property
    def pad_source(self) -> ServerPadSource:
        return ServerPadSource(self.delta2, self.omega2)

    def with_k_auth(self, k_auth):
        return replace(self, k_auth=k_auth)


def encode_record(rec: ServerRecord) -> str:
    body = json.dumps(
        {
            "uid": rec.uid.hex(),
            "version": rec.version,
            "delta2": list(rec.delta2),
            "omega2": rec.omega2.hex(),
            "k_auth": rec.k_auth.hex() if rec.k_auth is not None else None,
            "created_at": rec.created_at,
        },
        separators=(",", ":"),
    )
    return f"{body} crc32:{zlib.crc32(body.encode()):08x}"


def decode_record(line: str) -> ServerRecord:
    match = _LINE.fullmatch(line)
    if not match:
        raise StoreCorrupt("record line lacks a crc32 trailer")
    body, crc = match.groups()
    if f"{zlib.crc32(body.encode()):08x}" != crc:
        raise StoreCorrupt("record checksum mismatch")
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise StoreCorrupt(f"record is not JSON: {exc}") from None
    if not isinstance(data, dict) or tuple(data) != _FIELDS:
        raise StoreCorrupt("record fields do not match the schema")
    ok = (
        isinstance(data["uid"], str)
        and _HEX64.fullmatch(data["uid"])
        and type(data["version"]) is int
        and data["version"] >= 1
        and isinstance(data["delta2"], list)
        and len(data["delta2"]) == 16
        and all(type(x) is int and abs(x) < DELTA_BOUND for x in data["delta2"])
        and isinstance(data["omega2"], str)
        and _HEX64.fullmatch(data["omega2"])
        and (data["k_auth"] is None or isinstance(data["k_auth"], str) and _HEX64.fullmatch(data["k_auth"]))
        and type(data["created_at"]) is int
    )
    if not ok:
        raise StoreCorrupt("record values out of range")
    return ServerRecord(
        bytes.fromhex(data["uid"]),
        data["version"],
        tuple(data["delta2"]),
        bytes.fromhex(data["omega2"]),
        bytes.fromhex(data["k_auth"]) if data["k_auth"] is not None else None,
        data["created_at"],
    )


class RecordStore:
    """uid -> ServerRecord, optionally backed by a file.

    ``path=None`` keeps everything in memory (tests, throwaway servers).
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.RLock()
        self._records = {}
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        raw = self.path.read_bytes()
        if raw and not raw.endswith(b"\n"):
            raise StoreCorrupt(f"{self.path}: truncated final line")
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise StoreCorrupt(f"{self.path}: not UTF-8") from None
        for lineno, line in enumerate(text.splitlines(), 1):
            try:
                rec = decode_record(line)
            except StoreCorrupt as exc:
                raise StoreCorrupt(f"{self.path}:{lineno}: {exc}") from None
            if rec.uid in self._records:
                raise StoreCorrupt(f"{self.path}:{lineno}: duplicate uid")
            self._records[rec.uid] = rec

    def _flush(self):
        if self.path is None:
            return
        data = "".join(encode_record(r) + "\n" for r in self._records.values()).encode("utf-8")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name + ".", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def get(self, uid: bytes) -> ServerRecord | None:
        with self._lock:
            return self._records.get(uid)

    def put(self, rec: ServerRecord) -> None:
        with self._lock:
            old = self._records.get(rec.uid)
            self._records[rec.uid] = rec
            try:
                self._flush()
            except BaseException:
                if old is None:
                    del self._records[rec.uid]
                else:
                    self._records[rec.uid] = old
                raise

    def create_if_absent(self, rec: ServerRecord) -> tuple[ServerRecord, bool]:
        """Store ``rec`` unless the uid exists; returns (stored record, created)."""
        with self._lock:
            existing = self._records.get(rec.uid)
            if existing is not None:
                return existing, False
            self.put(rec)
            return rec, True

    def compare_and_set(self, expected: ServerRecord, new: ServerRecord) -> bool:
        with self._lock:
            if self._records.get(expected.uid) != expected:
                return False
            self.put(new)
            return True

    def __len__(self):
        with self._lock:
            return len(self._records)

    def records(self):
        with self._lock:
            return list(self._records.values())
