"""Backup-share file: the x = 3 share plus the record version it belongs to."""

import json
from dataclasses import dataclass

from pqwallet.errors import ParameterError
from pqwallet.ltsss import WALLET_Q, X_BACKUP, Share

FILE_VERSION = 1
KEM_TAG = "kyber512-v1"
_FIELDS = ("version", "x", "share", "record_version", "kem")


@dataclass(frozen=True)
class BackupFile:
    share: tuple
    record_version: int
    x: int = X_BACKUP
    version: int = FILE_VERSION
    kem: str = KEM_TAG

    def as_share(self) -> Share:
        return Share(self.x, self.share)


def _fail(path, msg):
    raise ParameterError(f"backup file {path}: {msg}")


def _validate(data):
    if not isinstance(data, dict):
        _fail("$", "expected a JSON object")
    for key in data:
        if key not in _FIELDS:
            _fail(key, "unknown field")
    for key in _FIELDS:
        if key not in data:
            _fail(key, "missing field")
    if data["version"] != FILE_VERSION or type(data["version"]) is not int:
        _fail("version", f"expected {FILE_VERSION}")
    if data["x"] != X_BACKUP or type(data["x"]) is not int:
        _fail("x", f"expected {X_BACKUP}")
    if data["kem"] != KEM_TAG:
        _fail("kem", f"expected {KEM_TAG!r}")
    rv = data["record_version"]
    if type(rv) is not int or rv < 1:
        _fail("record_version", "expected a positive integer")
    share = data["share"]
    if not isinstance(share, list) or len(share) != 16:
        _fail("share", "expected 16 integers")
    for i, c in enumerate(share):
        if type(c) is not int or not 0 <= c < WALLET_Q:
            _fail(f"share[{i}]", f"expected an integer in [0, {WALLET_Q - 1}]")
    return BackupFile(tuple(share), rv)


def backup_encode(share: Share, record_version: int) -> bytes:
    if share.x != X_BACKUP:
        raise ParameterError("only the x = 3 share is exported as a backup")
    data = {
        "version": FILE_VERSION,
        "x": share.x,
        "share": list(share.values),
        "record_version": record_version,
        "kem": KEM_TAG,
    }
    _validate(data)
    return (json.dumps(data, separators=(",", ":")) + "\n").encode("utf-8")


def backup_decode(raw: bytes) -> BackupFile:
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParameterError(f"backup file $: not valid JSON ({exc})") from None
    return _validate(data)
