"""JSON wire messages exchanged between wallet client and server.

Every message kind is a frozen dataclass with a field table; decoding is
strict (unknown or missing fields, wrong types and out-of-range values all
raise :class:`BadRequest` naming the offending field path) and encoding is
canonical, so ``decode_message(type(m), encode_message(m)) == m``.
"""

import json
import re
from dataclasses import dataclass, fields

from pqwallet.errors import BadRequest

PROTOCOL_VERSION = 1
VECTOR_LEN = 16
VECTOR_BOUND = 1 << 14
ERROR_CODES = ("UserExists", "UnknownUser", "AuthFailed", "RateLimited", "VersionConflict", "BadRequest")

_HEX32 = re.compile(r"[0-9a-f]{64}")


def _v(value, path):
    if type(value) is not int or value != PROTOCOL_VERSION:
        raise BadRequest(f"unsupported protocol version {value!r}", path)
    return value


def _hex32(value, path):
    if not isinstance(value, str) or not _HEX32.fullmatch(value):
        raise BadRequest("expected 64 lowercase hex characters", path)
    return value


def _vector(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != VECTOR_LEN:
        raise BadRequest(f"expected an array of {VECTOR_LEN} integers", path)
    for i, c in enumerate(value):
        if type(c) is not int or not 0 <= c < VECTOR_BOUND:
            raise BadRequest(f"coefficient must be an integer in [0, {VECTOR_BOUND - 1}]", f"{path}[{i}]")
    return tuple(value)


def _version(value, path):
    if type(value) is not int or value < 1:
        raise BadRequest("record version must be a positive integer", path)
    return value


def _bool(value, path):
    if type(value) is not bool:
        raise BadRequest("expected a boolean", path)
    return value


def _true(value, path):
    if value is not True:
        raise BadRequest("expected true", path)
    return value


def _error_code(value, path):
    if value not in ERROR_CODES:
        raise BadRequest(f"unknown error code {value!r}", path)
    return value


def _text(value, path):
    if not isinstance(value, str):
        raise BadRequest("expected a string", path)
    return value


@dataclass(frozen=True)
class DeriveRequest:
    uid: str
    tau1: tuple
    v: int = PROTOCOL_VERSION
    _schema = {"v": _v, "uid": _hex32, "tau1": _vector}


@dataclass(frozen=True)
class DeriveResponse:
    tau2: tuple
    version: int
    created: bool
    enroll_token: str | None = None
    v: int = PROTOCOL_VERSION
    _schema = {"v": _v, "tau2": _vector, "version": _version, "created": _bool, "enroll_token": _hex32}
    _optional = ("enroll_token",)


@dataclass(frozen=True)
class EnrollRequest:
    uid: str
    k_auth: str
    enroll_token: str | None = None
    session: str | None = None
    v: int = PROTOCOL_VERSION
    _schema = {"v": _v, "uid": _hex32, "k_auth": _hex32, "enroll_token": _hex32, "session": _hex32}
    _optional = ("enroll_token", "session")

    def _check(self):
        if (self.enroll_token is None) == (self.session is None):
            raise BadRequest("exactly one of enroll_token or session is required", "enroll_token")


@dataclass(frozen=True)
class OkResponse:
    ok: bool = True
    _schema = {"ok": _true}


@dataclass(frozen=True)
class ChallengeResponse:
    nonce: str
    _schema = {"nonce": _hex32}


@dataclass(frozen=True)
class VerifyRequest:
    uid: str
    nonce: str
    proof: str
    v: int = PROTOCOL_VERSION
    _schema = {"v": _v, "uid": _hex32, "nonce": _hex32, "proof": _hex32}


@dataclass(frozen=True)
class VerifyResponse:
    session: str
    ok: bool = True
    _schema = {"ok": _true, "session": _hex32}


@dataclass(frozen=True)
class RekeyRequest:
    uid: str
    session: str
    tau1: tuple
    v: int = PROTOCOL_VERSION
    _schema = {"v": _v, "uid": _hex32, "session": _hex32, "tau1": _vector}


@dataclass(frozen=True)
class RekeyResponse:
    tau2: tuple
    version: int
    enroll_token: str
    _schema = {"tau2": _vector, "version": _version, "enroll_token": _hex32}


@dataclass(frozen=True)
class ErrorResponse:
    error: str
    detail: str = ""
    _schema = {"error": _error_code, "detail": _text}
    _optional = ("detail",)


MESSAGE_KINDS = (
    DeriveRequest,
    DeriveResponse,
    EnrollRequest,
    OkResponse,
    ChallengeResponse,
    VerifyRequest,
    VerifyResponse,
    RekeyRequest,
    RekeyResponse,
    ErrorResponse,
)


def to_dict(msg) -> dict:
    optional = getattr(msg, "_optional", ())
    out = {}
    for name in msg._schema:
        value = getattr(msg, name)
        if value is None and name in optional:
            continue
        out[name] = list(value) if isinstance(value, tuple) else value
    return out


def from_dict(kind, data, path=""):
    if not isinstance(data, dict):
        raise BadRequest("expected a JSON object", path or "$")
    schema = kind._schema
    optional = getattr(kind, "_optional", ())
    for key in data:
        if key not in schema:
            raise BadRequest("unknown field", f"{path}{key}")
    values = {}
    for name, check in schema.items():
        if name not in data:
            if name in optional:
                continue
            raise BadRequest("missing field", f"{path}{name}")
        values[name] = check(data[name], f"{path}{name}")
    init_names = {f.name for f in fields(kind)}
    msg = kind(**{k: v for k, v in values.items() if k in init_names})
    if hasattr(msg, "_check"):
        msg._check()
    return msg


def encode_message(msg) -> bytes:
    if hasattr(msg, "_check"):
        msg._check()
    # Validate on the way out as well, so a bad message never hits the wire.
    from_dict(type(msg), to_dict(msg))
    return json.dumps(to_dict(msg), separators=(",", ":")).encode("utf-8")


def decode_message(kind, body: bytes):
    try:
        data = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BadRequest(f"malformed JSON body ({exc})", "$") from None
    return from_dict(kind, data)
