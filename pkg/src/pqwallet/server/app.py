"""Request handling for the wallet server, independent of any HTTP library."""

import logging
import secrets
import threading
import time
import urllib.parse
from collections import defaultdict
from dataclasses import dataclass

from pqwallet import lattice
from pqwallet.errors import AuthFailed, BadRequest, ProtocolError, RateLimited, UnknownUser, VersionConflict
from pqwallet.messages import (
    ChallengeResponse,
    DeriveRequest,
    DeriveResponse,
    EnrollRequest,
    ErrorResponse,
    OkResponse,
    RekeyRequest,
    RekeyResponse,
    VerifyRequest,
    VerifyResponse,
    decode_message,
    encode_message,
)
from pqwallet.protocol import check_proof
from pqwallet.server.store import RecordStore, ServerRecord

log = logging.getLogger(__name__)

NONCE_TTL = 60.0
SESSION_TTL = 600.0
DEFAULT_RATE_LIMIT = 10


class TokenBucket:
    """Per-key token bucket: ``burst`` tokens, refilled at ``per_minute``/60 per second."""

    def __init__(self, per_minute: int, burst: int | None = None, clock=time.monotonic):
        self.rate = per_minute / 60.0
        self.burst = burst if burst is not None else per_minute
        self.clock = clock
        self._state = {}
        self._lock = threading.Lock()

    def allow(self, key) -> bool:
        with self._lock:
            now = self.clock()
            tokens, last = self._state.get(key, (self.burst, now))
            tokens = min(self.burst, tokens + (now - last) * self.rate)
            if tokens < 1:
                self._state[key] = (tokens, now)
                return False
            self._state[key] = (tokens - 1, now)
            return True


@dataclass
class _Session:
    uid: bytes
    version: int
    expires: float


class ChallengeTable:
    """Outstanding nonces (one per uid), live sessions and enroll tokens."""

    def __init__(self, clock):
        self.clock = clock
        self._lock = threading.Lock()
        self._nonces = {}
        self._sessions = {}
        self._enroll_tokens = {}

    def issue_nonce(self, uid, nonce):
        with self._lock:
            self._nonces[uid] = (nonce, self.clock() + NONCE_TTL)

    def consume_nonce(self, uid, nonce) -> bool:
        with self._lock:
            entry = self._nonces.get(uid)
            if entry is None or entry[0] != nonce:
                return False
            del self._nonces[uid]
            return self.clock() < entry[1]

    def open_session(self, token, uid, version):
        with self._lock:
            self._sessions[token] = _Session(uid, version, self.clock() + SESSION_TTL)

    def session(self, token, uid) -> _Session:
        with self._lock:
            s = self._sessions.get(token)
            if s is not None and self.clock() >= s.expires:
                del self._sessions[token]
                s = None
        if s is None or s.uid != uid:
            raise AuthFailed("missing or expired session")
        return s

    def issue_enroll_token(self, token, uid, version):
        with self._lock:
            self._enroll_tokens[token] = (uid, version)

    def take_enroll_token(self, token, uid, version) -> bool:
        with self._lock:
            if self._enroll_tokens.get(token) != (uid, version):
                return False
            del self._enroll_tokens[token]
            return True


class WalletServer:
    """Holds the record store and in-memory auth state; dispatches requests.

    Mutations for one uid are serialised by a per-uid lock, and record
    creation is a compare-and-set inside the store, so concurrent first
    derives for one user create exactly one record.
    """

    def __init__(self, store=None, rng=None, clock=time.time, rate_limit=DEFAULT_RATE_LIMIT, params=None):
        self.store = store if store is not None else RecordStore()
        self.rng = rng or secrets.SystemRandom()
        self.clock = clock
        self.params = params or lattice.default_params()
        self.limiter = TokenBucket(rate_limit, clock=clock) if rate_limit else None
        self.table = ChallengeTable(clock)
        self._uid_locks = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()
        self._rng_lock = threading.Lock()

    def _uid_lock(self, uid):
        with self._locks_guard:
            return self._uid_locks[uid]

    def _token(self):
        with self._rng_lock:
            return self.rng.getrandbits(256).to_bytes(32, "big")

    def _new_pad(self):
        with self._rng_lock:
            return lattice.sample_pad_source(self.rng, self.params)

    def _pad(self, tau1, record):
        blinded = lattice.BlindedPoint(tau1, lattice.CLIENT_BLINDED)
        return lattice.pad_point(blinded, record.pad_source, self.params).tau

    def _record(self, uid):
        rec = self.store.get(uid)
        if rec is None:
            raise UnknownUser("no record for this uid")
        return rec

    # -- endpoints ------------------------------------------------------------

    def handle_derive(self, req: DeriveRequest) -> DeriveResponse:
        uid = bytes.fromhex(req.uid)
        if self.limiter is not None and not self.limiter.allow(uid):
            raise RateLimited("too many derive requests for this uid")
        with self._uid_lock(uid):
            rec = self.store.get(uid)
            created = False
            if rec is None:
                src = self._new_pad()
                rec, created = self.store.create_if_absent(
                    ServerRecord(uid, 1, src.delta2, src.omega2, None, int(self.clock()))
                )
            token = None
            if created:
                token = self._token().hex()
                self.table.issue_enroll_token(token, uid, rec.version)
                log.info("created record uid=%s", req.uid[:12])
            return DeriveResponse(self._pad(req.tau1, rec), rec.version, created, token)

    def handle_enroll(self, req: EnrollRequest) -> OkResponse:
        uid = bytes.fromhex(req.uid)
        with self._uid_lock(uid):
            rec = self._record(uid)
            if req.enroll_token is not None:
                if not self.table.take_enroll_token(req.enroll_token, uid, rec.version):
                    raise AuthFailed("enroll token invalid or already used")
            else:
                if self.table.session(req.session, uid).version != rec.version:
                    raise AuthFailed("session belongs to an older record version")
            if rec.k_auth is not None:
                raise AuthFailed("verifier already enrolled for this record version")
            self.store.put(rec.with_k_auth(bytes.fromhex(req.k_auth)))
        return OkResponse()

    def handle_challenge(self, uid_hex: str) -> ChallengeResponse:
        uid = bytes.fromhex(uid_hex)
        self._record(uid)
        nonce = self._token()
        self.table.issue_nonce(uid, nonce)
        return ChallengeResponse(nonce.hex())

    def handle_verify(self, req: VerifyRequest) -> VerifyResponse:
        uid = bytes.fromhex(req.uid)
        rec = self._record(uid)
        # The nonce is spent whatever the outcome.
        fresh = self.table.consume_nonce(uid, bytes.fromhex(req.nonce))
        if not fresh:
            raise AuthFailed("unknown, expired or already used nonce")
        if rec.k_auth is None or not check_proof(rec.k_auth, bytes.fromhex(req.nonce), bytes.fromhex(req.proof)):
            raise AuthFailed("proof rejected")
        session = self._token().hex()
        self.table.open_session(session, uid, rec.version)
        return VerifyResponse(session)

    def handle_rekey(self, req: RekeyRequest) -> RekeyResponse:
        uid = bytes.fromhex(req.uid)
        session = self.table.session(req.session, uid)
        with self._uid_lock(uid):
            rec = self._record(uid)
            if rec.version != session.version:
                raise VersionConflict(f"record is at version {rec.version}, session was opened on {session.version}")
            src = self._new_pad()
            new = ServerRecord(uid, rec.version + 1, src.delta2, src.omega2, None, rec.created_at)
            if not self.store.compare_and_set(rec, new):
                raise VersionConflict("record changed during rekey")
            token = self._token().hex()
            self.table.issue_enroll_token(token, uid, new.version)
            log.info("rekeyed uid=%s to version %d", req.uid[:12], new.version)
            return RekeyResponse(self._pad(req.tau1, new), new.version, token)

    # -- dispatch -------------------------------------------------------------

    def _dispatch(self, method, path, query, body):
        if method == "GET" and path == "/v1/challenge":
            uid = query.get("uid")
            if isinstance(uid, list):
                uid = uid[0] if len(uid) == 1 else None
            if set(query) - {"uid"}:
                raise BadRequest("unknown query parameter", "query")
            if not isinstance(uid, str) or len(uid) != 64 or any(c not in "0123456789abcdef" for c in uid):
                raise BadRequest("expected 64 lowercase hex characters", "uid")
            return self.handle_challenge(uid)
        routes = {
            "/v1/derive": (DeriveRequest, self.handle_derive),
            "/v1/enroll": (EnrollRequest, self.handle_enroll),
            "/v1/verify": (VerifyRequest, self.handle_verify),
            "/v1/rekey": (RekeyRequest, self.handle_rekey),
        }
        if method != "POST" or path not in routes:
            raise BadRequest(f"no endpoint {method} {path}", "path")
        kind, handler = routes[path]
        return handler(decode_message(kind, body))

    def handle(self, method: str, path: str, query: dict, body: bytes) -> tuple[int, bytes]:
        """Serve one request; always returns (status, JSON body)."""
        try:
            return 200, encode_message(self._dispatch(method, path, query, body))
        except ProtocolError as exc:
            return exc.status, encode_message(ErrorResponse(exc.code, exc.detail))

    def handle_url(self, method: str, url: str, body: bytes) -> tuple[int, bytes]:
        parts = urllib.parse.urlsplit(url)
        return self.handle(method, parts.path, urllib.parse.parse_qs(parts.query), body)
