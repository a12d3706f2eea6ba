"""Client side of the wallet protocol: register, unlock, rekey, offline recovery.

The unlock proof is a nonce-based proof of possession of ``k_auth``, a
one-way derivative of the Kyber seed.  It is not a zero-knowledge proof in
the formal sense: it reveals nothing beyond a keyed hash of a fresh nonce.
"""

import hmac
import secrets
from dataclasses import dataclass, field

from pqwallet import lattice, ltsss
from pqwallet.backup import BackupFile
from pqwallet.errors import AuthFailed, ParameterError, ProtocolError, TransportError, UserExists, protocol_error
from pqwallet.hashing import DEFAULT_COST, derive_eta_mu, sha256, tagged
from pqwallet.kyber import KemKeyPair, kem_keygen, seed_from_phi
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

UID_TAG = b"pqw-uid-v1"
AUTH_TAG = b"pqw-auth-v1"
PROOF_TAG = b"pqw-proof-v1"


@dataclass(frozen=True)
class Credentials:
    username: str
    password1: str = field(repr=False)
    password2: str = field(repr=False)


@dataclass
class WalletHandle:
    """What the client keeps after a successful derivation: keys and the backup share."""

    uid: bytes
    keypair: KemKeyPair = field(repr=False)
    backup: ltsss.Share = field(repr=False)
    server_url: str | None
    record_version: int
    session: str | None = field(default=None, repr=False)

    @property
    def fingerprint(self) -> str:
        return pk_fingerprint(self.keypair.pk)


def pk_fingerprint(pk: bytes) -> str:
    return sha256(pk).hex()[:16]


def uid_of(username: str) -> bytes:
    if not username:
        raise ParameterError("username must be non-empty")
    return sha256(tagged(UID_TAG, username.encode("utf-8")))


def _need32(value, name):
    if len(value) != 32:
        raise ParameterError(f"{name} must be 32 bytes, got {len(value)}")


def auth_key(seed: bytes) -> bytes:
    _need32(seed, "seed")
    return sha256(tagged(AUTH_TAG, seed))


def make_proof(k_auth: bytes, nonce: bytes) -> bytes:
    _need32(k_auth, "k_auth")
    _need32(nonce, "nonce")
    return sha256(tagged(PROOF_TAG, k_auth + nonce))


def check_proof(k_auth: bytes, nonce: bytes, proof: bytes) -> bool:
    _need32(proof, "proof")
    return hmac.compare_digest(make_proof(k_auth, nonce), proof)


class WalletClient:
    """Typed calls against the five endpoints, over any transport."""

    def __init__(self, transport):
        self.transport = transport

    @property
    def server_url(self):
        return getattr(self.transport, "base_url", None)

    def _call(self, method, path, reply_kind, msg=None, query=None):
        body = encode_message(msg) if msg is not None else None
        status, payload = self.transport.request(method, path, body, query)
        if status != 200:
            try:
                err = decode_message(ErrorResponse, payload)
            except ProtocolError:
                raise TransportError(f"HTTP {status} without a valid error body") from None
            raise protocol_error(err.error, err.detail)
        try:
            return decode_message(reply_kind, payload)
        except ProtocolError as exc:
            raise TransportError(f"malformed server reply: {exc}") from None

    def derive(self, uid: bytes, tau1) -> DeriveResponse:
        return self._call("POST", "/v1/derive", DeriveResponse, DeriveRequest(uid.hex(), tuple(tau1)))

    def enroll(self, uid: bytes, k_auth: bytes, enroll_token=None, session=None):
        msg = EnrollRequest(uid.hex(), k_auth.hex(), enroll_token=enroll_token, session=session)
        return self._call("POST", "/v1/enroll", OkResponse, msg)

    def challenge(self, uid: bytes) -> bytes:
        reply = self._call("GET", "/v1/challenge", ChallengeResponse, query={"uid": uid.hex()})
        return bytes.fromhex(reply.nonce)

    def verify(self, uid: bytes, nonce: bytes, proof: bytes) -> str:
        reply = self._call("POST", "/v1/verify", VerifyResponse, VerifyRequest(uid.hex(), nonce.hex(), proof.hex()))
        return reply.session

    def rekey(self, uid: bytes, session: str, tau1) -> RekeyResponse:
        return self._call("POST", "/v1/rekey", RekeyResponse, RekeyRequest(uid.hex(), session, tuple(tau1)))


@dataclass(frozen=True)
class _Derived:
    keypair: KemKeyPair
    k_auth: bytes
    backup: ltsss.Share


def _keys_from_phi(phi, shares_backup) -> _Derived:
    seed = seed_from_phi(phi)
    return _Derived(kem_keygen(seed), auth_key(seed), ltsss.Share(ltsss.X_BACKUP, shares_backup))


def _blinded_exchange(creds, cost, rng, send):
    """Run one blinded derivation; ``send(uid, tau1)`` returns (tau2, reply)."""
    p = lattice.default_params()
    digests = derive_eta_mu(creds.username, creds.password1, creds.password2, cost)
    rho = lattice.hash_to_lattice_point(digests.eta, p)
    state = lattice.sample_blind_state(rng, p)
    tau1 = lattice.blind_point(rho, state)
    tau2, reply = send(uid_of(creds.username), tau1.tau)
    rho_prime = lattice.unblind_point(lattice.BlindedPoint(tau2, lattice.SERVER_PADDED), state, p)
    s_rho, s_mu = ltsss.shares_from_inputs(rho_prime, digests.mu)
    phi, backup = ltsss.wallet_combine(s_rho, s_mu)
    return _keys_from_phi(phi, backup), reply


def register_flow(creds: Credentials, client: WalletClient, rng=None, cost: int = DEFAULT_COST):
    """Create the server record, derive the keypair and enroll the unlock verifier.

    Returns ``(handle, backup_share)``.
    """
    rng = rng or secrets.SystemRandom()
    uid = uid_of(creds.username)

    def send(uid, tau1):
        reply = client.derive(uid, tau1)
        if not reply.created:
            raise UserExists(f"a record for this username already exists (version {reply.version})")
        return reply.tau2, reply

    derived, reply = _blinded_exchange(creds, cost, rng, send)
    client.enroll(uid, derived.k_auth, enroll_token=reply.enroll_token)
    handle = WalletHandle(uid, derived.keypair, derived.backup, client.server_url, reply.version)
    return handle, derived.backup


def _prove(client, uid, k_auth, nonce):
    return client.verify(uid, nonce, make_proof(k_auth, nonce))


def unlock_flow(creds: Credentials, client: WalletClient, rng=None, cost: int = DEFAULT_COST) -> WalletHandle:
    rng = rng or secrets.SystemRandom()
    uid = uid_of(creds.username)
    # Asking for the challenge first surfaces UnknownUser before derive would
    # silently create a record for a mistyped username.
    nonce = client.challenge(uid)

    def send(uid, tau1):
        reply = client.derive(uid, tau1)
        return reply.tau2, reply

    derived, reply = _blinded_exchange(creds, cost, rng, send)
    session = _prove(client, uid, derived.k_auth, nonce)
    return WalletHandle(uid, derived.keypair, derived.backup, client.server_url, reply.version, session)


def rekey_flow(
    handle: WalletHandle, creds: Credentials, client: WalletClient, rng=None, cost: int = DEFAULT_COST
) -> WalletHandle:
    """Ask the server for a fresh pad, then derive and enroll the new keypair."""
    rng = rng or secrets.SystemRandom()
    if handle.session is None:
        raise AuthFailed("rekey needs a handle with an authenticated session")
    if uid_of(creds.username) != handle.uid:
        raise ParameterError("credentials do not belong to this wallet handle")

    def send(uid, tau1):
        reply = client.rekey(uid, handle.session, tau1)
        return reply.tau2, reply

    derived, reply = _blinded_exchange(creds, cost, rng, send)
    client.enroll(handle.uid, derived.k_auth, enroll_token=reply.enroll_token)
    return WalletHandle(handle.uid, derived.keypair, derived.backup, handle.server_url, reply.version, handle.session)


def offline_recover(creds: Credentials, backup: BackupFile, cost: int = DEFAULT_COST) -> WalletHandle:
    """Rebuild the keypair from the passwords and the backup share alone.

    No server is contacted.  Whether ``backup`` belongs to the record version
    the server currently holds cannot be checked offline.
    """
    digests = derive_eta_mu(creds.username, creds.password1, creds.password2, cost)
    phi = ltsss.wallet_recover(ltsss.mu_share(digests.mu), backup.as_share())
    derived = _keys_from_phi(phi, backup.share)
    return WalletHandle(uid_of(creds.username), derived.keypair, derived.backup, None, backup.record_version)
