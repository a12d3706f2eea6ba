"""Credential digests: bcrypt composed with SHA-256, with a username salt."""

from dataclasses import dataclass

from pqwallet.errors import ParameterError
from pqwallet.hashing.bcrypt import DEFAULT_COST, MAX_KEY_LEN, SALT_LEN, BcryptParams, bcrypt_hash
from pqwallet.hashing.sha256 import sha256

SEP = b"\x1f"
SALT_TAG = b"pqw-salt-v1"


@dataclass(frozen=True)
class CredentialDigests:
    eta: bytes
    mu: bytes

    def __post_init__(self):
        if len(self.eta) != 32 or len(self.mu) != 32:
            raise ParameterError("credential digests must be 32 bytes each")

    def __repr__(self):
        return "CredentialDigests(<redacted>)"


def tagged(tag: bytes, *parts: bytes) -> bytes:
    """Join a domain tag and fields with the 0x1F unit separator."""
    return SEP.join((tag,) + parts)


def derive_salt(username: str) -> bytes:
    if not username:
        raise ParameterError("username must be non-empty")
    return sha256(tagged(SALT_TAG, username.encode("utf-8")))[:SALT_LEN]


def prehash(message: bytes) -> bytes:
    """Messages bcrypt would truncate are replaced by their SHA-256 hex."""
    if len(message) > MAX_KEY_LEN:
        return sha256(message).hex().encode("ascii")
    return message


def credential_hash(message: bytes, salt: bytes, cost: int = DEFAULT_COST) -> bytes:
    _, encoded = bcrypt_hash(BcryptParams(cost, salt, prehash(message)))
    return sha256(encoded.encode("ascii"))


def derive_eta_mu(username: str, pw1: str, pw2: str, cost: int = DEFAULT_COST) -> CredentialDigests:
    """Compute (eta, mu) from the username and the two passwords.

    eta binds username and first password and later becomes the lattice
    point; mu binds both passwords and becomes the second share.
    """
    for name, value in (("username", username), ("password1", pw1), ("password2", pw2)):
        if not value:
            raise ParameterError(f"{name} must be non-empty")
    salt = derive_salt(username)
    user, p1, p2 = (s.encode("utf-8") for s in (username, pw1, pw2))
    eta = credential_hash(user + SEP + p1, salt, cost)
    mu = credential_hash(p1 + SEP + p2, salt, cost)
    return CredentialDigests(eta, mu)
