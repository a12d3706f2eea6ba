from pqwallet.hashing.bcrypt import DEFAULT_COST, BcryptParams, bcrypt_hash
from pqwallet.hashing.credentials import (
    CredentialDigests,
    credential_hash,
    derive_eta_mu,
    derive_salt,
    tagged,
)
from pqwallet.hashing.sha256 import sha256, sha256_hex

__all__ = [
    "DEFAULT_COST",
    "BcryptParams",
    "CredentialDigests",
    "bcrypt_hash",
    "credential_hash",
    "derive_eta_mu",
    "derive_salt",
    "sha256",
    "sha256_hex",
    "tagged",
]
