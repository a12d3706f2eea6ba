"""Post-quantum wallet keys derived from a username and two passwords.

The client blinds a hashed credential, the server adds a secret per-user pad,
and the unblinded result is combined with a second credential hash through a
(2, 3) threshold sharing.  The combined value seeds a Kyber-512 keypair.
"""

from pqwallet.errors import (
    AuthFailed,
    ParameterError,
    ProtocolError,
    ReconstructFailed,
    StoreCorrupt,
    TransportError,
    UnknownUser,
    UserExists,
    VersionConflict,
    WalletError,
)
from pqwallet.protocol import (
    Credentials,
    WalletClient,
    WalletHandle,
    offline_recover,
    register_flow,
    rekey_flow,
    unlock_flow,
)

__version__ = "0.1.0"

__all__ = [
    "AuthFailed",
    "Credentials",
    "ParameterError",
    "ProtocolError",
    "ReconstructFailed",
    "StoreCorrupt",
    "TransportError",
    "UnknownUser",
    "UserExists",
    "VersionConflict",
    "WalletClient",
    "WalletError",
    "WalletHandle",
    "offline_recover",
    "register_flow",
    "rekey_flow",
    "unlock_flow",
]
