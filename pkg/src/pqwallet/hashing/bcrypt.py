"""bcrypt ($2b$ variant) on top of a from-scratch Blowfish key schedule.

The expensive key schedule runs under numba when it is importable; the same
functions run unmodified (and roughly 300x slower) as plain Python otherwise.
"""

from dataclasses import dataclass

import numpy as np

from pqwallet.errors import ParameterError
from pqwallet.hashing._blowfish_tables import P_INIT, S_INIT

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

MIN_COST = 4
MAX_COST = 31
DEFAULT_COST = 12
SALT_LEN = 16
MAX_KEY_LEN = 72
MAGIC = b"OrpheanBeholderScryDoubt"
B64_ALPHABET = "./ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"

_P0 = np.array(P_INIT, dtype=np.int64)
_S0 = np.array(S_INIT, dtype=np.int64)


@dataclass(frozen=True)
class BcryptParams:
    cost: int
    salt: bytes
    message: bytes

    def __post_init__(self):
        if not isinstance(self.cost, int) or not MIN_COST <= self.cost <= MAX_COST:
            raise ParameterError(f"bcrypt cost must be in [{MIN_COST}, {MAX_COST}], got {self.cost!r}")
        if len(self.salt) != SALT_LEN:
            raise ParameterError(f"bcrypt salt must be {SALT_LEN} bytes, got {len(self.salt)}")
        if len(self.message) > MAX_KEY_LEN:
            raise ParameterError("bcrypt message longer than 72 bytes; pre-hash it first")


@njit(cache=True)
def _encipher(P, S, l, r):
    mask = 0xFFFFFFFF
    l ^= P[0]
    for i in range(1, 17, 2):
        f = ((S[0, l >> 24] + S[1, (l >> 16) & 0xFF]) & mask) ^ S[2, (l >> 8) & 0xFF]
        r ^= ((f + S[3, l & 0xFF]) & mask) ^ P[i]
        f = ((S[0, r >> 24] + S[1, (r >> 16) & 0xFF]) & mask) ^ S[2, (r >> 8) & 0xFF]
        l ^= ((f + S[3, r & 0xFF]) & mask) ^ P[i + 1]
    return r ^ P[17], l


@njit(cache=True)
def _expand_key(P, S, key_words, salt_words, use_salt):
    for i in range(18):
        P[i] ^= key_words[i]
    l = 0
    r = 0
    j = 0
    for i in range(0, 18, 2):
        if use_salt:
            l ^= salt_words[j]
            r ^= salt_words[j + 1]
            j ^= 2
        l, r = _encipher(P, S, l, r)
        P[i] = l
        P[i + 1] = r
    for b in range(4):
        for i in range(0, 256, 2):
            if use_salt:
                l ^= salt_words[j]
                r ^= salt_words[j + 1]
                j ^= 2
            l, r = _encipher(P, S, l, r)
            S[b, i] = l
            S[b, i + 1] = r


def _key_stream(data, n_words):
    """Cycle ``data`` into ``n_words`` big-endian 32-bit words."""
    out = np.empty(n_words, dtype=np.int64)
    pos = 0
    for i in range(n_words):
        w = 0
        for _ in range(4):
            w = (w << 8) | data[pos]
            pos = (pos + 1) % len(data)
        out[i] = w
    return out


def _eks_core(cost, salt, message):
    key = (message + b"\x00")[:MAX_KEY_LEN]
    key_words = _key_stream(key, 18)
    salt_words = _key_stream(salt, 4)
    # The zero-salt passes alternate key and salt; the salt pass needs an
    # 18-word stream so it can be xored into P like a key.
    salt_as_key = _key_stream(salt, 18)
    P, S = _P0.copy(), _S0.copy()
    ctext = np.array([int.from_bytes(MAGIC[i : i + 4], "big") for i in range(0, 24, 4)], dtype=np.int64)
    _eks_blowfish_keyed(P, S, 1 << cost, key_words, salt_words, salt_as_key, ctext)
    return b"".join(int(w).to_bytes(4, "big") for w in ctext)


@njit(cache=True)
def _eks_blowfish_keyed(P, S, rounds, key_words, salt_words, salt_as_key, ctext):
    _expand_key(P, S, key_words, salt_words, True)
    for _ in range(rounds):
        _expand_key(P, S, key_words, salt_words, False)
        _expand_key(P, S, salt_as_key, salt_words, False)
    for _ in range(64):
        for k in range(0, 6, 2):
            ctext[k], ctext[k + 1] = _encipher(P, S, ctext[k], ctext[k + 1])


def b64_encode(data: bytes) -> str:
    """bcrypt's radix-64: its own alphabet, no padding."""
    out = []
    for i in range(0, len(data), 3):
        chunk = data[i : i + 3]
        n = int.from_bytes(chunk.ljust(3, b"\x00"), "big")
        chars = [B64_ALPHABET[(n >> s) & 63] for s in (18, 12, 6, 0)]
        out.extend(chars[: len(chunk) + 1])
    return "".join(out)


def b64_decode(text: str) -> bytes:
    out = bytearray()
    for i in range(0, len(text), 4):
        chunk = text[i : i + 4]
        try:
            n = 0
            for ch in chunk.ljust(4, "."):
                n = (n << 6) | B64_ALPHABET.index(ch)
        except ValueError:
            raise ParameterError(f"invalid bcrypt base64 character in {chunk!r}") from None
        out.extend(n.to_bytes(3, "big")[: len(chunk) - 1])
    return bytes(out)


def bcrypt_hash(params: BcryptParams) -> tuple[bytes, str]:
    """Return the 24-byte raw digest and the ``$2b$`` modular-crypt string.

    As in every interoperable bcrypt, only the first 23 digest bytes appear
    in the encoded string.
    """
    raw = _eks_core(params.cost, params.salt, params.message)
    encoded = f"$2b${params.cost:02d}${b64_encode(params.salt)}{b64_encode(raw[:23])}"
    return raw, encoded


def parse_encoded(encoded: str) -> tuple[int, bytes, bytes]:
    """Split ``$2b$NN$<salt><digest>`` into (cost, salt, 23-byte digest)."""
    parts = encoded.split("$")
    if len(parts) != 4 or parts[0] or parts[1] != "2b" or len(parts[3]) != 53:
        raise ParameterError(f"not a $2b$ bcrypt string: {encoded!r}")
    return int(parts[2]), b64_decode(parts[3][:22]), b64_decode(parts[3][22:])
