import random

import bcrypt as reference
import mpmath
import pytest

from pqwallet.errors import ParameterError
from pqwallet.hashing import _blowfish_tables as tables
from pqwallet.hashing.bcrypt import (
    MAGIC,
    BcryptParams,
    b64_decode,
    b64_encode,
    bcrypt_hash,
    parse_encoded,
)

# (salt, message) pairs checked against the reference package at cost 4
VECTORS = [
    (bytes(16), b""),
    (bytes(range(16)), b"abc"),
    (b"\xff" * 16, b"password"),
    (b"saltsaltsaltsalt", b"U*U"),
    (bytes(range(100, 116)), b"\x00\x01\x02"),
    (b"0123456789abcdef", "pässwörd".encode()),
    (bytes(range(16, 32)), b"a" * 71),
    (bytes(range(32, 48)), b"b" * 72),
    (bytes(range(48, 64)), b"correct horse battery staple"),
    (b"\x80" * 16, b"\xff" * 40),
    (bytes(range(200, 216)), b"0123456789" * 5),
    (b"\x01" * 16, b"x"),
]


def reference_encoded(cost, salt, message):
    setting = f"$2b${cost:02d}$".encode() + b64_encode(salt).encode()
    return reference.hashpw(message, setting).decode()


@pytest.mark.parametrize("salt,message", VECTORS)
def test_matches_reference_cost4(salt, message):
    raw, encoded = bcrypt_hash(BcryptParams(4, salt, message))
    assert encoded == reference_encoded(4, salt, message)
    assert len(raw) == 24
    # the encoded form carries the first 23 digest bytes
    assert parse_encoded(encoded)[2] == raw[:23]


def test_matches_reference_on_random_salts():
    rnd = random.Random(5)
    for _ in range(5):
        salt = rnd.randbytes(16)
        msg = rnd.randbytes(rnd.randrange(73))
        assert bcrypt_hash(BcryptParams(4, salt, msg))[1] == reference_encoded(4, salt, msg)


def test_cost_5_and_parse_roundtrip():
    salt = bytes(range(16))
    _, encoded = bcrypt_hash(BcryptParams(5, salt, b"abc"))
    assert encoded == reference_encoded(5, salt, b"abc")
    cost, s, _ = parse_encoded(encoded)
    assert (cost, s) == (5, salt)


@pytest.mark.slow
def test_default_cost_prefix():
    _, encoded = bcrypt_hash(BcryptParams(12, bytes(16), b"abc"))
    assert encoded.startswith("$2b$12$")


def test_deterministic():
    p = BcryptParams(4, b"s" * 16, b"msg")
    assert bcrypt_hash(p) == bcrypt_hash(p)


def test_raw_last_byte_is_magic_cipher_output():
    # The 24th byte never appears in the encoded string; check it is stable.
    a = bcrypt_hash(BcryptParams(4, b"s" * 16, b"msg"))[0]
    b = bcrypt_hash(BcryptParams(4, b"s" * 16, b"msg"))[0]
    assert a[23] == b[23]
    assert MAGIC == b"OrpheanBeholderScryDoubt"


@pytest.mark.parametrize(
    "cost,salt,message",
    [(3, bytes(16), b""), (32, bytes(16), b""), (4, bytes(15), b""), (4, bytes(16), b"x" * 73)],
)
def test_params_rejected(cost, salt, message):
    with pytest.raises(ParameterError):
        BcryptParams(cost, salt, message)


def test_b64_roundtrip():
    rnd = random.Random(2)
    for n in (16, 23):
        data = rnd.randbytes(n)
        assert b64_decode(b64_encode(data)) == data


def test_blowfish_tables_are_pi_digits():
    n_words = 18 + 4 * 256
    mpmath.mp.dps = n_words * 8 * 5 // 4 + 50
    frac = mpmath.pi - 3
    digits = int(mpmath.floor(frac * mpmath.mpf(16) ** (n_words * 8)))
    words = [(digits >> (32 * (n_words - 1 - i))) & 0xFFFFFFFF for i in range(n_words)]
    assert list(tables.P_INIT) == words[:18]
    flat = [w for box in (tables.S0_INIT, tables.S1_INIT, tables.S2_INIT, tables.S3_INIT) for w in box]
    assert flat == words[18:]
