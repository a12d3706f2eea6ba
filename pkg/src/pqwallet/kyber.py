"""Kyber-512 (CRYSTALS-Kyber round 3, v3.02) key encapsulation.

Polynomials are lists of 256 ints in [0, q).  Multiplication goes through
the number-theoretic transform exactly as laid out in the round-3 reference
code, so the byte encodings reproduce the official known-answer tests.
"""

import hashlib
import hmac
from dataclasses import dataclass, field

from pqwallet.errors import ParameterError
from pqwallet.hashing.credentials import tagged
from pqwallet.hashing.sha256 import sha256

N = 256
Q = 3329
K = 2
ETA1 = 3
ETA2 = 2
DU = 10
DV = 4

POLY_BYTES = 384
PK_BYTES = K * POLY_BYTES + 32  # 800
CPA_SK_BYTES = K * POLY_BYTES  # 768
SK_BYTES = CPA_SK_BYTES + PK_BYTES + 64  # 1632
CT_BYTES = K * DU * N // 8 + DV * N // 8  # 768
SS_BYTES = 32

SEED_TAG = b"pqw-seed-v1"
KEYGEN_TAG = b"pqw-kem-v1"
N_INV = pow(128, -1, Q)


def _bitrev7(i):
    return int(f"{i:07b}"[::-1], 2)


ZETAS = [pow(17, _bitrev7(i), Q) for i in range(128)]
GAMMAS = [pow(17, 2 * _bitrev7(i) + 1, Q) for i in range(128)]


@dataclass(frozen=True)
class KemParams:
    n: int = N
    k: int = K
    q: int = Q
    eta1: int = ETA1
    eta2: int = ETA2
    du: int = DU
    dv: int = DV


@dataclass(frozen=True)
class KemKeyPair:
    pk: bytes
    sk: bytes = field(repr=False)
    seed: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.pk) != PK_BYTES or len(self.sk) != SK_BYTES:
            raise ParameterError("Kyber-512 keys are 800/1632 bytes")


@dataclass(frozen=True)
class KemCiphertextAndSecret:
    ct: bytes
    ss: bytes = field(repr=False)


# -- symmetric primitives (FIPS 202) ------------------------------------------


def _H(data):
    return hashlib.sha3_256(data).digest()


def _G(data):
    digest = hashlib.sha3_512(data).digest()
    return digest[:32], digest[32:]


def _prf(seed, nonce, eta):
    return hashlib.shake_256(seed + bytes([nonce])).digest(64 * eta)


def _kdf(data):
    return hashlib.shake_256(data).digest(SS_BYTES)


# -- polynomial arithmetic ----------------------------------------------------


def ntt(f):
    f = list(f)
    k = 1
    length = 128
    while length >= 2:
        for start in range(0, N, 2 * length):
            zeta = ZETAS[k]
            k += 1
            for j in range(start, start + length):
                t = zeta * f[j + length] % Q
                f[j + length] = (f[j] - t) % Q
                f[j] = (f[j] + t) % Q
        length >>= 1
    return f


def intt(f):
    f = list(f)
    k = 127
    length = 2
    while length <= 128:
        for start in range(0, N, 2 * length):
            zeta = ZETAS[k]
            k -= 1
            for j in range(start, start + length):
                t = f[j]
                f[j] = (t + f[j + length]) % Q
                f[j + length] = zeta * (f[j + length] - t) % Q
        length <<= 1
    return [x * N_INV % Q for x in f]


def ntt_mul(f, g):
    """Pointwise product in the NTT domain: 128 products mod X^2 - gamma."""
    h = [0] * N
    for i in range(128):
        a0, a1 = f[2 * i], f[2 * i + 1]
        b0, b1 = g[2 * i], g[2 * i + 1]
        h[2 * i] = (a0 * b0 + a1 * b1 * GAMMAS[i]) % Q
        h[2 * i + 1] = (a0 * b1 + a1 * b0) % Q
    return h


def poly_add(f, g):
    return [(a + b) % Q for a, b in zip(f, g)]


def poly_sub(f, g):
    return [(a - b) % Q for a, b in zip(f, g)]


def schoolbook_mul(f, g):
    """Product in Z_q[X]/(X^256 + 1) by direct convolution; a slow cross-check."""
    h = [0] * (2 * N)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                h[i + j] += a * b
    return [(h[i] - h[i + N]) % Q for i in range(N)]


def _inner(row, vec):
    acc = [0] * N
    for a, b in zip(row, vec):
        acc = poly_add(acc, ntt_mul(a, b))
    return acc


# -- sampling -----------------------------------------------------------------


def sample_ntt(rho, i, j):
    """Rejection-sample a uniform NTT-domain polynomial from SHAKE-128(rho||i||j)."""
    seed = rho + bytes([i, j])
    n_bytes = 168 * 3
    while True:
        stream = hashlib.shake_128(seed).digest(n_bytes)
        out = []
        for pos in range(0, n_bytes - 2, 3):
            b0, b1, b2 = stream[pos], stream[pos + 1], stream[pos + 2]
            d1 = b0 | ((b1 & 0x0F) << 8)
            d2 = (b1 >> 4) | (b2 << 4)
            if d1 < Q:
                out.append(d1)
            if d2 < Q and len(out) < N:
                out.append(d2)
            if len(out) == N:
                return out
        n_bytes += 168


def cbd(data, eta):
    bits = int.from_bytes(data, "little")
    mask = (1 << eta) - 1
    out = []
    for i in range(N):
        chunk = bits >> (2 * eta * i)
        a = bin(chunk & mask).count("1")
        b = bin((chunk >> eta) & mask).count("1")
        out.append((a - b) % Q)
    return out


def gen_matrix(rho, transposed=False):
    return [[sample_ntt(rho, i, j) if transposed else sample_ntt(rho, j, i) for j in range(K)] for i in range(K)]


# -- encoding -----------------------------------------------------------------


def encode(poly, bits):
    acc = 0
    for i, c in enumerate(poly):
        acc |= c << (bits * i)
    return acc.to_bytes(bits * N // 8, "little")


def decode(data, bits):
    acc = int.from_bytes(data, "little")
    mask = (1 << bits) - 1
    return [(acc >> (bits * i)) & mask for i in range(N)]


def compress(poly, d):
    return [(((x << d) + Q // 2) // Q) & ((1 << d) - 1) for x in poly]


def decompress(poly, d):
    return [(x * Q + (1 << (d - 1))) >> d for x in poly]


# -- IND-CPA core -------------------------------------------------------------


def cpa_keygen(d):
    rho, sigma = _G(d)
    s = [cbd(_prf(sigma, n, ETA1), ETA1) for n in range(K)]
    e = [cbd(_prf(sigma, K + n, ETA1), ETA1) for n in range(K)]
    s_hat = [ntt(p) for p in s]
    e_hat = [ntt(p) for p in e]
    a_hat = gen_matrix(rho)
    t_hat = [poly_add(_inner(a_hat[i], s_hat), e_hat[i]) for i in range(K)]
    pk = b"".join(encode(p, 12) for p in t_hat) + rho
    sk = b"".join(encode(p, 12) for p in s_hat)
    return pk, sk


def cpa_encrypt(pk, m, coins):
    t_hat = [decode(pk[POLY_BYTES * i : POLY_BYTES * (i + 1)], 12) for i in range(K)]
    rho = pk[CPA_SK_BYTES:]
    at_hat = gen_matrix(rho, transposed=True)
    r = [cbd(_prf(coins, n, ETA1), ETA1) for n in range(K)]
    e1 = [cbd(_prf(coins, K + n, ETA2), ETA2) for n in range(K)]
    e2 = cbd(_prf(coins, 2 * K, ETA2), ETA2)
    r_hat = [ntt(p) for p in r]
    u = [poly_add(intt(_inner(at_hat[i], r_hat)), e1[i]) for i in range(K)]
    msg = decompress(decode(m, 1), 1)
    v = poly_add(poly_add(intt(_inner(t_hat, r_hat)), e2), msg)
    c1 = b"".join(encode(compress(p, DU), DU) for p in u)
    return c1 + encode(compress(v, DV), DV)


def cpa_decrypt(sk, ct):
    step = DU * N // 8
    u = [decompress(decode(ct[step * i : step * (i + 1)], DU), DU) for i in range(K)]
    v = decompress(decode(ct[K * step :], DV), DV)
    s_hat = [decode(sk[POLY_BYTES * i : POLY_BYTES * (i + 1)], 12) for i in range(K)]
    w = poly_sub(v, intt(_inner(s_hat, [ntt(p) for p in u])))
    return encode(compress(w, 1), 1)


# -- IND-CCA KEM --------------------------------------------------------------


def keygen_from_coins(d: bytes, z: bytes) -> tuple[bytes, bytes]:
    """Round-3 ``crypto_kem_keypair`` with its two 32-byte random draws given."""
    if len(d) != 32 or len(z) != 32:
        raise ParameterError("keygen coins must be 32 bytes each")
    pk, cpa_sk = cpa_keygen(d)
    return pk, cpa_sk + pk + _H(pk) + z


def seed_from_phi(phi) -> bytes:
    if len(phi) != 16 or any(not 0 <= c < 1 << 16 for c in phi):
        raise ParameterError("phi must be 16 coefficients below 2**16")
    return sha256(tagged(SEED_TAG, b"".join(int(c).to_bytes(2, "big") for c in phi)))


def kem_keygen(seed: bytes) -> KemKeyPair:
    """Deterministic Kyber-512 keypair; both keygen draws come from SHA3-512 of the seed."""
    if len(seed) != 32:
        raise ParameterError("seed must be 32 bytes")
    d, z = _G(tagged(KEYGEN_TAG, seed))
    pk, sk = keygen_from_coins(d, z)
    return KemKeyPair(pk, sk, seed)


def kem_encaps(pk: bytes, coins: bytes) -> KemCiphertextAndSecret:
    if len(pk) != PK_BYTES:
        raise ParameterError(f"public key must be {PK_BYTES} bytes, got {len(pk)}")
    if len(coins) != 32:
        raise ParameterError("coins must be 32 bytes")
    m = _H(coins)
    k_bar, r = _G(m + _H(pk))
    ct = cpa_encrypt(pk, m, r)
    return KemCiphertextAndSecret(ct, _kdf(k_bar + _H(ct)))


def kem_decaps(sk: bytes, ct: bytes) -> bytes:
    if len(sk) != SK_BYTES:
        raise ParameterError(f"secret key must be {SK_BYTES} bytes, got {len(sk)}")
    if len(ct) != CT_BYTES:
        raise ParameterError(f"ciphertext must be {CT_BYTES} bytes, got {len(ct)}")
    cpa_sk = sk[:CPA_SK_BYTES]
    pk = sk[CPA_SK_BYTES : CPA_SK_BYTES + PK_BYTES]
    h = sk[CPA_SK_BYTES + PK_BYTES : CPA_SK_BYTES + PK_BYTES + 32]
    z = sk[-32:]
    m = cpa_decrypt(cpa_sk, ct)
    k_bar, r = _G(m + h)
    ok = hmac.compare_digest(cpa_encrypt(pk, m, r), ct)
    # Branch-free select between the real and the implicit-rejection key.
    mask = -int(ok) & 0xFF
    chosen = bytes((a & mask) | (b & ~mask & 0xFF) for a, b in zip(k_bar, z))
    return _kdf(chosen + _H(ct))
