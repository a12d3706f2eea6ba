"""Blinded lattice exchange between wallet client and server.

A credential digest ``eta`` is cut into sixteen 16-bit words and reduced mod
q to give the lattice point ``rho``.  The client hides it under a one-time
mask ``b`` built from an integer Gaussian vector and a 256-bit binary vector,
the server adds its own persistent pad built the same way, and the client
strips its mask again:

    tau1 = rho + b          (client -> server)
    tau2 = tau1 + pad       (server -> client)
    rho' = tau2 - b = rho + pad

All vectors have m = 16 coefficients in [0, q) and every step is exact.
"""

import math
from dataclasses import dataclass, field
from statistics import NormalDist

from pqwallet.errors import NoInverse, ParameterError

CLIENT_BLINDED = "tau1"
SERVER_PADDED = "tau2"


@dataclass(frozen=True)
class LatticeParams:
    d: int = 256
    q: int = 1 << 14
    s: int = 512
    sigma: float = 0.125
    m: int = 16
    q0: int = 1 << 13
    sigma_int: int = 1024
    Q: int = 16411

    def __post_init__(self):
        if self.q & (self.q - 1) or self.q < 2:
            raise ParameterError("q must be a power of two")
        if self.q0 != self.q // 2 or self.m * 16 != self.d or self.s != 2 * self.d:
            raise ParameterError("inconsistent lattice parameters")
        if self.Q <= self.q:
            raise ParameterError("sharing modulus Q must exceed q")

    @property
    def omega_bytes(self):
        return 2 * self.m


def default_params() -> LatticeParams:
    d, q = 256, 1 << 14
    sigma = math.sqrt(d / q)
    q0 = q // 2
    return LatticeParams(
        d=d, q=q, s=2 * d, sigma=sigma, m=d // 16, q0=q0, sigma_int=round(q0 * sigma), Q=next_prime(q)
    )


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""
    n += 1
    while not is_prime(n):
        n += 1
    return n


def _check_vector(values, length, bound, name):
    values = tuple(int(v) for v in values)
    if len(values) != length:
        raise ParameterError(f"{name} must have {length} coefficients, got {len(values)}")
    if bound is not None and any(not 0 <= v < bound for v in values):
        raise ParameterError(f"{name} coefficients must lie in [0, {bound})")
    return values


@dataclass(frozen=True)
class LatticePoint:
    coeffs: tuple
    q: int = 1 << 14

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _check_vector(self.coeffs, 16, self.q, "lattice point"))


@dataclass(frozen=True)
class BlindedPoint:
    tau: tuple
    stage: str
    q: int = 1 << 14

    def __post_init__(self):
        if self.stage not in (CLIENT_BLINDED, SERVER_PADDED):
            raise ParameterError(f"unknown blinding stage {self.stage!r}")
        object.__setattr__(self, "tau", _check_vector(self.tau, 16, self.q, self.stage))


@dataclass(frozen=True)
class BlindState:
    """One session's client mask. Never leaves the client."""

    delta1: tuple
    omega1: bytes
    b: tuple = field(repr=False)

    def __repr__(self):
        return "BlindState(<secret>)"


@dataclass(frozen=True)
class ServerPadSource:
    delta2: tuple
    omega2: bytes

    def __post_init__(self):
        object.__setattr__(self, "delta2", _check_vector(self.delta2, 16, None, "delta2"))
        if len(self.omega2) != 32:
            raise ParameterError("omega2 must be 256 bits")


def hash_to_lattice_point(eta: bytes, p: LatticeParams | None = None) -> LatticePoint:
    p = p or default_params()
    if len(eta) != 2 * p.m:
        raise ParameterError(f"digest must be {2 * p.m} bytes, got {len(eta)}")
    return LatticePoint(tuple(int.from_bytes(eta[2 * j : 2 * j + 2], "big") % p.q for j in range(p.m)), p.q)


def pack16(omega: bytes, j: int) -> int:
    """Word j of a bit string: bit 16j+b contributes 2**b."""
    return int.from_bytes(omega[2 * j : 2 * j + 2], "little")


def mask_vector(delta, omega: bytes, p: LatticeParams | None = None) -> tuple:
    p = p or default_params()
    if len(delta) != p.m or len(omega) != p.omega_bytes:
        raise ParameterError(f"mask inputs must be {p.m} integers and {8 * p.omega_bytes} bits")
    return tuple((pack16(omega, j) + int(delta[j])) % p.q for j in range(p.m))


def sample_gaussian_int(rng, sigma_int: int) -> int:
    """Rounded inverse-CDF sample: 64 uniform bits -> N(0, sigma_int), ties up."""
    u = (rng.getrandbits(64) + 0.5) / 2.0**64
    return math.floor(NormalDist(0.0, sigma_int).inv_cdf(u) + 0.5)


def sample_gaussian_vector(rng, p: LatticeParams) -> tuple:
    return tuple(sample_gaussian_int(rng, p.sigma_int) for _ in range(p.m))


def sample_bits(rng, n_bytes: int) -> bytes:
    return rng.getrandbits(8 * n_bytes).to_bytes(n_bytes, "little")


def sample_blind_state(rng, p: LatticeParams | None = None) -> BlindState:
    p = p or default_params()
    delta1 = sample_gaussian_vector(rng, p)
    omega1 = sample_bits(rng, p.omega_bytes)
    return BlindState(delta1, omega1, mask_vector(delta1, omega1, p))


def sample_pad_source(rng, p: LatticeParams | None = None) -> ServerPadSource:
    p = p or default_params()
    return ServerPadSource(sample_gaussian_vector(rng, p), sample_bits(rng, p.omega_bytes))


def _add(u, v, q):
    return tuple((a + b) % q for a, b in zip(u, v))


def blind_point(rho: LatticePoint, st: BlindState) -> BlindedPoint:
    return BlindedPoint(_add(rho.coeffs, st.b, rho.q), CLIENT_BLINDED, rho.q)


def pad_point(tau1: BlindedPoint, src: ServerPadSource, p: LatticeParams | None = None) -> BlindedPoint:
    p = p or default_params()
    if tau1.stage != CLIENT_BLINDED:
        raise ParameterError("pad_point expects a client-blinded point")
    return BlindedPoint(_add(tau1.tau, mask_vector(src.delta2, src.omega2, p), p.q), SERVER_PADDED, p.q)


def unblind_point(tau2: BlindedPoint, st: BlindState, p: LatticeParams | None = None) -> LatticePoint:
    p = p or default_params()
    if tau2.stage != SERVER_PADDED:
        raise ParameterError("unblind_point expects a server-padded point")
    return LatticePoint(tuple((t - b) % p.q for t, b in zip(tau2.tau, st.b)), p.q)


def extended_euclid(a: int, n: int) -> tuple[int, int, int]:
    """Return (g, x, y) with a*x + n*y = g = gcd(a, n)."""
    if a <= 0 or n <= 0:
        raise ParameterError("extended_euclid needs positive arguments")
    old_r, r = a, n
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        quot = old_r // r
        old_r, r = r, old_r - quot * r
        old_x, x = x, old_x - quot * x
        old_y, y = y, old_y - quot * y
    return old_r, old_x, old_y


def mod_inverse(a: int, n: int) -> int:
    g, x, _ = extended_euclid(a % n or n, n)
    if g != 1:
        raise NoInverse(a, n, g)
    return x % n
