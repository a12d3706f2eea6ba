"""Threshold secret sharing over Z_Q.

Two layers live here:

* the general noisy scheme: share ``y_i = <l_i, a> + e_i (mod Q)`` with the
  secret in ``a[0]``, reconstructed from t shares by a closest-vector search
  (LLL + Babai) on a (t+m)-dimensional embedding;
* the exact (2, 3) instance the wallet uses, where the two derived inputs
  are fixed as the shares at x = 1 and x = 2, the secret phi is the line's
  value at x = 0 and the backup share is its value at x = 3.
"""

from dataclasses import dataclass

from pqwallet.errors import ParameterError, ReconstructFailed
from pqwallet.hashing.credentials import tagged
from pqwallet.hashing.sha256 import sha256
from pqwallet.lattice import LatticePoint, is_prime, mod_inverse
from pqwallet.reduction import babai_nearest_plane, lll_reduce

WALLET_Q = 16411
X_RHO, X_MU, X_BACKUP = 1, 2, 3
PARAMS_TAG = b"pqw-ltsss-v1"


@dataclass(frozen=True)
class LtsssPublicParams:
    m: int
    t: int
    n: int
    Q: int
    l_vectors: tuple
    eps_max: int

    def __post_init__(self):
        if not 2 <= self.t <= self.n <= 8:
            raise ParameterError(f"need 2 <= t <= n <= 8, got t={self.t}, n={self.n}")
        if self.m < 1 or self.eps_max < 0:
            raise ParameterError("m must be positive and eps_max non-negative")
        if not is_prime(self.Q):
            raise ParameterError(f"Q={self.Q} is not prime")
        if len(self.l_vectors) != self.n or any(len(v) != self.m for v in self.l_vectors):
            raise ParameterError("need n public vectors of length m")
        if len(set(self.l_vectors)) != self.n or any(v[0] % self.Q == 0 for v in self.l_vectors):
            raise ParameterError("public vectors must be distinct with nonzero first entry")


@dataclass(frozen=True)
class LtsssInstance:
    a: tuple
    noises: tuple
    shares: tuple  # (index, y) pairs, index = 1..n


@dataclass(frozen=True)
class ReconstructionProblem:
    basis: list
    target: list
    weight: int


def _stream_words(seed, Q):
    """Uniform integers in [0, Q) from SHA-256 in counter mode."""
    limit = (1 << 32) - (1 << 32) % Q
    counter = 0
    while True:
        block = sha256(tagged(PARAMS_TAG, seed, counter.to_bytes(4, "big")))
        counter += 1
        for off in range(0, 32, 4):
            w = int.from_bytes(block[off : off + 4], "big")
            if w < limit:
                yield w % Q


def gen_public_params(m: int, t: int, n: int, Q: int, eps_max: int, seed: bytes) -> LtsssPublicParams:
    if len(seed) != 32:
        raise ParameterError("seed must be 32 bytes")
    if not 2 <= t <= n <= 8 or not is_prime(Q) or m < 1:
        raise ParameterError(f"invalid sharing parameters m={m}, t={t}, n={n}, Q={Q}")
    words = _stream_words(seed, Q)
    vectors = []
    while len(vectors) < n:
        v = tuple(next(words) for _ in range(m))
        if v[0] != 0 and v not in vectors:
            vectors.append(v)
    return LtsssPublicParams(m, t, n, Q, tuple(vectors), eps_max)


def share_secret(secret: int, params: LtsssPublicParams, rng) -> LtsssInstance:
    Q = params.Q
    if not 0 <= secret < Q:
        raise ParameterError(f"secret must lie in [0, {Q})")
    a = (secret,) + tuple(rng.randrange(Q) for _ in range(params.m - 1))
    noises = tuple(rng.randint(-params.eps_max, params.eps_max) for _ in range(params.n))
    shares = tuple(
        (i + 1, (sum(x * y for x, y in zip(l, a)) + e) % Q)
        for i, (l, e) in enumerate(zip(params.l_vectors, noises))
    )
    return LtsssInstance(a, noises, shares)


def _check_shares(shares, params):
    shares = [(int(i), int(y)) for i, y in shares]
    if len(shares) != params.t:
        raise ParameterError(f"exactly t={params.t} shares required, got {len(shares)}")
    indices = [i for i, _ in shares]
    if len(set(indices)) != len(indices) or any(not 1 <= i <= params.n for i in indices):
        raise ParameterError(f"share indices must be distinct values in 1..{params.n}")
    if any(not 0 <= y < params.Q for _, y in shares):
        raise ParameterError(f"share values must lie in [0, {params.Q})")
    return shares


def build_problem(shares, params: LtsssPublicParams) -> ReconstructionProblem:
    """Embed t shares as a CVP instance.

    Rows ``W*Q*e_i`` absorb the reduction mod Q; row j carries coefficient
    a_j as ``(W*l_1[j], ..., W*l_t[j] | e_j)``.  The target is ``(W*y | 0)``,
    so a lattice point's coordinate t equals a_0, the secret.  W is chosen so
    large that Babai's 2**(dim/2) approximation factor can never trade a
    share residual for a shorter coefficient vector.
    """
    shares = _check_shares(shares, params)
    t, m, Q = params.t, params.m, params.Q
    dim = t + m
    weight = Q * (m + 1) * (1 << (dim // 2 + 1))
    basis = []
    for i in range(t):
        row = [0] * dim
        row[i] = weight * Q
        basis.append(row)
    for j in range(m):
        row = [weight * params.l_vectors[idx - 1][j] for idx, _ in shares] + [0] * m
        row[t + j] = 1
        basis.append(row)
    target = [weight * y for _, y in shares] + [0] * m
    return ReconstructionProblem(basis, target, weight)


def _centered(x, Q):
    x %= Q
    return x - Q if x > Q // 2 else x


def reconstruct_secret(shares, params: LtsssPublicParams) -> int:
    problem = build_problem(shares, params)
    t, Q = params.t, params.Q
    v = babai_nearest_plane(lll_reduce(problem.basis), problem.target)
    residual = [_centered(tg - x, Q * problem.weight) for tg, x in zip(problem.target[:t], v[:t])]
    if any(r % problem.weight for r in residual):
        raise ReconstructFailed("closest point is off the share grid")
    if sum(abs(r) // problem.weight for r in residual) > params.eps_max * t:
        raise ReconstructFailed("shares are inconsistent or noisier than eps_max allows")
    return v[t] % Q


@dataclass(frozen=True)
class Share:
    x: int
    values: tuple


@dataclass(frozen=True)
class WalletShareSet:
    s_rho: tuple
    s_mu: tuple
    backup: tuple
    phi: tuple

    def share(self, x):
        return Share(x, {X_RHO: self.s_rho, X_MU: self.s_mu, X_BACKUP: self.backup}[x])


def shares_from_inputs(rho_prime: LatticePoint, mu: bytes, Q: int = WALLET_Q) -> tuple[tuple, tuple]:
    if len(mu) != 32:
        raise ParameterError("mu must be 32 bytes")
    s_rho = tuple(c % Q for c in rho_prime.coeffs)
    s_mu = tuple(int.from_bytes(mu[2 * j : 2 * j + 2], "big") % Q for j in range(16))
    return s_rho, s_mu


def mu_share(mu: bytes, Q: int = WALLET_Q) -> Share:
    return Share(X_MU, tuple(int.from_bytes(mu[2 * j : 2 * j + 2], "big") % Q for j in range(16)))


def wallet_combine(s_rho, s_mu, Q: int = WALLET_Q) -> tuple[tuple, tuple]:
    """Line through (1, s_rho) and (2, s_mu), read off at x = 0 and x = 3."""
    if len(s_rho) != len(s_mu):
        raise ParameterError("share vectors differ in length")
    phi = tuple((2 * r - u) % Q for r, u in zip(s_rho, s_mu))
    backup = tuple((2 * u - r) % Q for r, u in zip(s_rho, s_mu))
    return phi, backup


def combine_share_set(s_rho, s_mu, Q: int = WALLET_Q) -> WalletShareSet:
    phi, backup = wallet_combine(s_rho, s_mu, Q)
    return WalletShareSet(tuple(s_rho), tuple(s_mu), backup, phi)


def lagrange_at_zero(xs, Q):
    coeffs = []
    for i, xi in enumerate(xs):
        num, den = 1, 1
        for j, xj in enumerate(xs):
            if j != i:
                num = num * (-xj) % Q
                den = den * (xi - xj) % Q
        coeffs.append(num * mod_inverse(den, Q) % Q)
    return coeffs


def wallet_recover(share_a: Share, share_b: Share, Q: int = WALLET_Q) -> tuple:
    if share_a.x == share_b.x:
        raise ParameterError("recovery needs two shares with distinct x")
    if share_a.x not in (1, 2, 3) or share_b.x not in (1, 2, 3):
        raise ParameterError("share index must be 1, 2 or 3")
    if len(share_a.values) != len(share_b.values):
        raise ParameterError("share vectors differ in length")
    la, lb = lagrange_at_zero([share_a.x, share_b.x], Q)
    return tuple((la * a + lb * b) % Q for a, b in zip(share_a.values, share_b.values))
