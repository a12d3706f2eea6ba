import hashlib
import json
import random

import pytest

from conftest import COST
from oracles import line_value
from pqwallet import lattice, ltsss, protocol
from pqwallet.backup import backup_decode, backup_encode
from pqwallet.errors import AuthFailed, ParameterError, TransportError, UnknownUser, UserExists
from pqwallet.hashing import derive_eta_mu
from pqwallet.kyber import kem_keygen, seed_from_phi
from pqwallet.protocol import (
    Credentials,
    auth_key,
    check_proof,
    make_proof,
    offline_recover,
    register_flow,
    rekey_flow,
    uid_of,
    unlock_flow,
)
from pqwallet.transport import OfflineTransport

Q = ltsss.WALLET_Q


def test_uid():
    assert uid_of("alice") == hashlib.sha256(b"pqw-uid-v1\x1falice").digest()
    assert uid_of("alice") == uid_of("alice")
    assert uid_of("alice") != uid_of("bob")
    assert len(uid_of("x")) == 32
    with pytest.raises(ParameterError):
        uid_of("")


def test_proof_of_possession():
    seed, nonce = bytes(range(32)), bytes(32)
    k = auth_key(seed)
    assert k == hashlib.sha256(b"pqw-auth-v1\x1f" + seed).digest()
    proof = make_proof(k, nonce)
    assert proof == hashlib.sha256(b"pqw-proof-v1\x1f" + k + nonce).digest()
    assert check_proof(k, nonce, proof)
    assert not check_proof(auth_key(bytes(32)), nonce, proof)
    assert not check_proof(k, b"\x01" * 32, proof)
    with pytest.raises(ParameterError):
        make_proof(k, bytes(31))
    with pytest.raises(ParameterError):
        check_proof(k, nonce, proof[:16])


def test_register_then_unlock(client, creds, rng):
    handle, backup = register_flow(creds, client, rng, cost=COST)
    assert handle.record_version == 1
    assert backup.x == 3 and handle.backup == backup
    again = unlock_flow(creds, client, rng, cost=COST)
    assert again.keypair == handle.keypair
    assert again.session is not None
    assert handle.fingerprint == hashlib.sha256(handle.keypair.pk).hexdigest()[:16]
    with pytest.raises(UserExists):
        register_flow(creds, client, rng, cost=COST)


def test_keypair_matches_composed_oracle(client, server, creds, rng):
    handle, _ = register_flow(creds, client, rng, cost=COST)
    rec = server.store.get(uid_of(creds.username))
    d = derive_eta_mu(creds.username, creds.password1, creds.password2, COST)
    rho = [int.from_bytes(d.eta[2 * j : 2 * j + 2], "big") % 16384 for j in range(16)]
    pad = [
        (int.from_bytes(rec.omega2[2 * j : 2 * j + 2], "little") + rec.delta2[j]) % 16384 for j in range(16)
    ]
    rho_prime = [(r + p) % 16384 for r, p in zip(rho, pad)]
    s_mu = [int.from_bytes(d.mu[2 * j : 2 * j + 2], "big") % Q for j in range(16)]
    phi = tuple(line_value(1, r, 2, u, 0, Q) for r, u in zip(rho_prime, s_mu))
    assert handle.keypair == kem_keygen(seed_from_phi(phi))
    assert handle.backup.values == tuple(line_value(1, r, 2, u, 3, Q) for r, u in zip(rho_prime, s_mu))


def test_unlock_failures(client, creds, rng):
    with pytest.raises(UnknownUser):
        unlock_flow(creds, client, rng, cost=COST)
    register_flow(creds, client, rng, cost=COST)
    with pytest.raises(AuthFailed):
        unlock_flow(Credentials(creds.username, creds.password1, "wrong"), client, rng, cost=COST)
    with pytest.raises(AuthFailed):
        unlock_flow(Credentials(creds.username, "wrong", creds.password2), client, rng, cost=COST)


def test_nonce_replay_rejected(client, creds, rng):
    handle, _ = register_flow(creds, client, rng, cost=COST)
    k = auth_key(handle.keypair.seed)
    nonce = client.challenge(handle.uid)
    proof = make_proof(k, nonce)
    assert client.verify(handle.uid, nonce, proof)
    with pytest.raises(AuthFailed):
        client.verify(handle.uid, nonce, proof)


def test_rekey(client, creds, rng):
    handle, old_backup = register_flow(creds, client, rng, cost=COST)
    session = unlock_flow(creds, client, rng, cost=COST)
    new = rekey_flow(session, creds, client, rng, cost=COST)
    assert new.record_version == 2
    assert new.keypair.pk != handle.keypair.pk
    assert unlock_flow(creds, client, rng, cost=COST).keypair == new.keypair
    assert creds == Credentials("alice", "correct horse", "battery staple")
    # the old backup still rebuilds the old phi, never the new one
    d = derive_eta_mu(creds.username, creds.password1, creds.password2, COST)
    old_phi = ltsss.wallet_recover(ltsss.mu_share(d.mu), old_backup)
    new_phi = ltsss.wallet_recover(ltsss.mu_share(d.mu), new.backup)
    assert kem_keygen(seed_from_phi(old_phi)) == handle.keypair
    assert kem_keygen(seed_from_phi(new_phi)) == new.keypair
    assert old_phi != new_phi


def test_rekey_needs_session(client, creds, rng):
    handle, _ = register_flow(creds, client, rng, cost=COST)
    with pytest.raises(AuthFailed):
        rekey_flow(handle, creds, client, rng, cost=COST)
    unlocked = unlock_flow(creds, client, rng, cost=COST)
    with pytest.raises(ParameterError):
        rekey_flow(unlocked, Credentials("mallory", "a", "b"), client, rng, cost=COST)


def test_offline_recovery(client, creds, rng):
    handle, backup = register_flow(creds, client, rng, cost=COST)
    bf = backup_decode(backup_encode(backup, handle.record_version))
    offline = OfflineTransport()
    with pytest.raises(TransportError):
        unlock_flow(creds, protocol.WalletClient(offline), rng, cost=COST)
    assert offline.calls == 1
    rec = offline_recover(creds, bf, cost=COST)
    assert rec.keypair == handle.keypair
    assert offline.calls == 1
    wrong = offline_recover(Credentials(creds.username, creds.password1, "nope"), bf, cost=COST)
    assert wrong.keypair.pk != handle.keypair.pk


def test_backup_alone_admits_every_phi(client, creds, rng):
    _, backup = register_flow(creds, client, rng, cost=COST)
    c = backup.values[0]
    seen = {ltsss.wallet_recover(ltsss.Share(3, (c,)), ltsss.Share(2, (v,)))[0] for v in range(Q)}
    assert len(seen) == Q


def test_secret_values_never_on_the_wire(client, transport, server, creds, rng):
    handle, _ = register_flow(creds, client, rng, cost=COST)
    unlocked = unlock_flow(creds, client, rng, cost=COST)
    rekey_flow(unlocked, creds, client, rng, cost=COST)
    d = derive_eta_mu(creds.username, creds.password1, creds.password2, COST)
    rho = lattice.hash_to_lattice_point(d.eta).coeffs
    rec = server.store.get(handle.uid)
    pad = lattice.mask_vector(rec.delta2, rec.omega2)
    secrets_hex = [d.eta.hex(), d.mu.hex(), handle.keypair.sk.hex()[:64], handle.keypair.seed.hex(), rec.omega2.hex()]
    secret_vectors = [list(rho), list(pad), list(rec.delta2)]
    words = [creds.password1, creds.password2, creds.username]
    for method, path, query, body, status, payload in transport.transcript:
        for blob in (body, payload):
            if not blob:
                continue
            text = blob.decode()
            for h in secrets_hex:
                assert h not in text
            for w in words:
                assert w not in text
            data = json.loads(text)
            for value in data.values():
                if isinstance(value, list):
                    assert value not in secret_vectors
            assert not {"delta2", "omega2", "pad", "eta", "mu", "phi"} & set(data)


def test_tau_difference_constant_per_version(client, server, creds):
    register_flow(creds, client, random.Random(1), cost=COST)
    uid = uid_of(creds.username)
    diffs = set()
    for seed in range(5):
        tau1 = tuple(random.Random(seed).randrange(16384) for _ in range(16))
        tau2 = client.derive(uid, tau1).tau2
        diffs.add(tuple((b - a) % 16384 for a, b in zip(tau1, tau2)))
    assert len(diffs) == 1
    unlocked = unlock_flow(creds, client, cost=COST)
    rekey_flow(unlocked, creds, client, cost=COST)
    tau1 = (0,) * 16
    assert tuple(client.derive(uid, tau1).tau2) not in diffs
