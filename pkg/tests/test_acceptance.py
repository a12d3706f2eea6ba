"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary (see conftest.py) and by running this file directly.
"""

import functools
import hashlib
import io
import itertools
import json
import random
import socket
import subprocess
import sys
import threading
from concurrent.futures import ThreadPoolExecutor

import bcrypt as reference_bcrypt
import pytest

from conftest import COST, DATA
from kat_drbg import NistKatDrbg, read_rsp
from oracles import brute_force_secret, solve_mod
from pqwallet import lattice, ltsss, protocol
from pqwallet.backup import backup_decode, backup_encode
from pqwallet.cli import main as cli_main
from pqwallet.errors import AuthFailed, RateLimited, TransportError
from pqwallet.hashing.bcrypt import BcryptParams, b64_encode, bcrypt_hash
from pqwallet.hashing.sha256 import sha256
from pqwallet.kyber import CT_BYTES, PK_BYTES, SK_BYTES, kem_decaps, kem_encaps, kem_keygen, keygen_from_coins
from pqwallet.protocol import Credentials, make_proof, register_flow, rekey_flow, unlock_flow
from pqwallet.server import RecordStore, WalletServer, make_http_server
from pqwallet.transport import HttpTransport, LocalTransport

RESULTS = {}

TITLES = {
    1: "determinism: register + 2 unlocks give identical pk/sk (100/100)",
    2: "blinding transport: unblind(pad(blind(rho))) = rho + pad (10^3)",
    3: "threshold correctness: all share pairs agree (10^3); single share hides phi (Q'=17)",
    4: "noisy LTSSS: reconstruct_secret agrees with brute-force oracle (10^3)",
    5: "KEM: official Kyber-512 KATs, 10^3 round trips, sizes 800/1632/768",
    6: "hash KATs: SHA-256 vectors and >=10 bcrypt cost-4 vectors",
    7: "rekeying: 50 rekeys, 51 distinct pks, stale backup and proof rejected",
    8: "offline recovery after server process stops, zero network calls",
    9: "unlock: 10^3 correct accepted, 10^3 wrong rejected, replays rejected",
    10: "server: restart byte-identical, 32-way first derive, rate limit",
}


def criterion(number):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException as exc:
                RESULTS[number] = ("FAIL", f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
                raise
            RESULTS[number] = ("PASS", "")

        return run

    return wrap


def result_lines():
    lines = []
    for n, title in TITLES.items():
        status, note = RESULTS.get(n, ("NOT RUN", ""))
        lines.append(f"criterion {n:2d} {status}: {title}" + (f" [{note}]" if note else ""))
    return lines


def fresh_server(**kw):
    kw.setdefault("rate_limit", None)
    kw.setdefault("rng", random.Random(1234))
    return WalletServer(RecordStore(kw.pop("path", None)), **kw)


def random_creds(rnd):
    return Credentials(*(rnd.randbytes(rnd.randrange(3, 12)).hex() for _ in range(3)))


@criterion(1)
def test_c1_determinism():
    rnd = random.Random(101)
    server = fresh_server()
    client = protocol.WalletClient(LocalTransport(server))
    same = 0
    for _ in range(100):
        creds = random_creds(rnd)
        h0, _ = register_flow(creds, client, random.Random(rnd.getrandbits(64)), cost=COST)
        h1 = unlock_flow(creds, client, random.Random(rnd.getrandbits(64)), cost=COST)
        h2 = unlock_flow(creds, client, random.Random(rnd.getrandbits(64)), cost=COST)
        if h0.keypair.pk == h1.keypair.pk == h2.keypair.pk and h0.keypair.sk == h1.keypair.sk == h2.keypair.sk:
            same += 1
    assert same == 100, f"{same}/100 identical"


@criterion(2)
def test_c2_blinding_transport():
    rnd = random.Random(102)
    q = lattice.default_params().q
    for _ in range(1000):
        rho = lattice.LatticePoint(tuple(rnd.randrange(q) for _ in range(16)))
        st = lattice.sample_blind_state(rnd)
        src = lattice.sample_pad_source(rnd)
        # oracle pad: recomputed from the raw bits and integers
        pad = [(int.from_bytes(src.omega2[2 * j : 2 * j + 2], "little") + src.delta2[j]) % q for j in range(16)]
        tau1 = lattice.blind_point(rho, st)
        tau2 = lattice.pad_point(tau1, src)
        assert list(lattice.unblind_point(tau2, st).coeffs) == [(r + p) % q for r, p in zip(rho.coeffs, pad)]
        assert [(b - a) % q for a, b in zip(tau1.tau, tau2.tau)] == pad


@criterion(3)
def test_c3_threshold():
    Q = ltsss.WALLET_Q
    rnd = random.Random(103)
    for _ in range(1000):
        s_rho = tuple(rnd.randrange(16384) for _ in range(16))
        s_mu = tuple(rnd.randrange(Q) for _ in range(16))
        ss = ltsss.combine_share_set(s_rho, s_mu)
        phis = {ltsss.wallet_recover(ss.share(a), ss.share(b)) for a, b in ((1, 2), (1, 3), (2, 3))}
        assert phis == {ss.phi}
    small = 17
    for x, other in itertools.permutations((1, 2, 3), 2):
        for fixed in range(small):
            hist = [0] * small
            for v in range(small):
                hist[ltsss.wallet_recover(ltsss.Share(x, (fixed,)), ltsss.Share(other, (v,)), small)[0]] += 1
            assert hist == [1] * small, (x, other, fixed)


@criterion(4)
def test_c4_noisy_ltsss():
    Q = ltsss.WALLET_Q
    rnd = random.Random(104)
    agree = 0
    for k in range(1000):
        p = ltsss.gen_public_params(2, 2, 3, Q, 2, rnd.randbytes(32))
        inst = ltsss.share_secret(rnd.randrange(Q), p, rnd)
        picked = rnd.sample(inst.shares, 2)
        nearest, consistent = brute_force_secret(picked, p.l_vectors, Q, 2)
        assert inst.a[0] in consistent
        agree += ltsss.reconstruct_secret(picked, p) == nearest
    assert agree == 1000, f"{agree}/1000 agree"
    for _ in range(200):
        p = ltsss.gen_public_params(2, 2, 3, Q, 0, rnd.randbytes(32))
        inst = ltsss.share_secret(rnd.randrange(Q), p, rnd)
        picked = rnd.sample(inst.shares, 2)
        rows = [p.l_vectors[i - 1] for i, _ in picked]
        assert ltsss.reconstruct_secret(picked, p) == solve_mod(rows, [y for _, y in picked], Q)[0] == inst.a[0]


@criterion(5)
def test_c5_kem():
    for entry in read_rsp(DATA / "PQCkemKAT_1632.rsp"):
        drbg = NistKatDrbg(entry["seed"])
        pk, sk = keygen_from_coins(drbg.random_bytes(32), drbg.random_bytes(32))
        enc = kem_encaps(pk, drbg.random_bytes(32))
        assert (pk, sk, enc.ct, enc.ss) == (entry["pk"], entry["sk"], entry["ct"], entry["ss"]), entry["count"]
        assert kem_decaps(sk, enc.ct) == entry["ss"]
    rnd = random.Random(105)
    for _ in range(1000):
        kp = kem_keygen(rnd.randbytes(32))
        enc = kem_encaps(kp.pk, rnd.randbytes(32))
        assert (len(kp.pk), len(kp.sk), len(enc.ct)) == (PK_BYTES, SK_BYTES, CT_BYTES) == (800, 1632, 768)
        assert kem_decaps(kp.sk, enc.ct) == enc.ss


@criterion(6)
def test_c6_hash_kats():
    boundary = b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"
    for msg in (b"", b"abc", boundary):
        assert sha256(msg) == hashlib.sha256(msg).digest()
    rnd = random.Random(106)
    vectors = [(rnd.randbytes(16), rnd.randbytes(n)) for n in (0, 1, 3, 8, 16, 31, 32, 55, 64, 71, 72, 20)]
    assert len(vectors) >= 10
    for salt, msg in vectors:
        setting = b"$2b$04$" + b64_encode(salt).encode()
        assert bcrypt_hash(BcryptParams(4, salt, msg))[1].encode() == reference_bcrypt.hashpw(msg, setting)


@criterion(7)
def test_c7_rekeying():
    rnd = random.Random(107)
    server = fresh_server()
    transport = LocalTransport(server)
    client = protocol.WalletClient(transport)
    creds = Credentials("rekey-user", "pw-one", "pw-two")
    handle, backup = register_flow(creds, client, rnd, cost=COST)
    pks = [handle.keypair.pk]
    current = unlock_flow(creds, client, rnd, cost=COST)
    old_backup = backup_decode(backup_encode(backup, handle.record_version))
    old_k = protocol.auth_key(handle.keypair.seed)
    for _ in range(50):
        last_verify = next(body for _, path, _, body, *_ in reversed(transport.transcript) if path == "/v1/verify")
        new = rekey_flow(current, creds, client, rnd, cost=COST)
        pks.append(new.keypair.pk)
        # the previous backup rebuilds the previous key, not the new one
        assert protocol.offline_recover(creds, old_backup, cost=COST).keypair.pk != new.keypair.pk
        # previous proof: replayed verbatim, and recomputed on a fresh nonce
        status, _ = server.handle("POST", "/v1/verify", {}, last_verify)
        assert status == 401
        nonce = client.challenge(new.uid)
        with pytest.raises(AuthFailed):
            client.verify(new.uid, nonce, make_proof(old_k, nonce))
        current = unlock_flow(creds, client, rnd, cost=COST)
        assert current.keypair == new.keypair
        old_backup = backup_decode(backup_encode(new.backup, new.record_version))
        old_k = protocol.auth_key(new.keypair.seed)
    assert len(set(pks)) == 51
    assert server.store.get(handle.uid).version == 51


def _start_server_process(tmp_path):
    proc = subprocess.Popen(
        [sys.executable, "-m", "pqwallet", "serve", "--listen", "127.0.0.1:0", "--store", str(tmp_path / "s.jsonl")],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    line = proc.stdout.readline()
    assert line.startswith("listening on "), line + proc.stderr.read()
    return proc, "http://" + line.split()[-1]


@criterion(8)
def test_c8_offline_recovery(tmp_path, monkeypatch):
    proc, url = _start_server_process(tmp_path)
    creds = Credentials("outage-user", "pw-one", "pw-two")
    try:
        client = protocol.WalletClient(HttpTransport(url))
        handle, backup = register_flow(creds, client, cost=COST)
        before = handle.keypair.pk
    finally:
        proc.terminate()
        proc.wait(timeout=10)
    with pytest.raises(TransportError):
        protocol.WalletClient(HttpTransport(url)).challenge(handle.uid)
    backup_path = tmp_path / "backup.json"
    backup_path.write_bytes(backup_encode(backup, handle.record_version))

    calls = []

    class StubTransport:
        def __init__(self, base_url):
            calls.append(("construct", base_url))

        def request(self, *args):
            calls.append(("request", args))
            raise TransportError("stub")

    def no_connect(self, *args):
        calls.append(("socket", args))
        raise OSError("network disabled")

    monkeypatch.setattr(socket.socket, "connect", no_connect)
    env = {"PQW_USERNAME": creds.username, "PQW_PASSWORD1": creds.password1, "PQW_PASSWORD2": creds.password2}
    out = io.StringIO()
    code = cli_main(
        ["recover", "--backup", str(backup_path), "--cost", str(COST), "--server", url],
        env=env,
        stdout=out,
        stderr=io.StringIO(),
        transport_factory=StubTransport,
    )
    assert code == 0
    assert calls == []
    assert f"fingerprint {protocol.pk_fingerprint(before)}" in out.getvalue()
    assert protocol.offline_recover(creds, backup_decode(backup_path.read_bytes()), cost=COST).keypair.pk == before


@criterion(9)
def test_c9_unlock_soundness():
    rnd = random.Random(109)
    server = fresh_server()
    transport = LocalTransport(server)
    client = protocol.WalletClient(transport)
    users = [random_creds(rnd) for _ in range(10)]
    for u in users:
        register_flow(u, client, rnd, cost=COST)
    accepted = rejected = replays_rejected = 0
    for i in range(1000):
        u = users[i % 10]
        try:
            unlock_flow(u, client, rnd, cost=COST)
            accepted += 1
        except AuthFailed:
            pass
        verify_body = transport.transcript[-1][3]
        assert transport.transcript[-1][1] == "/v1/verify"
        if server.handle("POST", "/v1/verify", {}, verify_body)[0] == 401:
            replays_rejected += 1
    for i in range(1000):
        u = users[i % 10]
        wrong = Credentials(u.username, u.password1 + "x", u.password2) if i % 2 else Credentials(u.username, u.password1, u.password2 + "x")
        try:
            unlock_flow(wrong, client, rnd, cost=COST)
        except AuthFailed:
            rejected += 1
    assert (accepted, rejected, replays_rejected) == (1000, 1000, 1000)


@criterion(10)
def test_c10_server_robustness(tmp_path):
    path = tmp_path / "records.jsonl"
    server = fresh_server(path=path)
    client = protocol.WalletClient(LocalTransport(server))
    rnd = random.Random(110)
    for _ in range(5):
        register_flow(random_creds(rnd), client, rnd, cost=COST)
    before = path.read_bytes()
    restarted = RecordStore(path)
    assert restarted.records() == server.store.records()
    restarted.put(restarted.records()[0])
    assert path.read_bytes() == before

    app = fresh_server(path=tmp_path / "race.jsonl")
    httpd = make_http_server(app, "127.0.0.1:0")
    threading.Thread(target=httpd.serve_forever, daemon=True).start()
    try:
        url = "http://%s:%d" % httpd.server_address[:2]
        uid = bytes(range(32))
        barrier = threading.Barrier(32)

        def first_derive(i):
            c = protocol.WalletClient(HttpTransport(url))
            barrier.wait()
            return c.derive(uid, tuple((i + j) % 16384 for j in range(16)))

        with ThreadPoolExecutor(32) as pool:
            replies = list(pool.map(first_derive, range(32)))
    finally:
        httpd.shutdown()
        httpd.server_close()
    assert sum(r.created for r in replies) == 1
    lines = (tmp_path / "race.jsonl").read_text().splitlines()
    assert len(lines) == 1 and json.loads(lines[0].rsplit(" ", 1)[0])["version"] == 1

    limited = WalletServer(RecordStore(), rng=random.Random(3))
    lc = protocol.WalletClient(LocalTransport(limited))
    for _ in range(10):
        lc.derive(uid, (0,) * 16)
    with pytest.raises(RateLimited):
        lc.derive(uid, (0,) * 16)


if __name__ == "__main__":
    code = pytest.main([__file__, "-q"])
    sys.exit(code)
