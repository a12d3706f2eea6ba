"""Command-line front end: ``pqwallet <command> [options]``.

Exit codes: 0 success, 1 authentication or other server-side refusal,
2 usage error (bad flags, malformed backup file), 3 transport failure.
"""

import argparse
import getpass
import logging
import os
import signal
import sys
from dataclasses import dataclass
from pathlib import Path

from pqwallet import protocol
from pqwallet.backup import backup_decode, backup_encode
from pqwallet.errors import BadRequest, ParameterError, ProtocolError, StoreCorrupt, TransportError
from pqwallet.hashing import DEFAULT_COST
from pqwallet.hashing.bcrypt import MAX_COST, MIN_COST
from pqwallet.transport import DEFAULT_SERVER, HttpTransport

EXIT_OK, EXIT_AUTH, EXIT_USAGE, EXIT_TRANSPORT = 0, 1, 2, 3


class _UsageExit(Exception):
    def __init__(self, code):
        self.code = code


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports errors through our streams instead of exiting."""

    def __init__(self, *args, out=None, err=None, **kwargs):
        super().__init__(*args, **kwargs)
        self._out, self._err = out, err

    def _print_message(self, message, file=None):
        # argparse passes sys.stdout for --help and sys.stderr for errors
        if message:
            (self._out if file is sys.stdout or file is self._out else self._err).write(message)

    def exit(self, status=0, message=None):
        if message:
            self._err.write(message)
        raise _UsageExit(status)

    def error(self, message):
        self.print_usage(self._err)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cost(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not MIN_COST <= value <= MAX_COST:
        raise argparse.ArgumentTypeError(f"cost must be in [{MIN_COST}, {MAX_COST}]")
    return value


@dataclass(frozen=True)
class CliConfig:
    server: str
    store: Path | None
    cost: int


def build_parser(out, err) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", help=f"server URL (env PQW_SERVER, default {DEFAULT_SERVER})")
    common.add_argument("--store", type=Path, help="directory for the cached public key")
    common.add_argument("--cost", type=_cost, default=DEFAULT_COST, help="bcrypt cost factor")

    kw = {"out": out, "err": err}
    parser = _Parser(prog="pqwallet", description="Password-derived Kyber-512 wallet keys.", **kw)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    sub.add_parser("register", parents=[common], help="create a wallet for a new username", **kw)
    sub.add_parser("unlock", parents=[common], help="derive the keypair and prove possession", **kw)
    rk = sub.add_parser("rekey", parents=[common], help="replace the server pad and the keypair", **kw)
    rk.add_argument("--out", type=Path, help="write the new backup share here")
    bk = sub.add_parser("backup", help="backup share operations", **kw)
    bsub = bk.add_subparsers(dest="backup_command", metavar="ACTION", parser_class=_Parser)
    bsub.required = True
    ex = bsub.add_parser("export", parents=[common], help="unlock and write the backup share", **kw)
    ex.add_argument("--out", type=Path, required=True)
    rc = sub.add_parser("recover", parents=[common], help="rebuild the keypair offline from a backup", **kw)
    rc.add_argument("--backup", type=Path, required=True)
    pk = sub.add_parser("pubkey", parents=[common], help="print the public key fingerprint", **kw)
    pk.add_argument("--full", action="store_true", help="also print the whole public key in hex")

    sv = sub.add_parser("serve", help="run the wallet server", **kw)
    sv.add_argument("--listen", default="127.0.0.1:8470", help="HOST:PORT")
    sv.add_argument("--store", type=Path, help="record store file (env PQW_STORE)")
    sv.add_argument("--rate-limit", type=int, default=10, help="derive requests per uid per minute, 0 disables")
    return parser


def _credentials(env, prompt) -> protocol.Credentials:
    def ask(var, label, secret):
        if env.get(var):
            return env[var]
        return prompt(f"{label}: ", secret)

    return protocol.Credentials(
        ask("PQW_USERNAME", "Username", False),
        ask("PQW_PASSWORD1", "Password 1", True),
        ask("PQW_PASSWORD2", "Password 2", True),
    )


def _default_prompt(label, secret):
    return getpass.getpass(label) if secret else input(label)


def _cache_pk(cfg, handle):
    # Only the public key is ever cached.
    if cfg.store is None:
        return
    cfg.store.mkdir(parents=True, exist_ok=True)
    (cfg.store / f"{handle.uid.hex()}.pk").write_text(handle.keypair.pk.hex() + "\n")


def _write_backup(path, handle):
    path.write_bytes(backup_encode(handle.backup, handle.record_version))


class _Runner:
    def __init__(self, args, env, out, err, prompt, transport_factory):
        self.args, self.env, self.out, self.err = args, env, out, err
        self.prompt = prompt
        self.transport_factory = transport_factory
        self.cfg = CliConfig(
            server=getattr(args, "server", None) or env.get("PQW_SERVER") or DEFAULT_SERVER,
            store=getattr(args, "store", None),
            cost=getattr(args, "cost", DEFAULT_COST),
        )

    def client(self):
        return protocol.WalletClient(self.transport_factory(self.cfg.server))

    def creds(self):
        return _credentials(self.env, self.prompt)

    def report(self, handle):
        _cache_pk(self.cfg, handle)
        self.out.write(f"fingerprint {handle.fingerprint}\n")

    def unlocked(self):
        return protocol.unlock_flow(self.creds(), self.client(), cost=self.cfg.cost)

    def cmd_register(self):
        handle, _ = protocol.register_flow(self.creds(), self.client(), cost=self.cfg.cost)
        self.report(handle)
        self.err.write("registered; run 'pqwallet backup export --out FILE' to save the backup share\n")

    def cmd_unlock(self):
        self.report(self.unlocked())

    def cmd_pubkey(self):
        handle = self.unlocked()
        self.report(handle)
        if self.args.full:
            self.out.write(handle.keypair.pk.hex() + "\n")

    def cmd_rekey(self):
        creds = self.creds()
        client = self.client()
        handle = protocol.unlock_flow(creds, client, cost=self.cfg.cost)
        new = protocol.rekey_flow(handle, creds, client, cost=self.cfg.cost)
        self.report(new)
        self.out.write(f"record version {new.record_version}\n")
        if self.args.out is not None:
            _write_backup(self.args.out, new)
        else:
            self.err.write("earlier backup files no longer recover this wallet; export a new one\n")

    def cmd_backup(self):
        handle = self.unlocked()
        _write_backup(self.args.out, handle)
        self.report(handle)

    def cmd_recover(self):
        try:
            raw = self.args.backup.read_bytes()
        except OSError as exc:
            raise ParameterError(f"cannot read backup file: {exc}") from None
        backup = backup_decode(raw)
        creds = self.creds()
        handle = protocol.offline_recover(creds, backup, cost=self.cfg.cost)
        self.report(handle)
        self.err.write(
            f"recovered from a record version {backup.record_version} backup; "
            "offline recovery cannot tell whether the server has rekeyed since\n"
        )

    def cmd_serve(self):
        from pqwallet.server import RecordStore, WalletServer, make_http_server

        store_path = self.env.get("PQW_STORE") or self.args.store
        store = RecordStore(store_path)
        app = WalletServer(store, rate_limit=self.args.rate_limit or None)
        try:
            httpd = make_http_server(app, self.args.listen)
        except ValueError as exc:
            raise ParameterError(str(exc)) from None
        host, port = httpd.server_address[:2]
        self.out.write(f"listening on {host}:{port}\n")
        self.out.flush()

        def stop(signum, frame):
            raise KeyboardInterrupt

        signal.signal(signal.SIGTERM, stop)
        try:
            httpd.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            httpd.server_close()


def main(argv=None, env=None, stdout=None, stderr=None, prompt=None, transport_factory=HttpTransport) -> int:
    """Run one command and return its exit code."""
    env = os.environ if env is None else env
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser(out, err)
    try:
        args = parser.parse_args(sys.argv[1:] if argv is None else argv)
    except _UsageExit as exc:
        return exc.code
    runner = _Runner(args, env, out, err, prompt or _default_prompt, transport_factory)
    try:
        getattr(runner, f"cmd_{args.command}")()
    except (BadRequest, ParameterError, StoreCorrupt) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ProtocolError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_AUTH
    except TransportError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_TRANSPORT
    except (EOFError, KeyboardInterrupt):
        err.write("aborted\n")
        return EXIT_USAGE
    return EXIT_OK


def run():
    logging.basicConfig(level=os.environ.get("PQW_LOG", "WARNING"))
    sys.exit(main())


if __name__ == "__main__":
    run()
