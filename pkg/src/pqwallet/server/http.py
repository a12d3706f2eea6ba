"""Minimal threaded HTTP/1.1 front end for :class:`WalletServer`."""

import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

log = logging.getLogger(__name__)

MAX_BODY = 64 * 1024
DEFAULT_LISTEN = "127.0.0.1:8470"


def parse_listen(listen: str) -> tuple[str, int]:
    host, sep, port = listen.rpartition(":")
    if not sep or not port.isdigit() or not 0 <= int(port) < 65536:
        raise ValueError(f"--listen expects HOST:PORT, got {listen!r}")
    return host or "127.0.0.1", int(port)


def _handler_for(app):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        server_version = "pqwallet"

        def _respond(self, status, payload):
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def _serve(self, method):
            length = int(self.headers.get("Content-Length") or 0)
            if length > MAX_BODY:
                self._respond(413, b'{"error":"BadRequest","detail":"body too large"}')
                return
            body = self.rfile.read(length) if length else b""
            self._respond(*app.handle_url(method, self.path, body))

        def do_GET(self):
            self._serve("GET")

        def do_POST(self):
            self._serve("POST")

        def log_message(self, fmt, *args):
            log.debug("%s %s", self.address_string(), fmt % args)

    return Handler


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    # the default backlog of 5 resets bursts of concurrent clients
    request_queue_size = 128


def make_http_server(app, listen: str = DEFAULT_LISTEN) -> ThreadingHTTPServer:
    return _Server(parse_listen(listen), _handler_for(app))
