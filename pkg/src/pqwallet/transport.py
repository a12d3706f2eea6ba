"""Ways for the wallet client to reach a server.

A transport moves opaque request bytes to the server and returns
``(status, body)``; encoding and error mapping happen in
:class:`pqwallet.protocol.WalletClient`.
"""

import urllib.error
import urllib.parse
import urllib.request

from pqwallet.errors import TransportError

DEFAULT_SERVER = "http://127.0.0.1:8470"


class HttpTransport:
    def __init__(self, base_url: str = DEFAULT_SERVER, timeout: float = 30.0):
        parsed = urllib.parse.urlsplit(base_url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise TransportError(f"not an http(s) URL: {base_url!r}")
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def request(self, method, path, body=None, query=None):
        url = self.base_url + path
        if query:
            url += "?" + urllib.parse.urlencode(query)
        req = urllib.request.Request(url, data=body, method=method)
        if body is not None:
            req.add_header("Content-Type", "application/json")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.status, resp.read()
        except urllib.error.HTTPError as err:
            return err.code, err.read()
        except (urllib.error.URLError, OSError) as err:
            raise TransportError(f"cannot reach {self.base_url}: {err}") from err


class LocalTransport:
    """Call a :class:`~pqwallet.server.app.WalletServer` in-process.

    Requests still go through the byte-level codecs, so this exercises the
    same wire format as HTTP.  Every exchange is appended to ``transcript``.
    """

    def __init__(self, server, base_url="local://wallet"):
        self.server = server
        self.base_url = base_url
        self.transcript = []

    def request(self, method, path, body=None, query=None):
        status, payload = self.server.handle(method, path, query or {}, body or b"")
        self.transcript.append((method, path, dict(query or {}), body or b"", status, payload))
        return status, payload


class OfflineTransport:
    """Refuses every request; used to prove recovery never touches the network."""

    def __init__(self):
        self.calls = 0

    def request(self, method, path, body=None, query=None):
        self.calls += 1
        raise TransportError("offline: no network access permitted")
