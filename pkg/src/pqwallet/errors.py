"""Exception types shared across the wallet package."""


class WalletError(Exception):
    """Base class for every error raised by pqwallet."""


class ParameterError(WalletError, ValueError):
    """An argument violated a documented precondition."""


class NoInverse(WalletError, ArithmeticError):
    def __init__(self, a, n, g):
        super().__init__(f"{a} has no inverse modulo {n} (gcd = {g})")
        self.a, self.n, self.gcd = a, n, g


class ReconstructFailed(WalletError):
    """Shares were inconsistent or noisier than the public noise bound."""


class StoreCorrupt(WalletError):
    pass


class TransportError(WalletError):
    """The server could not be reached or answered with garbage."""


class ProtocolError(WalletError):
    """An error carried over the wire as ``{"error": code, "detail": ...}``.

    Subclasses fix ``code`` and ``status``; :func:`protocol_error` maps a code
    received from the server back to the matching subclass.
    """

    code = "ProtocolError"
    status = 400

    def __init__(self, detail=""):
        super().__init__(f"{self.code}: {detail}" if detail else self.code)
        self.detail = detail


class UserExists(ProtocolError):
    code, status = "UserExists", 409


class UnknownUser(ProtocolError):
    code, status = "UnknownUser", 404


class AuthFailed(ProtocolError):
    code, status = "AuthFailed", 401


class RateLimited(ProtocolError):
    code, status = "RateLimited", 429


class VersionConflict(ProtocolError):
    code, status = "VersionConflict", 409


class BadRequest(ProtocolError):
    code, status = "BadRequest", 400

    def __init__(self, detail="", path=""):
        super().__init__(f"{path}: {detail}" if path else detail)
        self.path = path


_BY_CODE = {
    cls.code: cls
    for cls in (UserExists, UnknownUser, AuthFailed, RateLimited, VersionConflict, BadRequest)
}


def protocol_error(code, detail=""):
    cls = _BY_CODE.get(code)
    if cls is None:
        raise TransportError(f"unknown error code from server: {code!r}")
    return cls(detail)
