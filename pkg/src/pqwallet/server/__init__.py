from pqwallet.server.app import TokenBucket, WalletServer
from pqwallet.server.http import make_http_server
from pqwallet.server.store import RecordStore, ServerRecord

__all__ = ["RecordStore", "ServerRecord", "TokenBucket", "WalletServer", "make_http_server"]
