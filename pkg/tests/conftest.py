import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pqwallet import protocol
from pqwallet.server import RecordStore, WalletServer
from pqwallet.transport import LocalTransport

# bcrypt cost used by every test that runs the full credential pipeline
COST = 4
DATA = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def server():
    return WalletServer(RecordStore(), rng=random.Random(7), rate_limit=None)


@pytest.fixture
def transport(server):
    return LocalTransport(server)


@pytest.fixture
def client(transport):
    return protocol.WalletClient(transport)


@pytest.fixture
def creds():
    return protocol.Credentials("alice", "correct horse", "battery staple")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.result_lines():
        terminalreporter.write_line(line)
