from __future__ import annotations

import threading

import pytest
from hypothesis import HealthCheck, settings

from newsdesk.server import NewsServer, ServerConfig
from newsdesk.store import Store

# Cold processes pay a one-off cost building text-strategy tables, which
# trips the too_slow health check on a fresh checkout; wall-clock limits
# have no place in these properties either.
settings.register_profile(
    "newsdesk",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("newsdesk")

# Fast hashing everywhere in tests; the parameter is config, not contract.
TEST_HASH_ITERATIONS = 600


@pytest.fixture
def store(tmp_path):
    return Store(
        tmp_path / "data", fsync=False, hash_iterations=TEST_HASH_ITERATIONS
    )


@pytest.fixture
def live_server(tmp_path):
    """An in-thread server on an ephemeral port with a fresh store."""
    servers = []

    def _make(**config_overrides) -> NewsServer:
        config = ServerConfig(
            bind_host="127.0.0.1",
            bind_port=0,
            data_dir=tmp_path / f"srv{len(servers)}",
            admin_usernames=("chief",),
            hash_iterations=TEST_HASH_ITERATIONS,
            **config_overrides,
        )
        store = Store(
            config.data_dir,
            fsync=False,
            hash_iterations=TEST_HASH_ITERATIONS,
            max_blob_bytes=config.max_upload_bytes,
        )
        server = NewsServer(config, store)
        threading.Thread(
            target=lambda: server.serve_forever(poll_interval=0.02), daemon=True
        ).start()
        servers.append(server)
        return server

    yield _make
    for server in servers:
        server.shutdown()
        server.server_close()


@pytest.fixture
def stub_server():
    from util import RecordingStub

    stub = RecordingStub()
    yield stub
    stub.close()
