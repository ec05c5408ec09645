"""Opt-in integration test against a real container engine.

Skipped unless HUB_ENGINE_TEST=1 and an engine socket is reachable.
Requires a local image named by HUB_ENGINE_IMAGE (default busybox:latest)
that stays alive when run.
"""

import os

import pytest

from collabhub.model import ContainerState, Store
from collabhub.proxy import RouteTable
from collabhub.runtime import ContainerManager, EngineDriver

pytestmark = pytest.mark.skipif(
    os.environ.get("HUB_ENGINE_TEST") != "1",
    reason="set HUB_ENGINE_TEST=1 to run against a real container engine",
)


def test_engine_start_stop_round_trip(tmp_path):
    driver = EngineDriver(
        socket_path=os.environ.get("HUB_ENGINE_SOCKET", "/var/run/docker.sock"))
    store = Store(storage_root=tmp_path / "data")
    alice = store.register_user("alice", "a@x")
    mgr = ContainerManager(store, driver, route_table=RouteTable(),
                           start_timeout=60.0)
    image = os.environ.get("HUB_ENGINE_IMAGE", "busybox:latest")
    c = mgr.create(alice.user_id, "probe", image)
    try:
        address = mgr.start(c.container_id)
        assert c.state is ContainerState.RUNNING
        assert address
    finally:
        mgr.stop(c.container_id)
    assert c.state is ContainerState.STOPPED
