"""Container lifecycle behind a driver abstraction.

Two drivers share one observable contract: the in-process simulated
driver (default, used by the whole test suite) and a client for the
standard container-engine HTTP API over a local socket.  The manager
serializes operations per container and keeps store state, upstream
address and proxy route mutually consistent.
"""

from __future__ import annotations

import random
import threading
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Protocol

from . import errors
from .model import Container, ContainerState, Store
from .mounts import MountPlan, plan_mounts, validate_plan

DEFAULT_START_TIMEOUT = 60.0
DEFAULT_PORT_BASE = 40000


@dataclass
class UsageSample:
    container_id: str
    cpu_fraction: float
    memory_bytes: int
    sampled_at: float

    def to_dict(self) -> dict:
        return {
            "container_id": self.container_id,
            "cpu_fraction": self.cpu_fraction,
            "memory_bytes": self.memory_bytes,
            "sampled_at": self.sampled_at,
        }


class RuntimeDriver(Protocol):
    def start_workload(self, container_id: str, image_ref: str, plan: MountPlan) -> str:
        """Create the backing workload and return its upstream host:port."""

    def stop_workload(self, container_id: str) -> None: ...

    def workload_alive(self, container_id: str) -> bool: ...

    def sample_usage(self, container_id: str) -> UsageSample | None: ...


class SimDriver:
    """Deterministic in-process driver with fault injection.

    Ports are allocated sequentially from ``port_base``; usage samples
    come from a seeded generator so repeated runs reproduce exactly.
    """

    def __init__(self, port_base: int = DEFAULT_PORT_BASE, seed: int = 0,
                 known_images: set[str] | None = None):
        self._lock = threading.Lock()
        self._port_base = port_base
        self._next_port = port_base
        self._rng = random.Random(seed)
        self._known_images = known_images
        self.workloads: dict[str, str] = {}  # container_id -> address
        self.spawn_calls: list[str] = []
        self.unavailable = False
        self.start_delay = 0.0

    # fault injection hooks -------------------------------------------------

    def kill(self, container_id: str) -> None:
        with self._lock:
            self.workloads.pop(container_id, None)

    def set_unavailable(self, flag: bool) -> None:
        self.unavailable = flag

    # driver contract -------------------------------------------------------

    def start_workload(self, container_id: str, image_ref: str, plan: MountPlan) -> str:
        if self.unavailable:
            raise errors.DriverUnavailable("sim driver marked unavailable")
        if self._known_images is not None and image_ref not in self._known_images:
            raise errors.ImageNotFound(image_ref)
        if self.start_delay:
            time.sleep(self.start_delay)
        with self._lock:
            if container_id in self.workloads:
                return self.workloads[container_id]
            address = f"127.0.0.1:{self._next_port}"
            self._next_port += 1
            self.workloads[container_id] = address
            self.spawn_calls.append(container_id)
            return address

    def stop_workload(self, container_id: str) -> None:
        if self.unavailable:
            raise errors.DriverUnavailable("sim driver marked unavailable")
        with self._lock:
            self.workloads.pop(container_id, None)

    def workload_alive(self, container_id: str) -> bool:
        with self._lock:
            return container_id in self.workloads

    def sample_usage(self, container_id: str) -> UsageSample | None:
        with self._lock:
            if container_id not in self.workloads:
                return None
            return UsageSample(
                container_id=container_id,
                cpu_fraction=round(self._rng.random(), 6),
                memory_bytes=self._rng.randrange(64, 4096) * 1024 * 1024,
                sampled_at=time.time(),
            )


class EngineDriver:
    """Client for the container-engine REST API over a local unix socket.

    Exercised only by the opt-in integration test; everything else runs
    against the sim driver.
    """

    def __init__(self, socket_path: str = "/var/run/docker.sock",
                 api_version: str = "v1.43", host_port_base: int = DEFAULT_PORT_BASE):
        import httpx

        self._base = f"http://localhost/{api_version}"
        self._client = httpx.Client(
            transport=httpx.HTTPTransport(uds=socket_path), timeout=30.0
        )
        self._next_port = host_port_base
        self._names: dict[str, str] = {}

    def _request(self, method: str, path: str, **kw):
        import httpx

        try:
            return self._client.request(method, self._base + path, **kw)
        except httpx.TransportError as exc:
            raise errors.DriverUnavailable(str(exc)) from None

    def start_workload(self, container_id: str, image_ref: str, plan: MountPlan) -> str:
        port = self._next_port
        self._next_port += 1
        binds = [
            f"{e.source}:{e.target}:{'ro' if e.mode == 'ro' else 'rw'}"
            for e in plan.entries
        ]
        resp = self._request(
            "POST",
            "/containers/create",
            params={"name": f"hub-{container_id}"},
            json={
                "Image": image_ref,
                "User": str(plan.numeric_id),
                "HostConfig": {
                    "Binds": binds,
                    "PortBindings": {"8888/tcp": [{"HostPort": str(port)}]},
                },
            },
        )
        if resp.status_code == 404:
            raise errors.ImageNotFound(image_ref)
        resp.raise_for_status()
        engine_id = resp.json()["Id"]
        self._names[container_id] = engine_id
        self._request("POST", f"/containers/{engine_id}/start").raise_for_status()
        return f"127.0.0.1:{port}"

    def stop_workload(self, container_id: str) -> None:
        engine_id = self._names.get(container_id)
        if engine_id is None:
            return
        resp = self._request("POST", f"/containers/{engine_id}/stop")
        if resp.status_code not in (204, 304, 404):
            resp.raise_for_status()

    def workload_alive(self, container_id: str) -> bool:
        engine_id = self._names.get(container_id)
        if engine_id is None:
            return False
        resp = self._request("GET", f"/containers/{engine_id}/json")
        return resp.status_code == 200 and resp.json()["State"]["Running"]

    def sample_usage(self, container_id: str) -> UsageSample | None:
        engine_id = self._names.get(container_id)
        if engine_id is None:
            return None
        resp = self._request("GET", f"/containers/{engine_id}/stats", params={"stream": "false"})
        if resp.status_code != 200:
            return None
        stats = resp.json()
        cpu = stats.get("cpu_stats", {})
        pre = stats.get("precpu_stats", {})
        delta = cpu.get("cpu_usage", {}).get("total_usage", 0) - pre.get("cpu_usage", {}).get("total_usage", 0)
        sys_delta = cpu.get("system_cpu_usage", 0) - pre.get("system_cpu_usage", 0)
        fraction = min(1.0, max(0.0, delta / sys_delta)) if sys_delta else 0.0
        return UsageSample(
            container_id=container_id,
            cpu_fraction=fraction,
            memory_bytes=stats.get("memory_stats", {}).get("usage", 0),
            sampled_at=time.time(),
        )


class ContainerManager:
    """Binds store state, a driver and the proxy route table together."""

    def __init__(self, store: Store, driver: RuntimeDriver, route_table=None,
                 start_timeout: float = DEFAULT_START_TIMEOUT,
                 max_per_user: int | None = None):
        self.store = store
        self.driver = driver
        self.routes = route_table
        self.start_timeout = start_timeout
        self.max_per_user = max_per_user
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    def _container_lock(self, container_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[container_id]

    def create(self, owner_id: str, name: str, image_ref: str,
               project_ids: list[str] | None = None,
               functional_volume_ids: list[str] | None = None) -> Container:
        with self.store.lock:
            self.store.get_user(owner_id)
            if self.max_per_user is not None:
                owned = sum(1 for c in self.store.containers.values() if c.owner_id == owner_id)
                if owned >= self.max_per_user:
                    raise errors.TooManyContainers(f"limit {self.max_per_user} reached")
            for pid in project_ids or ():
                project = self.store.get_project(pid)
                if owner_id not in project.members:
                    raise errors.NotMemberOfProject(pid)
            for vid in functional_volume_ids or ():
                self.store.get_volume(vid)
            from .model import _new_id

            container = Container(
                container_id=_new_id("c"),
                owner_id=owner_id,
                name=name,
                image_ref=image_ref,
                attached_project_ids=list(project_ids or ()),
                attached_functional_volume_ids=set(functional_volume_ids or ()),
            )
            self.store.containers[container.container_id] = container
            return container

    def start(self, container_id: str) -> str:
        """Two-phase start: mark starting, spawn the workload, go running.

        A second start on a container already starting blocks on the
        per-container lock and then returns the same address without a
        second spawn.
        """
        lock = self._container_lock(container_id)
        with lock:
            with self.store.lock:
                container = self.store.get_container(container_id)
                if container.state is ContainerState.RUNNING:
                    assert container.upstream_address is not None
                    return container.upstream_address
                if container.state not in (ContainerState.CREATED, ContainerState.STOPPED):
                    raise errors.InvalidContainerState(container.state.value)
                plan = plan_mounts(self.store, container)
                if validate_plan(plan):
                    raise errors.HubError("internal: generated plan failed validation")
                container.state = ContainerState.STARTING
            deadline = time.monotonic() + self.start_timeout
            try:
                address = self.driver.start_workload(container_id, container.image_ref, plan)
                while not self.driver.workload_alive(container_id):
                    if time.monotonic() > deadline:
                        raise errors.StartTimeout(container_id)
                    time.sleep(0.01)
            except Exception:
                with self.store.lock:
                    container.state = ContainerState.FAILED
                    container.upstream_address = None
                    container.route_prefix = None
                raise
            prefix = f"/notebook/{container_id}"
            with self.store.lock:
                container.upstream_address = address
                container.route_prefix = prefix
                container.state = ContainerState.RUNNING
            if self.routes is not None:
                self.routes.add_route(prefix, address)
            return address

    def stop(self, container_id: str) -> None:
        lock = self._container_lock(container_id)
        with lock:
            with self.store.lock:
                container = self.store.get_container(container_id)
                if container.state is ContainerState.STOPPED:
                    return
                if container.state is ContainerState.CREATED:
                    return
                container.state = ContainerState.STOPPING
                prefix = container.route_prefix
            self.driver.stop_workload(container_id)
            if self.routes is not None and prefix is not None:
                self.routes.remove_route(prefix)
            with self.store.lock:
                container.upstream_address = None
                container.route_prefix = None
                container.state = ContainerState.STOPPED

    def inspect(self, container_id: str) -> Container:
        """Reflect driver truth; a vanished workload flips state to failed."""
        with self.store.lock:
            container = self.store.get_container(container_id)
            state = container.state
            prefix = container.route_prefix
        if state is ContainerState.RUNNING and not self.driver.workload_alive(container_id):
            with self.store.lock:
                if container.state is ContainerState.RUNNING:
                    container.state = ContainerState.FAILED
                    container.upstream_address = None
                    container.route_prefix = None
            if self.routes is not None and prefix is not None:
                self.routes.remove_route(prefix)
        return container

    def usage(self) -> list[UsageSample]:
        with self.store.lock:
            running = [
                c.container_id
                for c in sorted(self.store.containers.values(), key=lambda c: c.container_id)
                if c.state is ContainerState.RUNNING
            ]
        samples = []
        for cid in running:
            sample = self.driver.sample_usage(cid)
            if sample is not None:
                samples.append(sample)
        return samples
