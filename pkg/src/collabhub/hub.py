"""Wires the store, runtime, proxy and auth into one hub instance."""

from __future__ import annotations

from pathlib import Path

from .auth import SessionManager, SignedAssertionProvider, StaticProvider
from .config import HubConfig
from .model import Store
from .proxy import ProxyServer, RouteTable
from .runtime import ContainerManager, EngineDriver, SimDriver


class Hub:
    def __init__(self, config: HubConfig | None = None, store: Store | None = None,
                 autosave: bool = False):
        self.config = config or HubConfig()
        root = Path(self.config.storage_root)
        self.snapshot_path = root / "state.json"
        if store is not None:
            self.store = store
        elif self.snapshot_path.is_file():
            self.store = Store.restore(self.snapshot_path, storage_root=root)
        else:
            self.store = Store(storage_root=root)
        self.autosave = autosave

        if self.config.driver == "engine":
            self.driver = EngineDriver(
                socket_path=self.config.engine_socket,
                host_port_base=self.config.port_base,
            )
        else:
            self.driver = SimDriver(port_base=self.config.port_base)

        self.routes = RouteTable()
        self.containers = ContainerManager(
            self.store,
            self.driver,
            route_table=self.routes,
            start_timeout=self.config.start_timeout,
            max_per_user=self.config.max_containers_per_user,
        )

        if self.config.identity_provider == "signed":
            provider = SignedAssertionProvider(self.config.signing_secret)
        else:
            provider = StaticProvider(self.config.static_tokens)
        self.sessions = SessionManager(
            self.store, provider,
            ttl=self.config.session_ttl,
            auto_provision=self.config.auto_provision,
        )
        self.proxy: ProxyServer | None = None

    def save(self) -> None:
        self.snapshot_path.parent.mkdir(parents=True, exist_ok=True)
        self.store.persist(self.snapshot_path)

    def maybe_save(self) -> None:
        if self.autosave:
            self.save()

    def start_proxy(self) -> ProxyServer:
        self.proxy = ProxyServer(self.routes, port=self.config.proxy_port)
        self.proxy.start_background()
        return self.proxy
