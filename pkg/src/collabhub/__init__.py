"""Multi-user collaborative analytics hub.

Projects with scoped collaboration, per-user compute containers with
deterministic mount plans, a dynamic routing proxy and versioned scoped
report publishing, fronted by an HTTP/JSON API and an admin CLI.
"""

from .model import Scope, Role, Store  # noqa: F401

__version__ = "0.1.0"
