"""Admin command line.

Exit codes: 0 success, 2 usage error (argparse default), 1 operation
error.  Output is line-oriented and stable.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import errors
from .config import HubConfig
from .hub import Hub
from .model import Store, VolumeKind


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collabhub")
    parser.add_argument("--config", help="path to TOML config file")
    parser.add_argument("--storage-root", help="override storage root")
    sub = parser.add_subparsers(dest="command", required=True)

    user = sub.add_parser("user").add_subparsers(dest="action", required=True)
    add = user.add_parser("add")
    add.add_argument("username")
    add.add_argument("email")
    user.add_parser("list")

    ldif = sub.add_parser("ldif").add_subparsers(dest="action", required=True)
    ldif.add_parser("export")

    volume = sub.add_parser("volume").add_subparsers(dest="action", required=True)
    vadd = volume.add_parser("add")
    vadd.add_argument("name")
    vadd.add_argument("kind", choices=[k.value for k in VolumeKind])
    vadd.add_argument("--maintainer", help="maintainer username (functional volumes)")
    vadd.add_argument("--acl", default="", help="comma separated user ids or group names")

    snapshot = sub.add_parser("snapshot").add_subparsers(dest="action", required=True)
    save = snapshot.add_parser("save")
    save.add_argument("path")
    load = snapshot.add_parser("load")
    load.add_argument("path")

    sub.add_parser("serve")
    return parser


def _hub(args: argparse.Namespace) -> Hub:
    config = HubConfig.load(args.config)
    if args.storage_root:
        config.storage_root = args.storage_root
    return Hub(config, autosave=True)


def run(argv: list[str] | None = None, out=sys.stdout) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "user" and args.action == "add":
            hub = _hub(args)
            user = hub.store.register_user(args.username, args.email)
            hub.save()
            print(f"{user.username} {user.numeric_id}", file=out)
        elif args.command == "user" and args.action == "list":
            hub = _hub(args)
            for u in sorted(hub.store.users.values(), key=lambda u: u.numeric_id):
                print(f"{u.username} {u.numeric_id}", file=out)
        elif args.command == "ldif" and args.action == "export":
            hub = _hub(args)
            out.write(hub.store.export_ldif())
        elif args.command == "volume" and args.action == "add":
            hub = _hub(args)
            maintainer_id = None
            if args.maintainer:
                maintainer = hub.store.user_by_name(args.maintainer)
                if maintainer is None:
                    raise errors.UnknownUser(args.maintainer)
                maintainer_id = maintainer.user_id
            acl = {entry for entry in args.acl.split(",") if entry}
            volume = hub.store.add_volume(
                args.name, VolumeKind(args.kind), maintainer_id=maintainer_id, acl=acl
            )
            hub.save()
            print(f"{volume.kind.value} {volume.name} {volume.volume_id}", file=out)
        elif args.command == "snapshot" and args.action == "save":
            hub = _hub(args)
            hub.store.persist(args.path)
            print(f"saved {args.path}", file=out)
        elif args.command == "snapshot" and args.action == "load":
            config = HubConfig.load(args.config)
            if args.storage_root:
                config.storage_root = args.storage_root
            store = Store.restore(args.path, storage_root=config.storage_root)
            hub = Hub(config, store=store, autosave=True)
            hub.save()
            print(f"loaded {args.path}", file=out)
        elif args.command == "serve":
            serve(args)
        return 0
    except errors.HubError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1


def serve(args: argparse.Namespace) -> None:
    import uvicorn

    from .api import create_app

    hub = _hub(args)
    hub.start_proxy()
    app = create_app(hub)
    uvicorn.run(app, host="0.0.0.0", port=hub.config.api_port)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
