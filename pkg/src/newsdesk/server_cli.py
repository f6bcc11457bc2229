"""Command line for the content server: `init` lays out a data
directory with a default config, `run` serves until interrupted."""

from __future__ import annotations

import argparse
import signal
import sys
from pathlib import Path

from .conffile import ConfigError
from .server import NewsServer, ServerConfig
from .store import Store, StoreError

CONFIG_NAME = "server.conf"


def cmd_init(args) -> int:
    data_dir = Path(args.data_dir)
    if data_dir.exists() and any(data_dir.iterdir()):
        print(f"error: {data_dir} already exists and is not empty", file=sys.stderr)
        return 1
    data_dir.mkdir(parents=True, exist_ok=True)
    host, _, port = args.bind.rpartition(":")
    config = ServerConfig(
        bind_host=host or "127.0.0.1",
        bind_port=int(port),
        data_dir=data_dir.resolve(),
        site_title=args.site_title,
        admin_usernames=tuple(args.admin or ()),
    )
    if args.static_dir:
        config.static_dir = Path(args.static_dir).resolve()
    config_path = data_dir / CONFIG_NAME
    config.to_file(config_path)
    Store(config.data_dir)  # materialises the empty record file and media dir
    print(f"initialised {data_dir}")
    print(f"config written to {config_path}")
    return 0


def cmd_run(args) -> int:
    try:
        config = ServerConfig.from_file(args.config)
    except (OSError, ConfigError, ValueError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        server = NewsServer(config)
    except OSError as exc:
        print(f"error: cannot bind {config.bind_address}: {exc}", file=sys.stderr)
        return 1
    except StoreError as exc:
        print(f"error: cannot open store: {exc}", file=sys.stderr)
        return 1

    def _terminate(signum, frame):
        raise KeyboardInterrupt

    signal.signal(signal.SIGTERM, _terminate)
    host, port = server.server_address[:2]
    print(f"listening on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    print("shut down")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newsdesk-server", description="Field-reporting content server"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init", help="create a data directory and config")
    p_init.add_argument("--data-dir", required=True)
    p_init.add_argument("--bind", default="127.0.0.1:8642", metavar="HOST:PORT")
    p_init.add_argument("--site-title", default="Newsdesk")
    p_init.add_argument(
        "--admin", action="append", metavar="USERNAME",
        help="grant admin rights (repeatable)",
    )
    p_init.add_argument("--static-dir", help="serve the admin UI from this directory")
    p_init.set_defaults(func=cmd_init)

    p_run = sub.add_parser("run", help="serve requests until interrupted")
    p_run.add_argument("--config", required=True)
    p_run.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
