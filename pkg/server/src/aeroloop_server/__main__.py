"""Serve the model endpoints: `aeroloop-server [--config server.json]`."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .config import ServerConfig, load_config


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="aeroloop-server")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    args = parser.parse_args(argv)

    config = load_config(args.config) if args.config else ServerConfig()
    host = args.host or config.host
    port = args.port or config.port
    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
