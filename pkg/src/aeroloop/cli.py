"""Command-line client for the evaluation service.

Every subcommand talks to the service API: against a remote base URL when
``--server`` is given, otherwise against an in-process instance of the
same app over an ASGI transport, so offline runs stay deterministic and
need no socket. Exit codes are stable for scripting: 0 ok, 2 config,
3 backend, 4 mesh, 5 manifest, 6 mask.
"""

from __future__ import annotations

import argparse
import base64
import json
import logging
import sys
from pathlib import Path

import httpx

from .bench import load_manifest
from .config import load_config
from .errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_MESH = 4
EXIT_MANIFEST = 5
EXIT_MASK = 6

_CODE_TO_EXIT = {
    "config": EXIT_CONFIG,
    "backend": EXIT_BACKEND,
    "mesh": EXIT_MESH,
    "manifest": EXIT_MANIFEST,
    "mask": EXIT_MASK,
    "internal": 1,
}


class _InProcessTransport(httpx.BaseTransport):
    """Synchronous bridge onto the ASGI app; the default when no server is
    configured, so the CLI needs no socket and stays deterministic."""

    def __init__(self, app):
        self._asgi = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        import asyncio

        async def call():
            response = await self._asgi.handle_async_request(request)
            content = await response.aread()
            await response.aclose()
            return response, content

        response, content = asyncio.run(call())
        return httpx.Response(
            response.status_code, headers=response.headers, content=content
        )

    def close(self) -> None:
        pass


class ServiceClient:
    """HTTP client bound either to a live server or an in-process app."""

    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            from .service import create_app

            self._client = httpx.Client(
                transport=_InProcessTransport(create_app()),
                base_url="http://aeroloop.local",
                timeout=None,
            )

    def post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            _fail(EXIT_BACKEND, f"service unreachable: {exc}")
        body = response.json()
        if response.status_code >= 400:
            error = body.get("error", {})
            code = error.get("code", "internal")
            _fail(_CODE_TO_EXIT.get(code, 1), error.get("message", "request failed"))
        return body

    def close(self):
        self._client.close()


def _fail(exit_code: int, message: str) -> None:
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(exit_code)


def _read_mesh_b64(path: str) -> tuple[str, str]:
    p = Path(path)
    if not p.exists():
        _fail(EXIT_MESH, f"mesh file not found: {p}")
    fmt = p.suffix.lower().lstrip(".") or "stl"
    if fmt not in ("stl", "obj"):
        _fail(EXIT_MESH, f"unsupported mesh format: {fmt}")
    return base64.b64encode(p.read_bytes()).decode("ascii"), fmt


def _rig_payload(args) -> dict:
    return {
        "num_views": args.views,
        "elevation": args.elevation,
        "resolution": args.resolution,
        "ortho_width": args.ortho_width,
    }


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


# -- subcommands ---------------------------------------------------------------


def cmd_run(args, client: ServiceClient) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": config.to_dict(),
        "out_dir": str(out_dir),
        "seed_override": args.seed,
        "wait": True,
    }
    body = client.post("/v1/runs", payload)
    _print_json(
        {
            "run_id": body["run_id"],
            "status": body["status"],
            "steps_completed": body.get("steps_completed"),
            "best_objective": body.get("best_objective"),
            "best_prompt": body.get("best_prompt"),
            "dpar": body.get("dpar"),
            "out_dir": body["out_dir"],
        }
    )
    return EXIT_OK if body["status"] == "done" else 1


def cmd_eval_mesh(args, client: ServiceClient) -> int:
    mesh_b64, fmt = _read_mesh_b64(args.mesh)
    payload = {
        "mesh_b64": mesh_b64,
        "format": fmt,
        "flow": {
            "velocity": [args.speed, 0.0, 0.0],
            "density": args.density,
            "cp_max": args.cp_max,
        },
        "bounds": {"lower": args.bounds[0], "upper": args.bounds[1]},
        "normalization": args.normalization,
    }
    if args.config:
        try:
            config = load_config(args.config)
        except ConfigError as exc:
            _fail(EXIT_CONFIG, str(exc))
        payload["flow"] = config.flow.to_dict()
        payload["bounds"] = {
            "lower": config.physics_bounds.lower,
            "upper": config.physics_bounds.upper,
        }
        payload["normalization"] = config.normalization
    _print_json(client.post("/v1/eval/mesh", payload))
    return EXIT_OK


def cmd_render(args, client: ServiceClient) -> int:
    mesh_b64, fmt = _read_mesh_b64(args.mesh)
    payload = {
        "mesh_b64": mesh_b64,
        "format": fmt,
        "rig": _rig_payload(args),
        "normalize_pose": not args.no_normalize,
    }
    body = client.post("/v1/render", payload)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = []
    for i, view in enumerate(body["views"]):
        (out_dir / f"view_{i:02d}.png").write_bytes(
            base64.b64decode(view["png_b64"])
        )
        (out_dir / f"view_{i:02d}_mask.png").write_bytes(
            base64.b64decode(view["mask_png_b64"])
        )
        meta.append({"azimuth": view["azimuth"], "elevation": view["elevation"]})
    sidecar = {
        "views": meta,
        "ortho_width": body["ortho_width"],
        "resolution": body["resolution"],
    }
    (out_dir / "views_meta.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    _print_json({"out_dir": str(out_dir), "views": len(meta), "empty_scene": body["empty_scene"]})
    return EXIT_OK


def cmd_novelty(args, client: ServiceClient) -> int:
    mesh_a, fmt_a = _read_mesh_b64(args.mesh_a)
    mesh_b, fmt_b = _read_mesh_b64(args.mesh_b)
    if fmt_a != fmt_b:
        _fail(EXIT_MESH, "meshes must share a format")
    payload = {
        "mesh_a_b64": mesh_a,
        "mesh_b_b64": mesh_b,
        "format": fmt_a,
        "rig": _rig_payload(args),
        "feature_levels": args.levels,
    }
    body = client.post("/v1/novelty", payload)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, png in enumerate(body.pop("heatmap_pngs_b64")):
        (out_dir / f"novelty_{i:02d}.png").write_bytes(base64.b64decode(png))
    (out_dir / "novelty.json").write_text(json.dumps(body, indent=2) + "\n")
    _print_json(body)
    return EXIT_OK


def cmd_dpar(args, client: ServiceClient) -> int:
    records = []
    for path in (args.baseline, args.ours):
        try:
            records.append(load_manifest(path))
        except Exception as exc:
            _fail(EXIT_MANIFEST, str(exc))
    body = client.post(
        "/v1/dpar", {"baseline_records": records[0], "ours_records": records[1]}
    )
    print(
        f"baseline DPAR {body['baseline_dpar']:.4f}  "
        f"ours DPAR {body['ours_dpar']:.4f}  improvement {body['improvement']}"
    )
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def _add_rig_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--views", type=int, default=8, help="number of viewpoints")
    parser.add_argument("--elevation", type=float, default=20.0)
    parser.add_argument("--resolution", type=int, default=128)
    parser.add_argument("--ortho-width", type=float, default=2.0, dest="ortho_width")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aeroloop",
        description="Prompt refinement loop for drag-efficient text-to-3D design",
    )
    parser.add_argument("--server", help="base URL of a running service (default: in-process)")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a full refinement run")
    run.add_argument("--config", required=True, help="run config (TOML or JSON)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval-mesh", help="drag/lift and diagnostics for one mesh")
    ev.add_argument("mesh")
    ev.add_argument("--config", help="take flow/bounds from a run config")
    ev.add_argument("--speed", type=float, default=30.0)
    ev.add_argument("--density", type=float, default=1.184)
    ev.add_argument("--cp-max", type=float, default=2.0, dest="cp_max")
    ev.add_argument("--bounds", type=float, nargs=2, default=(-1.0, 1.0))
    ev.add_argument("--normalization", default="half_rho_u2")
    ev.set_defaults(func=cmd_eval_mesh)

    rend = sub.add_parser("render", help="write multi-view PNGs for a mesh")
    rend.add_argument("mesh")
    rend.add_argument("--out", required=True)
    rend.add_argument("--no-normalize", action="store_true")
    _add_rig_args(rend)
    rend.set_defaults(func=cmd_render)

    nov = sub.add_parser("novelty", help="geometric novelty between two meshes")
    nov.add_argument("mesh_a")
    nov.add_argument("mesh_b")
    nov.add_argument("--out", required=True)
    nov.add_argument("--levels", type=int, default=3)
    _add_rig_args(nov)
    nov.set_defaults(func=cmd_novelty)

    dp = sub.add_parser("dpar", help="compare two run manifests")
    dp.add_argument("baseline")
    dp.add_argument("ours")
    dp.set_defaults(func=cmd_dpar)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    client = ServiceClient(args.server)
    try:
        return args.func(args, client)
    finally:
        client.close()


if __name__ == "__main__":
    sys.exit(main())
