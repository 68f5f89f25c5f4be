"""Operator CLI: thin client over the service API.

Commands post the run configuration to the pipeline endpoints. Without
--server the requests are dispatched to an in-process application over an
ASGI transport, so no daemon is needed for local runs; with --server they
go to a remote instance over HTTP.

Exit codes: 0 ok, 1 usage, 2 missing/empty input, 3 training divergence.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .config import ConfigError, load_config

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_DIVERGENCE = 3

_ERROR_CODE_EXITS = {
    "usage": EXIT_USAGE,
    "empty_input": EXIT_INPUT,
    "missing_input": EXIT_INPUT,
    "divergence": EXIT_DIVERGENCE,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ndtwin", description=__doc__.split("\n")[0])
    parser.add_argument("--server", help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    def step(name, help_text, needs_arch=False, arch_default=None):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the TOML run config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the output directory")
        if needs_arch:
            p.add_argument(
                "--arch",
                default=arch_default,
                required=arch_default is None,
                help="architecture name"
                + (" or 'all'" if arch_default == "all" else ""),
            )
        return p

    step("ingest", "parse measurement results into probe summaries")
    step("build", "build the knowledge-base snapshot from summaries")
    step("train", "train GNN models on the snapshot", needs_arch=True, arch_default="all")
    step("evaluate", "compute comparison metrics and charts")
    step("qoe", "emit per-application QoE estimates", needs_arch=True)
    step("synth", "generate the synthetic probe-summary fixture")
    step("report", "re-render comparison artifacts")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8177)
    return parser


def _load_payload(args) -> dict:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.output.dir = args.out
    return cfg.to_dict() | {"seed": cfg.seed}


async def _post(server: str | None, path: str, payload: dict) -> tuple[int, dict]:
    if server:
        transport = None
        base_url = server
    else:
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        base_url = "http://ndtwin.internal"
    async with httpx.AsyncClient(transport=transport, base_url=base_url, timeout=None) as client:
        response = await client.post(path, json=payload)
    try:
        body = response.json()
    except json.JSONDecodeError:
        body = {"detail": response.text}
    return response.status_code, body


def _dispatch(server: str | None, path: str, payload: dict) -> tuple[int, dict]:
    try:
        return asyncio.run(_post(server, path, payload))
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _handle_error(status: int, body: dict) -> int:
    code = body.get("error_code", "usage")
    detail = body.get("detail", f"HTTP {status}")
    if isinstance(detail, list):  # pydantic validation errors
        detail = "; ".join(str(e.get("msg", e)) for e in detail)
        code = "usage"
    arch = body.get("architecture")
    suffix = f" (architecture: {arch})" if arch else ""
    print(f"error [{code}]: {detail}{suffix}", file=sys.stderr)
    return _ERROR_CODE_EXITS.get(code, EXIT_USAGE)


def _print_result(command: str, body: dict) -> None:
    if command == "ingest":
        v = body["validation"]
        print(f"accepted {body['accepted_probes']} probes -> {body['summaries_path']}")
        print(
            f"records: {v['accepted']} accepted, {v['rejected']} rejected "
            f"of {v['total_seen']} seen"
        )
    elif command == "build":
        stats = body["stats"]
        print(
            f"snapshot: {body['snapshot_path']} "
            f"({stats['nodes']} nodes, {stats['arcs']} arcs, density {stats['density']:.4f})"
        )
        histogram = stats["degree_histogram"]
        print(f"{'degree':>8} {'nodes':>7}")
        for degree in sorted(histogram, key=int):
            print(f"{degree:>8} {histogram[degree]:>7}")
    elif command == "train":
        for entry in body["results"]:
            flag = " (early stop)" if entry["stopped_early"] else ""
            print(
                f"{entry['architecture']}: {entry['epochs_run']} epochs, "
                f"best epoch {entry['best_epoch']} "
                f"(val loss {entry['best_val_loss']:.6f}){flag}"
            )
    elif command in ("evaluate", "report"):
        print(body["table"])
        print(f"artifacts: {', '.join(body['artifact_paths'])}")
    elif command == "qoe":
        print(
            f"{body['rows']} QoE rows for {body['nodes']} test nodes "
            f"({body['architecture']}) -> {body['csv_path']}"
        )
    elif command == "synth":
        print(f"synthetic fixture: {body['nodes']} probes -> {body['summaries_path']}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK

    try:
        config_payload = _load_payload(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    payload: dict = {"config": config_payload}
    if args.command == "train":
        payload["architecture"] = args.arch
    elif args.command == "qoe":
        payload["architecture"] = args.arch

    status, body = _dispatch(args.server, f"/pipeline/{args.command}", payload)
    if status != 200:
        return _handle_error(status, body)
    _print_result(args.command, body)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
