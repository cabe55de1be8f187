"""Command-line front end; a thin client of the HTTP service.

Subcommands mirror the pipeline: generate fixtures, invert a tessellation,
check Voronoi-ness, run a full roundtrip or a noise sweep, render SVG, dump
growth-model grid labels.  By default the CLI drives the service in-process;
point it at a running instance with --server or VORINV_SERVER.

Exit codes: 0 success (and "is a Voronoi diagram" for check), 2 usage or
input error, 3 not a Voronoi diagram, 4 inversion failure (partial output is
still written).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_VORONOI = 3
EXIT_INVERSION = 4


def _default_seed() -> int:
    try:
        return int(os.environ.get("VORINV_SEED", "0"))
    except ValueError:
        return 0


def _parse_float_list(text: str) -> List[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_seeds(text: str) -> List[int]:
    toks = [tok for tok in text.split(",") if tok.strip()]
    if len(toks) == 1:
        count = int(toks[0])
        return list(range(count))
    return [int(tok) for tok in toks]


def _parse_methods(text: str) -> List[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


class ServiceClient:
    """POSTs to a remote service, or to the in-process app when no URL is set."""

    def __init__(self, server: Optional[str]):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=300.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # starlette warns (as a UserWarning) about its own test client import
                warnings.filterwarnings("ignore", message=".*httpx.*")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict):
        resp = self._client.post(path, json=payload)
        try:
            body = resp.json()
        except ValueError:
            body = {"error": "BadResponse", "category": "input", "message": resp.text}
        return resp.status_code, body


def _fail(body: dict) -> int:
    err = body.get("error", "Error")
    msg = body.get("message", body.get("detail", ""))
    print(f"error: {err}: {msg}", file=sys.stderr)
    return EXIT_INVERSION if body.get("category") == "inversion" else EXIT_INPUT


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_or_print(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vorinv",
        description="Voronoi construction, inversion, recognition, and error studies.")
    parser.add_argument("--server", default=os.environ.get("VORINV_SERVER"),
                        help="base URL of a running service (default: in-process)")
    parser.add_argument("--config", default=None,
                        help="key=value file supplying defaults (flags win)")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a generator file and its Voronoi tessellation")
    g.add_argument("--n", type=int, default=None, help="number of random generators")
    g.add_argument("--seed", type=int, default=_default_seed())
    g.add_argument("--bounds", default=None, help="x0,y0,x1,y1 clip rectangle")
    g.add_argument("--lattice", default=None, choices=["hex"])
    g.add_argument("--rows", type=int, default=4)
    g.add_argument("--cols", type=int, default=4)
    g.add_argument("--spacing", type=float, default=1.0)
    g.add_argument("--jitter", type=float, default=0.0,
                   help="lattice jitter as a fraction of spacing")
    g.add_argument("--output", default="generated",
                   help="output stem; writes <stem>.gen and <stem>.tess")

    iv = sub.add_parser("invert", help="recover generators from a tessellation file")
    iv.add_argument("tessellation")
    iv.add_argument("--method", default="alg1",
                    help="alg1|alg2|alg3|lsq|all (comma list allowed)")
    iv.add_argument("--epsilon", type=float, default=1e-4,
                    help="alg3 ray rotation in radians")
    iv.add_argument("--output", default=None, help="estimates CSV path (default stdout)")

    ck = sub.add_parser("check", help="decide whether a tessellation is a Voronoi diagram")
    ck.add_argument("tessellation")
    ck.add_argument("--tolerance", type=float, default=None,
                    help="candidate spread tolerance (default 1e-7 * diagonal)")

    rt = sub.add_parser("roundtrip", help="invert, re-synthesize, and score vertex error")
    rt.add_argument("tessellation")
    rt.add_argument("--generators", default=None, help="ground-truth generator file")
    rt.add_argument("--methods", default="alg1")
    rt.add_argument("--epsilon", type=float, default=1e-4)
    rt.add_argument("--sigma", default=None, help="comma list of noise levels")
    rt.add_argument("--seeds", default=None, help="seed count or comma list")
    rt.add_argument("--match-radius", type=float, default=None)
    rt.add_argument("--output", default=None, help="report CSV path (default stdout)")

    sw = sub.add_parser("sweep", help="noise sweep over (sigma, seed, method)")
    sw.add_argument("generators")
    sw.add_argument("--sigma", default="0.0", help="comma list of noise levels")
    sw.add_argument("--seeds", default="1", help="seed count or comma list")
    sw.add_argument("--methods", default="alg1,alg2,alg3,lsq")
    sw.add_argument("--epsilon", type=float, default=1e-4)
    sw.add_argument("--match-radius", type=float, default=None)
    sw.add_argument("--single-vertex", action="store_true",
                    help="displace one random vertex far instead of Gaussian noise")
    sw.add_argument("--displacement", type=float, default=None,
                    help="single-vertex displacement (default 0.1 * diagonal)")
    sw.add_argument("--output", default=None, help="report CSV path (default stdout)")

    rd = sub.add_parser("render", help="render a tessellation (plus overlays) as SVG")
    rd.add_argument("tessellation")
    rd.add_argument("--generators", default=None)
    rd.add_argument("--estimates", default=None, help="estimates CSV overlay")
    rd.add_argument("--circles", action="store_true",
                    help="draw the empty circle at every interior vertex")
    rd.add_argument("--size", type=int, default=640)
    rd.add_argument("--output", default=None, help="SVG path (default stdout)")

    gr = sub.add_parser("grid", help="nearest-generator labels on a sample grid")
    gr.add_argument("generators")
    gr.add_argument("--resolution", type=int, default=64)
    gr.add_argument("--output", default=None, help="label grid path (default stdout)")

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)

    return parser


def _apply_config(argv: List[str]) -> List[str]:
    """Insert config-file options right after the subcommand so flags win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return argv
    path = argv[idx + 1]
    try:
        text = _read_text(path)
    except OSError as exc:
        raise SystemExit(f"error: cannot read config {path}: {exc}")
    extra: List[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("_", "-").strip("-")
        value = value.strip().strip('"')
        if value.lower() in ("true", "yes"):
            extra.append(f"--{key}")
        else:
            extra.extend([f"--{key}", value])
    # find the subcommand token (first bare token that is not the config value)
    for pos, tok in enumerate(argv):
        if tok.startswith("-") or (pos > 0 and argv[pos - 1] in ("--server", "--config")):
            continue
        return argv[:pos + 1] + extra + argv[pos + 1:]
    return argv + extra


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config(argv)
    except SystemExit as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK

    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    client = ServiceClient(args.server)
    try:
        return _dispatch(client, args)
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc.filename}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def _dispatch(client: ServiceClient, args) -> int:
    if args.command == "generate":
        payload = {"seed": args.seed, "n": args.n, "lattice": args.lattice,
                   "rows": args.rows, "cols": args.cols, "spacing": args.spacing,
                   "jitter": args.jitter}
        if args.bounds:
            payload["bounds"] = _parse_float_list(args.bounds)
        status, body = client.post("/generate", payload)
        if status != 200:
            return _fail(body)
        stem = args.output
        Path(f"{stem}.gen").write_text(body["generators"], encoding="utf-8")
        Path(f"{stem}.tess").write_text(body["tessellation"], encoding="utf-8")
        print(f"wrote {stem}.gen and {stem}.tess")
        return EXIT_OK

    if args.command == "invert":
        payload = {"tessellation": _read_text(args.tessellation),
                   "methods": _parse_methods(args.method),
                   "epsilon": args.epsilon}
        status, body = client.post("/invert", payload)
        if status != 200:
            return _fail(body)
        _write_or_print(body["csv"], args.output)
        for m in body["methods"]:
            for w in m.get("warnings", []):
                print(f"warning [{m['method']}]: {w}", file=sys.stderr)
        if body["any_failed"]:
            print("error: inversion failed for some polygons or methods", file=sys.stderr)
            return EXIT_INVERSION
        return EXIT_OK

    if args.command == "check":
        payload = {"tessellation": _read_text(args.tessellation),
                   "tolerance": args.tolerance}
        status, body = client.post("/check", payload)
        if status != 200:
            return _fail(body)
        sys.stdout.write(body["report"])
        return EXIT_OK if body["is_voronoi"] else EXIT_NOT_VORONOI

    if args.command == "roundtrip":
        payload = {"tessellation": _read_text(args.tessellation),
                   "methods": _parse_methods(args.methods),
                   "epsilon": args.epsilon,
                   "sigmas": _parse_float_list(args.sigma) if args.sigma else [],
                   "seeds": _parse_seeds(args.seeds) if args.seeds else [],
                   "match_radius": args.match_radius}
        if args.generators:
            payload["generators"] = _read_text(args.generators)
        status, body = client.post("/roundtrip", payload)
        if status != 200:
            return _fail(body)
        _write_or_print(body["csv"], args.output)
        print(body["summary"], end="" if body["summary"].endswith("\n") else "\n",
              file=sys.stderr)
        return EXIT_INVERSION if body["any_failed"] else EXIT_OK

    if args.command == "sweep":
        payload = {"generators": _read_text(args.generators),
                   "sigmas": _parse_float_list(args.sigma),
                   "seeds": _parse_seeds(args.seeds),
                   "methods": _parse_methods(args.methods),
                   "epsilon": args.epsilon,
                   "match_radius": args.match_radius,
                   "single_vertex": args.single_vertex,
                   "displacement": args.displacement}
        status, body = client.post("/sweep", payload)
        if status != 200:
            return _fail(body)
        _write_or_print(body["csv"], args.output)
        print(body["summary"], end="" if body["summary"].endswith("\n") else "\n",
              file=sys.stderr)
        return EXIT_OK

    if args.command == "render":
        payload = {"tessellation": _read_text(args.tessellation),
                   "circles": args.circles, "size": args.size}
        if args.generators:
            payload["generators"] = _read_text(args.generators)
        if args.estimates:
            payload["estimates_csv"] = _read_text(args.estimates)
        status, body = client.post("/render", payload)
        if status != 200:
            return _fail(body)
        _write_or_print(body["svg"], args.output)
        return EXIT_OK

    if args.command == "grid":
        payload = {"generators": _read_text(args.generators),
                   "resolution": args.resolution}
        status, body = client.post("/grid", payload)
        if status != 200:
            return _fail(body)
        _write_or_print(body["labels"], args.output)
        return EXIT_OK

    raise AssertionError(f"unhandled command {args.command}")


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
