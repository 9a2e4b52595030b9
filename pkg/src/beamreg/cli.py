"""Command-line client for the beamreg service.

The CLI is a thin JSON client: it reads a scenario file (or a bundled
scenario name), posts it to the service, writes the returned artifacts to
--out, prints one line per check, and exits 0 only if every enabled check
passed.  By default the service runs in-process over an ASGI transport, so
no server needs to be running; --server http://host:port talks to a remote
instance instead.

  beamreg solve     --scenario two_segment --out results/
  beamreg sweep     --scenario path/to/scenario.json --eps-max-exp 8
  beamreg verify    --scenario winkler
  beamreg bootstrap --scenario smooth
  beamreg serve     --port 8711

Environment: BEAMREG_THREADS caps the sweep worker pool.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys

import httpx

MODES = ("solve", "sweep", "verify", "bootstrap")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamreg",
        description="clamped beam solver with mollified singular "
                    "coefficients: solve / sweep / verify / bootstrap")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run the {mode} pipeline")
        p.add_argument("--scenario", required=True,
                       help="scenario JSON path or bundled scenario name")
        p.add_argument("--out", default=None,
                       help="directory for report artifacts")
        p.add_argument("--eps-min-exp", type=int, default=None,
                       help="override the smallest schedule exponent k_min")
        p.add_argument("--eps-max-exp", type=int, default=None,
                       help="override the largest schedule exponent k_max")
        p.add_argument("--strict", action="store_true",
                       help="treat resolution warnings as errors")
        p.add_argument("--server", default=None,
                       help="service URL (default: in-process)")
        if mode == "solve":
            p.add_argument("--eps", type=float, default=None)
            p.add_argument("--sample-points", type=int, default=101)
            p.add_argument("--stride", type=int, default=10)
        if mode == "sweep":
            p.add_argument("--l-max", type=int, default=None)
        if mode == "verify":
            p.add_argument("--ft-scale", type=float, default=1.0)
    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8711)
    return parser


def _load_scenario_document(ref: str, client) -> dict:
    if os.path.exists(ref):
        with open(ref, "r", encoding="utf-8") as fh:
            return json.load(fh)
    resp = client.get(f"/scenarios/{ref}")
    if resp.status_code != 200:
        raise SystemExit(f"error: scenario {ref!r} is neither a file nor a "
                         f"bundled scenario ({resp.json().get('detail')})")
    return resp.json()


class _Client:
    """Synchronous facade over httpx against a URL or the in-process app."""

    def __init__(self, server: str | None):
        self._server = server

    def _call(self, method: str, path: str, **kw):
        async def go():
            if self._server:
                transport = None
                base = self._server
            else:
                from .service import app
                transport = httpx.ASGITransport(app=app)
                base = "http://beamreg.internal"
            async with httpx.AsyncClient(transport=transport, base_url=base,
                                         timeout=None) as client:
                return await client.request(method, path, **kw)

        return asyncio.run(go())

    def get(self, path: str):
        return self._call("GET", path)

    def post(self, path: str, payload: dict):
        return self._call("POST", path, json=payload)


def _write_artifacts(out_dir: str, mode: str, report: dict) -> list:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    body = dict(report)
    csv_text = body.pop("csv", None)
    report_path = os.path.join(out_dir, f"{mode}_report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, sort_keys=True, indent=1)
        fh.write("\n")
    written.append(report_path)
    if csv_text is not None:
        name = "trajectory.csv" if mode == "solve" else "norms.csv"
        csv_path = os.path.join(out_dir, name)
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        written.append(csv_path)
    return written


def _print_outcome(mode: str, report: dict, passed: bool) -> None:
    for w in report.get("warnings", []):
        print(f"warning: {w}")
    if mode == "verify":
        for e in report.get("entries", []):
            print(f"  eps={e['eps']:.6g}: bound "
                  f"{'holds' if e['bound_holds'] else 'VIOLATED'} "
                  f"(min margin {e['min_margin']:.3e}), "
                  f"identity residual {e['sup_identity_residual']:.3e}")
    if mode == "sweep":
        for name, ok in report.get("checks", {}).items():
            print(f"  check {name}: {'pass' if ok else 'FAIL'}")
    if mode == "bootstrap":
        for e in report.get("entries", []):
            print(f"  eps={e['eps']:.6g}: relative residual "
                  f"{e['relative_residual']:.3e}")
    print(f"{mode}: {'PASS' if passed else 'FAIL'}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.mode == "serve":
        import uvicorn

        from .service import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    client = _Client(args.server)
    scenario_doc = _load_scenario_document(args.scenario, client)
    overrides = {"strict": args.strict}
    if args.eps_min_exp is not None:
        overrides["eps_min_exp"] = args.eps_min_exp
    if args.eps_max_exp is not None:
        overrides["eps_max_exp"] = args.eps_max_exp
    if args.mode == "solve":
        if args.eps is not None:
            overrides["eps"] = args.eps
        overrides["sample_points"] = args.sample_points
        overrides["stride"] = args.stride
    if args.mode == "sweep" and args.l_max is not None:
        overrides["l_max"] = args.l_max
    if args.mode == "verify":
        overrides["ft_scale"] = args.ft_scale

    resp = client.post(f"/{args.mode}",
                       {"scenario": scenario_doc, "overrides": overrides})
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail")
        except Exception:
            detail = resp.text
        print(f"error ({resp.status_code}): {detail}", file=sys.stderr)
        return 2

    body = resp.json()
    report, passed = body["report"], body["passed"]
    if args.out:
        for path in _write_artifacts(args.out, args.mode, report):
            print(f"wrote {path}")
    _print_outcome(args.mode, report, passed)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
