"""Command-line front end.

The CLI is a thin client of the HTTP service: every command assembles a
scenario payload (config file plus flag overrides) and issues the
request against the FastAPI app in-process, so output bytes depend only
on the configuration and flags.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O failure,
5 validation failure, 6 inconclusive validation.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, parse_config, scenario_to_blocks

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4
EXIT_VALIDATION = 5
EXIT_INCONCLUSIVE = 6


class CliError(Exception):
    def __init__(self, code: str, exit_code: int, message: str):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


def _fail(code: str, exit_code: int, message: str) -> CliError:
    return CliError(code, exit_code, message)


def _parse_grid(text: str, flag: str) -> list[float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise _fail("config", EXIT_CONFIG, f"{flag}: empty cost grid")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise _fail("config", EXIT_CONFIG,
                    f"{flag}: expected numbers, got {text!r}") from None


def _add_common(sub: argparse.ArgumentParser, *, grid: bool) -> None:
    sub.add_argument("--config", help="scenario config file")
    sub.add_argument("--preset", help="model preset (example1|example2)")
    sub.add_argument("--trigger",
                     help="trigger kind et|pt|st (sweep: comma list)")
    sub.add_argument("--horizon", type=int, help="prediction horizon M")
    sub.add_argument("--cost", type=float, help="constant communication cost")
    sub.add_argument("--cost-table",
                     help="per-step costs, comma or space separated")
    if grid:
        sub.add_argument("--cost-grid",
                         help="cost grid, comma or space separated")
    sub.add_argument("--steps", type=int, help="simulation horizon K")
    sub.add_argument("--runs", type=int, help="Monte Carlo run count")
    sub.add_argument("--seed", type=int, help="base RNG seed")
    sub.add_argument("--workers", type=int, default=1,
                     help="parallel workers (output bytes are unaffected)")
    sub.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triggerlab",
        description="Event-based remote state estimation laboratory",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    _add_common(subs.add_parser(
        "simulate", help="one closed-loop run, trace CSV"), grid=False)
    _add_common(subs.add_parser(
        "sweep", help="estimation-vs-communication trade-off CSV"), grid=True)
    _add_common(subs.add_parser(
        "period", help="asymptotic self-trigger periods CSV"), grid=True)
    _add_common(subs.add_parser(
        "validate", help="predicted-distribution calibration checks"),
        grid=False)
    serve = subs.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _scenario_blocks(args: argparse.Namespace) -> dict:
    blocks: dict = {"model": {}, "prior": {}, "trigger": {}, "sim": {}}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise _fail("io", EXIT_IO, f"cannot read {args.config}: {exc}")
        try:
            blocks = scenario_to_blocks(parse_config(text))
        except ConfigError as exc:
            raise _fail("config", EXIT_CONFIG, str(exc))
    if args.preset is not None:
        blocks["model"]["preset"] = args.preset
    if args.trigger is not None and args.command != "sweep":
        blocks["trigger"]["kind"] = args.trigger
    if args.horizon is not None:
        blocks["trigger"]["M"] = args.horizon
    if args.cost is not None:
        blocks["trigger"]["cost"] = args.cost
        blocks["trigger"].pop("cost_table", None)
    if args.cost_table is not None:
        blocks["trigger"]["cost_table"] = _parse_grid(args.cost_table,
                                                      "--cost-table")
        if args.cost is None:
            blocks["trigger"].pop("cost", None)
    if args.steps is not None:
        blocks["sim"]["steps"] = args.steps
    if args.runs is not None:
        blocks["sim"]["runs"] = args.runs
    if args.seed is not None:
        blocks["sim"]["seed"] = args.seed
    return blocks


def _post(path: str, payload: dict):
    """Issue a request against the service app without a network socket."""
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service.app import app

    with TestClient(app, raise_server_exceptions=False) as client:
        return client.post(path, json=payload)


def _check_response(resp) -> None:
    if resp.status_code == 200:
        return
    try:
        body = resp.json()
    except ValueError:
        body = {}
    code = body.get("code", "numeric" if resp.status_code >= 500 else "config")
    message = body.get("message", "")
    if not message and "detail" in body:
        # pydantic request validation errors arrive as {"detail": [...]}
        message = str(body["detail"])
    exit_code = EXIT_NUMERIC if code == "numeric" else EXIT_CONFIG
    raise _fail(code, exit_code, message or f"HTTP {resp.status_code}")


def _emit(data: bytes, out: str | None) -> None:
    if out is None:
        sys.stdout.write(data.decode("utf-8"))
        return
    try:
        with open(out, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise _fail("io", EXIT_IO, f"cannot write {out}: {exc}")


def _cmd_simulate(args) -> int:
    resp = _post("/simulate", _scenario_blocks(args))
    _check_response(resp)
    _emit(resp.content, args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if args.trigger is None:
        raise _fail("config", EXIT_CONFIG, "--trigger is required for sweep")
    if args.cost_grid is None:
        raise _fail("config", EXIT_CONFIG, "--cost-grid is required for sweep")
    triggers = [t.strip() for t in args.trigger.split(",") if t.strip()]
    payload = _scenario_blocks(args)
    payload["triggers"] = triggers
    payload["cost_grid"] = _parse_grid(args.cost_grid, "--cost-grid")
    payload["workers"] = args.workers
    resp = _post("/sweep", payload)
    _check_response(resp)
    _emit(resp.content, args.out)
    return EXIT_OK


def _cmd_period(args) -> int:
    if args.cost_grid is None:
        raise _fail("config", EXIT_CONFIG, "--cost-grid is required for period")
    payload = _scenario_blocks(args)
    payload["cost_grid"] = _parse_grid(args.cost_grid, "--cost-grid")
    resp = _post("/period", payload)
    _check_response(resp)
    _emit(resp.content, args.out)
    return EXIT_OK


def _cmd_validate(args) -> int:
    resp = _post("/validate", _scenario_blocks(args))
    _check_response(resp)
    report = resp.json()
    lines = []
    for check in report["checks"]:
        lines.append(
            f"{check['name']}: {check['status']} "
            f"(statistic={check['statistic']:.6g}, "
            f"threshold={check['threshold']:.6g})"
        )
    lines.append(f"overall: {report['status']}")
    _emit(("\n".join(lines) + "\n").encode("utf-8"), args.out)
    status = report["status"]
    if status == "pass":
        return EXIT_OK
    if status == "inconclusive":
        raise _fail("inconclusive", EXIT_INCONCLUSIVE,
                    "validation inconclusive (too few samples)")
    failing = [c["name"] for c in report["checks"] if c["status"] == "fail"]
    raise _fail("validation", EXIT_VALIDATION,
                f"checks failed: {', '.join(failing)}")


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "period": _cmd_period,
    "validate": _cmd_validate,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error:{exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
