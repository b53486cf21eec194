"""Command-line client for the analysis service.

Every subcommand builds a request, posts it to the service and renders the
response. By default the FastAPI app is mounted in-process (no server
needed); --server targets a running instance instead. Exit codes: 0 success,
1 analysis error, 2 usage error.
"""

from __future__ import annotations

import datetime
import json
import sys
from typing import Optional

import click
import httpx

from . import render

FORMATS = click.Choice(["json", "csv", "pretty"])


class _InProcessTransport(httpx.BaseTransport):
    """Synchronous bridge onto the ASGI app: each request runs the async
    transport to completion on a private event loop."""

    def __init__(self, app):
        self._transport = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        import asyncio

        async def _dispatch() -> httpx.Response:
            response = await self._transport.handle_async_request(request)
            await response.aread()
            return response

        response = asyncio.run(_dispatch())
        return httpx.Response(
            status_code=response.status_code,
            headers=response.headers,
            content=response.content,
        )


class Client:
    def __init__(self, server: Optional[str], timeout: float = 300.0):
        if server:
            self._client = httpx.Client(base_url=server, timeout=timeout)
        else:
            from .service import app  # deferred: keeps --help fast

            self._client = httpx.Client(
                transport=_InProcessTransport(app),
                base_url="http://fluidnet.local",
                timeout=timeout,
            )

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        doc = response.json()
        if response.status_code != 200:
            raise AnalysisFailure(doc)
        return doc


class AnalysisFailure(Exception):
    def __init__(self, doc: dict):
        super().__init__(doc.get("message", "analysis failed"))
        self.doc = doc


def _read_net(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise click.UsageError(f"net file not found: {path}")
    except json.JSONDecodeError as exc:
        raise AnalysisFailure({"error": "SYNTAX_ERROR", "message": f"{path}: invalid JSON: {exc.msg}",
                               "details": {"line": exc.lineno, "column": exc.colno}})


def _emit(ctx: click.Context, subcommand: str, doc: dict) -> None:
    fmt = ctx.obj["format"]
    if fmt == "json":
        if ctx.obj["timestamp"]:
            doc = {"generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(), **doc}
        click.echo(render.dumps(doc), nl=False)
    elif fmt == "csv":
        click.echo(render.to_csv(subcommand, doc), nl=False)
    else:
        click.echo(render.pretty(subcommand, doc), nl=False)


def _run(ctx: click.Context, subcommand: str, path: str, payload: dict) -> None:
    try:
        doc = Client(ctx.obj["server"]).post(path, payload)
    except AnalysisFailure as exc:
        click.echo(render.dumps(exc.doc), nl=False, err=True)
        sys.exit(1)
    except httpx.HTTPError as exc:
        click.echo(render.dumps({"error": "CONNECTION", "message": str(exc)}), nl=False, err=True)
        sys.exit(1)
    _emit(ctx, subcommand, doc)


max_states_option = click.option(
    "--max-states", type=int, default=None, envvar="FLUIDNET_MAX_STATES",
    help="State budget for reachability exploration (env: FLUIDNET_MAX_STATES).",
)


@click.group()
@click.option("--server", default=None, help="Base URL of a running service; default runs in-process.")
@click.option("--format", "fmt", type=FORMATS, default="json", show_default=True, help="Output format.")
@click.option("--timestamp/--no-timestamp", default=True, show_default=True,
              help="Include a generated_at field in JSON output.")
@click.pass_context
def main(ctx: click.Context, server: Optional[str], fmt: str, timestamp: bool):
    """Analyze labeled fluid stochastic Petri nets."""
    ctx.obj = {"server": server, "format": fmt, "timestamp": timestamp}


@main.command()
@click.argument("net", type=click.Path())
@max_states_option
@click.pass_context
def validate(ctx, net, max_states):
    """Report net format violations and warnings."""
    _run(ctx, "validate", "/validate", {"net": _read_net(net), "max_states": max_states})


@main.command()
@click.argument("net", type=click.Path())
@max_states_option
@click.pass_context
def reach(ctx, net, max_states):
    """Discrete reachability set and graph."""
    _run(ctx, "reach", "/reach", {"net": _read_net(net), "max_states": max_states})


@main.command()
@click.argument("net", type=click.Path())
@max_states_option
@click.pass_context
def ctmc(ctx, net, max_states):
    """Generator, embedded chain, sojourn statistics and stationary PMF."""
    _run(ctx, "ctmc", "/ctmc", {"net": _read_net(net), "max_states": max_states})


@main.command()
@click.argument("net", type=click.Path())
@click.option("--xmax", type=float, default=10.0, show_default=True, help="Upper end of the fluid grid.")
@click.option("--points", type=int, default=101, show_default=True, help="Number of grid points.")
@max_states_option
@click.pass_context
def sfm(ctx, net, xmax, points, max_states):
    """Stationary fluid distribution by spectral decomposition."""
    _run(ctx, "sfm", "/sfm", {"net": _read_net(net), "xmax": xmax, "points": points,
                              "max_states": max_states})


@main.command()
@click.argument("net_a", type=click.Path())
@click.argument("net_b", type=click.Path())
@max_states_option
@click.pass_context
def bisim(ctx, net_a, net_b, max_states):
    """Decide fluid bisimulation equivalence of two nets."""
    _run(ctx, "bisim", "/bisim", {"net_a": _read_net(net_a), "net_b": _read_net(net_b),
                                  "max_states": max_states})


@main.command("trace-eq")
@click.argument("net_a", type=click.Path())
@click.argument("net_b", type=click.Path())
@click.option("--depth", type=int, default=6, show_default=True, help="Trace length bound.")
@click.option("--exit-rates", is_flag=True, help="Key traces by exit-rate sequences instead of sojourn times.")
@max_states_option
@click.pass_context
def trace_eq(ctx, net_a, net_b, depth, exit_rates, max_states):
    """Decide fluid trace equivalence up to a bounded depth."""
    _run(ctx, "trace-eq", "/trace-eq", {
        "net_a": _read_net(net_a), "net_b": _read_net(net_b),
        "depth": depth, "key": "re" if exit_rates else "sj", "max_states": max_states,
    })


@main.command()
@click.argument("net", type=click.Path())
@click.option("--verify/--no-verify", default=True, show_default=True,
              help="Cross-check the quotient against the full model.")
@max_states_option
@click.pass_context
def quotient(ctx, net, verify, max_states):
    """Quotient by the largest fluid autobisimulation."""
    _run(ctx, "quotient", "/quotient", {"net": _read_net(net), "verify": verify,
                                        "max_states": max_states})


@main.command()
@click.argument("net", type=click.Path())
@click.option("--dialect", type=click.Choice(["flt", "flb"]), required=True)
@click.option("--formula", required=True, help="Formula text in the dialect's grammar.")
@click.option("--sojourns", default=None, help="Comma-separated sojourn-time sequence (flt).")
@click.option("--rates", default=None, help="Comma-separated drift sequence (flt).")
@max_states_option
@click.pass_context
def check(ctx, net, dialect, formula, sojourns, rates, max_states):
    """Evaluate a fluid modal logic formula at the initial marking."""
    _run(ctx, "check", "/check", {
        "net": _read_net(net), "dialect": dialect, "formula": formula,
        "sojourns": sojourns.split(",") if sojourns else None,
        "rates": rates.split(",") if rates else None,
        "max_states": max_states,
    })


@main.command()
@click.argument("net", type=click.Path())
@click.option("--kind", default=None, help="Measure kind (see docs); omit with --batch.")
@click.option("--markings", default=None, help="Marking set, e.g. '1,0;0,1'.")
@click.option("--place", default=None)
@click.option("--k", type=int, default=None)
@click.option("--transition", default=None)
@click.option("--source", default=None, help="Source marking for trav-freq.")
@click.option("--target", default=None, help="Target marking for trav-freq.")
@click.option("--marking", default=None, help="Marking for exit-freq.")
@click.option("--v", type=float, default=None, help="Fluid threshold for fluid-level-above.")
@click.option("--reward", default=None, help="Comma-separated reward vector (reward-prob).")
@click.option("--trav-tokens", default=None, help="TravTokens operand for delay.")
@click.option("--rate", default=None, help="Rate operand for delay.")
@click.option("--batch", type=click.Path(), default=None, help="JSON file with a request list.")
@max_states_option
@click.pass_context
def measures(ctx, net, kind, markings, place, k, transition, source, target, marking,
             v, reward, trav_tokens, rate, batch, max_states):
    """Evaluate steady-state performance measures."""
    if batch:
        with open(batch, "r", encoding="utf-8") as handle:
            requests = json.load(handle)
        if not isinstance(requests, list):
            raise click.UsageError("the batch file must hold a JSON list of requests")
    elif kind:
        params: dict = {}
        if markings:
            params["markings"] = [_parse_marking(m) for m in markings.split(";")]
        if place:
            params["place"] = place
        if k is not None:
            params["k"] = k
        if transition:
            params["transition"] = transition
        if source:
            params["source"] = _parse_marking(source)
        if target:
            params["target"] = _parse_marking(target)
        if marking:
            params["marking"] = _parse_marking(marking)
        if v is not None:
            params["v"] = v
        if reward is not None:
            params["reward"] = reward.split(",")
        if trav_tokens is not None:
            params["trav_tokens"] = trav_tokens
        if rate is not None:
            params["rate"] = rate
        requests = [{"kind": kind, "params": params}]
    else:
        raise click.UsageError("pass --kind or --batch")
    _run(ctx, "measures", "/measures", {"net": _read_net(net), "requests": requests,
                                        "max_states": max_states})


def _parse_marking(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise click.UsageError(f"not a marking: {text!r}")


@main.command()
@click.argument("net", type=click.Path())
@click.option("--horizon", type=float, default=10000.0, show_default=True)
@click.option("--replications", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--warmup", type=float, default=0.2, show_default=True, help="Warmup fraction discarded.")
@click.option("--grid", default="0.5,1,2,5", show_default=True, help="Fluid levels for F estimation.")
@click.option("--dump", type=click.Path(), default=None, help="Write a trajectory CSV to this path.")
@max_states_option
@click.pass_context
def simulate(ctx, net, horizon, replications, seed, warmup, grid, dump, max_states):
    """Monte-Carlo estimation of the stationary quantities."""
    payload = {
        "net": _read_net(net), "horizon": horizon, "replications": replications,
        "seed": seed, "warmup_fraction": warmup,
        "grid": [float(x) for x in grid.split(",")] if grid else [],
        "dump": dump is not None, "max_states": max_states,
    }
    try:
        doc = Client(ctx.obj["server"]).post("/simulate", payload)
    except AnalysisFailure as exc:
        click.echo(render.dumps(exc.doc), nl=False, err=True)
        sys.exit(1)
    if dump:
        with open(dump, "w", encoding="utf-8") as handle:
            handle.write(render.trajectory_csv(doc.pop("trajectories", [])))
    else:
        doc.pop("trajectories", None)
    _emit(ctx, "simulate", doc)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int):
    """Run the analysis service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
