"""Command-line interface.

    sealshare server                      run the proxy
    sealshare patient <verb>              init|ingest|pending|review|grant|
                                          decline|revoke|agent
    sealshare practitioner <verb>         init|query|status|retrieve|agent
    sealshare bench pre|search            timing grids (CSV + PNG + table)
    sealshare simulate <scenario>         scripted end-to-end scenarios

Client commands read the server URL from --server or the config saved at
init; the keystore passphrase comes from --passphrase, SEALSHARE_PASSPHRASE,
or an interactive prompt.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import httpx

from . import queryparse
from .bench import bench_pre, bench_search, run_scenario
from .bench.simulate import SCENARIOS
from .client import (
    PatientClient,
    PractitionerClient,
    create_patient_agent,
    create_practitioner_agent,
)
from .client.common import load_config, passphrase_from_env
from .errors import SealShareError


def _http(server: str | None, home: Path) -> httpx.Client:
    url = server or load_config(home).get("server")
    if not url:
        raise SealShareError("no server URL; pass --server or re-run init")
    return httpx.Client(base_url=url, timeout=None)


def _passphrase(value: str | None) -> str:
    resolved = passphrase_from_env(value)
    if resolved is None:
        resolved = click.prompt("keystore passphrase", hide_input=True)
    return resolved


def _echo_json(data) -> None:
    click.echo(json.dumps(data, indent=2, default=str))


@click.group()
def main() -> None:
    """Consent-driven sharing of end-to-end encrypted documents."""


# ---------------------------------------------------------------------- server

@main.command()
@click.option("--bind", default=None, help="host:port (default env SEALSHARE_BIND or 127.0.0.1:8551)")
@click.option("--storage-root", default=None, help="persistence root")
@click.option("--profile", default=None, type=click.Choice(["standard-128", "test-fast"]))
@click.option("--workers", default=None, type=int, help="search worker pool size (0 = inline)")
def server(bind, storage_root, profile, workers) -> None:
    """Run the proxy server."""
    import uvicorn

    from .server import ProxyService, ServiceConfig, create_app

    bind = bind or os.environ.get("SEALSHARE_BIND", "127.0.0.1:8551")
    host, _, port = bind.rpartition(":")
    config = ServiceConfig(
        storage_root=storage_root or os.environ.get("SEALSHARE_STORAGE_ROOT", "./proxy-data"),
        profile=profile or os.environ.get("SEALSHARE_PROFILE", "standard-128"),
        workers=workers if workers is not None else int(os.environ.get("SEALSHARE_WORKERS", "2")),
    )
    app = create_app(ProxyService(config))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


# --------------------------------------------------------------------- patient

@main.group()
@click.option("--home", default="~/.sealshare/patient", show_default=True)
@click.option("--server", "server_url", default=None, help="proxy base URL")
@click.option("--passphrase", default=None, help="keystore passphrase (or SEALSHARE_PASSPHRASE)")
@click.pass_context
def patient(ctx, home, server_url, passphrase) -> None:
    """Patient workflows."""
    ctx.obj = {"home": Path(home).expanduser(), "server": server_url,
               "passphrase": passphrase}


def _patient(ctx) -> PatientClient:
    home = ctx.obj["home"]
    return PatientClient(home, _http(ctx.obj["server"], home),
                         _passphrase(ctx.obj["passphrase"]))


@patient.command("init")
@click.option("--id", "patient_id", required=True)
@click.option("--vocabulary", type=click.Path(exists=True), default=None,
              help="file with one keyword per line (default: built-in 32-term corpus)")
@click.option("--profile", default="standard-128",
              type=click.Choice(["standard-128", "test-fast"]), show_default=True)
@click.option("--overwrite", is_flag=True, help="replace an existing keystore")
@click.pass_context
def patient_init(ctx, patient_id, vocabulary, profile, overwrite) -> None:
    """Generate keys, register with the proxy, create the local keystore."""
    from .bench.corpus import VOCABULARY

    words = (Path(vocabulary).read_text().split() if vocabulary else list(VOCABULARY))
    server_url = ctx.obj["server"]
    if not server_url:
        raise click.UsageError("--server is required for init")
    http = httpx.Client(base_url=server_url, timeout=None)
    PatientClient.init(ctx.obj["home"], http, patient_id,
                       _passphrase(ctx.obj["passphrase"]), words,
                       profile=profile, overwrite=overwrite)
    cfg = load_config(ctx.obj["home"])
    cfg["server"] = server_url
    from .client.common import save_config
    save_config(ctx.obj["home"], cfg)
    click.echo(f"patient {patient_id} registered ({profile})")


@patient.command("ingest")
@click.argument("paths", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def patient_ingest(ctx, paths) -> None:
    """Seal and upload files; each needs a <file>.keywords sidecar."""
    result = _patient(ctx).ingest(list(paths))
    _echo_json(result)


@patient.command("pending")
@click.pass_context
def patient_pending(ctx) -> None:
    client = _patient(ctx)
    rows = client.pending()
    if not rows:
        click.echo("no pending requests")
        return
    for row in rows:
        report = client.review(row["request_id"])
        for line in report.lines():
            click.echo(line)


@patient.command("review")
@click.argument("request_id")
@click.pass_context
def patient_review(ctx, request_id) -> None:
    for line in _patient(ctx).review(request_id).lines():
        click.echo(line)


@patient.command("grant")
@click.argument("request_id")
@click.option("--doc", "docs", multiple=True, required=True,
              help="doc_id to grant (repeatable)")
@click.option("--allow-unmatched", is_flag=True,
              help="explicitly allow granting documents the query did not match")
@click.pass_context
def patient_grant(ctx, request_id, docs, allow_unmatched) -> None:
    _echo_json(_patient(ctx).grant(request_id, list(docs), allow_unmatched))


@patient.command("decline")
@click.argument("request_id")
@click.pass_context
def patient_decline(ctx, request_id) -> None:
    _echo_json(_patient(ctx).decline(request_id))


@patient.command("revoke")
@click.option("--request", "request_id", default=None)
@click.option("--practitioner", "practitioner_id", default=None)
@click.pass_context
def patient_revoke(ctx, request_id, practitioner_id) -> None:
    _echo_json(_patient(ctx).revoke(request_id, practitioner_id))


@patient.command("agent")
@click.option("--bind", default="127.0.0.1:8560", show_default=True)
@click.option("--console-dist", type=click.Path(), default=None,
              help="built console bundle to serve (frontend/dist)")
@click.pass_context
def patient_agent(ctx, bind, console_dist) -> None:
    """Serve the localhost consent agent (backend of the browser console)."""
    import uvicorn

    client = _patient(ctx)
    app = create_patient_agent(client, proxy_url=ctx.obj["server"] or "",
                               console_dist=console_dist)
    host, _, port = bind.rpartition(":")
    if host not in ("127.0.0.1", "localhost", "::1"):
        raise click.UsageError("agent binds to loopback only")
    uvicorn.run(app, host=host, port=int(port))


# ----------------------------------------------------------------- practitioner

@main.group()
@click.option("--home", default="~/.sealshare/practitioner", show_default=True)
@click.option("--server", "server_url", default=None)
@click.option("--passphrase", default=None)
@click.pass_context
def practitioner(ctx, home, server_url, passphrase) -> None:
    """Practitioner workflows."""
    ctx.obj = {"home": Path(home).expanduser(), "server": server_url,
               "passphrase": passphrase}


def _practitioner(ctx) -> PractitionerClient:
    home = ctx.obj["home"]
    return PractitionerClient(home, _http(ctx.obj["server"], home),
                              _passphrase(ctx.obj["passphrase"]))


@practitioner.command("init")
@click.option("--id", "practitioner_id", required=True)
@click.option("--overwrite", is_flag=True)
@click.pass_context
def practitioner_init(ctx, practitioner_id, overwrite) -> None:
    server_url = ctx.obj["server"]
    if not server_url:
        raise click.UsageError("--server is required for init")
    http = httpx.Client(base_url=server_url, timeout=None)
    PractitionerClient.init(ctx.obj["home"], http, practitioner_id,
                            _passphrase(ctx.obj["passphrase"]), overwrite=overwrite)
    cfg = load_config(ctx.obj["home"])
    cfg["server"] = server_url
    from .client.common import save_config
    save_config(ctx.obj["home"], cfg)
    click.echo(f"practitioner {practitioner_id} registered")


@practitioner.command("query")
@click.option("--patient", "patient_id", required=True)
@click.argument("expression")
@click.pass_context
def practitioner_query(ctx, patient_id, expression) -> None:
    """Submit a boolean keyword query, e.g. '"covid-19" OR pneumonia'."""
    client = _practitioner(ctx)
    ast = queryparse.parse(expression)
    click.echo(f"parsed: {queryparse.render(ast)}")
    request_id = client.submit(patient_id, ast)
    click.echo(f"request {request_id} submitted")


@practitioner.command("status")
@click.argument("request_id")
@click.option("--wait", is_flag=True, help="poll with backoff until terminal")
@click.pass_context
def practitioner_status(ctx, request_id, wait) -> None:
    client = _practitioner(ctx)
    view = client.poll(request_id) if wait else client.status(request_id)
    _echo_json(view)


@practitioner.command("retrieve")
@click.argument("request_id")
@click.option("--out", "out_dir", default=".", show_default=True)
@click.pass_context
def practitioner_retrieve(ctx, request_id, out_dir) -> None:
    files = _practitioner(ctx).retrieve(request_id, out_dir)
    for path in files:
        click.echo(str(path))


@practitioner.command("agent")
@click.option("--bind", default="127.0.0.1:8561", show_default=True)
@click.option("--console-dist", type=click.Path(), default=None)
@click.pass_context
def practitioner_agent(ctx, bind, console_dist) -> None:
    """Serve the localhost command endpoint for the console workbench."""
    import uvicorn

    client = _practitioner(ctx)
    app = create_practitioner_agent(client, proxy_url=ctx.obj["server"] or "",
                                    console_dist=console_dist)
    host, _, port = bind.rpartition(":")
    if host not in ("127.0.0.1", "localhost", "::1"):
        raise click.UsageError("agent binds to loopback only")
    uvicorn.run(app, host=host, port=int(port))


# ----------------------------------------------------------------------- bench

@main.group()
def bench() -> None:
    """Timing grids; reports land as CSV + PNG + a printed table."""


@bench.command("pre")
@click.option("--sizes", default="1,10,100",
              help="payload sizes in MiB, comma-separated", show_default=True)
@click.option("--gib", default="", help="opt-in GiB sizes, comma-separated (e.g. 1)")
@click.option("--runs", default=15, show_default=True)
@click.option("--out", "out_dir", default="bench-out", show_default=True)
def bench_pre_cmd(sizes, gib, runs, out_dir) -> None:
    size_list = [int(float(s) * (1 << 20)) for s in sizes.split(",") if s]
    size_list += [int(float(s) * (1 << 30)) for s in gib.split(",") if s]
    report = bench_pre(sizes=size_list, runs=runs)
    click.echo(report.to_text())
    out = Path(out_dir)
    click.echo(f"rows:   {report.write_csv(out / 'pre_times.csv')}")
    click.echo(f"figure: {report.write_figure(out / 'pre_times.png', 'size_bytes')}")


@bench.command("search")
@click.option("--keywords", default="1,4,8", show_default=True)
@click.option("--files", default="1,8,32", show_default=True)
@click.option("--runs", default=15, show_default=True)
@click.option("--profile", default="test-fast",
              type=click.Choice(["standard-128", "test-fast"]), show_default=True)
@click.option("--out", "out_dir", default="bench-out", show_default=True)
@click.option("--seed", default=0, show_default=True)
def bench_search_cmd(keywords, files, runs, profile, out_dir, seed) -> None:
    report = bench_search(
        keywords=[int(k) for k in keywords.split(",") if k],
        files=[int(f) for f in files.split(",") if f],
        runs=runs, profile=profile, seed=seed)
    click.echo(report.to_text())
    out = Path(out_dir)
    click.echo(f"rows:   {report.write_csv(out / 'search_times.csv')}")
    click.echo(f"figure: {report.write_figure(out / 'search_times.png', 'files', 'keywords')}")


# -------------------------------------------------------------------- simulate

@main.command()
@click.argument("scenario", type=click.Choice(SCENARIOS))
@click.option("--seed", default=0, show_default=True)
@click.option("--population-file", type=click.Path(exists=True), default=None,
              help="JSON with n_patients / mean_files / total_files")
@click.option("--paper-scale", is_flag=True,
              help="975 patients, 13372 files (slow)")
@click.option("--profile", default="test-fast",
              type=click.Choice(["standard-128", "test-fast"]), show_default=True)
@click.option("--workdir", default=None, help="defaults to a fresh temp dir")
@click.option("--out", "out_path", default=None, help="write the transcript JSONL here")
def simulate(scenario, seed, population_file, paper_scale, profile, workdir, out_path) -> None:
    """Run a scripted end-to-end scenario and check its postconditions."""
    import tempfile

    population = {"n_patients": 50, "mean_files": 13.71, "total_files": None}
    if population_file:
        population.update(json.loads(Path(population_file).read_text()))
    if paper_scale:
        population = {"n_patients": 975, "mean_files": 13.71, "total_files": 13372}
    workdir = workdir or tempfile.mkdtemp(prefix="sealshare-sim-")

    result = run_scenario(scenario, workdir, seed=seed, profile=profile,
                          n_patients=population["n_patients"],
                          mean_files=population["mean_files"],
                          total_files=population["total_files"])
    for event in result.events:
        detail = {k: v for k, v in event.items()
                  if k not in ("seq", "actor", "action", "ts")}
        click.echo(f"[{event['seq']:03d}] {event['actor']:>12s} {event['action']:<24s} {detail}")
    _echo_json({"timings": result.timings, "postconditions": result.postconditions})
    if out_path:
        result.write_jsonl(out_path)
        click.echo(f"transcript: {out_path}")
    if not result.ok:
        click.echo(f"FAILED postconditions: {result.failures()}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
