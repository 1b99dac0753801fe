"""Command line front end.

Every subcommand is a thin HTTP client of the service: by default an
in-process instance, or a remote one via --url. Exit codes: 0 success,
1 constraint violation (with --strict) or failed checks, 2 bad
configuration, 3 backend or service unavailable.
"""

from __future__ import annotations

import asyncio
import json

import click
import httpx

from .governor import DIAG_CSV_HEADER
from .harness import RUN_CSV_HEADER, TIMING_CSV_HEADER
from .oracle import ORACLE_CSV_HEADER

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_BACKEND = 3


def _request(url: str | None, method: str, path: str, payload: dict | None = None):
    try:
        if url:
            with httpx.Client(base_url=url, timeout=None) as client:
                return client.request(method, path, json=payload)

        from .service.app import app as service_app

        async def go():
            transport = httpx.ASGITransport(app=service_app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://service", timeout=None
            ) as client:
                return await client.request(method, path, json=payload)

        return asyncio.run(go())
    except httpx.TransportError as e:
        click.echo(f"error: cannot reach service: {e}", err=True)
        raise SystemExit(EXIT_BACKEND)


def _checked(resp) -> dict:
    if resp.status_code < 300:
        return resp.json()
    try:
        body = resp.json()
        detail = body.get("detail", resp.text)
        kind = body.get("kind", "")
    except ValueError:
        detail, kind = resp.text, ""
    click.echo(f"error: {detail}", err=True)
    if resp.status_code == 503 or kind == "backend":
        raise SystemExit(EXIT_BACKEND)
    if resp.status_code == 400 or kind in ("config", "domain"):
        raise SystemExit(EXIT_CONFIG)
    raise SystemExit(EXIT_VIOLATION)


def _load_doc(config_path: str | None, preset: str | None) -> dict:
    doc: dict = {}
    if config_path:
        try:
            with open(config_path) as f:
                doc = json.load(f)
        except (OSError, ValueError) as e:
            click.echo(f"error: cannot read config {config_path}: {e}", err=True)
            raise SystemExit(EXIT_CONFIG)
    if preset:
        doc["preset"] = preset
    return doc


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_lines(path: str, lines: list) -> None:
    try:
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        click.echo(f"error: cannot write {path}: {e}", err=True)
        raise SystemExit(EXIT_CONFIG)


@click.group()
def cli():
    """Scenario-robust reference governor toolkit."""


@cli.command()
@click.option("--config", "config_path", type=click.Path(), help="JSON config file.")
@click.option("--preset", help="Named preset to start from.")
@click.option("--out", type=click.Path(), help="Write the per-step trace CSV here.")
@click.option("--diag-out", type=click.Path(), help="Write governor diagnostics CSV here.")
@click.option("--governor-off", is_flag=True, help="Pass the reference straight through.")
@click.option("--strict", is_flag=True, help="Exit 1 if any output violates the bounds.")
@click.option("--url", help="Remote service URL; defaults to in-process.")
def govern(config_path, preset, out, diag_out, governor_off, strict, url):
    """Run the closed loop over the configured reference profile."""
    doc = _load_doc(config_path, preset)
    body = _checked(
        _request(url, "POST", "/run", {"config": doc, "governor_on": not governor_off})
    )
    rows = body["rows"]
    if out:
        names = RUN_CSV_HEADER.split(",")
        lines = [RUN_CSV_HEADER]
        for row in rows:
            lines.append(",".join(_fmt(row[n]) for n in names))
        _write_lines(out, lines)
    if diag_out:
        _write_lines(diag_out, [DIAG_CSV_HEADER] + list(body["diag_rows"]))
    violations = body["violations"]
    click.echo(f"steps={len(rows)} violations={violations} aborted={int(body['aborted'])}")
    if body["aborted"]:
        click.echo(f"aborted: {body['abort_reason']}", err=True)
    if strict and (violations > 0 or body["aborted"]):
        raise SystemExit(EXIT_VIOLATION)


@cli.command()
@click.option("--config", "config_path", type=click.Path(), help="JSON config file.")
@click.option("--preset", help="Named preset to start from.")
@click.option("--nsim", default="1:32:1", show_default=True,
              help="Scenario counts, e.g. '64,128' or '32:8192:32' (inclusive).")
@click.option("--backends", default="serial", show_default=True,
              help="Comma separated backend list.")
@click.option("--reps", default=20, show_default=True, type=int)
@click.option("--modes", default="kernel-only,end-to-end", show_default=True)
@click.option("--out", type=click.Path(), help="Write the timing CSV here.")
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--url", help="Remote service URL; defaults to in-process.")
def bench(config_path, preset, nsim, backends, reps, modes, out, seed, url):
    """Time governor calls across scenario counts and backends."""
    doc = _load_doc(config_path, preset)
    body = _checked(
        _request(url, "POST", "/bench", {
            "config": doc,
            "n_sim": nsim,
            "backends": [b.strip() for b in backends.split(",") if b.strip()],
            "reps": reps,
            "modes": [m.strip() for m in modes.split(",") if m.strip()],
            "seed": seed,
        })
    )
    records = body["records"]
    if out:
        lines = [TIMING_CSV_HEADER]
        for r in records:
            lines.append(",".join([
                r["backend"], str(r["n_sim"]), r["mode"],
                _fmt(r["mean_us"]), _fmt(r["min_us"]), _fmt(r["max_us"]),
                str(r["reps"]),
            ]))
        _write_lines(out, lines)
    for r in records:
        if r["skipped"]:
            click.echo(f"{r['backend']:>10} n_sim={r['n_sim']:<6} {r['mode']:<12} skipped")
        else:
            click.echo(
                f"{r['backend']:>10} n_sim={r['n_sim']:<6} {r['mode']:<12}"
                f" mean={r['mean_us']:.1f}us min={r['min_us']:.1f}us"
            )
    if body["skipped"]:
        click.echo(f"{body['skipped']} cell(s) skipped (backend unavailable)", err=True)


@cli.command()
@click.option("--suite", default="linear", show_default=True,
              type=click.Choice(["linear", "brute"]))
@click.option("--cases", default=100, show_default=True, type=int)
@click.option("--seed", default=2024, show_default=True, type=int)
@click.option("--out", type=click.Path(), help="Write the comparison CSV here.")
@click.option("--url", help="Remote service URL; defaults to in-process.")
def oracle(suite, cases, seed, out, url):
    """Cross-check governor results against independent reference solvers."""
    body = _checked(
        _request(url, "POST", "/oracle",
                 {"suite": suite, "cases": cases, "seed": seed})
    )
    reports = body["reports"]
    if out:
        lines = [ORACLE_CSV_HEADER]
        for r in reports:
            lines.append(",".join([
                r["case"], _fmt(r["expected"]), _fmt(r["actual"]),
                _fmt(r["tolerance"]), str(int(r["passed"])),
            ]))
        _write_lines(out, lines)
    failed = body["failed"]
    for r in reports:
        if not r["passed"]:
            click.echo(
                f"FAIL {r['case']}: expected={r['expected']} actual={r['actual']}"
                f" tol={r['tolerance']}", err=True,
            )
    click.echo(f"{len(reports) - failed}/{len(reports)} oracle checks passed")
    if failed:
        raise SystemExit(EXIT_VIOLATION)


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app as service_app

    uvicorn.run(service_app, host=host, port=port)


def main():
    # click exits 2 on usage errors on its own, matching EXIT_CONFIG.
    cli()


if __name__ == "__main__":
    main()
