"""Command-line client for the spvkit service.

Every subcommand speaks the same HTTP API: against a live server when
--url is given, otherwise against an in-process app over an ASGI
transport, so one-shot batch runs need no running daemon. ``spvkit
study`` is the exception; it starts the server itself.
"""

from __future__ import annotations

import asyncio
import json
import random
import sys

import click
import httpx

from .service import ServiceSettings, create_app

DEFAULT_TIMEOUT = 600.0


def _post(url: str | None, endpoint: str, payload: dict) -> dict:
    """POST to a running server, or to an in-process app when no URL is given."""
    if url:
        with httpx.Client(base_url=url, timeout=DEFAULT_TIMEOUT) as client:
            response = client.post(endpoint, json=payload)
    else:

        async def call():
            transport = httpx.ASGITransport(app=create_app(ServiceSettings()))
            async with httpx.AsyncClient(
                transport=transport, base_url="http://spvkit.local", timeout=DEFAULT_TIMEOUT
            ) as client:
                return await client.post(endpoint, json=payload)

        response = asyncio.run(call())
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise click.ClickException(f"{endpoint} failed ({response.status_code}): {detail}")
    return response.json()


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        rows, cols = (int(part) for part in text.lower().split("x"))
        return rows, cols
    except ValueError:
        raise click.BadParameter(f"expected ROWSxCOLS, got {text!r}")


def _load_config_defaults(path: str | None) -> dict:
    if not path:
        return {}
    from .phosphenes import GridConfig

    with open(path, "r", encoding="utf-8") as fh:
        return GridConfig.from_text(fh.read()).to_dict()


def _grid_payload(config_file, grid, canvas, sigma_ratio, cutoff_ratio, dropout, seed) -> dict:
    """Merge defaults < config file < explicit flags, and draw a seed if
    none was given anywhere (printed so the run can be reproduced)."""
    defaults = {
        "rows": 32, "cols": 32, "canvas": 512,
        "sigma_ratio": 4.0, "cutoff_ratio": 2.0, "dropout_rate": 0.0, "seed": None,
    }
    defaults.update(_load_config_defaults(config_file))
    if grid is not None:
        defaults["rows"], defaults["cols"] = _parse_grid(grid)
    for key, value in (
        ("canvas", canvas),
        ("sigma_ratio", sigma_ratio),
        ("cutoff_ratio", cutoff_ratio),
        ("dropout_rate", dropout),
        ("seed", seed),
    ):
        if value is not None:
            defaults[key] = value
    if defaults["seed"] is None:
        defaults["seed"] = random.randrange(2**31)
    return defaults


def grid_options(fn):
    fn = click.option("--grid", default=None, metavar="RxC", help="Electrode grid, e.g. 32x32.")(fn)
    fn = click.option("--canvas", type=int, default=None, help="Output canvas size in pixels.")(fn)
    fn = click.option("--sigma-ratio", type=float, default=None, help="pitch_x / dot sigma.")(fn)
    fn = click.option("--cutoff-ratio", type=float, default=None, help="pitch_x / dot cutoff radius.")(fn)
    fn = click.option("--dropout", type=float, default=None, help="Fraction of phosphenes turned off.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Dropout seed (drawn if omitted).")(fn)
    fn = click.option("--config", "config_file", type=click.Path(exists=True), default=None,
                      help="Key=value file with grid defaults; flags override.")(fn)
    return fn


@click.group()
def main():
    """Simulated prosthetic vision toolkit."""


@main.command()
@click.argument("image", type=click.Path(exists=True))
@click.option("-o", "--output", required=True, type=click.Path(), help="Output PNG path.")
@click.option("--method", type=click.Choice(["direct", "om", "sie-om"]), default="direct")
@click.option("--overlay-dir", type=click.Path(), default=None, help="Overlay manifests directory.")
@click.option("--frame-index", type=int, default=0, help="Overlay manifest index to use.")
@click.option("--levels", type=int, default=8, help="Luminance levels.")
@click.option("--fov-src", type=float, default=None, help="Source horizontal FOV in degrees.")
@click.option("--fov-dst", type=float, default=20.0, help="Target horizontal FOV in degrees.")
@click.option("--debug", is_flag=True, help="Also write an original|composed|rendered strip.")
@grid_options
@click.option("--url", default=None, help="Base URL of a running spvkit server.")
def render(image, output, method, overlay_dir, frame_index, levels, fov_src, fov_dst, debug,
           grid, canvas, sigma_ratio, cutoff_ratio, dropout, seed, config_file, url):
    """Render one image to a phosphene PNG."""
    grid_payload = _grid_payload(config_file, grid, canvas, sigma_ratio, cutoff_ratio, dropout, seed)
    result = _post(url, "/render", {
        "image": image,
        "output": output,
        "method": method,
        "overlay_dir": overlay_dir,
        "frame_index": frame_index,
        "levels": levels,
        "grid": grid_payload,
        "fov_src": fov_src,
        "fov_dst": fov_dst,
        "debug": debug,
    })
    click.echo(f"seed: {result['seed']}")
    click.echo(f"sha256: {result['sha256']}")
    click.echo(f"wrote {result['output']}")
    if result.get("debug_output"):
        click.echo(f"wrote {result['debug_output']}")


@main.command()
@click.argument("frames_dir", type=click.Path(exists=True))
@click.option("-o", "--out-dir", required=True, type=click.Path(), help="Output sequence directory.")
@click.option("--method", type=click.Choice(["direct", "om", "sie-om"]), default="direct")
@click.option("--overlays-dir", type=click.Path(), default=None, help="Per-frame overlay manifests.")
@click.option("--levels", type=int, default=8)
@click.option("--fps", type=float, default=20.0)
@click.option("--window", type=int, default=5, help="Temporal median window (odd).")
@click.option("--fov-src", type=float, default=None)
@click.option("--fov-dst", type=float, default=20.0)
@grid_options
@click.option("--url", default=None)
def video(frames_dir, out_dir, method, overlays_dir, levels, fps, window, fov_src, fov_dst,
          grid, canvas, sigma_ratio, cutoff_ratio, dropout, seed, config_file, url):
    """Process a directory of numbered PNG frames into a phosphene sequence."""
    grid_payload = _grid_payload(config_file, grid, canvas, sigma_ratio, cutoff_ratio, dropout, seed)
    result = _post(url, "/video", {
        "frames_dir": frames_dir,
        "out_dir": out_dir,
        "method": method,
        "overlays_dir": overlays_dir,
        "levels": levels,
        "fps": fps,
        "window": window,
        "grid": grid_payload,
        "fov_src": fov_src,
        "fov_dst": fov_dst,
    })
    click.echo(f"seed: {result['seed']}")
    click.echo(
        f"wrote {result['frame_count']} frames at {result['fps']:g} fps to {result['out_dir']} "
        f"(pipeline {result['processing_fps']:.1f} fps, total {result['elapsed_s']:.2f}s)"
    )


@main.command()
@click.option("--catalog", required=True, type=click.Path(exists=True), help="Stimulus catalog JSON.")
@click.option("--port", type=int, default=8321)
@click.option("--host", default="127.0.0.1")
@click.option("--results-dir", type=click.Path(), default="sessions",
              help="Where session .jsonl files are written.")
@click.option("--seed", type=int, default=None, help="Seed for server-drawn session seeds.")
@click.option("--ui-dir", type=click.Path(), default=None, help="Built study UI to serve at /ui.")
def study(catalog, port, host, results_dir, seed, ui_dir):
    """Serve recognition-study sessions over HTTP."""
    import uvicorn

    if seed is None:
        seed = random.randrange(2**31)
        click.echo(f"seed: {seed}")
    app = create_app(ServiceSettings(
        catalog_path=catalog, results_dir=results_dir, study_seed=seed, ui_dir=ui_dir
    ))
    click.echo(f"serving study sessions on http://{host}:{port} (catalog: {catalog})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.argument("sessions")
@click.option("--catalog", required=True, type=click.Path(exists=True))
@click.option("--group-by", default="method,kind", help="Comma list from method,kind,view.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Directory for report files.")
@click.option("--exclude-late", is_flag=True, help="Drop late-flagged records from scoring.")
@click.option("--meta", "meta_filters", multiple=True, metavar="KEY=VALUE",
              help="Keep only sessions whose header meta matches (repeatable).")
@click.option("--url", default=None)
def score(sessions, catalog, group_by, out_dir, exclude_late, meta_filters, url):
    """Score session files (glob) into result tables."""
    meta_filter = {}
    for item in meta_filters:
        key, sep, value = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected KEY=VALUE, got {item!r}")
        meta_filter[key] = value
    result = _post(url, "/score", {
        "sessions": sessions,
        "catalog": catalog,
        "group_by": group_by,
        "out_dir": out_dir,
        "exclude_late": exclude_late,
        "meta_filter": meta_filter,
    })
    click.echo(result["table"], nl=False)
    click.echo(f"scored {result['n_sessions']} session(s)")
    for path in result["files"]:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    sys.exit(main())
