"""Command-line entry points: single runs, sweeps, the server, and demo assets."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .config import TransferConfig
from .errors import ConfigurationError, FormatError
from .imaging import RgbImage, load_png, save_png
from .losses import CSV_HEADER
from .network import LossNetwork, load_weights, tiny_network
from .optimize import run_transfer
from .sweeps import SweepSpec, builtin_sweeps, recommended_preset, run_sweep


def resolve_network(weights: str) -> LossNetwork:
    """'tiny:SEED' builds the seeded demo network; anything else is a file path."""
    if weights.startswith("tiny:"):
        try:
            seed = int(weights.split(":", 1)[1])
        except ValueError:
            raise click.BadParameter(f"expected tiny:<integer seed>, got '{weights}'")
        return tiny_network(seed)
    return load_weights(weights)


@click.group()
def main():
    """Optimization-based image stylization with loss logging and sweeps."""


@main.command()
@click.option("--content", required=True, type=click.Path(exists=True), help="Content image (PNG).")
@click.option("--style", required=True, type=click.Path(exists=True), help="Style image (PNG).")
@click.option("--out", required=True, type=click.Path(), help="Output PNG path.")
@click.option("--num-iterations", default=TransferConfig.num_iterations, show_default=True, type=int)
@click.option("--save-every", default=TransferConfig.save_every, show_default=True, type=int)
@click.option("--learning-rate", default=TransferConfig.learning_rate, show_default=True, type=float,
              help="Adam step size in 8-bit pixel units.")
@click.option("--tv-strength", default=TransferConfig.tv_strength, show_default=True, type=float)
@click.option("--content-weight", default=TransferConfig.content_weight, show_default=True, type=float)
@click.option("--style-weight", default=TransferConfig.style_weight, show_default=True, type=float)
@click.option("--optimizer", default=TransferConfig.optimizer, show_default=True,
              type=click.Choice(["adam", "lbfgs"]))
@click.option("--style-target", default=TransferConfig.style_target_mode, show_default=True,
              type=click.Choice(["gram", "spatial_average"]))
@click.option("--init", default=TransferConfig.init, show_default=True,
              type=click.Choice(["noise", "content"]))
@click.option("--seed", default=TransferConfig.seed, show_default=True, type=int)
@click.option("--size", default=TransferConfig.image_size, show_default=True, type=int,
              help="Longest side of the working image.")
@click.option("--weights", default="tiny:7", show_default=True,
              help="Weight file path or tiny:SEED for the built-in network.")
@click.option("--frames-dir", type=click.Path(), default=None,
              help="Also write intermediate frames here.")
@click.option("--losses-csv", type=click.Path(), default=None,
              help="Also write the per-iteration loss log here.")
def run(content, style, out, num_iterations, save_every, learning_rate, tv_strength,
        content_weight, style_weight, optimizer, style_target, init, seed, size,
        weights, frames_dir, losses_csv):
    """Stylize one content image with one style image."""
    try:
        config = TransferConfig(
            num_iterations=num_iterations,
            save_every=save_every,
            optimizer=optimizer,
            learning_rate=learning_rate,
            tv_strength=tv_strength,
            content_weight=content_weight,
            style_weight=style_weight,
            style_target_mode=style_target,
            init=init,
            seed=seed,
            image_size=size,
        ).validate()
        net = resolve_network(weights)
        result = run_transfer(
            load_png(content),
            load_png(style),
            config,
            net,
            on_report=lambda r: click.echo(
                f"iter {r.iteration:4d}  content {r.content:.5g}  style {r.style:.5g}  "
                f"tv {r.tv:.5g}  total {r.total:.5g}"
            ) if r.iteration % max(1, save_every) == 0 else None,
        )
    except (ConfigurationError, FormatError, OSError) as err:
        raise click.ClickException(str(err))

    save_png(result.final_image, out)
    click.echo(f"wrote {out}")
    if frames_dir:
        frames_path = Path(frames_dir)
        frames_path.mkdir(parents=True, exist_ok=True)
        for index, (iteration, frame) in enumerate(result.frames):
            save_png(frame, frames_path / f"{index:04d}_iter{iteration:06d}.png")
        click.echo(f"wrote {len(result.frames)} frames to {frames_dir}")
    if losses_csv:
        with open(losses_csv, "w") as fh:
            fh.write(CSV_HEADER + "\n")
            for report in result.history:
                fh.write(report.csv_row() + "\n")
        click.echo(f"wrote {losses_csv}")


@main.command()
@click.argument("spec_file", type=click.Path(exists=True))
@click.option("--weights", default="tiny:7", show_default=True)
@click.option("--workers", default=None, type=int, help="Thread pool size (default: CPU count).")
def sweep(spec_file, weights, workers):
    """Run a sweep described by a JSON spec file."""
    try:
        spec = SweepSpec.from_json(Path(spec_file).read_text())
        net = resolve_network(weights)
        result = run_sweep(spec, net, workers=workers)
    except (ConfigurationError, FormatError, OSError) as err:
        raise click.ClickException(str(err))
    failed = sum(1 for c in result.cells.values() if c.status != "ok")
    click.echo(f"sweep '{spec.name}': {len(result.cells)} cells, {failed} failed")
    for path in result.sheet_paths:
        click.echo(f"sheet: {path}")


@main.command()
@click.option("--content", "contents", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--style", "styles", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--output", default="sweeps", show_default=True, type=click.Path())
@click.option("--weights", default="tiny:7", show_default=True)
@click.option("--iterations", default=None, type=int,
              help="Override the base iteration count for the non-iteration sweeps.")
@click.option("--size", default=None, type=int, help="Override the working image size.")
@click.option("--workers", default=None, type=int)
def experiments(contents, styles, output, weights, iterations, size, workers):
    """Run all four built-in sweep grids."""
    base = TransferConfig()
    if iterations is not None:
        base = base.with_overrides(num_iterations=iterations)
    if size is not None:
        base = base.with_overrides(image_size=size)
    try:
        net = resolve_network(weights)
        for spec in builtin_sweeps(contents, styles, output, base=base):
            click.echo(f"running sweep '{spec.name}' ...")
            result = run_sweep(spec, net, workers=workers)
            failed = sum(1 for c in result.cells.values() if c.status != "ok")
            click.echo(f"  {len(result.cells)} cells, {failed} failed")
    except (ConfigurationError, FormatError, OSError) as err:
        raise click.ClickException(str(err))


@main.command()
def presets():
    """Print the named engine presets as JSON."""
    click.echo(json.dumps(
        {"default": TransferConfig().to_dict(), "recommended": recommended_preset().to_dict()},
        indent=2,
    ))


@main.command()
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--workers", default=2, show_default=True, type=int, help="Run-executing threads.")
@click.option("--data-dir", default="restyle-data", show_default=True, type=click.Path())
@click.option("--weights", default="tiny:7", show_default=True,
              help="Weight file path or tiny:SEED.")
def serve(port, host, workers, data_dir, weights):
    """Start the HTTP job service."""
    import uvicorn

    from .service import create_app

    try:
        net = resolve_network(weights)
    except (ConfigurationError, FormatError, OSError) as err:
        raise click.ClickException(str(err))
    app = create_app(data_dir, net, workers=workers)
    uvicorn.run(app, host=host, port=port)


@main.command("sample-images")
@click.option("--out", default=".", show_default=True, type=click.Path())
@click.option("--size", default=256, show_default=True, type=int)
def sample_images(out, size):
    """Write a deterministic demo content/style image pair."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    content, style = demo_images(size)
    save_png(content, out_dir / "content.png")
    save_png(style, out_dir / "style.png")
    click.echo(f"wrote {out_dir / 'content.png'} and {out_dir / 'style.png'}")


def demo_images(size: int = 256) -> tuple:
    """A smooth portrait-like content image and a high-contrast texture style."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / (size - 1)

    # Content: soft vertical gradient background with an elliptical "face"
    # and two darker "eyes" so there is large-scale structure to preserve.
    content = np.zeros((size, size, 3))
    content[..., 0] = 0.35 + 0.3 * yy
    content[..., 1] = 0.45 + 0.2 * yy
    content[..., 2] = 0.55 - 0.2 * yy
    face = ((xx - 0.5) / 0.28) ** 2 + ((yy - 0.45) / 0.36) ** 2 < 1.0
    content[face] = [0.85, 0.72, 0.6]
    for ex in (0.4, 0.6):
        eye = ((xx - ex) / 0.045) ** 2 + ((yy - 0.4) / 0.06) ** 2 < 1.0
        content[eye] = [0.15, 0.12, 0.1]
    mouth = (np.abs(yy - 0.58) < 0.015) & (np.abs(xx - 0.5) < 0.08)
    content[mouth] = [0.5, 0.2, 0.2]

    # Style: diagonal two-tone stripes with a sprinkle of seeded blobs,
    # i.e. fine-grained texture with strong color identity.
    style = np.zeros((size, size, 3))
    stripes = (np.sin((xx + yy) * 40.0) > 0.0).astype(np.float64)
    style[..., 0] = 0.9 * stripes + 0.1
    style[..., 1] = 0.3 * stripes + 0.2 * (1 - stripes)
    style[..., 2] = 0.7 * (1 - stripes) + 0.05
    rng = np.random.default_rng(97)
    for _ in range(60):
        cx, cy, r = rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0.01, 0.05)
        blob = (xx - cx) ** 2 + (yy - cy) ** 2 < r ** 2
        style[blob] = rng.uniform(0, 1, size=3)

    to_image = lambda arr: RgbImage(np.rint(np.clip(arr, 0, 1) * 255).astype(np.uint8))
    return to_image(content), to_image(style)


if __name__ == "__main__":
    sys.exit(main())
