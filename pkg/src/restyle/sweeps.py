"""Declarative parameter-sweep harness and the built-in experiment grids.

A sweep runs one stylization per (content image, style image, value) cell,
writes per-cell frames and loss CSVs, and assembles one labelled contact
sheet per content image (rows = styles, columns = ascending values).
summary.csv is deterministic across reruns; wall-clock goes to timings.csv.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .config import TransferConfig
from .errors import ConfigurationError, NonFiniteError
from .imaging import RgbImage, contact_sheet, failure_cell, load_png, resize_bilinear, save_png
from .losses import CSV_HEADER, LossReport
from .network import LossNetwork
from .optimize import run_transfer

VARIABLE_PARAMETERS = ("num_iterations", "learning_rate", "tv_strength", "content_weight")

ITERATION_GRID = (100, 200, 300, 400, 500)
LEARNING_RATE_GRID = (1e0, 5e0, 1e1, 2e1, 4e1, 6e1)
TV_STRENGTH_GRID = (1e-8, 1e-6, 1e-4, 1e-2, 1e-1, 1e0)
CONTENT_WEIGHT_GRID = (10.0, 50.0, 100.0, 200.0, 300.0)


def recommended_preset() -> TransferConfig:
    """The configuration the sweep results point at for portrait work.

    300 iterations of L-BFGS, smoothing weight 1e-6, content:style 100:100;
    the stored learning rate (2e1) only applies if the optimizer is switched
    to Adam.
    """
    return TransferConfig(
        num_iterations=300,
        optimizer="lbfgs",
        learning_rate=2e1,
        tv_strength=1e-6,
        content_weight=100.0,
        style_weight=100.0,
    ).validate()


@dataclass(frozen=True)
class SweepSpec:
    """One experiment: a base config, one varied parameter, and its values."""

    name: str
    base: TransferConfig
    varied_parameter: str
    values: Tuple
    content_images: Tuple[str, ...]
    style_images: Tuple[str, ...]
    output_dir: str

    def validate(self) -> "SweepSpec":
        if not self.name:
            raise ConfigurationError("sweep name must be non-empty")
        if self.varied_parameter not in VARIABLE_PARAMETERS:
            raise ConfigurationError(
                f"varied_parameter must be one of {VARIABLE_PARAMETERS}, "
                f"got '{self.varied_parameter}'"
            )
        if not self.values:
            raise ConfigurationError("values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigurationError("values must be strictly increasing")
        self.base.validate()
        for value in self.values:
            self.config_for(value)  # rejects values the config cannot hold
        return self

    def config_for(self, value, seed: Optional[int] = None) -> TransferConfig:
        overrides = {self.varied_parameter: value}
        if self.varied_parameter == "num_iterations":
            if not float(value).is_integer() or value < 1:
                raise ConfigurationError(f"iteration counts must be integers >= 1, got {value}")
            overrides["num_iterations"] = int(value)
        if seed is not None:
            overrides["seed"] = seed
        return self.base.with_overrides(**overrides)

    def cell_seed(self, content_idx: int, style_idx: int, value_idx: int) -> int:
        # Stable scheme: base seed plus 10000/100/1 strides per coordinate.
        return self.base.seed + content_idx * 10000 + style_idx * 100 + value_idx

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base": self.base.to_dict(),
            "varied_parameter": self.varied_parameter,
            "values": list(self.values),
            "content_images": list(self.content_images),
            "style_images": list(self.style_images),
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        required = {"name", "varied_parameter", "values"}
        missing = sorted(required - set(data))
        if missing:
            raise ConfigurationError(f"sweep spec missing field(s): {', '.join(missing)}")
        base = TransferConfig.from_dict(data.get("base", {}))
        return cls(
            name=str(data["name"]),
            base=base,
            varied_parameter=str(data["varied_parameter"]),
            values=tuple(data["values"]),
            content_images=tuple(data.get("content_images", ())),
            style_images=tuple(data.get("style_images", ())),
            output_dir=str(data.get("output_dir", "sweeps")),
        ).validate()

    @classmethod
    def from_json(cls, text: str) -> "SweepSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigurationError(f"sweep spec is not valid JSON: {err}") from err
        if not isinstance(data, dict):
            raise ConfigurationError("sweep spec JSON must be an object")
        return cls.from_dict(data)


def builtin_sweeps(
    content_images: Sequence[str] = (),
    style_images: Sequence[str] = (),
    output_dir: str = "sweeps",
    base: Optional[TransferConfig] = None,
) -> List[SweepSpec]:
    """The four standard grids: iterations, Adam learning rate, smoothing
    strength, and content weight (style weight pinned at 100)."""
    base = base if base is not None else TransferConfig()
    common = dict(
        content_images=tuple(content_images),
        style_images=tuple(style_images),
        output_dir=output_dir,
    )
    return [
        SweepSpec(
            name="iterations",
            base=base.with_overrides(optimizer="lbfgs"),
            varied_parameter="num_iterations",
            values=ITERATION_GRID,
            **common,
        ).validate(),
        SweepSpec(
            name="learning-rate",
            base=base.with_overrides(optimizer="adam"),
            varied_parameter="learning_rate",
            values=LEARNING_RATE_GRID,
            **common,
        ).validate(),
        SweepSpec(
            name="tv-strength",
            base=base.with_overrides(optimizer="lbfgs"),
            varied_parameter="tv_strength",
            values=TV_STRENGTH_GRID,
            **common,
        ).validate(),
        SweepSpec(
            name="content-weight",
            base=base.with_overrides(optimizer="lbfgs", style_weight=100.0),
            varied_parameter="content_weight",
            values=CONTENT_WEIGHT_GRID,
            **common,
        ).validate(),
    ]


@dataclass
class CellResult:
    status: str  # "ok" or "failed"
    image: Optional[RgbImage]
    history: List[LossReport]
    runtime_seconds: float
    error: str = ""


@dataclass
class SweepResult:
    spec: SweepSpec
    cells: Dict[Tuple[int, int, int], CellResult] = field(default_factory=dict)
    sheet_paths: List[str] = field(default_factory=list)

    def final_report(self, key) -> Optional[LossReport]:
        cell = self.cells[key]
        return cell.history[-1] if cell.history else None


def format_value(value) -> str:
    return f"{value:g}"


def _run_plain_cell(spec, net, content_img, style_img, seed, value) -> CellResult:
    config = spec.config_for(value, seed=seed)
    started = time.perf_counter()
    try:
        result = run_transfer(content_img, style_img, config, net)
    except NonFiniteError as err:
        return CellResult("failed", None, [], time.perf_counter() - started, error=str(err))
    return CellResult("ok", result.final_image, result.history, time.perf_counter() - started)


def _run_iteration_cells(spec, net, content_img, style_img, seed) -> Dict[int, CellResult]:
    """All num_iterations cells of one (content, style) pair share one run:
    a deterministic optimizer makes every shorter run a prefix of the longest."""
    values = [int(v) for v in spec.values]
    longest = max(values)
    step = math.gcd(*values)
    config = spec.config_for(longest, seed=seed).with_overrides(save_every=step)

    captured: Dict[int, RgbImage] = {}
    tick_times: Dict[int, float] = {}
    wanted = set(values)

    def on_frame(iteration: int, frame: RgbImage) -> None:
        if iteration in wanted:
            captured[iteration] = frame

    def on_report(report: LossReport) -> None:
        tick_times[report.iteration] = time.perf_counter()

    started = time.perf_counter()
    error = ""
    history: List[LossReport] = []
    try:
        result = run_transfer(content_img, style_img, config, net, on_report=on_report, on_frame=on_frame)
        history = result.history
    except NonFiniteError as err:
        error = str(err)

    out: Dict[int, CellResult] = {}
    for k, value in enumerate(values):
        if value in captured and len(history) >= value:
            runtime = tick_times.get(value, time.perf_counter()) - started
            out[k] = CellResult("ok", captured[value], history[:value], runtime)
        else:
            out[k] = CellResult(
                "failed", None, history[: min(len(history), value)],
                time.perf_counter() - started,
                error=error or "run ended before this iteration count",
            )
    return out


def run_sweep(spec: SweepSpec, net: LossNetwork, workers: Optional[int] = None) -> SweepResult:
    """Execute every cell, write artifacts, and return the assembled grid.

    Cell (i, j, k) runs with seed base+i*10000+j*100+k. Cells are
    independent and run on a bounded thread pool. A cell whose loss goes
    non-finite is recorded as failed and rendered as a gray placeholder;
    the sweep itself continues.
    """
    spec.validate()
    if not spec.content_images or not spec.style_images:
        raise ConfigurationError("sweep needs at least one content and one style image")
    missing = [p for p in list(spec.content_images) + list(spec.style_images) if not Path(p).is_file()]
    if missing:
        raise ConfigurationError(f"unreadable input image(s): {missing}")

    contents = [load_png(p) for p in spec.content_images]
    styles = [load_png(p) for p in spec.style_images]

    result = SweepResult(spec=spec)
    iteration_sweep = spec.varied_parameter == "num_iterations"

    tasks = []
    if iteration_sweep:
        for i in range(len(contents)):
            for j in range(len(styles)):
                tasks.append((i, j))
    else:
        for i in range(len(contents)):
            for j in range(len(styles)):
                for k in range(len(spec.values)):
                    tasks.append((i, j, k))

    def run_task(task):
        if iteration_sweep:
            i, j = task
            return task, _run_iteration_cells(
                spec, net, contents[i], styles[j], spec.cell_seed(i, j, 0)
            )
        i, j, k = task
        return task, _run_plain_cell(
            spec, net, contents[i], styles[j], spec.cell_seed(i, j, k), spec.values[k]
        )

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for task, outcome in pool.map(run_task, tasks):
            if iteration_sweep:
                i, j = task
                for k, cell in outcome.items():
                    result.cells[(i, j, k)] = cell
            else:
                result.cells[task] = outcome

    _write_outputs(spec, result, contents)
    return result


def _write_outputs(spec: SweepSpec, result: SweepResult, contents: List[RgbImage]) -> None:
    root = Path(spec.output_dir) / spec.name
    root.mkdir(parents=True, exist_ok=True)
    content_stems = [Path(p).stem for p in spec.content_images]
    style_stems = [Path(p).stem for p in spec.style_images]
    value_labels = [format_value(v) for v in spec.values]

    summary_lines = ["content,style,value,status,final_content,final_style,final_tv,final_total"]
    timing_lines = ["content,style,value,seconds"]

    for i, content_stem in enumerate(content_stems):
        content_dir = root / content_stem
        cells_dir = content_dir / "cells"
        cells_dir.mkdir(parents=True, exist_ok=True)

        # Cell size must be uniform for the sheet; failures use a placeholder
        # sized like the resized content image.
        reference = resize_bilinear(contents[i], spec.base.image_size)
        grid: List[List[RgbImage]] = []
        for j, style_stem in enumerate(style_stems):
            row: List[RgbImage] = []
            for k, value_label in enumerate(value_labels):
                cell = result.cells[(i, j, k)]
                stem = f"{style_stem}_{value_label}"
                if cell.image is not None:
                    save_png(cell.image, cells_dir / f"{stem}.png")
                    row.append(cell.image)
                else:
                    row.append(failure_cell(reference.width, reference.height))
                with open(cells_dir / f"{stem}.csv", "w") as fh:
                    fh.write(CSV_HEADER + "\n")
                    for report in cell.history:
                        fh.write(report.csv_row() + "\n")

                final = result.final_report((i, j, k))
                summary_lines.append(
                    f"{content_stem},{style_stem},{value_label},{cell.status},"
                    + (
                        f"{final.content!r},{final.style!r},{final.tv!r},{final.total!r}"
                        if final is not None and cell.status == "ok"
                        else ",,,"
                    )
                )
                timing_lines.append(
                    f"{content_stem},{style_stem},{value_label},{cell.runtime_seconds:.3f}"
                )
            grid.append(row)

        sheet = contact_sheet(grid, row_labels=style_stems, col_labels=value_labels)
        sheet_path = content_dir / "sheet.png"
        save_png(sheet, sheet_path)
        result.sheet_paths.append(str(sheet_path))

    (root / "summary.csv").write_text("\n".join(summary_lines) + "\n")
    (root / "timings.csv").write_text("\n".join(timing_lines) + "\n")
