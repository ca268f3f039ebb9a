"""HTTP job service: submit runs and sweeps, poll frames and loss curves.

Jobs queue onto a bounded in-memory queue and execute on a small pool of
worker threads; every artifact (config, frames, loss CSV, metadata) is a
plain file under data_dir/jobs/<id>, so a restarted service re-lists all
finished jobs from disk. Progress is exposed by polling: losses stream as
CSV rows already produced, frames are fetchable as soon as they are saved,
and cancellation takes effect at the next iteration boundary.
"""

from __future__ import annotations

import json
import queue
import shutil
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from .config import TransferConfig
from .errors import ConfigurationError, FormatError
from .imaging import decode_png, encode_png
from .losses import CSV_HEADER, LossReport
from .network import LossNetwork
from .optimize import run_transfer
from .sweeps import SweepSpec, recommended_preset, run_sweep

QUEUE_LIMIT = 64
TERMINAL = ("done", "failed", "cancelled")


@dataclass
class Job:
    id: str
    kind: str                      # "single" | "sweep"
    status: str = "queued"         # queued -> running -> done|failed|cancelled
    config: dict = field(default_factory=dict)
    created: float = 0.0
    started: Optional[float] = None
    finished: Optional[float] = None
    error: str = ""
    frame_iterations: List[int] = field(default_factory=list)
    loss_rows: List[str] = field(default_factory=list)
    cancel_event: threading.Event = field(default_factory=threading.Event)

    def summary(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "status": self.status,
            "config": self.config,
            "created": self.created,
            "started": self.started,
            "finished": self.finished,
            "error": self.error,
            "frame_count": len(self.frame_iterations),
            "frame_iterations": list(self.frame_iterations),
            "iterations_logged": len(self.loss_rows),
        }


class JobService:
    """Registry + worker pool behind the HTTP routes."""

    def __init__(self, data_dir, net: LossNetwork, workers: int = 2,
                 queue_limit: int = QUEUE_LIMIT):
        self.data_dir = Path(data_dir)
        self.jobs_dir = self.data_dir / "jobs"
        self.jobs_dir.mkdir(parents=True, exist_ok=True)
        self.net = net
        self.lock = threading.Lock()
        self.jobs: Dict[str, Job] = {}
        self.queue: "queue.Queue[str]" = queue.Queue(maxsize=queue_limit)
        self._reload_from_disk()
        self.workers = [
            threading.Thread(target=self._worker_loop, name=f"restyle-worker-{i}", daemon=True)
            for i in range(workers)
        ]
        for w in self.workers:
            w.start()

    # -- persistence -----------------------------------------------------------

    def job_dir(self, job_id: str) -> Path:
        return self.jobs_dir / job_id

    def _write_meta(self, job: Job) -> None:
        meta = job.summary()
        (self.job_dir(job.id) / "meta.json").write_text(json.dumps(meta, indent=2))

    def _reload_from_disk(self) -> None:
        for meta_path in sorted(self.jobs_dir.glob("*/meta.json")):
            try:
                meta = json.loads(meta_path.read_text())
            except (OSError, json.JSONDecodeError):
                continue
            job = Job(
                id=meta["id"],
                kind=meta.get("kind", "single"),
                status=meta.get("status", "failed"),
                config=meta.get("config", {}),
                created=meta.get("created", 0.0),
                started=meta.get("started"),
                finished=meta.get("finished"),
                error=meta.get("error", ""),
                frame_iterations=list(meta.get("frame_iterations", [])),
            )
            if job.status not in TERMINAL:
                job.status = "failed"
                job.error = "interrupted by service shutdown"
            losses = self.job_dir(job.id) / "losses.csv"
            if losses.is_file():
                rows = losses.read_text().splitlines()
                job.loss_rows = rows[1:] if rows and rows[0] == CSV_HEADER else rows
            self.jobs[job.id] = job
            self._write_meta(job)

    # -- job lifecycle -----------------------------------------------------------

    def submit(self, kind: str, config: dict, setup) -> Job:
        job = Job(id=uuid.uuid4().hex[:12], kind=kind, config=config, created=time.time())
        jdir = self.job_dir(job.id)
        (jdir / "frames").mkdir(parents=True, exist_ok=True)
        setup(jdir)
        (jdir / "config.json").write_text(json.dumps(config, indent=2))
        with self.lock:
            self.jobs[job.id] = job
        self._write_meta(job)
        try:
            self.queue.put_nowait(job.id)
        except queue.Full:
            with self.lock:
                del self.jobs[job.id]
            shutil.rmtree(jdir, ignore_errors=True)
            raise
        return job

    def get(self, job_id: str) -> Optional[Job]:
        with self.lock:
            return self.jobs.get(job_id)

    def cancel(self, job_id: str) -> bool:
        job = self.get(job_id)
        if job is None:
            return False
        job.cancel_event.set()
        with self.lock:
            if job.status == "queued":
                job.status = "cancelled"
                job.finished = time.time()
                self._write_meta(job)
        return True

    def _worker_loop(self) -> None:
        while True:
            job_id = self.queue.get()
            job = self.get(job_id)
            if job is None:
                continue
            with self.lock:
                if job.status != "queued":
                    continue  # cancelled while queued
                job.status = "running"
                job.started = time.time()
            self._write_meta(job)
            try:
                if job.kind == "single":
                    self._execute_single(job)
                else:
                    self._execute_sweep(job)
                with self.lock:
                    job.status = "cancelled" if job.cancel_event.is_set() else "done"
            except Exception as err:  # job failures must not kill the worker
                with self.lock:
                    job.status = "failed"
                    job.error = f"{type(err).__name__}: {err}"
            finally:
                with self.lock:
                    job.finished = time.time()
                self._write_meta(job)

    def _execute_single(self, job: Job) -> None:
        jdir = self.job_dir(job.id)
        content = decode_png((jdir / "content.png").read_bytes())
        style = decode_png((jdir / "style.png").read_bytes())
        config = TransferConfig.from_dict(job.config)
        losses_path = jdir / "losses.csv"
        losses_path.write_text(CSV_HEADER + "\n")

        def on_report(report: LossReport) -> None:
            row = report.csv_row()
            with self.lock:
                job.loss_rows.append(row)
            with open(losses_path, "a") as fh:
                fh.write(row + "\n")

        def on_frame(iteration: int, frame) -> None:
            index = len(job.frame_iterations)
            path = jdir / "frames" / f"{index:04d}_iter{iteration:06d}.png"
            path.write_bytes(encode_png(frame))
            with self.lock:
                job.frame_iterations.append(iteration)
            self._write_meta(job)

        result = run_transfer(
            content,
            style,
            config,
            self.net,
            on_report=on_report,
            on_frame=on_frame,
            should_stop=job.cancel_event.is_set,
        )
        (jdir / "result.png").write_bytes(encode_png(result.final_image))

    def _execute_sweep(self, job: Job) -> None:
        jdir = self.job_dir(job.id)
        spec = SweepSpec.from_dict(json.loads((jdir / "sweep.json").read_text()))
        result = run_sweep(spec, self.net)
        with self.lock:
            job.config["sheets"] = result.sheet_paths


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": detail})


def create_app(data_dir, net: LossNetwork, workers: int = 2,
               queue_limit: int = QUEUE_LIMIT) -> FastAPI:
    app = FastAPI(title="restyle", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    service = JobService(data_dir, net, workers=workers, queue_limit=queue_limit)
    app.state.service = service

    @app.post("/jobs", status_code=202)
    async def submit_job(request: Request):
        form = await request.form()
        for name in ("content", "style"):
            if name not in form or isinstance(form[name], str):
                return _error(400, f"missing image upload field '{name}'")
        try:
            content_bytes = await form["content"].read()
            style_bytes = await form["style"].read()
            decode_png(content_bytes)
            decode_png(style_bytes)
        except FormatError as err:
            return _error(400, f"undecodable image: {err}")

        overrides_raw = form.get("config", "{}")
        if not isinstance(overrides_raw, str):
            overrides_raw = (await overrides_raw.read()).decode("utf-8")
        try:
            overrides = json.loads(overrides_raw) if overrides_raw.strip() else {}
            if not isinstance(overrides, dict):
                raise ConfigurationError("config part must be a JSON object")
            config = TransferConfig.from_dict(overrides)
        except json.JSONDecodeError as err:
            return _error(400, f"config part is not valid JSON: {err}")
        except ConfigurationError as err:
            return _error(400, str(err))

        def setup(jdir: Path) -> None:
            (jdir / "content.png").write_bytes(content_bytes)
            (jdir / "style.png").write_bytes(style_bytes)

        try:
            job = service.submit("single", config.to_dict(), setup)
        except queue.Full:
            return _error(429, f"job queue is full (limit {service.queue.maxsize})")
        return {"id": job.id}

    @app.get("/jobs")
    def list_jobs():
        with service.lock:
            jobs = sorted(service.jobs.values(), key=lambda j: j.created)
            return {"jobs": [j.summary() for j in jobs]}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = service.get(job_id)
        if job is None:
            return _error(404, f"unknown job '{job_id}'")
        with service.lock:
            return job.summary()

    @app.get("/jobs/{job_id}/frames/{index}")
    def get_frame(job_id: str, index: int):
        job = service.get(job_id)
        if job is None or job.kind != "single":
            return _error(404, f"unknown single-run job '{job_id}'")
        with service.lock:
            count = len(job.frame_iterations)
            iteration = job.frame_iterations[index] if 0 <= index < count else None
        if iteration is None:
            return _error(404, f"frame {index} not produced yet ({count} available)")
        path = service.job_dir(job_id) / "frames" / f"{index:04d}_iter{iteration:06d}.png"
        if not path.is_file():
            return _error(404, f"frame {index} artifact missing")
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.get("/jobs/{job_id}/losses")
    def get_losses(job_id: str):
        job = service.get(job_id)
        if job is None or job.kind != "single":
            return _error(404, f"unknown single-run job '{job_id}'")
        with service.lock:
            rows = list(job.loss_rows)
        return PlainTextResponse("\n".join([CSV_HEADER] + rows) + "\n", media_type="text/csv")

    @app.post("/jobs/{job_id}/cancel")
    def cancel_job(job_id: str):
        if not service.cancel(job_id):
            return _error(404, f"unknown job '{job_id}'")
        job = service.get(job_id)
        with service.lock:
            return {"id": job_id, "status": job.status}

    @app.get("/presets")
    def list_presets():
        return {
            "default": TransferConfig().to_dict(),
            "recommended": recommended_preset().to_dict(),
        }

    @app.post("/sweeps", status_code=202)
    async def submit_sweep(request: Request):
        form = await request.form()
        spec_raw = form.get("spec")
        if spec_raw is None:
            return _error(400, "missing 'spec' part (SweepSpec JSON)")
        if not isinstance(spec_raw, str):
            spec_raw = (await spec_raw.read()).decode("utf-8")

        uploads = []
        for item in form.multi_items():
            key, value = item
            if key == "images" and not isinstance(value, str):
                uploads.append((value.filename, await value.read()))

        try:
            spec_data = json.loads(spec_raw)
        except json.JSONDecodeError as err:
            return _error(400, f"sweep spec is not valid JSON: {err}")

        def setup(jdir: Path) -> None:
            images_dir = jdir / "images"
            images_dir.mkdir(exist_ok=True)
            names = set()
            for filename, blob in uploads:
                safe = Path(filename or "upload.png").name
                (images_dir / safe).write_bytes(blob)
                names.add(safe)
            # Image lists may reference uploaded filenames; rewrite to paths.
            for key in ("content_images", "style_images"):
                resolved = []
                for ref in spec_data.get(key, []):
                    candidate = images_dir / Path(ref).name
                    resolved.append(str(candidate) if Path(ref).name in names else ref)
                spec_data[key] = resolved
            spec_data.setdefault("output_dir", str(jdir / "sweep"))
            # Validate after path resolution so errors surface at submit time.
            SweepSpec.from_dict(spec_data)
            (jdir / "sweep.json").write_text(json.dumps(spec_data, indent=2))

        try:
            job = service.submit("sweep", {"spec_name": spec_data.get("name", "")}, setup)
        except ConfigurationError as err:
            return _error(400, str(err))
        except queue.Full:
            return _error(429, f"job queue is full (limit {service.queue.maxsize})")
        return {"id": job.id}

    @app.get("/sweeps/{job_id}/sheet")
    def get_sheet(job_id: str, content: int = 0):
        job = service.get(job_id)
        if job is None or job.kind != "sweep":
            return _error(404, f"unknown sweep job '{job_id}'")
        with service.lock:
            sheets = list(job.config.get("sheets", []))
        if not 0 <= content < len(sheets):
            return _error(404, f"sheet {content} not available ({len(sheets)} produced)")
        path = Path(sheets[content])
        if not path.is_file():
            return _error(404, "sheet artifact missing")
        return Response(content=path.read_bytes(), media_type="image/png")

    return app
