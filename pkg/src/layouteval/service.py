"""HTTP JSON service: upload image collections, evaluate them, poll results.

The workflow takes two POSTs: upload the prediction images (and, once,
the ground truth images) into named collections, then request an
evaluation of a ground-truth collection against a hypothesis collection.
Evaluation runs asynchronously on a bounded worker pool; clients poll
GET /jobs/{id} until the job is done and receive, per image, the same
metric values the CLI writes to CSV, under the same names.

Collections and jobs live on disk under the configured data directory
and survive restarts; unfinished jobs are picked up again on startup.
"""

from __future__ import annotations

import argparse
import base64
import binascii
import json
import os
import re
import secrets
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from . import codec, report
from .codec import ClassRegistry
from .errors import EvaluationError, UndecodableImage
from .metrics import evaluate

_ENTRY_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")
_EXTENSION_RE = re.compile(r"^[A-Za-z0-9]+$")
_META_FILE = ".meta.json"


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class CollectionStore:
    """Disk-backed image collections. Creation is atomic: the collection
    directory appears only after every entry has been written."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def create(self, entries: list[tuple[str, bytes]]) -> str:
        """Persist entries as (filename, payload) pairs; returns the new name."""
        with self._lock:
            while True:
                name = "c" + secrets.token_hex(5)
                if not (self.root / name).exists():
                    break
            staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.root))
            try:
                for filename, payload in entries:
                    (staging / filename).write_bytes(payload)
                (staging / _META_FILE).write_text(
                    json.dumps({"name": name, "created_at": _utcnow()}),
                    encoding="utf-8",
                )
                staging.rename(self.root / name)
            except BaseException:
                for leftover in staging.glob("*"):
                    leftover.unlink(missing_ok=True)
                staging.rmdir()
                raise
            return name

    def exists(self, name: str) -> bool:
        return _ENTRY_NAME_RE.match(name) is not None and (self.root / name).is_dir()

    def entries(self, name: str) -> dict[str, str]:
        """Map from entry name (extension stripped) to stored filename."""
        return {
            path.stem: path.name
            for path in sorted((self.root / name).iterdir())
            if not path.name.startswith(".")
        }

    def read(self, name: str, filename: str) -> bytes:
        return (self.root / name / filename).read_bytes()


class JobStore:
    """Disk-backed evaluation jobs, one JSON file each, atomically updated."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def create(self, gt_collection: str, hypothesis_collection: str) -> dict:
        with self._lock:
            while True:
                job_id = "j" + secrets.token_hex(5)
                if not (self.root / f"{job_id}.json").exists():
                    break
            job = {
                "id": job_id,
                "state": "pending",
                "gt_collection": gt_collection,
                "hypothesis_collection": hypothesis_collection,
                "created_at": _utcnow(),
            }
            self._write(job)
            return job

    def get(self, job_id: str) -> dict | None:
        path = self.root / f"{job_id}.json"
        if _ENTRY_NAME_RE.match(job_id) is None or not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def update(self, job_id: str, **fields) -> dict:
        with self._lock:
            job = self.get(job_id)
            if job is None:
                raise KeyError(job_id)
            job.update(fields)
            self._write(job)
            return job

    def unfinished(self) -> list[dict]:
        jobs = []
        for path in sorted(self.root.glob("*.json")):
            job = json.loads(path.read_text(encoding="utf-8"))
            if job.get("state") in ("pending", "running"):
                jobs.append(job)
        return jobs

    def _write(self, job: dict) -> None:
        path = self.root / f"{job['id']}.json"
        handle = tempfile.NamedTemporaryFile(
            "w", encoding="utf-8", dir=self.root, suffix=".tmp", delete=False
        )
        with handle:
            json.dump(job, handle)
        os.replace(handle.name, path)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


class EvaluationService:
    """Request handling and job execution behind the HTTP routes."""

    def __init__(self, data_dir: Path, registry: ClassRegistry, worker_count: int):
        data_dir = Path(data_dir)
        self.collections = CollectionStore(data_dir / "collections")
        self.jobs = JobStore(data_dir / "jobs")
        self.registry = registry
        self.worker_count = worker_count
        self._executor: ThreadPoolExecutor | None = None

    def start(self) -> None:
        self._executor = ThreadPoolExecutor(
            max_workers=self.worker_count, thread_name_prefix="layouteval-job"
        )
        for job in self.jobs.unfinished():
            self._executor.submit(self._run_job, job["id"])

    def shutdown(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    # request handlers -------------------------------------------------

    def handle_upload(self, raw_body: bytes) -> Response:
        try:
            body = json.loads(raw_body)
        except ValueError:
            return _error(400, "request body is not valid JSON")
        if not isinstance(body, dict) or not isinstance(body.get("files"), list):
            return _error(400, "expected a JSON object with a 'files' list")
        files = body["files"]
        if not files:
            return _error(400, "'files' must not be empty")

        entries: list[tuple[str, bytes]] = []
        seen: set[str] = set()
        for position, entry in enumerate(files):
            if not isinstance(entry, dict):
                return _error(400, f"files[{position}] is not an object")
            name = entry.get("name")
            extension = entry.get("extension", "png")
            value = entry.get("value")
            if not isinstance(name, str) or _ENTRY_NAME_RE.match(name) is None:
                return _error(400, f"files[{position}]: missing or invalid 'name'")
            if not isinstance(extension, str) or _EXTENSION_RE.match(extension) is None:
                return _error(400, f"files[{position}]: invalid 'extension'")
            if not isinstance(value, str):
                return _error(400, f"files[{position}]: missing base64 'value'")
            if name in seen:
                return JSONResponse(
                    {"error": f"duplicate entry name {name!r}"}, status_code=409
                )
            seen.add(name)
            try:
                payload = base64.b64decode(value, validate=True)
            except (binascii.Error, ValueError):
                return _error(400, f"files[{position}] ({name}): value is not valid base64")
            try:
                codec.load_rgb(payload)
            except UndecodableImage as exc:
                return _error(422, f"files[{position}] ({name}): {exc}")
            entries.append((f"{name}.{extension}", payload))

        collection = self.collections.create(entries)
        return JSONResponse({"collection": collection}, status_code=201)

    def handle_evaluation(self, raw_body: bytes) -> Response:
        try:
            body = json.loads(raw_body)
        except ValueError:
            return _error(400, "request body is not valid JSON")
        data = body.get("data") if isinstance(body, dict) else None
        if not isinstance(data, list) or len(data) != 1 or not isinstance(data[0], dict):
            return _error(400, "expected a JSON object with a one-element 'data' list")
        gt_name = data[0].get("gtCollection")
        hyp_name = data[0].get("hypothesisCollection")
        if not isinstance(gt_name, str) or not isinstance(hyp_name, str):
            return _error(400, "'gtCollection' and 'hypothesisCollection' are required")
        for name in (gt_name, hyp_name):
            if not self.collections.exists(name):
                return _error(404, f"unknown collection {name!r}")

        gt_entries = self.collections.entries(gt_name)
        hyp_entries = self.collections.entries(hyp_name)
        if set(gt_entries) != set(hyp_entries):
            missing = sorted(set(gt_entries) ^ set(hyp_entries))
            return _error(
                422,
                "image names do not pair up one-to-one; unmatched: " + ", ".join(missing),
            )

        job = self.jobs.create(gt_name, hyp_name)
        if self._executor is None:
            raise RuntimeError("service not started")
        self._executor.submit(self._run_job, job["id"])
        return JSONResponse({"job": job["id"], "state": job["state"]}, status_code=202)

    def handle_get_job(self, job_id: str) -> Response:
        job = self.jobs.get(job_id)
        if job is None:
            return _error(404, f"unknown job {job_id!r}")
        body: dict = {"id": job["id"], "state": job["state"]}
        if job["state"] == "done":
            body["results"] = job["results"]
        elif job["state"] == "failed":
            body["errors"] = job["errors"]
        return JSONResponse(body)

    # job execution ----------------------------------------------------

    def _run_job(self, job_id: str) -> None:
        try:
            self.jobs.update(job_id, state="running")
            job = self.jobs.get(job_id)
            assert job is not None
            gt_entries = self.collections.entries(job["gt_collection"])
            hyp_entries = self.collections.entries(job["hypothesis_collection"])
            results = []
            errors = []
            for name in sorted(gt_entries):
                hyp_file = hyp_entries[name]
                try:
                    gt_image = codec.decode_label_image(
                        self.collections.read(job["gt_collection"], gt_entries[name]),
                        self.registry,
                        codec.GROUND_TRUTH,
                    )
                    hyp_image = codec.decode_label_image(
                        self.collections.read(job["hypothesis_collection"], hyp_file),
                        self.registry,
                        codec.PREDICTION,
                    )
                    evaluation = evaluate(gt_image, hyp_image, self.registry)
                    results.append(
                        {"file": hyp_file, "metrics": report.metric_dict(evaluation)}
                    )
                except EvaluationError as exc:
                    errors.append({"file": hyp_file, "error": str(exc)})
            if errors:
                self.jobs.update(job_id, state="failed", errors=errors)
            else:
                self.jobs.update(job_id, state="done", results=results)
        except Exception as exc:  # job crash must surface, never hang as "running"
            self.jobs.update(
                job_id, state="failed", errors=[{"file": None, "error": str(exc)}]
            )


def create_app(
    data_dir: str | Path,
    registry: ClassRegistry | None = None,
    worker_count: int = 2,
) -> FastAPI:
    """Build the ASGI application around a data directory."""
    service = EvaluationService(
        Path(data_dir), registry or ClassRegistry.default(), worker_count
    )

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        service.start()
        try:
            yield
        finally:
            service.shutdown()

    app = FastAPI(title="layouteval", lifespan=lifespan)
    app.state.service = service

    @app.post("/collections")
    async def post_collections(request: Request) -> Response:
        raw = await request.body()
        return await run_in_threadpool(service.handle_upload, raw)

    @app.post("/evaluation")
    async def post_evaluation(request: Request) -> Response:
        raw = await request.body()
        return await run_in_threadpool(service.handle_evaluation, raw)

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str) -> Response:
        return service.handle_get_job(job_id)

    return app


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(
        prog="layout-eval-server",
        description="HTTP JSON service for pixel-level layout analysis evaluation.",
    )
    parser.add_argument(
        "--host", default=os.environ.get("LAYOUT_EVAL_HOST", "127.0.0.1")
    )
    parser.add_argument(
        "--port", type=int, default=int(os.environ.get("LAYOUT_EVAL_PORT", "8000"))
    )
    parser.add_argument(
        "--data-dir",
        default=os.environ.get("LAYOUT_EVAL_DATA_DIR", "layout-eval-data"),
        help="directory for stored collections and jobs (default: %(default)s)",
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=int(os.environ.get("LAYOUT_EVAL_WORKERS", "2")),
        help="evaluation worker threads (default: %(default)s)",
    )
    parser.add_argument(
        "--classes",
        default=os.environ.get("LAYOUT_EVAL_CLASSES"),
        help="class registry file; default: DIVA-HisDB layout",
    )
    args = parser.parse_args(argv)
    registry = ClassRegistry.from_file(args.classes) if args.classes else ClassRegistry.default()
    app = create_app(args.data_dir, registry=registry, worker_count=args.workers)

    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
