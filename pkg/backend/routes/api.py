from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from typing import Dict, List
import os
import logging
from pathlib import Path
from datetime import datetime
import uuid

from config import settings
from models.schemas import COMMANDS, JobRequest, JobResponse, JobSpec
from services.jobs import EXIT_INPUT, EXIT_NUMERICAL, execute

logger = logging.getLogger(__name__)

app = FastAPI(title="Hyperelliptic de Rham API")

# Generated reports per run (in-memory index)
RUNS_INDEX: Dict[str, List[str]] = {}

PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent
RUNS_DIR = Path(os.getenv("DERHAM_RUNS_DIR", str(PROJECT_ROOT / "runs")))


@app.exception_handler(RequestValidationError)
async def validation_error(request: Request, exc: RequestValidationError):
    return JSONResponse(status_code=400, content={"detail": {"error": "ValidationError", "message": str(exc)}})


def _output_name(command: str, fmt: str) -> str:
    if command == "flow" and fmt == "csv":
        return "trajectory.csv"
    return f"{command}.json"


@app.post("/jobs/{command}", response_model=JobResponse)
async def run_job(command: str, req: JobRequest):
    if command not in COMMANDS:
        raise HTTPException(status_code=404, detail=f"Unknown command '{command}'")

    run_id = datetime.now().strftime("%Y%m%d_%H%M%S") + "_" + uuid.uuid4().hex[:8]
    run_dir = RUNS_DIR / run_id
    run_dir.mkdir(parents=True, exist_ok=True)

    spec = JobSpec(
        command=command,
        output=str(run_dir / _output_name(command, req.format)),
        tol=req.tol,
        steps=req.steps,
        t_end=req.t_end,
        seed=req.seed,
        format=req.format,
    )
    code, report, files = execute(spec, req.input)

    if code == EXIT_INPUT:
        raise HTTPException(status_code=400, detail=report)
    if code == EXIT_NUMERICAL:
        raise HTTPException(status_code=422, detail=report)

    RUNS_INDEX[run_id] = [str(Path(p).resolve()) for p in files]
    return JobResponse(
        run_id=run_id,
        command=command,
        exit_code=code,
        report=report,
        files=[os.path.basename(p) for p in RUNS_INDEX[run_id]],
    )


@app.get("/download/{run_id}/{filename}")
async def download(run_id: str, filename: str):
    paths = RUNS_INDEX.get(run_id, [])
    match = next((p for p in paths if os.path.basename(p) == filename), None)
    if not match or not os.path.exists(match):
        raise HTTPException(status_code=404, detail="Report not found")
    media_type = "text/csv" if filename.endswith(".csv") else "application/json"
    return FileResponse(path=match, media_type=media_type, filename=filename)


# Health check
@app.get("/health")
async def health():
    return JSONResponse({"status": "ok", "series_order": settings.series_order})
