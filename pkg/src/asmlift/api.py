import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from asmlift import wiring
from asmlift.commands.lift import LiftChunk
from asmlift.errors import AsmLiftError
from asmlift.ir.syntax import print_program
from asmlift.models import Backend, ChunkReport, Level, Relaxation, VerdictReport

logger = logging.getLogger(__name__)

app = FastAPI(title="asmlift")
_defaults = wiring.default_config()


@app.exception_handler(AsmLiftError)
async def _lift_error_handler(request: Request, exc: AsmLiftError):
    logger.warning("Rejected %s %s: %s", request.method, request.url.path, exc)
    return JSONResponse(status_code=422, content={"result": None, "error": str(exc)})


@app.get("/health")
async def health():
    return {"status": "ok"}


# --- Request / Response models ---

class LiftRequest(BaseModel):
    chunk: str
    name: str = "chunk"
    level: Level | None = None
    relax: list[Relaxation] = Field(default_factory=list)


class LiftResponse(BaseModel):
    status: str
    report: ChunkReport
    c: str = ""
    ir: str = ""
    ledger: str = ""


class ValidateRequest(BaseModel):
    original: str
    lifted: str
    ledger: str = ""
    backend: Backend | None = None
    observables: list[str] | None = None
    seed: int | None = None


# --- Endpoints ---

@app.post("/lift")
def lift(req: LiftRequest) -> LiftResponse:
    config = _defaults.model_copy(update={"relaxations": frozenset(req.relax)})
    outcome = LiftChunk(config).execute(req.chunk, req.name, level=req.level)
    if not outcome.lifted:
        return LiftResponse(status=outcome.report.status, report=outcome.report)
    return LiftResponse(
        status=outcome.report.status,
        report=outcome.report,
        c=outcome.snippet.text,
        ir=print_program(outcome.typed.program),
        ledger=outcome.ledger.to_jsonl(),
    )


@app.post("/validate")
def validate(req: ValidateRequest) -> VerdictReport:
    updates = {"backend": req.backend, "fuzz_seed": req.seed}
    config = _defaults.model_copy(update={k: v for k, v in updates.items() if v is not None})
    observables = frozenset(req.observables) if req.observables is not None else None
    return wiring.create_validate_ir(config.model_copy(update={"dump_dir": ""})).execute(
        req.original, req.lifted, req.ledger, observables=observables
    )
