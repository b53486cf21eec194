"""FastAPI service exposing every analysis as a POST endpoint.

Analysis failures map to HTTP 422 with the module's error code; malformed
net documents and formulas map to 400. The CLI mounts this app in-process.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, analyses
from ..errors import AnalysisError, FormulaSyntaxError, NetFormatError, ParameterMismatch, UnknownKind
from . import schemas

BAD_REQUEST_ERRORS = (NetFormatError, FormulaSyntaxError, ParameterMismatch, UnknownKind)


def create_app() -> FastAPI:
    app = FastAPI(title="fluidnet", version=__version__)

    @app.exception_handler(AnalysisError)
    async def analysis_error_handler(request: Request, exc: AnalysisError):
        status = 400 if isinstance(exc, BAD_REQUEST_ERRORS) else 422
        return JSONResponse(status_code=status, content=exc.to_dict())

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": "USAGE", "message": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/validate", response_model=schemas.ValidationResponse)
    def validate(req: schemas.NetRequest):
        return analyses.validate_analysis(req.net)

    @app.post("/reach", response_model=schemas.ReachResponse)
    def reach(req: schemas.NetRequest):
        return analyses.reach_analysis(req.net, req.max_states)

    @app.post("/ctmc", response_model=schemas.CtmcResponse)
    def ctmc(req: schemas.NetRequest):
        return analyses.ctmc_analysis(req.net, req.max_states)

    @app.post("/sfm", response_model=schemas.SfmResponse)
    def sfm(req: schemas.SfmRequest):
        return analyses.sfm_analysis(req.net, req.xmax, req.points, req.max_states)

    @app.post("/bisim", response_model=schemas.VerdictResponse, response_model_exclude_none=True)
    def bisim(req: schemas.PairRequest):
        return analyses.bisim_analysis(req.net_a, req.net_b, req.max_states)

    @app.post("/trace-eq", response_model=schemas.VerdictResponse, response_model_exclude_none=True)
    def trace_eq(req: schemas.TraceEqRequest):
        return analyses.trace_eq_analysis(req.net_a, req.net_b, req.depth, req.key, req.max_states)

    @app.post("/traces")
    def traces(req: schemas.TracesRequest):
        return analyses.traces_analysis(req.net, req.depth, req.key, req.max_states)

    @app.post("/quotient", response_model=schemas.QuotientResponse, response_model_exclude_none=True)
    def quotient(req: schemas.QuotientRequest):
        return analyses.quotient_analysis(req.net, req.verify, req.max_states)

    @app.post("/check", response_model=schemas.CheckResponse, response_model_exclude_none=True)
    def check(req: schemas.CheckRequest):
        return analyses.check_analysis(
            req.net, req.dialect, req.formula, req.sojourns, req.rates, req.max_states
        )

    @app.post("/measures", response_model=schemas.MeasuresResponse)
    def measures(req: schemas.MeasuresRequest):
        return analyses.measures_analysis(
            req.net, [spec.model_dump() for spec in req.requests], req.max_states
        )

    @app.post("/simulate", response_model=schemas.SimulateResponse, response_model_exclude_none=True)
    def simulate(req: schemas.SimulateRequest):
        return analyses.simulate_analysis(
            req.net,
            horizon=req.horizon,
            replications=req.replications,
            warmup_fraction=req.warmup_fraction,
            seed=req.seed,
            grid=req.grid,
            dump=req.dump,
            max_states=req.max_states,
        )

    return app


app = create_app()
