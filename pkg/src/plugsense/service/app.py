"""FastAPI application exposing the pipeline stages."""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import AlgorithmError, DataError, UsageError
from . import models, pipeline


def create_app() -> FastAPI:
    app = FastAPI(title="plugsense", description="Presence detection from plug-load power traces")

    @app.exception_handler(DataError)
    async def _data_error(request: Request, exc: DataError):
        return JSONResponse(status_code=400, content={"detail": {"kind": "data", "message": str(exc)}})

    @app.exception_handler(UsageError)
    async def _usage_error(request: Request, exc: UsageError):
        return JSONResponse(status_code=400, content={"detail": {"kind": "usage", "message": str(exc)}})

    @app.exception_handler(AlgorithmError)
    async def _algorithm_error(request: Request, exc: AlgorithmError):
        return JSONResponse(
            status_code=409, content={"detail": {"kind": "algorithm", "message": str(exc)}}
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/simulate", response_model=models.SimulateResponse)
    def simulate(req: models.SimulateRequest):
        return pipeline.run_simulate(req)

    @app.post("/extract", response_model=models.ExtractResponse)
    def extract(req: models.ExtractRequest):
        return pipeline.run_extract(req)

    @app.post("/train", response_model=models.TrainResponse)
    def train(req: models.TrainRequest):
        return pipeline.run_train(req)

    @app.post("/baseline", response_model=models.BaselineResponse)
    def baseline(req: models.BaselineRequest):
        return pipeline.run_baseline(req)

    @app.post("/sensors", response_model=models.SensorsResponse)
    def sensors(req: models.SensorsRequest):
        return pipeline.run_sensors(req)

    @app.post("/eval", response_model=models.EvalResponse)
    def evaluate(req: models.EvalRequest):
        return pipeline.run_eval(req)

    return app


app = create_app()
