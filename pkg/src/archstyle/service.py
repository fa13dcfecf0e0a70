"""FastAPI service exposing the pipeline over HTTP.

The service is a local tool server: requests carry filesystem paths, and
loaded checkpoints stay cached between requests so repeated transfers do not
pay the model-load cost.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__, pipeline
from .schemas import (
    BlendRequest,
    BlendResponse,
    EvalRequest,
    EvalResponse,
    HealthResponse,
    InterpolateRequest,
    InterpolateResponse,
    TrainRequest,
    TrainResponse,
    TransferRequest,
    TransferResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="archstyle", version=__version__)
    cache = pipeline.BundleCache()

    def guarded(fn, *args):
        try:
            return fn(*args)
        except pipeline.InputValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except FileNotFoundError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except pipeline.PipelineError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/v1/transfer", response_model=TransferResponse)
    def transfer(req: TransferRequest) -> TransferResponse:
        return guarded(pipeline.run_transfer, req, cache)

    @app.post("/v1/blend", response_model=BlendResponse)
    def blend(req: BlendRequest) -> BlendResponse:
        return guarded(pipeline.run_blend, req)

    @app.post("/v1/train", response_model=TrainResponse)
    def train(req: TrainRequest) -> TrainResponse:
        # synchronous; intended for short/toy runs, use the CLI for long ones
        return guarded(pipeline.run_train, req)

    @app.post("/v1/eval", response_model=EvalResponse)
    def evaluate(req: EvalRequest) -> EvalResponse:
        return guarded(pipeline.run_eval, req)

    @app.post("/v1/interpolate", response_model=InterpolateResponse)
    def interpolate(req: InterpolateRequest) -> InterpolateResponse:
        return guarded(pipeline.run_interpolate, req, cache)

    return app


app = create_app()
