"""FastAPI application wrapping the counterplanning engine."""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from . import handlers
from . import schemas as S


def create_app() -> FastAPI:
    app = FastAPI(title="counterplan", version=__version__)

    def guard(fn, *args):
        try:
            return fn(*args)
        except handlers.HandlerError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except handlers.TaskFailure as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.get("/health", response_model=S.HealthResponse)
    def health():
        return handlers.health()

    @app.post("/generate", response_model=S.GenerateResponse)
    def generate(req: S.GenerateRequest):
        return guard(handlers.generate_bundle, req)

    @app.post("/episode", response_model=S.EpisodeResponse)
    def episode(req: S.EpisodeRequest):
        return guard(handlers.run_episode_handler, req)

    @app.post("/suite", response_model=S.SuiteResponse)
    def suite(req: S.SuiteRequest):
        return guard(handlers.run_suite_handler, req)

    @app.post("/validate", response_model=S.ValidateResponse)
    def validate(req: S.ValidateRequest):
        return guard(handlers.validate_handler, req)

    return app


app = create_app()
