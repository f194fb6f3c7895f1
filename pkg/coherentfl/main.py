"""
HTTP surface for submitting simulator jobs.
"""
import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from coherentfl import __version__
from coherentfl.config import HOST, PORT, configure_logging, get_thread_count
from coherentfl.routers import experiments, phy, power
from coherentfl.utils.errors import CoherentFLError

logger = logging.getLogger(__name__)


def create_app() -> FastAPI:
    app = FastAPI(
        title="coherentfl",
        description="Federated learning over downlinks with heterogeneous coherence times",
        version=__version__,
    )

    @app.exception_handler(CoherentFLError)
    async def simulator_error_handler(request: Request, exc: CoherentFLError) -> JSONResponse:
        if exc.status_code >= 500:
            logger.error(f"{request.url.path} failed: {exc.detail}")
        else:
            logger.info(f"Rejected {request.url.path}: {exc.detail}")
        return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})

    app.include_router(power.router)
    app.include_router(phy.router)
    app.include_router(experiments.router)

    @app.get("/")
    async def root():
        """Service information."""
        return {
            "name": "coherentfl",
            "status": "online",
            "version": __version__,
            "description": "Federated learning over downlinks with heterogeneous coherence times",
        }

    @app.get("/health")
    async def health_check():
        return {"status": "healthy", "threads": get_thread_count()}

    return app


app = create_app()


if __name__ == "__main__":
    import uvicorn

    configure_logging()
    uvicorn.run("coherentfl.main:app", host=HOST, port=PORT, log_level="info")
