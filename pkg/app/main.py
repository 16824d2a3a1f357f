from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from contextlib import asynccontextmanager
import logging

from app.core.config import settings
from app.core.logging import configure_logging
from app.api.v1 import coding, games, machines, membership

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan events."""
    configure_logging()
    logger.info("Starting blind-counter API (environment: %s)", settings.environment)
    logger.info(
        "Default bounds: C=%d K=%d N=%d budget=%d",
        settings.counter_bound,
        settings.cycle_bound,
        settings.coded_blocks,
        settings.node_budget,
    )
    yield
    logger.info("Shutting down blind-counter API")


app = FastAPI(
    title="Blind Counter Automata API",
    description="Coding, membership, constructions and Wadge plays for blind-counter ω-automata",
    version="1.0.0",
    lifespan=lifespan,
    docs_url="/docs" if settings.is_development else None,
    redoc_url="/redoc" if settings.is_development else None,
)


@app.middleware("http")
async def log_requests(request: Request, call_next):
    response = await call_next(request)
    logger.debug("%s %s -> %d", request.method, request.url.path, response.status_code)
    return response


app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.cors_origins_list,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.get("/api/health")
async def health_check():
    """Health check endpoint."""
    return {
        "status": "healthy",
        "environment": settings.environment,
        "bounds": {
            "C": settings.counter_bound,
            "K": settings.cycle_bound,
            "N": settings.coded_blocks,
        },
    }


app.include_router(machines.router, prefix="/api/v1/machines", tags=["Machines"])
app.include_router(coding.router, prefix="/api/v1/coding", tags=["Coding"])
app.include_router(membership.router, prefix="/api/v1/membership", tags=["Membership"])
app.include_router(games.router, prefix="/api/v1/games", tags=["Games"])


# Global exception handler
@app.exception_handler(Exception)
async def global_exception_handler(request, exc):
    """Handle unexpected exceptions."""
    logger.exception("unhandled error on %s", request.url.path)
    if settings.is_development:
        import traceback
        return JSONResponse(
            status_code=500,
            content={
                "detail": str(exc),
                "traceback": traceback.format_exc(),
            }
        )
    return JSONResponse(
        status_code=500,
        content={"detail": "Internal server error"}
    )


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "app.main:app",
        host="0.0.0.0",
        port=8000,
        reload=settings.is_development,
    )
