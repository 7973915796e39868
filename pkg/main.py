# main.py
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from api.router import router as api_router  # << use this, not api.v1.router
from config.logging import setup_logging
from config.settings import get_app_settings
from common.exceptions import ConfigError, MarchenkoError

# Get settings
settings = get_app_settings()
setup_logging()

app = FastAPI(title=settings.APP_TITLE, version="1.0.0")

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_credentials=False,
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["*"],
)


@app.exception_handler(MarchenkoError)
async def marchenko_error_handler(request: Request, exc: MarchenkoError):
    """Errors that escape a route still carry their pipeline stage"""
    status_code = 400 if isinstance(exc, ConfigError) else 422
    return JSONResponse(status_code=status_code, content={"detail": exc.to_dict()})


app.include_router(api_router)
