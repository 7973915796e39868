from fastapi import APIRouter
from fastapi.responses import JSONResponse

from apps.marchenko.schemas.report import REPORT_SCHEMA_VERSION

router = APIRouter()


@router.get("/health")
async def health_check():
    """Health check endpoint to verify API is running"""
    return JSONResponse(
        status_code=200,
        content={
            "status": "healthy",
            "service": "marchenko-api",
            "report_schema": REPORT_SCHEMA_VERSION,
        }
    )


@router.get("/")
async def root():
    """Root endpoint for marchenko"""
    return {
        "message": "Marchenko inverse-scattering API is running",
        "endpoints": ["/health", "/forward", "/reconstruct", "/roundtrip", "/fit-tail"],
    }
