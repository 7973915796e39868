# api/router.py
from fastapi import APIRouter
from api.v1.router import router as v1_router
from apps.marchenko.routes.health import router as health_router

router = APIRouter()

# Service-level health check
router.include_router(health_router, tags=["Health"])

# Mount v1 APIs
router.include_router(v1_router, prefix="/api/v1")
