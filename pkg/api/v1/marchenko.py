from fastapi import APIRouter
from apps.marchenko.routes import health, pipeline

router = APIRouter()

# Include health route(s) from marchenko app
router.include_router(health.router, prefix="", tags=["Health"])

# Include pipeline command routes
router.include_router(pipeline.router, prefix="", tags=["Pipeline"])
