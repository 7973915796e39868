# api/v1/router.py
from fastapi import APIRouter
from api.v1.marchenko import router as marchenko_router

router = APIRouter()

# Mount tool-based or domain-based routers
router.include_router(marchenko_router, prefix="/marchenko")
