from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class AppSettings(BaseSettings):
    """Process-wide settings shared by the CLI and the API."""

    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    # Default size of the worker pool when a run config does not set one
    DEFAULT_WORKERS: int = 1

    # HTTP front end
    APP_TITLE: str = "Marchenko Inverse Scattering API"
    CORS_ORIGINS: list[str] = ["http://localhost:3000", "http://127.0.0.1:3000"]

    model_config = SettingsConfigDict(env_prefix="MARCHENKO_APP_", env_file=".env", extra="ignore")


@lru_cache()
def get_app_settings() -> AppSettings:
    return AppSettings()
