import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


class Settings(BaseModel):
    """Numeric thresholds shared by every service module."""

    series_order: int = Field(16, ge=2, description="Default number of series terms past the lead")
    cleanup_threshold: float = Field(1e-13, gt=0, description="Absolute size below which leading coefficients are dropped")
    residue_tol: float = Field(1e-9, gt=0)
    rank_tol: float = Field(1e-8, gt=0, description="Relative singular-value threshold for rank decisions")
    branch_tol: float = Field(1e-8, gt=0)
    separation_tol: float = Field(1e-8, gt=0)
    cancel_tol: float = Field(1e-9, gt=0, description="Relative tolerance for cancelling common denominator factors")
    max_condition: float = Field(1e12, gt=1)
    collision_tol: float = Field(1e-5, gt=0)
    on_curve_tol: float = Field(1e-9, gt=0)
    flow_defect_tol: float = Field(1e-8, gt=0, description="Largest |y^2 - P(x)| a flow step may leave on a divisor point")
    verify_instances: int = Field(20, ge=1)
    log_level: str = "INFO"


def _env(name: str, default: str) -> str:
    value = os.getenv(name)
    return default if value is None or value.strip() == "" else value


@lru_cache
def get_settings() -> Settings:
    return Settings(
        series_order=_env("DERHAM_SERIES_ORDER", "16"),
        cleanup_threshold=_env("DERHAM_CLEANUP_THRESHOLD", "1e-13"),
        residue_tol=_env("DERHAM_RESIDUE_TOL", "1e-9"),
        rank_tol=_env("DERHAM_RANK_TOL", "1e-8"),
        branch_tol=_env("DERHAM_BRANCH_TOL", "1e-8"),
        separation_tol=_env("DERHAM_SEPARATION_TOL", "1e-8"),
        cancel_tol=_env("DERHAM_CANCEL_TOL", "1e-9"),
        max_condition=_env("DERHAM_MAX_CONDITION", "1e12"),
        collision_tol=_env("DERHAM_COLLISION_TOL", "1e-5"),
        on_curve_tol=_env("DERHAM_ON_CURVE_TOL", "1e-9"),
        flow_defect_tol=_env("DERHAM_FLOW_DEFECT_TOL", "1e-8"),
        verify_instances=_env("DERHAM_VERIFY_INSTANCES", "20"),
        log_level=_env("LOG_LEVEL", "INFO").upper(),
    )


settings = get_settings()
