"""
Environment-driven settings for varpen.

Values come from the process environment (optionally a .env file loaded by
python-dotenv) and are validated by a pydantic model.
"""
import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, Field

# Load environment variables
load_dotenv()


class Settings(BaseModel):
    """Global numerical and I/O defaults."""
    log_level: str = "INFO"
    out_dir: str = "./varpen_out"
    seed: int = 0
    default_n: int = Field(200, ge=1)
    reference_n: int = Field(1600, ge=1)
    gtol: float = Field(1e-8, gt=0)
    max_iter: int = Field(20000, ge=1)
    psi_tol: float = Field(1e-8, gt=0)
    psi_dt_tol: float = Field(10.0, ge=0)
    theta_min: float = Field(1e-8, gt=0)
    jobs: int = Field(1, ge=1)


@lru_cache()
def get_settings() -> Settings:
    """Read settings from the environment once per process."""
    return Settings(
        log_level=os.getenv("VARPEN_LOG_LEVEL", "INFO"),
        out_dir=os.getenv("VARPEN_OUT_DIR", "./varpen_out"),
        seed=int(os.getenv("VARPEN_SEED", 0)),
        default_n=int(os.getenv("VARPEN_DEFAULT_N", 200)),
        reference_n=int(os.getenv("VARPEN_REFERENCE_N", 1600)),
        gtol=float(os.getenv("VARPEN_GTOL", 1e-8)),
        max_iter=int(os.getenv("VARPEN_MAX_ITER", 20000)),
        psi_tol=float(os.getenv("VARPEN_PSI_TOL", 1e-8)),
        psi_dt_tol=float(os.getenv("VARPEN_PSI_DT_TOL", 10.0)),
        theta_min=float(os.getenv("VARPEN_THETA_MIN", 1e-8)),
        jobs=int(os.getenv("VARPEN_JOBS", 1)),
    )
