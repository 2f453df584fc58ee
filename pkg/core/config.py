"""
Environment-driven defaults.

Every numeric knob can be overridden from the environment (or a .env file)
with a BERGDIST_ prefix; run configurations fall back to these values.
"""

import os
from contextlib import contextmanager
from contextvars import ContextVar
from functools import lru_cache
from typing import Iterator, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


def _env_float(name: str, default: float) -> float:
    return float(os.getenv(name, default))


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(name, default))


class Settings(BaseModel):
    quad_tol: float = Field(..., description="Relative error target of adaptive quadrature")
    max_cells: int = Field(..., description="Cell budget per integration")
    ladder_base: float = Field(..., description="Geometric base of truncation ladders")
    halfplane_min_exp: int = Field(..., description="First ladder level on the half-plane")
    halfplane_max_exp: int = Field(..., description="Last ladder level on the half-plane")
    ball_min_exp: int = Field(..., description="First ladder level on the ball")
    ball_max_exp: int = Field(..., description="Last ladder level on the ball")
    rho: float = Field(..., description="Convergence ratio threshold")
    divergence: float = Field(..., description="Divergence ratio threshold")
    tol_tail: float = Field(..., description="Admissible geometric tail relative to the last value")
    seed: int = Field(..., description="Default seed for Monte Carlo streams")
    threads: int = Field(..., description="Default worker threads (speed only)")
    out_dir: str = Field(..., description="Default artifact directory")
    log_level: str = Field(..., description="Logging level name")


_override: ContextVar[Optional[Settings]] = ContextVar("bergdist_settings", default=None)


def get_settings() -> Settings:
    """Settings of the current run scope, or the environment defaults"""
    return _override.get() or env_settings()


@contextmanager
def settings_scope(settings: Settings) -> Iterator[Settings]:
    """Make ``settings`` the result of get_settings() inside the block"""
    token = _override.set(settings)
    try:
        yield settings
    finally:
        _override.reset(token)


@lru_cache(maxsize=1)
def env_settings() -> Settings:
    """Read settings from the environment once"""
    return Settings(
        quad_tol=_env_float("BERGDIST_QUAD_TOL", 1e-6),
        max_cells=_env_int("BERGDIST_MAX_CELLS", 20000),
        ladder_base=_env_float("BERGDIST_LADDER_BASE", 2.0),
        halfplane_min_exp=_env_int("BERGDIST_HALFPLANE_MIN_EXP", 1),
        halfplane_max_exp=_env_int("BERGDIST_HALFPLANE_MAX_EXP", 12),
        ball_min_exp=_env_int("BERGDIST_BALL_MIN_EXP", 1),
        ball_max_exp=_env_int("BERGDIST_BALL_MAX_EXP", 14),
        rho=_env_float("BERGDIST_RHO", 0.75),
        divergence=_env_float("BERGDIST_DIVERGENCE", 0.9),
        tol_tail=_env_float("BERGDIST_TOL_TAIL", 0.1),
        seed=_env_int("BERGDIST_SEED", 20240601),
        threads=_env_int("BERGDIST_THREADS", 1),
        out_dir=os.getenv("BERGDIST_OUT_DIR", "artifacts"),
        log_level=os.getenv("BERGDIST_LOG_LEVEL", "INFO"),
    )
