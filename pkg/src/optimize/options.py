"""
Pydantic options for the penalized minimizers.
"""
from typing import Optional

from pydantic import BaseModel, Field

from settings import get_settings


class MinimizeOptions(BaseModel):
    """Options shared by minimize_penalized, the alternate scheme and sweeps."""
    max_iter: int = Field(default_factory=lambda: get_settings().max_iter, ge=1)
    # relative: converged when the projected gradient is <= gtol * (1 + |E|)
    gtol: float = Field(default_factory=lambda: get_settings().gtol, gt=0)
    alternate: bool = False
    multistart: int = Field(1, ge=1)
    seed: int = Field(default_factory=lambda: get_settings().seed)
    warm_start: bool = True
    spectral_fallback: bool = True
    max_cycles: int = Field(2000, ge=1)
    cycle_tol: float = Field(1e-12, gt=0)
    objective_scale: float = Field(1.0, gt=0)
    jobs: int = Field(default_factory=lambda: get_settings().jobs, ge=1)
    reference_n: Optional[int] = Field(None, ge=1)

    def with_updates(self, **changes) -> "MinimizeOptions":
        return self.model_copy(update=changes)
