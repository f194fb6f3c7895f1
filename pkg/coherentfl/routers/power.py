"""
Power allocation routes.
"""
import logging
from typing import Any, Dict, List, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field, model_validator

from coherentfl.schemas.config import ExperimentConfig, SweepConfig
from coherentfl.schemas.models import PowerAllocation
from coherentfl.services.experiments.experiment_service import ExperimentService
from coherentfl.services.phy.power_service import PowerService

logger = logging.getLogger(__name__)

router = APIRouter(
    prefix="/api/power",
    tags=["power"],
    responses={422: {"description": "Invalid or infeasible request"}},
)


class AllocationRequest(BaseModel):
    """Budget given either linearly (``rho``) or in dB (``rho_db``)."""

    rho: Optional[float] = Field(default=None, gt=0)
    rho_db: Optional[float] = None
    t_k: int = Field(ge=2)
    m: int = Field(ge=1)
    noise_var: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _one_budget(self):
        if (self.rho is None) == (self.rho_db is None):
            raise ValueError("give exactly one of rho and rho_db")
        return self

    @property
    def budget(self) -> float:
        return self.rho if self.rho is not None else 10.0 ** (self.rho_db / 10.0)


class AllocationResponse(BaseModel):
    allocation: PowerAllocation
    gamma_eff: float
    minimum_feasible_rho: float


class SweepRequest(BaseModel):
    seed: int = Field(default=0, ge=0, lt=2**64)
    sweep: SweepConfig = Field(default_factory=SweepConfig)


class SweepResponse(BaseModel):
    config_hash: str
    rows: List[Dict[str, Any]]


@router.post("/allocation", response_model=AllocationResponse)
def allocation(request: AllocationRequest) -> AllocationResponse:
    """Optimal pilot/data split for one budget; infeasible budgets answer 422."""
    alloc = PowerService.optimal_allocation(
        request.budget, request.t_k, request.m, request.noise_var
    )
    logger.info(f"Allocation for M={request.m} T_K={request.t_k}: rho_d={alloc.rho_d:.6g}")
    return AllocationResponse(
        allocation=alloc,
        gamma_eff=PowerService.effective_snr(alloc.rho_p, alloc.rho_d, alloc.m, alloc.noise_var),
        minimum_feasible_rho=PowerService.minimum_feasible_rho(
            request.t_k, request.m, request.noise_var
        ),
    )


@router.post("/sweep", response_model=SweepResponse)
def sweep(request: SweepRequest) -> SweepResponse:
    config = ExperimentConfig(seed=request.seed, sweep=request.sweep)
    rows = ExperimentService.power_sweep(config)
    return SweepResponse(config_hash=config.config_hash(), rows=rows)
