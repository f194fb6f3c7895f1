"""
PHY validation route.
"""
import logging
from typing import Any, Dict, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field

from coherentfl.schemas.config import ExperimentConfig, ValidationConfig
from coherentfl.services.experiments.experiment_service import ExperimentService

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api/phy", tags=["phy"])


class ValidateRequest(BaseModel):
    seed: int = Field(default=0, ge=0, lt=2**64)
    validation: ValidationConfig = Field(default_factory=ValidationConfig)
    mutate_shrinkage: Optional[float] = Field(default=None, gt=0)


@router.post("/validate")
def validate(request: ValidateRequest) -> Dict[str, Any]:
    """
    Run the validation suite.

    Failed checks still answer 200; the body carries ``passed`` and the failing check names.
    """
    config = ExperimentConfig(seed=request.seed, validation=request.validation)
    report = ExperimentService.phy_validate(config, request.mutate_shrinkage)
    return {"config_hash": config.config_hash(), **report.summary()}
