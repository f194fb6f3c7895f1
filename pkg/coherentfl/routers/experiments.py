"""
Federated training route.
"""
import logging
from typing import Any, Dict, List, Optional

from fastapi import APIRouter
from pydantic import BaseModel

from coherentfl.schemas.config import ExperimentConfig
from coherentfl.schemas.models import BoundReport
from coherentfl.services.experiments.experiment_service import ExperimentService

logger = logging.getLogger(__name__)

router = APIRouter(
    prefix="/api/experiments",
    tags=["experiments"],
    responses={422: {"description": "Invalid configuration"}},
)


class TrainResponse(BaseModel):
    config_hash: str
    rows: List[Dict[str, Any]]
    bound: Optional[BoundReport] = None


@router.post("/train", response_model=TrainResponse)
def train(config: ExperimentConfig, bound: bool = True) -> TrainResponse:
    """Run one federated experiment; ``bound=false`` skips the convergence-bound check."""
    logger.info(f"Training job {config.config_hash()[:12]} ({config.rounds} rounds)")
    outcome = ExperimentService.train(config, with_bound=bound)
    return TrainResponse(config_hash=config.config_hash(), rows=outcome.rows, bound=outcome.bound)
