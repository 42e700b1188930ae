from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class ReconMethod(str, Enum):
    FBP = "fbp"
    OSSQS = "ossqs"
    TV = "tv"
    TDL = "tdl"
    L0TDL = "l0tdl"


class SweepParameter(str, Enum):
    SIGMA = "sigma"
    ETA = "eta"
    EPSILON = "epsilon"
    LAMBDA_STAR = "lambda_star"
    SPARSITY = "sparsity"


class CommandResult(BaseModel):
    """What a command wrote, for the closing summary panel."""

    command: str
    out_dir: str
    artifacts: Dict[str, str] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
    manifest: Optional[str] = None
