"""ctcad: seeded CT lesion segmentation, texture features, and outcome models.

The pipeline stages are importable individually (volume_io, segmentation,
radiomics, reduction, rebalance, gbm, evaluation, phantom); the ``ctcad``
console script chains them over a case manifest and work directory.
"""

from . import (
    evaluation,
    gbm,
    phantom,
    radiomics,
    rebalance,
    reduction,
    segmentation,
    volume_io,
)
from .seeding import derive_seed

__version__ = "0.1.0"

__all__ = [
    "derive_seed",
    "evaluation",
    "gbm",
    "phantom",
    "radiomics",
    "rebalance",
    "reduction",
    "segmentation",
    "volume_io",
]
