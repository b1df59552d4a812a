from ksrecon.metrics.error import nmse
from ksrecon.metrics.report import (
    AggregateRow,
    MetricsReport,
    MetricsRow,
    TTestRow,
    build_report,
    compare_methods,
    summarize,
)
from ksrecon.metrics.scoring import score_volume
from ksrecon.metrics.sharpness import (
    VesselProfile,
    deriche_gradient,
    extract_profile,
    gaussian_blur_profile,
    vessel_sharpness,
)
from ksrecon.metrics.stats import paired_ttest

__all__ = [
    "AggregateRow",
    "MetricsReport",
    "MetricsRow",
    "TTestRow",
    "VesselProfile",
    "build_report",
    "compare_methods",
    "deriche_gradient",
    "extract_profile",
    "gaussian_blur_profile",
    "nmse",
    "paired_ttest",
    "score_volume",
    "summarize",
    "vessel_sharpness",
]
