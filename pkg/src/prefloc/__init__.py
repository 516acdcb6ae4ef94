"""Preference-driven evolutionary search for p-facility selection."""

from .errors import EnumerationCapError, NumericalFault, PreflocError, ValidationError
from .instance import (
    BoundsBudget,
    CandidateSite,
    DemandPoint,
    GeneratorConfig,
    Instance,
    ObjectiveBounds,
    Solution,
    compute_bounds,
    distances,
    generate_instance,
    load_instance,
    save_instance,
)
from .objectives import (
    N_OBJECTIVES,
    ORIENTATION,
    NormalizedVector,
    ObjectiveVector,
    closest_distances,
    deviation,
    evaluate,
    normalize,
)

__all__ = [
    "BoundsBudget",
    "CandidateSite",
    "DemandPoint",
    "EnumerationCapError",
    "GeneratorConfig",
    "Instance",
    "N_OBJECTIVES",
    "NormalizedVector",
    "NumericalFault",
    "ORIENTATION",
    "ObjectiveBounds",
    "ObjectiveVector",
    "PreflocError",
    "Solution",
    "ValidationError",
    "closest_distances",
    "compute_bounds",
    "deviation",
    "distances",
    "evaluate",
    "generate_instance",
    "load_instance",
    "normalize",
    "save_instance",
]
