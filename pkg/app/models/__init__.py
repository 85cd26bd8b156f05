from .schemas import (
    FactoredInteger,
    PrimeRange,
    GroupShape,
    SearchWindow,
    Witness,
    OccurrenceResult,
    CountReport,
    CurveRecord,
    RuckConstraint,
    ShapeCount,
    Census,
    MOfGResult,
    CohenLenstraRatio,
    RhoSpec,
    CharacterSpec,
    SieveInstance,
    DiscrepancyQuery,
    TheoremRatios,
    ExperimentConfig,
    Report,
)

__all__ = [
    "FactoredInteger",
    "PrimeRange",
    "GroupShape",
    "SearchWindow",
    "Witness",
    "OccurrenceResult",
    "CountReport",
    "CurveRecord",
    "RuckConstraint",
    "ShapeCount",
    "Census",
    "MOfGResult",
    "CohenLenstraRatio",
    "RhoSpec",
    "CharacterSpec",
    "SieveInstance",
    "DiscrepancyQuery",
    "TheoremRatios",
    "ExperimentConfig",
    "Report",
]
