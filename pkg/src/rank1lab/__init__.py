"""rank1lab: exact experiments on rank-one cutting-and-stacking transformations."""

from .engine import (
    CocycleValue,
    Column,
    DerivativePartition,
    FromParent,
    LevelSet,
    ShiftResult,
    Spacer,
    StageRule,
    Tower,
    TransformationSpec,
    build_tower,
    cyclic_shift,
    difference,
    explicit_spec,
    factor_into_bases,
    intersect,
    measure,
    refine,
    rn_derivative,
    shift,
    stabilized_shift,
    union,
)
from .errors import (
    DepthError,
    Rank1LabError,
    ResourceCapError,
    SpecError,
    StabilizationError,
    UnresolvedMassError,
)

__version__ = "0.1.0"

__all__ = [
    "CocycleValue",
    "Column",
    "DepthError",
    "DerivativePartition",
    "FromParent",
    "LevelSet",
    "Rank1LabError",
    "ResourceCapError",
    "ShiftResult",
    "Spacer",
    "SpecError",
    "StabilizationError",
    "StageRule",
    "Tower",
    "TransformationSpec",
    "UnresolvedMassError",
    "build_tower",
    "cyclic_shift",
    "difference",
    "explicit_spec",
    "factor_into_bases",
    "intersect",
    "measure",
    "refine",
    "rn_derivative",
    "shift",
    "stabilized_shift",
    "union",
    "__version__",
]
