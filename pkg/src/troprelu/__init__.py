"""Sound range analysis of ReLU networks via tropical polyhedra and zones."""

from .dbm import (
    Box,
    Dbm,
    EMPTY,
    OctDbm,
    best_zone_of_points,
    dbm_box,
    dbm_close,
    dbm_contains,
    dbm_intersect,
)
from .layers import (
    AffineLayer,
    OctAbsConstants,
    ZoneAbsConstants,
    oct_constants,
    oct_dbm,
    oct_internal,
    oct_internal_direct,
    zone_constants,
    zone_dbm,
    zone_external,
    zone_internal,
)
from .maxplus import BOTTOM, DEFAULT_EPS, UNIT
from .network import (
    AbsDomain,
    AnalysisOptions,
    AnalysisResult,
    ChainMode,
    Network,
    analyze,
    relu_extend,
    relu_external,
    relu_internal,
)
from .sherlock import parse_sherlock, serialize_sherlock, write_sherlock
from .speccheck import (
    LinearAssertion,
    Verdict,
    VerdictStatus,
    check,
    check_with_subdivision,
    min_over_zone,
)
from .subdivision import (
    SubdivisionConfig,
    SubdivisionGrid,
    SubdivisionMode,
    analyze_cellwise,
    subdivide_constraints,
    subdivide_scalar,
)
from .tropical import (
    TropExternal,
    TropInternal,
    emb_box_internal,
    emb_external,
    emb_internal,
    external_membership,
    external_membership_many,
    extreme_filter,
    intersect_external,
    internal_membership,
    internal_membership_many,
    internal_to_zone,
    proj_internal,
    union_internal,
    zone_to_internal,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
