"""Online 3D bin packing with guaranteed placement stability.

Every placement is validated against the load-bearable regions of the
current stack before it is allowed, and when no stable placement exists
a rearrangement planner searches for a short, everywhere-stable sequence
of unpack/pack/repack operations that makes room.
"""

from .binstate import (
    FLOOR,
    BinState,
    Item,
    Lbcp,
    PackedItem,
    Placement,
    apply_pack,
    apply_unpack,
    footprint,
    footprint_slice,
    new_bin,
    pack_order,
    rebuild,
    state_from_json,
    state_to_json,
    states_equal,
    utilization,
)
from .errors import (
    BinPackError,
    BlockedItemError,
    CollisionError,
    FloatingItemError,
    HeightOverflowError,
    InconsistentStateError,
    NoCandidateError,
    OutOfBoundsError,
    UnknownItemError,
    UnstablePlacementError,
)
from .geometry import (
    ConvexPolygon2D,
    Point2,
    Rect2,
    area,
    clip_rect,
    contains_point,
    contains_region,
    convex_hull,
)
from .placement import (
    BridgePolicyClient,
    Candidate,
    Ems,
    PolicyDecision,
    enumerate_candidates,
    generate_ems,
    mask,
    policy_select,
    rank_items,
    value_estimate,
)
from .srp import (
    Operation,
    PrecedenceGraph,
    RearrangementPlan,
    SrpConfig,
    SrpFailure,
    apply_plan,
    astar_refine,
    build_precedence,
    mcts_search,
    plan,
    rollout,
    ucb1,
    unpackable_items,
)
from .stability import (
    CogSet,
    ValidationResult,
    cog_extremes,
    robust_contact_filter,
    support_height,
    support_polygon,
    validate,
    validate_at,
)

__version__ = "0.1.0"
