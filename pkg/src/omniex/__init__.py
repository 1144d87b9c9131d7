"""omniex: minimum-cost rate allocation and finite-field code construction
for broadcast data exchange among users with correlated side information.

The public surface groups into:

* ``field``    exact linear algebra over prime fields;
* ``setfun``   set-function machinery (submodularity, greedy vertices,
  brute-force minimization, Dilworth truncation);
* ``sources``  entropy oracles for linear, pmf and raw-table sources;
* ``rates``    the rate optimizers (sum rate, weighted, fixed denominator);
* ``netcode``  transmission scheme construction, verification, decoding;
* ``cli``      the ``omniex`` command line tool and document formats.
"""

from .errors import (
    ConstraintViolation,
    ConstructionFailed,
    DimensionMismatch,
    FieldTooSmall,
    InconsistentObservations,
    InfeasibleBeta,
    InfeasibleRates,
    InvalidN,
    NegativeWeight,
    NonConvergence,
    NonIntegerRates,
    NonTermination,
    OmniexError,
    TooLarge,
    UnitMismatch,
    UnknownReceiver,
    ValidationError,
    ZeroInverse,
)
from .field import FieldMatrix, ff_inv, is_prime, kron_block, rank, solve, stack
from .netcode import (
    ExpandedTransferMatrix,
    GreedySelection,
    MulticastNetwork,
    Slot,
    TransmissionScheme,
    broadcast_symbols,
    build_network,
    construct_code,
    decode,
    expanded_transfer_matrix,
    greedy_row_selection,
    receiver_ranks,
    scheme_assignment,
    transfer_matrix,
    user_observation,
    verify_omniscience,
)
from .rates import (
    IlpResult,
    LinearSegment,
    ModifiedEdmondResult,
    PartitionResult,
    RateVector,
    SumRateResult,
    WeightedResult,
    h_eval,
    ilp_rates,
    minimize_weighted,
    modified_edmond,
    modified_edmond_setfn,
    optimal_partition,
    rco_partition_formula,
    rco_sum_rate,
    verify_feasible,
)
from .setfun import (
    GroundSet,
    SetFunction,
    dilworth_bruteforce,
    dual,
    edmond_greedy,
    in_polyhedron,
    is_intersecting_submodular,
    is_submodular,
    sfm_constrained,
)
from .minnorm import sfm_minnorm
from .sources import (
    DmmsSource,
    EntropyOracle,
    LinearSource,
    TableSource,
    dmms_from_linear,
    make_dmms_source,
    make_linear_source,
    oracle_for,
    validate,
)

__version__ = "0.1.0"
