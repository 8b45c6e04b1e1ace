"""Exact online fair division with monotone utilities."""

from fairdiv.axioms import (
    Verdict,
    check,
    check_ef1,
    check_efa,
    check_efp,
    check_efx,
    check_gsp,
    check_osp,
    check_pea,
    check_pep,
    check_sp,
    misreport_lattice,
)
from fairdiv.core import (
    AllocationDistribution,
    CapacityError,
    DomainFlags,
    Problem,
    SchemaError,
    UtilityFunction,
    bundle,
    bundle_utility_of,
    classify,
    marginal,
    validate_monotone,
)
from fairdiv.mechanisms import (
    SINCERE,
    Mechanism,
    MechanismState,
    StrategyProfile,
    expected_utilities,
    get_mechanism,
    round_probabilities,
    run,
)
from fairdiv.oracles import (
    LpProblem,
    enumerate_allocations,
    lp_solve,
    mixture_dominance_oracle,
    offline_exists,
)

__version__ = "0.1.0"
