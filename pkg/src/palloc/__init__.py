"""Stability analysis and simulation of parallel-server systems under
probabilistic (p-allocation) routing."""
from .analytics import (CriticalValueReport, FrontServerDistribution, erlang_loss, front_server_distribution,
                        g_membership, overflow_rate, v_cr, v_cr_1m)
from .ctmc import (DriftReport, TruncatedChain, Variant, build_generator, compact_set_threshold, embedded_drift,
                   stationary_distribution, verify_negative_drift)
from .policy import (AllocationVector, OrderComparison, error_allocation, gsc_compare, hadamard, jsq_allocation,
                     pw_allocation, satisfies_maximality_condition, tie_aware_routing_distribution,
                     uniform_allocation)
from .state import OrderedState, SystemParams

__version__ = "0.1.0"

__all__ = [
    "CriticalValueReport", "FrontServerDistribution", "erlang_loss", "front_server_distribution",
    "g_membership", "overflow_rate", "v_cr", "v_cr_1m",
    "DriftReport", "TruncatedChain", "Variant", "build_generator", "compact_set_threshold", "embedded_drift",
    "stationary_distribution", "verify_negative_drift",
    "AllocationVector", "OrderComparison", "error_allocation", "gsc_compare", "hadamard", "jsq_allocation",
    "pw_allocation", "satisfies_maximality_condition", "tie_aware_routing_distribution", "uniform_allocation",
    "OrderedState", "SystemParams",
]
