"""Solver outcome container shared by the power and rate allocators."""

import enum
from dataclasses import dataclass


class SolveStatus(enum.Enum):
    # the relaxed convex solution already satisfies the margin constraint
    OPTIMAL_CONVEX = "optimal_convex"
    # the penalty-method gradient run produced the returned allocation
    PGA_FEASIBLE = "pga_feasible"
    # the closed-form cap-proportional allocation was returned instead
    TRIVIAL_FALLBACK = "trivial_fallback"
    # provably infeasible (failed a necessary condition)
    INFEASIBLE = "infeasible"
    # the method could not find a feasible point; the instance may still be feasible
    DECLARED_INFEASIBLE = "declared_infeasible"
    # produced by a sequential (causal) rollout
    SEQUENTIAL_FEASIBLE = "sequential_feasible"


INFEASIBLE_STATUSES = frozenset({SolveStatus.INFEASIBLE, SolveStatus.DECLARED_INFEASIBLE})


@dataclass(frozen=True)
class AllocationOutcome:
    """Allocation plus which solver step produced it.

    `objective` is the achieved sum covert rate in nats for power problems and
    the total transmit power (linear) for rate problems; `margin` is the
    less-noisy margin of the allocation.  Infeasible outcomes carry a zero
    allocation and objective 0.
    """
    allocation: object
    status: SolveStatus
    objective: float
    margin: float

    @property
    def feasible(self) -> bool:
        return self.status not in INFEASIBLE_STATUSES
