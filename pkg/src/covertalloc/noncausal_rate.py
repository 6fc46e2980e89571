"""Power minimization under a sum covert-rate floor, full channel knowledge.

Minimizes total transmit power sum (e^R - 1)/h subject to a sum-rate floor,
per-block covertness caps R <= log(1 + eps*h/g), and the less-noisy margin
constraint.  Mirrors the power solver: infeasibility screen, capped rate
water-filling of the relaxation, penalty-method projected gradient descent,
and a scaled cap-proportional fallback found by bisection.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import BlockSnrs
from .errors import ConfigurationError, NumericalError
from .noncausal_power import MARGIN_SLACK, STALL_WINDOW, check_feasible
from .numerics import BisectionSpec, PenaltyParams
from .outcomes import AllocationOutcome, SolveStatus


@dataclass(frozen=True)
class RateProblem:
    snrs: BlockSnrs
    r0: float    # required sum rate, nats
    eps: float   # per-block covertness budget, linear

    def __post_init__(self):
        if self.r0 <= 0:
            raise ConfigurationError(f"required sum rate must be positive, got {self.r0}")
        if self.eps <= 0:
            raise ConfigurationError(f"covertness budget must be positive, got {self.eps}")


@dataclass(frozen=True)
class RateAllocation:
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=np.float64))


def rate_caps(problem: RateProblem) -> np.ndarray:
    """Per-block maximum rates log(1 + eps*h/g) implied by the covertness caps."""
    return np.log1p(problem.eps * problem.snrs.h / problem.snrs.g)


def total_power(r, snrs: BlockSnrs) -> float:
    arr = r.r if isinstance(r, RateAllocation) else np.asarray(r, dtype=np.float64)
    return float(kernels.total_power(arr, snrs.h))


def delta_rate(r, snrs: BlockSnrs) -> float:
    """Less-noisy margin: sum R - sum log(1 + (e^R - 1) g/h)."""
    arr = r.r if isinstance(r, RateAllocation) else np.asarray(r, dtype=np.float64)
    return float(kernels.delta_rate(arr, snrs.h, snrs.g))


def screen_infeasible(problem: RateProblem) -> bool:
    """True means certainly infeasible: no h >= g block, or caps below the floor."""
    if not check_feasible(problem.snrs):
        return True
    return float(np.sum(rate_caps(problem))) < problem.r0


def kkt_rate(problem: RateProblem, tol: BisectionSpec = BisectionSpec()) -> RateAllocation:
    """Capped rate water-filling of the relaxation; meets the floor from above.

    May violate the margin constraint.
    """
    if screen_infeasible(problem):
        raise ConfigurationError("relaxation is only solved for unscreened instances")
    r, _level = kernels.kkt_rate(problem.snrs.h, problem.snrs.g,
                                 problem.eps, problem.r0, tol.rel_tol)
    return RateAllocation(r)


def penalized_objective(r: np.ndarray, b: float, eta: float, problem: RateProblem) -> float:
    """Total power plus the squared penalty on the slack-shifted margin."""
    d = delta_rate(r, problem.snrs)
    return total_power(r, problem.snrs) + eta * (d - b) ** 2


def penalized_gradient(r: np.ndarray, b: float, eta: float, problem: RateProblem):
    """Analytic gradient of the penalized objective wrt (r, b)."""
    h, g = problem.snrs.h, problem.snrs.g
    r = np.asarray(r, dtype=np.float64)
    d = delta_rate(r, problem.snrs)
    er = np.exp(r)
    coef = 2.0 * eta * (d - b)
    grad_r = er / h + coef * (1.0 - g / h) / (1.0 + (er - 1.0) * g / h)
    return grad_r, -coef


def fallback_alpha(problem: RateProblem,
                   tol_alpha: BisectionSpec = BisectionSpec()) -> AllocationOutcome:
    """Scale the cap-proportional power shape until the rate floor is met.

    Power flows only to h >= g blocks, so the margin constraint holds for any
    scale; if even the full caps cannot reach the floor the method declares
    infeasibility (the instance itself may still be feasible).
    """
    snrs = problem.snrs
    if not check_feasible(snrs):
        zero = RateAllocation(np.zeros(snrs.num_blocks))
        return AllocationOutcome(zero, SolveStatus.INFEASIBLE, 0.0, 0.0)
    mask = snrs.h >= snrs.g
    full = np.where(mask, problem.eps * snrs.h / snrs.g, 0.0)

    def rate_sum(alpha):
        return float(np.sum(np.log1p(alpha * full)))

    if rate_sum(1.0) < problem.r0:
        zero = RateAllocation(np.zeros(snrs.num_blocks))
        return AllocationOutcome(zero, SolveStatus.DECLARED_INFEASIBLE, 0.0, 0.0)
    # bisect on [0, 1], keeping the endpoint that satisfies the floor
    tol = tol_alpha.rel_tol * max(problem.r0, 1.0)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = rate_sum(mid)
        if s >= problem.r0:
            hi = mid
            if s - problem.r0 <= tol:
                break
        else:
            lo = mid
    alpha0 = hi
    r = RateAllocation(np.log1p(alpha0 * full))
    return AllocationOutcome(r, SolveStatus.TRIVIAL_FALLBACK,
                             total_power(r, snrs), delta_rate(r, snrs))


def _gradient_candidates(problem: RateProblem, init: np.ndarray, params: PenaltyParams):
    """One penalty PGD run plus feasibility polish; returns [(power, r), ...]."""
    snrs = problem.snrs
    caps = rate_caps(problem)
    final, b, iters, converged, best, has_best, finite = kernels.pgd_run(
        snrs.h, snrs.g, problem.eps, problem.r0, np.asarray(init, dtype=np.float64),
        params.c, params.alpha1, params.alpha2, params.n_per_update,
        params.gamma_growth, params.delta_stop, params.max_iters,
        MARGIN_SLACK, STALL_WINDOW)
    if not finite:
        raise NumericalError(
            f"non-finite values in rate PGD after {iters} iterations")
    cands = []
    if kernels.delta_rate(final, snrs.h, snrs.g) >= -MARGIN_SLACK:
        cands.append(final)
    else:
        polished, ok = kernels.polish_rate(final, snrs.h, snrs.g, caps, problem.r0)
        if ok:
            cands.append(polished)
    if has_best:
        cands.append(best)
    out = []
    for r in cands:
        refined, ok = kernels.refine_rate(r, snrs.h, snrs.g, problem.eps,
                                          problem.r0, 400)
        if ok:
            out.append((kernels.total_power(refined, snrs.h), refined))
        out.append((kernels.total_power(r, snrs.h), r))
    return out


def pgd_solve(problem: RateProblem, init: RateAllocation,
              params: PenaltyParams = PenaltyParams(),
              tol_alpha: BisectionSpec = BisectionSpec()) -> AllocationOutcome:
    """Penalty-method gradient descent from `init`, bounded by the fallback.

    Runs the projected descent from the given initializer and from the
    fallback allocation when it exists; the lowest-power feasible candidate
    wins, never exceeding the fallback's power.  With no feasible candidate
    and no fallback, declares infeasibility.
    """
    snrs = problem.snrs
    if screen_infeasible(problem):
        raise ConfigurationError("pgd_solve requires an unscreened instance")
    init_r = np.asarray(init.r if isinstance(init, RateAllocation) else init,
                        dtype=np.float64)
    fb = fallback_alpha(problem, tol_alpha)
    cands = _gradient_candidates(problem, init_r, params)
    if fb.feasible and not np.array_equal(init_r, fb.allocation.r):
        cands += _gradient_candidates(problem, fb.allocation.r, params)
    floor = problem.r0 - 1e-9
    best_power, best_r = np.inf, None
    for pw, r in cands:
        if float(np.sum(r)) >= floor and pw < best_power:
            best_power, best_r = pw, r
    if fb.feasible and fb.objective <= best_power:
        return fb
    if best_r is None:
        zero = RateAllocation(np.zeros(snrs.num_blocks))
        return AllocationOutcome(zero, SolveStatus.DECLARED_INFEASIBLE, 0.0, 0.0)
    alloc = RateAllocation(best_r)
    return AllocationOutcome(alloc, SolveStatus.PGA_FEASIBLE,
                             best_power, delta_rate(best_r, snrs))


def solve_noncausal_rate(problem: RateProblem,
                         params: PenaltyParams = PenaltyParams(),
                         tol: BisectionSpec = BisectionSpec(),
                         tol_alpha: BisectionSpec = BisectionSpec()) -> AllocationOutcome:
    """Three-step solve: screen, capped rate water-filling, penalty descent."""
    snrs = problem.snrs
    if screen_infeasible(problem):
        zero = RateAllocation(np.zeros(snrs.num_blocks))
        return AllocationOutcome(zero, SolveStatus.INFEASIBLE, 0.0, 0.0)
    kkt = kkt_rate(problem, tol)
    d = delta_rate(kkt.r, snrs)
    if d >= -MARGIN_SLACK:
        return AllocationOutcome(kkt, SolveStatus.OPTIMAL_CONVEX,
                                 total_power(kkt.r, snrs), d)
    return pgd_solve(problem, kkt, params, tol_alpha)
