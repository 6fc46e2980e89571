"""Sum-covert-rate maximization with full channel knowledge.

Maximizes sum log(1 + h*P) over per-block powers subject to a total power
budget, per-block covertness caps g*P <= eps, and the less-noisy margin
constraint.  Solved in three steps: feasibility check, capped water-filling
of the relaxation, and a penalty-method projected gradient ascent.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import BlockSnrs
from .errors import ConfigurationError, NumericalError
from .numerics import BisectionSpec, PenaltyParams
from .outcomes import AllocationOutcome, SolveStatus

MARGIN_SLACK = 1e-8      # numerical slack accepted on the margin constraint
STALL_WINDOW = 30_000    # gradient iterations without a feasible improvement


@dataclass(frozen=True)
class PowerProblem:
    snrs: BlockSnrs
    p0: float    # total power budget, linear
    eps: float   # per-block covertness budget, linear

    def __post_init__(self):
        if self.p0 <= 0:
            raise ConfigurationError(f"power budget must be positive, got {self.p0}")
        if self.eps <= 0:
            raise ConfigurationError(f"covertness budget must be positive, got {self.eps}")


@dataclass(frozen=True)
class PowerAllocation:
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=np.float64))


def check_feasible(snrs: BlockSnrs) -> bool:
    """A positive covert rate is achievable iff some block has h >= g."""
    return bool(np.any(snrs.h >= snrs.g))


def sum_rate(p: np.ndarray, snrs: BlockSnrs) -> float:
    return float(np.sum(np.log1p(np.asarray(p) * snrs.h)))


def delta_power(p, snrs: BlockSnrs) -> float:
    """Less-noisy margin: sum log(1+ph) - sum log(1+pg)."""
    arr = p.p if isinstance(p, PowerAllocation) else np.asarray(p, dtype=np.float64)
    return float(kernels.delta_power(arr, snrs.h, snrs.g))


def trivial_power(problem: PowerProblem) -> PowerAllocation:
    """Cap-proportional allocation on the h >= g blocks; feasible by construction."""
    snrs = problem.snrs
    if not check_feasible(snrs):
        raise ConfigurationError("trivial allocation requires some block with h >= g")
    mask = snrs.h >= snrs.g
    caps = np.where(mask, problem.eps / snrs.g, 0.0)
    alpha = min(1.0, problem.p0 / float(caps.sum()))
    return PowerAllocation(alpha * caps)


def kkt_power(problem: PowerProblem, tol: BisectionSpec = BisectionSpec()) -> PowerAllocation:
    """Capped water-filling solution of the relaxation (margin constraint dropped).

    If the caps fit inside the budget every block sits at its cap; otherwise
    the water level is found by bisection so the budget is met (from below,
    within tolerance).  May violate the margin constraint.
    """
    if not check_feasible(problem.snrs):
        raise ConfigurationError("relaxation is only solved for feasible instances")
    p, _level = kernels.kkt_power(problem.snrs.h, problem.snrs.g,
                                  problem.eps, problem.p0, tol.rel_tol)
    return PowerAllocation(p)


def penalized_objective(p: np.ndarray, b: float, eta: float, problem: PowerProblem) -> float:
    """Sum rate minus the squared penalty on the slack-shifted margin."""
    d = delta_power(p, problem.snrs)
    return sum_rate(p, problem.snrs) - eta * (d - b) ** 2


def penalized_gradient(p: np.ndarray, b: float, eta: float, problem: PowerProblem):
    """Analytic gradient of the penalized objective wrt (p, b)."""
    h, g = problem.snrs.h, problem.snrs.g
    p = np.asarray(p, dtype=np.float64)
    d = delta_power(p, problem.snrs)
    gr_rate = h / (1.0 + p * h)
    gr_delta = gr_rate - g / (1.0 + p * g)
    coef = 2.0 * eta * (d - b)
    return gr_rate - coef * gr_delta, coef


def _gradient_candidates(problem: PowerProblem, init: np.ndarray, params: PenaltyParams):
    """One penalty PGA run plus feasibility polish; returns [(rate, p), ...]."""
    snrs = problem.snrs
    final, b, iters, converged, best, has_best, finite = kernels.pga_run(
        snrs.h, snrs.g, problem.eps, problem.p0, np.asarray(init, dtype=np.float64),
        params.c, params.alpha1, params.alpha2, params.n_per_update,
        params.gamma_growth, params.delta_stop, params.max_iters,
        MARGIN_SLACK, STALL_WINDOW)
    if not finite:
        raise NumericalError(
            f"non-finite values in power PGA after {iters} iterations "
            f"(init rate {sum_rate(init, snrs):.6g})")
    cands = []
    if kernels.delta_power(final, snrs.h, snrs.g) >= -MARGIN_SLACK:
        cands.append(final)
    else:
        polished, ok = kernels.polish_power(final, snrs.h, snrs.g)
        if ok:
            cands.append(polished)
    if has_best:
        cands.append(best)
    out = []
    for p in cands:
        refined, ok = kernels.refine_power(p, snrs.h, snrs.g, problem.eps,
                                           problem.p0, 400)
        if ok:
            out.append((kernels.sum_rate(refined, snrs.h), refined))
        out.append((kernels.sum_rate(p, snrs.h), p))
    return out


def pga_solve(problem: PowerProblem, init: PowerAllocation,
              params: PenaltyParams = PenaltyParams()) -> AllocationOutcome:
    """Penalty-method gradient ascent from `init`, with the trivial fallback.

    Runs the projected ascent from the given initializer and from the trivial
    allocation, tracking the best feasible iterate of each run; near-feasible
    endpoints are polished onto the margin surface and hill-climb refined.
    The best feasible candidate is returned, and never less than the trivial
    allocation's rate.
    """
    snrs = problem.snrs
    if not check_feasible(snrs):
        raise ConfigurationError("pga_solve requires a feasible instance")
    init_p = np.asarray(init.p if isinstance(init, PowerAllocation) else init,
                        dtype=np.float64)
    triv = trivial_power(problem)
    cands = _gradient_candidates(problem, init_p, params)
    if not np.array_equal(init_p, triv.p):
        cands += _gradient_candidates(problem, triv.p, params)
    rate_triv = kernels.sum_rate(triv.p, snrs.h)
    best_rate, best_p = rate_triv, None
    for r, p in cands:
        if r > best_rate:
            best_rate, best_p = r, p
    if best_p is None:
        return AllocationOutcome(triv, SolveStatus.TRIVIAL_FALLBACK,
                                 rate_triv, delta_power(triv.p, snrs))
    alloc = PowerAllocation(best_p)
    return AllocationOutcome(alloc, SolveStatus.PGA_FEASIBLE,
                             best_rate, delta_power(best_p, snrs))


def solve_noncausal_power(problem: PowerProblem,
                          params: PenaltyParams = PenaltyParams(),
                          tol: BisectionSpec = BisectionSpec()) -> AllocationOutcome:
    """Three-step solve: feasibility, capped water-filling, penalty ascent."""
    snrs = problem.snrs
    if not check_feasible(snrs):
        zero = PowerAllocation(np.zeros(snrs.num_blocks))
        return AllocationOutcome(zero, SolveStatus.INFEASIBLE, 0.0, 0.0)
    kkt = kkt_power(problem, tol)
    d = delta_power(kkt.p, snrs)
    if d >= -MARGIN_SLACK:
        return AllocationOutcome(kkt, SolveStatus.OPTIMAL_CONVEX,
                                 sum_rate(kkt.p, snrs), d)
    return pga_solve(problem, kkt, params)
