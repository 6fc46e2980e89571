"""Compiled numerical kernels for the penalty solvers.

Everything here is numba-jitted and shared between the public solver APIs
and the Monte-Carlo harness; the Python wrappers own validation, statuses,
and candidate selection.  All loops are sequential and deterministic.
"""

import numpy as np
from numba import njit

POCS_MOVE_TOL = 1e-12


# ---------------------------------------------------------------------------
# objectives and margins
# ---------------------------------------------------------------------------

@njit(cache=True)
def sum_rate(p, h):
    s = 0.0
    for i in range(p.shape[0]):
        s += np.log1p(p[i] * h[i])
    return s


@njit(cache=True)
def delta_power(p, h, g):
    s = 0.0
    for i in range(p.shape[0]):
        s += np.log1p(p[i] * h[i]) - np.log1p(p[i] * g[i])
    return s


@njit(cache=True)
def total_power(r, h):
    s = 0.0
    for i in range(r.shape[0]):
        s += np.expm1(r[i]) / h[i]
    return s


@njit(cache=True)
def delta_rate(r, h, g):
    s = 0.0
    for i in range(r.shape[0]):
        s += r[i] - np.log1p(np.expm1(r[i]) * g[i] / h[i])
    return s


# ---------------------------------------------------------------------------
# projections onto the two feasible sets
# ---------------------------------------------------------------------------

@njit(cache=True)
def pocs_power(p, caps, total, cycles):
    """In-place alternating projection onto box [0, caps] and {sum <= total}."""
    L = p.shape[0]
    for _ in range(cycles):
        move = 0.0
        s = 0.0
        for i in range(L):
            v = p[i]
            if v < 0.0:
                v = 0.0
            elif v > caps[i]:
                v = caps[i]
            move += abs(v - p[i])
            p[i] = v
            s += v
        if s > total:
            sc = total / s
            for i in range(L):
                move += p[i] * (1.0 - sc)
                p[i] *= sc
        if move < POCS_MOVE_TOL:
            break


@njit(cache=True)
def pocs_rate(r, caps, floor, cycles):
    """In-place alternating projection onto box [0, caps] and {sum >= floor}."""
    L = r.shape[0]
    for _ in range(cycles):
        move = 0.0
        s = 0.0
        for i in range(L):
            v = r[i]
            if v < 0.0:
                v = 0.0
            elif v > caps[i]:
                v = caps[i]
            move += abs(v - r[i])
            r[i] = v
            s += v
        if s < floor:
            if s <= 0.0:
                # radial rescale undefined at the origin; seed uniformly
                for i in range(L):
                    v = floor / L
                    if v > caps[i]:
                        v = caps[i]
                    move += abs(v - r[i])
                    r[i] = v
            else:
                sc = floor / s
                for i in range(L):
                    move += r[i] * (sc - 1.0)
                    r[i] *= sc
        if move < POCS_MOVE_TOL:
            break
    # end on the box so per-block caps hold exactly
    for i in range(L):
        if r[i] < 0.0:
            r[i] = 0.0
        elif r[i] > caps[i]:
            r[i] = caps[i]


# ---------------------------------------------------------------------------
# KKT allocations via bisection on the common level
# ---------------------------------------------------------------------------

@njit(cache=True)
def _power_at_level(zeta, h, caps, out):
    s = 0.0
    for i in range(h.shape[0]):
        v = zeta - 1.0 / h[i]
        if v < 0.0:
            v = 0.0
        elif v > caps[i]:
            v = caps[i]
        out[i] = v
        s += v
    return s


@njit(cache=True)
def kkt_power(h, g, eps, p0, rel_tol):
    """Water-filling with per-block caps eps/g; keeps sum <= p0.

    Returns (allocation, level); level is inf on the all-caps branch.
    """
    L = h.shape[0]
    caps = eps / g
    out = np.empty(L)
    tot = 0.0
    for i in range(L):
        tot += caps[i]
    if tot <= p0:
        for i in range(L):
            out[i] = caps[i]
        return out, np.inf
    lo = 1e-12
    hi = 1.0
    while _power_at_level(hi, h, caps, out) < p0 and hi < 1e12:
        hi *= 2.0
    tol = rel_tol * max(p0, 1.0)
    level = lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = _power_at_level(mid, h, caps, out)
        if abs(s - p0) <= tol and s <= p0:
            level = mid
            break
        if s < p0:
            lo = mid
        else:
            hi = mid
        level = lo
    # the lo end never exceeds the budget
    _power_at_level(level, h, caps, out)
    return out, level


@njit(cache=True)
def _rate_at_level(lam, h, caps, out):
    s = 0.0
    for i in range(h.shape[0]):
        x = lam * h[i]
        v = np.log(x) if x > 1.0 else 0.0
        if v > caps[i]:
            v = caps[i]
        out[i] = v
        s += v
    return s


@njit(cache=True)
def kkt_rate(h, g, eps, r0, rel_tol):
    """Rate water-filling with caps log(1 + eps*h/g); keeps sum >= r0.

    Returns (allocation, multiplier).
    """
    L = h.shape[0]
    caps = np.empty(L)
    lo = 1.0 / h[0]
    hi = 0.0
    for i in range(L):
        caps[i] = np.log1p(eps * h[i] / g[i])
        inv = 1.0 / h[i]
        if inv < lo:
            lo = inv
        top = inv + eps / g[i]
        if top > hi:
            hi = top
    out = np.empty(L)
    while _rate_at_level(hi, h, caps, out) < r0 and hi < 1e12:
        hi *= 2.0
    tol = rel_tol * max(r0, 1.0)
    level = hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = _rate_at_level(mid, h, caps, out)
        if abs(s - r0) <= tol and s >= r0:
            level = mid
            break
        if s < r0:
            lo = mid
        else:
            hi = mid
        level = hi
    # the hi end never undershoots the floor
    _rate_at_level(level, h, caps, out)
    return out, level


# ---------------------------------------------------------------------------
# feasibility polish: drive the margin to >= 0 at negligible objective cost
# ---------------------------------------------------------------------------

@njit(cache=True)
def polish_power(p, h, g):
    """Scale power off the h<g blocks until the margin is nonnegative.

    Removing power from a block with h < g strictly increases the margin, so
    bisecting the scale factor and keeping the feasible end lands exactly on
    margin >= 0.  Returns (allocation, ok).
    """
    L = p.shape[0]
    out = np.empty(L)
    if delta_power(p, h, g) >= 0.0:
        for i in range(L):
            out[i] = p[i]
        return out, True
    for i in range(L):
        out[i] = p[i] if h[i] >= g[i] else 0.0
    if delta_power(out, h, g) < 0.0:
        return out, False
    s_lo, s_hi = 0.0, 1.0
    for _ in range(80):
        s = 0.5 * (s_lo + s_hi)
        for i in range(L):
            out[i] = p[i] if h[i] >= g[i] else p[i] * (1.0 - s)
        if delta_power(out, h, g) >= 0.0:
            s_hi = s
        else:
            s_lo = s
    for i in range(L):
        out[i] = p[i] if h[i] >= g[i] else p[i] * (1.0 - s_hi)
    return out, True


@njit(cache=True)
def _shift_bad_rate(s, r, h, g, caps, headroom, out):
    """Scale h<g rates by (1-s) and spread the removed rate over good headroom."""
    loss = 0.0
    for i in range(r.shape[0]):
        if h[i] < g[i]:
            out[i] = r[i] * (1.0 - s)
            loss += r[i] * s
        else:
            out[i] = r[i]
    if headroom > 0.0:
        w = loss / headroom
        for i in range(r.shape[0]):
            if h[i] >= g[i]:
                out[i] = r[i] + w * (caps[i] - r[i])


@njit(cache=True)
def polish_rate(r, h, g, caps, r0):
    """Shift rate from h<g blocks onto capped headroom of h>=g blocks.

    Keeps the sum (the rate floor) intact while the margin rises; fails when
    the good blocks lack the headroom to absorb the displaced rate.
    Returns (allocation, ok).
    """
    L = r.shape[0]
    out = np.empty(L)
    if delta_rate(r, h, g) >= 0.0:
        for i in range(L):
            out[i] = r[i]
        return out, True
    bad_total = 0.0
    headroom = 0.0
    for i in range(L):
        if h[i] < g[i]:
            bad_total += r[i]
        else:
            headroom += caps[i] - r[i]
    if bad_total <= 0.0:
        for i in range(L):
            out[i] = r[i]
        return out, False
    s_max = 1.0
    if bad_total > headroom:
        s_max = headroom / bad_total
    _shift_bad_rate(s_max, r, h, g, caps, headroom, out)
    if delta_rate(out, h, g) < 0.0:
        return out, False
    s_lo, s_hi = 0.0, s_max
    for _ in range(80):
        s = 0.5 * (s_lo + s_hi)
        _shift_bad_rate(s, r, h, g, caps, headroom, out)
        if delta_rate(out, h, g) >= 0.0:
            s_hi = s
        else:
            s_lo = s
    _shift_bad_rate(s_hi, r, h, g, caps, headroom, out)
    return out, True


# ---------------------------------------------------------------------------
# monotone feasible hill-climb refinement
# ---------------------------------------------------------------------------

@njit(cache=True)
def refine_power(p_in, h, g, eps, p0, max_rounds):
    """Backtracking ascent on the sum rate with exact feasibility restoration.

    Completes the slow tangential ascent the fixed-step gradient runs leave
    unfinished; every accepted iterate satisfies the box, budget, and margin
    constraints.  Returns (allocation, ok).
    """
    L = p_in.shape[0]
    caps = eps / g
    p, ok = polish_power(p_in, h, g)
    if not ok:
        return p_in.copy(), False
    r_cur = sum_rate(p, h)
    step = 0.1 * p0
    tmp = np.empty(L)
    rounds = 0
    while step > 1e-12 and rounds < max_rounds:
        rounds += 1
        s = 0.0
        for i in range(L):
            v = p[i] + step * h[i] / (1.0 + p[i] * h[i])
            if v < 0.0:
                v = 0.0
            elif v > caps[i]:
                v = caps[i]
            tmp[i] = v
            s += v
        if s > p0:
            sc = p0 / s
            for i in range(L):
                tmp[i] *= sc
        cand, okc = polish_power(tmp, h, g)
        if not okc:
            step *= 0.5
            continue
        r_new = sum_rate(cand, h)
        if r_new > r_cur + 1e-13:
            for i in range(L):
                p[i] = cand[i]
            r_cur = r_new
        else:
            step *= 0.5
    return p, True


@njit(cache=True)
def refine_rate(r_in, h, g, eps, r0, max_rounds):
    """Backtracking descent on total power, mirroring refine_power.

    Every accepted iterate satisfies the caps, the sum-rate floor, and the
    margin constraint.  Returns (allocation, ok).
    """
    L = r_in.shape[0]
    caps = np.empty(L)
    cap_max = 0.0
    for i in range(L):
        caps[i] = np.log1p(eps * h[i] / g[i])
        if caps[i] > cap_max:
            cap_max = caps[i]
    r, ok = polish_rate(r_in, h, g, caps, r0)
    if not ok:
        return r_in.copy(), False
    p_cur = total_power(r, h)
    step = 0.1 * cap_max
    tmp = np.empty(L)
    rounds = 0
    while step > 1e-12 and rounds < max_rounds:
        rounds += 1
        for i in range(L):
            tmp[i] = r[i] - step * np.exp(r[i]) / h[i]
        pocs_rate(tmp, caps, r0, 100)
        cand, okc = polish_rate(tmp, h, g, caps, r0)
        if not okc:
            step *= 0.5
            continue
        p_new = total_power(cand, h)
        if p_new < p_cur - 1e-13:
            for i in range(L):
                r[i] = cand[i]
            p_cur = p_new
        else:
            step *= 0.5
    return r, True


# ---------------------------------------------------------------------------
# penalty-method projected gradient runs
# ---------------------------------------------------------------------------

@njit(cache=True)
def pga_run(h, g, eps, p0, p_init, c, a1, a2, n_up, growth, delta_stop,
            max_iters, slack, stall_window):
    """Projected gradient ascent on the penalized sum-rate objective.

    Returns (final, b, iters, converged, best, has_best, finite) where
    `best` is the highest-rate iterate seen with margin >= -slack.
    """
    L = h.shape[0]
    caps = eps / g
    p = p_init.copy()
    b = 0.0
    best = p.copy()
    best_rate = -1.0
    has_best = False
    d0 = delta_power(p, h, g)
    rate0 = sum_rate(p, h)
    if d0 == 0.0:
        return p, b, 0, True, best, False, True
    eta0 = c if rate0 == 0.0 else c * rate0 / (d0 * d0)
    if not np.isfinite(eta0):
        return p, b, 0, True, best, False, True
    pn = np.empty(L)
    n = 0
    converged = False
    last_improve = 0
    while n < max_iters:
        eta = eta0 * (1.0 + growth * (n // n_up))
        d = delta_power(p, h, g)
        if not np.isfinite(d):
            return p, b, n, False, best, has_best, False
        if d >= -slack:
            r = sum_rate(p, h)
            if (not has_best) or r > best_rate + 1e-9:
                best_rate = r
                for i in range(L):
                    best[i] = p[i]
                has_best = True
                last_improve = n
        coef = 2.0 * eta * (d - b)
        s = 0.0
        for i in range(L):
            grh = h[i] / (1.0 + p[i] * h[i])
            grd = grh - g[i] / (1.0 + p[i] * g[i])
            v = p[i] + a1 * (grh - coef * grd)
            if v < 0.0:
                v = 0.0
            elif v > caps[i]:
                v = caps[i]
            pn[i] = v
            s += v
        if s > p0:
            sc = p0 / s
            for i in range(L):
                pn[i] *= sc
        bn = b + a2 * coef
        if bn < 0.0:
            bn = 0.0
        move = abs(bn - b)
        dist2 = 0.0
        for i in range(L):
            dd = pn[i] - p[i]
            dist2 += dd * dd
            p[i] = pn[i]
        b = bn
        dist = np.sqrt(dist2)
        if dist > move:
            move = dist
        n += 1
        if move < delta_stop:
            converged = True
            break
        if has_best and n - last_improve > stall_window:
            break
    return p, b, n, converged, best, has_best, True


@njit(cache=True)
def pgd_run(h, g, eps, r0, r_init, c, a1, a2, n_up, growth, delta_stop,
            max_iters, slack, stall_window):
    """Projected gradient descent on the penalized total-power objective.

    Returns (final, b, iters, converged, best, has_best, finite) where
    `best` is the lowest-power iterate seen with margin >= -slack.
    """
    L = h.shape[0]
    caps = np.empty(L)
    for i in range(L):
        caps[i] = np.log1p(eps * h[i] / g[i])
    r = r_init.copy()
    b = 0.0
    best = r.copy()
    best_power = np.inf
    has_best = False
    d0 = delta_rate(r, h, g)
    power0 = total_power(r, h)
    if d0 == 0.0:
        return r, b, 0, True, best, False, True
    eta0 = c if power0 == 0.0 else c * power0 / (d0 * d0)
    if not np.isfinite(eta0):
        return r, b, 0, True, best, False, True
    rn = np.empty(L)
    n = 0
    converged = False
    last_improve = 0
    while n < max_iters:
        eta = eta0 * (1.0 + growth * (n // n_up))
        d = delta_rate(r, h, g)
        if not np.isfinite(d):
            return r, b, n, False, best, has_best, False
        if d >= -slack:
            pw = total_power(r, h)
            if (not has_best) or pw < best_power - 1e-9:
                best_power = pw
                for i in range(L):
                    best[i] = r[i]
                has_best = True
                last_improve = n
        coef = 2.0 * eta * (d - b)
        for i in range(L):
            er = np.exp(r[i])
            grd = (1.0 - g[i] / h[i]) / (1.0 + (er - 1.0) * g[i] / h[i])
            rn[i] = r[i] - a1 * (er / h[i] + coef * grd)
        pocs_rate(rn, caps, r0, 100)
        bn = b + a2 * coef
        if bn < 0.0:
            bn = 0.0
        move = abs(bn - b)
        dist2 = 0.0
        for i in range(L):
            dd = rn[i] - r[i]
            dist2 += dd * dd
            r[i] = rn[i]
        b = bn
        dist = np.sqrt(dist2)
        if dist > move:
            move = dist
        n += 1
        if move < delta_stop:
            converged = True
            break
        if has_best and n - last_improve > stall_window:
            break
    return r, b, n, converged, best, has_best, True
