"""Hot numeric kernels.

The greedy per-plant production simulation and the equidistant
piecewise-linear cost evaluation dominate runtime inside the annealing
loop, so both are compiled with numba when available.  Setting the
environment variable ``OUTAGESCHED_NO_NUMBA=1`` (or running without numba
installed) selects the pure-Python/numpy fallback; the two paths compute
identical results.  ``benchmarks/bench_kernels.py`` compares them.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("OUTAGESCHED_NO_NUMBA", "0").lower() not in (
    "1",
    "true",
    "yes",
)


def maybe_njit(func):
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


# Status codes returned by greedy_simulate.
SIM_OK = 0
SIM_AMAX = 1
SIM_SMAX = 2


@maybe_njit
def greedy_simulate(
    t0,              # first step to simulate
    x0,              # fuel at t0
    pmax_t,          # (T,) type-2 max production per step
    D,               # hours per step
    btol,            # bound tolerance
    campaign_id,     # (T,) campaign index, -1 during outages
    outage_id,       # (T,) cycle index during outages, -1 otherwise
    outage_first,    # (K,) first step of each scheduled outage, -1 if unscheduled
    cyc_q,           # (K,)
    cyc_qp,          # (K,)
    cyc_amax,        # (K,)
    cyc_smax,        # (K,)
    refuel,          # (K,) current refuel amounts
    cam_bo,          # (C,) profile threshold per campaign
    cam_pb_lo,       # (C,) slice start into pb_x/pb_y per campaign
    cam_pb_hi,       # (C,) slice stop
    pb_x,            # flattened pb fuel breakpoints
    pb_y,            # flattened pb values
    p_out,           # (T,) filled from t0 on
    x_out,           # (T+1,) filled from t0 on
):
    """Greedy max-production forward simulation of one plant.

    Produces at pmax while fuel stays at or above the campaign threshold,
    follows the declining power profile below it, and stops producing once
    the profile cannot be sustained.  Applies the refuel transform at the
    first step of each outage and reports the first upper fuel-bound
    breach as (status, cycle, excess).
    """
    T = pmax_t.shape[0]
    x = x0
    x_out[t0] = x
    for t in range(t0, T):
        k = outage_id[t]
        if k >= 0:
            p = 0.0
            if t == outage_first[k]:
                if x > cyc_amax[k] + btol:
                    return SIM_AMAX, k, x - cyc_amax[k]
                x_next = cyc_q[k] * x + refuel[k] + cyc_qp[k]
                if x_next > cyc_smax[k] + btol:
                    p_out[t] = 0.0
                    x_out[t + 1] = x_next
                    return SIM_SMAX, k, x_next - cyc_smax[k]
            else:
                x_next = x
        else:
            c = campaign_id[t]
            pm = pmax_t[t]
            bo = cam_bo[c]
            if x >= bo:
                if x >= pm * D:
                    p = pm
                else:
                    p = x / D
            else:
                # declining power profile: production pinned to PB(x) * pmax
                lo = cam_pb_lo[c]
                hi = cam_pb_hi[c]
                if x <= pb_x[lo]:
                    frac = pb_y[lo]
                elif x >= pb_x[hi - 1]:
                    frac = pb_y[hi - 1]
                else:
                    frac = pb_y[lo]
                    for m in range(lo + 1, hi):
                        if x <= pb_x[m]:
                            w = (x - pb_x[m - 1]) / (pb_x[m] - pb_x[m - 1])
                            frac = pb_y[m - 1] + w * (pb_y[m] - pb_y[m - 1])
                            break
                px = frac * pm
                if x >= px * D:
                    p = px
                else:
                    p = 0.0
            x_next = x - p * D
        p_out[t] = p
        x_out[t + 1] = x_next
        x = x_next
    return SIM_OK, -1, 0.0


@maybe_njit
def raise_refuel(
    k,               # cycle whose refuel is raised
    t_k,             # first step of outage k
    rmax_k,
    max_increments,
    refuel_tol,
    pmax_t,
    D,
    btol,
    campaign_id,
    outage_id,
    outage_first,
    cyc_q,
    cyc_qp,
    cyc_amax,
    cyc_smax,
    refuel,          # (K,) mutated in place
    cam_bo,
    cam_pb_lo,
    cam_pb_hi,
    pb_x,
    pb_y,
    p,               # (T,) valid trajectory, mutated in place
    x,               # (T+1,) valid trajectory, mutated in place
):
    """Raise refuel k toward rmax in 2% increments of the remaining gap.

    Stops when every downstream campaign step already produces at pmax,
    when the increment falls under the tolerance, or when a strict
    re-simulation breaks a fuel bound (that increment is undone)."""
    T = pmax_t.shape[0]
    p_try = np.empty(T)
    x_try = np.empty(T + 1)
    for _ in range(max_increments):
        full = True
        for t in range(t_k, T):
            if campaign_id[t] >= 0 and p[t] < pmax_t[t] - 1e-9:
                full = False
                break
        if full:
            break
        inc = 0.02 * (rmax_k - refuel[k])
        if inc < refuel_tol:
            break
        old = refuel[k]
        new = refuel[k] + inc
        if new > rmax_k:
            new = rmax_k
        refuel[k] = new
        status, _, _ = greedy_simulate(
            t_k, x[t_k], pmax_t, D, btol, campaign_id, outage_id, outage_first,
            cyc_q, cyc_qp, cyc_amax, cyc_smax, refuel, cam_bo, cam_pb_lo,
            cam_pb_hi, pb_x, pb_y, p_try, x_try,
        )
        if status != SIM_OK:
            refuel[k] = old
            break
        for t in range(t_k, T):
            p[t] = p_try[t]
        for t in range(t_k, T + 1):
            x[t] = x_try[t]


@maybe_njit
def pwl_eval_one(F, int_size, xmax, t, p2):
    """Constant-time cost lookup at step t via equidistant interpolation."""
    B = F.shape[1]
    xm = xmax[t]
    if p2 >= xm:
        return F[t, B - 1]
    v = p2 / int_size[t]
    lo = int(v)
    if lo >= B - 1:
        return F[t, B - 1]
    frac = v - lo
    return F[t, lo] + frac * (F[t, lo + 1] - F[t, lo])


@maybe_njit
def pwl_eval_sum(F, int_size, xmax, p2):
    """Total approximated cost over all steps for per-step totals p2."""
    total = 0.0
    for t in range(p2.shape[0]):
        total += pwl_eval_one(F, int_size, xmax, t, p2[t])
    return total


@maybe_njit
def pwl_delta(F, int_size, xmax, steps, p2_old, p2_new):
    """Cost change over `steps` when totals move from p2_old to p2_new."""
    delta = 0.0
    for n in range(steps.shape[0]):
        t = steps[n]
        delta += pwl_eval_one(F, int_size, xmax, t, p2_new[n]) - pwl_eval_one(
            F, int_size, xmax, t, p2_old[n]
        )
    return delta


def py_func(f):
    """Return the uncompiled version of a kernel (for benchmarks/tests)."""
    return getattr(f, "py_func", f)
