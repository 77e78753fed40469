"""Compiled numeric core: ODE right-hand side and the two time steppers.

Everything in this module works on bare ``float64`` arrays so numba can
compile it.  The typed, validated wrappers live in :mod:`.model` and
:mod:`.integrate`; state layout and parameter packing are defined once in
``model.STATE_NAMES`` / ``model.PARAM_NAMES`` and mirrored here as index
constants.

Release schedules are passed to the kernels in packed form
``(kind, a, b, values)``:

===========  =====================  ==========================================
kind         parameters             daily release rate
===========  =====================  ==========================================
0 constant   a = r0                 r0
1 linear     a = m, b = horizon     max(0, 2*m*(1 - t/horizon))
2 bump       a = m, b = peak_day    m / cosh(0.01*(t - peak_day))
3 piecewise  b = piece_len          values[clip(ceil(t/piece_len), 1, n) - 1]
===========  =====================  ==========================================
"""

import math

import numpy as np
from numba import njit

# State vector indices (serialization order fixed package-wide).
S_H, I_H, J_H, R_H = 0, 1, 2, 3
M_V_W, M_V = 4, 5
S_VF_W, S_VF = 6, 7
S_VFP_W, S_VFP, S_VFP_S = 8, 9, 10
I_VF_W, I_VF, I_VFP, I_VFP_S, I_VFP_W = 11, 12, 13, 14, 15
A_W, A = 16, 17
N_STATE = 18

# Parameter vector indices.
P_B_H, P_MU_H, P_ALPHA, P_GAMMA, P_THETA = 0, 1, 2, 3, 4
P_B, P_C_HV, P_C_VH, P_C_VH_W = 5, 6, 7, 8
P_SIGMA, P_PHI, P_PHI_W, P_V_W, P_V = 9, 10, 11, 12, 13
P_PSI, P_B_M, P_B_F = 14, 15, 16
P_MU_A, P_MU_F, P_MU_F_W, P_MU_M, P_MU_M_W = 17, 18, 19, 20, 21
P_K_A = 22
N_PARAM = 23

# Release schedule kinds.
REL_CONSTANT, REL_LINEAR, REL_BUMP, REL_PIECEWISE = 0, 1, 2, 3

# Integration status codes.
OK = 0
MAX_STEPS_EXCEEDED = 1
STEP_UNDERFLOW = 2
NEGATIVE_STATE = 3
NON_FINITE = 4

# Relative size below which a negative compartment is treated as round-off
# and clamped to zero; anything larger is an integration failure.
NEGATIVE_CLAMP_REL = 1e-9

# Dormand-Prince 5(4) tableau, error weights (order-4 embedded estimate) and
# the quartic dense-output interpolant.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.zeros((7, 7))
_DP_A[1, 0] = 1 / 5
_DP_A[2, :2] = (3 / 40, 9 / 40)
_DP_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
_DP_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_DP_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_DP_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                  -17253 / 339200, 22 / 525, -1 / 40])
_DP_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@njit(cache=True)
def release_rate(kind, a, b, values, t):
    """Daily release rate of a packed schedule at time ``t``."""
    if kind == REL_CONSTANT:
        return a
    if kind == REL_LINEAR:
        r = 2.0 * a * (1.0 - t / b)
        return r if r > 0.0 else 0.0
    if kind == REL_BUMP:
        return a / math.cosh(0.01 * (t - b))
    # Piecewise: pieces are (l*(i-1), l*i], index clipped to [1, n].
    n = values.shape[0]
    idx = int(math.ceil(t / b))
    if idx < 1:
        idx = 1
    elif idx > n:
        idx = n
    return values[idx - 1]


@njit(cache=True)
def rhs_into(y, p, release, out):
    """Evaluate the 18-compartment right-hand side into ``out``.

    ``release`` is the release rate r(t) already evaluated at the current
    time; it enters only dA_w/dt.  No validity checks are done here.
    """
    n_h = y[S_H] + y[I_H] + y[J_H] + y[R_H]
    i_v = y[I_VF] + y[I_VFP]
    i_v_w = y[I_VF_W] + y[I_VFP_W] + y[I_VFP_S]

    m_tot = y[M_V] + y[M_V_W]
    if m_tot > 0.0:
        m = y[M_V] / m_tot
        m_w = 1.0 - m
    else:
        m = 1.0
        m_w = 0.0

    crowd = 1.0 - (y[A] + y[A_W]) / p[P_K_A]
    eta = p[P_PHI] * crowd
    eta_w = p[P_PHI_W] * crowd

    # Forces of infection.
    lam_h = p[P_B] * (p[P_C_VH] * i_v + p[P_C_VH_W] * i_v_w) / n_h
    lam_v = p[P_B] * p[P_C_HV] * y[I_H] / n_h

    out[S_H] = p[P_B_H] * n_h - (lam_h + p[P_MU_H]) * y[S_H]
    out[I_H] = (1.0 - p[P_ALPHA]) * lam_h * y[S_H] - (p[P_MU_H] + p[P_GAMMA]) * y[I_H]
    out[J_H] = p[P_ALPHA] * lam_h * y[S_H] - (p[P_MU_H] + p[P_THETA]) * y[J_H]
    out[R_H] = p[P_GAMMA] * y[I_H] + p[P_THETA] * y[J_H] - p[P_MU_H] * y[R_H]

    out[M_V_W] = p[P_PSI] * p[P_B_M] * y[A_W] - p[P_MU_M_W] * y[M_V_W]
    out[M_V] = p[P_PSI] * p[P_B_M] * y[A] - p[P_MU_M] * y[M_V]

    out[S_VF_W] = p[P_PSI] * p[P_B_F] * y[A_W] - (lam_v + p[P_SIGMA] + p[P_MU_F_W]) * y[S_VF_W]
    out[S_VF] = p[P_PSI] * p[P_B_F] * y[A] - (lam_v + p[P_SIGMA] + p[P_MU_F]) * y[S_VF]

    out[S_VFP_W] = p[P_SIGMA] * y[S_VF_W] - (lam_v + p[P_MU_F_W]) * y[S_VFP_W]
    out[S_VFP] = p[P_SIGMA] * m * y[S_VF] - (lam_v + p[P_MU_F]) * y[S_VFP]
    out[S_VFP_S] = p[P_SIGMA] * m_w * y[S_VF] - (lam_v + p[P_MU_F]) * y[S_VFP_S]

    out[I_VF_W] = lam_v * y[S_VF_W] - (p[P_SIGMA] + p[P_MU_F_W]) * y[I_VF_W]
    out[I_VF] = lam_v * y[S_VF] - (p[P_SIGMA] + p[P_MU_F]) * y[I_VF]

    out[I_VFP] = p[P_SIGMA] * m * y[I_VF] + lam_v * y[S_VFP] - p[P_MU_F] * y[I_VFP]
    out[I_VFP_S] = p[P_SIGMA] * m_w * y[I_VF] + lam_v * y[S_VFP_S] - p[P_MU_F_W] * y[I_VFP_S]
    out[I_VFP_W] = p[P_SIGMA] * y[I_VF_W] + lam_v * y[S_VFP_W] - p[P_MU_F_W] * y[I_VFP_W]

    preg_w = y[S_VFP_W] + y[I_VFP_W]
    out[A_W] = release + eta_w * p[P_V_W] * preg_w - (p[P_PSI] + p[P_MU_A]) * y[A_W]
    out[A] = (eta * (y[S_VFP] + y[I_VFP]) + eta_w * p[P_V] * preg_w
              - (p[P_PSI] + p[P_MU_A]) * y[A])


@njit(cache=True)
def _clamp_negatives(y):
    """Zero out round-off negatives in place.

    Returns the index of the first compartment more negative than the
    round-off threshold, or -1 if the state is acceptable.
    """
    one_norm = 0.0
    for i in range(y.shape[0]):
        one_norm += abs(y[i])
    floor = -NEGATIVE_CLAMP_REL * one_norm
    for i in range(y.shape[0]):
        if y[i] < 0.0:
            if y[i] >= floor:
                y[i] = 0.0
            else:
                return i
    return -1


@njit(cache=True)
def _initial_step(t0, y0, f0, p, kind, a, b, values, rtol, atol, span):
    """Hairer-style starting step size for the adaptive integrator."""
    n = y0.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        v = abs(y0[i]) / sc
        if v > d0:
            d0 = v
        v = abs(f0[i]) / sc
        if v > d1:
            d1 = v
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    if h0 > span:
        h0 = span

    y1 = np.empty(n)
    f1 = np.empty(n)
    for i in range(n):
        y1[i] = y0[i] + h0 * f0[i]
    rel = release_rate(kind, a, b, values, t0 + h0)
    rhs_into(y1, p, rel, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        v = abs(f1[i] - f0[i]) / sc
        if v > d2:
            d2 = v
    d2 /= h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    h = min(100.0 * h0, h1)
    if h > span:
        h = span
    return h


@njit(cache=True)
def dopri_segment(y, t0, t1, p, kind, a, b, values, rtol, atol, max_step,
                  h_start, max_steps, sample_ts, samples_out, info):
    """Adaptive Dormand-Prince 5(4) integration of one segment (t0, t1].

    ``y`` is advanced in place to the state at ``t1``.  Rows of
    ``samples_out`` are filled with dense-output states at the times in
    ``sample_ts`` (all must lie in (t0, t1]); exact step landings are copied
    rather than interpolated.  Error control uses the mixed max norm
    ``max_i |err_i| / (atol + rtol*|y_i|)``.

    ``info`` (length 7) receives: accepted steps, rejected steps, rhs
    evaluations, last step size, max relative aquatic excess over K_a,
    failure time, failure compartment index.
    """
    n = y.shape[0]
    k = np.empty((7, n))
    y_new = np.empty(n)
    y_err = np.empty(n)
    y_stage = np.empty(n)

    n_accept = 0
    n_reject = 0
    n_fev = 0
    max_excess = -np.inf
    samp_i = 0
    n_samp = sample_ts.shape[0]

    t = t0
    rel = release_rate(kind, a, b, values, t)
    rhs_into(y, p, rel, k[0])
    n_fev += 1

    if h_start > 0.0:
        h = h_start
    else:
        h = _initial_step(t, y, k[0], p, kind, a, b, values, rtol, atol, t1 - t0)
        n_fev += 1
    if h > max_step:
        h = max_step

    while t < t1:
        if n_accept + n_reject >= max_steps:
            info[0], info[1], info[2] = n_accept, n_reject, n_fev
            info[3], info[4] = h, max_excess
            info[5], info[6] = t, -1.0
            return MAX_STEPS_EXCEEDED
        if h < 1e-14 * max(1.0, abs(t)):
            info[0], info[1], info[2] = n_accept, n_reject, n_fev
            info[3], info[4] = h, max_excess
            info[5], info[6] = t, -1.0
            return STEP_UNDERFLOW

        landed = False
        if t + h >= t1:
            h = t1 - t
            landed = True

        # Stages 2..7 (stage 7 is the order-5 solution, FSAL).
        for s in range(1, 7):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += _DP_A[s, j] * k[j, i]
                y_stage[i] = y[i] + h * acc
            ts = t + _DP_C[s] * h
            rel = release_rate(kind, a, b, values, ts)
            rhs_into(y_stage, p, rel, k[s])
            n_fev += 1
        for i in range(n):
            y_new[i] = y_stage[i]  # stage 7 state is the 5th-order solution
            err = 0.0
            for j in range(7):
                err += _DP_E[j] * k[j, i]
            y_err[i] = h * err

        finite = True
        err_norm = 0.0
        for i in range(n):
            if not math.isfinite(y_new[i]):
                finite = False
                break
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            v = abs(y_err[i]) / sc
            if v > err_norm:
                err_norm = v
        if not finite:
            # Retry with a sharply reduced step; give up at underflow.
            h *= 0.1
            n_reject += 1
            continue

        if err_norm <= 1.0:
            t_new = t1 if landed else t + h

            bad = _clamp_negatives(y_new)
            if bad >= 0:
                info[0], info[1], info[2] = n_accept, n_reject, n_fev
                info[3], info[4] = h, max_excess
                info[5], info[6] = t_new, float(bad)
                return NEGATIVE_STATE

            # Dense samples falling inside this step.
            while samp_i < n_samp and sample_ts[samp_i] <= t_new:
                ts = sample_ts[samp_i]
                if ts == t_new:
                    for i in range(n):
                        samples_out[samp_i, i] = y_new[i]
                else:
                    theta = (ts - t) / h
                    for i in range(n):
                        acc = 0.0
                        for j in range(7):
                            poly = ((_DP_P[j, 3] * theta + _DP_P[j, 2]) * theta
                                    + _DP_P[j, 1]) * theta + _DP_P[j, 0]
                            acc += k[j, i] * poly * theta
                        samples_out[samp_i, i] = y[i] + h * acc
                samp_i += 1

            excess = (y_new[A] + y_new[A_W]) / p[P_K_A] - 1.0
            if excess > max_excess:
                max_excess = excess

            # FSAL: reuse the last stage unless clamping moved the state.
            rel = release_rate(kind, a, b, values, t_new)
            rhs_into(y_new, p, rel, k[0])
            n_fev += 1

            for i in range(n):
                y[i] = y_new[i]
            t = t_new
            n_accept += 1

            if err_norm == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2))
            h = min(h * factor, max_step)
        else:
            n_reject += 1
            factor = max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
            h *= factor

    info[0], info[1], info[2] = n_accept, n_reject, n_fev
    info[3], info[4] = h, max_excess
    info[5], info[6] = t, -1.0
    return OK


@njit(cache=True)
def rk4_segment(y, day0, day1, p, kind, a, b, values, steps_per_day,
                day_states, info):
    """Classical fixed-step RK4 over integer days [day0, day1].

    ``y`` is advanced in place; ``day_states`` (day1-day0 rows) receives the
    state at each of days day0+1 .. day1.  Step times are computed from step
    counts so integer days are landed exactly.
    """
    n = y.shape[0]
    h = 1.0 / steps_per_day
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    y_stage = np.empty(n)

    n_fev = 0
    max_excess = -np.inf
    for day in range(day0, day1):
        for step in range(steps_per_day):
            t = day + step * h
            rel = release_rate(kind, a, b, values, t)
            rhs_into(y, p, rel, k1)
            for i in range(n):
                y_stage[i] = y[i] + 0.5 * h * k1[i]
            rel = release_rate(kind, a, b, values, t + 0.5 * h)
            rhs_into(y_stage, p, rel, k2)
            for i in range(n):
                y_stage[i] = y[i] + 0.5 * h * k2[i]
            rhs_into(y_stage, p, rel, k3)
            t_next = day + 1.0 if step == steps_per_day - 1 else t + h
            rel = release_rate(kind, a, b, values, t_next)
            for i in range(n):
                y_stage[i] = y[i] + h * k3[i]
            rhs_into(y_stage, p, rel, k4)
            n_fev += 4
            for i in range(n):
                y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

            bad = _clamp_negatives(y)
            if bad >= 0:
                info[0], info[1], info[2] = float(n_fev // 4), 0.0, float(n_fev)
                info[3], info[4] = h, max_excess
                info[5], info[6] = t_next, float(bad)
                return NEGATIVE_STATE
        for i in range(n):
            if not math.isfinite(y[i]):
                info[0], info[1], info[2] = float(n_fev // 4), 0.0, float(n_fev)
                info[3], info[4] = h, max_excess
                info[5], info[6] = float(day + 1), float(i)
                return NON_FINITE
            day_states[day - day0, i] = y[i]
        excess = (y[A] + y[A_W]) / p[P_K_A] - 1.0
        if excess > max_excess:
            max_excess = excess

    info[0], info[1], info[2] = float(n_fev // 4), 0.0, float(n_fev)
    info[3], info[4] = h, max_excess
    info[5], info[6] = float(day1), -1.0
    return OK
