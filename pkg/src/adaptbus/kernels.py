"""Hot per-sample recursions, compiled with numba when enabled.

Everything here is written as explicit scalar loops over float64 arrays: the
same source runs compiled (numba) or interpreted (pure numpy fallback via
ADAPTBUS_DISABLE_JIT=1) with bit-identical results, and no BLAS reduction
order sneaks into the deterministic trace path.
"""

from __future__ import annotations

import numpy as np

from ._jit import njit

# status codes returned by the closed-loop kernel
SIM_OK = 0
SIM_DIVERGED = 1
SIM_ZERO_DIVISOR = 2

DIVERGENCE_LIMIT = 1e12
ZERO_FLOOR = 1e-300  # below this a divisor is treated as exactly zero


@njit
def dot(x, y):
    """Fixed-order dot product (no BLAS) for deterministic traces."""
    s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * y[i]
    return s


@njit
def gradient_update(theta, Phi, y_k, gamma):
    """One normalized-gradient step with the zero-divisor guard.

    eps = y_k - theta . Phi; the step is a * Phi * eps / (1 + |Phi|^2) where
    a = 1 unless that choice would land the last (divisor) element exactly on
    zero, in which case a = gamma.

    Returns (theta_new, eps, a).
    """
    n = theta.shape[0]
    eps = y_k - dot(theta, Phi)
    denom = 1.0 + dot(Phi, Phi)
    cand = theta[n - 1] + Phi[n - 1] * eps / denom
    a = 1.0
    if abs(cand) < ZERO_FLOOR:
        a = gamma
    theta_new = np.empty(n)
    for i in range(n):
        theta_new[i] = theta[i] + a * Phi[i] * eps / denom
    return theta_new, eps, a


@njit
def control_output(theta, phi, yref_ahead):
    """Certainty-equivalence control u = (yref_ahead - theta[:-1] . phi) / theta[-1].

    The caller guarantees the divisor is nonzero.
    """
    n = theta.shape[0]
    s = 0.0
    for i in range(n - 1):
        s += theta[i] * phi[i]
    return (yref_ahead - s) / theta[n - 1]


@njit
def simulate_difference(a, b, d, u, dist, y_init, u_init):
    """Open-loop plant recursion y(k) = -sum a_l y(k-l) + sum b_l u(k-l-d) + D(k-d).

    Args:
        a: (m1,) feedback coefficients.
        b: (m2+1,) input coefficients, b[0] first.
        d: input delay in samples (>= 1).
        u: (T,) applied inputs u(0..T-1).
        dist: (T+1,) disturbance D(0..T); negative times are zero.
        y_init: (m1,) initial outputs y(0), y(-1), ... most recent first.
        u_init: initial inputs u(-1), u(-2), ... most recent first.

    Returns:
        (status, y) with y of length T+1 holding y(0..T).
    """
    m1 = a.shape[0]
    m2 = b.shape[0] - 1
    T = u.shape[0]
    py = m1 + 1
    pu = m2 + d + 1
    yb = np.zeros(py + T + 1)
    ub = np.zeros(pu + T)
    for i in range(y_init.shape[0]):
        yb[py - i] = y_init[i]  # y(-i)
    for i in range(u_init.shape[0]):
        if pu - 1 - i >= 0:
            ub[pu - 1 - i] = u_init[i]  # u(-1-i)
    for t in range(T):
        ub[pu + t] = u[t]
    status = SIM_OK
    for j in range(1, T + 1):
        acc = 0.0
        for l in range(1, m1 + 1):
            acc -= a[l - 1] * yb[py + j - l]
        for l in range(0, m2 + 1):
            acc += b[l] * ub[pu + j - d - l]
        td = j - d
        if 0 <= td < dist.shape[0]:
            acc += dist[td]
        if not np.isfinite(acc) or abs(acc) > DIVERGENCE_LIMIT:
            status = SIM_DIVERGED
            yb[py + j] = acc
            break
        yb[py + j] = acc
    y = np.empty(T + 1)
    for j in range(T + 1):
        y[j] = yb[py + j]
    return status, y


@njit
def simulate_predictor(alpha, beta, f, d, u, dist, y_init, u_init):
    """Self-consistent d-step prediction-form recursion.

    y(k+d) = alpha(q^-1) y(k) + beta(q^-1) u(k) + f(q^-1) D(k), iterated so the
    generated outputs feed back into the alpha terms.  f is the quotient from
    the prediction-identity long division; for d = 1 it is (1,) and the
    recursion coincides with the difference form.

    Returns (status, y) with y of length T+1.
    """
    na = alpha.shape[0]
    nb = beta.shape[0]
    nf = f.shape[0]
    T = u.shape[0]
    py = na + d + 1
    pu = nb + d + 1
    yb = np.zeros(py + T + 1)
    ub = np.zeros(pu + T)
    for i in range(y_init.shape[0]):
        yb[py - i] = y_init[i]
    for i in range(u_init.shape[0]):
        if pu - 1 - i >= 0:
            ub[pu - 1 - i] = u_init[i]
    for t in range(T):
        ub[pu + t] = u[t]
    status = SIM_OK
    for j in range(1, T + 1):
        k = j - d
        acc = 0.0
        for i in range(na):
            acc += alpha[i] * yb[py + k - i]
        for l in range(nb):
            acc += beta[l] * ub[pu + k - l]
        for m in range(nf):
            td = k - m
            if 0 <= td < dist.shape[0]:
                acc += f[m] * dist[td]
        if not np.isfinite(acc) or abs(acc) > DIVERGENCE_LIMIT:
            status = SIM_DIVERGED
            yb[py + j] = acc
            break
        yb[py + j] = acc
    y = np.empty(T + 1)
    for j in range(T + 1):
        y[j] = yb[py + j]
    return status, y


@njit
def simulate_fixed_delay(a, b, d, gamma, theta0, yref_ext, dist, y_init, u_init, adapt_updates):
    """Closed adaptive loop at a fixed delay d over T samples.

    Per sample k: normalized-gradient update from the regressor stored d steps
    ago (skipped when adapt_updates is False), then the certainty-equivalence
    control using yref_ext[k+d], then one plant step.

    Args:
        theta0: (M,) initial estimate, M = m1 + m2 + d; last element divides.
        yref_ext: (T+d,) reference with lookahead.
        dist: (T+1,) disturbance amplitudes by sample.
        adapt_updates: False freezes theta (reference-model runs).

    Returns:
        (status, k_stop, y, u, eps, theta_hist, Phi_hist) where y has length
        T+1, u/eps length T, theta_hist is (T, M) with the estimate after the
        sample-k update, and Phi_hist is (T+d, M) holding the regressor for
        time k at row k+d (rows below d are the pre-start regressors).
    """
    m1 = a.shape[0]
    m2 = b.shape[0] - 1
    M = m1 + m2 + d
    T = yref_ext.shape[0] - d
    py = m1 + 1
    pu = m2 + 2 * d + 1
    yb = np.zeros(py + T + 1)
    ub = np.zeros(pu + T)
    for i in range(y_init.shape[0]):
        yb[py - i] = y_init[i]
    for i in range(u_init.shape[0]):
        if pu - 1 - i >= 0:
            ub[pu - 1 - i] = u_init[i]

    y = np.zeros(T + 1)
    u = np.zeros(T)
    eps = np.zeros(T)
    theta_hist = np.zeros((T, M))
    Phi_hist = np.zeros((T + d, M))
    theta = theta0.copy()

    # pre-start regressors Phi(-d .. -1) from the initial conditions
    for t in range(-d, 0):
        row = t + d
        col = 0
        for i in range(m1):
            Phi_hist[row, col] = yb[py + t - i]
            col += 1
        for jj in range(1, m2 + d):
            Phi_hist[row, col] = ub[pu + t - jj]
            col += 1
        Phi_hist[row, col] = ub[pu + t]

    status = SIM_OK
    k_stop = T
    y[0] = yb[py]
    for k in range(T):
        y_k = yb[py + k]
        # update from the d-lagged regressor
        eps_k = y_k - dot(theta, Phi_hist[k])
        if adapt_updates:
            denom = 1.0 + dot(Phi_hist[k], Phi_hist[k])
            cand = theta[M - 1] + Phi_hist[k, M - 1] * eps_k / denom
            aa = 1.0
            if abs(cand) < ZERO_FLOOR:
                aa = gamma
            for i in range(M):
                theta[i] = theta[i] + aa * Phi_hist[k, i] * eps_k / denom
        eps[k] = eps_k
        for i in range(M):
            theta_hist[k, i] = theta[i]
        # control
        if abs(theta[M - 1]) < ZERO_FLOOR:
            status = SIM_ZERO_DIVISOR
            k_stop = k
            break
        s = 0.0
        col = 0
        for i in range(m1):
            s += theta[col] * yb[py + k - i]
            col += 1
        for jj in range(1, m2 + d):
            s += theta[col] * ub[pu + k - jj]
            col += 1
        u_k = (yref_ext[k + d] - s) / theta[M - 1]
        u[k] = u_k
        ub[pu + k] = u_k
        # store Phi(k)
        col = 0
        for i in range(m1):
            Phi_hist[k + d, col] = yb[py + k - i]
            col += 1
        for jj in range(1, m2 + d):
            Phi_hist[k + d, col] = ub[pu + k - jj]
            col += 1
        Phi_hist[k + d, col] = u_k
        # plant step with input delay d
        acc = 0.0
        for l in range(1, m1 + 1):
            acc -= a[l - 1] * yb[py + k + 1 - l]
        for l in range(0, m2 + 1):
            acc += b[l] * ub[pu + k + 1 - d - l]
        td = k + 1 - d
        if 0 <= td < dist.shape[0]:
            acc += dist[td]
        if not np.isfinite(acc) or abs(acc) > DIVERGENCE_LIMIT:
            status = SIM_DIVERGED
            k_stop = k
            yb[py + k + 1] = acc
            break
        yb[py + k + 1] = acc
        y[k + 1] = acc
    return status, k_stop, y, u, eps, theta_hist, Phi_hist
