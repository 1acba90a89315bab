"""Hot numeric loops, each with a numba and a pure-numpy implementation.

The backend is chosen once at import time.  Set ``APFRONTS_PURE_NUMPY=1``
(or numba's own ``NUMBA_DISABLE_JIT=1``) to force the numpy path.  Both
implementations of every kernel are importable under ``numba_impl`` and
``numpy_impl`` so tests and the benchmark can compare them directly.
"""

import math
import os
import types

import numpy as np
from scipy.linalg import solve_banded


def _flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not (_flag("APFRONTS_PURE_NUMPY") or _flag("NUMBA_DISABLE_JIT"))
BACKEND = "numba" if USE_NUMBA else "numpy"


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# Sturm-sequence bisection for the largest eigenvalue of a symmetric
# tridiagonal matrix (diag d, off-diagonal e).


def _gershgorin(d, e):
    n = d.shape[0]
    lo, hi = np.inf, -np.inf
    for i in range(n):
        r = 0.0
        if i > 0:
            r += abs(e[i - 1])
        if i < n - 1:
            r += abs(e[i])
        lo = min(lo, d[i] - r)
        hi = max(hi, d[i] + r)
    return lo, hi


@_njit
def _count_below_nb(d, e2, x):
    # number of eigenvalues strictly below x (LDL^T inertia)
    n = d.shape[0]
    count = 0
    q = d[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = 1e-300
        q = d[i] - x - e2[i - 1] / q
        if q < 0.0:
            count += 1
    return count


@_njit
def _max_eig_nb(d, e, lo, hi, maxit):
    n = d.shape[0]
    e2 = e * e
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _count_below_nb(d, e2, mid) == n:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _max_eig_np(d, e, lo, hi, maxit):
    # multisection: every sweep over the recurrence tests many shifts at once
    n = d.shape[0]
    e2 = e * e
    k = 64
    for _ in range(maxit):
        if hi - lo <= 4.0 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0):
            break
        xs = np.linspace(lo, hi, k + 2)[1:-1]
        q = d[0] - xs
        cnt = (q < 0).astype(np.int64)
        for i in range(1, n):
            q = np.where(q == 0.0, 1e-300, q)
            q = d[i] - xs - e2[i - 1] / q
            cnt += q < 0
        full = cnt == n
        if full.any():
            j = int(np.argmax(full))
            hi = xs[j]
            if j > 0:
                lo = xs[j - 1]
        else:
            lo = xs[-1]
    return lo, hi


def max_eig(d, e, maxit=200):
    """Bracket [lo, hi] of the largest eigenvalue, hi an upper bound."""
    d = np.ascontiguousarray(d, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    lo, hi = _gershgorin(d, e)
    lo, hi = lo - 1e-12, hi + 1e-12
    if USE_NUMBA:
        return _max_eig_nb(d, e, lo, hi, maxit)
    return _max_eig_np(d, e, lo, hi, maxit // 8 + 4)


# ---------------------------------------------------------------------------
# Tridiagonal solves: lower[i] couples row i to i-1 (lower[0] unused),
# upper[i] couples row i to i+1 (upper[-1] unused).


@_njit
def _thomas_nb(lower, diag, upper, rhs):
    n = diag.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / m
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / m
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def _thomas_np(lower, diag, upper, rhs):
    ab = np.zeros((3, diag.shape[0]))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs)


def thomas(lower, diag, upper, rhs):
    args = [np.ascontiguousarray(v, dtype=float) for v in (lower, diag, upper, rhs)]
    if USE_NUMBA:
        return _thomas_nb(*args)
    return _thomas_np(*args)


def _cyclic(solve, lower, diag, upper, rhs):
    # Sherman-Morrison on the periodic corner entries lower[0], upper[-1]
    n = diag.shape[0]
    alpha = upper[n - 1]
    beta = lower[0]
    g = -diag[0]
    bb = diag.copy()
    bb[0] = diag[0] - g
    bb[n - 1] = diag[n - 1] - alpha * beta / g
    x = solve(lower, bb, upper, rhs)
    uvec = np.zeros(n)
    uvec[0] = g
    uvec[n - 1] = alpha
    z = solve(lower, bb, upper, uvec)
    fact = (x[0] + beta * x[n - 1] / g) / (1.0 + z[0] + beta * z[n - 1] / g)
    return x - fact * z


@_njit
def _cyclic_nb(lower, diag, upper, rhs):
    n = diag.shape[0]
    alpha = upper[n - 1]
    beta = lower[0]
    g = -diag[0]
    bb = diag.copy()
    bb[0] = diag[0] - g
    bb[n - 1] = diag[n - 1] - alpha * beta / g
    x = _thomas_nb(lower, bb, upper, rhs)
    uvec = np.zeros(n)
    uvec[0] = g
    uvec[n - 1] = alpha
    z = _thomas_nb(lower, bb, upper, uvec)
    fact = (x[0] + beta * x[n - 1] / g) / (1.0 + z[0] + beta * z[n - 1] / g)
    return x - fact * z


def cyclic_thomas(lower, diag, upper, rhs):
    """Solve a periodic tridiagonal system (corners lower[0], upper[-1])."""
    args = [np.ascontiguousarray(v, dtype=float) for v in (lower, diag, upper, rhs)]
    if USE_NUMBA:
        return _cyclic_nb(*args)
    return _cyclic(_thomas_np, *args)


# ---------------------------------------------------------------------------
# Backward ratio sweep for (a phi')' + (c - gamma) phi = 0 with phi = 0 at the
# last node.  r[i] = phi[i+1] / phi[i]; the sweep runs right to left, which is
# the stable direction for the recessive (decaying) solution.


@_njit
def _ratio_sweep_nb(a_half, c, gamma, h2):
    n = c.shape[0]
    r = np.empty(n - 1)
    r[n - 2] = 0.0
    bad = -1
    for i in range(n - 2, 0, -1):
        den = a_half[i] + a_half[i - 1] + h2 * (gamma - c[i]) - a_half[i] * r[i]
        if den <= 0.0:
            bad = i
            r[i - 1] = np.nan
            break
        r[i - 1] = a_half[i - 1] / den
    return r, bad


def _ratio_sweep_np(a_half, c, gamma, h2):
    n = c.shape[0]
    r = np.empty(n - 1)
    r[n - 2] = 0.0
    ap = a_half.tolist()
    cc = c.tolist()
    ri = 0.0
    for i in range(n - 2, 0, -1):
        den = ap[i] + ap[i - 1] + h2 * (gamma - cc[i]) - ap[i] * ri
        if den <= 0.0:
            r[: i] = np.nan
            return r, i
        ri = ap[i - 1] / den
        r[i - 1] = ri
    return r, -1


def ratio_sweep(a_half, c, gamma, h2):
    """Return (ratios, bad_index); bad_index >= 0 flags a lost sign."""
    a_half = np.ascontiguousarray(a_half, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    if USE_NUMBA:
        return _ratio_sweep_nb(a_half, c, float(gamma), float(h2))
    return _ratio_sweep_np(a_half, c, float(gamma), float(h2))


# ---------------------------------------------------------------------------
# Forward shooting for (a phi')' + (c - lam) phi = 0 in ratio/log form.


@_njit
def _shoot_nb(a_half, c, lam, h2, r0):
    # returns log(phi) along the nodes, phi[0] = 1, phi[1] = r0; stops at
    # the first sign change and reports its index (or -1)
    n = c.shape[0]
    lphi = np.full(n, np.nan)
    lphi[0] = 0.0
    if r0 <= 0.0:
        return lphi, 1
    lphi[1] = math.log(r0)
    r = r0
    for i in range(1, n - 1):
        # phi[i+1]/phi[i] = ((a+ + a- + h2 (lam - c)) - a- / r) / a+
        rn = (a_half[i] + a_half[i - 1] + h2 * (lam - c[i]) - a_half[i - 1] / r) / a_half[i]
        if rn <= 0.0:
            return lphi, i + 1
        lphi[i + 1] = lphi[i] + math.log(rn)
        r = rn
    return lphi, -1


def _shoot_np(a_half, c, lam, h2, r0):
    n = c.shape[0]
    lphi = np.full(n, np.nan)
    lphi[0] = 0.0
    if r0 <= 0.0:
        return lphi, 1
    lphi[1] = math.log(r0)
    ap = a_half.tolist()
    cc = c.tolist()
    r = r0
    acc = lphi[1]
    for i in range(1, n - 1):
        rn = (ap[i] + ap[i - 1] + h2 * (lam - cc[i]) - ap[i - 1] / r) / ap[i]
        if rn <= 0.0:
            return lphi, i + 1
        acc += math.log(rn)
        lphi[i + 1] = acc
        r = rn
    return lphi, -1


def shoot(a_half, c, lam, h2, r0):
    a_half = np.ascontiguousarray(a_half, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    if USE_NUMBA:
        return _shoot_nb(a_half, c, float(lam), float(h2), float(r0))
    return _shoot_np(a_half, c, float(lam), float(h2), float(r0))


# ---------------------------------------------------------------------------
# Almost-period scan: sup_i |f[i + s] - f[i]| over i in [p0, p0 + np_) for
# every integer shift s, with early exit once eps is exceeded.


@_njit
def _ap_scan_nb(f, shifts, p0, npr, eps):
    out = np.empty(shifts.shape[0])
    for k in range(shifts.shape[0]):
        s = shifts[k]
        m = 0.0
        for i in range(p0, p0 + npr):
            v = abs(f[i + s] - f[i])
            if v > m:
                m = v
                if m > eps:
                    break
        out[k] = m
    return out


def _ap_scan_np(f, shifts, p0, npr, eps):
    base = f[p0 : p0 + npr]
    out = np.empty(shifts.shape[0])
    for k, s in enumerate(shifts):
        out[k] = np.max(np.abs(f[p0 + s : p0 + s + npr] - base))
    return out


def ap_scan(f, shifts, p0, npr, eps=np.inf):
    """Sup-discrepancy per shift; values above eps are lower bounds only."""
    f = np.ascontiguousarray(f, dtype=float)
    shifts = np.ascontiguousarray(shifts, dtype=np.int64)
    if USE_NUMBA:
        return _ap_scan_nb(f, shifts, int(p0), int(npr), float(eps))
    return _ap_scan_np(f, shifts, int(p0), int(npr), float(eps))


# ---------------------------------------------------------------------------
# Time marching: exact logistic reaction substep, then backward-Euler
# conservative diffusion.  Both substeps are order preserving for any dt.


@_njit
def _logistic_nb(u, c, dt):
    out = np.empty_like(u)
    for i in range(u.shape[0]):
        g = math.exp(c[i] * dt)
        out[i] = u[i] * g / (1.0 + u[i] * (g - 1.0))
    return out


@_njit
def _crossing_nb(u):
    # rightmost position where u falls through 1/2 (linear interpolation)
    n = u.shape[0]
    for i in range(n - 2, -1, -1):
        if u[i] >= 0.5 and u[i + 1] < 0.5:
            return i + (u[i] - 0.5) / (u[i] - u[i + 1])
    return np.nan


@_njit
def _envelope_nb(lphi, theta, gamma, eps, logA, t):
    n = lphi.shape[0]
    upper = np.empty(n)
    lower = np.empty(n)
    for i in range(n):
        lz = lphi[i] + gamma * t
        upper[i] = 1.0 if lz >= 0.0 else math.exp(lz)
        t1 = logA + math.log(theta[i]) + eps * lz
        if t1 >= 0.0:
            lower[i] = 0.0
        else:
            lower[i] = math.exp(lz) * (1.0 - math.exp(t1))
    return upper, lower


@_njit
def _march_nb(u0, a_half, c, r, dt, nsteps, t0, neumann, left, right,
              stride, lphi, theta, gamma, eps, logA):
    n = u0.shape[0]
    nsnap = nsteps // stride + 1
    snaps = np.empty((nsnap, n))
    snap_t = np.empty(nsnap)
    xs = np.empty(nsteps + 1)
    viol_low = np.zeros(nsteps + 1)
    viol_up = np.zeros(nsteps + 1)
    viol_mono = np.zeros(nsteps + 1)
    check = lphi.shape[0] == n
    u = u0.copy()
    snaps[0] = u
    snap_t[0] = t0
    xs[0] = _crossing_nb(u)
    lower = np.empty(n)
    diag = np.empty(n)
    upper = np.empty(n)
    for i in range(1, n - 1):
        lower[i] = -r * a_half[i - 1]
        upper[i] = -r * a_half[i]
        diag[i] = 1.0 + r * (a_half[i - 1] + a_half[i])
    if neumann:
        lower[0] = 0.0
        diag[0] = 1.0 + 2.0 * r * a_half[0]
        upper[0] = -2.0 * r * a_half[0]
        lower[n - 1] = -2.0 * r * a_half[n - 2]
        diag[n - 1] = 1.0 + 2.0 * r * a_half[n - 2]
        upper[n - 1] = 0.0
    else:
        lower[0] = 0.0
        diag[0] = 1.0
        upper[0] = 0.0
        lower[n - 1] = 0.0
        diag[n - 1] = 1.0
        upper[n - 1] = 0.0
    k_snap = 1
    for k in range(1, nsteps + 1):
        rhs = _logistic_nb(u, c, dt)
        if not neumann:
            rhs[0] = left[k]
            rhs[n - 1] = right[k]
        un = _thomas_nb(lower, diag, upper, rhs)
        m = 0.0
        for i in range(n):
            v = u[i] - un[i]
            if v > m:
                m = v
        viol_mono[k] = m
        u = un
        t = t0 + k * dt
        if check:
            up, lo = _envelope_nb(lphi, theta, gamma, eps, logA, t)
            a1 = 0.0
            a2 = 0.0
            for i in range(n):
                if lo[i] - u[i] > a1:
                    a1 = lo[i] - u[i]
                if u[i] - up[i] > a2:
                    a2 = u[i] - up[i]
            viol_low[k] = a1
            viol_up[k] = a2
        xs[k] = _crossing_nb(u)
        if k % stride == 0:
            snaps[k_snap] = u
            snap_t[k_snap] = t
            k_snap += 1
    return snaps[:k_snap], snap_t[:k_snap], xs, viol_low, viol_up, viol_mono


def _envelope_np(lphi, theta, gamma, eps, logA, t):
    lz = lphi + gamma * t
    upper = np.exp(np.minimum(lz, 0.0))
    t1 = logA + np.log(theta) + eps * lz
    with np.errstate(over="ignore"):
        lower = np.where(t1 >= 0.0, 0.0, np.exp(np.minimum(lz, 700.0)) * (1.0 - np.exp(np.minimum(t1, 0.0))))
    return upper, lower


def _crossing_np(u):
    idx = np.nonzero((u[:-1] >= 0.5) & (u[1:] < 0.5))[0]
    if idx.size == 0:
        return np.nan
    i = idx[-1]
    return i + (u[i] - 0.5) / (u[i] - u[i + 1])


def _march_np(u0, a_half, c, r, dt, nsteps, t0, neumann, left, right,
              stride, lphi, theta, gamma, eps, logA):
    n = u0.shape[0]
    check = lphi.shape[0] == n
    ab = np.zeros((3, n))
    ab[0, 2:] = -r * a_half[1:]
    ab[1, 1:-1] = 1.0 + r * (a_half[:-1] + a_half[1:])
    ab[2, :-2] = -r * a_half[:-1]
    if neumann:
        ab[1, 0] = 1.0 + 2.0 * r * a_half[0]
        ab[0, 1] = -2.0 * r * a_half[0]
        ab[1, -1] = 1.0 + 2.0 * r * a_half[-1]
        ab[2, -2] = -2.0 * r * a_half[-1]
    else:
        ab[1, 0] = ab[1, -1] = 1.0
        ab[0, 1] = 0.0
        ab[2, -2] = 0.0
    g = np.exp(c * dt)
    u = u0.copy()
    snaps, snap_t = [u.copy()], [t0]
    xs = np.empty(nsteps + 1)
    xs[0] = _crossing_np(u)
    viol_low = np.zeros(nsteps + 1)
    viol_up = np.zeros(nsteps + 1)
    viol_mono = np.zeros(nsteps + 1)
    for k in range(1, nsteps + 1):
        rhs = u * g / (1.0 + u * (g - 1.0))
        if not neumann:
            rhs[0] = left[k]
            rhs[-1] = right[k]
        un = solve_banded((1, 1), ab, rhs)
        viol_mono[k] = max(0.0, float(np.max(u - un)))
        u = un
        t = t0 + k * dt
        if check:
            up, lo = _envelope_np(lphi, theta, gamma, eps, logA, t)
            viol_low[k] = max(0.0, float(np.max(lo - u)))
            viol_up[k] = max(0.0, float(np.max(u - up)))
        xs[k] = _crossing_np(u)
        if k % stride == 0:
            snaps.append(u.copy())
            snap_t.append(t)
    return np.array(snaps), np.array(snap_t), xs, viol_low, viol_up, viol_mono


def march(u0, a_half, c, h, dt, nsteps, t0=0.0, neumann=False, left=None,
          right=None, stride=1, lphi=None, theta=None, gamma=0.0, eps=0.0, logA=0.0):
    """March u_t = (a u_x)_x + c u (1 - u) for nsteps.

    Returns (snapshots, snapshot_times, X_index_per_step, lower_violation,
    upper_violation, monotonicity_violation); X is in grid-index units.
    The sandwich envelope is checked only when lphi/theta are given.
    """
    u0 = np.ascontiguousarray(u0, dtype=float)
    n = u0.shape[0]
    if left is None:
        left = np.zeros(nsteps + 1)
    if right is None:
        right = np.zeros(nsteps + 1)
    if lphi is None:
        lphi = np.zeros(0)
        theta = np.zeros(0)
    args = (u0, np.ascontiguousarray(a_half, dtype=float), np.ascontiguousarray(c, dtype=float),
            float(dt / (h * h)), float(dt), int(nsteps), float(t0), bool(neumann),
            np.ascontiguousarray(left, dtype=float), np.ascontiguousarray(right, dtype=float),
            int(stride), np.ascontiguousarray(lphi, dtype=float),
            np.ascontiguousarray(theta, dtype=float), float(gamma), float(eps), float(logA))
    if n < 3:
        raise ValueError("march needs at least 3 nodes")
    if USE_NUMBA:
        return _march_nb(*args)
    return _march_np(*args)


numba_impl = types.SimpleNamespace(
    max_eig=_max_eig_nb, thomas=_thomas_nb, cyclic_thomas=_cyclic_nb,
    ratio_sweep=_ratio_sweep_nb, shoot=_shoot_nb, ap_scan=_ap_scan_nb, march=_march_nb,
)
numpy_impl = types.SimpleNamespace(
    max_eig=_max_eig_np, thomas=_thomas_np,
    cyclic_thomas=lambda lo, di, up, rhs: _cyclic(_thomas_np, lo, di, up, rhs),
    ratio_sweep=_ratio_sweep_np, shoot=_shoot_np, ap_scan=_ap_scan_np, march=_march_np,
)
