"""Sub/supersolution sandwich, front time-marching, speed measurement and the
moving-frame profile U(z, x)."""

import csv
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .coeff import Grid1D, sample_ap_diagnostic, wrap_length
from .decay import mu as mu_of, phi_gamma
from .eigen import DEFAULT_H, lambda1_cached, solve_regularized
from .errors import ArgumentError, DomainError, SchemeError, SolverError
from .speed import gamma_for_speed, speed_report

THETA_REG_SCHEDULE = (1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001)


def solve_kappa(mu_fn, gamma, epsilon, xtol=1e-12):
    """Root of F(k) = 1/mu(gamma) - (1+eps)/mu(gamma+k) on (0, eps*gamma)."""
    if not 0 < epsilon < 1:
        raise ArgumentError("epsilon must lie in (0, 1)")
    m0 = mu_fn(gamma)

    def F(k):
        return 1.0 / m0 - (1.0 + epsilon) / mu_fn(gamma + k)

    lo, hi = 0.0, epsilon * gamma
    if not (F(lo) < 0 < F(hi)):
        raise ArgumentError("kappa is not bracketed on (0, eps*gamma); shrink epsilon",
                            F0=F(lo), F1=F(hi), epsilon=epsilon)
    while hi - lo > xtol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if F(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _index_map(prof, grid):
    """Indices of grid nodes inside the profile grid (both h-aligned)."""
    h = grid.h
    off = int(round((grid.x_lo - prof.grid.x_lo) / h))
    if off < 0 or off + grid.n > prof.grid.n or abs(prof.grid.h - h) > 1e-12:
        raise ArgumentError("profile grid does not cover the working grid")
    return np.arange(off, off + grid.n)


def _M_coefficients(field, x, sigma, gamma, epsilon):
    # M = L_{(1+eps) sigma} - (1+eps) gamma with (a sigma)' = a sigma^2 + c - gamma
    a = field.a(x)
    c = field.c(x)
    B = field.a_prime(x) - 2.0 * a * (1.0 + epsilon) * sigma
    C = epsilon * ((1.0 + epsilon) * a * sigma**2 - c)
    return a, B, C


def _minus_M_over(v_log, a, B, C, h):
    """-(M e^v)/e^v at interior nodes by centered differences of e^v."""
    th = np.exp(v_log - np.max(v_log))
    d1 = (th[2:] - th[:-2]) / (2 * h)
    d2 = (th[2:] - 2 * th[1:-1] + th[:-2]) / (h * h)
    return -(a[1:-1] * d2 + B[1:-1] * d1 + C[1:-1] * th[1:-1]) / th[1:-1]


@dataclass
class ThetaResult:
    theta: np.ndarray
    delta: float
    certificate_min: float
    eps_reg: float
    inf_theta: float
    sup_theta: float
    zeta_identity_error: float
    wrap_length: float
    trace: list = dc_field(default_factory=list)


def build_theta(field, gamma, epsilon, kappa, prof_g, prof_gk, grid, target_length=200.0,
                reg_schedule=THETA_REG_SCHEDULE):
    """Bounded positive theta with -M theta >= delta theta, delta = (eps gamma - kappa)/2.

    The regularized equation for M is solved with periodic ends on a window
    [-W, 0] whose length W is an almost-period of the coefficients; theta is
    extended W-periodically to the working grid and certified there by
    direct centered differences with the true sigma.
    """
    if not 0 < kappa < epsilon * gamma:
        raise ArgumentError("kappa must lie in (0, eps*gamma)")
    h = grid.h
    delta = 0.5 * (epsilon * gamma - kappa)
    N, _ = wrap_length(field, target_length, h)
    W = N * h
    pg = prof_g.grid
    j0 = pg.index_of(-W)
    if j0 < 2:
        raise ArgumentError("decay profile does not extend far enough left for the theta window")
    xw = pg.x[j0:j0 + N]
    sw = prof_g.sigma[j0:j0 + N]
    a, B, C = _M_coefficients(field, xw, sw, gamma, epsilon)

    idx = _index_map(prof_g, grid)
    xg = grid.x
    sg = prof_g.sigma[idx]
    if not np.all(np.isfinite(sg)):
        raise ArgumentError("sigma undefined on part of the working grid; enlarge the profile")
    ag, Bg, Cg = _M_coefficients(field, xg, sg, gamma, epsilon)
    imod = np.round(xg / h).astype(np.int64) % N

    trace = []
    u = np.full(N, float(np.mean(C)) / reg_schedule[0])
    prev = reg_schedule[0]
    for k, er in enumerate(reg_schedule):
        if k:
            m = float(np.mean(u))
            u = prev * m / er + (u - m)
        u, hist = solve_regularized(a, B, C, er, h, u)
        prev = er
        v = u[imod]
        cert = _minus_M_over(v, ag, Bg, Cg, h)
        trace.append((er, float(np.min(-er * u)), float(np.min(cert))))
        if np.min(cert) >= delta:
            theta = np.exp(v - np.max(u))
            idx_k = _index_map(prof_gk, grid)
            lz = prof_gk.lphi[idx_k] - (1.0 + epsilon) * prof_g.lphi[idx]
            zeta_err = float(np.max(np.abs(_minus_M_over(lz, ag, Bg, Cg, h) - (epsilon * gamma - kappa))))
            return ThetaResult(theta, delta, float(np.min(cert)), er, float(theta.min()),
                               float(theta.max()), zeta_err, W, trace)
    raise SolverError("theta certificate failed at the smallest regularization", trace=trace, delta=delta)


@dataclass
class SandwichSpec:
    """Sandwich data on the working grid; zeta and lphi hold logarithms."""

    gamma: float
    epsilon: float
    kappa: float
    theta: np.ndarray
    inf_theta: float
    sup_theta: float
    delta: float
    A: float
    zeta: np.ndarray
    grid: Grid1D
    lphi: np.ndarray
    certificate_min: float = math.nan
    zeta_identity_error: float = math.nan
    mu_gamma: float = math.nan
    sigma: np.ndarray = None

    @property
    def speed(self):
        return self.gamma / self.mu_gamma

    def upper(self, t):
        return np.minimum(1.0, np.exp(np.minimum(self.lphi + self.gamma * t, 0.0)))

    def lower(self, t):
        lz = self.lphi + self.gamma * t
        t1 = math.log(self.A) + np.log(self.theta) + self.epsilon * lz
        with np.errstate(over="ignore"):
            val = np.exp(np.minimum(lz, 700.0)) * (1.0 - np.exp(np.minimum(t1, 0.0)))
        return np.where(t1 >= 0.0, 0.0, val)

    def manifest(self):
        return {"gamma": self.gamma, "epsilon": self.epsilon, "kappa": self.kappa, "delta": self.delta,
                "A": self.A, "inf_theta": self.inf_theta, "sup_theta": self.sup_theta,
                "certificate_min": self.certificate_min, "zeta_identity_error": self.zeta_identity_error,
                "mu_gamma": self.mu_gamma,
                "grid": {"x_lo": self.grid.x_lo, "x_hi": self.grid.x_hi, "n": self.grid.n}}


def sandwich_amplitude(sup_c, delta, epsilon, inf_theta):
    """max(sup c^eps / (delta^eps inf theta), smallest A keeping sup of the subsolution < 1)."""
    a1 = sup_c**epsilon / (delta**epsilon * inf_theta)
    a2 = (epsilon / (1.0 + epsilon)) ** epsilon / ((1.0 + epsilon) * inf_theta)
    return max(a1, a2 * (1.0 + 1e-9))


def build_sandwich(field, gamma, epsilon, theta, delta, prof_g, kappa=math.nan, grid=None,
                   prof_gk=None, certificate_min=math.nan, zeta_identity_error=math.nan):
    """Assemble the sandwich on ``grid`` (default: the profile grid)."""
    theta_vals = theta.theta if isinstance(theta, ThetaResult) else np.asarray(theta, dtype=float)
    if isinstance(theta, ThetaResult):
        certificate_min, zeta_identity_error = theta.certificate_min, theta.zeta_identity_error
    grid = grid or prof_g.grid
    idx = _index_map(prof_g, grid)
    lphi = prof_g.lphi[idx]
    if theta_vals.shape != lphi.shape:
        raise ArgumentError("theta must be sampled on the working grid")
    inf_t = float(np.min(theta_vals))
    A = sandwich_amplitude(field.c_bounds()[1], delta, epsilon, inf_t)
    zeta = None if prof_gk is None else prof_gk.lphi[_index_map(prof_gk, grid)] - (1 + epsilon) * lphi
    return SandwichSpec(float(gamma), float(epsilon), float(kappa), theta_vals, inf_t,
                        float(np.max(theta_vals)), float(delta), float(A), zeta, grid, lphi,
                        float(certificate_min), float(zeta_identity_error), prof_g.mu.value,
                        prof_g.sigma[idx])


# ---------------------------------------------------------------------------


@dataclass
class FrontState:
    grid: Grid1D
    times: np.ndarray
    snapshots: np.ndarray
    X_trace: np.ndarray
    measured: dict
    violations: dict
    params: dict = dc_field(default_factory=dict)

    def manifest(self):
        return {"params": self.params, "measured": self.measured, "violations": self.violations,
                "grid": {"x_lo": self.grid.x_lo, "x_hi": self.grid.x_hi, "n": self.grid.n}}

    def write_trace(self, path, window=10.0):
        t, X = self.X_trace[:, 0], self.X_trace[:, 1]
        dt = t[1] - t[0]
        k = int(round(window / dt))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "X", "avg_window_speed"])
            for i in range(len(t)):
                v = (X[i] - X[i - k]) / (t[i] - t[i - k]) if i >= k else math.nan
                w.writerow([repr(float(t[i])), repr(float(X[i])), repr(float(v))])


def window_means(t, X, t_from, t_to, windows=(10.0, 20.0, 40.0)):
    """least/upper means of X' over all offsets s in [t_from, t_to - T]."""
    sel = (t >= t_from - 1e-9) & (t <= t_to + 1e-9)
    t, X = t[sel], X[sel]
    dt = t[1] - t[0]
    out = {}
    for T in windows:
        k = int(round(T / dt))
        if k >= len(t):
            continue
        rates = (X[k:] - X[:-k]) / (t[k:] - t[:-k])
        out[T] = (float(np.min(rates)), float(np.max(rates)))
    return out


def measure_speeds(t, X, t_from, t_to, windows=(10.0, 20.0, 40.0)):
    i0 = int(np.searchsorted(t, t_from - 1e-9))
    avg = (X[-1] - X[i0]) / (t[-1] - t[i0])
    wm = window_means(t, X, t_from, t_to, windows)
    d = {"average_speed": float(avg), "t_from": float(t[i0]), "t_to": float(t[-1])}
    if wm:
        T = max(wm)
        d.update(least_mean=wm[T][0], upper_mean=wm[T][1], window=T,
                 windows={str(k): list(v) for k, v in sorted(wm.items())})
    return d


def march_front(field, sandwich, t_start, t_end, grid=None, dt=0.01, burn_in=0.2, tol=1e-3,
                snapshot_every=0.05, check=True):
    """March u_t = (a u_x)_x + c u (1 - u) from t_start between the sandwich bounds.

    Each step applies the exact logistic reaction map and a backward-Euler
    conservative diffusion solve; both are order preserving.  Dirichlet
    data come from the supersolution at both ends (1 on the left).  The
    datum zeta/(1+zeta), zeta = phi e^{gamma t_start}, lies between the
    bounds and is a stationary subsolution when gamma >= 2 sup a sigma^2,
    so the run is nondecreasing in time from the first step.
    """
    grid = grid or sandwich.grid
    if grid is not sandwich.grid and grid != sandwich.grid:
        raise ArgumentError("march grid must be the sandwich grid")
    if not t_end > t_start:
        raise ArgumentError("t_end must exceed t_start")
    if dt > 1.0 / (2.0 * field.c_bounds()[1]):
        raise ArgumentError("dt exceeds 1/(2 sup c)")
    h = grid.h
    x = grid.x
    nsteps = int(round((t_end - t_start) / dt))
    dt = (t_end - t_start) / nsteps
    lphi = sandwich.lphi
    g = sandwich.gamma
    if lphi[-1] + g * t_end > math.log(1e-10):
        raise DomainError("right edge too close: supersolution exceeds 1e-10 there",
                          value=float(math.exp(lphi[-1] + g * t_end)))
    if lphi[0] + g * t_start < math.log(1e10):
        raise DomainError("left edge too close: supersolution below 1 there")
    ts = t_start + dt * np.arange(nsteps + 1)
    left = np.ones(nsteps + 1)
    right = np.exp(np.minimum(lphi[-1] + g * ts, 0.0))
    lz0 = lphi + g * t_start
    u0 = 1.0 / (1.0 + np.exp(-np.clip(lz0, -700, 700)))
    datum = "zeta/(1+zeta)"
    if np.any(sandwich.lower(t_start) > u0 + tol):
        u0 = sandwich.upper(t_start)
        datum = "upper(t_start)"
    stride = max(1, int(round(snapshot_every / dt)))
    ah = field.a_half(x, h)
    c = field.c(x)
    kw = {}
    if check:
        kw = dict(lphi=lphi, theta=sandwich.theta, gamma=g, eps=sandwich.epsilon,
                  logA=math.log(sandwich.A))
    snaps, snap_t, xs, vlow, vup, vmono = _kernels.march(u0, ah, c, h, dt, nsteps, t_start, False,
                                                         left, right, stride, **kw)
    X = grid.x_lo + h * xs
    if np.any(~np.isfinite(X)):
        raise DomainError("level u = 1/2 not found on the grid", first_missing=float(ts[np.argmax(~np.isfinite(X))]))
    viol = {"lower": float(vlow.max()), "upper": float(vup.max()), "monotone": float(vmono.max()),
            "tol": tol, "datum": datum}
    interior = snaps[-1][1:-1]
    # u may round to 1.0 far behind the front
    viol["interior_in_unit"] = bool(np.all((interior > 0) & (interior <= 1)))
    if check and max(viol["lower"], viol["upper"], viol["monotone"]) > tol:
        raise SchemeError("sandwich or monotonicity violated beyond tol; refine h or dt", **viol)
    t_from = t_start + burn_in * (t_end - t_start)
    measured = measure_speeds(ts, X, t_from, t_end)
    measured["target_speed"] = sandwich.speed
    i0 = int(np.searchsorted(ts, t_from - 1e-9))
    measured["X_drop_after_burn_in"] = float(max(0.0, np.max(np.maximum.accumulate(X[i0:]) - X[i0:])))
    params = {"t_start": t_start, "t_end": t_end, "dt": dt, "h": h, "burn_in": burn_in, "tol": tol,
              "snapshot_every": stride * dt, "sandwich": sandwich.manifest()}
    return FrontState(grid, snap_t, snaps, np.column_stack((ts, X)), measured, viol, params)


def working_grid(field, w, mu_gamma, gamma, t_start, t_end, h=DEFAULT_H, pad=10.0):
    """h-aligned grid wide enough that the supersolution is 1 (left) and
    below 1e-10 (right) over [t_start, t_end]."""
    x_lo = w * t_start - (math.log(1e10) + 5.0) / mu_gamma - pad
    x_hi = w * t_end + (math.log(1e10) + 5.0) / mu_gamma + pad
    return Grid1D.aligned(x_lo, x_hi, h)


@dataclass
class FrontSetup:
    w: float
    gamma: float
    epsilon: float
    kappa: float
    sandwich: SandwichSpec
    prof_g: object
    prof_gk: object
    theta: ThetaResult
    grid: Grid1D


def prepare_front(field, w, report=None, t_start=-20.0, t_end=20.0, h=DEFAULT_H, gamma=None,
                  epsilon=None, theta_length=200.0):
    """gamma and epsilon for speed w, kappa, decay profiles, theta and the sandwich."""
    if report is None:
        report = speed_report(field, {"kp_check": False, "h": h})
    if gamma is None or epsilon is None:
        g_sel, e_sel = gamma_for_speed(field, w, report)
        gamma = g_sel if gamma is None else gamma
        epsilon = e_sel if epsilon is None else epsilon
    lam, ltol = report.lambda1, report.lambda_tol

    def mu_fn(g):
        return mu_of(field, g, h=h, lambda1=lam, lambda_tol=ltol).value

    kappa = solve_kappa(mu_fn, gamma, epsilon)
    m = mu_fn(gamma)
    grid = working_grid(field, w, m, gamma, t_start, t_end, h)
    amax = field.a_bounds()[1]
    mlb = math.sqrt((gamma - lam) / amax)
    R = grid.x_hi + 40.0 / mlb + max(10.0, 0.1 * grid.x_hi)
    L_left = max(-grid.x_lo, 3.0 * theta_length) + 50.0
    kw = dict(h=h, R=R, L_left=L_left, lambda1=lam, lambda_tol=ltol)
    prof_g = phi_gamma(field, gamma, **kw)
    prof_gk = phi_gamma(field, gamma + kappa, **kw)
    th = build_theta(field, gamma, epsilon, kappa, prof_g, prof_gk, grid, target_length=theta_length)
    sw = build_sandwich(field, gamma, epsilon, th, th.delta, prof_g, kappa, grid, prof_gk)
    return FrontSetup(float(w), float(gamma), float(epsilon), float(kappa), sw, prof_g, prof_gk, th, grid)


def run_front(field, w, report=None, n=20.0, t_end=20.0, h=DEFAULT_H, dt=0.01, **kw):
    """prepare_front + march_front from t = -n."""
    setup = prepare_front(field, w, report, -n, t_end, h, **kw)
    st = march_front(field, setup.sandwich, -n, t_end, setup.grid, dt)
    st.params.update(w=w, n=n)
    return setup, st


def n_doubling(field, w, report=None, n=20.0, t_end=20.0, h=DEFAULT_H, dt=0.01, **kw):
    """Average speed for start offsets n and 2n over the same absolute time window."""
    out = []
    t_from = None
    for nn in (n, 2 * n):
        setup = prepare_front(field, w, report, -nn, t_end, h, **kw)
        st = march_front(field, setup.sandwich, -nn, t_end, setup.grid, dt)
        t, X = st.X_trace[:, 0], st.X_trace[:, 1]
        if t_from is None:
            t_from = st.measured["t_from"]
        i0 = int(np.searchsorted(t, t_from - 1e-9))
        out.append(float((X[-1] - X[i0]) / (t[-1] - t[i0])))
    return {"n": n, "speeds": out, "relative_change": abs(out[1] - out[0]) / abs(out[0]), "t_from": t_from}


# ---------------------------------------------------------------------------


@dataclass
class SpreadResult:
    times: np.ndarray
    X: np.ndarray
    liminf_speed: float
    window: float
    t_from: float
    grid: Grid1D


def spread_front(field, t_end=100.0, h=DEFAULT_H, dt=0.01, half_width=5.0, x_lo=-30.0, x_hi=None,
                 window=40.0, t_from=None):
    """Compactly supported datum 1 on [-half_width, half_width], zero-flux ends.

    liminf_speed is the smallest window-average of X' over windows of
    length ``window`` starting after t_from (default t_end / 5).
    """
    amax, cmax = field.a_bounds()[1], field.c_bounds()[1]
    if x_hi is None:
        x_hi = 2.0 * math.sqrt(amax * cmax) * t_end * 1.1 + 40.0
    grid = Grid1D.aligned(x_lo, x_hi, h)
    x = grid.x
    u0 = (np.abs(x) <= half_width).astype(float)
    nsteps = int(round(t_end / dt))
    _, _, xs, _, _, _ = _kernels.march(u0, field.a_half(x, h), field.c(x), h, dt, nsteps, 0.0, True,
                                       stride=nsteps)
    X = grid.x_lo + h * xs
    t = dt * np.arange(nsteps + 1)
    if np.any(~np.isfinite(X)):
        raise DomainError("spreading front lost its u = 1/2 level")
    if X[-1] > x_hi - 20.0:
        raise DomainError("spreading front reached the right edge; enlarge x_hi", x_hi=x_hi)
    t_from = t_end / 5.0 if t_from is None else t_from
    wm = window_means(t, X, t_from, t_end, (window,))
    if not wm:
        raise ArgumentError("window longer than the measured time span")
    return SpreadResult(t, X, wm[window][0], window, t_from, grid)


# ---------------------------------------------------------------------------


@dataclass
class ProfileU:
    z_grid: np.ndarray
    x_grid: np.ndarray
    U: np.ndarray  # shape (len(z_grid), len(x_grid))
    sigma: np.ndarray  # sigma_gamma / gamma on x_grid
    M: float
    gamma: float
    epsilon: float
    checks: dict = dc_field(default_factory=dict)
    ap_reports: list = dc_field(default_factory=list)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["z", "x", "U"])
            for i, z in enumerate(self.z_grid):
                for j, xx in enumerate(self.x_grid):
                    w.writerow([repr(float(z)), repr(float(xx)), repr(float(self.U[i, j]))])


def extract_profile(front, sandwich, x_window=None, dz=0.05, tol=1e-3, ap_eps=None, burn_in=None):
    """U(z, x) = u(S(x)/gamma - z, x), S(x) = int_0^x sigma_gamma, on stored snapshots.

    The z range is trimmed to [z_min, z_max] where inf_x U(z_min) > 0.99
    and sup_x U(z_max) < 1e-2; M is the smallest constant with
    U >= e^{-gamma z}(1 - M e^{-eps gamma z}) - tol on the grid.
    """
    grid = front.grid
    gamma, eps = sandwich.gamma, sandwich.epsilon
    t_snap = front.times
    tb = front.measured["t_from"] if burn_in is None else burn_in
    t_lo, t_hi = max(tb, t_snap[0]), t_snap[-1]
    xg = grid.x
    S = -sandwich.lphi
    if x_window is None:
        xm = float(np.interp(0.5 * (t_lo + t_hi), front.X_trace[:, 0], front.X_trace[:, 1]))
        x_window = (xm - 10.0, xm + 10.0)
    sel = (xg >= x_window[0] - 1e-9) & (xg <= x_window[1] + 1e-9)
    xs = xg[sel]
    Ss = S[sel] / gamma
    z_hi_cov = float(np.min(Ss) - t_lo)
    z_lo_cov = float(np.max(Ss) - t_hi)
    if z_hi_cov - z_lo_cov < 4 * dz:
        raise DomainError("stored run does not cover a usable z range", z_range=[z_lo_cov, z_hi_cov])
    z = np.arange(math.ceil(z_lo_cov / dz) * dz, z_hi_cov + 1e-12, dz)
    snaps = front.snapshots[:, sel]
    with np.errstate(divide="ignore"):
        lsn = np.log(np.maximum(snaps, 1e-300))
    U = np.empty((z.size, xs.size))
    for j in range(xs.size):
        tq = Ss[j] - z
        U[:, j] = np.exp(np.interp(tq, t_snap, lsn[:, j]))
    inf_U = U.min(axis=1)
    sup_U = U.max(axis=1)
    top = np.nonzero(inf_U > 0.99)[0]
    bot = np.nonzero(sup_U < 1e-2)[0]
    if top.size == 0 or bot.size == 0 or top[-1] >= bot[0]:
        raise DomainError("U does not reach both 0.99 and 1e-2 inside the covered z range",
                          z_range=[float(z[0]), float(z[-1])])
    i_lo, i_hi = top[-1], bot[0]
    z, U = z[i_lo:i_hi + 1], U[i_lo:i_hi + 1]
    ez = np.exp(-gamma * z)[:, None]
    upper_excess = float(np.max(U - ez))
    need = (1.0 - (U + tol) / ez) * np.exp(eps * gamma * z)[:, None]
    M = float(max(0.0, np.max(need)))
    decr = float(np.max(np.diff(U, axis=0)))
    checks = {"upper_excess": upper_excess, "upper_ok": upper_excess <= tol,
              "max_increase_in_z": decr, "decreasing_ok": decr <= tol,
              "U_zmin_inf": float(U[0].min()), "U_zmax_sup": float(U[-1].max()),
              "limits_monotone": bool(np.all(np.diff(U.min(axis=1)) <= tol) and np.all(np.diff(U.max(axis=1)) <= tol)),
              "M_finite": math.isfinite(M), "z_range": [float(z[0]), float(z[-1])]}
    prof = ProfileU(z, xs, U, sandwich.sigma[sel] / gamma, M, gamma, eps, checks)
    h = grid.h
    for z0 in (z[len(z) // 4], z[len(z) // 2], z[3 * len(z) // 4]):
        row = U[int(np.argmin(np.abs(z - z0)))]
        osc = float(np.max(row) - np.min(row))
        e = ap_eps if ap_eps is not None else max(0.05 * osc, 1e-9)
        rep = sample_ap_diagnostic(row, h, e, 0.5 * (xs[-1] - xs[0]))
        prof.ap_reports.append((float(z0), rep))
    return prof


def write_manifest(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    raise TypeError(f"not serializable: {type(v)}")
