"""Almost periodic coefficient fields, Bohr means and almost-period scans."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ArgumentError, RangeError

KINDS = ("constant", "periodic", "quasiperiodic", "tabulated")


@dataclass(frozen=True)
class TrigPoly:
    """f(x) = mean + sum_k amps[k] * cos(freqs[k] * x + phases[k])."""

    mean: float
    amps: tuple = ()
    freqs: tuple = ()
    phases: tuple = ()

    def __post_init__(self):
        if not (len(self.amps) == len(self.freqs) == len(self.phases)):
            raise ArgumentError("amps, freqs and phases must have equal length")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(self.mean))
        for A, w, p in zip(self.amps, self.freqs, self.phases):
            out = out + A * np.cos(w * x + p)
        return out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for A, w, p in zip(self.amps, self.freqs, self.phases):
            out = out - A * w * np.sin(w * x + p)
        return out

    def antiderivative(self, x):
        x = np.asarray(x, dtype=float)
        out = self.mean * x
        for A, w, p in zip(self.amps, self.freqs, self.phases):
            out = out + (A / w) * np.sin(w * x + p) if w != 0 else out + A * np.cos(p) * x
        return out

    def bounds(self):
        spread = sum(abs(A) for A, w in zip(self.amps, self.freqs) if w != 0)
        const = self.mean + sum(A * math.cos(p) for A, w, p in zip(self.amps, self.freqs, self.phases) if w == 0)
        return const - spread, const + spread

    @property
    def is_constant(self):
        return all(w == 0 or A == 0 for A, w in zip(self.amps, self.freqs))

    def shifted(self, c0):
        return TrigPoly(self.mean + c0, self.amps, self.freqs, self.phases)

    def to_dict(self):
        return {"mean": self.mean,
                "terms": [[A, w, p] for A, w, p in zip(self.amps, self.freqs, self.phases)]}

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, (int, float)):
            return cls(float(d))
        terms = d.get("terms", [])
        for t in terms:
            if len(t) not in (2, 3):
                raise ArgumentError("each term is [amplitude, frequency] or [amplitude, frequency, phase]")
        return cls(float(d.get("mean", 0.0)),
                   tuple(float(t[0]) for t in terms),
                   tuple(float(t[1]) for t in terms),
                   tuple(float(t[2]) if len(t) == 3 else 0.0 for t in terms))


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear interpolant of samples; derivative by centered differences."""

    x: tuple
    values: tuple

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.x[0], self.x[-1]
        if np.any(x < lo) or np.any(x > hi):
            raise RangeError(f"x outside tabulated range [{lo}, {hi}]", lo=lo, hi=hi)
        return x

    def __call__(self, x):
        return np.interp(self._check(x), self.x, self.values)

    def derivative(self, x):
        x = self._check(x)
        xs = np.asarray(self.x)
        dv = np.gradient(np.asarray(self.values), xs)
        return np.interp(x, xs, dv)

    def bounds(self):
        return min(self.values), max(self.values)

    @property
    def is_constant(self):
        return min(self.values) == max(self.values)

    def shifted(self, c0):
        return Tabulated(self.x, tuple(v + c0 for v in self.values))

    def to_dict(self):
        return {"x": list(self.x), "values": list(self.values)}

    @classmethod
    def from_dict(cls, d):
        x = tuple(float(v) for v in d["x"])
        vals = tuple(float(v) for v in d["values"])
        if len(x) != len(vals) or len(x) < 2 or any(b <= a for a, b in zip(x, x[1:])):
            raise ArgumentError("tabulated x must be strictly increasing and match values")
        return cls(x, vals)


@dataclass(frozen=True)
class CoefficientField:
    """The coefficient pair (a, c) of u_t = (a u_x)_x + c u (1 - u)."""

    kind: str
    a: object
    c: object
    frequencies: tuple = ()
    period: float = None
    probe_range: tuple = (-500.0, 500.0)
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown kind {self.kind!r}")
        if self.kind == "periodic":
            if not self.period or self.period <= 0:
                raise ArgumentError("periodic field needs a positive period")
            for part in (self.a, self.c):
                for w in part.freqs:
                    k = w * self.period / (2 * math.pi)
                    if abs(k - round(k)) > 1e-9:
                        raise ArgumentError(f"frequency {w} is not a multiple of 2*pi/{self.period}")
        if self.kind == "tabulated":
            lo = max(self.a.x[0], self.c.x[0])
            hi = min(self.a.x[-1], self.c.x[-1])
            object.__setattr__(self, "probe_range", (lo, hi))
        xs = np.linspace(*self.probe_range, 100_001)
        if np.min(self.a(xs)) <= 0:
            raise ArgumentError("inf a must be positive")
        if np.min(self.c(xs)) <= 0:
            raise ArgumentError("inf c must be positive")

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, a=1.0, c=1.0):
        return cls("constant", TrigPoly(float(a)), TrigPoly(float(c)), name=f"constant(a={a},c={c})")

    @classmethod
    def periodic(cls, period, a_mean=1.0, a_terms=(), c_mean=1.0, c_terms=(), name=""):
        """Terms are (amplitude, harmonic k, phase) with frequency 2*pi*k/period."""
        def poly(mean, terms):
            w0 = 2 * math.pi / period
            return TrigPoly(float(mean), tuple(t[0] for t in terms),
                            tuple(w0 * t[1] for t in terms), tuple(t[2] if len(t) > 2 else 0.0 for t in terms))
        return cls("periodic", poly(a_mean, a_terms), poly(c_mean, c_terms), period=float(period), name=name)

    @classmethod
    def quasiperiodic(cls, frequencies, a_mean=1.0, a_amps=None, c_mean=1.0, c_amps=None, name=""):
        """cos-modes on the given frequencies; a_amps/c_amps align with them."""
        frequencies = tuple(float(w) for w in frequencies)
        z = (0.0,) * len(frequencies)
        a_amps = tuple(a_amps) if a_amps is not None else z
        c_amps = tuple(c_amps) if c_amps is not None else z
        return cls("quasiperiodic", TrigPoly(float(a_mean), a_amps, frequencies, z),
                   TrigPoly(float(c_mean), c_amps, frequencies, z), frequencies=frequencies, name=name)

    @classmethod
    def tabulated(cls, x, a_values, c_values, name=""):
        x = tuple(float(v) for v in x)
        return cls("tabulated", Tabulated(x, tuple(float(v) for v in a_values)),
                   Tabulated(x, tuple(float(v) for v in c_values)), name=name)

    # -- evaluation --------------------------------------------------------
    def a_prime(self, x):
        return self.a.derivative(x)

    def a_half(self, x, h):
        """a at the midpoints x[i] + h/2 (length len(x) - 1)."""
        return self.a(np.asarray(x[:-1]) + 0.5 * h)

    def c_bounds(self):
        return self.c.bounds()

    def a_bounds(self):
        return self.a.bounds()

    @property
    def is_constant(self):
        return self.a.is_constant and self.c.is_constant

    def shifted(self, c0):
        nm = f"{self.name}+{c0}" if self.name else ""
        return CoefficientField(self.kind, self.a, self.c.shifted(c0), self.frequencies,
                                self.period, self.probe_range, nm)

    # -- serialization -----------------------------------------------------
    def to_dict(self):
        d = {"kind": self.kind, "a": self.a.to_dict(), "c": self.c.to_dict()}
        if self.frequencies:
            d["frequencies"] = list(self.frequencies)
        if self.period:
            d["period"] = self.period
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict) or "kind" not in d:
            raise ArgumentError("field document must be an object with a 'kind'")
        kind = d["kind"]
        if kind not in KINDS:
            raise ArgumentError(f"unknown kind {kind!r}")
        if kind == "tabulated":
            return cls(kind, Tabulated.from_dict(d["a"]), Tabulated.from_dict(d["c"]), name=d.get("name", ""))
        a = TrigPoly.from_dict(d.get("a", 1.0))
        c = TrigPoly.from_dict(d.get("c", 1.0))
        freqs = tuple(float(w) for w in d.get("frequencies", ()))
        if "amplitudes" in d:
            # shorthand: c = c.mean + sum amplitudes[i] cos(frequencies[i] x)
            amps = tuple(float(v) for v in d["amplitudes"])
            if len(amps) != len(freqs):
                raise ArgumentError("amplitudes and frequencies must have equal length")
            c = TrigPoly(c.mean, c.amps + amps, c.freqs + freqs, c.phases + (0.0,) * len(amps))
        if kind == "constant" and not (a.is_constant and c.is_constant):
            raise ArgumentError("constant field cannot carry oscillating terms")
        return cls(kind, a, c, freqs, d.get("period"), name=d.get("name", ""))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def eval_coefficients(field, x):
    """Return (a, a', c) at x."""
    return field.a(x), field.a_prime(x), field.c(x)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid1D:
    x_lo: float
    x_hi: float
    n: int

    def __post_init__(self):
        if self.n < 3 or not self.x_hi > self.x_lo:
            raise ArgumentError("grid needs n >= 3 and x_hi > x_lo")

    @property
    def h(self):
        return (self.x_hi - self.x_lo) / (self.n - 1)

    @property
    def x(self):
        return np.linspace(self.x_lo, self.x_hi, self.n)

    @classmethod
    def aligned(cls, x_lo, x_hi, h):
        """Grid with spacing h whose nodes are integer multiples of h."""
        i_lo = math.floor(x_lo / h + 1e-9)
        i_hi = math.ceil(x_hi / h - 1e-9)
        return cls(i_lo * h, i_hi * h, i_hi - i_lo + 1)

    @property
    def i_lo(self):
        return int(round(self.x_lo / self.h))

    def index_of(self, x):
        return int(round((x - self.x_lo) / self.h))


@dataclass
class BohrMean:
    value: float
    uncertainty: float
    window: float
    offsets_tested: int
    window_means: list = field(default_factory=list)


def _finish_mean(means, window):
    means = np.asarray(means, dtype=float)
    value = float(np.mean(means))
    unc = float(np.max(np.abs(means - value)))
    return BohrMean(value, unc, float(window), len(means), means.tolist())


def bohr_mean(f, window, offsets, step=0.01):
    """Window averages of f over [s, s + window] for each offset s."""
    if window <= 0:
        raise ArgumentError("window must be positive")
    offsets = list(offsets)
    if not offsets:
        raise ArgumentError("offsets must be nonempty")
    n = max(2001, int(math.ceil(window / step)) + 1)
    means = []
    for s in offsets:
        xs = np.linspace(s, s + window, n)
        means.append(np.trapezoid(np.asarray(f(xs), dtype=float) * np.ones_like(xs), xs) / window)
    return _finish_mean(means, window)


def bohr_mean_samples(x, values, window, offsets):
    """Same as bohr_mean for data on a uniform grid; offsets snap to nodes."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    h = x[1] - x[0]
    m = int(round(window / h))
    if m < 1 or m >= len(x):
        raise ArgumentError("window must fit inside the sampled range")
    if len(offsets) == 0:
        raise ArgumentError("offsets must be nonempty")
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * h)))
    means = []
    for s in offsets:
        i = int(round((s - x[0]) / h))
        i = min(max(i, 0), len(x) - 1 - m)
        means.append((cum[i + m] - cum[i]) / (m * h))
    return _finish_mean(means, m * h)


def spread_offsets(lo, hi, window, count=3):
    """count offsets evenly spread so every window fits in [lo, hi]."""
    if hi - lo < window:
        raise ArgumentError("window longer than the available range")
    return list(np.linspace(lo, hi - window, count))


@dataclass
class APReport:
    epsilon: float
    almost_periods: list
    max_gap: float
    discrepancies: list = field(default_factory=list)


def ap_diagnostic(f, epsilon, search_range, probe_range, step=0.01):
    """Scan translates tau on a grid of search_range for eps-almost-periods.

    The sup discrepancy is measured on a sample grid of probe_range with the
    same step, so every tau is an exact multiple of step.
    """
    if epsilon <= 0:
        raise ArgumentError("epsilon must be positive")
    s_lo, s_hi = search_range
    p_lo, p_hi = probe_range
    k_lo = int(math.ceil(s_lo / step - 1e-9))
    k_hi = int(math.floor(s_hi / step + 1e-9))
    shifts = np.arange(k_lo, k_hi + 1)
    npr = int(round((p_hi - p_lo) / step)) + 1
    base = min(0, k_lo)
    top = max(0, k_hi)
    xs = p_lo + step * np.arange(base, npr + top)
    vals = np.asarray(f(xs), dtype=float) * np.ones_like(xs)
    disc = _kernels.ap_scan(vals, shifts - base, -base, npr, epsilon)
    ok = disc <= epsilon
    taus = (shifts[ok] * step).tolist()
    gaps = np.diff(taus)
    max_gap = float(np.max(gaps)) if len(gaps) else (0.0 if taus else math.inf)
    return APReport(float(epsilon), taus, max_gap, disc[ok].tolist())


def sample_ap_diagnostic(values, h, epsilon, max_shift, probe_len=None):
    """ap_diagnostic on uniformly sampled data (shifts in [h, max_shift])."""
    v = np.asarray(values, dtype=float)
    ks = int(round(max_shift / h))
    npr = len(v) - ks if probe_len is None else int(round(probe_len / h))
    if npr < 2 or npr + ks > len(v):
        raise ArgumentError("samples too short for the requested shift range")
    shifts = np.arange(1, ks + 1)
    disc = _kernels.ap_scan(v, shifts, 0, npr, epsilon)
    ok = disc <= epsilon
    taus = (shifts[ok] * h).tolist()
    gaps = np.diff(taus)
    max_gap = float(np.max(gaps)) if len(gaps) else (0.0 if taus else math.inf)
    return APReport(float(epsilon), taus, max_gap, disc[ok].tolist())


def wrap_length(field, target, h, tol=None):
    """A length >= target usable as a periodic wrap for the field on an h grid.

    Exact period multiples for periodic fields; for quasiperiodic and
    tabulated fields the best almost-period of (a, c) in [target, 3 target]
    on the h grid.  Returns (node_count, wrap_defect).
    """
    n0 = int(math.ceil(target / h - 1e-9))
    if field.is_constant:
        return n0, 0.0
    if field.kind == "periodic":
        per = field.period / h
        if abs(per - round(per)) > 1e-9:
            raise ArgumentError(f"h={h} does not divide the period {field.period}")
        per = int(round(per))
        m = -(-n0 // per)
        return m * per, 0.0
    probe = 200.0
    xs = h * np.arange(0, int(round(probe / h)) + 3 * n0 + 2)
    npr = int(round(probe / h))
    shifts = np.arange(n0, 3 * n0 + 1)
    da = _kernels.ap_scan(field.a(xs), shifts, 0, npr)
    dc = _kernels.ap_scan(field.c(xs), shifts, 0, npr)
    d = np.maximum(da, dc)
    if tol is not None:
        good = np.nonzero(d <= tol)[0]
        k = good[0] if good.size else int(np.argmin(d))
    else:
        k = int(np.argmin(d))
    return int(shifts[k]), float(d[k])
