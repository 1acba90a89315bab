"""Command-line entry point: ``apfronts <task> --config run.json --out dir``."""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from . import __version__, _kernels
from .coeff import CoefficientField, bohr_mean, ap_diagnostic
from .decay import mu as mu_of, mu_curve
from .eigen import DEFAULT_H, DEFAULT_R_SCHEDULE, hyp1_diagnostic, kp_curve, lambda1
from .errors import APFrontsError, ArgumentError
from .frontsim import extract_profile, run_front, sandwich_amplitude, solve_kappa, spread_front
from .speed import SpeedConfig, gamma_for_speed, speed_report

TASKS = ("eigen", "mu-curve", "speed", "front", "profile", "validate")

NUMERIC_DEFAULTS = {
    "h": DEFAULT_H,
    "R_schedule": list(DEFAULT_R_SCHEDULE),
    "lambda_tol": 1e-4,
    "gamma_grid": None,
    "p_grid": [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
    "domain_half_length": 100.0,
    "hyp1_half_length": 200.0,
    "dt": 0.01,
    "t_span": [-20.0, 20.0],
    "speed": None,
    "speed_factor": 1.1,
    "gamma": None,
    "epsilon": None,
    "profile_x_window": None,
    "profile_dz": 0.05,
}


@dataclass
class RunConfig:
    field: CoefficientField
    task: str
    numerics: dict = dc_field(default_factory=dict)
    output_dir: str = "out"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ArgumentError(f"unknown task {self.task!r}; choose from {list(TASKS)}")
        unknown = set(self.numerics) - set(NUMERIC_DEFAULTS)
        if unknown:
            raise ArgumentError(f"unknown numerics keys {sorted(unknown)}")
        num = dict(NUMERIC_DEFAULTS)
        num.update(self.numerics)
        _check_numerics(num)
        self.numerics = num

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ArgumentError("config must be a JSON object")
        if "field" not in d:
            raise ArgumentError("config needs a 'field'")
        extra = set(d) - {"field", "task", "numerics", "output_dir"}
        if extra:
            raise ArgumentError(f"unknown config keys {sorted(extra)}")
        return cls(CoefficientField.from_dict(d["field"]), d.get("task", "speed"),
                   dict(d.get("numerics") or {}), d.get("output_dir", "out"))

    def to_dict(self):
        return {"field": self.field.to_dict(), "task": self.task, "numerics": dict(self.numerics),
                "output_dir": self.output_dir}


def _check_numerics(n):
    def pos(key):
        v = n[key]
        if not isinstance(v, (int, float)) or not v > 0 or not math.isfinite(v):
            raise ArgumentError(f"numerics.{key} must be a positive number")

    for k in ("h", "lambda_tol", "domain_half_length", "hyp1_half_length", "dt", "speed_factor", "profile_dz"):
        pos(k)
    if n["h"] > 0.5:
        raise ArgumentError("numerics.h must be at most 0.5")
    if n["speed_factor"] <= 1.0:
        raise ArgumentError("numerics.speed_factor must exceed 1")
    rs = n["R_schedule"]
    if len(rs) < 3 or any(b <= a for a, b in zip(rs, rs[1:])):
        raise ArgumentError("numerics.R_schedule needs >= 3 increasing entries")
    ts = n["t_span"]
    if len(ts) != 2 or not ts[1] > ts[0] or ts[0] >= 0:
        raise ArgumentError("numerics.t_span must be [t_start < 0, t_end > t_start]")
    if n["epsilon"] is not None and not 0 < n["epsilon"] < 1:
        raise ArgumentError("numerics.epsilon must lie in (0, 1)")


# ---------------------------------------------------------------------------
# atomic output helpers


def _atomic_write(path, text):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _json_text(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, np.generic):
        return _clean(v.item())
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


class Outputs:
    def __init__(self, root):
        self.root = root
        self.files = []
        os.makedirs(root, exist_ok=True)

    def json(self, name, obj):
        _atomic_write(os.path.join(self.root, name), _json_text(obj))
        self.files.append(name)

    def csv(self, name, header, rows):
        _atomic_write(os.path.join(self.root, name), _csv_text(header, rows))
        self.files.append(name)


def pmap(fn, items, threads=1):
    """Order-preserving map, fanned out over threads when threads > 1."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# tasks


def _eigen_estimate(cfg):
    n = cfg.numerics
    return lambda1(cfg.field, n["R_schedule"], n["lambda_tol"], n["h"])


def task_eigen(cfg, out, threads):
    n = cfg.numerics
    est = _eigen_estimate(cfg)
    out.csv("lambda1_table.csv", ["R", "lambda_R"], [(R, v) for R, v in est.samples])
    curve = kp_curve(cfg.field, n["p_grid"], est.lambda1, tol=max(1e-3, est.tol),
                     domain_half_length=n["domain_half_length"], h=n["h"])
    out.csv("kp_curve.csv", ["p", "k_p", "eps_reg_final", "residual"],
            [(p, kp, tr[-1][0], tr[-1][1]) for p, kp, tr in curve.entries])
    hyp = hyp1_diagnostic(cfg.field, est.lambda1, n["hyp1_half_length"], n["h"])
    out.json("eigen.json", {"lambda1": est.to_dict(), "kp_flags": curve.flags, "hyp1": hyp.to_dict()})


def task_mu_curve(cfg, out, threads):
    n = cfg.numerics
    est = _eigen_estimate(cfg)
    curve = mu_curve(cfg.field, n["gamma_grid"], h=n["h"], lambda1=est.lambda1, lambda_tol=est.tol,
                     mapper=lambda f, xs: pmap(f, list(xs), threads))
    rows = []
    for k, (g, m) in enumerate(curve.points):
        fl = ";".join(f["check"] for f in curve.flags if f.get("index") == k)
        rows.append((g, m.value, m.uncertainty, curve.lo_bounds[k], curve.up_bounds[k], fl))
    out.csv("mu_curve.csv", ["gamma", "mu", "mu_uncertainty", "lo_bound", "up_bound", "flags"], rows)
    out.json("mu_curve.json", {"lambda1": est.lambda1, "lambda_tol": est.tol,
                               "mu_lower_limit": list(curve.mu_lower_limit),
                               "C_envelope": curve.C_envelope, "flags": curve.flags})


def _speed_cfg(cfg):
    n = cfg.numerics
    return SpeedConfig(h=n["h"], R_schedule=tuple(n["R_schedule"]), lambda_tol=n["lambda_tol"],
                       kp_half_length=n["domain_half_length"])


def task_speed(cfg, out, threads):
    rep = speed_report(cfg.field, _speed_cfg(cfg))
    out.json("speed_report.json", rep.to_dict())
    out.csv("gamma_scan.csv", ["gamma", "mu", "gamma_over_mu"], rep.scan)
    out.csv("p_scan.csv", ["p", "k_p", "k_p_over_p"], rep.kp_scan)
    return rep


def _front(cfg):
    n = cfg.numerics
    sc = _speed_cfg(cfg)
    sc.kp_check = False
    rep = speed_report(cfg.field, sc)
    w = n["speed"] if n["speed"] is not None else n["speed_factor"] * rep.w_star
    t0, t1 = n["t_span"]
    setup, st = run_front(cfg.field, w, rep, n=-t0, t_end=t1, h=n["h"], dt=n["dt"],
                          gamma=n["gamma"], epsilon=n["epsilon"])
    return rep, setup, st


def _front_json(rep, setup, st):
    return {"w": setup.w, "w_star": rep.w_star, "sandwich": setup.sandwich.manifest(),
            "measured": st.measured, "violations": st.violations, "params": st.params}


def task_front(cfg, out, threads):
    rep, setup, st = _front(cfg)
    t, X = st.X_trace[:, 0], st.X_trace[:, 1]
    k = int(round(10.0 / (t[1] - t[0])))
    rows = [(t[i], X[i], (X[i] - X[i - k]) / (t[i] - t[i - k]) if i >= k else math.nan) for i in range(len(t))]
    out.csv("front_trace.csv", ["t", "X", "avg_window_speed"], rows)
    out.json("front.json", _front_json(rep, setup, st))


def task_profile(cfg, out, threads):
    n = cfg.numerics
    rep, setup, st = _front(cfg)
    prof = extract_profile(st, setup.sandwich, x_window=n["profile_x_window"], dz=n["profile_dz"])
    rows = [(z, x, prof.U[i, j]) for i, z in enumerate(prof.z_grid) for j, x in enumerate(prof.x_grid)]
    out.csv("profile_U.csv", ["z", "x", "U"], rows)
    out.json("profile.json", {"front": _front_json(rep, setup, st), "M": prof.M, "checks": prof.checks,
                              "almost_periods": [{"z0": z0, "epsilon": r.epsilon, "taus": r.almost_periods[:20],
                                                  "max_gap": r.max_gap} for z0, r in prof.ap_reports]})


def run_validation(threads=1):
    """Closed-form oracle checks; returns a list of (name, passed, detail)."""
    const = CoefficientField.constant()
    checks = []

    def add(name, ok, **detail):
        checks.append({"name": name, "passed": bool(ok), **detail})

    est = lambda1(const)
    add("lambda1 constant = c", abs(est.lambda1 - 1.0) < 1e-3, value=est.lambda1)
    for g, want in ((5.0, 2.0), (2.0, 1.0)):
        m = mu_of(const, g).value
        add(f"mu({g}) = sqrt(gamma - c)", abs(m - want) < 1e-3 * want, value=m)
    m4 = mu_of(CoefficientField.constant(4, 1), 2.0).value
    add("mu = sqrt((gamma - c)/a) for a = 4", abs(m4 - 0.5) < 1e-3, value=m4)
    for a, c in ((1, 1), (4, 1), (1, 4), (2, 0.5)):
        rep = speed_report(CoefficientField.constant(a, c))
        want = 2 * math.sqrt(a * c)
        add(f"w* = 2 sqrt(ac) for a={a}, c={c}", abs(rep.w_star - want) <= 5e-3 * want,
            value=rep.w_star, kp=rep.kp_cross_check["value"])
    rep = speed_report(const, {"kp_check": False})
    g, eps = gamma_for_speed(const, 2.5, rep)
    add("gamma_for_speed(2.5) = 1.25", abs(g - 1.25) < 1e-3, value=g, epsilon=eps)
    kap = solve_kappa(lambda x: math.sqrt(x - 1.0), 1.25, 0.2)
    add("kappa closed form 0.11", abs(kap - 0.11) < 1e-9, value=kap)
    A = sandwich_amplitude(1.0, 0.07, 0.2, 1.0)
    add("A = 0.07^-0.2", abs(A - 0.07 ** -0.2) < 1e-12, value=A)
    bm = bohr_mean(np.sin, 1000.0, [0.0, 17.0, -53.0])
    add("Bohr mean of sin", abs(bm.value) <= 2e-3 and bm.uncertainty <= 2e-3, value=bm.value)
    ap = ap_diagnostic(lambda x: np.sin(2 * np.pi * x), 1e-6, (0.0, 10.0), (0.0, 10.0))
    found = all(any(abs(t - k) < 1e-9 for t in ap.almost_periods) for k in range(1, 11))
    add("periods of sin(2 pi x)", found, count=len(ap.almost_periods))
    sp = spread_front(CoefficientField.constant(), t_end=100.0, window=40.0)
    add("Cauchy spreading >= 2 - 3%", sp.liminf_speed >= 0.97 * 2.0, value=sp.liminf_speed)
    return checks


def task_validate(cfg, out, threads):
    checks = run_validation(threads)
    out.json("validate.json", {"checks": checks, "all_passed": all(c["passed"] for c in checks)})
    if not all(c["passed"] for c in checks):
        failed = [c["name"] for c in checks if not c["passed"]]
        raise _ValidationFailed(f"{len(failed)} oracle checks failed", failed=failed)


class _ValidationFailed(APFrontsError):
    pass


HANDLERS = {"eigen": task_eigen, "mu-curve": task_mu_curve, "speed": task_speed, "front": task_front,
            "profile": task_profile, "validate": task_validate}


def run(cfg, threads=1):
    """Execute cfg; returns the list of written files (manifest last)."""
    out = Outputs(cfg.output_dir)
    HANDLERS[cfg.task](cfg, out, threads)
    out.json("manifest.json", {"version": __version__, "backend": _kernels.BACKEND,
                               "config": cfg.to_dict(), "speed_settings": asdict(_speed_cfg(cfg)),
                               "outputs": list(out.files)})
    return out.files


def _error(code, kind, exc, out_dir=None):
    payload = {"error": kind, "message": str(exc), "exit_code": code,
               "details": getattr(exc, "details", {})}
    text = _json_text(payload)
    sys.stdout.write(text)
    if out_dir:
        try:
            os.makedirs(out_dir, exist_ok=True)
            _atomic_write(os.path.join(out_dir, "error.json"), text)
        except OSError:
            pass
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="apfronts", description="Almost periodic KPP front laboratory")
    p.add_argument("task", choices=TASKS)
    p.add_argument("--config", help="JSON run configuration (field, numerics)")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent sub-tasks")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = args.out
    try:
        if args.config:
            with open(args.config) as fh:
                doc = json.load(fh)
        elif args.task == "validate":
            doc = {"field": {"kind": "constant", "a": 1.0, "c": 1.0}}
        else:
            raise ArgumentError("--config is required for this task")
        if not isinstance(doc, dict):
            raise ArgumentError("config must be a JSON object")
        doc = dict(doc, task=args.task)
        if out_dir:
            doc["output_dir"] = out_dir
        cfg = RunConfig.from_dict(doc)
        if args.threads < 1:
            raise ArgumentError("--threads must be >= 1")
    except json.JSONDecodeError as exc:
        return _error(2, "parse_error", exc, out_dir)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return _error(2, "config_error", exc, out_dir)
    try:
        run(cfg, args.threads)
    except (APFrontsError, ArithmeticError) as exc:
        return _error(1, "computation_error", exc, cfg.output_dir)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
