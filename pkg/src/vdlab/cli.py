"""Command-line experiment runner.

    vdlab <mode> --config FILE [--out DIR] [--seed N] [--t0 F] [--t1 F] [--out-dt F] [--tol F]

Exit status: 0 on success, 2 when the configuration is invalid (every
violated constraint is listed), 3 on a numerical failure (a diagnostic JSON
file is written to the output directory).
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dynamics import build_b_bundle, evolve, hamiltonian, lax_residual, sample_times
from .errors import InvalidParameters, NumericalFailure, PoleError
from .extensions import conjecture_report
from .invariants import VanDiejenParams, invariant_report, vd_hamiltonian
from .laxcore import (
    CouplingParams,
    DoubledIndex,
    PhasePoint,
    build_bundle,
    commutation_residual,
    group_relation_residual,
    lax_inverse,
    lax_spectrum,
    phase_point_violations,
)
from .projection import solve_many
from .sampling import random_couplings, random_point
from .scattering import scattering_data, tail_fit, verify_asymptotics

MODES = ("simulate", "project", "scatter", "invariants", "verify", "conjectures")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

DEFAULT_ETAS = [0.5, 1.0, 2.0, 5.0, complex(1.0, 0.5)]


@dataclass
class ExperimentConfig:
    mode: str
    n: int
    mu: float
    nu: float
    lambda0: list
    theta0: list
    t0: float = -10.0
    t1: float = 10.0
    out_dt: float = 0.5
    tol: float = 1e-10
    seed: int = 0
    kappa: Optional[float] = None
    etas: list = field(default_factory=lambda: list(DEFAULT_ETAS))
    trials: int = 20
    kappas: Optional[list] = None

    def couplings(self):
        return CouplingParams(self.mu, self.nu, self.kappa)

    def point(self):
        return PhasePoint(self.lambda0, self.theta0)


class ConfigError(Exception):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def load_config_file(path):
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(text.decode("utf-8"))
    return tomllib.loads(text.decode("utf-8"))


def _parse_eta(x):
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    return complex(x)


def build_config(raw, mode, overrides):
    """Merge file contents and command-line overrides, then validate.

    Missing couplings or initial data are drawn from the seed.  Raises
    ConfigError listing every violated constraint.
    """
    raw = dict(raw)
    for key, val in overrides.items():
        if val is not None:
            raw[key] = val
    violations = []
    seed = raw.get("seed", 0)
    try:
        seed = int(seed)
        if seed < 0:
            violations.append("seed must be non-negative")
    except (TypeError, ValueError):
        violations.append(f"seed must be an integer (got {seed!r})")
        seed = 0
    rng = np.random.default_rng(seed)

    n = raw.get("n")
    lam = raw.get("lambda0")
    theta = raw.get("theta0")
    if n is None:
        n = len(lam) if lam is not None else None
    if n is None:
        violations.append("n is required when lambda0 is not given")
        n = 1
    try:
        n = int(n)
        if n < 1:
            violations.append("n must be at least 1")
            n = 1
    except (TypeError, ValueError):
        violations.append(f"n must be an integer (got {n!r})")
        n = 1

    if "mu" in raw and "nu" in raw:
        mu, nu = raw["mu"], raw["nu"]
    else:
        drawn = random_couplings(rng)
        mu, nu = raw.get("mu", drawn.mu), raw.get("nu", drawn.nu)
    kappa = raw.get("kappa")
    try:
        CouplingParams(float(mu), float(nu), None if kappa is None else float(kappa))
    except InvalidParameters as exc:
        violations.extend(exc.violations)
    except (TypeError, ValueError):
        violations.append("mu, nu (and kappa) must be real numbers")
        mu = nu = 1.0

    if lam is None or theta is None:
        drawn = random_point(rng, n)
        lam = drawn.lam.tolist() if lam is None else lam
        theta = drawn.theta.tolist() if theta is None else theta
    try:
        lam = [float(x) for x in lam]
        theta = [float(x) for x in theta]
        if len(lam) != n:
            violations.append(f"lambda0 has {len(lam)} entries but n = {n}")
        if len(theta) != n:
            violations.append(f"theta0 has {len(theta)} entries but n = {n}")
        violations.extend(phase_point_violations(lam, theta) if len(lam) == len(theta) else [])
    except (TypeError, ValueError):
        violations.append("lambda0 and theta0 must be lists of real numbers")

    def num(key, default):
        val = raw.get(key, default)
        try:
            val = float(val)
        except (TypeError, ValueError):
            violations.append(f"{key} must be a real number (got {val!r})")
            return default
        if not math.isfinite(val):
            violations.append(f"{key} must be finite")
            return default
        return val

    defaults = {"scatter": (-40.0, 40.0, 0.5)}
    d0, d1, ddt = defaults.get(mode, (-10.0, 10.0, 0.5))
    t0, t1 = num("t0", d0), num("t1", d1)
    out_dt, tol = num("out_dt", ddt), num("tol", 1e-10)
    if not t0 < t1:
        violations.append(f"t0 must be smaller than t1 (got t0={t0!r}, t1={t1!r})")
    if not out_dt > 0:
        violations.append(f"out_dt must be positive (got {out_dt!r})")
    if not 1e-13 <= tol <= 1e-4:
        violations.append(f"tol must lie in [1e-13, 1e-4] (got {tol!r})")
    if mode not in MODES:
        violations.append(f"mode must be one of {', '.join(MODES)} (got {mode!r})")
    try:
        etas = [_parse_eta(x) for x in raw.get("etas", DEFAULT_ETAS)]
    except (TypeError, ValueError):
        violations.append("etas must be numbers, complex strings or [re, im] pairs")
        etas = []
    trials = raw.get("trials", 20)
    if not isinstance(trials, int) or trials < 1:
        violations.append(f"trials must be a positive integer (got {trials!r})")
    kappas = raw.get("kappas")
    if violations:
        raise ConfigError(violations)
    return ExperimentConfig(
        mode=mode, n=n, mu=float(mu), nu=float(nu), kappa=None if kappa is None else float(kappa),
        lambda0=lam, theta0=theta, t0=t0, t1=t1, out_dt=out_dt, tol=tol, seed=seed,
        etas=etas, trials=trials, kappas=None if kappas is None else [float(k) for k in kappas],
    )


# output helpers


def _fmt(x):
    return "%.17g" % x


def write_trajectory_csv(path, times, states, c):
    """Columns t, lambda_1..n, theta_1..n, H, theta_hat_1..n."""
    states = np.asarray(states)
    n = states.shape[1] // 2
    header = ["t"] + [f"lambda_{a + 1}" for a in range(n)] + [f"theta_{a + 1}" for a in range(n)] + ["H"]
    header += [f"theta_hat_{a + 1}" for a in range(n)]
    lines = [",".join(header)]
    for t, y in zip(times, states):
        p = PhasePoint(y[:n], y[n:])
        row = [t, *y, hamiltonian(p, c), *lax_spectrum(build_bundle(p, c))]
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def write_json(path, data):
    Path(path).write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


# modes


def _times(cfg):
    return sample_times(cfg.t0, cfg.t1, cfg.out_dt)


def run_simulate(cfg, out):
    c = cfg.couplings()
    p0 = cfg.point()
    ts = _times(cfg)
    traj = evolve(p0, c, ts, tol=cfg.tol, diagnostics=True)
    write_trajectory_csv(out / "trajectory.csv", ts, np.hstack([traj.lam, traj.theta]), c)
    h0 = hamiltonian(p0, c)
    write_json(out / "simulate.json", {
        "energy_drift": float(np.max(np.abs(traj.energy - h0)) / abs(h0)),
        "theta_hat_drift": float(np.max(np.abs(traj.theta_hat - lax_spectrum(build_bundle(p0, c))))),
        "steps": traj.stats["steps"],
        "nfev": traj.stats["nfev"],
    })


def run_project(cfg, out):
    c = cfg.couplings()
    p0 = cfg.point()
    ts = _times(cfg)
    pts = solve_many(p0, c, ts)
    proj = np.array([q.as_vector() for q in pts])
    write_trajectory_csv(out / "projection.csv", ts, proj, c)
    integ = evolve(p0, c, ts, tol=min(cfg.tol, 1e-12))
    diff = np.abs(proj - integ)
    write_json(out / "cross_check.json", {
        "max_difference": float(np.max(diff)),
        "per_coordinate_max_difference": np.max(diff, axis=0).tolist(),
        "threshold": 1e-6,
        "pass": bool(np.max(diff) < 1e-6),
    })


def run_scatter(cfg, out):
    c = cfg.couplings()
    p0 = cfg.point()
    ts = _times(cfg)
    traj = evolve(p0, c, ts, tol=cfg.tol, diagnostics=True)
    write_trajectory_csv(out / "trajectory.csv", ts, np.hstack([traj.lam, traj.theta]), c)
    sd = scattering_data(p0, c)
    rep = verify_asymptotics(traj, sd)
    th_p, ph_p = tail_fit(traj.times, traj.lam, +1)
    th_m, ph_m = tail_fit(traj.times, traj.lam, -1)
    data = sd.as_dict()
    data.update({
        "tail_residuals": rep.tail_residuals.tolist(),
        "decay_rate": rep.decay_rate.tolist(),
        "fit_theta_plus": th_p.tolist(),
        "fit_lambda_plus": ph_p.tolist(),
        "fit_theta_minus": th_m.tolist(),
        "fit_lambda_minus": ph_m.tolist(),
    })
    write_json(out / "scattering.json", data)


def run_invariants(cfg, out):
    rep = invariant_report(cfg.point(), cfg.couplings())
    write_json(out / "invariants.json", rep.as_dict())


def verify_point(p, c):
    """Every pointwise identity with its residual, threshold and verdict."""
    n = p.n
    b = build_bundle(p, c)
    d = DoubledIndex.from_point(p)
    bb = build_b_bundle(p, c, b)
    C = np.block([[np.zeros((n, n)), np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    h1 = vd_hamiltonian(p, VanDiejenParams.two_parameter(c), 1)
    shift = 2.0 * math.cos(c.nu + (n - 1) * c.mu) * math.sin(n * c.mu) / math.sin(c.mu)
    r3 = lax_residual(p, c, 1e-3)
    r35 = lax_residual(p, c, 5e-4)
    checks = {
        "group_relation": (group_relation_residual(b), 1e-10),
        "hermitian": (float(np.max(np.abs(b.L - b.L.conj().T))), 1e-12),
        "commutation": (commutation_residual(b, d, c), 1e-10),
        "d_plus_y": (float(np.max(np.abs(bb.D + bb.Y - (b.L - lax_inverse(b.L)) / 2.0))), 1e-10),
        "b_antihermitian": (float(np.max(np.abs(bb.B + bb.B.conj().T))), 1e-12),
        "b_commutes_with_c": (float(np.max(np.abs(bb.B @ C - C @ bb.B))), 1e-12),
        "trace_vs_energy": (abs(float(np.trace(b.L).real) - 2.0 * hamiltonian(p, c)), 1e-10),
        "h1_vs_trace": (abs(h1 + shift - float(np.trace(b.L).real)), 1e-9),
        "lax_residual_h1e-4": (lax_residual(p, c, 1e-4), 1e-6),
    }
    report = {k: {"residual": v, "threshold": t, "pass": bool(v < t)} for k, (v, t) in checks.items()}
    ratio = r3 / r35 if r35 > 0 else float("inf")
    report["lax_convergence_ratio"] = {"value": ratio, "range": [3.5, 4.5], "pass": bool(3.5 <= ratio <= 4.5)}
    report["min_eigenvalue"] = {"value": float(np.min(np.linalg.eigvalsh(b.L))), "pass": bool(np.min(np.linalg.eigvalsh(b.L)) > 0)}
    return report


def run_verify(cfg, out):
    p0 = cfg.point()
    c = cfg.couplings()
    report = verify_point(p0, c)
    times = [t for t in (-5.0, -1.0, 1.0, 5.0)]
    proj = np.array([q.as_vector() for q in solve_many(p0, c, times)])
    integ = evolve(p0, c, times, tol=1e-12)
    diff = float(np.max(np.abs(proj - integ)))
    report["projection_vs_integrator"] = {"residual": diff, "threshold": 1e-6, "pass": bool(diff < 1e-6)}
    report["all_pass"] = bool(all(v["pass"] for v in report.values() if isinstance(v, dict)))
    write_json(out / "verify.json", report)


def run_conjectures(cfg, out):
    c = cfg.couplings()
    kappas = cfg.kappas if cfg.kappas is not None else ([cfg.kappa] if cfg.kappa is not None else [0.0, 0.9])
    rep = conjecture_report(c, cfg.etas, cfg.trials, seed=cfg.seed, n=cfg.n, kappas=kappas)
    data = rep.as_dict()
    write_json(out / "conjectures.json", data)
    for v in rep.violations:
        print(f"conjecture violation candidate: kind={v.kind} seed={v.seed} eta={v.eta} kappa={v.kappa}", file=sys.stderr)


RUNNERS = {
    "simulate": run_simulate,
    "project": run_project,
    "scatter": run_scatter,
    "invariants": run_invariants,
    "verify": run_verify,
    "conjectures": run_conjectures,
}


def run(cfg, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        RUNNERS[cfg.mode](cfg, out)
    except (NumericalFailure, PoleError, FloatingPointError, np.linalg.LinAlgError) as exc:
        write_json(out / "failure.json", {"mode": cfg.mode, "error": type(exc).__name__, "message": str(exc), "seed": cfg.seed})
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def make_parser():
    ap = argparse.ArgumentParser(prog="vdlab", description="Hyperbolic van Diejen system laboratory")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", required=True, help="TOML (or .json) experiment file")
    ap.add_argument("--out", default="vdlab_out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--t0", type=float)
    ap.add_argument("--t1", type=float)
    ap.add_argument("--out-dt", dest="out_dt", type=float)
    ap.add_argument("--tol", type=float)
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        raw = load_config_file(args.config)
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    overrides = {"seed": args.seed, "t0": args.t0, "t1": args.t1, "out_dt": args.out_dt, "tol": args.tol}
    try:
        cfg = build_config(raw, args.mode, overrides)
    except ConfigError as exc:
        print("invalid configuration:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "violations.json", {"violations": exc.violations})
        except OSError:
            pass
        return EXIT_INVALID
    return run(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
