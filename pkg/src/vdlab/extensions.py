"""Conjectured generalisations of the Lax matrix.

Two constructions are tested numerically here: a Lax matrix depending on a
complex spectral parameter ``eta`` that reduces to L as real eta -> inf,
and a Lax matrix carrying a third coupling ``kappa``, obtained from L by a
particle-wise congruence.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment

from . import _hyp
from .dynamics import evolve
from .errors import DomainExit, PoleError, StepFailure
from .invariants import VanDiejenParams, bracket_matrix, vd_hamiltonian
from .laxcore import CouplingParams, PhasePoint, build_bundle, involution_matrix
from .sampling import random_point

POLE_TOL = 1e-14
# the kappa flow is stopped once a particle is this close to the wall or a neighbour
EXIT_GAP = 1e-2
CONVENTIONS = ("row-col", "col-row")


def phi(x, eta):
    """e^{x coth(eta)} (coth(x) - coth(eta))."""
    x = complex(x)
    eta = complex(eta)
    if abs(np.sinh(x)) < POLE_TOL or abs(np.sinh(eta)) < POLE_TOL:
        raise PoleError(f"phi has a pole at x={x!r}, eta={eta!r}")
    ce = 1.0 / np.tanh(eta)
    return np.exp(x * ce) * (1.0 / np.tanh(x) - ce)


def _phi_array(x, eta):
    ce = 1.0 / np.tanh(complex(eta))
    if abs(np.sinh(complex(eta))) < POLE_TOL or np.any(np.abs(np.sinh(x)) < POLE_TOL):
        raise PoleError(f"spectral Lax matrix hits a pole at eta={eta!r}")
    return np.exp(x * ce) * (1.0 / np.tanh(x) - ce)


@dataclass(frozen=True, eq=False)
class SpectralLax:
    eta: complex
    matrix: np.ndarray
    convention: str = "row-col"


def build_spectral_lax(p, c, eta, convention="row-col", bundle=None):
    """Spectral-parameter Lax matrix.

    ``convention`` selects the argument of Phi in entry (k, l):
    ``"row-col"`` uses i mu + Lambda_k - Lambda_l, ``"col-row"`` uses
    i mu + Lambda_l - Lambda_k.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    b = build_bundle(p, c) if bundle is None else bundle
    n = p.n
    Lam = np.concatenate([p.lam, -p.lam])
    diff = Lam[:, None] - Lam[None, :]
    if convention == "col-row":
        diff = -diff
    C = involution_matrix(n)
    num = 1j * np.sin(c.mu) * np.outer(b.F, np.conj(b.F)) + 1j * np.sin(c.mu - c.nu) * C
    return SpectralLax(eta=complex(eta), matrix=num * _phi_array(1j * c.mu + diff, eta), convention=convention)


def resolve_index_convention(c, seed=0, eta_large=50.0, eta_probe=1.0, n=2, t_probe=1.0):
    """Decide empirically which index order in Phi is intended.

    Returns a dict with, per convention, the distance to L at large real eta
    and the eigenvalue drift of the spectral matrix along a short trajectory.
    """
    rng = np.random.default_rng(seed)
    p = random_point(rng, n)
    L = build_bundle(p, c).L
    q = PhasePoint.from_vector(evolve(p, c, [t_probe], tol=1e-12)[0])
    out = {}
    for conv in CONVENTIONS:
        far = build_spectral_lax(p, c, eta_large, conv).matrix
        e0 = np.linalg.eigvals(build_spectral_lax(p, c, eta_probe, conv).matrix)
        e1 = np.linalg.eigvals(build_spectral_lax(q, c, eta_probe, conv).matrix)
        out[conv] = {"limit_distance": float(np.max(np.abs(far - L))), "eigenvalue_drift": matched_drift(e0, e1)}
    best = min(CONVENTIONS, key=lambda k: (out[k]["limit_distance"], out[k]["eigenvalue_drift"]))
    out["chosen"] = best
    return out


def match_eigenvalues(reference, values):
    """Reorder ``values`` to best match ``reference`` (minimum total distance)."""
    cost = np.abs(np.asarray(reference)[:, None] - np.asarray(values)[None, :])
    rows, cols = linear_sum_assignment(cost)
    out = np.empty_like(np.asarray(values))
    out[rows] = np.asarray(values)[cols]
    return out


def matched_drift(e0, e1):
    e1 = match_eigenvalues(e0, e1)
    return float(np.max(np.abs(e1 - e0) / np.maximum(1.0, np.abs(e0))))


# three-coupling Lax matrix


def alpha_beta(x, kappa, signed=True):
    """alpha(x) real and beta(x) purely imaginary with alpha**2 + beta**2 = 1.

    With ``signed`` the square root in beta carries the sign of sin(kappa);
    this agrees with the principal root for sin(kappa) > 0 and is the branch
    for which tr(Ltilde) matches van Diejen's H_1 for every kappa.
    """
    q = np.sin(kappa) ** 2 * _hyp.csch2(2.0 * np.asarray(x, dtype=float))
    s = np.sqrt(1.0 + q)
    alpha = np.sqrt((1.0 + s) / 2.0)
    # s - 1 without cancellation
    beta = 1j * np.sqrt(q / (1.0 + s) / 2.0)
    if signed and np.sin(kappa) < 0:
        beta = -beta
    return alpha, beta


@dataclass(frozen=True, eq=False)
class ThreeParamLax:
    h: np.ndarray
    h_inv: np.ndarray
    Ltilde: np.ndarray


def build_three_param_lax(p, c, bundle=None, signed=True):
    if c.kappa is None:
        raise ValueError("kappa is required for the three-coupling Lax matrix")
    b = build_bundle(p, c) if bundle is None else bundle
    alpha, beta = alpha_beta(p.lam, c.kappa, signed)
    A = np.diag(alpha.astype(complex))
    Bt = np.diag(beta)
    h = np.block([[A, Bt], [-Bt, A]])
    # per particle [[a, b], [-b, a]]^{-1} = [[a, -b], [b, a]] / (a^2 + b^2)
    det = alpha**2 + beta**2
    Ai = np.diag(alpha / det)
    Bi = np.diag(beta / det)
    h_inv = np.block([[Ai, -Bi], [Bi, Ai]])
    return ThreeParamLax(h=h, h_inv=h_inv, Ltilde=h_inv @ b.L @ h_inv)


def h1_kappa(p, c):
    """van Diejen's main Hamiltonian for couplings (mu, nu/2, nu/2, kappa/2, kappa/2), closed form."""
    b = build_bundle(p, c)
    n = p.n
    u = b.u[:n]
    z = b.z[:n]
    s = np.sqrt(1.0 + np.sin(c.kappa) ** 2 * _hyp.csch2(2.0 * p.lam))
    kin = 2.0 * np.sum(np.cosh(p.theta) * u * s)
    return float(kin + 2.0 * np.sum(np.real(z * _hyp.shift_ratio(2.0 * p.lam, c.kappa))))


def kappa_trace_shift(c, n):
    return 2.0 * np.cos(c.nu + c.kappa + (n - 1) * c.mu) * np.sin(n * c.mu) / np.sin(c.mu)


def kappa_hamiltonian(p, c):
    """tr(Ltilde) / 2, the generator of the kappa-deformed flow."""
    return float(np.real(np.trace(build_three_param_lax(p, c).Ltilde))) / 2.0


def _five_point_gradient(f, y, h):
    g = np.empty_like(y)
    steps = h * np.maximum(1.0, np.abs(y))
    for k in range(y.size):
        e = np.zeros_like(y)
        e[k] = steps[k]
        g[k] = (-f(y + 2 * e) + 8 * f(y + e) - 8 * f(y - e) + f(y - 2 * e)) / (12.0 * steps[k])
    return g


def kappa_flow_rhs(c, h=1e-3):
    """Right-hand side of Hamilton's equations for tr(Ltilde)/2 by finite differences."""
    def H(y):
        n = y.size // 2
        return kappa_hamiltonian(PhasePoint(y[:n], y[n:]), c)

    def rhs(t, y):
        n = y.size // 2
        g = _five_point_gradient(H, y, h)
        return np.concatenate([g[n:], -g[:n]])

    return rhs


def _kappa_solve(p0, c, times, tol, h):
    """DOP853 run stopped when a particle comes within EXIT_GAP of the wall or a neighbour.

    Returns (states at the sample times reached, exit time or None).
    """
    n = p0.n

    def near_wall(t, y):
        lam = y[:n]
        gaps = -np.diff(lam) if n > 1 else np.array([np.inf])
        return min(lam[-1], np.min(gaps)) - EXIT_GAP

    near_wall.terminal = True
    near_wall.direction = -1
    sol = solve_ivp(
        kappa_flow_rhs(c, h), (0.0, float(times.max())), p0.as_vector(), method="DOP853",
        t_eval=times, rtol=tol, atol=tol, events=near_wall,
    )
    if sol.status == -1:
        raise StepFailure(sol.message)
    t_exit = float(sol.t_events[0][0]) if sol.status == 1 else None
    # y is an empty list when the exit comes before the first sample
    return np.asarray(sol.y, dtype=float).reshape(2 * n, -1).T, t_exit


def kappa_evolve(p0, c, times, tol=1e-10, h=1e-3):
    """States of the kappa-deformed flow at ``times`` (t >= 0), as an array (len(times), 2n).

    Raises DomainExit when the flow reaches the chamber boundary first.
    """
    times = np.asarray(times, dtype=float)
    if c.kappa is None or abs(np.sin(c.kappa)) < 1e-15:
        return evolve(p0, CouplingParams(c.mu, c.nu), times, tol=tol)
    states, t_exit = _kappa_solve(p0, c, times, tol, h)
    if t_exit is not None:
        raise DomainExit(f"kappa-deformed flow reaches the chamber boundary at t={t_exit!r}")
    return states


# conjecture harness


@dataclass
class ConjectureCell:
    kind: str
    eta: object
    kappa: object
    seed: int
    n: int
    conservation_residual: float
    involution_residual: float
    passed: bool
    detail: dict

    @property
    def reason(self):
        if self.passed:
            return None
        if self.detail.get("domain_exit") is not None:
            return "domain_exit"
        return "residual"

    def as_dict(self):
        return {
            "kind": self.kind,
            "eta": _json_complex(self.eta),
            "kappa": self.kappa,
            "seed": self.seed,
            "n": self.n,
            "conservation_residual": self.conservation_residual,
            "involution_residual": self.involution_residual,
            "pass": self.passed,
            "detail": self.detail,
        }


def _json_complex(z):
    if z is None:
        return None
    z = complex(z)
    if z.imag == 0:
        return z.real
    return [z.real, z.imag]


def spectral_cell(c, eta, seed, n=2, t_max=2.0, samples=5, bracket_h=1e-4, tol=1e-6, convention="row-col"):
    """Conservation and involution residuals of the spectral-parameter matrix at one random point."""
    rng = np.random.default_rng(seed)
    p = random_point(rng, n)
    times = np.linspace(0.0, t_max, samples)[1:]
    states = evolve(p, c, times, tol=1e-12)
    e0 = np.linalg.eigvals(build_spectral_lax(p, c, eta, convention).matrix)
    cons = 0.0
    for y in states:
        e1 = np.linalg.eigvals(build_spectral_lax(PhasePoint.from_vector(y), c, eta, convention).matrix)
        cons = max(cons, matched_drift(e0, e1))

    def moduli(q):
        e = np.linalg.eigvals(build_spectral_lax(q, c, eta, convention).matrix)
        return np.abs(match_eigenvalues(e0, e))

    M = bracket_matrix(moduli, p, bracket_h)
    inv = float(np.max(np.abs(np.triu(M, 1))))
    return ConjectureCell(
        kind="spectral",
        eta=complex(eta),
        kappa=None,
        seed=int(seed),
        n=n,
        conservation_residual=cons,
        involution_residual=inv,
        passed=bool(cons < tol and inv < 10 * tol),
        detail={"lambda": p.lam.tolist(), "theta": p.theta.tolist(), "mu": c.mu, "nu": c.nu},
    )


def three_param_cell(c, seed, n=2, t_max=2.0, samples=5, bracket_h=1e-4, tol=1e-6):
    """Eigenvalue conservation of Ltilde under its own flow, plus conservation of H_1."""
    rng = np.random.default_rng(seed)
    p = random_point(rng, n)
    times = np.linspace(0.0, t_max, samples)[1:]
    t_exit = None
    if abs(np.sin(c.kappa)) < 1e-15:
        states = kappa_evolve(p, c, times)
    else:
        states, t_exit = _kappa_solve(p, c, times, 1e-10, 1e-3)
        if t_exit is not None:
            # the exit is reported; conservation is still measured inside the chamber
            times = np.linspace(0.0, 0.9 * t_exit, samples)[1:]
            states, _ = _kappa_solve(p, c, times, 1e-10, 1e-3)
    e0 = np.linalg.eigvalsh(build_three_param_lax(p, c).Ltilde)
    vp = VanDiejenParams.three_parameter(c)
    h0 = vd_hamiltonian(p, vp, 1)
    cons = 0.0
    hdrift = 0.0
    for y in states:
        q = PhasePoint.from_vector(y)
        e1 = np.linalg.eigvalsh(build_three_param_lax(q, c).Ltilde)
        cons = max(cons, float(np.max(np.abs(e1 - e0) / np.maximum(1.0, np.abs(e0)))))
        hdrift = max(hdrift, abs(vd_hamiltonian(q, vp, 1) - h0) / max(1.0, abs(h0)))
    if n >= 2:
        M = bracket_matrix(lambda q: np.linalg.eigvalsh(build_three_param_lax(q, c).Ltilde)[n:], p, bracket_h)
        inv = float(np.max(np.abs(np.triu(M, 1))))
    else:
        inv = 0.0
    return ConjectureCell(
        kind="three-coupling",
        eta=None,
        kappa=float(c.kappa),
        seed=int(seed),
        n=n,
        conservation_residual=cons,
        involution_residual=inv,
        passed=bool(cons < tol and hdrift < tol and inv < 10 * tol and t_exit is None),
        detail={
            "lambda": p.lam.tolist(), "theta": p.theta.tolist(), "mu": c.mu, "nu": c.nu,
            "h1_drift": hdrift, "domain_exit": t_exit, "t_last": float(times[-1]),
        },
    )


def worker_count():
    try:
        k = int(os.environ.get("VDLAB_THREADS", "1"))
    except ValueError:
        k = 1
    return max(1, k)


def run_cells(jobs, workers=None):
    """Evaluate zero-argument callables, merging results in job order."""
    workers = worker_count() if workers is None else workers
    if workers == 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: job(), jobs))


@dataclass
class ConjectureReport:
    cells: list
    convention: dict
    limit_distance: float

    @property
    def violations(self):
        return [cell for cell in self.cells if not cell.passed]

    def as_dict(self):
        return {
            "index_convention": self.convention,
            "limit_distance": self.limit_distance,
            "cells": [cell.as_dict() for cell in self.cells],
            "violations": [
                {"kind": v.kind, "seed": v.seed, "eta": _json_complex(v.eta), "kappa": v.kappa, "reason": v.reason}
                for v in self.violations
            ],
        }


def conjecture_report(c, etas, trials, seed=0, n=2, kappas=None, workers=None, t_max=2.0):
    """Run the conjecture harness over an (eta, trial) grid and kappa rows.

    Every cell carries its own reproduction seed derived from ``seed``.
    """
    conv = resolve_index_convention(c, seed=seed)
    rng = np.random.default_rng(seed)
    p = random_point(rng, n)
    limit = float(np.max(np.abs(build_spectral_lax(p, c, 50.0, conv["chosen"]).matrix - build_bundle(p, c).L)))
    seeds = np.random.SeedSequence(seed).generate_state(trials).tolist()
    jobs = []
    for eta in etas:
        for s in seeds:
            jobs.append(lambda eta=eta, s=s: spectral_cell(c, eta, s, n=n, t_max=t_max, convention=conv["chosen"]))
    if kappas is None:
        kappas = [] if c.kappa is None else [c.kappa]
    for kappa in kappas:
        ck = c.with_kappa(kappa)
        for s in seeds:
            jobs.append(lambda ck=ck, s=s: three_param_cell(ck, s, n=n, t_max=t_max))
    return ConjectureReport(cells=run_cells(jobs, workers), convention=conv, limit_distance=limit)
