"""Hamiltonian flow of the van Diejen system and the second matrix of its Lax pair."""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853, RK45

from . import _hyp
from .errors import DomainExit, StepFailure
from .laxcore import (
    PhasePoint,
    build_bundle,
    involution_matrix,
    lax_inverse,
    lax_spectrum,
)

COLLISION_GAP = 1e-8

_METHODS = {"RK45": RK45, "DOP853": DOP853}


def _pair_matrices(lam):
    diff = lam[:, None] - lam[None, :]
    summ = lam[:, None] + lam[None, :]
    return diff, summ


def amplitudes(lam, mu, nu):
    """Vectorised u_a for a = 1..n."""
    lam = np.asarray(lam, dtype=float)
    diff, summ = _pair_matrices(lam)
    s2m = np.sin(mu) ** 2
    off = ~np.eye(lam.size, dtype=bool)
    fac = np.ones_like(diff)
    fac[off] = _hyp.amplitude_factor(diff[off], s2m) * _hyp.amplitude_factor(summ[off], s2m)
    return _hyp.amplitude_factor(2.0 * lam, np.sin(nu) ** 2) * np.prod(fac, axis=1)


def log_amplitude_jacobian(lam, mu, nu):
    """G[c, a] = d ln(u_c) / d lambda_a."""
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    diff, summ = _pair_matrices(lam)
    s2m = np.sin(mu) ** 2
    off = ~np.eye(n, dtype=bool)
    pair = np.zeros((n, n))
    # pair[a, c] = T(lam_a - lam_c) + T(lam_a + lam_c)
    pair[off] = _hyp.log_amplitude_slope(diff[off], s2m) + _hyp.log_amplitude_slope(summ[off], s2m)
    G = -pair.T.copy()
    np.fill_diagonal(G, -2.0 * _hyp.log_amplitude_slope(2.0 * lam, np.sin(nu) ** 2) - pair.sum(axis=1))
    return G


def hamiltonian(p, c):
    return float(np.sum(np.cosh(p.theta) * amplitudes(p.lam, c.mu, c.nu)))


def _rhs_arrays(lam, theta, mu, nu):
    u = amplitudes(lam, mu, nu)
    G = log_amplitude_jacobian(lam, mu, nu)
    lam_dot = np.sinh(theta) * u
    theta_dot = -(np.cosh(theta) * u) @ G
    return lam_dot, theta_dot


def equations_of_motion(p, c):
    """Return (d lambda/dt, d theta/dt) at ``p``."""
    return _rhs_arrays(p.lam, p.theta, c.mu, c.nu)


def f_log_derivative(p, c):
    """phi_k with d F_k / dt = phi_k F_k along the Hamiltonian flow."""
    lam, theta = p.lam, p.theta
    n = lam.size
    mu, nu = c.mu, c.nu
    u = amplitudes(lam, mu, nu)
    Lam = np.concatenate([lam, -lam])
    Theta = np.concatenate([theta, -theta])
    uu = np.concatenate([u, u])
    s2m, s2n = np.sin(mu) ** 2, np.sin(nu) ** 2
    phi = np.empty(2 * n, dtype=complex)
    for a in range(n):
        js = np.array([j for j in range(2 * n) if j != a and j != n + a], dtype=int)
        x = lam[a] - Lam[js]
        top = np.exp(-theta[a]) * u[a] * _hyp.log_amplitude_slope(2.0 * lam[a], s2n)
        top += 0.5 * np.sum((np.exp(-theta[a]) * u[a] + np.exp(Theta[js]) * uu[js]) * _hyp.log_amplitude_slope(x, s2m))
        phi[a] = top
        bottom = -top - 2j * np.sin(nu) * np.sinh(theta[a]) * u[a] * _hyp.inv_sinh_prod_reflected(2.0 * lam[a], nu)
        bottom -= np.sum(
            1j * np.sin(mu) * (np.sinh(theta[a]) * u[a] - np.sinh(Theta[js]) * uu[js]) * _hyp.inv_sinh_prod_reflected(x, mu)
        )
        phi[n + a] = bottom
    return phi


@dataclass(frozen=True, eq=False)
class BMatrixBundle:
    D: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    Bm: np.ndarray
    Bperp: np.ndarray
    B: np.ndarray


def build_b_bundle(p, c, bundle=None):
    b = build_bundle(p, c) if bundle is None else bundle
    n = p.n
    N = 2 * n
    Lam = np.concatenate([p.lam, -p.lam])
    half = (b.L - lax_inverse(b.L)) / 2.0
    D = np.diag(np.real(np.diag(half)))
    Y = half - np.diag(np.diag(half))
    diff = Lam[:, None] - Lam[None, :]
    off = ~np.eye(N, dtype=bool)
    inv_sh = np.zeros((N, N))
    cth = np.zeros((N, N))
    inv_sh[off] = np.real(_hyp.inv_sinh_shift(diff[off], 0.0))
    cth[off] = _hyp.coth(diff[off])
    Z = Y * inv_sh
    Bperp = -cth * Y
    M = 1j * np.imag((Z @ b.F)[:n]) / np.real(b.F[:n])
    Bm = np.diag(np.concatenate([M, M]))
    return BMatrixBundle(D=D, Y=Y, Z=Z, Bm=Bm, Bperp=Bperp, B=Bm + Bperp)


@dataclass
class Trajectory:
    """Samples of an integrated trajectory.

    ``lam`` and ``theta`` have shape (len(times), n).  ``energy`` and
    ``theta_hat`` are evaluated at every sample.
    """

    times: np.ndarray
    lam: np.ndarray
    theta: np.ndarray
    energy: np.ndarray
    theta_hat: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def points(self):
        return [PhasePoint(l, t) for l, t in zip(self.lam, self.theta)]

    def point(self, k):
        return PhasePoint(self.lam[k], self.theta[k])

    @property
    def n(self):
        return self.lam.shape[1]


def sample_times(t0, t1, out_dt):
    """Grid t0, t0 + out_dt, ... that always ends exactly at t1."""
    if out_dt <= 0:
        raise ValueError("out_dt must be positive")
    span = t1 - t0
    k = int(np.floor(span / out_dt + 1e-9))
    ts = t0 + out_dt * np.arange(k + 1)
    if t1 - ts[-1] > 1e-9 * max(1.0, abs(out_dt)):
        ts = np.append(ts, t1)
    else:
        ts[-1] = t1
    return ts


def _check_chamber(lam, t):
    if lam[-1] <= 0 or np.any(np.diff(lam) >= 0) or not np.all(np.isfinite(lam)):
        raise DomainExit(f"chamber ordering violated at t={t!r}: lambda={lam.tolist()}")


def _min_gap(lam):
    return min(np.min(-np.diff(lam)) if lam.size > 1 else np.inf, 2.0 * lam[-1])


def _propagate(y0, c, t_start, ts, tol, method="RK45", max_step=np.inf):
    """Integrate from t_start through the monotone sample times ``ts``.

    Returns the states at ``ts`` (shape (len(ts), 2n)) and step statistics.
    """
    n = y0.size // 2
    mu, nu = c.mu, c.nu

    def rhs(t, y):
        ld, td = _rhs_arrays(y[:n], y[n:], mu, nu)
        return np.concatenate([ld, td])

    out = np.empty((len(ts), y0.size))
    stats = {"steps": 0, "nfev": 0, "restarts": 0}
    k = 0
    while k < len(ts) and ts[k] == t_start:
        out[k] = y0
        k += 1
    if k == len(ts):
        return out, stats
    t_end = ts[-1]
    solver = _METHODS[method](rhs, t_start, y0, t_end, rtol=tol, atol=tol, max_step=max_step)
    direction = np.sign(t_end - t_start)
    while k < len(ts):
        msg = solver.step()
        stats["steps"] += 1
        if solver.status == "failed":
            raise StepFailure(f"step size underflow near t={solver.t!r}: {msg}")
        _check_chamber(solver.y[:n], solver.t)
        dense = None
        while k < len(ts) and direction * (ts[k] - solver.t) <= 0:
            if dense is None:
                dense = solver.dense_output()
            out[k] = solver.y if ts[k] == solver.t else dense(ts[k])
            k += 1
        if k < len(ts) and _min_gap(solver.y[:n]) < COLLISION_GAP:
            warnings.warn(f"near collision at t={solver.t!r}, shrinking the step", RuntimeWarning)
            stats["restarts"] += 1
            stats["nfev"] += solver.nfev
            h = max(abs(solver.step_size or 0.0) * 0.1, 1e-12)
            solver = _METHODS[method](rhs, solver.t, solver.y.copy(), t_end, rtol=tol, atol=tol, max_step=h)
    stats["nfev"] += solver.nfev
    return out, stats


def _diagnostics(lam, theta, c):
    energy = np.array([np.sum(np.cosh(th) * amplitudes(l, c.mu, c.nu)) for l, th in zip(lam, theta)])
    theta_hat = np.array([lax_spectrum(build_bundle(PhasePoint(l, th), c)) for l, th in zip(lam, theta)])
    return energy, theta_hat


def _validate_tol(tol):
    if not (1e-13 <= tol <= 1e-4):
        raise ValueError(f"tol must lie in [1e-13, 1e-4], got {tol!r}")


def integrate(p0, c, t0, t1, out_dt, tol=1e-10, method="RK45"):
    """Adaptive embedded Runge-Kutta integration sampled every ``out_dt``.

    ``p0`` is the state at ``t0``.  ``method`` names a scipy stepper,
    ``"RK45"`` (Dormand-Prince 5(4)) by default.
    """
    if not t0 < t1:
        raise ValueError("t0 must be smaller than t1")
    _validate_tol(tol)
    ts = sample_times(t0, t1, out_dt)
    ys, stats = _propagate(p0.as_vector(), c, t0, ts, tol, method)
    return _make_trajectory(ts, ys, c, stats)


def _make_trajectory(ts, ys, c, stats):
    n = ys.shape[1] // 2
    lam, theta = ys[:, :n], ys[:, n:]
    for t, l in zip(ts, lam):
        _check_chamber(l, t)
    energy, theta_hat = _diagnostics(lam, theta, c)
    return Trajectory(times=np.asarray(ts, dtype=float), lam=lam, theta=theta, energy=energy, theta_hat=theta_hat, stats=stats)


def evolve(p0, c, times, tol=1e-10, method="RK45", diagnostics=False):
    """States at arbitrary ``times`` (either sign) for an initial point given at t = 0.

    Returns an array of shape (len(times), 2n), or a Trajectory when
    ``diagnostics`` is set.
    """
    _validate_tol(tol)
    times = np.asarray(times, dtype=float)
    y0 = p0.as_vector()
    out = np.empty((times.size, y0.size))
    stats = {"steps": 0, "nfev": 0, "restarts": 0}
    fwd = np.where(times >= 0)[0]
    bwd = np.where(times < 0)[0]
    for idx, key in ((fwd, np.argsort(times[fwd], kind="stable")), (bwd, np.argsort(-times[bwd], kind="stable"))):
        if idx.size == 0:
            continue
        order = idx[key]
        ys, st = _propagate(y0, c, 0.0, times[order], tol, method)
        out[order] = ys
        for k in stats:
            stats[k] += st[k]
    if diagnostics:
        return _make_trajectory(times, out, c, stats)
    return out


def lax_residual(p, c, h, tol=None, method="RK45"):
    """Max-norm of the central difference of L along the flow minus [L, B].

    The neighbouring states at +-h come from the adaptive integrator run at
    tolerance ``max(h**3, 1e-13)``; the residual is O(h**2).
    """
    if not (1e-7 <= h <= 1e-3):
        raise ValueError(f"h must lie in [1e-7, 1e-3], got {h!r}")
    if tol is None:
        tol = max(h**3, 1e-13)
    ys = evolve(p, c, [h, -h], tol=tol, method=method)
    Lp = build_bundle(PhasePoint.from_vector(ys[0]), c).L
    Lm = build_bundle(PhasePoint.from_vector(ys[1]), c).L
    b = build_bundle(p, c)
    B = build_b_bundle(p, c, b).B
    fd = (Lp - Lm) / (2.0 * h)
    return float(np.max(np.abs(fd - (b.L @ B - B @ b.L))))


def c_commutator_residual(bb, n):
    C = involution_matrix(n)
    return float(np.max(np.abs(bb.B @ C - C @ bb.B)))
