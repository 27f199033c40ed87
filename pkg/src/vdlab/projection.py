"""Solve the flow algebraically by diagonalising an explicit matrix geodesic.

The positions at time t are read off the spectrum of

    A(t) = e^{Lambda0} exp(t (L0 - L0^{-1})) e^{Lambda0},

whose eigenvalues are exp(+-2 lambda_a(t)).  The eigenvalues of A(t) span
exp(-2 lambda_1) .. exp(2 lambda_1), far beyond what a double precision
eigensolver resolves once the particles separate, so the spectral part runs
in mpmath at a working precision chosen from that dynamic range.
"""

import math

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import _rhs_arrays, amplitudes, build_b_bundle, sample_times
from .errors import DegenerateSpectrum, EigensolveFailure, StepFailure
from .laxcore import PhasePoint, build_bundle

PAIRING_TOL = 1e-8
GUARD_DIGITS = 30


def working_digits(lam0, theta_hat, t):
    """Decimal digits needed to resolve the spectrum of A(t) plus guard digits."""
    spread = 2.0 * float(np.max(lam0)) + 2.0 * abs(t) * 2.0 * math.sinh(2.0 * float(np.max(theta_hat)))
    return GUARD_DIGITS + int(math.ceil(2.0 * spread / math.log(10.0)))


def _to_mp(M):
    M = np.asarray(M)
    out = mpmath.matrix(M.shape[0], M.shape[1])
    for i in range(M.shape[0]):
        for j in range(M.shape[1]):
            out[i, j] = mpmath.mpc(float(M[i, j].real), float(M[i, j].imag))
    return out


class GeodesicFlow:
    """Spectral data of L0 prepared once, then evaluated at any time.

    ``L0`` is diagonalised in high precision; since L0^{-1} = C L0 C is the
    true inverse, L0 - L0^{-1} shares its eigenvectors and has eigenvalues
    2 sinh(2 theta_hat) with the corresponding signs.
    """

    def __init__(self, p0, c, max_abs_t=0.0, dps=None):
        self.p0 = p0
        self.c = c
        L0 = build_bundle(p0, c).L
        L0 = (L0 + L0.conj().T) / 2.0
        w = np.linalg.eigvalsh(L0)
        theta_hat_est = float(np.max(np.abs(np.log(w)))) / 2.0
        self.dps = dps if dps is not None else working_digits(p0.lam, [theta_hat_est], max_abs_t)
        self._max_t = max_abs_t
        with mpmath.workdps(self.dps):
            Lm = _to_mp(L0)
            try:
                ev, V = mpmath.eighe(Lm)
            except Exception as exc:  # pragma: no cover - mpmath raises plain errors
                raise EigensolveFailure(f"eigensolve of L0 failed: {exc}") from exc
            self._gen = [e - 1 / e for e in ev]
            self._V = V
            self._half = [mpmath.exp(mpmath.mpf(float(x))) for x in np.concatenate([p0.lam, -p0.lam])]

    def _matrices(self, t):
        N = len(self._gen)
        t = mpmath.mpf(float(t))
        V = self._V
        E = self._half
        g = [mpmath.exp(t * x) for x in self._gen]
        gd = [x * y for x, y in zip(self._gen, g)]
        A = mpmath.matrix(N, N)
        Ad = mpmath.matrix(N, N)
        for i in range(N):
            for j in range(i, N):
                s = mpmath.mpc(0)
                sd = mpmath.mpc(0)
                for k in range(N):
                    q = V[i, k] * mpmath.conj(V[j, k])
                    s += q * g[k]
                    sd += q * gd[k]
                A[i, j] = E[i] * s * E[j]
                Ad[i, j] = E[i] * sd * E[j]
                if i != j:
                    A[j, i] = mpmath.conj(A[i, j])
                    Ad[j, i] = mpmath.conj(Ad[i, j])
        return A, Ad

    def at(self, t):
        """PhasePoint at time ``t``."""
        n = self.p0.n
        N = 2 * n
        dps = max(self.dps, working_digits(self.p0.lam, [0.0], 0.0))
        if abs(t) > self._max_t:
            dps = max(dps, self._digits_for(t))
        with mpmath.workdps(dps):
            A, Ad = self._matrices(t)
            try:
                ev, W = mpmath.eighe(A)
            except Exception as exc:  # pragma: no cover
                raise EigensolveFailure(f"eigensolve of A(t) failed at t={t!r}: {exc}") from exc
            order = sorted(range(N), key=lambda k: ev[k], reverse=True)
            logs = [mpmath.log(ev[k]) for k in order]
            if min(ev) <= 0:
                raise DegenerateSpectrum(f"A({t!r}) is not positive definite")
            pairing = max(abs(logs[k] + logs[N - 1 - k]) for k in range(n))
            scale = max(1, max(abs(x) for x in logs))
            if pairing > PAIRING_TOL * scale:
                raise DegenerateSpectrum(f"eigenvalues of A({t!r}) do not pair reciprocally (residual {float(pairing):.3e})")
            lam = np.array([float((logs[k] - logs[N - 1 - k]) / 4) for k in range(n)])
            lam_dot = np.empty(n)
            for a in range(n):
                k = order[a]
                v = W[:, k]
                num = mpmath.mpf(0)
                for i in range(N):
                    row = mpmath.mpc(0)
                    for j in range(N):
                        row += Ad[i, j] * v[j]
                    num += mpmath.re(mpmath.conj(v[i]) * row)
                nrm = sum(abs(v[i]) ** 2 for i in range(N))
                lam_dot[a] = float(num / (2 * ev[k] * nrm))
        u = amplitudes(lam, self.c.mu, self.c.nu)
        return PhasePoint(lam, np.arcsinh(lam_dot / u))

    def _digits_for(self, t):
        theta_hat = max(float(mpmath.asinh(x / 2)) for x in self._gen) / 2.0
        return working_digits(self.p0.lam, [theta_hat], t)


def solve_at(p0, c, t):
    """State at time ``t`` of the trajectory through ``p0`` at time 0."""
    return GeodesicFlow(p0, c, max_abs_t=abs(t)).at(t)


def solve_many(p0, c, times):
    times = np.asarray(times, dtype=float)
    flow = GeodesicFlow(p0, c, max_abs_t=float(np.max(np.abs(times))) if times.size else 0.0)
    return [flow.at(t) for t in times]


def geodesic_matrix(p0, c, t):
    """A(t) in double precision via the Hermitian eigendecomposition of L0 - L0^{-1}."""
    L0 = build_bundle(p0, c).L
    L0 = (L0 + L0.conj().T) / 2.0
    w, V = np.linalg.eigh(L0)
    gen = w - 1.0 / w
    e = np.exp(np.concatenate([p0.lam, -p0.lam]))
    return (e[:, None] * (V * np.exp(t * gen)) @ V.conj().T) * e[None, :]


def geodesic_check(p0, c, t1, tol=1e-10, out_dt=None, full=False, method="DOP853"):
    """Co-integrate the flow and the frame k' = k (Bm - Z) and compare with A(t).

    Returns max over samples of ||k e^{2 Lambda} k^{-1} - A(t)|| / ||A(t)|| in the
    max-norm.  With ``full`` also returns the unitarity and C-preservation
    residuals of k.
    """
    n = p0.n
    N = 2 * n
    mu, nu = c.mu, c.nu
    if t1 == 0:
        return (0.0, 0.0, 0.0) if full else 0.0

    def rhs(t, y):
        lam, theta = y[:n], y[n : 2 * n]
        k = (y[2 * n : 2 * n + N * N] + 1j * y[2 * n + N * N :]).reshape(N, N)
        ld, td = _rhs_arrays(lam, theta, mu, nu)
        bb = build_b_bundle(PhasePoint(lam, theta), c)
        kd = k @ (bb.Bm - bb.Z)
        return np.concatenate([ld, td, kd.real.ravel(), kd.imag.ravel()])

    k0 = np.eye(N, dtype=complex)
    y0 = np.concatenate([p0.as_vector(), k0.real.ravel(), k0.imag.ravel()])
    if out_dt is None:
        out_dt = abs(t1) / 10.0
    ts = sample_times(0.0, abs(t1), out_dt) * np.sign(t1)
    sol = solve_ivp(rhs, (0.0, t1), y0, method=method, t_eval=ts, rtol=tol, atol=tol * 1e-3)
    if sol.status != 0:
        raise StepFailure(sol.message)
    C = np.block([[np.zeros((n, n)), np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    worst = unit = cres = 0.0
    for j, t in enumerate(sol.t):
        y = sol.y[:, j]
        lam = y[:n]
        k = (y[2 * n : 2 * n + N * N] + 1j * y[2 * n + N * N :]).reshape(N, N)
        e2 = np.exp(2.0 * np.concatenate([lam, -lam]))
        lhs = (k * e2) @ np.linalg.inv(k)
        A = geodesic_matrix(p0, c, t)
        worst = max(worst, float(np.max(np.abs(lhs - A)) / np.max(np.abs(A))))
        unit = max(unit, float(np.max(np.abs(k.conj().T @ k - np.eye(N)))))
        cres = max(cres, float(np.max(np.abs(k @ C @ k.conj().T - C))))
    if full:
        return worst, unit, cres
    return worst
