"""Asymptotic momenta and phases of scattering trajectories.

As t -> +-inf every particle moves freely,

    lambda_a(t) ~ t sinh(theta_a^{+-}) + lambda_a^{+-},

with theta^+ = 2 theta_hat read off the Lax spectrum and theta^- = -theta^+.
The phases come from leading principal minors of e^{2 Lambda} written in an
eigenbasis of L ordered along the direction of time.
"""

from dataclasses import dataclass

import numpy as np

from .errors import MinorNonPositive
from .laxcore import build_bundle, lax_spectrum


@dataclass(frozen=True, eq=False)
class ScatteringData:
    theta_plus: np.ndarray
    lambda_plus: np.ndarray
    theta_minus: np.ndarray
    lambda_minus: np.ndarray

    def asymptote(self, t, side=+1):
        """Free motion t sinh(theta^{+-}) + lambda^{+-} on the requested side."""
        if side > 0:
            return t * np.sinh(self.theta_plus) + self.lambda_plus
        return t * np.sinh(self.theta_minus) + self.lambda_minus

    def as_dict(self):
        return {
            "theta_plus": self.theta_plus.tolist(),
            "lambda_plus": self.lambda_plus.tolist(),
            "theta_minus": self.theta_minus.tolist(),
            "lambda_minus": self.lambda_minus.tolist(),
        }


def asymptotic_momenta(p, c):
    return 2.0 * lax_spectrum(build_bundle(p, c))


def _phases_from_minors(lam, vecs):
    """log of the Cholesky diagonal of V* e^{2 Lambda} V.

    R_aa**2 = m_a / m_{a-1} for the leading principal minors m_a, so this is
    half the log of consecutive minor quotients.
    """
    weights = np.exp(2.0 * np.concatenate([lam, -lam]))
    block = (vecs.conj().T * weights) @ vecs
    block = (block + block.conj().T) / 2.0
    try:
        R = np.linalg.cholesky(block)
    except np.linalg.LinAlgError as exc:
        raise MinorNonPositive(f"leading principal minor is not positive: {exc}") from exc
    return np.log(np.real(np.diag(R)))


def leading_minors(M):
    """Leading principal minors m_1 .. m_k of a square matrix (determinants, for testing)."""
    return np.array([np.real(np.linalg.det(M[: a + 1, : a + 1])) for a in range(M.shape[0])])


def asymptotic_phases(p, c, side=+1):
    """lambda^+ (side=+1) or lambda^- (side=-1) from the Lax eigenvectors at p.

    Accurate while p lies in the interaction region or on the requested side.
    Deep in the opposite asymptotic regime the phase depends on eigenvector
    components of relative size ~exp(-2 lambda) and double precision loses it.
    """
    n = p.n
    b = build_bundle(p, c)
    L = (b.L + b.L.conj().T) / 2.0
    w, V = np.linalg.eigh(L)
    order = np.argsort(-w) if side > 0 else np.argsort(w)
    lax_spectrum(b)
    return _phases_from_minors(p.lam, V[:, order[:n]])


def scattering_data(p, c):
    theta_plus = asymptotic_momenta(p, c)
    return ScatteringData(
        theta_plus=theta_plus,
        lambda_plus=asymptotic_phases(p, c, +1),
        theta_minus=-theta_plus,
        lambda_minus=asymptotic_phases(p, c, -1),
    )


def tail_fit(times, lam, side=+1, fraction=0.25):
    """Least squares of lambda_a(t) against (t, 1) over the outer ``fraction`` of the window.

    Returns (theta, phase): the asymptotic rapidities arcsinh(slope) and the
    intercepts.
    """
    times = np.asarray(times, dtype=float)
    lam = np.asarray(lam, dtype=float)
    m = times.size
    k = max(2, int(np.ceil(fraction * m)))
    sel = slice(m - k, m) if side > 0 else slice(0, k)
    X = np.column_stack([times[sel], np.ones(k)])
    coef, *_ = np.linalg.lstsq(X, lam[sel], rcond=None)
    return np.arcsinh(coef[0]), coef[1]


@dataclass
class AsymptoticsReport:
    tail_residuals: np.ndarray
    decay_rate: np.ndarray
    end_deviation_plus: np.ndarray
    end_deviation_minus: np.ndarray
    theta_end_plus: np.ndarray
    theta_end_minus: np.ndarray


def _decay_rate(t, dev, scale):
    # slope of -log(deviation) against |t|, skipping points at the integrator noise floor
    keep = dev > 1e-8 * np.maximum(1.0, np.abs(scale))
    if keep.sum() < 3:
        return np.inf
    slope = np.polyfit(np.abs(t[keep]), np.log(dev[keep]), 1)[0]
    return -slope


def verify_asymptotics(traj, sd, fraction=0.25):
    """Deviations of a trajectory from its predicted free asymptotes.

    ``tail_residuals`` is, per particle, the larger of the deviations at the
    two ends of the window; ``decay_rate`` is the fitted exponent of the
    deviation over the positive-time tail.
    """
    t = np.asarray(traj.times)
    m = t.size
    k = max(3, int(np.ceil(fraction * m)))
    n = traj.lam.shape[1]
    dev_p = np.abs(traj.lam - sd.asymptote(t[:, None], +1))
    dev_m = np.abs(traj.lam - sd.asymptote(t[:, None], -1))
    rates = np.empty(n)
    for a in range(n):
        rates[a] = _decay_rate(t[m - k :], dev_p[m - k :, a], traj.lam[m - k :, a])
    end_p = dev_p[-1] if t[-1] > 0 else np.full(n, np.nan)
    end_m = dev_m[0] if t[0] < 0 else np.full(n, np.nan)
    return AsymptoticsReport(
        tail_residuals=np.fmax(end_p, end_m),
        decay_rate=rates,
        end_deviation_plus=end_p,
        end_deviation_minus=end_m,
        theta_end_plus=traj.theta[-1],
        theta_end_minus=traj.theta[0],
    )
