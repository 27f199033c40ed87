"""Lax matrix of the hyperbolic van Diejen system and its algebraic identities.

A phase point carries ``n`` positions ``lam`` in the open chamber
``lam[0] > ... > lam[n-1] > 0`` and ``n`` rapidities ``theta``.  Everything
else lives on the doubled index set of size ``N = 2n`` where the second half
of each tuple is the negative of the first half.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _hyp
from .errors import DomainError, InvalidParameters, SpectrumDegenerate

SIN_EPS = 1e-12
SPECTRUM_GAP_TOL = 1e-10
PAIRING_TOL = 1e-9


@dataclass(frozen=True)
class CouplingParams:
    """Coupling constants ``mu``, ``nu`` and the optional third coupling ``kappa``."""

    mu: float
    nu: float
    kappa: Optional[float] = None

    def __post_init__(self):
        v = self.violations()
        if v:
            raise InvalidParameters(v)

    def violations(self):
        out = []
        for name, val in (("mu", self.mu), ("nu", self.nu), ("kappa", self.kappa)):
            if val is not None and not np.isfinite(val):
                out.append(f"{name} must be finite (got {val!r})")
        if out:
            return out
        if abs(np.sin(self.mu)) < SIN_EPS:
            out.append(f"sin(mu) must be nonzero (mu={float(self.mu)!r})")
        if abs(np.sin(self.nu)) < SIN_EPS:
            out.append(f"sin(nu) must be nonzero (nu={float(self.nu)!r})")
        if abs(np.sin(2 * self.mu - self.nu)) < SIN_EPS:
            out.append(f"sin(2*mu - nu) must be nonzero (mu={float(self.mu)!r}, nu={float(self.nu)!r})")
        return out

    def with_kappa(self, kappa):
        return CouplingParams(self.mu, self.nu, kappa)


def phase_point_violations(lam, theta):
    lam = np.asarray(lam, dtype=float)
    theta = np.asarray(theta, dtype=float)
    out = []
    if lam.ndim != 1 or theta.ndim != 1:
        return ["lambda and theta must be one-dimensional"]
    if lam.size == 0:
        return ["at least one particle is required"]
    if lam.size != theta.size:
        return [f"lambda has {lam.size} entries but theta has {theta.size}"]
    if not np.all(np.isfinite(lam)) or not np.all(np.isfinite(theta)):
        return ["lambda and theta must be finite"]
    for a in range(lam.size - 1):
        if not lam[a] > lam[a + 1]:
            out.append(f"lambda not strictly decreasing at index {a}: {float(lam[a])!r} <= {float(lam[a + 1])!r}")
    if not lam[-1] > 0:
        out.append(f"smallest lambda must be positive (got {float(lam[-1])!r})")
    return out


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """Positions ``lam`` and rapidities ``theta`` of ``n`` particles."""

    lam: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float).reshape(-1)
        theta = np.array(self.theta, dtype=float).reshape(-1)
        v = phase_point_violations(lam, theta)
        if v:
            raise InvalidParameters(v)
        lam.flags.writeable = False
        theta.flags.writeable = False
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "theta", theta)

    @property
    def n(self):
        return self.lam.size

    def as_vector(self):
        return np.concatenate([self.lam, self.theta])

    @classmethod
    def from_vector(cls, y):
        y = np.asarray(y, dtype=float)
        n = y.size // 2
        return cls(y[:n], y[n:])

    def __repr__(self):
        return f"PhasePoint(lam={self.lam.tolist()}, theta={self.theta.tolist()})"


@dataclass(frozen=True, eq=False)
class DoubledIndex:
    """The tuples (lam, -lam) and (theta, -theta) of length N = 2n."""

    Lambda: np.ndarray
    Theta: np.ndarray

    @classmethod
    def from_point(cls, p):
        return cls(np.concatenate([p.lam, -p.lam]), np.concatenate([p.theta, -p.theta]))

    @property
    def N(self):
        return self.Lambda.size


@dataclass(frozen=True, eq=False)
class LaxBundle:
    z: np.ndarray
    u: np.ndarray
    F: np.ndarray
    L: np.ndarray

    @property
    def N(self):
        return self.L.shape[0]

    @property
    def n(self):
        return self.N // 2


def involution_matrix(n):
    """Block matrix [[0, I], [I, 0]] of size 2n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [eye, zero]])


def coupling_factors(lam, mu, nu):
    """The complex numbers z_j on the doubled index set.

    Returns an array of length 2n with ``z[n + a] == conj(z[a])``.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    Lam = np.concatenate([lam, -lam])
    z = -_hyp.shift_ratio(2.0 * Lam, nu)
    for j in range(2 * n):
        a = j % n
        others = np.delete(lam, a)
        if others.size:
            z[j] *= np.prod(_hyp.shift_ratio(Lam[j] - others, mu) * _hyp.shift_ratio(Lam[j] + others, mu))
    return z


def amplitudes(lam, mu, nu):
    """u_a = |z_a| for a = 1..n, built from real factors only."""
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    s2m = np.sin(mu) ** 2
    u = _hyp.amplitude_factor(2.0 * lam, np.sin(nu) ** 2)
    for a in range(n):
        others = np.delete(lam, a)
        if others.size:
            u[a] *= np.prod(_hyp.amplitude_factor(lam[a] - others, s2m) * _hyp.amplitude_factor(lam[a] + others, s2m))
    return u


def build_bundle(p, c):
    """Assemble z, u, F and the Lax matrix L at a phase point."""
    n = p.n
    z = coupling_factors(p.lam, c.mu, c.nu)
    u_half = amplitudes(p.lam, c.mu, c.nu)
    u = np.concatenate([u_half, u_half])
    F = np.empty(2 * n, dtype=complex)
    half = np.exp(p.theta / 2.0)
    F[:n] = half * np.sqrt(u_half)
    F[n:] = np.conj(z[:n]) / (half * np.sqrt(u_half))
    Lam = np.concatenate([p.lam, -p.lam])
    C = involution_matrix(n)
    num = 1j * np.sin(c.mu) * np.outer(F, np.conj(F)) + 1j * np.sin(c.mu - c.nu) * C
    L = num * _hyp.inv_sinh_shift(Lam[:, None] - Lam[None, :], c.mu)
    if not np.all(np.isfinite(L)):
        raise DomainError(f"non-finite Lax matrix entries at {p!r}")
    return LaxBundle(z=z, u=u, F=F, L=L)


def lax_inverse(L):
    """L^{-1} = C L C, a block swap of rows and columns."""
    n = L.shape[0] // 2
    perm = np.concatenate([np.arange(n, 2 * n), np.arange(n)])
    return L[np.ix_(perm, perm)]


def group_relation_residual(b):
    C = involution_matrix(b.n)
    return float(np.max(np.abs(b.L @ C @ b.L - C)))


def commutation_residual(b, d, c):
    """Max-norm residual of the exchange relation between e^Lambda and L."""
    n = b.n
    C = involution_matrix(n)
    # e^{Λ_k - Λ_l} would overflow for far-apart particles, so compare entrywise
    # after dividing by the larger exponential.
    diff = d.Lambda[:, None] - d.Lambda[None, :]
    rhs = 2j * np.sin(c.mu) * np.outer(b.F, np.conj(b.F)) + 2j * np.sin(c.mu - c.nu) * C
    lhs = np.exp(1j * c.mu + diff) * b.L - np.exp(-1j * c.mu - diff) * b.L
    return float(np.max(np.abs(lhs - rhs)))


def lax_spectrum(b):
    """Return theta_hat (descending, positive) with spectrum {exp(+-2 theta_hat)}."""
    n = b.n
    w = np.linalg.eigvalsh(b.L)[::-1]
    if w[-1] <= 0:
        raise SpectrumDegenerate(f"Lax matrix is not positive definite (min eigenvalue {w[-1]!r})")
    logs = np.log(w)
    pairing = np.max(np.abs(logs[:n] + logs[::-1][:n]))
    if pairing > PAIRING_TOL * max(1.0, np.max(np.abs(logs))):
        raise SpectrumDegenerate(f"eigenvalues do not pair reciprocally (residual {pairing:.3e})")
    theta_hat = (logs[:n] - logs[::-1][:n]) / 4.0
    if theta_hat[-1] < SPECTRUM_GAP_TOL or np.any(-np.diff(theta_hat) < SPECTRUM_GAP_TOL):
        raise SpectrumDegenerate(f"Lax spectrum is not simple: theta_hat={theta_hat.tolist()}")
    return theta_hat
