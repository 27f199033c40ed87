"""Spectral invariants, van Diejen's commuting Hamiltonians and Poisson brackets."""

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import _hyp
from .laxcore import PhasePoint, build_bundle, lax_spectrum


@dataclass(frozen=True)
class VanDiejenParams:
    """Five couplings of the potentials v and w."""

    g: float
    g0: float
    g1: float
    g0p: float
    g1p: float

    @classmethod
    def two_parameter(cls, c):
        return cls(c.mu, c.nu / 2.0, c.nu / 2.0, 0.0, 0.0)

    @classmethod
    def three_parameter(cls, c):
        kappa = 0.0 if c.kappa is None else c.kappa
        return cls(c.mu, c.nu / 2.0, c.nu / 2.0, kappa / 2.0, kappa / 2.0)


def v_potential(x, vp):
    return _hyp.shift_ratio(x, vp.g)


def w_potential(x, vp):
    return (
        _hyp.shift_ratio(x, vp.g0)
        * _hyp.cosh_shift_ratio(x, vp.g1)
        * _hyp.shift_ratio(x, vp.g0p)
        * _hyp.cosh_shift_ratio(x, vp.g1p)
    )


def char_poly_coeffs(L, imag_tol=1e-9):
    """K_0 .. K_N with det(L - y) = sum_m K_{N-m} y^m.

    Built from the eigenvalues as signed elementary symmetric polynomials.
    """
    L = np.asarray(L)
    N = L.shape[0]
    if np.allclose(L, L.conj().T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(L)))):
        eigs = np.linalg.eigvalsh((L + L.conj().T) / 2.0)
    else:
        eigs = np.linalg.eigvals(L)
    # det(L - y) = (-1)^N prod(y - e_k); np.poly gives the monic coefficients
    K = np.asarray((-1) ** N * np.poly(eigs), dtype=complex)
    scale = max(1.0, float(np.max(np.abs(K))))
    if np.max(np.abs(K.imag)) > imag_tol * scale:
        raise ValueError(f"characteristic polynomial has complex coefficients ({np.max(np.abs(K.imag)):.3e})")
    return K.real


def _u_sum(lam, comp, size, vp):
    """U_{comp, size} for the index list ``comp`` (the complement of J)."""
    if size == 0:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for I in itertools.combinations(comp, size):
        rest = [k for k in comp if k not in I]
        for eps in itertools.product((1.0, -1.0), repeat=size):
            x = np.array(eps) * lam[list(I)]
            term = np.prod(w_potential(x, vp))
            for i in range(size):
                for i2 in range(i + 1, size):
                    term *= abs(v_potential(x[i] + x[i2], vp)) ** 2
            if rest:
                r = lam[rest]
                for i in range(size):
                    term *= np.prod(v_potential(x[i] + r, vp) * v_potential(x[i] - r, vp))
            total += term
    return (-1) ** size * total


def vd_hamiltonian(p, vp, l):
    """van Diejen's l-th commuting Hamiltonian H_l (H_0 = 1)."""
    n = p.n
    if not 0 <= l <= n:
        raise ValueError(f"l must lie in 0..{n}")
    if l == 0:
        return 1.0
    lam, theta = p.lam, p.theta
    total = 0.0 + 0.0j
    idx = list(range(n))
    for size in range(l + 1):
        for J in itertools.combinations(idx, size):
            comp = [k for k in idx if k not in J]
            U = _u_sum(lam, comp, l - size, vp)
            if size == 0:
                total += U
                continue
            for eps in itertools.product((1.0, -1.0), repeat=size):
                x = np.array(eps) * lam[list(J)]
                V = np.prod(w_potential(x, vp))
                for j in range(size):
                    for j2 in range(j + 1, size):
                        V *= v_potential(x[j] + x[j2], vp) ** 2
                if comp:
                    r = lam[comp]
                    for j in range(size):
                        V *= np.prod(v_potential(x[j] + r, vp) * v_potential(x[j] - r, vp))
                total += np.cosh(np.dot(eps, theta[list(J)])) * abs(V) * U
    if abs(total.imag) > 1e-9 * max(1.0, abs(total.real)):
        raise ValueError(f"H_{l} has an imaginary part {total.imag:.3e}")
    return float(total.real)


def vd_hamiltonians(p, vp):
    return np.array([vd_hamiltonian(p, vp, l) for l in range(p.n + 1)])


def asymptotic_coupling_sum(n, l, k, mu, nu):
    """Coefficient of A_k in H_l once all particles have separated.

    Depends on |J| = k only; sum over increasing index tuples and sign vectors
    of exp(i sum_m eps_m (nu + 2 (n - l + m - j_m) mu)).
    """
    r = l - k
    if r < 0:
        return 0.0
    if r == 0:
        return 1.0
    total = 0.0 + 0.0j
    for js in itertools.combinations(range(1, n - k + 1), r):
        base = np.array([nu + 2.0 * (n - l + m - j) * mu for m, j in enumerate(js, start=1)])
        for eps in itertools.product((1.0, -1.0), repeat=r):
            total += np.exp(1j * np.dot(eps, base))
    return float(((-1) ** r * total).real)


def h_factor(c, n):
    """Lower triangular P with H = P A, unit diagonal."""
    P = np.zeros((n + 1, n + 1))
    for l in range(n + 1):
        for k in range(l + 1):
            P[l, k] = asymptotic_coupling_sum(n, l, k, c.mu, c.nu)
    return P


def k_factor(n):
    """Lower triangular Q with K = Q A, diagonal (-1)^m."""
    Q = np.zeros((n + 1, n + 1))
    for m in range(n + 1):
        for a in range(m // 2 + 1):
            Q[m, m - 2 * a] = (-1) ** m * comb(n - (m - 2 * a), a)
    return Q


def relation_matrix(c, n, factors=False):
    """Matrix T with K_m = sum_l T[m, l] H_l for m = 0..n."""
    P = h_factor(c, n)
    Q = k_factor(n)
    T = Q @ np.linalg.inv(P)
    if factors:
        return T, P, Q
    return T


def symmetric_cosh_sums(theta_plus):
    """A_k = sum over |J| = k and signs of cosh(sum eps_j theta_j)."""
    n = len(theta_plus)
    A = np.zeros(n + 1)
    for k in range(n + 1):
        for J in itertools.combinations(range(n), k):
            for eps in itertools.product((1.0, -1.0), repeat=k):
                A[k] += np.cosh(np.dot(eps, np.asarray(theta_plus)[list(J)]))
    return A


def gradient(f, p, h=1e-3):
    """Gradient of ``f`` at ``p`` by Richardson-extrapolated central differences.

    ``f`` maps a PhasePoint to a scalar or an array.  Returns (d/dlambda,
    d/dtheta), each of shape (n,) + shape(f(p)).  Steps are scaled per
    coordinate, h_c = h * max(1, |x_c|).
    """
    y0 = p.as_vector()
    n = p.n
    steps = h * np.maximum(1.0, np.abs(y0))

    def central(k, s):
        e = np.zeros_like(y0)
        e[k] = s
        fp = np.asarray(f(PhasePoint.from_vector(y0 + e)), dtype=float)
        fm = np.asarray(f(PhasePoint.from_vector(y0 - e)), dtype=float)
        return (fp - fm) / (2.0 * s)

    grads = []
    for k in range(2 * n):
        d1 = central(k, steps[k])
        d2 = central(k, steps[k] / 2.0)
        grads.append((4.0 * d2 - d1) / 3.0)
    grads = np.array(grads)
    return grads[:n], grads[n:]


def bracket_from_gradients(gf, gg):
    """{f, g} = sum_c df/dlam_c dg/dtheta_c - df/dtheta_c dg/dlam_c for precomputed gradients."""
    fl, ft = gf
    gl, gt = gg
    return np.tensordot(fl, gt, axes=(0, 0)) - np.tensordot(ft, gl, axes=(0, 0))


def poisson_bracket(f, g, p, h=1e-3):
    if not 1e-6 <= h <= 1e-3:
        raise ValueError(f"h must lie in [1e-6, 1e-3], got {h!r}")
    return float(bracket_from_gradients(gradient(f, p, h), gradient(g, p, h)))


def bracket_matrix(f, p, h=1e-3):
    """Matrix of brackets {f_a, f_b} for a vector-valued observable."""
    gr = gradient(f, p, h)
    return bracket_from_gradients(gr, gr)


def involution_check(p, c, h=1e-3):
    """max_{a<b} |{theta_hat_a, theta_hat_b}| at p."""
    if p.n < 2:
        return 0.0
    M = bracket_matrix(lambda q: lax_spectrum(build_bundle(q, c)), p, h)
    return float(np.max(np.abs(np.triu(M, 1))))


def char_poly_bracket_check(p, c, h=1e-3):
    """max |{K_m, K_m'}| over 1 <= m < m' <= n."""
    n = p.n
    if n < 2:
        return 0.0
    M = bracket_matrix(lambda q: char_poly_coeffs(build_bundle(q, c).L)[1 : n + 1], p, h)
    return float(np.max(np.abs(np.triu(M, 1))))


@dataclass
class InvariantReport:
    K: np.ndarray
    H: np.ndarray
    relationMatrix: np.ndarray
    relation_residual: float
    maxBracket: float
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "K": self.K.tolist(),
            "H": self.H.tolist(),
            "relation_matrix": self.relationMatrix.tolist(),
            "relation_residual": self.relation_residual,
            "max_bracket": self.maxBracket,
        }


def invariant_report(p, c, h=1e-3):
    n = p.n
    K = char_poly_coeffs(build_bundle(p, c).L)
    H = vd_hamiltonians(p, VanDiejenParams.two_parameter(c))
    T = relation_matrix(c, n)
    resid = float(np.max(np.abs(K[: n + 1] - T @ H)))
    return InvariantReport(K=K, H=H, relationMatrix=T, relation_residual=resid, maxBracket=involution_check(p, c, h))
