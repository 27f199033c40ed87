"""Reproducible random phase points and couplings."""

import numpy as np

from .errors import InvalidParameters
from .laxcore import CouplingParams, PhasePoint

GAP_RANGE = (0.2, 1.2)
THETA_RANGE = (-2.0, 2.0)
COUPLING_RANGE = (-np.pi, np.pi)
# couplings closer than this to a forbidden value are resampled
COUPLING_MARGIN = 0.1


def random_point(rng, n):
    """lambda from ordered cumulative gaps, theta uniform."""
    gaps = rng.uniform(*GAP_RANGE, size=n)
    lam = np.cumsum(gaps)[::-1]
    theta = rng.uniform(*THETA_RANGE, size=n)
    return PhasePoint(lam, theta)


def random_couplings(rng, with_kappa=False):
    """Draw (mu, nu[, kappa]) and resample until all sine constraints hold with margin."""
    while True:
        mu, nu = rng.uniform(*COUPLING_RANGE, size=2)
        kappa = rng.uniform(*COUPLING_RANGE) if with_kappa else None
        if min(abs(np.sin(mu)), abs(np.sin(nu)), abs(np.sin(2 * mu - nu))) < COUPLING_MARGIN:
            continue
        try:
            return CouplingParams(float(mu), float(nu), None if kappa is None else float(kappa))
        except InvalidParameters:
            continue


def random_case(seed, n, with_kappa=False):
    """(PhasePoint, CouplingParams) determined by ``seed`` alone."""
    rng = np.random.default_rng(seed)
    c = random_couplings(rng, with_kappa)
    return random_point(rng, n), c
