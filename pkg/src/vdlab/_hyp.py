"""Overflow-safe hyperbolic kernels.

Positions grow linearly in time, so ``sinh`` of particle separations overflows
long before the physics becomes uninteresting.  Every kernel here is written
in terms of ``coth``/``tanh`` or decaying exponentials so that it stays finite
for arbitrarily large real arguments.
"""

import numpy as np


def coth(x):
    return 1.0 / np.tanh(x)


def csch2(x):
    """1/sinh(x)**2 for real x != 0."""
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / np.expm1(-2.0 * np.abs(x)) ** 2


def shift_ratio(x, g):
    """sinh(i*g + x) / sinh(x) = cos(g) + i*sin(g)*coth(x)."""
    return np.cos(g) + 1j * np.sin(g) * coth(x)


def cosh_shift_ratio(x, g):
    """cosh(i*g + x) / cosh(x) = cos(g) + i*sin(g)*tanh(x)."""
    return np.cos(g) + 1j * np.sin(g) * np.tanh(x)


def inv_sinh_shift(x, g):
    """1/sinh(x + i*g) for real x and sin(g) != 0 (or x != 0)."""
    x = np.asarray(x, dtype=float)
    # 1/sinh(w) = s/sinh(s*w) with s = sign(x) puts the argument in the right
    # half plane, where 2e^{-w}/(1 - e^{-2w}) is overflow free
    s = np.where(x < 0, -1.0, 1.0)
    e = np.exp(-(s * x + 1j * s * g))
    return s * 2.0 * e / (1.0 - e * e)


def amplitude_factor(x, s2):
    """sqrt(1 + s2/sinh(x)**2)."""
    return np.sqrt(1.0 + s2 * csch2(x))


def log_amplitude_slope(x, s2):
    """s2*coth(x)/(sinh(x)**2 + s2), i.e. minus d/dx of log(amplitude_factor(x, s2)).

    Equals Re(i*s/(sinh(x)*sinh(i*g + x))) whenever s = sin(g), s2 = s**2.
    Odd in x.
    """
    c2 = csch2(x)
    return s2 * coth(x) * c2 / (1.0 + s2 * c2)


def inv_sinh_prod(x, g):
    """1/(sinh(x)*sinh(i*g + x)) for real x != 0."""
    return csch2(x) / shift_ratio(x, g)


def inv_sinh_prod_reflected(x, g):
    """1/(sinh(x)*sinh(i*g - x)) for real x != 0."""
    return csch2(x) / (-np.cos(g) + 1j * np.sin(g) * coth(x))
