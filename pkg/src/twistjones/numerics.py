"""Arbitrary-precision scalar layer: precision policy, branch conventions.

All other modules compute with mpmath ``mpf``/``mpc`` values under an ambient
binary precision (``mpmath.mp.prec``).  `PrecisionContext` manages that
ambient precision; transcendental kernels run at ``bits + guard_bits`` and
round once on exit.  NaN/infinity never propagate: they raise `DomainError`.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass

from mpmath import mp, mpc, mpf
import mpmath

from .errors import DomainError

# A complex scalar is an mpmath ``mpc`` (or ``mpf`` when the value is real).
HPComplex = mpc

DEFAULT_BITS = 256
DEFAULT_GUARD_BITS = 32


@dataclass(frozen=True)
class PrecisionContext:
    """Working mantissa precision plus guard bits for intermediate sums."""

    bits: int = DEFAULT_BITS
    guard_bits: int = DEFAULT_GUARD_BITS

    def __post_init__(self):
        if self.bits < 64:
            raise DomainError("PrecisionContext.bits must be >= 64")
        if self.guard_bits < 32:
            raise DomainError("PrecisionContext.guard_bits must be >= 32")

    def __enter__(self):
        object.__setattr__(self, "_saved_prec", mp.prec)
        mp.prec = self.bits
        return self

    def __exit__(self, *exc):
        mp.prec = getattr(self, "_saved_prec", DEFAULT_BITS)
        return False


def bits_for(N: int) -> int:
    """Precision policy: the Habiro sum cancels ~e^{cN}, so grow bits with N."""
    if N <= 100:
        return DEFAULT_BITS
    return DEFAULT_BITS + math.ceil(1.5 * N)


@contextmanager
def guard(extra: int = DEFAULT_GUARD_BITS):
    """Temporarily raise the working precision by ``extra`` bits."""
    with mp.extraprec(extra):
        yield


def round_once(z):
    """Round a value computed at elevated precision to the ambient precision."""
    if isinstance(z, tuple):
        return tuple(round_once(x) for x in z)
    return +z


def ensure_finite(z, what="value"):
    """Reject NaN/infinite scalars; returns the value unchanged."""
    if isinstance(z, mpc):
        parts = (z.real, z.imag)
    else:
        parts = (z,)
    for x in parts:
        if mpmath.isnan(x) or mpmath.isinf(x):
            raise DomainError(f"non-finite {what}: {z}")
    return z


def principal_log(z):
    """log z with Im in (-pi, pi]; exp(principal_log(z)) == z."""
    z = mpc(z)
    if z == 0:
        raise DomainError("principal_log of zero")
    with guard():
        r = mpmath.log(z)
    return ensure_finite(round_once(r), "principal_log")


def unit_exponential(t):
    """e^{2 pi i t}."""
    with guard():
        r = mpmath.exp(2 * mp.pi * mpc(0, 1) * mpc(t))
    return ensure_finite(round_once(r), "unit_exponential")


def principal_sqrt(z):
    """Square root with Re >= 0, and Im > 0 on the negative real axis."""
    z = mpc(z)
    if z == 0:
        raise DomainError("principal_sqrt of zero")
    with guard():
        r = mpmath.sqrt(z)
    return ensure_finite(round_once(r), "principal_sqrt")


def compensated_sum(terms):
    """Neumaier-compensated sum of complex terms, in the given order."""
    s_re = mpf(0)
    c_re = mpf(0)
    s_im = mpf(0)
    c_im = mpf(0)
    for t in terms:
        t = mpc(t)
        for (v, s, c, is_re) in ((t.real, s_re, c_re, True), (t.imag, s_im, c_im, False)):
            total = s + v
            if abs(s) >= abs(v):
                c = c + ((s - total) + v)
            else:
                c = c + ((v - total) + s)
            if is_re:
                s_re, c_re = total, c
            else:
                s_im, c_im = total, c
    return mpc(s_re + c_re, s_im + c_im)
