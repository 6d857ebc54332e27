"""Colored Jones polynomial of twist knots at roots of unity.

The Habiro-Masbaum double sum is evaluated term by term with bracket
factorial tables.  All fractional powers of q come from one fixed primitive
root rho = e^{pi i/(2 D)} raised to integer powers, D = N + 1/M.

At the Kashaev point (M infinite, q = e^{2 pi i/N}) individual terms with
k+l+1 >= N carry a simple pole from the vanishing bracket {N} inside
{k+l+1}!; the summands are grouped and the polynomial's finite value is
recovered from the first-order term of the pole group (its zeroth-order part
cancels exactly, which is asserted).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import mpmath
from mpmath import mp, mpc, mpf

from .errors import DegenerateRootWarning, DomainError, PrecisionError
from .numerics import bits_for, compensated_sum, ensure_finite, round_once

INFINITY = math.inf

_I = mpc(0, 1)


@dataclass(frozen=True)
class RootSpec:
    """Evaluation point e^{2 pi i/(N + 1/M)}; M = INFINITY gives e^{2 pi i/N}."""

    N: int
    M: object = 2

    def __post_init__(self):
        if not isinstance(self.N, int) or self.N < 1:
            raise DomainError(f"N must be a positive integer (got {self.N})")
        if self.M == 1:
            raise DomainError("M = 1 is rejected")
        if self.M != INFINITY and (not isinstance(self.M, int) or self.M < 2):
            raise DomainError(f"M must be an integer >= 2 or INFINITY (got {self.M})")

    @property
    def is_kashaev(self):
        return self.M == INFINITY

    @property
    def denom(self):
        """N + 1/M at the current working precision."""
        if self.is_kashaev:
            return mpf(self.N)
        return mpf(self.N) + mpf(1) / self.M

    @property
    def xi(self):
        return mpmath.exp(2 * mp.pi * _I / self.denom)

    @property
    def half_root(self):
        """q^{1/2} = e^{pi i/denom}."""
        return mpmath.exp(mp.pi * _I / self.denom)

    @property
    def quarter_root(self):
        """The fixed primitive root e^{pi i/(2 denom)} supplying q^{1/4}."""
        return mpmath.exp(mp.pi * _I / (2 * self.denom))


@dataclass(frozen=True)
class TwistParam:
    """Number of half-twist pairs; theorems apply for p >= 6."""

    p: int

    def __post_init__(self):
        if not isinstance(self.p, int):
            raise DomainError("p must be an integer")

    @property
    def experimental(self):
        return self.p < 6


@dataclass(frozen=True)
class GridPoint:
    k: int
    l: int

    def __post_init__(self):
        if not (0 <= self.l <= self.k):
            raise DomainError(f"grid point needs 0 <= l <= k (got k={self.k}, l={self.l})")


def _coerce_p(p):
    return p.p if isinstance(p, TwistParam) else int(p)


def bracket(n, root):
    """{n} = q^{n/2} - q^{-n/2} = 2 i sin(pi n / denom)."""
    with mp.extraprec(32):
        v = 2 * _I * mpmath.sin(mp.pi * n / root.denom)
    return round_once(v)


def pochhammer_table(root, nmax):
    """(xi)_n for n = 0..nmax by the recurrence (xi)_n = (xi)_{n-1} (1 - xi^n)."""
    if not (0 <= nmax <= 2 * root.N):
        raise DomainError(f"pochhammer_table needs 0 <= nmax <= 2N (got {nmax})")
    with mp.extraprec(32):
        xi = root.xi
        out = [mpc(1)]
        xpow = mpc(1)
        for n in range(1, nmax + 1):
            xpow *= xi
            if root.is_kashaev and n % root.N == 0:
                # xi^N = 1 exactly; the factor and every later entry vanish
                warnings.warn(
                    f"(xi)_{n} vanishes exactly at the degenerate root N={root.N}",
                    DegenerateRootWarning, stacklevel=2)
                factor = mpc(0)
            else:
                factor = 1 - xpow
            out.append(out[-1] * factor)
    return [round_once(v) for v in out]


def _bracket_tables(root, top):
    """Brackets {n} and factorials {n}! for n = 0..top at the working root."""
    D = root.denom
    br = [mpc(0)] * (top + 1)
    fact = [mpc(1)] * (top + 1)
    for n in range(1, top + 1):
        br[n] = 2 * _I * mpmath.sin(mp.pi * n / D)
        fact[n] = fact[n - 1] * br[n]
    return br, fact


def _jones_finite(p, root):
    N = root.N
    rho = root.quarter_root
    br, fact = _bracket_tables(root, 2 * N)
    inv_fact = [1 / f for f in fact]
    c2 = rho * rho            # rho^2, steps the k-exponent k(k+3)
    c8p = rho ** (8 * p)      # steps the l-exponent 4 p l(l+1)
    terms = []
    qk = mpc(1)               # rho^{k(k+3)}
    dk = c2 * c2              # rho^{2k+4} at k=0 -> rho^4
    sigma = mpc(1)            # prod_{i<=k} {N+i}{N-i}
    for k in range(N):
        if k > 0:
            qk *= dk
            dk *= c2 * c2
            sigma *= br[N + k] * br[N - k]
        ql = mpc(1)           # rho^{4 p l(l+1)}
        dl = c8p              # rho^{8 p (l+1)} at l=0 -> rho^{8p}
        base_k = qk * fact[k] * sigma
        for l in range(k + 1):
            if l > 0:
                ql *= dl
                dl *= c8p
            term = base_k * ql * br[2 * l + 1] * inv_fact[k + l + 1] * inv_fact[k - l]
            if l % 2:
                term = -term
            terms.append(term)
    return compensated_sum(terms)


def _jones_kashaev(p, root):
    """Value at q = e^{2 pi i/N} as the limit of the polynomial.

    Terms are split by the net multiplicity of the vanishing bracket {N}.
    For the simple-pole group T = W/{N}, sum W must vanish at the root; the
    limit contributes sum W'(theta0) / {N}'(theta0) with theta the angle of
    q and {N}' = -iN.
    """
    N = root.N
    theta0 = 2 * mp.pi / N

    def cot_half(n):
        return mpf(n) / 2 * mpmath.cot(n * theta0 / 2)

    # F(n): factorial with N-divisible brackets skipped; S(n): sum of
    # d/dtheta log{j} over the same factors.
    br = [mpc(0)] * (2 * N)
    F = [mpc(1)] * (2 * N)
    S = [mpf(0)] * (2 * N)
    for n in range(1, 2 * N):
        br[n] = 2 * _I * mpmath.sin(n * theta0 / 2)
        if n % N == 0:
            F[n] = F[n - 1]
            S[n] = S[n - 1]
        else:
            F[n] = F[n - 1] * br[n]
            S[n] = S[n - 1] + cot_half(n)
    invF = [1 / f for f in F]

    direct = []
    pole_w = []
    pole_wl = []
    scale = mpf(0)
    for k in range(N):
        # sigma_k = {N+k}!/({N} {N-k-1}!): the {N} factors cancel exactly
        sigma = F[N + k] * invF[N - k - 1]
        dsigma = S[N + k] - S[N - k - 1]
        for l in range(k + 1):
            e4 = k * (k + 3) + 4 * p * l * (l + 1)  # exponent of rho = q^{1/4}
            qpow = mpmath.exp(_I * e4 * theta0 / 4)
            sign = -1 if l % 2 else 1
            numer_zero = (2 * l + 1) == N
            denom_zero = (k + l + 1) >= N
            W = sign * qpow * F[k] * sigma * invF[k + l + 1] * invF[k - l]
            if not numer_zero:
                W = W * br[2 * l + 1]
            if numer_zero == denom_zero:
                direct.append(W)
            elif denom_zero:
                L = (_I * mpf(e4) / 4
                     + cot_half(2 * l + 1)
                     + S[k] + dsigma - S[k + l + 1] - S[k - l])
                pole_w.append(W)
                pole_wl.append(W * L)
                scale = max(scale, abs(W))
            # numer_zero and not denom_zero: the term vanishes
    A = compensated_sum(pole_w)
    if scale > 0 and abs(A) > scale * mpf(2) ** (-mp.prec + 48):
        raise PrecisionError(
            "pole-group cancellation failed at the degenerate root; "
            "raise the working precision",
            suggested_bits=2 * mp.prec)
    B = compensated_sum(pole_wl)
    return compensated_sum(direct) + B / (-_I * N)


def jones(p, root, check=False):
    """J_N(K_p) at the root, by direct summation of the double sum.

    ``check=True`` recomputes at doubled precision and raises
    `PrecisionError` if the two values disagree beyond 2^{-bits+16}.
    """
    p = _coerce_p(p)
    N = root.N
    if N == 1:
        return mpc(1)
    target = mp.prec
    work = max(target, bits_for(N)) + 32 + max(0, p.bit_length() * 4)
    with mp.workprec(work):
        val = _jones_kashaev(p, root) if root.is_kashaev else _jones_finite(p, root)
    if check:
        with mp.workprec(2 * work):
            val2 = _jones_kashaev(p, root) if root.is_kashaev else _jones_finite(p, root)
        tol = mpf(2) ** (-target + 16)
        if abs(val - val2) > tol * max(abs(val2), mpf(1)):
            raise PrecisionError(
                f"jones doubling check disagreed at {target} bits",
                suggested_bits=2 * work)
    return ensure_finite(round_once(mpc(val)), "jones")


def grid_term(p, root, pt):
    """g_{N,1/M}(k,l) through the finite-N potential (k+l+1 > N branch only)."""
    from .potential import V_finite
    from .errors import BranchError

    p = _coerce_p(p)
    if root.is_kashaev:
        raise DomainError("grid_term needs finite M (the {N} denominator degenerates)")
    N = root.N
    if pt.k > N - 1:
        raise DomainError(f"grid point k={pt.k} outside 0..N-1")
    if pt.k + pt.l + 1 <= N:
        raise BranchError(
            f"grid_term implements only the k+l+1 > N branch (got k+l+1={pt.k + pt.l + 1})")
    with mp.extraprec(48):
        D = root.denom
        t = (pt.k + mpf(1) / 2) / D
        s = (pt.l + mpf(1) / 2) / D
        V = V_finite(p, t, s, root)
        pref = ((-1) ** p * mpmath.exp(mp.pi * _I * (mpf(1) / root.M - mpf(1) / 4))
                / mpmath.sqrt(D)
                * mpmath.sin(mp.pi * (2 * pt.l + 1) / D) / mpmath.sin((mp.pi / root.M) / D))
        val = pref * mpmath.exp(D * V)
    return ensure_finite(round_once(val), "grid_term")


def grid_term_closed(p, root, pt):
    """The bracket-factorial closed form of g_{N,1/M}(k,l); valid on the whole grid."""
    p = _coerce_p(p)
    if root.is_kashaev:
        raise DomainError("grid_term_closed needs finite M")
    N = root.N
    k, l = pt.k, pt.l
    with mp.extraprec(48):
        br, fact = _bracket_tables(root, 2 * N)
        e4 = k * (k + 3) + 4 * p * l * (l + 1)
        qpow = root.quarter_root ** e4
        val = ((-1) ** l * qpow * br[2 * l + 1] / br[N]
               * fact[k] * fact[N + k]
               / (fact[k + l + 1] * fact[k - l] * fact[N - k - 1]))
    return round_once(val)
