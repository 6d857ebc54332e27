"""Poisson-summation side: bump function, Fourier coefficients, reconstruction.

Coefficients are tensor-trapezoid integrals over the bounding box of D'_0 in
the rotated coordinates (u, v) = (t - s, t + s) (Jacobian 1/2), where two of
the four constraints are axis-aligned.  The integrand field

    W(t, s) = psi(t, s) sin(2 pi s) e^{D V_{N,1/M}(p,t,s)}

is cached on nested dyadic grids and shared by every lattice index (m, n),
whose only effect is the separable phase e^{-2 pi i D (m t + n s)}.  Because
t = (u + v)/2 depends on i + j only, the five quantum-dilogarithm pieces of
V collapse onto three one-dimensional grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mp, mpc, mpf

from .errors import AccuracyError, DomainError
from .numerics import guard, round_once
from .potential import (D0_TPS_HI, D0_TPS_LO, D0_TS_HI, D0_TS_LO, D0_S_HI,
                        D0_S_LO, D0_T_HI, D0_T_LO)
from .qjones import INFINITY, jones
from .special import phi

_I = mpc(0, 1)

_BASE_INTERVALS = 8
_MAX_LEVEL = 7  # 8 * 2^7 = 1024 intervals per axis


@dataclass(frozen=True)
class BumpSpec:
    """Smooth partition profile: 1 on D'_eps, 0 outside D'_0."""

    eps: object = mpf('0.01')

    def __post_init__(self):
        if not (0 < mpf(self.eps) < mpf('0.3')):
            raise DomainError("bump eps must lie in (0, 0.3)")


def _smoothstep(x):
    """C-infinity monotone step built from the e^{-1/x} mollifier."""
    if x <= 0:
        return mpf(0)
    if x >= 1:
        return mpf(1)
    a = mpmath.exp(-1 / mpf(x))
    b = mpmath.exp(-1 / (1 - mpf(x)))
    return a / (a + b)


def _window(x, lo, hi, eps):
    """1 on [lo+eps, hi-eps], 0 outside [lo, hi], smooth in between."""
    return _smoothstep((mpf(x) - lo) / eps) * _smoothstep((hi - mpf(x)) / eps)


def bump(t, s, spec=BumpSpec()):
    """psi(t,s): product of smooth windows in t-s, t+s, s and t."""
    t = mpf(t)
    s = mpf(s)
    e = mpf(spec.eps)
    with guard():
        val = (_window(t - s, D0_TS_LO, D0_TS_HI, e)
               * _window(t + s, D0_TPS_LO, D0_TPS_HI, e)
               * _window(s, D0_S_LO, D0_S_HI, e)
               * _window(t, D0_T_LO, D0_T_HI, e))
    return round_once(val)


@dataclass(frozen=True)
class FourierCoeff:
    m: int
    n: int
    value: object
    quad_error: object
    grid: tuple


class _Field:
    """Cached integrand field for one (p, root, eps) at one precision."""

    def __init__(self, p, root, spec):
        self.p = p
        self.root = root
        self.spec = spec
        self.D = root.denom
        self.u0, self.u1 = D0_TS_LO, D0_TS_HI
        self.v0, self.v1 = D0_TPS_LO, D0_TPS_HI
        self.wid = self.u1 - self.u0  # both axes have width 0.68
        self._phi_u = {}   # Fraction -> phi(u + 1/(2D))
        self._phi_v = {}   # Fraction -> phi(v + 1/(2D) - 1)
        self._phi_t = {}   # Fraction -> sum of the three t-centered phis
        self._W = {}       # (Fraction, Fraction) -> integrand value

    def _u(self, fu):
        return self.u0 + self.wid * mpf(fu.numerator) / fu.denominator

    def _v(self, fv):
        return self.v0 + self.wid * mpf(fv.numerator) / fv.denominator

    def _phi_at_u(self, fu):
        val = self._phi_u.get(fu)
        if val is None:
            val = phi(self._u(fu) + 1 / (2 * self.D), self.root)
            self._phi_u[fu] = val
        return val

    def _phi_at_v(self, fv):
        val = self._phi_v.get(fv)
        if val is None:
            val = phi(self._v(fv) + 1 / (2 * self.D) - 1, self.root)
            self._phi_v[fv] = val
        return val

    def _phi_at_t(self, ft):
        val = self._phi_t.get(ft)
        if val is None:
            t = (self.u0 + self.v0 + self.wid * mpf(ft.numerator) / ft.denominator) / 2
            if self.root.is_kashaev:
                val = 3 * phi(t, self.root)
            else:
                shift = 1 / (self.root.M * self.D)
                val = phi(t, self.root) + phi(t - shift, self.root) + phi(t + shift, self.root)
            self._phi_t[ft] = val
        return val

    def value(self, fu, fv):
        key = (fu, fv)
        val = self._W.get(key)
        if val is not None:
            return val
        p, D = self.p, self.D
        u = self._u(fu)
        v = self._v(fv)
        t = (u + v) / 2
        s = (v - u) / 2
        psi = bump(t, s, self.spec)
        if psi == 0:
            val = mpc(0)
        else:
            if self.root.is_kashaev:
                poly = mp.pi * _I * ((2 * p + 1) * s ** 2 - (2 * p + 3) * s
                                     + (2 / D - 2) * t - mpf(6 * p + 4) / (12 * D ** 2))
            else:
                M = self.root.M
                poly = mp.pi * _I * ((2 * p + 1) * s ** 2 - (2 * p + 3) * s
                                     + (2 / D - 2) * t
                                     - (6 * p + 4 + mpf(12) / M ** 2) / (12 * D ** 2))
            phis = (self._phi_at_v(fv) + self._phi_at_u(fu)
                    - self._phi_at_t(Fraction(fu + fv)))
            expo = D * poly + phis - D * mp.pi * _I / 12
            val = psi * mpmath.sin(2 * mp.pi * s) * mpmath.exp(expo)
        self._W[key] = val
        return val

    def lattice_sum(self, m, n, level):
        """Trapezoid sum of W e^{-2 pi i D (m t + n s)} at a dyadic level.

        The phase separates: m t + n s = u (m-n)/2 + v (m+n)/2.
        """
        nint = _BASE_INTERVALS * 2 ** level
        h = self.wid / nint
        cu = -mp.pi * _I * self.D * (m - n)
        cv = -mp.pi * _I * self.D * (m + n)
        fracs = [Fraction(i, nint) for i in range(1, nint)]
        eu = [mpmath.exp(cu * self._u(f)) for f in fracs]
        ev = [mpmath.exp(cv * self._v(f)) for f in fracs]
        total = mpc(0)
        for j, fv in enumerate(fracs):
            row = mpc(0)
            for i, fu in enumerate(fracs):
                w = self.value(fu, fv)
                if w != 0:
                    row += w * eu[i]
            total += row * ev[j]
        # Jacobian dt ds = du dv / 2
        return total * h * h / 2


_field_cache: dict = {}


def _field(p, root, spec):
    key = (p, root.N, str(root.M), str(mpf(spec.eps)), mp.prec)
    f = _field_cache.get(key)
    if f is None:
        f = _Field(p, root, spec)
        _field_cache[key] = f
    return f


def _prefactor_hat(m, n, p, root):
    D = root.denom
    return ((-1) ** (m + n + p)
            * mpmath.exp(mp.pi * _I * (mpf(1) / root.M - mpf(1) / 4))
            * D ** mpf('1.5') / mpmath.sin((mp.pi / root.M) / D))


def _prefactor_tilde0(m, n, p, root):
    N = root.N
    return ((-1) ** (m + n + p + 1) * 2 * mpmath.exp(mp.pi * _I / 4)
            * (n + 1) * mpf(N) ** mpf('2.5'))


def _start_level(m, n, root):
    target = (root.N * (2 + abs(m) + abs(n))) * mpf('0.68')
    level = 1
    while _BASE_INTERVALS * 2 ** level < target and level < _MAX_LEVEL:
        level += 1
    return level


def _richardson(history):
    """Neville extrapolation in h^2 over up to the last 4 refinement values."""
    pts = history[-4:]
    k = len(pts)
    xs = [mpf(4) ** (-(lev - pts[0][0])) for (lev, _) in pts]  # relative h^2
    tab = [val for (_, val) in pts]
    for order in range(1, k):
        tab = [(xs[i + order] * tab[i] - xs[i] * tab[i + 1])
               / (xs[i + order] - xs[i])
               for i in range(k - order)]
    return tab[0]


def _converge(field, m, n, pref, tol, max_level=_MAX_LEVEL):
    level = _start_level(m, n, field.root)
    history = []
    while level <= max_level:
        raw = field.lattice_sum(m, n, level)
        val = pref * raw
        history.append((level, val))
        if len(history) >= 2:
            err = abs(val - history[-2][1])
            if err < tol:
                value = _richardson(history) if len(history) >= 3 else val
                nint = _BASE_INTERVALS * 2 ** level
                return value, err, (nint - 1, nint - 1)
        level += 1
    raise AccuracyError(
        f"Fourier coefficient ({m},{n}) did not converge below {tol} "
        f"at {_BASE_INTERVALS * 2 ** max_level} intervals",
        achieved=abs(history[-1][1] - history[-2][1]) if len(history) > 1 else None,
        levels=history[-2:])


def h_hat(m, n, p, root, spec=BumpSpec(), tol=mpf('1e-10')):
    """Fourier coefficient of the bumped grid-term field (finite M only)."""
    if root.is_kashaev:
        raise DomainError("h_hat needs finite M; use h_tilde at the Kashaev point")
    with guard(48):
        field = _field(p, root, spec)
        pref = _prefactor_hat(m, n, p, root)
        val, err, grid = _converge(field, m, n, pref, mpf(tol))
    return FourierCoeff(m, n, round_once(val), round_once(err), grid)


def h_tilde(m, n, p, root, spec=BumpSpec(), tol=mpf('1e-10')):
    """Reduced coefficient on the half-lattice n >= 0.

    Finite M: (1 - e^{2 pi i (n+1)/M}) h_hat(m,n).  Kashaev point: the
    dedicated N^{5/2} (n+1) formula with the limiting potential.
    """
    if n < 0:
        raise DomainError("h_tilde is defined on the half-lattice n >= 0")
    if not root.is_kashaev:
        base = h_hat(m, n, p, root, spec, tol)
        with guard(48):
            fac = 1 - mpmath.exp(2 * mp.pi * _I * (n + 1) / root.M)
            val = fac * base.value
            err = abs(fac) * base.quad_error
        return FourierCoeff(m, n, round_once(val), round_once(err), base.grid)
    with guard(48):
        field = _field(p, root, spec)
        pref = _prefactor_tilde0(m, n, p, root)
        val, err, grid = _converge(field, m, n, pref, mpf(tol))
    return FourierCoeff(m, n, round_once(val), round_once(err), grid)


def poisson_reconstruct(p, root, K, tol=mpf('1e-10'), spec=BumpSpec()):
    """Sum h-tilde over |m| <= K, 0 <= n <= K and compare with jones.

    Returns (lattice sum, relative deviation from the direct summation).
    """
    if K < 0:
        raise DomainError("truncation K must be >= 0")
    with guard(48):
        total = mpc(0)
        for m in range(-K, K + 1):
            for n in range(0, K + 1):
                total += h_tilde(m, n, p, root, spec, tol).value
        ref = jones(p, root)
        deviation = abs(total - ref) / abs(ref)
    return round_once(total), round_once(deviation)
