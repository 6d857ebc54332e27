"""Potential functions of the twist-knot sum and their derivatives.

V(p,t,s) is the N -> infinity potential built from three dilogarithms;
V_{N,1/M} is the finite-N potential built from five quantum dilogarithms
(three at the Kashaev point).  Lattice-shifted variants subtract
2 pi i (m t + n s).  The real envelope v(t,s) controls term growth.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp, mpc, mpf

from .errors import BranchError, DegeneracyError, DomainError
from .numerics import ensure_finite, guard, principal_log, round_once, unit_exponential
from .special import li2, lobachevsky, phi

_I = mpc(0, 1)

# Region bounds, stored as exact decimal strings.
D0_TS_LO, D0_TS_HI = mpf('0.02'), mpf('0.7')       # t - s
D0_TPS_LO, D0_TPS_HI = mpf('1.02'), mpf('1.7')     # t + s
D0_S_LO, D0_S_HI = mpf('0.2'), mpf('0.8')          # s
D0_T_LO, D0_T_HI = mpf('0.5'), mpf('0.909')        # t
LEMMA41_THRESHOLD = mpf('3.509')                   # v > threshold/(2 pi) lands in D'_0


@dataclass(frozen=True)
class RegionSpec:
    """One of the scan regions D, D'_0, D'_eps."""

    name: str
    eps: object = mpf(0)

    def __post_init__(self):
        if self.name not in ("D", "D0prime", "DepsPrime"):
            raise DomainError(f"unknown region {self.name!r}")
        if self.eps < 0:
            raise DomainError("region eps must be non-negative")

    def contains(self, t, s):
        return region_contains(self.name, t, s, self.eps)


@dataclass(frozen=True)
class LatticeIndex:
    m: int = 0
    n: int = 0


@dataclass(frozen=True)
class PotentialValue:
    value: object
    t: object
    s: object
    p: int
    lattice: LatticeIndex = LatticeIndex()
    branch_flags: tuple = ()


def region_contains(name, t, s, eps=mpf(0)):
    """Membership by real parts; complex inputs allowed within the |Im| <= 1 strip."""
    t = mpc(t)
    s = mpc(s)
    if abs(t.imag) > 1 or abs(s.imag) > 1:
        return False
    tr, sr = t.real, s.real
    if name == "D":
        return 0 < tr < 1 and 0 < sr < 1 and 0 < tr - sr < 1
    e = mpf(eps)
    return (D0_TS_LO + e <= tr - sr <= D0_TS_HI - e
            and D0_TPS_LO + e <= tr + sr <= D0_TPS_HI - e
            and D0_S_LO + e <= sr <= D0_S_HI - e
            and D0_T_LO + e <= tr <= D0_T_HI - e)


def _li2_unit(tau):
    """Li2(e^{2 pi i tau}), rejecting arguments that land on the cut."""
    z = unit_exponential(tau)
    try:
        return li2(z)
    except DomainError as exc:
        raise BranchError(f"Li2 argument e^(2 pi i {tau}) hits the cut") from exc


def V_limit(p, t, s, idx=LatticeIndex()):
    """V(p,t,s;m,n): the limiting potential with lattice shifts m, n."""
    if isinstance(idx, tuple):
        idx = LatticeIndex(*idx)
    t = mpc(t)
    s = mpc(s)
    if not region_contains("D", t, s):
        raise DomainError(f"(Re t, Re s) = ({t.real}, {s.real}) outside the region D")
    with guard(48):
        poly = mp.pi * _I * ((2 * p + 1) * s ** 2 - (2 * p + 3 + 2 * idx.n) * s
                             - (2 + 2 * idx.m) * t)
        dilogs = (_li2_unit(t + s) + _li2_unit(t - s) - 3 * _li2_unit(t)
                  + mp.pi ** 2 / 6)
        val = poly + dilogs / (2 * mp.pi * _I)
    return ensure_finite(round_once(val), "V_limit")


def _check_finite_branch(t, s):
    t = mpc(t)
    s = mpc(s)
    if not (0 < t.real < 1 and 0 < (t - s).real < 1 and 1 < (t + s).real < 2):
        raise BranchError(
            "V_finite needs 0 < Re t < 1, 0 < Re(t-s) < 1, 1 < Re(t+s) < 2 "
            f"(got Re t = {t.real}, Re(t-s) = {(t - s).real}, Re(t+s) = {(t + s).real})")
    return t, s


def V_finite(p, t, s, root, contour=None, lattice=LatticeIndex()):
    """V_{N,1/M}(p,t,s;m,n) (or V_{N,0} at the Kashaev point).

    The Kashaev-point formula is the literal M -> infinity limit of the
    finite-M one: linear t-coefficient (2/N - 2) and a coefficient 3 on
    phi_{N,0}(t).
    """
    if isinstance(lattice, tuple):
        lattice = LatticeIndex(*lattice)
    t, s = _check_finite_branch(t, s)
    with guard(48):
        D = root.denom
        half = mpf(1) / (2 * D)
        if root.is_kashaev:
            poly = mp.pi * _I * ((2 * p + 1) * s ** 2 - (2 * p + 3) * s
                                 + (2 / D - 2) * t - mpf(6 * p + 4) / (12 * D ** 2))
            phis = (phi(t + s + half - 1, root, contour)
                    + phi(t - s + half, root, contour)
                    - 3 * phi(t, root, contour))
        else:
            M = root.M
            shift = mpf(1) / (M * D)
            poly = mp.pi * _I * ((2 * p + 1) * s ** 2 - (2 * p + 3) * s
                                 + (2 / D - 2) * t
                                 - (6 * p + 4 + mpf(12) / M ** 2) / (12 * D ** 2))
            phis = (phi(t + s + half - 1, root, contour)
                    + phi(t - s + half, root, contour)
                    - phi(t, root, contour)
                    - phi(t - shift, root, contour)
                    - phi(t + shift, root, contour))
        val = poly + phis / D - mp.pi * _I / 12
        if lattice.m or lattice.n:
            val = val - 2 * mp.pi * _I * (lattice.m * t + lattice.n * s)
    return ensure_finite(round_once(val), "V_finite")


def grad_V(p, t, s):
    """(dV/dt, dV/ds) of the limiting potential."""
    t = mpc(t)
    s = mpc(s)
    with guard(48):
        LU = principal_log(1 - unit_exponential(t + s))
        LW = principal_log(1 - unit_exponential(t - s))
        LX = principal_log(1 - unit_exponential(t))
        gt = -2 * mp.pi * _I + 3 * LX - LU - LW
        gs = (4 * p + 2) * mp.pi * _I * s - (2 * p + 3) * mp.pi * _I - LU + LW
    return (round_once(gt), round_once(gs))


def _log_chain(tau, order):
    """Derivatives of L(tau) = log(1 - e^{2 pi i tau}) up to ``order``.

    L'   = -c E/(1-E),            c = 2 pi i
    L''  = -c^2 E/(1-E)^2
    L''' = -c^3 E(1+E)/(1-E)^3
    L'''' = -c^4 E(1+4E+E^2)/(1-E)^4
    """
    E = unit_exponential(tau)
    c = 2 * mp.pi * _I
    one = 1 - E
    out = [-c * E / one]
    if order >= 2:
        out.append(-c ** 2 * E / one ** 2)
    if order >= 3:
        out.append(-c ** 3 * E * (1 + E) / one ** 3)
    if order >= 4:
        out.append(-c ** 4 * E * (1 + 4 * E + E * E) / one ** 4)
    return out


def V_partials(p, t, s, order=2):
    """Mixed partials of V as {(a, b): d^{a+b} V / dt^a ds^b}, 2 <= a+b <= order.

    V = poly(t, s) + (1/2 pi i)(Li2(U) + Li2(W) - 3 Li2(X)), and each
    Li2(e^{2 pi i tau})/(2 pi i) differentiates to -log(1 - e^{2 pi i tau}),
    so every higher partial is a chain of L-derivatives with s-signs from
    tau = t + s, t - s, t.
    """
    t = mpc(t)
    s = mpc(s)
    with guard(48):
        dU = _log_chain(t + s, order - 1)
        dW = _log_chain(t - s, order - 1)
        dX = _log_chain(t, order - 1)
        out = {}
        for a in range(0, order + 1):
            for b in range(0, order + 1 - a):
                k = a + b
                if k < 2 or k > order:
                    continue
                # d^k of (-Li2-part): tau-chain order k-1 applied to
                # (dV/dt branch) or (dV/ds branch); assemble from the first
                # partials: V_t = -2 pi i + 3 L(X) - L(U) - L(W),
                # V_s = (4p+2) pi i s - (2p+3) pi i - L(U) + L(W).
                # Differentiate V_t (a-1 more t, b more s) when a >= 1,
                # else differentiate V_s.
                if a >= 1:
                    ka = k - 1
                    val = 3 * (dX[ka - 1] if b == 0 else 0) \
                        - dU[ka - 1] - ((-1) ** b) * dW[ka - 1]
                else:
                    ka = k - 1
                    val = -dU[ka - 1] + ((-1) ** (b - 1)) * dW[ka - 1]
                    if k == 2:
                        val = val + (4 * p + 2) * mp.pi * _I
                out[(a, b)] = round_once(val)
    return out


def hessian_and_H(p, t, s):
    """(Hess V, H(p,x,y)); det Hess V = -4 pi^2 H identically."""
    t = mpc(t)
    s = mpc(s)
    with guard(48):
        d = V_partials(p, t, s, order=2)
        Vtt, Vts, Vss = d[(2, 0)], d[(1, 1)], d[(0, 2)]
        x = unit_exponential(t)
        y = unit_exponential(s)
        u = x * y
        w = x / y
        H = (-3 * (2 * p + 1) / (1 / x - 1)
             + (2 * p + 1) / (1 / u - 1)
             + (2 * p + 1) / (1 / w - 1)
             - 3 / ((1 / x - 1) * (1 / u - 1))
             - 3 / ((1 / x - 1) * (1 / w - 1))
             + 4 / ((1 / u - 1) * (1 / w - 1)))
        det = Vtt * Vss - Vts * Vts
        if abs(det) < mpf(2) ** (-mp.prec // 2):
            raise DegeneracyError(f"singular Hessian at (t, s) = ({t}, {s})")
    hess = ((round_once(Vtt), round_once(Vts)),
            (round_once(Vts), round_once(Vss)))
    return hess, round_once(H)


def envelope(t, s, root=None):
    """Real growth envelope v(t,s); with a root, the finite-N v_{N,1/M}."""
    t = mpf(t)
    s = mpf(s)
    with guard(48):
        if root is None:
            val = lobachevsky(t + s) + lobachevsky(t - s) - 3 * lobachevsky(t)
        else:
            D = root.denom
            half = mpf(1) / (2 * D)
            if root.is_kashaev:
                val = (lobachevsky(t + s - 1 + half) + lobachevsky(t - s + half)
                       - 3 * lobachevsky(t))
            else:
                shift = mpf(1) / (root.M * D)
                val = (lobachevsky(t + s - 1 + half) + lobachevsky(t - s + half)
                       - lobachevsky(t - shift) - lobachevsky(t)
                       - lobachevsky(t + shift))
    return round_once(val)


# -- helpers for the expansion coefficient (first saddle correction) --------

def lemma51_correction(t, s):
    """Psi_1(t,s) = -(1/2)(log(1-U) + log(1-W) - 4 pi i t): the 1/D defect of
    V_{N,1/M} against V."""
    t = mpc(t)
    s = mpc(s)
    with guard(48):
        LU = principal_log(1 - unit_exponential(t + s))
        LW = principal_log(1 - unit_exponential(t - s))
        val = -(LU + LW - 4 * mp.pi * _I * t) / 2
    return round_once(val)


def w_explicit(p, t, s, M):
    """Leading part of the 1/D^2 remainder w_{N,1/M}(t,s) (M-dependent)."""
    t = mpc(t)
    s = mpc(s)
    with guard(48):
        U = unit_exponential(t + s)
        W = unit_exponential(t - s)
        X = unit_exponential(t)
        m2 = mpf(0) if M == mpmath.inf else mpf(1) / mpf(M) ** 2
        val = -(mp.pi * _I / 12) * (-2 * U / (1 - U) - 2 * W / (1 - W)
                                    + (24 * m2 - 3) * X / (1 - X)
                                    + 6 * p + 4 + 12 * m2)
    return round_once(val)
