"""Critical point of the potential, growth data zeta/omega, and predictions.

The damped Newton solver starts from the best seed of a real grid over D'_0.
omega is computed through both displayed forms (Hessian and H); they satisfy
det Hess V = -4 pi^2 H identically, so the two principal square roots agree
up to a sign which is aligned and recorded.  The overall sign of omega
(``sign_branch``) is fixed downstream by requiring the fitted ratio
jones/prediction -> +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import mpmath
from mpmath import mp, mpc, mpf

from .errors import DomainError, InconsistencyError, SolverError
from .numerics import (ensure_finite, guard, principal_sqrt, round_once,
                       unit_exponential)
from .potential import (D0_S_HI, D0_S_LO, D0_T_HI, D0_T_LO, LatticeIndex,
                        V_limit, V_partials, grad_V, hessian_and_H,
                        region_contains, w_explicit)
from .qjones import INFINITY, RootSpec

_I = mpc(0, 1)


@dataclass
class CriticalData:
    p: int
    t0: object
    s0: object
    x0: object
    y0: object
    newton_residual: object
    hess_det: object = None
    Hval: object = None
    zeta: object = None
    zetaR: object = None
    omega: object = None
    omega_hess: object = None
    omega_H: object = None
    omega_discrepancy: object = None
    sign_branch: int = 1
    in_region: bool = True
    extra_basins: tuple = ()


@dataclass(frozen=True)
class AsymptoticPrediction:
    p: int
    root: RootSpec
    d: int
    leading: object
    x: object  # expansion variable 2 pi i / denom

    def evaluate(self, kappas=()):
        """leading * (1 + sum kappa_i x^i); kappas fill the symbolic slots."""
        series = mpc(1)
        xp = mpc(1)
        for kap in kappas[:self.d]:
            xp *= self.x
            series += kap * xp
        return self.leading * series


def _newton(p, t, s, tol, max_iter=200):
    trace = []
    t = mpc(t)
    s = mpc(s)
    gt, gs = grad_V(p, t, s)
    res = abs(gt) + abs(gs)
    for _ in range(max_iter):
        if res < tol:
            return t, s, res, trace
        d = V_partials(p, t, s, order=2)
        Vtt, Vts, Vss = d[(2, 0)], d[(1, 1)], d[(0, 2)]
        det = Vtt * Vss - Vts * Vts
        if det == 0:
            raise SolverError("singular Hessian during Newton", trace=trace)
        dt = (-gt * Vss + gs * Vts) / det
        ds = (Vts * gt - Vtt * gs) / det
        lam = mpf(1)
        for _ in range(60):
            t2, s2 = t + lam * dt, s + lam * ds
            try:
                g2t, g2s = grad_V(p, t2, s2)
            except (DomainError, ValueError):
                lam /= 2
                continue
            res2 = abs(g2t) + abs(g2s)
            if res2 < res:
                t, s, gt, gs, res = t2, s2, g2t, g2s, res2
                break
            lam /= 2
        else:
            raise SolverError("Newton damping stalled", trace=trace)
        trace.append((t, s, res))
    raise SolverError(f"Newton did not converge in {max_iter} iterations", trace=trace)


def _seed_grid(n):
    pad = mpf('0.004')
    ts = [D0_T_LO + pad + (D0_T_HI - D0_T_LO - 2 * pad) * i / (n - 1) for i in range(n)]
    ss = [D0_S_LO + pad + (D0_S_HI - D0_S_LO - 2 * pad) * i / (n - 1) for i in range(n)]
    for t in ts:
        for s in ss:
            if region_contains("D0prime", t, s):
                yield t, s


def find_critical(p, seeds=40, sweep=True, max_iter=200):
    """Solve grad V = 0 by damped Newton from the best D'_0 grid seed.

    A coarse low-precision sweep over all seeds looks for second basins
    inside the search box; any found are reported in ``extra_basins``.
    """
    if p < 2:
        raise DomainError("find_critical needs p >= 2")
    # coarse sweep at low precision
    basins = []
    best = None
    with mp.workprec(64):
        coarse_tol = mpf(2) ** -40
        for t, s in _seed_grid(seeds):
            gt, gs = grad_V(p, t, s)
            r = abs(gt) + abs(gs)
            if best is None or r < best[0]:
                best = (r, t, s)
            if sweep:
                try:
                    tc, sc, _, _ = _newton(p, t, s, coarse_tol, max_iter=60)
                except SolverError:
                    continue
                if region_contains("D0prime", tc, sc):
                    for (tb, sb) in basins:
                        if abs(tb - tc) < mpf('1e-8') and abs(sb - sc) < mpf('1e-8'):
                            break
                    else:
                        basins.append((tc, sc))
    if best is None:
        raise SolverError("no admissible seed inside D'_0")
    tol = mpf(2) ** (-mp.prec + 28)
    with guard(48):
        t0, s0, res, trace = _newton(p, best[1], best[2], tol, max_iter=max_iter)
    in_region = region_contains("D0prime", t0, s0)
    extra = tuple((round_once(mpc(t)), round_once(mpc(s))) for (t, s) in basins[1:])
    data = CriticalData(
        p=p,
        t0=round_once(t0), s0=round_once(s0),
        x0=unit_exponential(t0), y0=unit_exponential(s0),
        newton_residual=round_once(res),
        in_region=in_region,
        extra_basins=extra,
    )
    hess, H = hessian_and_H(p, t0, s0)
    data.hess_det = round_once(hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0])
    data.Hval = H
    return data


def zeta_omega(data, p=None):
    """Fill zeta, zetaR and both omega forms; align square-root branches.

    The two forms must agree after sign alignment to 1e-20 relative, else
    `InconsistencyError`.
    """
    p = data.p if p is None else p
    t0, s0 = mpc(data.t0), mpc(data.s0)
    with guard(48):
        zeta = V_limit(p, t0, s0, LatticeIndex(0, 0))
        x = unit_exponential(t0)
        y = unit_exponential(s0)
        om_h = (mpmath.sin(2 * mp.pi * s0) * x
                / ((1 - x) ** mpf('1.5') * principal_sqrt(data.hess_det)))
        om_H = ((y - 1 / y) * x
                / (-4 * mp.pi * (1 - x) ** mpf('1.5') * principal_sqrt(data.Hval)))
        if abs(om_h - om_H) > abs(om_h + om_H):
            om_H = -om_H
        disc = abs(om_h - om_H) / abs(om_h)
        if disc > mpf('1e-20'):
            raise InconsistencyError(
                f"omega forms disagree by {mpmath.nstr(disc, 6)}", achieved=disc)
    data.zeta = zeta
    data.zetaR = zeta.real
    data.omega_hess = round_once(om_h)
    data.omega_H = round_once(om_H)
    data.omega_discrepancy = round_once(disc)
    data.omega = round_once(data.sign_branch * om_h)
    return data


def apply_sign_branch(data, sign):
    data.sign_branch = int(sign)
    data.omega = round_once(data.sign_branch * data.omega_hess)
    return data


def critical_data(p, seeds=40, sweep=True):
    """find_critical + zeta_omega in one call."""
    return zeta_omega(find_critical(p, seeds=seeds, sweep=sweep), p)


def volume_cs(data):
    """(vol, cs) = (Re 2 pi zeta, Im 2 pi zeta reduced into [-pi^2/2, pi^2/2))."""
    if data.zeta is None:
        raise DomainError("zeta not filled; call zeta_omega first")
    with guard():
        two_pi_zeta = 2 * mp.pi * data.zeta
        vol = two_pi_zeta.real
        cs = two_pi_zeta.imag
        period = mp.pi ** 2
        cs = cs - period * mpmath.floor(cs / period + mpf(1) / 2)
    return round_once(vol), round_once(cs)


def predict(p, root, data, d=0):
    """Leading asymptotic term of Theorems at finite M / the Kashaev point."""
    if d < 0:
        raise DomainError("expansion order d must be >= 0")
    if data.zeta is None or data.omega is None:
        raise DomainError("critical data incomplete; call zeta_omega first")
    with guard(48):
        D = root.denom
        x = 2 * mp.pi * _I / D
        growth = mpmath.exp(D * data.zeta)
        if root.is_kashaev:
            pref = ((-1) ** p * 4 * mp.pi * mpmath.exp(mp.pi * _I / 4)
                    * D ** mpf('1.5'))
        else:
            M = root.M
            pref = ((-1) ** p * 4 * mp.pi
                    * mpmath.exp(mp.pi * _I * (mpf(1) / 4 + mpf(2) / M))
                    * mpmath.sqrt(D)
                    * mpmath.sin(mp.pi / M) / mpmath.sin((mp.pi / M) / D))
        leading = pref * data.omega * growth
    return AsymptoticPrediction(p=p, root=root, d=d,
                                leading=round_once(leading), x=round_once(x))


# -- first-order saddle coefficient ------------------------------------------

def _wick(a, b, S11, S12, S22):
    """Gaussian moment <z1^a z2^b> with covariance S (Wick pairing)."""
    if a + b == 0:
        return mpc(1)
    if (a + b) % 2:
        return mpc(0)
    if a > 0:
        out = mpc(0)
        if a >= 2:
            out += (a - 1) * S11 * _wick(a - 2, b, S11, S12, S22)
        if b >= 1:
            out += b * S12 * _wick(a - 1, b - 1, S11, S12, S22)
        return out
    return (b - 1) * S22 * _wick(0, b - 2, S11, S12, S22)


def _poly_mul(P, Q):
    out = {}
    for (a, b), c in P.items():
        for (e, f), d in Q.items():
            k = (a + e, b + f)
            out[k] = out.get(k, mpc(0)) + c * d
    return out


def _expect(P, S11, S12, S22):
    return sum(c * _wick(a, b, S11, S12, S22) for (a, b), c in P.items())


def _amplitude_taylor(p, t0, s0):
    """Taylor data (g0, first/second-order dict) of the reduced amplitude

    g = sin(2 pi s) e^{2 pi i t} (1-U)^{-1/2} (1-W)^{-1/2},

    i.e. sin(2 pi s) times exp of the Lemma 5.1 defect."""
    t0 = mpc(t0)
    s0 = mpc(s0)
    c = 2 * mp.pi * _I
    U = unit_exponential(t0 + s0)
    W = unit_exponential(t0 - s0)
    lU1 = -c * U / (1 - U)          # d/dtau log(1 - e^{2 pi i tau}) at t+s
    lW1 = -c * W / (1 - W)
    lU2 = -c ** 2 * U / (1 - U) ** 2
    lW2 = -c ** 2 * W / (1 - W) ** 2
    sn = mpmath.sin(2 * mp.pi * s0)
    g0 = sn * unit_exponential(t0) / principal_sqrt((1 - U) * (1 - W))
    # partials of log g
    lg_t = c - (lU1 + lW1) / 2
    lg_s = 2 * mp.pi * mpmath.cos(2 * mp.pi * s0) / sn - (lU1 - lW1) / 2
    lg_tt = -(lU2 + lW2) / 2
    lg_ts = -(lU2 - lW2) / 2
    lg_ss = -(2 * mp.pi) ** 2 / sn ** 2 - (lU2 + lW2) / 2
    P = {
        (1, 0): g0 * lg_t,
        (0, 1): g0 * lg_s,
        (2, 0): g0 * (lg_tt + lg_t ** 2) / 2,
        (1, 1): g0 * (lg_ts + lg_t * lg_s),
        (0, 2): g0 * (lg_ss + lg_s ** 2) / 2,
    }
    return g0, P


def first_order_coefficient(p, data, M=INFINITY):
    """lambda-hat_1: coefficient of 1/D in the saddle expansion of the
    Fourier-coefficient integral (amplitude, cubic/quartic potential terms,
    and the explicit 1/D^2 defect of the finite potential)."""
    t0, s0 = mpc(data.t0), mpc(data.s0)
    with guard(64):
        d = V_partials(p, t0, s0, order=4)
        import math as _math
        r3 = {(a, b): d[(a, b)] / (_math.factorial(a) * _math.factorial(b))
              for (a, b) in d if a + b == 3}
        r4 = {(a, b): d[(a, b)] / (_math.factorial(a) * _math.factorial(b))
              for (a, b) in d if a + b == 4}
        Vtt, Vts, Vss = d[(2, 0)], d[(1, 1)], d[(0, 2)]
        det = Vtt * Vss - Vts * Vts
        # covariance = -Hess^{-1}
        S11 = -Vss / det
        S12 = Vts / det
        S22 = -Vtt / det
        g0, gP = _amplitude_taylor(p, t0, s0)
        g1 = {k: v for k, v in gP.items() if sum(k) == 1}
        g2 = {k: v for k, v in gP.items() if sum(k) == 2}
        w0 = w_explicit(p, t0, s0, M if M != INFINITY else mpmath.inf)
        lam = w0
        lam += _expect(g2, S11, S12, S22) / g0
        lam += _expect(_poly_mul(g1, r3), S11, S12, S22) / g0
        lam += _expect(r4, S11, S12, S22)
        lam += _expect(_poly_mul(r3, r3), S11, S12, S22) / 2
    return round_once(lam)


def kappa1_via_saddle(p, data, M=INFINITY):
    """kappa_1(p, 1/M): the 1/D coefficient mapped to the 2 pi i/D variable."""
    lam = first_order_coefficient(p, data, M)
    return round_once(lam / (2 * mp.pi * _I))
