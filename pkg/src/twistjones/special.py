"""Dilogarithm, Lobachevsky function, and the quantum dilogarithm phi.

phi(t) is the contour integral of e^{(2t-1)x} / (4 x sinh x sinh(x/D)) along
gamma = (-inf,-1] + {|z|=1, Im z >= 0} + [1,inf), D = N + 1/M.  The two real
rays combine into sinh((2t-1)x)/(2 x sinh x sinh(x/D)) on [1,inf); the
semicircle is integrated in the angle.  A functional equation

    phi(t) = phi(t - 1/D) - log(1 - e^{2 pi i (t - 1/(2D))})

lets any argument be shifted to a window around Re t = 1/2 where the
integrand decays at unit rate, which is the fast path used by the potential
module.  Tests exercise the unreduced integral directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp, mpc, mpf

from .errors import AccuracyError, DomainError
from .numerics import ensure_finite, guard, principal_log, round_once, unit_exponential

_I = mpc(0, 1)


# ---------------------------------------------------------------------------
# Gauss-Legendre nodes (cached per precision)

_gl_cache: dict = {}


def gauss_legendre(n):
    """Nodes and weights on [-1, 1] at the current precision."""
    key = (n, mp.prec)
    hit = _gl_cache.get(key)
    if hit is not None:
        return hit
    xs = [mpf(0)] * n
    ws = [mpf(0)] * n
    with guard(32):
        for i in range(1, (n + 1) // 2 + 1):
            # Chebyshev-like initial guess, then Newton on P_n.
            x = mpmath.cos(mp.pi * (i - mpf(1) / 4) / (n + mpf(1) / 2))
            dp = mpf(1)
            for _ in range(100):
                p0, p1 = mpf(1), x
                for k in range(2, n + 1):
                    p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
                dp = n * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < mpf(2) ** (-mp.prec + 8) * max(abs(x), mpf(1)):
                    break
            w = 2 / ((1 - x * x) * dp * dp)
            xs[i - 1] = round_once(-x)
            ws[i - 1] = round_once(w)
            xs[n - i] = round_once(x)
            ws[n - i] = ws[i - 1]
    _gl_cache[key] = (xs, ws)
    return (xs, ws)


def _gl_on(a, b, n):
    """Nodes/weights mapped to [a, b] (a, b may be complex)."""
    xs, ws = gauss_legendre(n)
    mid = (a + b) / 2
    half = (b - a) / 2
    return [mid + half * x for x in xs], [half * w for w in ws]


# ---------------------------------------------------------------------------
# Dilogarithm with the branch cut [1, inf)

def _li2_series(z):
    total = mpc(0)
    term = mpc(z)
    n = 1
    eps = mpf(2) ** (-mp.prec - 8)
    while abs(term) > eps * n * n:
        total += term / (n * n)
        term *= z
        n += 1
    return total


def _li2_log_series(z, side):
    # Expansion in w = log z, valid for |w| < 2 pi; handles the annulus
    # 1/2 < |z| < 2.  Needs a branch for log(-w) when z sits on (1, inf).
    w = principal_log(z)
    if w == 0:
        return mpc(mp.pi ** 2 / 6)
    if w.imag == 0 and w.real > 0:
        if side is None:
            raise DomainError("li2 on the cut (1, inf) requires a side flag")
        log_neg_w = mpmath.log(w.real) - side * _I * mp.pi
    else:
        log_neg_w = principal_log(-w)
    total = mp.pi ** 2 / 6 + w * (1 - log_neg_w) - w * w / 4
    eps = mpf(2) ** (-mp.prec - 8)
    w2 = w * w
    wpow = w * w2  # w^{2k+1}, k = 1
    fact = mpf(6)  # (2k+1)! at k = 1
    k = 1
    while True:
        term = mpmath.bernoulli(2 * k) / (2 * k * fact) * wpow
        total -= term
        if abs(term) < eps:
            break
        k += 1
        fact *= (2 * k) * (2 * k + 1)
        wpow *= w2
    return total


def li2(z, side=None):
    """Principal dilogarithm, holomorphic on C minus [1, inf).

    ``side`` (+1 above, -1 below) selects the boundary value for inputs on or
    within 2^{-prec/2} of the cut (1, inf); such inputs without a side flag
    raise `DomainError`.
    """
    z = mpc(z)
    ensure_finite(z, "li2 argument")
    if z == 0:
        return mpc(0)
    if z == 1:
        return mpc(mp.pi ** 2 / 6)
    near_cut = z.real > 1 and abs(z.imag) < mpf(2) ** (-mp.prec // 2)
    if near_cut and side is None:
        raise DomainError("li2 argument within 2^{-prec/2} of the cut (1, inf); pass side=+1/-1")
    with guard():
        a = abs(z)
        if a <= mpf(1) / 2:
            r = _li2_series(z)
        elif a >= 2:
            if near_cut:
                # log(-z) for z = x > 1 approached from side: log x -/+ i pi
                lognz = mpmath.log(a) - side * _I * mp.pi
            else:
                lognz = principal_log(-z)
            r = -_li2_series(1 / z) if a >= 4 else -li2(1 / z)
            r = r - mp.pi ** 2 / 6 - lognz ** 2 / 2
        else:
            r = _li2_log_series(z, side)
    return ensure_finite(round_once(r), "li2")


def lobachevsky(t):
    """Lobachevsky function: odd, period 1, Im Li2(e^{2 pi i t}) / (2 pi)."""
    t = mpf(t)
    ensure_finite(t, "lobachevsky argument")
    with guard():
        tm = t - mpmath.floor(t)
        if tm == 0 or 2 * tm == 1:
            return mpf(0)
        sign = 1
        if 2 * tm > 1:
            tm = 1 - tm
            sign = -1
        val = sign * li2(unit_exponential(tm)).imag / (2 * mp.pi)
    return round_once(val)


# ---------------------------------------------------------------------------
# Quantum dilogarithm

@dataclass(frozen=True)
class ContourSpec:
    """Quadrature controls for the phi contour.

    ``X`` truncates the real rays (auto-extended from the tail bound when
    None); ``panels`` caps the subdivision count on [1, X].
    """

    X: float | None = None
    panels: int = 64

    def __post_init__(self):
        if self.panels < 64:
            raise DomainError("ContourSpec.panels must be >= 64")


@dataclass(frozen=True)
class PhiValue:
    value: object
    quad_error: object


def _denom(root):
    if root.is_kashaev:
        return mpf(root.N)
    return mpf(root.N) + mpf(1) / root.M


def _tail_cutoff(a0, D, target_nats):
    # |g(x)| <= 1.2 max(D/x, 2.4 e^{-x/D}) e^{-a0 x} / (2x) for x >= 1; grow X
    # until the integrated tail is below e^{-target_nats}.
    X = mpf(8)
    for _ in range(300):
        rate = a0 + min(mpf(1) / D, X / D / (1 + X))
        bound = mpf('1.2') * max(D / X, mpf('2.4') * mpmath.exp(-X / D)) \
            * mpmath.exp(-a0 * X) / (2 * X) / rate
        if bound < mpmath.exp(-target_nats):
            return X
        X *= mpf('1.25')
    raise AccuracyError("phi tail cutoff search failed")


def _real_panels(X, a0, im_freq, n_nodes, target_nats):
    """Panel edges on [1, X]: width limited by the Bernstein-ellipse budget
    (poles of 1/sinh at pi i) plus the oscillation of e^{(2t-1)x}."""
    edges = [mpf(1)]
    x = mpf(1)
    ln2 = mpmath.log(2)
    while x < X:
        remaining = max(target_nats - a0 * (x - 1), mpf(10))
        # GL with n nodes on half-width h converges ~ exp(-2 n asinh(pi/h))
        lo, hi = mpf('0.05'), mpf(64)
        for _ in range(40):
            h = (lo + hi) / 2
            gain = 2 * n_nodes * mpmath.asinh(mp.pi / h)
            if gain > remaining + 5 * ln2:
                lo = h
            else:
                hi = h
        w = 2 * lo
        if im_freq > 0:
            w = min(w, mp.pi / (2 * im_freq) * n_nodes / 8)
        w = max(w, mpf('0.1'))
        x = min(x + w, X)
        edges.append(x)
    return edges


class PhiEngine:
    """Cached quadrature tables for one root of unity at one precision."""

    def __init__(self, root, spec=None, extra_nodes=0):
        self.root = root
        self.spec = spec or ContourSpec()
        self.prec = mp.prec
        self.D = _denom(root)
        self.extra_nodes = extra_nodes
        self._base = None  # lazily built fast-path tables

    # -- raw contour integration ------------------------------------------

    def _n_nodes(self):
        return max(32, (mp.prec + 48) // 4) + self.extra_nodes

    def _integrate(self, t, derivative=False, nodes_shift=0):
        """Contour integral at t with 0 < Re t < 1, no argument reduction."""
        D = self.D
        a0 = 2 * min(mpf(t.real), 1 - mpf(t.real))
        if a0 <= 0:
            raise DomainError(f"phi argument must satisfy 0 < Re t < 1 (got {t})")
        target = (mp.prec + 12) * mpmath.log(2)
        n = self._n_nodes() + nodes_shift
        X = self.spec.X or _tail_cutoff(a0, D, target)
        im_freq = abs(mpc(t).imag) * 2
        edges = _real_panels(X, a0, im_freq, n, target)
        if len(edges) - 1 > self.spec.panels:
            # honor the panel cap by fusing; accuracy guarded by node count
            step = max(1, (len(edges) - 1) // self.spec.panels)
            edges = edges[::step] + ([edges[-1]] if edges[-1] != edges[::step][-1] else [])
        two_t1 = 2 * mpc(t) - 1
        total = mpc(0)
        for a, b in zip(edges[:-1], edges[1:]):
            xs, ws = _gl_on(a, b, n)
            for x, w in zip(xs, ws):
                e = mpmath.exp(two_t1 * x)
                if derivative:
                    f = (e + 1 / e) / (2 * mpmath.sinh(x) * mpmath.sinh(x / D))
                else:
                    f = (e - 1 / e) / (4 * x * mpmath.sinh(x) * mpmath.sinh(x / D))
                total += w * f
        # semicircle, z = e^{i alpha}, alpha from pi to 0
        semi = mpc(0)
        for a, b in zip([mp.pi, 3 * mp.pi / 4, mp.pi / 2, mp.pi / 4],
                        [3 * mp.pi / 4, mp.pi / 2, mp.pi / 4, mpf(0)]):
            xs, ws = _gl_on(a, b, n)
            for al, w in zip(xs, ws):
                z = mpmath.exp(_I * al)
                f = mpmath.exp(two_t1 * z) / (4 * z * mpmath.sinh(z) * mpmath.sinh(z / D))
                if derivative:
                    f = f * (2 * z)
                semi += w * f * _I * z
        return total + semi

    # -- fast path: shift to the central window ----------------------------

    def _base_tables(self):
        if self._base is not None:
            return self._base
        D = self.D
        target = (mp.prec + 12) * mpmath.log(2)
        a0 = 1 - 1 / D  # worst case over the window [1/2 - 1/(2D), 1/2 + 1/(2D))
        n = self._n_nodes()
        X = _tail_cutoff(a0, D, target)
        edges = _real_panels(X, a0, mpf('0.5'), n, target)
        real_nodes = []
        phi_w = []
        dphi_w = []
        for a, b in zip(edges[:-1], edges[1:]):
            xs, ws = _gl_on(a, b, n)
            for x, w in zip(xs, ws):
                sh = mpmath.sinh(x) * mpmath.sinh(x / D)
                real_nodes.append(x)
                phi_w.append(w / (4 * x * sh))
                dphi_w.append(w / (2 * sh))
        semi_nodes = []
        semi_phi_w = []
        semi_dphi_w = []
        for a, b in zip([mp.pi, 3 * mp.pi / 4, mp.pi / 2, mp.pi / 4],
                        [3 * mp.pi / 4, mp.pi / 2, mp.pi / 4, mpf(0)]):
            xs, ws = _gl_on(a, b, n)
            for al, w in zip(xs, ws):
                z = mpmath.exp(_I * al)
                base = w * _I * z / (4 * z * mpmath.sinh(z) * mpmath.sinh(z / D))
                semi_nodes.append(z)
                semi_phi_w.append(base)
                semi_dphi_w.append(base * 2 * z)
        self._base = (real_nodes, phi_w, dphi_w, semi_nodes, semi_phi_w, semi_dphi_w)
        return self._base

    def _base_eval(self, t, derivative):
        real_nodes, phi_w, dphi_w, semi_nodes, semi_phi_w, semi_dphi_w = self._base_tables()
        two_t1 = 2 * mpc(t) - 1
        total = mpc(0)
        if derivative:
            for x, w in zip(real_nodes, dphi_w):
                e = mpmath.exp(two_t1 * x)
                total += w * (e + 1 / e) / 2
            for z, w in zip(semi_nodes, semi_dphi_w):
                total += w * mpmath.exp(two_t1 * z)
        else:
            for x, w in zip(real_nodes, phi_w):
                e = mpmath.exp(two_t1 * x)
                total += w * (e - 1 / e) / 2
            for z, w in zip(semi_nodes, semi_phi_w):
                total += w * mpmath.exp(two_t1 * z)
        return total

    def _reduced(self, t, derivative):
        D = self.D
        t = mpc(t)
        k = int(mpmath.floor((t.real - mpf(1) / 2) * D + mpf(1) / 2))
        base = t - mpf(k) / D
        val = self._base_eval(base, derivative)
        if k == 0:
            return val
        two_pi_i = 2 * mp.pi * _I
        if k > 0:
            for i in range(1, k + 1):
                tau = t - mpf(2 * i - 1) / (2 * D)
                E = mpmath.exp(two_pi_i * tau)
                if derivative:
                    val += two_pi_i * E / (1 - E)
                else:
                    val -= principal_log(1 - E)
        else:
            for i in range(0, -k):
                tau = t + mpf(2 * i + 1) / (2 * D)
                E = mpmath.exp(two_pi_i * tau)
                if derivative:
                    val -= two_pi_i * E / (1 - E)
                else:
                    val += principal_log(1 - E)
        return val

    def eval(self, t, derivative=False, reduce=True, with_error=False):
        t = mpc(t)
        if not (0 < t.real < 1):
            raise DomainError(f"phi argument must satisfy 0 < Re t < 1 (got {t})")
        with guard():
            if reduce:
                val = self._reduced(t, derivative)
                if with_error:
                    alt_engine = PhiEngine(self.root, self.spec, extra_nodes=10)
                    alt = alt_engine._reduced(t, derivative)
                    err = abs(val - alt)
                else:
                    err = mpf(2) ** (-mp.prec + 8) * max(abs(val), mpf(1))
            else:
                val = self._integrate(t, derivative)
                if with_error:
                    alt = self._integrate(t, derivative, nodes_shift=10)
                    err = abs(val - alt)
                else:
                    err = mpf(2) ** (-mp.prec + 8) * max(abs(val), mpf(1))
        val = round_once(val)
        ensure_finite(val, "phi")
        if with_error and err > mpf(2) ** (-mp.prec // 2) * max(abs(val), mpf(1)):
            raise AccuracyError("phi quadrature did not converge", achieved=err)
        return PhiValue(val, round_once(err))


_engine_cache: dict = {}


def _engine(root, spec=None):
    if spec is not None and (spec.X is not None or spec.panels != 64):
        return PhiEngine(root, spec)
    key = (root.N, str(root.M), mp.prec)
    eng = _engine_cache.get(key)
    if eng is None:
        eng = PhiEngine(root)
        _engine_cache[key] = eng
    return eng


def phi(t, root, contour=None, reduce=True):
    """Quantum dilogarithm phi_{N,1/M}(t) for 0 < Re t < 1."""
    return _engine(root, contour).eval(t, derivative=False, reduce=reduce).value


def phi_prime(t, root, contour=None, reduce=True):
    """d/dt of phi, via the t-differentiated integrand (extra factor 2x)."""
    return _engine(root, contour).eval(t, derivative=True, reduce=reduce).value


def phi_eval(t, root, contour=None, reduce=True, derivative=False):
    """phi (or phi') together with a quadrature error estimate."""
    return _engine(root, contour).eval(t, derivative=derivative, reduce=reduce,
                                       with_error=True)
