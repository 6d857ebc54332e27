"""Experiment harness: expansion fits, growth-rate extrapolation, reports.

Reports are cached as JSON keyed by a hash of (p, N, M, bits, command,
module version); values are serialized as decimal strings with an explicit
significant-digit tag so records reproduce bit-for-bit at equal precision.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import mpmath
from mpmath import mp, mpc, mpf

from . import __version__
from .errors import DomainError, FitError
from .numerics import bits_for, principal_log, round_once
from .qjones import INFINITY, RootSpec, jones
from .saddle import (apply_sign_branch, critical_data, kappa1_via_saddle,
                     predict, volume_cs)

_I = mpc(0, 1)

ENV_PREFIX = "TWISTJONES_"
SERIAL_DIGITS = 40


# ---------------------------------------------------------------------------
# Configuration

@dataclass
class Config:
    bits: int = 256
    cache_dir: str = os.path.expanduser("~/.cache/twistjones")
    workers: int = 1


def load_config(path=None):
    """key=value config file, overridden by TWISTJONES_* environment vars."""
    cfg = Config()
    path = path or os.environ.get(ENV_PREFIX + "CONFIG") \
        or os.path.expanduser("~/.twistjones.conf")
    if os.path.exists(path):
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or "=" not in line:
                    continue
                key, _, val = line.partition("=")
                key = key.strip().lower()
                val = val.strip()
                if key == "bits":
                    cfg.bits = int(val)
                elif key == "cache_dir":
                    cfg.cache_dir = os.path.expanduser(val)
                elif key == "workers":
                    cfg.workers = int(val)
    for key in ("bits", "workers"):
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env:
            setattr(cfg, key, int(env))
    env = os.environ.get(ENV_PREFIX + "CACHE_DIR")
    if env:
        cfg.cache_dir = env
    return cfg


# ---------------------------------------------------------------------------
# Ratio data and least-squares expansion fit

@dataclass
class AsymptoticFit:
    p: int
    M: object
    Nlist: tuple
    d: int
    kappas: tuple
    residuals: tuple
    slope_d: object
    slope_err: object
    condition: object
    ratios: tuple
    sign_branch: int


def _jones_worker(args):
    """Top-level worker (picklable) evaluating one ladder point."""
    p, N, M, bits = args
    with mp.workprec(bits):
        root = RootSpec(N, INFINITY if M is None else M)
        val = jones(p, root)
    return (N, val)


def _ratio_ladder(p, M, Nlist, data, workers=1):
    """(N, denom, jones, prediction, ratio) rows at per-N policy precision."""
    vals = {}
    if workers > 1:
        payload = [(p, N, None if M == INFINITY else M,
                    max(mp.prec, bits_for(N)) + 32) for N in Nlist]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for N, val in pool.map(_jones_worker, payload):
                vals[N] = val
    rows = []
    for N in Nlist:
        bits = max(mp.prec, bits_for(N)) + 32
        with mp.workprec(bits):
            root = RootSpec(N, M)
            J = vals.get(N)
            if J is None:
                J = jones(p, root)
            pred = predict(p, root, data, d=0)
            ratio = J / pred.leading
        rows.append((N, round_once(root.denom), round_once(J),
                     round_once(pred.leading), round_once(ratio)))
    return rows


def _lstsq_complex(A, b):
    """Solve min ||A k - b|| by normal equations; returns (k, condition)."""
    rows = len(A)
    cols = len(A[0])
    AH_A = [[sum(mpmath.conj(A[r][i]) * A[r][j] for r in range(rows))
             for j in range(cols)] for i in range(cols)]
    AH_b = [sum(mpmath.conj(A[r][i]) * b[r] for r in range(rows))
            for i in range(cols)]
    Amat = mpmath.matrix(AH_A)
    bvec = mpmath.matrix(AH_b)
    sol = mpmath.lu_solve(Amat, bvec)
    sv = mpmath.svd_c(mpmath.matrix(A), compute_uv=False)
    smin = min(abs(s) for s in sv)
    smax = max(abs(s) for s in sv)
    cond = smax / smin if smin > 0 else mpf('inf')
    return [sol[i] for i in range(cols)], cond


def _slope_fit(xs, ys):
    """Least-squares slope with its standard error for log-log data."""
    n = len(xs)
    xbar = sum(xs) / n
    ybar = sum(ys) / n
    sxx = sum((x - xbar) ** 2 for x in xs)
    slope = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys)) / sxx
    intercept = ybar - slope * xbar
    if n > 2:
        resid = sum((y - intercept - slope * x) ** 2 for x, y in zip(xs, ys))
        err = mpmath.sqrt(resid / (n - 2) / sxx)
    else:
        err = mpf(0)
    return slope, err


def fit_expansion(p, M, Nlist, d, data=None, workers=1):
    """Fit jones/leading against 1 + sum kappa_i x^i, x = 2 pi i/denom.

    Resolves the omega sign branch by requiring the ratios to approach +1.
    """
    Nlist = tuple(sorted(Nlist))
    if len(Nlist) < d + 3:
        raise FitError(f"need |Nlist| >= d + 3 (got {len(Nlist)} for d={d})")
    if data is None:
        data = critical_data(p)
    rows = _ratio_ladder(p, M, Nlist, data, workers=workers)
    mean_re = sum(r[4].real for r in rows) / len(rows)
    sign = 1
    if mean_re < 0:
        sign = -1
        apply_sign_branch(data, -1)
        rows = [(N, D, J, -P, -R) for (N, D, J, P, R) in rows]
    xs = [2 * mp.pi * _I / row[1] for row in rows]
    bs = [row[4] - 1 for row in rows]
    if d == 0:
        kappas = ()
        residuals = [abs(b) for b in bs]
        cond = mpf(1)
    else:
        A = [[x ** i for i in range(1, d + 1)] for x in xs]
        kappas, cond = _lstsq_complex(A, bs)
        if cond > mpf('1e12'):
            raise FitError(
                f"Vandermonde condition {mpmath.nstr(cond, 4)} > 1e12; widen Nlist")
        residuals = []
        for x, b in zip(xs, bs):
            model = sum(k * x ** (i + 1) for i, k in enumerate(kappas))
            residuals.append(abs(b - model))
        kappas = tuple(round_once(k) for k in kappas)
    logs_x = [mpmath.log(row[1]) for row in rows]
    logs_r = [mpmath.log(r) if r > 0 else mpf('-inf') for r in residuals]
    slope, err = _slope_fit(logs_x, logs_r)
    return AsymptoticFit(
        p=p, M=M, Nlist=Nlist, d=d, kappas=tuple(kappas),
        residuals=tuple(round_once(r) for r in residuals),
        slope_d=round_once(slope), slope_err=round_once(err),
        condition=round_once(cond),
        ratios=tuple(round_once(r[4]) for r in rows),
        sign_branch=sign)


def growth_rate(p, M, Nlist, data=None):
    """Extrapolate (2 pi/denom) log J_N after removing the (3/2) log denom term.

    The log branch is unwrapped against the predicted phase; Neville
    extrapolation in 1/denom accelerates the sequence.  Returns a dict with
    the per-N sequence, the extrapolated limit, and the saddle comparison.
    """
    Nlist = tuple(sorted(Nlist))
    if data is None:
        data = critical_data(p)
    seq = []
    for N in Nlist:
        bits = max(mp.prec, bits_for(N)) + 32
        with mp.workprec(bits):
            root = RootSpec(N, M)
            D = root.denom
            J = jones(p, root)
            pred = predict(p, root, data, d=0)
            lp = principal_log(pred.leading)
            arg = mpmath.arg(J)
            k = mpmath.nint((lp.imag - arg) / (2 * mp.pi))
            logJ = mpc(mpmath.log(abs(J)), arg + 2 * mp.pi * k)
            y = (2 * mp.pi / D) * (logJ - mpf(3) / 2 * mpmath.log(D))
        seq.append((N, round_once(D), round_once(y)))
    # Neville to 1/D -> 0
    ws = [1 / row[1] for row in seq]
    tab = [row[2] for row in seq]
    n = len(tab)
    for order in range(1, n):
        tab = [(ws[i] * tab[i + 1] - ws[i + order] * tab[i])
               / (ws[i] - ws[i + order]) for i in range(n - order)]
    limit = round_once(tab[0])
    two_pi_zeta = 2 * mp.pi * data.zeta
    period = mp.pi ** 2
    im_ref = two_pi_zeta.imag - period * mpmath.floor(two_pi_zeta.imag / period + mpf(1) / 2)
    im_lim = limit.imag - period * mpmath.floor(limit.imag / period + mpf(1) / 2)
    return {
        "sequence": seq,
        "limit": limit,
        "re_deviation": round_once(abs(limit.real - two_pi_zeta.real)),
        "im_deviation_mod_pi2": round_once(abs(im_lim - im_ref)),
    }


# ---------------------------------------------------------------------------
# Reports

@dataclass
class ReportRecord:
    inputs: dict
    outputs: dict
    provenance: dict
    timestamp: str
    cache_hit: bool = False
    csv: str = ""


def _serialize(val):
    if isinstance(val, (mpc,)) or isinstance(val, complex):
        return {"re": mpmath.nstr(mpc(val).real, SERIAL_DIGITS),
                "im": mpmath.nstr(mpc(val).imag, SERIAL_DIGITS),
                "digits": SERIAL_DIGITS}
    if isinstance(val, mpf):
        return {"re": mpmath.nstr(val, SERIAL_DIGITS), "digits": SERIAL_DIGITS}
    if isinstance(val, (list, tuple)):
        return [_serialize(v) for v in val]
    if isinstance(val, dict):
        return {k: _serialize(v) for k, v in val.items()}
    return val


def _cache_key(inputs):
    blob = json.dumps(inputs, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _csv_rows(rows):
    header = "N,denom,jones_re,jones_im,prediction_re,prediction_im,ratio_re,ratio_im,residual"
    lines = [header]
    for (N, D, J, P, R) in rows:
        resid = abs(R - 1)
        lines.append(",".join([
            str(N), mpmath.nstr(D, 20),
            mpmath.nstr(J.real, SERIAL_DIGITS), mpmath.nstr(J.imag, SERIAL_DIGITS),
            mpmath.nstr(P.real, SERIAL_DIGITS), mpmath.nstr(P.imag, SERIAL_DIGITS),
            mpmath.nstr(R.real, SERIAL_DIGITS), mpmath.nstr(R.imag, SERIAL_DIGITS),
            mpmath.nstr(resid, 20),
        ]))
    return "\n".join(lines) + "\n"


def run_report(command, config=None):
    """Execute a command spec (dict) and persist/return its ReportRecord."""
    cfg = config or load_config()
    name = command.get("command")
    if name not in {"jones", "critical", "predict", "fit", "fourier", "volume", "growth"}:
        raise DomainError(f"unknown command {name!r}")
    inputs = dict(command)
    inputs["bits"] = int(command.get("bits", cfg.bits))
    inputs["version"] = __version__
    key = _cache_key(inputs)
    os.makedirs(cfg.cache_dir, exist_ok=True)
    path = os.path.join(cfg.cache_dir, key + ".json")
    if os.path.exists(path):
        with open(path) as fh:
            stored = json.load(fh)
        if stored.get("inputs") == _serialize(inputs):
            return ReportRecord(inputs=stored["inputs"], outputs=stored["outputs"],
                                provenance=stored["provenance"],
                                timestamp=stored["timestamp"], cache_hit=True,
                                csv=stored.get("csv", ""))
    with mp.workprec(inputs["bits"]):
        outputs, csv = _execute(name, command)
    record = ReportRecord(
        inputs=_serialize(inputs),
        outputs=_serialize(outputs),
        provenance={
            "version": __version__,
            "bits": inputs["bits"],
            "serial_digits": SERIAL_DIGITS,
        },
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        csv=csv,
    )
    payload = {
        "inputs": record.inputs, "outputs": record.outputs,
        "provenance": record.provenance, "timestamp": record.timestamp,
        "csv": record.csv,
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
    os.replace(tmp, path)
    return record


def _parse_M(raw):
    if raw in ("inf", "INF", "INFINITY", INFINITY, None):
        return INFINITY
    return int(raw)


def _execute(name, command):
    p = int(command.get("p", 6))
    csv = ""
    if name == "jones":
        root = RootSpec(int(command["N"]), _parse_M(command.get("M", 2)))
        val = jones(p, root, check=bool(command.get("check", False)))
        out = {"jones": val, "N": root.N, "M": str(command.get("M", 2))}
    elif name == "critical":
        data = critical_data(p)
        out = {
            "t0": data.t0, "s0": data.s0, "zeta": data.zeta,
            "zetaR": data.zetaR, "omega": data.omega,
            "hess_det": data.hess_det, "H": data.Hval,
            "newton_residual": data.newton_residual,
            "extra_basins": list(data.extra_basins),
        }
    elif name == "volume":
        data = critical_data(p)
        vol, cs = volume_cs(data)
        out = {"vol": vol, "cs": cs, "zeta": data.zeta}
    elif name == "predict":
        data = critical_data(p)
        root = RootSpec(int(command["N"]), _parse_M(command.get("M", 2)))
        pred = predict(p, root, data, d=int(command.get("d", 0)))
        out = {"leading": pred.leading, "x": pred.x}
    elif name == "fit":
        data = critical_data(p)
        Nlist = [int(x) for x in command["Nlist"]]
        M = _parse_M(command.get("M", 2))
        fit = fit_expansion(p, M, Nlist, int(command.get("d", 1)), data=data)
        rows = _ratio_ladder(p, M, fit.Nlist, data)
        csv = _csv_rows(rows)
        out = {
            "kappas": list(fit.kappas), "residuals": list(fit.residuals),
            "slope_d": fit.slope_d, "slope_err": fit.slope_err,
            "condition": fit.condition, "sign_branch": fit.sign_branch,
            "kappa1_saddle": kappa1_via_saddle(p, data, M) if fit.d >= 1 else None,
        }
    elif name == "growth":
        data = critical_data(p)
        Nlist = [int(x) for x in command["Nlist"]]
        out = growth_rate(p, _parse_M(command.get("M", INFINITY)), Nlist, data=data)
    elif name == "fourier":
        from .fourier import h_hat, h_tilde
        root = RootSpec(int(command["N"]), _parse_M(command.get("M", 2)))
        m = int(command.get("m", 0))
        n = int(command.get("n", 0))
        tol = mpf(str(command.get("tol", '1e-10')))
        coeff = (h_tilde if root.is_kashaev else h_hat)(m, n, p, root, tol=tol)
        out = {"m": m, "n": n, "value": coeff.value,
               "quad_error": coeff.quad_error, "grid": list(coeff.grid)}
    else:  # pragma: no cover
        raise DomainError(name)
    return out, csv
