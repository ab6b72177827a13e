"""Convergence harnesses, log-log slope fits and CSV emission.

CSV schemas (UTF-8, '.' decimal, 17 significant digits):

    convergence: abscissa,channel,error
    spectrum:    t,k_shell,n_rad

Every CSV gets a sidecar `<name>.meta.txt` listing the scheme, all
parameters, cutoff kind, seed and package version.  Sweep points can be
dispatched to a thread pool capped by the PICARD_NLS_THREADS environment
variable (default 1); results are always gathered in submission order, so
output files are byte-identical for identical configs.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .baselines import run_splitting
from .config import SchemeConfig
from .errors import ConfigError
from .nqs import nqs_iterate, nqs_reconstruct, run_nqs
from .nts import nts_iterate, nts_reconstruct, run_nts
from .oracles import GaussianOracleConfig, gaussian_initial, gaussian_oracle
from .spectral import l2_error


@dataclass
class ConvergenceRecord:
    """Errors of one channel over a strictly decreasing abscissa sweep."""

    abscissa: tuple
    channel: str
    errors: tuple
    slope: float | None

    def __post_init__(self):
        xs = np.asarray(self.abscissa)
        if len(xs) > 1 and not np.all(np.diff(xs) < 0):
            raise ConfigError("abscissas must be strictly decreasing")
        if np.any(np.asarray(self.errors) < 0):
            raise ConfigError("errors must be nonnegative")


def fit_loglog_slope(xs, ys, window=None) -> float | None:
    """Ordinary least squares slope of log(y) against log(x).

    `window` is an inclusive (lo, hi) range on x; returns None when fewer
    than two points survive (degenerate fit, flagged rather than faked)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sel = np.ones(len(xs), dtype=bool)
    if window is not None:
        lo, hi = window
        sel &= (xs >= lo * (1 - 1e-12)) & (xs <= hi * (1 + 1e-12))
    sel &= ys > 0
    if sel.sum() < 2:
        return None
    lx, ly = np.log(xs[sel]), np.log(ys[sel])
    lx = lx - lx.mean()
    return float(np.sum(lx * (ly - ly.mean())) / np.sum(lx * lx))


def map_ordered(fn, items):
    """Apply fn over sweep points, optionally threaded, preserving order."""
    workers = int(os.environ.get("PICARD_NLS_THREADS", "1") or "1")
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _vector_error(approx, exact) -> float:
    """L2 error of a gradient-like channel: root sum of component errors."""
    return float(np.sqrt(sum(l2_error(a, e) ** 2 for a, e in zip(approx, exact))))


_NQS_CHANNELS = ("u0", "u1", "u2")
_NTS_CHANNELS = ("u0", "u0_k1", "u0_k2", "u0_k3", "u0_k4", "u1", "u1_k1", "u1_k2", "u2")


def _nts_channel_value(state, name: str):
    n = int(name[1])
    k = int(name.split("_k")[1]) if "_k" in name else 0
    return nts_iterate(state, n, k)


def run_convergence_tau(base: SchemeConfig, tau_list, oracle_tau0: float | None = None,
                        inner_stride: int = 1):
    """Per tau: run the scheme to T from Gaussian data and record channel
    errors against the closed-form reference; fit log-log slopes."""
    tau_list = [float(t) for t in tau_list]
    taus = sorted(set(tau_list), reverse=True)
    if len(taus) != len(tau_list):
        raise ConfigError("tau list contains duplicates")
    if base.scheme == "nqs" and base.d == 1 and base.p == 5:
        case, channels = "quintic1d", _NQS_CHANNELS[:base.N]
    elif base.scheme == "nts" and base.d == 2 and base.p == 3:
        case, channels = "cubic2d", _NTS_CHANNELS
    else:
        raise ConfigError("no closed-form reference for this (scheme, d, p) combination")
    ocfg = GaussianOracleConfig(case=case, T=base.T, tau0=oracle_tau0, inner_stride=inner_stride)
    if ocfg.tau0 > min(taus) / 10.0 + 1e-15:
        raise ConfigError(
            f"oracle step tau0={ocfg.tau0:g} too coarse for the sweep (needs <= {min(taus) / 10:g})")
    grid = base.grid()
    oracle = gaussian_oracle(ocfg, grid)
    phi = gaussian_initial(grid)

    def one(tau):
        cfg = base.with_(tau=tau)
        errs = {}
        if cfg.scheme == "nqs":
            state = run_nqs(phi, cfg)
            for n, name in enumerate(channels):
                errs[name] = l2_error(nqs_iterate(state, n), oracle.fields[name])
        else:
            state = run_nts(phi, cfg, path="generic")
            for name in channels:
                val = _nts_channel_value(state, name)
                ref = oracle.fields[name]
                errs[name] = (_vector_error(val, ref) if isinstance(ref, tuple)
                              else l2_error(val, ref))
        return errs

    rows = map_ordered(one, taus)
    records = []
    for name in channels:
        errors = tuple(r[name] for r in rows)
        records.append(ConvergenceRecord(tuple(taus), name, errors,
                                         fit_loglog_slope(taus, errors)))
    return records, oracle.meta


def run_convergence_eps(base: SchemeConfig, eps_list, tau_ref: float = 1e-4):
    """Errors of the reconstruction and of Lie splitting against a fine
    Strang reference, per eps.  The multiscale iterates are eps-free and
    computed once."""
    epss = sorted(set(float(e) for e in eps_list), reverse=True)
    grid = base.grid()
    phi = gaussian_initial(grid)
    if base.scheme == "nqs":
        state = run_nqs(phi, base.with_(eps=max(epss)))
        reconstruct = lambda e: nqs_reconstruct(state, e)
        label = "E_NQS"
    elif base.scheme == "nts":
        state = run_nts(phi, base.with_(eps=max(epss)), path="generic")
        reconstruct = lambda e: nts_reconstruct(state, e)
        label = "E_NTS"
    else:
        raise ConfigError("eps sweep drives the nqs or nts scheme")

    def one(eps):
        ref_cfg = base.with_(scheme="strang", eps=eps, tau=tau_ref)
        u_ref = run_splitting(phi, ref_cfg, kind="strang")
        lie_cfg = base.with_(scheme="lie", eps=eps)
        u_lie = run_splitting(phi, lie_cfg, kind="lie")
        return (l2_error(u_ref, reconstruct(eps)), l2_error(u_ref, u_lie))

    rows = map_ordered(one, epss)
    rec_scheme = ConvergenceRecord(tuple(epss), label, tuple(r[0] for r in rows),
                                   fit_loglog_slope(epss, [r[0] for r in rows]))
    rec_lie = ConvergenceRecord(tuple(epss), "E_LS", tuple(r[1] for r in rows),
                                fit_loglog_slope(epss, [r[1] for r in rows]))
    return [rec_scheme, rec_lie]


# ---------------------------------------------------------------------------
# desk-scale experiment presets (paper-scale variants ship as config files)
# ---------------------------------------------------------------------------

def quintic1d_base(N: int = 3, tau: float = 0.01) -> SchemeConfig:
    return SchemeConfig(scheme="nqs", p=5, d=1, N=N, eps=0.1, tau=tau, T=1.0,
                        a=0.05, K=512)

def cubic2d_tau_base(K: int = 128) -> SchemeConfig:
    return SchemeConfig(scheme="nts", p=3, d=2, N=4, eps=0.1, tau=0.05, T=0.1,
                        a=1.0 / 6.0, K=K)

def cubic2d_eps_base(K: int = 128, tau: float = 0.01) -> SchemeConfig:
    return SchemeConfig(scheme="nts", p=3, d=2, N=4, eps=0.1, tau=tau, T=1.0,
                        a=1.0 / 3.0, K=K)

DEFAULT_TAU_LIST = (0.1, 0.05, 0.025, 0.0125)
# the 2D sweep stays above the reference-quadrature bias floor of the
# pinned tau0 = 1e-3 double integral (J = 1, 2, 3, 4 over T = 0.1)
CUBIC2D_TAU_LIST = (0.1, 0.05, 0.1 / 3.0, 0.025)
DEFAULT_EPS_LIST = tuple(np.geomspace(1.0, 1e-4, 17))


# ---------------------------------------------------------------------------
# CSV + sidecar emission
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.16e}"


def write_convergence_csv(path, records) -> None:
    lines = ["abscissa,channel,error"]
    for rec in records:
        for x, e in zip(rec.abscissa, rec.errors):
            lines.append(f"{_fmt(x)},{rec.channel},{_fmt(e)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_spectrum_csv(path, records) -> None:
    lines = ["t,k_shell,n_rad"]
    for rec in records:
        for k, v in zip(rec.k_shell, rec.n_rad):
            lines.append(f"{_fmt(rec.t)},{_fmt(k)},{_fmt(v)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_sidecar(path, meta: dict) -> None:
    lines = [f"version = {__version__}"]
    for key in sorted(meta):
        lines.append(f"{key} = {meta[key]}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
