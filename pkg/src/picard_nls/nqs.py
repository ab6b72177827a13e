"""Nested quadrature scheme: Newton-Cotes rules of decreasing degree per level.

Level n (1 <= n <= N-1) is advanced with the composite Newton-Cotes rule of
degree ``NEWTON_COTES_DEGREE[N - n]``:

    N - n = 1  ->  left rectangle   (degree 0)
    N - n = 2  ->  trapezoid        (degree 1)
    N - n = 3  ->  Simpson          (degree 2, needs the half-step grid)

U_0 is a pure filtered flow kept on the half-step grid (Simpson evaluates
its forcing at midpoints); full-grid values are the even half-grid entries
by construction, so grid nesting is exact.

Accumulators are stored in the interaction picture V_n = S_tau(-t_j) U_n and
updated incrementally; U_n is materialized once per step with a single flow
application.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .config import SchemeConfig
from .errors import ConfigError, ContractViolationError
from .picard import IterateStack, nonlinear_force
from .spectral import (PHYSICAL, CutoffProfile, Grid, SpectralField,
                       projector_symbol)

NEWTON_COTES_DEGREE = {1: 0, 2: 1, 3: 2}  # rule degree used for level n, keyed by N - n


@dataclass(frozen=True)
class NewtonCotesRule:
    """Unit-interval Newton-Cotes weights; the step factor tau is applied by the stepper."""

    m: int
    weights: tuple

    def __post_init__(self):
        assert abs(sum(self.weights) - 1.0) < 1e-15


def newton_cotes_weights(m: int) -> NewtonCotesRule:
    if m == 0:
        return NewtonCotesRule(0, (1.0,))
    if m == 1:
        return NewtonCotesRule(1, (0.5, 0.5))
    if m == 2:
        return NewtonCotesRule(2, (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0))
    raise ContractViolationError(f"unsupported Newton-Cotes degree {m}; only 0, 1, 2 are used")


class _Kit:
    """Cached frequency-space symbols for one (grid, tau, cutoff)."""

    def __init__(self, grid: Grid, tau: float, cutoff: CutoffProfile):
        self.grid = grid
        self.tau = tau
        self.xi2 = grid.xi_squared()
        self.mask = projector_symbol(grid, tau, cutoff)
        self.sym_half = self.mask * np.exp(-0.5j * tau * self.xi2)
        self.sym_full = self.mask * np.exp(-1j * tau * self.xi2)
        self._phases: dict = {}

    def phase(self, t: float) -> np.ndarray:
        """exp(-i t |xi|^2), memoized per t."""
        out = self._phases.get(t)
        if out is None:
            out = np.exp(-1j * t * self.xi2)
            self._phases[t] = out
            if len(self._phases) > 8:
                self._phases.pop(next(iter(self._phases)))
        return out

    def flow(self, data_freq: np.ndarray, t: float) -> np.ndarray:
        """Filtered flow S_tau(t) on raw frequency data."""
        return data_freq * self.mask * self.phase(t)

    def fft(self, data_phys):
        return np.fft.fftn(data_phys, norm="ortho")

    def ifft(self, data_freq):
        return np.fft.ifftn(data_freq, norm="ortho")


@dataclass
class NqsState:
    """Per-step state: U_0 on the half grid plus interaction-picture accumulators."""

    grid: Grid
    cfg: SchemeConfig
    kit: _Kit
    j: int
    u0_freq: np.ndarray          # U_0 at t_j (even half-grid entry), frequency repr
    u0_phys: np.ndarray          # same value in physical repr
    u_phys: list                 # materialized U_n at t_j (physical), n = 1..N-1
    v_freq: list                 # accumulators V_n (frequency), n = 1..N-1

    @property
    def t(self) -> float:
        return self.j * self.cfg.tau


def init_nqs(phi: SpectralField, cfg: SchemeConfig) -> NqsState:
    if cfg.N > 4:
        raise ConfigError("the nested quadrature scheme supports N <= 4")
    if cfg.tau > cfg.eps:
        warnings.warn(
            f"tau={cfg.tau:g} exceeds eps={cfg.eps:g}; multiscale accuracy degrades",
            RuntimeWarning, stacklevel=2)
    grid = phi.grid
    kit = _Kit(grid, cfg.tau, cfg.cutoff_profile())
    phi_phys = phi.data if phi.repr == PHYSICAL else kit.ifft(phi.data)
    nlev = cfg.N - 1
    zeros = lambda: np.zeros(grid.shape, dtype=complex)
    return NqsState(
        grid=grid, cfg=cfg, kit=kit, j=0,
        u0_freq=kit.fft(phi_phys), u0_phys=phi_phys.copy(),
        u_phys=[zeros() for _ in range(nlev)],
        v_freq=[zeros() for _ in range(nlev)],
    )


def _force(state: NqsState, n: int, u0_phys: np.ndarray, u_phys: list) -> np.ndarray:
    """F_n evaluated pointwise from physical iterate values."""
    p = state.cfg.p
    if state.cfg.dealias or n >= 3:
        fields = [SpectralField(state.grid, u0_phys, PHYSICAL)]
        fields += [SpectralField(state.grid, u_phys[i], PHYSICAL) for i in range(n - 1)]
        stack = IterateStack(p, fields)
        return nonlinear_force(n, stack, dealias=state.cfg.dealias).data
    if n == 1:
        return np.abs(u0_phys) ** (p - 1) * u0_phys
    if n == 2:
        u1 = u_phys[0]
        mod = np.abs(u0_phys)
        return (0.5 * (p + 1) * mod ** (p - 1) * u1
                + 0.5 * (p - 1) * mod ** (p - 3) * u0_phys**2 * np.conj(u1))
    raise AssertionError("unreachable")


def nqs_step(state: NqsState) -> NqsState:
    """Advance one step, levels updated in the order U_0, U_1, ..., U_{N-1}."""
    cfg, kit = state.cfg, state.kit
    tau, N = cfg.tau, cfg.N
    t_j = state.j * tau
    t_half = t_j + 0.5 * tau
    t_next = t_j + tau

    u0_half = state.u0_freq * kit.sym_half
    u0_next = u0_half * kit.sym_half
    u0_next_phys = kit.ifft(u0_next)
    u0_half_phys = kit.ifft(u0_half) if N >= 4 else None

    v_new = [v.copy() for v in state.v_freq]
    u_phys_next = [None] * (N - 1)

    def back_flow(data_phys, t):
        # S_tau(-t) applied to a physical-space forcing
        return kit.flow(kit.fft(data_phys), -t)

    for n in range(1, N):
        m = NEWTON_COTES_DEGREE[N - n]
        f_left = _force(state, n, state.u0_phys, state.u_phys)
        if m == 0:
            incr = tau * back_flow(f_left, t_j)
        elif m == 1:
            f_right = _force(state, n, u0_next_phys, u_phys_next)
            incr = 0.5 * tau * (back_flow(f_left, t_j) + back_flow(f_right, t_next))
        else:
            # Simpson only ever applies to the lowest level, whose forcing
            # depends on U_0 alone and so is available on the half grid.
            assert n == 1
            f_mid = _force(state, n, u0_half_phys, u_phys_next)
            f_right = _force(state, n, u0_next_phys, u_phys_next)
            incr = tau * (back_flow(f_left, t_j) / 6.0
                          + back_flow(f_mid, t_half) * (2.0 / 3.0)
                          + back_flow(f_right, t_next) / 6.0)
        v_new[n - 1] = v_new[n - 1] + (-1j) * incr
        u_phys_next[n - 1] = kit.ifft(kit.flow(v_new[n - 1], t_next))

    return NqsState(grid=state.grid, cfg=cfg, kit=kit, j=state.j + 1,
                    u0_freq=u0_next, u0_phys=u0_next_phys,
                    u_phys=u_phys_next, v_freq=v_new)


def nqs_iterate(state: NqsState, n: int) -> SpectralField:
    """Materialized iterate U_n at the current step (physical representation)."""
    if n < 0 or n >= state.cfg.N:
        raise ContractViolationError(f"iterate index {n} outside 0..{state.cfg.N - 1}")
    data = state.u0_phys if n == 0 else state.u_phys[n - 1]
    return SpectralField(state.grid, data.copy(), PHYSICAL)


def nqs_reconstruct(state: NqsState, eps: float) -> SpectralField:
    """Sum of eps^n U_n over the computed levels."""
    out = state.u0_phys.copy()
    for n in range(1, state.cfg.N):
        out = out + eps**n * state.u_phys[n - 1]
    return SpectralField(state.grid, out, PHYSICAL)


def run_nqs(phi: SpectralField, cfg: SchemeConfig, callback=None) -> NqsState:
    """Step from t=0 to t=T; callback(state) fires after init and every step."""
    state = init_nqs(phi, cfg)
    if callback is not None:
        callback(state)
    for _ in range(cfg.J):
        state = nqs_step(state)
        if callback is not None:
            callback(state)
    return state
