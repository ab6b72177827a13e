"""Random-phase initial data and radial wave-action spectrum diagnostics.

Torus convention: side 2*pi*L (grid scale a = 1/L), so the mode lattice is
(1/L) * Z^2.  Radial shells have thickness 2*pi/L, and the spectral mean
k_s and width sigma of the initial law are measured in shell units

    kappa = |xi| * L / (2*pi),

i.e. the law peaks on the k_s-th shell.  Mode amplitudes are reported in
coefficient units: u(x) = sum_k u_k exp(i k.x), the unitary-FFT data
divided by K^(d/2).

The spectrum sums |u1_k|^2 + 2*Re(conj(u0_k) * u2_k) over shells and scales
by L / (2*pi); it contains no power of the nonlinearity strength, so it is
the same for every eps at readout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SchemeConfig
from .errors import ConfigError, ContractViolationError
from .nqs import init_nqs, nqs_iterate, nqs_step
from .spectral import FREQUENCY, Grid, SpectralField, to_frequency


@dataclass
class RandomPhaseSpec:
    """Deterministic moduli sqrt(phi(kappa)) with i.i.d. uniform phases.

    phi(kappa) = exp(-(kappa - k_s)^2 / sigma^2) / (L^2 kappa^2), with
    kappa^2 read as 1 at the zero mode; kappa, k_s and sigma in shell units."""

    L: float
    k_s: float = 15.0
    sigma: float = 1.0
    seed: int = 0

    def grid(self, K: int, d: int = 2) -> Grid:
        return Grid(d, 1.0 / self.L, K)

    def amplitude_squared(self, kappa: np.ndarray) -> np.ndarray:
        ksq = np.where(kappa == 0.0, 1.0, kappa**2)
        return np.exp(-((kappa - self.k_s) ** 2) / self.sigma**2) / (self.L**2 * ksq)


def shell_coordinate(grid: Grid, L: float) -> np.ndarray:
    """kappa = |xi| L / (2 pi) on the full lattice."""
    mesh = grid.freq_mesh()
    return np.sqrt(sum(c**2 for c in mesh)) * L / (2.0 * np.pi)


def rp_initial_data(spec: RandomPhaseSpec, grid: Grid) -> SpectralField:
    """Frequency-space field with deterministic moduli and seeded phases."""
    if abs(grid.a * spec.L - 1.0) > 1e-12:
        raise ContractViolationError(
            f"grid scale a={grid.a:g} incompatible with the (1/L) lattice of L={spec.L:g}")
    kappa = shell_coordinate(grid, spec.L)
    moduli = np.sqrt(spec.amplitude_squared(kappa))
    rng = np.random.Generator(np.random.Philox(spec.seed))
    theta = 2.0 * np.pi * rng.random(grid.shape)
    data = moduli * np.exp(1j * theta) * grid.K ** (grid.d / 2.0)
    return SpectralField(grid, data, FREQUENCY)


def fourier_amplitudes(f: SpectralField) -> np.ndarray:
    """Coefficient-unit amplitudes u_k from a field in either representation."""
    fh = f if f.repr == FREQUENCY else to_frequency(f)
    return fh.data / f.grid.K ** (f.grid.d / 2.0)


@dataclass
class SpectrumRecord:
    t: float
    k_shell: np.ndarray
    n_rad: np.ndarray


def shell_index(grid: Grid, L: float) -> np.ndarray:
    """floor(|k| L / (2 pi) + 1/2); the lattice never hits the half-integer
    boundary exactly, so the round direction is immaterial there."""
    return np.floor(shell_coordinate(grid, L) + 0.5).astype(int)


def radial_spectrum(u0: SpectralField, u1: SpectralField, u2: SpectralField,
                    L: float, t: float = 0.0) -> SpectrumRecord:
    """Shell sums of |u1_k|^2 + 2 Re(conj(u0_k) u2_k), scaled by L / (2 pi)."""
    grid = u0.grid
    for f in (u0, u1, u2):
        if f.grid != grid:
            raise ContractViolationError("spectrum inputs must share one grid")
        if f.repr != FREQUENCY:
            raise ContractViolationError("spectrum inputs must be in frequency representation")
    a0 = fourier_amplitudes(u0)
    a1 = fourier_amplitudes(u1)
    a2 = fourier_amplitudes(u2)
    density = np.abs(a1) ** 2 + 2.0 * np.real(np.conj(a0) * a2)
    idx = shell_index(grid, L)
    n_rad = (L / (2.0 * np.pi)) * np.bincount(idx.ravel(), weights=density.ravel())
    shells = np.arange(len(n_rad)) * (2.0 * np.pi / L)
    return SpectrumRecord(t=t, k_shell=shells, n_rad=n_rad)


def first_order_diagnostic(u0: SpectralField, u1: SpectralField) -> tuple:
    """(norm of Re(conj(u0_k) u1_k), norm of |u0_k|^2), both in mode units."""
    a0 = fourier_amplitudes(u0)
    a1 = fourier_amplitudes(u1)
    cross = np.real(np.conj(a0) * a1)
    return float(np.sqrt(np.sum(cross**2))), float(np.sqrt(np.sum(np.abs(a0) ** 4)))


def footprint_estimate(K: int, d: int, n_fields: int = 16) -> int:
    """Rough peak memory of a run in bytes (complex128 state + work arrays)."""
    return K**d * 16 * n_fields


@dataclass
class TurbulenceResult:
    records: list
    diagnostics: list          # (t, first-order norm, eps0 magnitude)
    diagnostic_max: float
    meta: dict


def turbulence_run(cfg: SchemeConfig, spec: RandomPhaseSpec,
                   record_interval: float = 2.0,
                   max_bytes: int = 16 * 1024**3) -> TurbulenceResult:
    """Drive the N=3 cubic scheme from random-phase data, recording spectra.

    Spectra and the first-order diagnostic are built from the raw iterates,
    so the recorded values do not depend on cfg.eps."""
    if cfg.scheme != "nqs" or cfg.N != 3 or cfg.p != 3 or cfg.d != 2:
        raise ConfigError("turbulence_run drives the nested quadrature scheme with N=3, p=3, d=2")
    need = footprint_estimate(cfg.K, cfg.d)
    if need > max_bytes:
        raise ConfigError(
            f"estimated footprint {need / 1024**3:.1f} GiB exceeds the {max_bytes / 1024**3:.1f} GiB guard")
    grid = spec.grid(cfg.K, cfg.d)
    if abs(grid.a - cfg.a) > 1e-12:
        raise ConfigError(f"cfg.a={cfg.a:g} disagrees with the lattice scale 1/L={grid.a:g}")
    phi = rp_initial_data(spec, grid)

    every = max(1, round(record_interval / cfg.tau))
    records = []
    diagnostics = []

    def snapshot(state):
        t = state.j * cfg.tau
        u0 = to_frequency(nqs_iterate(state, 0))
        u1 = to_frequency(nqs_iterate(state, 1))
        u2 = to_frequency(nqs_iterate(state, 2))
        records.append(radial_spectrum(u0, u1, u2, spec.L, t=t))
        diag, base = first_order_diagnostic(u0, u1)
        diagnostics.append((t, diag, base))

    state = init_nqs(phi, cfg)
    snapshot(state)
    for j in range(cfg.J):
        state = nqs_step(state)
        if (j + 1) % every == 0 or j + 1 == cfg.J:
            snapshot(state)

    meta = dict(cfg.as_dict())
    meta.update({"L": spec.L, "k_s": spec.k_s, "sigma": spec.sigma,
                 "rng": "philox", "seed": spec.seed,
                 "record_interval": record_interval,
                 "footprint_bytes": need})
    diag_max = max(d for _, d, _ in diagnostics)
    return TurbulenceResult(records=records, diagnostics=diagnostics,
                            diagnostic_max=diag_max, meta=meta)
