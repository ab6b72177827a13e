"""Nonlinear forcings driving the cascade of linear problems.

The solution is expanded in powers of the nonlinearity strength; the n-th
term solves a linear problem forced by products of lower-order terms:

    F_n = sum over ordered p-tuples (n_1, ..., n_p), n_1 + ... + n_p = n - 1,
          of  U_{n_1} * conj(U_{n_2}) * U_{n_3} * ... * U_{n_p}

with the complex conjugate applied to the (p-1)/2 even positions.  Products
are formed pointwise in physical space (plain pseudospectral practice); an
optional 2/3-rule spectral mask is available for robustness studies.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import ContractViolationError
from .spectral import FREQUENCY, PHYSICAL, Grid, SpectralField, _in_frequency, _match_repr


@dataclass
class IterateStack:
    """Ordered iterates U_0 ... U_{n-1} sharing one grid, physical repr."""

    p: int
    entries: list

    def __post_init__(self):
        if self.p < 3 or self.p % 2 == 0:
            raise ContractViolationError(f"nonlinearity exponent p must be odd >= 3, got {self.p}")
        grids = {e.grid for e in self.entries}
        if len(grids) > 1:
            raise ContractViolationError("all stack entries must share one grid")
        for e in self.entries:
            if e.repr != PHYSICAL:
                raise ContractViolationError("stack entries must be in physical representation")


def compositions(total: int, parts: int):
    """All ordered tuples of `parts` nonnegative integers summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in compositions(total - head, parts - 1):
            yield (head,) + tail


def dealias_mask(grid: Grid) -> np.ndarray:
    """2/3-rule mask: keep modes with |index| < K/3 in every direction."""
    keep1d = np.abs(np.fft.fftfreq(grid.K, d=1.0 / grid.K)) < grid.K / 3.0
    mask = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.d):
        shape = [1] * grid.d
        shape[axis] = grid.K
        mask &= keep1d.reshape(shape)
    return mask.astype(float)


def apply_dealias(f: SpectralField) -> SpectralField:
    fh = _in_frequency(f)
    out = SpectralField(f.grid, fh.data * dealias_mask(f.grid), FREQUENCY)
    return _match_repr(out, f.repr)


def nonlinear_force(n: int, stack: IterateStack, dealias: bool = False) -> SpectralField:
    """Forcing of order n from the iterates U_0 .. U_{n-1}.

    Real-homogeneous of degree p in the stack.  The ordered-tuple count is
    asserted against the closed-form composition count.
    """
    if n < 1 or n > len(stack.entries):
        raise ContractViolationError(
            f"nonlinear_force(n={n}) needs iterates U_0..U_{n - 1}, stack has {len(stack.entries)}")
    p = stack.p
    entries = stack.entries
    if dealias:
        entries = [apply_dealias(e) for e in entries]
    grid = entries[0].grid
    arrays = [e.data for e in entries]
    total = np.zeros(grid.shape, dtype=complex)
    count = 0
    for tup in compositions(n - 1, p):
        term = arrays[tup[0]].copy()
        for pos in range(1, p):
            factor = arrays[tup[pos]]
            # even positions (1-indexed: 2, 4, ..., p-1) carry the conjugate
            term *= np.conj(factor) if (pos % 2 == 1) else factor
        total += term
        count += 1
    assert count == comb(n - 1 + p - 1, p - 1)
    out = SpectralField(grid, total, PHYSICAL)
    if dealias:
        out = apply_dealias(out)
    return out
