"""Run configuration: scalar parameters shared by every scheme and harness."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .spectral import CutoffProfile, Grid

SCHEMES = ("nqs", "nts", "lie", "strang")


@dataclass
class SchemeConfig:
    """All scalar parameters governing a run.

    J = T / tau must be an integer; the stored tau is snapped to T / J so the
    product is exact in floating point.
    """

    scheme: str = "nqs"
    p: int = 3
    d: int = 1
    N: int = 3
    eps: float = 0.1
    tau: float = 0.01
    T: float = 1.0
    a: float = 0.05
    K: int = 512
    cutoff: str = "sharp"
    dealias: bool = False
    seed: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if self.p < 3 or self.p % 2 == 0:
            raise ConfigError(f"p must be odd >= 3, got {self.p}")
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if self.scheme == "nqs" and self.N > 4:
            raise ConfigError("the nested quadrature scheme supports N <= 4")
        if self.scheme == "nts" and self.d == 3 and self.N > 3:
            raise ConfigError("the nested Taylor scheme supports N <= 3 in dimension 3")
        if not (self.tau > 0 and self.T > 0):
            raise ConfigError("tau and T must be positive")
        j = self.T / self.tau
        if abs(j - round(j)) > 1e-9 * max(1.0, j) or round(j) < 1:
            raise ConfigError(f"tau={self.tau} does not divide T={self.T} into an integer step count")
        self.tau = self.T / round(j)

    @property
    def J(self) -> int:
        return round(self.T / self.tau)

    def grid(self) -> Grid:
        return Grid(self.d, self.a, self.K)

    def cutoff_profile(self) -> CutoffProfile:
        return CutoffProfile(self.cutoff)

    def with_(self, **kw) -> "SchemeConfig":
        return replace(self, **kw)

    def warn_if_outside_cfl(self):
        """Advisory only: full multiscale accuracy needs tau <= eps."""
        if self.scheme in ("nqs", "nts") and self.tau > self.eps:
            warnings.warn(
                f"tau={self.tau:g} exceeds eps={self.eps:g}; accuracy degrades in this regime",
                RuntimeWarning, stacklevel=2)

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme, "p": self.p, "d": self.d, "N": self.N,
            "eps": self.eps, "tau": self.tau, "T": self.T, "a": self.a,
            "K": self.K, "cutoff": self.cutoff, "dealias": self.dealias,
            "seed": self.seed,
        }


_FIELD_TYPES = {
    "scheme": str, "p": int, "d": int, "N": int, "eps": float, "tau": float,
    "T": float, "a": float, "K": int, "cutoff": str, "dealias": bool, "seed": int,
}


def _parse_value(key: str, raw: str):
    ty = _FIELD_TYPES[key]
    raw = raw.strip()
    if ty is bool:
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"cannot parse boolean {key}={raw!r}")
    if ty is int and key == "seed" and raw.lower() in ("none", ""):
        return None
    try:
        val = ty(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key}={raw!r} as {ty.__name__}") from exc
    return val


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines (# comments); keys mirror SchemeConfig fields."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        out[key] = _parse_value(key, raw)
    return out


def load_config(path, overrides: dict | None = None) -> SchemeConfig:
    with open(path, "r", encoding="utf-8") as fh:
        values = parse_config_text(fh.read())
    if overrides:
        values.update(overrides)
    return SchemeConfig(**values)
