"""Geometry, path loss, superposition and transmit-power laws.

Alice sits at ``(-d_AB/2, 0)``, Bob at ``(+d_AB/2, 0)`` and Eve on the
circle of radius ``r_E`` at angle ``theta``.  Powers are linear SNRs at
unit distance; the receive gains are folded into that normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid geometry, power-law or classifier parameters."""


class ContractViolation(RuntimeError):
    """Raised when a computed quantity breaks a documented invariant."""


INCOHERENT = "incoherent"
COHERENT = "coherent"


def db_to_lin(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def lin_to_db(x: float) -> float:
    if x <= 0.0:
        return -math.inf
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class GeometryConfig:
    d_ab: float
    r_e: float
    theta: float
    alpha: float = 2.0

    def __post_init__(self):
        if not (self.d_ab > 0 and math.isfinite(self.d_ab)):
            raise ConfigurationError(f"d_ab must be positive, got {self.d_ab}")
        if not self.r_e >= self.d_ab / 2:
            raise ConfigurationError(
                f"r_e={self.r_e} must be at least d_ab/2={self.d_ab / 2}")
        if not self.alpha > 0:
            raise ConfigurationError(f"alpha must be positive, got {self.alpha}")
        if not math.isfinite(self.theta):
            raise ConfigurationError("theta must be finite")

    @property
    def d_ae(self) -> float:
        return distances(self)[0]

    @property
    def d_be(self) -> float:
        return distances(self)[1]

    def mirrored(self) -> "GeometryConfig":
        """Geometry with Eve reflected across the y-axis (A and B swap)."""
        return GeometryConfig(self.d_ab, self.r_e, math.pi - self.theta, self.alpha)


def distances(geom: GeometryConfig) -> tuple[float, float]:
    """Return ``(d_AE, d_BE)`` by the law of cosines."""
    base = geom.r_e ** 2 + geom.d_ab ** 2 / 4.0
    cross = geom.r_e * geom.d_ab * math.cos(geom.theta)
    d_ae = math.sqrt(max(base + cross, 0.0))
    d_be = math.sqrt(max(base - cross, 0.0))
    if d_ae <= 0 or d_be <= 0:
        raise ConfigurationError("Eve coincides with a legitimate node")
    return d_ae, d_be


def received_power(rho: float, d: float, alpha: float) -> float:
    if d <= 0:
        raise ConfigurationError(f"distance must be positive, got {d}")
    if rho < 0:
        raise ConfigurationError(f"power must be nonnegative, got {rho}")
    return rho / d ** alpha


def superpose(p_a: float, p_b: float, mode: str = INCOHERENT,
              phase_diff: float = 0.0, sign_product: int = 1) -> float:
    """Power observed when both amplitudes add at the receiver.

    In coherent mode the cross term is ``2 s sqrt(p_a p_b) cos(phase_diff)``
    with ``s`` the product of the two binary data signs.
    """
    if p_a < 0 or p_b < 0:
        raise ConfigurationError("powers must be nonnegative")
    if mode == INCOHERENT:
        return p_a + p_b
    if mode != COHERENT:
        raise ConfigurationError(f"unknown superposition mode {mode!r}")
    total = p_a + p_b + 2.0 * sign_product * math.sqrt(p_a * p_b) * math.cos(phase_diff)
    return max(total, 0.0)


def distance_ratio_from_power_gap(gap_db: float, alpha: float = 2.0) -> float:
    """Distance ratio ``d_min/d_max`` whose path-loss difference is ``gap_db``."""
    if gap_db < 0:
        raise ConfigurationError("gap_db must be nonnegative")
    return 10.0 ** (-gap_db / (10.0 * alpha))


@dataclass(frozen=True)
class ChannelConfig:
    superposition_mode: str = INCOHERENT
    wave_number: float = 0.0
    eve_noiseless: bool = True
    legit_noise_variance: float = 1.0
    eve_noise_variance: float = 1.0
    silence_floor_db: float = -100.0

    def __post_init__(self):
        if self.superposition_mode not in (INCOHERENT, COHERENT):
            raise ConfigurationError(
                f"superposition_mode must be incoherent or coherent, got "
                f"{self.superposition_mode!r}")
        if not self.wave_number >= 0:
            raise ConfigurationError("wave_number must be >= 0")
        if not self.legit_noise_variance > 0:
            raise ConfigurationError("legit_noise_variance must be > 0")
        if not self.eve_noise_variance > 0:
            raise ConfigurationError("eve_noise_variance must be > 0")

    def phase_diff(self, geom: GeometryConfig) -> float:
        d_ae, d_be = distances(geom)
        return self.wave_number * (d_ae - d_be)

    @property
    def silence_floor(self) -> float:
        """Linear observed power at or below which Eve declares silence."""
        return 0.0 if self.eve_noiseless else db_to_lin(self.silence_floor_db)


UNIFORM = "uniform-linear"
DISCRETE = "discrete-levels"


@dataclass(frozen=True)
class PowerDistribution:
    """Transmit-power law, either uniform in linear power or discrete levels.

    Use :meth:`uniform` and :meth:`discrete` rather than the raw constructor.
    """

    kind: str
    rho_min: float = 0.0
    rho_max: float = 0.0
    levels: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()
    _cum: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind == UNIFORM:
            if not (0 < self.rho_min <= self.rho_max and math.isfinite(self.rho_max)):
                raise ConfigurationError(
                    f"uniform law needs 0 < rho_min <= rho_max, got "
                    f"[{self.rho_min}, {self.rho_max}]")
        elif self.kind == DISCRETE:
            if not self.levels or len(self.levels) != len(self.probs):
                raise ConfigurationError("discrete law needs matching levels and probs")
            if any(not (lv > 0 and math.isfinite(lv)) for lv in self.levels):
                raise ConfigurationError("discrete levels must be positive")
            if any(p < 0 for p in self.probs):
                raise ConfigurationError("probabilities must be nonnegative")
            if abs(math.fsum(self.probs) - 1.0) > 1e-12:
                raise ConfigurationError(
                    f"probabilities sum to {math.fsum(self.probs)}, not 1")
            object.__setattr__(self, "_cum", tuple(np.cumsum(self.probs)))
        else:
            raise ConfigurationError(f"unknown power law kind {self.kind!r}")

    @classmethod
    def uniform(cls, rho_min: float, rho_max: float) -> "PowerDistribution":
        return cls(UNIFORM, rho_min=float(rho_min), rho_max=float(rho_max))

    @classmethod
    def uniform_db(cls, lo_db: float, hi_db: float) -> "PowerDistribution":
        return cls.uniform(db_to_lin(lo_db), db_to_lin(hi_db))

    @classmethod
    def discrete(cls, levels: Sequence[float],
                 probs: Sequence[float] | None = None) -> "PowerDistribution":
        levels = tuple(float(v) for v in levels)
        if probs is None:
            probs = [1.0 / len(levels)] * len(levels)
        return cls(DISCRETE, levels=levels, probs=tuple(float(p) for p in probs))

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == UNIFORM:
            return self.rho_min, self.rho_max
        return min(self.levels), max(self.levels)

    @property
    def mean(self) -> float:
        if self.kind == UNIFORM:
            return 0.5 * (self.rho_min + self.rho_max)
        return float(np.dot(self.levels, self.probs))

    def components(self) -> list[tuple[float, float, float]]:
        """Mixture view as ``(weight, lo, hi)``; ``lo == hi`` is a point mass."""
        if self.kind == UNIFORM:
            return [(1.0, self.rho_min, self.rho_max)]
        return [(p, lv, lv) for lv, p in zip(self.levels, self.probs) if p > 0]

    def sample_array(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == UNIFORM:
            u = rng.random(n)
            return self.rho_min + (self.rho_max - self.rho_min) * u
        u = rng.random(n)
        idx = np.searchsorted(np.asarray(self._cum), u, side="right")
        idx = np.minimum(idx, len(self.levels) - 1)
        return np.asarray(self.levels)[idx]


def sample_power(dist: PowerDistribution, rng: np.random.Generator) -> float:
    return float(dist.sample_array(rng, 1)[0])
