"""Physical constants, array layout and angular grid types."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ArrayConfig:
    """Planar reflectarray layout with a fixed per-element amplitude."""

    nx: int = 30
    ny: int = 30
    dx: float = 0.003
    dy: float = 0.003
    frequency: float = 28e9
    amplitude: float = 0.7
    bits: int = 2

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValidationError(f"array must have at least one element, got {self.nx}x{self.ny}")
        if self.dx <= 0 or self.dy <= 0:
            raise ValidationError("element pitch must be positive")
        if self.frequency <= 0:
            raise ValidationError("frequency must be positive")
        if not 0 < self.amplitude <= 1:
            raise ValidationError(f"amplitude must lie in (0, 1], got {self.amplitude}")
        if self.bits < 1:
            raise ValidationError(f"bits must be >= 1, got {self.bits}")

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Direction:
    """A direction in degrees: polar angle theta in [0, 90], azimuth phi in [0, 180]."""

    theta_deg: float
    phi_deg: float

    def __post_init__(self):
        if not 0.0 <= self.theta_deg <= 90.0:
            raise ValidationError(f"theta_deg must lie in [0, 90], got {self.theta_deg}")
        if not 0.0 <= self.phi_deg <= 180.0:
            raise ValidationError(f"phi_deg must lie in [0, 180], got {self.phi_deg}")

    @property
    def theta(self) -> float:
        return math.radians(self.theta_deg)

    @property
    def phi(self) -> float:
        return math.radians(self.phi_deg)

    def to_dict(self) -> dict:
        return {"theta_deg": self.theta_deg, "phi_deg": self.phi_deg}


@dataclass(frozen=True)
class FarFieldGridSpec:
    theta_min: float = 0.0
    theta_max: float = 90.0
    phi_min: float = 0.0
    phi_max: float = 180.0
    step: float = 1.0

    def __post_init__(self):
        if not self.theta_min < self.theta_max or not self.phi_min < self.phi_max:
            raise ValidationError("grid requires min < max on both axes")
        if self.step <= 0:
            raise ValidationError("grid step must be positive")
        for span in (self.theta_max - self.theta_min, self.phi_max - self.phi_min):
            n = span / self.step
            if abs(n - round(n)) > 1e-9:
                raise ValidationError(f"step {self.step} does not divide span {span}")

    @property
    def n_theta(self) -> int:
        return int(round((self.theta_max - self.theta_min) / self.step)) + 1

    @property
    def n_phi(self) -> int:
        return int(round((self.phi_max - self.phi_min) / self.step)) + 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_theta, self.n_phi

    def thetas_deg(self) -> np.ndarray:
        return self.theta_min + self.step * np.arange(self.n_theta)

    def phis_deg(self) -> np.ndarray:
        return self.phi_min + self.step * np.arange(self.n_phi)

    def contains(self, d: Direction) -> bool:
        return (self.theta_min <= d.theta_deg <= self.theta_max
                and self.phi_min <= d.phi_deg <= self.phi_max)

    def direction_at(self, i: int, j: int) -> Direction:
        return Direction(float(self.thetas_deg()[i]), float(self.phis_deg()[j]))

    def to_dict(self) -> dict:
        return asdict(self)


def wavelength(config: ArrayConfig) -> float:
    return SPEED_OF_LIGHT / config.frequency


def wavenumber(config: ArrayConfig) -> float:
    return 2.0 * math.pi / wavelength(config)


def element_position(config: ArrayConfig, x: int, y: int) -> tuple[float, float]:
    """Offset of cell (x, y) from the first (corner) element, in meters."""
    if not (0 <= x < config.nx and 0 <= y < config.ny):
        raise IndexError(f"cell ({x}, {y}) outside {config.nx}x{config.ny} array")
    return x * config.dx, y * config.dy


def element_positions(config: ArrayConfig) -> tuple[np.ndarray, np.ndarray]:
    """Dx, Dy grids of shape (nx, ny)."""
    x = np.arange(config.nx)[:, None] * config.dx
    y = np.arange(config.ny)[None, :] * config.dy
    return np.broadcast_to(x, (config.nx, config.ny)), np.broadcast_to(y, (config.nx, config.ny))


def quantization_levels(bits: int) -> np.ndarray:
    """The 2**bits phase states in radians, symmetric about zero.

    level_i = -pi + (i + 0.5) * 2*pi / 2**bits, so 2 bits gives
    -135, -45, 45 and 135 degrees.
    """
    if bits < 1:
        raise ValidationError(f"bits must be >= 1, got {bits}")
    n = 2 ** bits
    return -math.pi + (np.arange(n) + 0.5) * (2.0 * math.pi / n)
