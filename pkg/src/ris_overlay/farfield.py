"""Array-factor far field over a (theta, phi) grid."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import ArrayConfig, Direction, FarFieldGridSpec, element_positions, wavenumber
from .profile import PhaseProfile

DB_FLOOR = -120.0
_MAG_FLOOR = 1e-6


def opd(config: ArrayConfig, x: int, y: int, far_dir: Direction) -> float:
    """Optical path difference of cell (x, y) relative to the first element."""
    if not (0 <= x < config.nx and 0 <= y < config.ny):
        raise IndexError(f"cell ({x}, {y}) outside {config.nx}x{config.ny} array")
    st = math.sin(far_dir.theta)
    return x * config.dx * math.cos(far_dir.phi) * st + y * config.dy * math.sin(far_dir.phi) * st


def direction_cosines(grid: FarFieldGridSpec) -> tuple[np.ndarray, np.ndarray]:
    """cos(phi)sin(theta) and sin(phi)sin(theta), shape (n_theta, n_phi)."""
    th = np.radians(grid.thetas_deg())[:, None]
    ph = np.radians(grid.phis_deg())[None, :]
    return np.cos(ph) * np.sin(th), np.sin(ph) * np.sin(th)


@dataclass(frozen=True, eq=False)
class SteeringMatrix:
    """Phasors exp(j k OPD) with rows in theta-major direction order and
    columns in row-major ``(x, y)`` element order."""

    grid: FarFieldGridSpec
    nx: int
    ny: int
    matrix: np.ndarray


def build_steering_matrix(config: ArrayConfig, grid: FarFieldGridSpec) -> SteeringMatrix:
    u, v = direction_cosines(grid)
    dx, dy = element_positions(config)
    k = wavenumber(config)
    phase = k * (np.outer(u.ravel(), dx.ravel()) + np.outer(v.ravel(), dy.ravel()))
    try:
        mat = np.exp(1j * phase)
    except MemoryError as exc:
        raise MemoryError(f"steering matrix of shape {phase.shape} does not fit in memory") from exc
    mat.setflags(write=False)
    return SteeringMatrix(grid, config.nx, config.ny, mat)


@dataclass(frozen=True, eq=False)
class FarFieldPattern:
    grid: FarFieldGridSpec
    values: np.ndarray  # complex, shape grid.shape

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def db(self) -> np.ndarray:
        return pattern_db(self)


def array_factor_phases(phases: np.ndarray, sm: SteeringMatrix, config: ArrayConfig) -> FarFieldPattern:
    """Far field of an arbitrary (possibly continuous) phase grid."""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (sm.nx, sm.ny) or phases.shape != (config.nx, config.ny):
        raise ValidationError(f"phase grid {phases.shape} does not match the {config.nx}x{config.ny} array")
    excitation = config.amplitude * np.exp(1j * phases.ravel())
    values = (sm.matrix @ excitation).reshape(sm.grid.shape)
    return FarFieldPattern(sm.grid, values)


def array_factor(profile: PhaseProfile, sm: SteeringMatrix, config: ArrayConfig) -> FarFieldPattern:
    """Array factor of a quantized profile; the element pattern is isotropic so E = AF."""
    if (profile.nx, profile.ny) != (config.nx, config.ny):
        raise ValidationError(
            f"profile {profile.nx}x{profile.ny} does not match the {config.nx}x{config.ny} array")
    return array_factor_phases(profile.phases(), sm, config)


def magnitude_db(mag) -> np.ndarray:
    mag = np.asarray(mag, dtype=float)
    out = np.full(mag.shape, DB_FLOOR)
    ok = mag >= _MAG_FLOOR
    out[ok] = 20.0 * np.log10(mag[ok])
    return out


def pattern_db(p: FarFieldPattern) -> np.ndarray:
    """20 log10 |E| with magnitudes below 1e-6 clamped to -120 dB."""
    return magnitude_db(p.magnitude)


def peak_gain_db(p: FarFieldPattern, within=None) -> tuple[float, Direction]:
    """Peak of the dB pattern over the whole grid or inside a disk.

    ``within`` is a ``DiskSpec``. Ties resolve to the lowest theta, then phi,
    which is what a row-major argmax gives.
    """
    db = pattern_db(p)
    if within is not None:
        from .objective import disk_mask

        mask = disk_mask(p.grid, within)
        if not mask.any():
            raise ValidationError("disk does not intersect the grid")
        db = np.where(mask, db, -np.inf)
    flat = int(np.argmax(db))
    i, j = np.unravel_index(flat, db.shape)
    return float(db[i, j]), p.grid.direction_at(int(i), int(j))


def write_csv(p: FarFieldPattern, path) -> None:
    """Rows ``theta_deg,phi_deg,magnitude,db`` in theta-major order."""
    mag = p.magnitude
    db = pattern_db(p)
    thetas, phis = p.grid.thetas_deg(), p.grid.phis_deg()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta_deg", "phi_deg", "magnitude", "db"])
        for i, th in enumerate(thetas):
            for j, ph in enumerate(phis):
                w.writerow([f"{th:.9g}", f"{ph:.9g}", f"{mag[i, j]:.9g}", f"{db[i, j]:.9g}"])
