"""Single-direction phase profiles, quantization and the two-profile overlay.

Axis convention used throughout: a cell is addressed as ``(x, y)`` and grids
are indexed ``grid[x, y]``. Compass moves treat east as ``+x`` and north as
``+y``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .geometry import ArrayConfig, Direction, quantization_levels, wavenumber

TWO_PI = 2.0 * math.pi

# action code -> (dx, dy); 0 = stay, then N, NE, E, SE, S, SW, W, NW
ACTION_STEPS = (
    (0, 0),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
)
N_ACTIONS = len(ACTION_STEPS)


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    """Grid of quantized phase-level indices, ``indices[x, y]``."""

    indices: np.ndarray
    bits: int

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64)
        if idx.ndim != 2 or idx.size == 0:
            raise ValidationError("profile indices must be a nonempty 2-D grid")
        if idx.min() < 0 or idx.max() >= 2 ** self.bits:
            raise ValidationError(f"level index outside [0, {2 ** self.bits})")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def nx(self) -> int:
        return self.indices.shape[0]

    @property
    def ny(self) -> int:
        return self.indices.shape[1]

    @property
    def levels(self) -> np.ndarray:
        return quantization_levels(self.bits)

    def phases(self) -> np.ndarray:
        """Realized phase per cell in radians."""
        return self.levels[self.indices]

    def __eq__(self, other):
        if not isinstance(other, PhaseProfile):
            return NotImplemented
        return self.bits == other.bits and np.array_equal(self.indices, other.indices)

    def to_dict(self) -> dict:
        return {
            "nx": self.nx,
            "ny": self.ny,
            "bits": self.bits,
            "indices": [int(v) for v in self.indices.ravel()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PhaseProfile":
        try:
            nx, ny, bits = int(data["nx"]), int(data["ny"]), int(data["bits"])
            flat = np.asarray(data["indices"], dtype=np.int64)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed profile: {exc}") from exc
        if flat.shape != (nx * ny,):
            raise FormatError(f"profile expects {nx * ny} indices, got {flat.size}")
        return cls(flat.reshape(nx, ny), bits)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "PhaseProfile":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from exc
        return cls.from_dict(data)


def wrap_phase(phase):
    """Reduce phases modulo 2*pi into [-pi, pi)."""
    return np.mod(np.asarray(phase) + math.pi, TWO_PI) - math.pi


def quantize_phases(phase, bits: int) -> np.ndarray:
    """Vectorized nearest-level quantization; exact ties go to the higher level."""
    phase = np.asarray(phase, dtype=float)
    if np.any(np.abs(phase) > math.pi + 1e-12) or not np.all(np.isfinite(phase)):
        raise ValidationError("phase must lie within [-pi, pi]")
    n = 2 ** bits
    # levels sit at the centers of n equal bins, so the nearest level is the bin index
    idx = np.floor((phase + math.pi) / (TWO_PI / n)).astype(np.int64)
    return np.clip(idx, 0, n - 1)


def quantize_phase(phase: float, bits: int) -> int:
    return int(quantize_phases(phase, bits))


def continuous_phase(config: ArrayConfig, d: Direction, nx: int | None = None,
                     ny: int | None = None) -> np.ndarray:
    """Steering phase per cell in [-pi, pi): minus the path phase toward ``d``.

    ``nx``/``ny`` override the grid size (used for sub-profiles laid out in
    their own local coordinates with the array's pitch).
    """
    nx = config.nx if nx is None else nx
    ny = config.ny if ny is None else ny
    x = np.arange(nx)[:, None] * config.dx
    y = np.arange(ny)[None, :] * config.dy
    st = math.sin(d.theta)
    path = wavenumber(config) * (x * math.cos(d.phi) * st + y * math.sin(d.phi) * st)
    return wrap_phase(-path)


def synthesize_profile(config: ArrayConfig, d: Direction, nx: int | None = None,
                       ny: int | None = None) -> tuple[PhaseProfile, np.ndarray]:
    """Quantized single-beam profile for ``d`` and its continuous phase grid."""
    cont = continuous_phase(config, d, nx, ny)
    return PhaseProfile(quantize_phases(cont, config.bits), config.bits), cont


@dataclass(frozen=True)
class Window:
    """Admissible placement centers: x0 <= cx < x0 + w, y0 <= cy < y0 + h."""

    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValidationError("window dimensions must be >= 1")

    @classmethod
    def centered(cls, nx: int, ny: int, w: int, h: int) -> "Window":
        return cls(nx // 2 - w // 2, ny // 2 - h // 2, w, h)

    @property
    def area(self) -> int:
        return self.w * self.h

    def contains(self, cx: int, cy: int) -> bool:
        return self.x0 <= cx < self.x0 + self.w and self.y0 <= cy < self.y0 + self.h

    def clamp(self, cx: int, cy: int) -> tuple[int, int]:
        return (min(max(cx, self.x0), self.x0 + self.w - 1),
                min(max(cy, self.y0), self.y0 + self.h - 1))

    def center(self) -> "OverlayPlacement":
        return OverlayPlacement(self.x0 + self.w // 2, self.y0 + self.h // 2)

    def placements(self) -> list["OverlayPlacement"]:
        """All cells in lexicographic (cx, then cy) order."""
        return [OverlayPlacement(cx, cy)
                for cx in range(self.x0, self.x0 + self.w)
                for cy in range(self.y0, self.y0 + self.h)]

    def to_dict(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "w": self.w, "h": self.h}


@dataclass(frozen=True, order=True)
class OverlayPlacement:
    cx: int
    cy: int

    def as_tuple(self) -> tuple[int, int]:
        return self.cx, self.cy

    def __str__(self):
        return f"({self.cx}, {self.cy})"


@dataclass(frozen=True)
class SuperpositionSpec:
    """Where the direction-2 rectangle sits and how far its center may move."""

    direction1: Direction
    direction2: Direction
    window: Window
    rect_w: int = 22
    rect_h: int = 22
    nx: int = 30
    ny: int = 30

    def __post_init__(self):
        if self.rect_w < 1 or self.rect_h < 1:
            raise ValidationError("rectangle dimensions must be >= 1")
        win = self.window
        if win.x0 < 0 or win.y0 < 0 or win.x0 + win.w > self.nx or win.y0 + win.h > self.ny:
            raise ValidationError(f"window {win.to_dict()} does not fit a {self.nx}x{self.ny} array")

    def rect_origin(self, placement: OverlayPlacement) -> tuple[int, int]:
        """Array cell of the rectangle's local (0, 0) for a given center."""
        return placement.cx - self.rect_w // 2, placement.cy - self.rect_h // 2

    def covered_mask(self, placement: OverlayPlacement) -> np.ndarray:
        x0, y0 = self.rect_origin(placement)
        mask = np.zeros((self.nx, self.ny), dtype=bool)
        mask[max(0, x0):max(0, min(self.nx, x0 + self.rect_w)),
             max(0, y0):max(0, min(self.ny, y0 + self.rect_h))] = True
        return mask


def superpose(p1: PhaseProfile, p2: PhaseProfile, spec: SuperpositionSpec,
              placement: OverlayPlacement) -> PhaseProfile:
    """Overlay ``p2`` (rectangle-local coordinates) on ``p1`` centered at ``placement``.

    Only the part of the rectangle that intersects the array is applied;
    every other cell keeps its ``p1`` level.
    """
    if not spec.window.contains(placement.cx, placement.cy):
        raise ValidationError(f"placement {placement} outside window {spec.window.to_dict()}")
    if (p1.nx, p1.ny) != (spec.nx, spec.ny):
        raise ValidationError("profile-1 must span the full array")
    if (p2.nx, p2.ny) != (spec.rect_w, spec.rect_h):
        raise ValidationError("profile-2 must match the rectangle dimensions")
    if p1.bits != p2.bits:
        raise ValidationError("profiles must share a phase resolution")

    out = np.array(p1.indices)
    x0, y0 = spec.rect_origin(placement)
    xa, xb = max(0, x0), min(spec.nx, x0 + spec.rect_w)
    ya, yb = max(0, y0), min(spec.ny, y0 + spec.rect_h)
    if xa < xb and ya < yb:
        out[xa:xb, ya:yb] = p2.indices[xa - x0:xb - x0, ya - y0:yb - y0]
    return PhaseProfile(out, p1.bits)


def _axis_period(grid: np.ndarray, axis: int) -> int:
    n = grid.shape[axis]
    for s in range(1, n):
        head = np.take(grid, range(s, n), axis=axis)
        tail = np.take(grid, range(0, n - s), axis=axis)
        if np.array_equal(head, tail):
            return s
    return n


def period_lengths(p: PhaseProfile) -> tuple[int, int]:
    """Smallest shift along x and y leaving the index grid unchanged on the overlap."""
    return _axis_period(p.indices, 0), _axis_period(p.indices, 1)


def move(placement: OverlayPlacement, spec: SuperpositionSpec | Window, action: int) -> OverlayPlacement:
    """Apply one of the nine move codes, clamping each coordinate to the window."""
    if isinstance(action, bool) or not isinstance(action, (int, np.integer)) \
            or not 0 <= action < N_ACTIONS:
        raise ValidationError(f"action must be an integer in [0, {N_ACTIONS - 1}], got {action!r}")
    window = spec.window if isinstance(spec, SuperpositionSpec) else spec
    ddx, ddy = ACTION_STEPS[int(action)]
    return OverlayPlacement(*window.clamp(placement.cx + ddx, placement.cy + ddy))
