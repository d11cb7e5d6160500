"""Coverage objective: cells inside each target disk that reach the baseline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geometry import Direction, FarFieldGridSpec


@dataclass(frozen=True)
class DiskSpec:
    center: Direction
    radius: float = 20.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError(f"disk radius must be positive, got {self.radius}")


@dataclass
class ObjectiveReport:
    baseline: float
    a_m: list[int]
    placement: tuple[int, int] | None = None
    a_total: int = field(init=False)

    def __post_init__(self):
        self.a_m = [int(a) for a in self.a_m]
        self.a_total = sum(self.a_m)

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "a_m": list(self.a_m),
            "a_total": self.a_total,
            "placement": None if self.placement is None else list(self.placement.as_tuple()),
        }


def disk_mask(grid: FarFieldGridSpec, disk: DiskSpec) -> np.ndarray:
    """Cells with squared degree distance to the disk center <= radius**2.

    Distances are plain Euclidean in (theta, phi) degrees.
    """
    if not grid.contains(disk.center):
        raise ValidationError(f"disk center {disk.center} outside the far-field grid")
    dt = grid.thetas_deg()[:, None] - disk.center.theta_deg
    dp = grid.phis_deg()[None, :] - disk.center.phi_deg
    return dt * dt + dp * dp <= disk.radius * disk.radius


def compute_baseline(reference) -> float:
    """Global peak magnitude of the reference pattern."""
    return float(reference.magnitude.max())


def coverage_area(p, disk: DiskSpec, baseline: float, mask: np.ndarray | None = None) -> int:
    """Count disk cells whose magnitude is >= baseline.

    ``mask`` lets callers pass a precomputed ``disk_mask`` for the same grid.
    """
    if mask is None:
        mask = disk_mask(p.grid, disk)
    return int(np.count_nonzero(mask & (p.magnitude >= baseline)))


def a_total(p, disks, baseline: float, placement=None, masks=None) -> ObjectiveReport:
    """Per-disk counts and their plain sum; shared cells count once per disk."""
    if masks is None:
        masks = [None] * len(disks)
    counts = [coverage_area(p, d, baseline, m) for d, m in zip(disks, masks)]
    if placement is not None and hasattr(placement, "as_tuple"):
        placement = placement.as_tuple()
    return ObjectiveReport(baseline, counts, placement)
