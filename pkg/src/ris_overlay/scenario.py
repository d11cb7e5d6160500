"""A fully built two-beam scenario shared by every searcher."""
from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import ScenarioConfig
from .errors import ValidationError
from .farfield import FarFieldPattern, SteeringMatrix, array_factor, build_steering_matrix
from .geometry import ArrayConfig, FarFieldGridSpec
from .objective import DiskSpec, ObjectiveReport, a_total, compute_baseline, disk_mask
from .profile import OverlayPlacement, PhaseProfile, SuperpositionSpec, superpose, synthesize_profile


@functools.lru_cache(maxsize=2)
def _cached_steering(nx, ny, dx, dy, frequency, grid: FarFieldGridSpec) -> SteeringMatrix:
    return build_steering_matrix(ArrayConfig(nx=nx, ny=ny, dx=dx, dy=dy, frequency=frequency), grid)


def steering_for(config: ArrayConfig, grid: FarFieldGridSpec) -> SteeringMatrix:
    """Steering matrix shared between scenarios with the same geometry."""
    return _cached_steering(config.nx, config.ny, config.dx, config.dy, config.frequency, grid)


def max_steps_for(w: int, h: int) -> int:
    """Half the window diagonal, rounded up."""
    return math.ceil(math.sqrt(w * w + h * h) / 2)


class Scenario:
    """Profiles, window, steering matrix, disks and baseline for one config.

    Objective values and state vectors are memoized per placement; the cache
    is transparent and can be dropped with :meth:`clear_cache`.
    """

    def __init__(self, cfg: ScenarioConfig | None = None, steering: SteeringMatrix | None = None):
        from .search import derive_window

        cfg = cfg or ScenarioConfig()
        self.cfg = cfg
        self.array = cfg.array
        self.grid = cfg.grid
        self.p1, self.p1_continuous = synthesize_profile(cfg.array, cfg.direction1)
        self.p2, self.p2_continuous = synthesize_profile(cfg.array, cfg.direction2, cfg.rect_w, cfg.rect_h)

        window = cfg.window
        derived_steps = None
        if window is None:
            window, derived_steps = derive_window(self.p1, self.p2, cfg.array)
        if cfg.max_steps is not None:
            self.max_steps = int(cfg.max_steps)
        else:
            self.max_steps = derived_steps or max_steps_for(window.w, window.h)
        self.spec = SuperpositionSpec(cfg.direction1, cfg.direction2, window, cfg.rect_w, cfg.rect_h,
                                      cfg.array.nx, cfg.array.ny)

        if steering is None:
            steering = steering_for(cfg.array, cfg.grid)
        elif steering.grid != cfg.grid or (steering.nx, steering.ny) != (cfg.array.nx, cfg.array.ny):
            raise ValidationError("steering matrix does not match the scenario geometry")
        self.steering = steering

        self.disks = (DiskSpec(cfg.direction1, cfg.disk_radius), DiskSpec(cfg.direction2, cfg.disk_radius))
        self._masks = [disk_mask(self.grid, d) for d in self.disks]
        self._reports: dict[OverlayPlacement, ObjectiveReport] = {}
        self._states: dict[OverlayPlacement, np.ndarray] = {}
        self.n_evaluations = 0

        self.reference_placement = window.center()
        self.reference = self.pattern_at(self.reference_placement)
        self.baseline = compute_baseline(self.reference)

    @property
    def window(self):
        return self.spec.window

    @property
    def bits(self) -> int:
        return self.array.bits

    def content_hash(self) -> str:
        return self.cfg.content_hash()

    def profile_at(self, placement: OverlayPlacement) -> PhaseProfile:
        return superpose(self.p1, self.p2, self.spec, placement)

    def pattern_at(self, placement: OverlayPlacement) -> FarFieldPattern:
        return array_factor(self.profile_at(placement), self.steering, self.array)

    def report_for(self, pattern: FarFieldPattern, placement=None) -> ObjectiveReport:
        return a_total(pattern, self.disks, self.baseline, placement, self._masks)

    def evaluate(self, placement: OverlayPlacement) -> ObjectiveReport:
        """Objective at ``placement`` (memoized)."""
        rep = self._reports.get(placement)
        if rep is None:
            rep = self.report_for(self.pattern_at(placement), placement)
            self._reports[placement] = rep
            self.n_evaluations += 1
        return rep

    def evaluate_many(self, placements, threads: int = 1) -> list[ObjectiveReport]:
        """Evaluate several placements, optionally on a thread pool.

        Results are stored in input order, so the outcome does not depend on
        scheduling.
        """
        todo = [p for p in dict.fromkeys(placements) if p not in self._reports]
        if threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(threads) as pool:
                patterns = list(pool.map(self.pattern_at, todo))
            for p, pat in zip(todo, patterns):
                self._reports[p] = self.report_for(pat, p)
                self.n_evaluations += 1
        return [self.evaluate(p) for p in placements]

    def state_at(self, placement: OverlayPlacement) -> np.ndarray:
        from .search import state_vector

        s = self._states.get(placement)
        if s is None:
            s = state_vector(self.profile_at(placement))
            s.setflags(write=False)
            self._states[placement] = s
        return s

    def clear_cache(self) -> None:
        self._reports.clear()
        self._states.clear()
        self.n_evaluations = 0
