"""Placement environment plus the exhaustive and random-walk baselines."""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import StateError, ValidationError
from .geometry import ArrayConfig
from .profile import N_ACTIONS, OverlayPlacement, PhaseProfile, Window, move, period_lengths

THREADS_ENV = "RIS_OVERLAY_THREADS"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def require_multibit(scenario) -> None:
    if scenario.bits < 2:
        raise ValidationError(
            "1-bit profiles are not searchable: a 1-bit single-beam profile always radiates a "
            "mirrored beam as strong as the intended one")


def state_vector(profile: PhaseProfile) -> np.ndarray:
    """Row-major realized phases divided by pi."""
    return (profile.phases() / math.pi).ravel()


def derive_window(p1: PhaseProfile, p2: PhaseProfile, array: ArrayConfig) -> tuple[Window, int]:
    """Window sized by the largest sub-profile period per axis, centered on the array.

    Returns the window and the matching episode length (half its diagonal).
    """
    (px1, py1), (px2, py2) = period_lengths(p1), period_lengths(p2)
    w = min(max(px1, px2), array.nx)
    h = min(max(py1, py2), array.ny)
    steps = math.ceil(math.sqrt(w * w + h * h) / 2)
    return Window.centered(array.nx, array.ny, w, h), steps


@dataclass(frozen=True)
class Transition:
    """``done`` ends the episode; ``truncated`` marks an end caused only by the step limit."""

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool
    truncated: bool = False


class Environment:
    """Moves the profile-2 rectangle one cell per step; reward is A_total after the move."""

    def __init__(self, scenario, max_steps: int | None = None, seed: int | None = None):
        require_multibit(scenario)
        self.scenario = scenario
        self.max_steps = scenario.max_steps if max_steps is None else int(max_steps)
        if self.max_steps < 1:
            raise ValidationError("max_steps must be >= 1")
        self.rng = np.random.default_rng(seed)
        self.placement: OverlayPlacement | None = None
        self.steps = 0

    @property
    def window(self) -> Window:
        return self.scenario.window

    @property
    def done(self) -> bool:
        return self.placement is not None and self.steps >= self.max_steps

    def reset(self, start: OverlayPlacement | None = None, rng: np.random.Generator | None = None) -> np.ndarray:
        win = self.window
        if start is None:
            rng = self.rng if rng is None else rng
            start = OverlayPlacement(int(win.x0 + rng.integers(win.w)), int(win.y0 + rng.integers(win.h)))
        elif not win.contains(start.cx, start.cy):
            raise ValidationError(f"start {start} outside window {win.to_dict()}")
        self.placement = start
        self.steps = 0
        return self.scenario.state_at(start)

    def state(self) -> np.ndarray:
        if self.placement is None:
            raise StateError("environment has not been reset")
        return self.scenario.state_at(self.placement)

    def step(self, action: int) -> Transition:
        if self.placement is None:
            raise StateError("environment has not been reset")
        if self.done:
            raise StateError("episode is done; call reset()")
        s = self.scenario.state_at(self.placement)
        self.placement = move(self.placement, self.window, action)
        self.steps += 1
        reward = float(self.scenario.evaluate(self.placement).a_total)
        # the placement problem has no absorbing states; every episode ends on the step limit
        done = self.done
        return Transition(s, int(action), reward, self.scenario.state_at(self.placement), done, done)


@dataclass
class ExhaustiveResult:
    best: OverlayPlacement
    best_value: int
    values: dict[OverlayPlacement, int]
    wall_time: float
    n_evaluations: int

    def to_json_list(self) -> list[dict]:
        return [{"cx": p.cx, "cy": p.cy, "a_total": v} for p, v in sorted(self.values.items())]

    def as_grid(self, window: Window) -> np.ndarray:
        """Values as an array indexed ``[cx - x0, cy - y0]``."""
        out = np.zeros((window.w, window.h), dtype=int)
        for p, v in self.values.items():
            out[p.cx - window.x0, p.cy - window.y0] = v
        return out


def exhaustive_search(scenario, threads: int | None = None) -> ExhaustiveResult:
    """Evaluate every window cell once; ties go to the lowest (cx, cy)."""
    require_multibit(scenario)
    placements = scenario.window.placements()
    threads = default_threads() if threads is None else max(1, threads)
    t0 = time.monotonic()
    before = scenario.n_evaluations
    reports = scenario.evaluate_many(placements, threads)
    n_eval = scenario.n_evaluations - before
    wall = time.monotonic() - t0
    values = {p: r.a_total for p, r in zip(placements, reports)}
    best = max(placements, key=lambda p: (values[p], -p.cx, -p.cy))
    return ExhaustiveResult(best, values[best], values, wall, n_eval)


@dataclass
class RandomSearchResult:
    trajectories: list[list[tuple[OverlayPlacement, int]]]
    run_best: list[int]
    best: int
    best_placement: OverlayPlacement
    wall_time: float
    n_evaluations: int = field(default=0)


def random_search(scenario, start: OverlayPlacement | None = None, max_steps: int = 11,
                  runs: int = 3, seed: int = 0) -> RandomSearchResult:
    """Uniform random moves from ``start`` (window center by default), clamped to the window."""
    require_multibit(scenario)
    if runs < 1:
        raise ValidationError("runs must be >= 1")
    win = scenario.window
    start = win.center() if start is None else start
    if not win.contains(start.cx, start.cy):
        raise ValidationError(f"start {start} outside window {win.to_dict()}")
    rng = np.random.default_rng(seed)
    before = scenario.n_evaluations
    t0 = time.monotonic()
    trajectories = []
    for _ in range(runs):
        p = start
        traj = [(p, scenario.evaluate(p).a_total)]
        for _ in range(max_steps):
            p = move(p, win, int(rng.integers(N_ACTIONS)))
            traj.append((p, scenario.evaluate(p).a_total))
        trajectories.append(traj)
    wall = time.monotonic() - t0
    run_best = [max(v for _, v in t) for t in trajectories]
    best_p, best = max((pv for t in trajectories for pv in t), key=lambda pv: pv[1])
    return RandomSearchResult(trajectories, run_best, best, best_p, wall,
                              scenario.n_evaluations - before)


def write_exhaustive_json(result: ExhaustiveResult, path) -> None:
    """The placement map as a JSON array of ``{"cx", "cy", "a_total"}``."""
    with open(path, "w") as fh:
        json.dump(result.to_json_list(), fh, indent=1)
