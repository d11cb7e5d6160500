"""Scenario and training configuration, loaded from and saved to JSON."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import FormatError, ValidationError
from .geometry import ArrayConfig, Direction, FarFieldGridSpec
from .profile import Window


@dataclass(frozen=True)
class DqnConfig:
    # probability of taking the greedy action (not of exploring)
    epsilon: float = 0.9
    batch: int = 128
    target_sync_interval: int = 100
    gamma: float = 0.98
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    hidden: tuple[int, ...] = (1000, 500, 100, 50)
    episodes: int = 2000
    learn_start: int = 256
    replay_capacity: int = 10_000
    # bootstrap TD targets through step-limit episode ends (they are not absorbing states)
    bootstrap_truncated: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValidationError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.batch < 1 or self.target_sync_interval < 1:
            raise ValidationError("batch and target_sync_interval must be >= 1")
        if self.episodes < 0 or self.learn_start < 0:
            raise ValidationError("episodes and learn_start must be >= 0")
        if self.replay_capacity < self.batch:
            raise ValidationError("replay capacity must hold at least one batch")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


def _checked_keys(section: str, data: dict, allowed) -> dict:
    if not isinstance(data, dict):
        raise ValidationError(f"{section}: expected an object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ValidationError(f"unknown key '{section}.{unknown[0]}'" if section else
                              f"unknown key '{unknown[0]}'")
    return data


def _names(cls) -> list[str]:
    return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to rebuild a scenario deterministically.

    ``window`` and ``max_steps`` may be ``None``; they are then derived from
    the sub-profile periods.
    """

    array: ArrayConfig = field(default_factory=ArrayConfig)
    direction1: Direction = Direction(45.0, 30.0)
    direction2: Direction = Direction(45.0, 60.0)
    rect_w: int = 22
    rect_h: int = 22
    window: Window | None = Window(6, 10, 18, 10)
    max_steps: int | None = 11
    grid: FarFieldGridSpec = field(default_factory=FarFieldGridSpec)
    disk_radius: float = 20.0
    dqn: DqnConfig = field(default_factory=DqnConfig)
    seed: int = 0

    @property
    def bits(self) -> int:
        return self.array.bits

    def with_seed(self, seed: int) -> "ScenarioConfig":
        """Copy with ``seed`` applied to both the scenario and the training config."""
        from dataclasses import replace

        return replace(self, seed=seed, dqn=replace(self.dqn, seed=seed))

    def to_dict(self) -> dict:
        arr = self.array.to_dict()
        bits = arr.pop("bits")
        sup = {"rect_w": self.rect_w, "rect_h": self.rect_h}
        if self.window is not None:
            sup["window"] = self.window.to_dict()
        out = {
            "array": arr,
            "bits": bits,
            "direction1": self.direction1.to_dict(),
            "direction2": self.direction2.to_dict(),
            "superposition": sup,
            "grid": self.grid.to_dict(),
            "disk_radius": self.disk_radius,
            "dqn": self.dqn.to_dict(),
            "seed": self.seed,
        }
        if self.max_steps is not None:
            out["max_steps"] = self.max_steps
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        top = ["array", "bits", "direction1", "direction2", "superposition", "max_steps",
               "grid", "disk_radius", "dqn", "seed"]
        _checked_keys("", data, top)
        defaults = cls()
        kw = {}
        try:
            arr = dict(_checked_keys("array", data.get("array", {}),
                                     [n for n in _names(ArrayConfig) if n != "bits"]))
            arr["bits"] = data.get("bits", defaults.array.bits)
            kw["array"] = ArrayConfig(**arr)
            for key in ("direction1", "direction2"):
                if key in data:
                    kw[key] = Direction(**_checked_keys(key, data[key], ["theta_deg", "phi_deg"]))
            sup = _checked_keys("superposition", data.get("superposition", {}),
                                ["rect_w", "rect_h", "window"])
            kw["rect_w"] = int(sup.get("rect_w", defaults.rect_w))
            kw["rect_h"] = int(sup.get("rect_h", defaults.rect_h))
            if "window" in sup and sup["window"] is not None:
                kw["window"] = Window(**_checked_keys("superposition.window", sup["window"],
                                                      ["x0", "y0", "w", "h"]))
            else:
                kw["window"] = None
            kw["max_steps"] = data.get("max_steps")
            if "grid" in data:
                kw["grid"] = FarFieldGridSpec(**_checked_keys("grid", data["grid"],
                                                              _names(FarFieldGridSpec)))
            if "disk_radius" in data:
                kw["disk_radius"] = float(data["disk_radius"])
            kw["seed"] = int(data.get("seed", defaults.seed))
            dqn = dict(_checked_keys("dqn", data.get("dqn", {}), _names(DqnConfig)))
            dqn.setdefault("seed", kw["seed"])
            kw["dqn"] = DqnConfig(**dqn)
        except TypeError as exc:
            raise ValidationError(str(exc)) from exc
        if kw["max_steps"] is not None and int(kw["max_steps"]) < 1:
            raise ValidationError("max_steps must be >= 1")
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise FormatError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def content_hash(self) -> str:
        """sha256 of the canonical JSON form; embedded in every output file."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()
