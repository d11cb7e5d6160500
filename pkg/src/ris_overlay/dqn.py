"""Deep Q-network agent for the placement environment."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .config import DqnConfig
from .errors import StateError, ValidationError
from .neural import AdamState, Mlp, adam_step
from .profile import N_ACTIONS, OverlayPlacement
from .search import Environment, Transition, exhaustive_search, require_multibit

SMOOTH_WINDOW = 50


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, rng: np.random.Generator | None = None):
        if capacity < 1:
            raise ValidationError("replay capacity must be >= 1")
        self.capacity = capacity
        self.rng = np.random.default_rng() if rng is None else rng
        self._items: list[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, tr: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(tr)
        else:
            self._items[self._next] = tr
        self._next = (self._next + 1) % self.capacity

    def __iter__(self):
        """Transitions from oldest to newest."""
        if len(self._items) < self.capacity:
            return iter(list(self._items))
        return iter(self._items[self._next:] + self._items[:self._next])

    def sample(self, batch: int) -> list[Transition]:
        if batch > len(self._items):
            raise StateError(f"cannot sample {batch} transitions from a buffer of {len(self._items)}")
        idx = self.rng.choice(len(self._items), size=batch, replace=False)
        return [self._items[i] for i in idx]


def select_action(net: Mlp, state: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Greedy with probability ``epsilon``, otherwise uniform; greedy ties go to the lowest index."""
    if rng.random() < epsilon:
        return int(np.argmax(net.predict(state)))
    return int(rng.integers(N_ACTIONS))


def td_targets(batch: list[Transition], target_net: Mlp, gamma: float, max_q=None,
               bootstrap_truncated: bool = False) -> np.ndarray:
    """r + gamma * max_a' Q_target(s', a'), or just r for terminal transitions.

    With ``bootstrap_truncated`` an episode end caused only by the step limit
    still bootstraps, since the state itself is not absorbing. ``max_q``
    optionally maps a batch of next states to their max target Q-values (a
    cache valid while the target network is frozen).
    """
    if not batch:
        raise ValidationError("empty batch")
    rewards = np.array([t.reward for t in batch], dtype=float)
    if bootstrap_truncated:
        done = np.array([t.done and not t.truncated for t in batch], dtype=bool)
    else:
        done = np.array([t.done for t in batch], dtype=bool)
    next_states = [t.next_state for t in batch]
    if max_q is None:
        next_q = target_net.predict(np.stack(next_states)).max(axis=1)
    else:
        next_q = max_q(next_states)
    return rewards + np.where(done, 0.0, gamma * next_q)


class TargetCache:
    """Max target-network Q per distinct state, valid until the next sync."""

    def __init__(self, net: Mlp):
        self.net = net
        self._values: dict[bytes, float] = {}

    def clear(self) -> None:
        self._values.clear()

    def __call__(self, states) -> np.ndarray:
        keys = [s.tobytes() for s in states]
        missing = list({k: s for k, s in zip(keys, states) if k not in self._values}.items())
        if missing:
            q = self.net.predict(np.stack([s for _, s in missing])).max(axis=1)
            for (k, _), v in zip(missing, q):
                self._values[k] = float(v)
        return np.array([self._values[k] for k in keys])


class DqnAgent:
    def __init__(self, config: DqnConfig, input_size: int, seed_seq: np.random.SeedSequence | None = None):
        self.config = config
        ss = np.random.SeedSequence(config.seed) if seed_seq is None else seed_seq
        init_ss, policy_ss, replay_ss = ss.spawn(3)
        self.sizes = (input_size, *config.hidden, N_ACTIONS)
        self.online = Mlp(self.sizes, rng=np.random.default_rng(init_ss))
        self.target = self.online.copy()
        self.adam = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps)
        self.policy_rng = np.random.default_rng(policy_ss)
        self.buffer = ReplayBuffer(config.replay_capacity, np.random.default_rng(replay_ss))
        self.target_cache = TargetCache(self.target)
        self.learn_steps = 0
        self.n_syncs = 0

    def act(self, state: np.ndarray, epsilon: float | None = None) -> int:
        eps = self.config.epsilon if epsilon is None else epsilon
        return select_action(self.online, state, eps, self.policy_rng)

    def greedy(self, state: np.ndarray) -> int:
        return int(np.argmax(self.online.predict(state)))

    def sync_target(self) -> None:
        self.target.load_state(self.online)
        self.target_cache.clear()
        self.n_syncs += 1

    def learn(self) -> float:
        """One gradient step on a uniform replay batch; returns the batch loss."""
        cfg = self.config
        batch = self.buffer.sample(cfg.batch)
        y = td_targets(batch, self.target, cfg.gamma, self.target_cache, cfg.bootstrap_truncated)
        states = np.stack([t.state for t in batch])
        actions = np.array([t.action for t in batch])
        q = self.online.forward(states)
        rows = np.arange(len(batch))
        err = q[rows, actions] - y
        grad_out = np.zeros_like(q)
        grad_out[rows, actions] = 2.0 * err / len(batch)
        grads = self.online.backward(states, grad_out)
        adam_step(self.online, self.adam, grads)
        if not self.online.all_finite():
            raise StateError(f"non-finite parameters after learn step {self.learn_steps + 1}")
        self.learn_steps += 1
        if self.learn_steps % cfg.target_sync_interval == 0:
            self.sync_target()
        return float(np.mean(err * err))


def smooth(values, window: int = SMOOTH_WINDOW) -> list[float]:
    """Trailing moving average; early entries average what is available."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        return []
    csum = np.cumsum(np.insert(vals, 0, 0.0))
    out = []
    for i in range(vals.size):
        lo = max(0, i + 1 - window)
        out.append(float((csum[i + 1] - csum[lo]) / (i + 1 - lo)))
    return out


@dataclass
class TrainResult:
    agent: DqnAgent
    curve: list[float]
    manifest: dict
    smoothed: list[float] = field(default_factory=list)

    def write_curve_csv(self, path) -> None:
        write_curve_csv(self.curve, path)


def write_curve_csv(curve, path) -> None:
    sm = smooth(curve)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "reward", "smoothed_reward"])
        for i, (r, s) in enumerate(zip(curve, sm)):
            w.writerow([i, f"{r:.9g}", f"{s:.9g}"])


def train(scenario, config: DqnConfig | None = None, progress=None) -> TrainResult:
    """Train a DQN on ``scenario``; ``progress(episode, reward)`` is called per episode."""
    require_multibit(scenario)
    config = scenario.cfg.dqn if config is None else config
    root = np.random.SeedSequence(config.seed)
    agent_ss, env_ss = root.spawn(2)
    env = Environment(scenario)
    env_rng = np.random.default_rng(env_ss)
    agent = DqnAgent(config, scenario.array.n_elements, agent_ss)
    warmup = max(config.learn_start, config.batch)

    t0 = time.monotonic()
    curve = []
    for ep in range(config.episodes):
        state = env.reset(rng=env_rng)
        total = 0.0
        while not env.done:
            tr = env.step(agent.act(state))
            agent.buffer.push(tr)
            total += tr.reward
            state = tr.next_state
            if len(agent.buffer) >= warmup:
                agent.learn()
        curve.append(total)
        if progress is not None:
            progress(ep, total)
    wall = time.monotonic() - t0

    manifest = {
        "config_hash": scenario.content_hash(),
        "scenario": scenario.cfg.to_dict(),
        "dqn": config.to_dict(),
        "epsilon_semantics": "probability of the greedy action",
        "step_limit_targets": "bootstrap" if config.bootstrap_truncated else "terminal",
        "architecture": list(agent.sizes),
        "n_params": agent.online.n_params,
        "baseline": scenario.baseline,
        "max_steps": env.max_steps,
        "window": scenario.window.to_dict(),
        "episodes": config.episodes,
        "learn_steps": agent.learn_steps,
        "target_syncs": agent.n_syncs,
        "environment_steps": config.episodes * env.max_steps,
        "train_wall_time_s": wall,
    }
    return TrainResult(agent, curve, manifest, smooth(curve))


@dataclass
class Rollout:
    start: OverlayPlacement
    actions: list[int]
    placements: list[OverlayPlacement]  # includes the start
    values: list[int]
    reached_optimum: bool
    step_reached: int | None

    @property
    def final(self) -> OverlayPlacement:
        return self.placements[-1]

    @property
    def best_placement(self) -> OverlayPlacement:
        return self.placements[int(np.argmax(self.values))]

    def to_dict(self) -> dict:
        return {
            "start": list(self.start.as_tuple()),
            "actions": self.actions,
            "placements": [list(p.as_tuple()) for p in self.placements],
            "a_total": self.values,
            "final": list(self.final.as_tuple()),
            "reached_optimum": self.reached_optimum,
            "step_reached": self.step_reached,
        }


@dataclass
class EvalResult:
    rollouts: list[Rollout]
    optimum: int
    wall_time: float

    @property
    def n_reached(self) -> int:
        return sum(r.reached_optimum for r in self.rollouts)

    @property
    def best(self) -> int:
        return max(max(r.values) for r in self.rollouts)

    def to_dict(self) -> dict:
        return {"optimum": self.optimum, "wall_time_s": self.wall_time,
                "n_reached": self.n_reached, "rollouts": [r.to_dict() for r in self.rollouts]}


def greedy_rollout(net_or_agent, scenario, start: OverlayPlacement, optimum: int,
                   max_steps: int | None = None) -> Rollout:
    net = net_or_agent.online if isinstance(net_or_agent, DqnAgent) else net_or_agent
    env = Environment(scenario, max_steps)
    state = env.reset(start)
    placements = [start]
    values = [scenario.evaluate(start).a_total]
    actions = []
    while not env.done:
        a = int(np.argmax(net.predict(state)))
        tr = env.step(a)
        actions.append(a)
        placements.append(env.placement)
        values.append(int(tr.reward))
        state = tr.next_state
    reached = [i for i, v in enumerate(values) if v >= optimum]
    return Rollout(start, actions, placements, values, bool(reached), reached[0] if reached else None)


def evaluate(agent, scenario, starts, optimum: int | None = None) -> EvalResult:
    """Greedy (no exploration) rollouts from each start.

    ``optimum`` defaults to the exhaustive-search maximum of the scenario.
    Timing covers the rollouts only.
    """
    win = scenario.window
    for s in starts:
        if not win.contains(s.cx, s.cy):
            raise ValidationError(f"start {s} outside window {win.to_dict()}")
    if optimum is None:
        optimum = exhaustive_search(scenario).best_value
    t0 = time.monotonic()
    rollouts = [greedy_rollout(agent, scenario, s, optimum) for s in starts]
    return EvalResult(rollouts, optimum, time.monotonic() - t0)


def protocol_starts(scenario) -> list[OverlayPlacement]:
    """Three adjacent starts: the window center and its east and north neighbours."""
    c = scenario.window.center()
    win = scenario.window
    cands = [c, OverlayPlacement(*win.clamp(c.cx + 1, c.cy)), OverlayPlacement(*win.clamp(c.cx, c.cy + 1))]
    return list(dict.fromkeys(cands))


def write_eval_csv(result: EvalResult, path) -> None:
    """One row per (start, step): ``start,step,cx,cy,a_total,action``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["start", "step", "cx", "cy", "a_total", "action"])
        for k, r in enumerate(result.rollouts):
            for step, (p, v) in enumerate(zip(r.placements, r.values)):
                action = "" if step == 0 else r.actions[step - 1]
                w.writerow([k, step, p.cx, p.cy, v, action])


def write_manifest(manifest: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
