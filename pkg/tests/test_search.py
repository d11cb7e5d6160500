import math

import numpy as np
import pytest

from ris_overlay.config import ScenarioConfig
from ris_overlay.errors import StateError, ValidationError
from ris_overlay.geometry import ArrayConfig
from ris_overlay.objective import a_total
from ris_overlay.farfield import array_factor
from ris_overlay.profile import OverlayPlacement, PhaseProfile, Window, superpose
from ris_overlay.scenario import Scenario, max_steps_for
from ris_overlay.search import (
    Environment,
    derive_window,
    exhaustive_search,
    random_search,
    state_vector,
    write_exhaustive_json,
)


def test_state_vector_constants():
    assert np.all(state_vector(PhaseProfile(np.full((3, 4), 3), 2)) == 0.75)
    assert np.all(state_vector(PhaseProfile(np.full((3, 4), 1), 2)) == -0.25)
    assert state_vector(PhaseProfile(np.zeros((3, 4), int), 2)).shape == (12,)


def test_state_diff_only_where_profile_changed(scenario):
    a, b = OverlayPlacement(15, 15), OverlayPlacement(16, 15)
    pa, pb = scenario.profile_at(a), scenario.profile_at(b)
    changed = (pa.indices != pb.indices).ravel()
    diff = scenario.state_at(a) != scenario.state_at(b)
    np.testing.assert_array_equal(diff, changed)


def test_reset(scenario):
    env = Environment(scenario)
    s1 = env.reset(scenario.window.center())
    s2 = env.reset(scenario.window.center())
    np.testing.assert_array_equal(s1, s2)
    with pytest.raises(ValidationError):
        env.reset(OverlayPlacement(0, 0))
    starts = []
    rng = np.random.default_rng(5)
    for _ in range(100):
        env.reset(rng=rng)
        starts.append(env.placement)
    assert len(set(starts)) > 50
    assert all(scenario.window.contains(p.cx, p.cy) for p in starts)
    a = Environment(scenario, seed=3)
    b = Environment(scenario, seed=3)
    assert [(a.reset(), a.placement)[1] for _ in range(5)] == [(b.reset(), b.placement)[1] for _ in range(5)]


def test_step_semantics(scenario):
    env = Environment(scenario)
    env.reset(scenario.window.center())
    rewards = [env.step(0).reward for _ in range(5)]
    assert len(set(rewards)) == 1
    env.reset(scenario.window.center())
    for i in range(11):
        tr = env.step(3)
        assert tr.done == (i == 10)
        assert tr.truncated == tr.done
        p = env.placement
        independent = a_total(array_factor(superpose(scenario.p1, scenario.p2, scenario.spec, p),
                                           scenario.steering, scenario.array),
                              scenario.disks, scenario.baseline)
        assert tr.reward == independent.a_total
    with pytest.raises(StateError):
        env.step(0)
    with pytest.raises(StateError):
        Environment(scenario).step(0)


def test_environment_determinism(scenario):
    def run():
        env = Environment(scenario, seed=9)
        env.reset()
        acts = np.random.default_rng(1).integers(0, 9, 11)
        return [(t.action, t.reward, t.next_state.tobytes(), t.done) for t in map(env.step, acts)]

    assert run() == run()


def test_exhaustive(scenario, exhaustive):
    win = scenario.window
    assert len(exhaustive.values) == win.area == 180
    assert exhaustive.best_value == max(exhaustive.values.values())
    ties = [p for p, v in exhaustive.values.items() if v == exhaustive.best_value]
    assert exhaustive.best == min(ties)
    fresh = Scenario(scenario.cfg, scenario.steering)
    again = exhaustive_search(fresh, threads=1)
    assert again.n_evaluations == 180
    assert again.values == exhaustive.values
    rng = np.random.default_rng(0)
    cells = list(exhaustive.values)
    for k in rng.choice(len(cells), 3, replace=False):
        p = cells[k]
        pat = array_factor(scenario.profile_at(p), scenario.steering, scenario.array)
        assert a_total(pat, scenario.disks, scenario.baseline).a_total == exhaustive.values[p]


def test_exhaustive_single_cell(scenario):
    cfg = ScenarioConfig(window=Window(15, 15, 1, 1))
    sc = Scenario(cfg, scenario.steering)
    res = exhaustive_search(sc)
    assert res.best == OverlayPlacement(15, 15)
    assert res.n_evaluations == 1


def test_exhaustive_json(tmp_path, exhaustive):
    import json

    path = tmp_path / "map.json"
    write_exhaustive_json(exhaustive, path)
    doc = json.loads(path.read_text())
    assert len(doc) == 180
    assert set(doc[0]) == {"cx", "cy", "a_total"}
    assert {(d["cx"], d["cy"]): d["a_total"] for d in doc} == {p.as_tuple(): v for p, v in exhaustive.values.items()}


def test_random_search(scenario, exhaustive):
    fresh = Scenario(scenario.cfg, scenario.steering)
    res = random_search(fresh, runs=3, max_steps=11, seed=4)
    assert res.n_evaluations <= 36
    assert all(len(t) == 12 for t in res.trajectories)
    assert res.best <= exhaustive.best_value
    again = random_search(scenario, runs=3, max_steps=11, seed=4)
    assert again.trajectories == res.trajectories
    for traj in res.trajectories:
        for (a, _), (b, _) in zip(traj, traj[1:]):
            assert max(abs(a.cx - b.cx), abs(a.cy - b.cy)) <= 1
    with pytest.raises(ValidationError):
        random_search(scenario, runs=0)


def test_max_steps_formula():
    assert max_steps_for(18, 10) == 11
    assert max_steps_for(2, 2) == 2
    assert max_steps_for(1, 1) == 1


def test_derive_window_uniform():
    arr = ArrayConfig()
    u = PhaseProfile(np.zeros((30, 30), int), 2)
    win, steps = derive_window(u, u, arr)
    assert (win.w, win.h, steps) == (1, 1, 1)
    assert win.contains(15, 15)


def test_derive_window_from_periods(scenario):
    from ris_overlay.profile import period_lengths

    win, steps = derive_window(scenario.p1, scenario.p2, scenario.array)
    (a, b), (c, d) = period_lengths(scenario.p1), period_lengths(scenario.p2)
    assert (win.w, win.h) == (min(max(a, c), 30), min(max(b, d), 30))
    assert steps == math.ceil(math.hypot(win.w, win.h) / 2)


def test_window_derived_when_omitted(scenario):
    cfg = ScenarioConfig(window=None, max_steps=None)
    sc = Scenario(cfg, scenario.steering)
    win, steps = derive_window(sc.p1, sc.p2, sc.array)
    assert sc.window == win and sc.max_steps == steps


def test_one_bit_rejected(scenario):
    cfg = ScenarioConfig(array=ArrayConfig(bits=1))
    sc = Scenario(cfg, scenario.steering)
    with pytest.raises(ValidationError, match="mirrored"):
        Environment(sc)
    with pytest.raises(ValidationError):
        exhaustive_search(sc)
