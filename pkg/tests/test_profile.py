import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ris_overlay.errors import FormatError, ValidationError
from ris_overlay.geometry import SPEED_OF_LIGHT, ArrayConfig, Direction, quantization_levels
from ris_overlay.profile import (
    ACTION_STEPS,
    OverlayPlacement,
    PhaseProfile,
    SuperpositionSpec,
    Window,
    move,
    period_lengths,
    quantize_phase,
    quantize_phases,
    superpose,
    synthesize_profile,
)

D1 = Direction(45, 30)
D2 = Direction(45, 60)


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def test_quantize_examples():
    lv = np.degrees(quantization_levels(2))
    assert lv[quantize_phase(math.radians(50), 2)] == pytest.approx(45)
    assert lv[quantize_phase(0.0, 2)] == pytest.approx(45)  # tie goes up
    assert lv[quantize_phase(math.radians(-179), 2)] == pytest.approx(-135)
    assert quantize_phase(math.pi, 2) == 3
    assert quantize_phase(-math.pi, 2) == 0
    with pytest.raises(ValidationError):
        quantize_phase(3.5, 2)


@given(st.floats(-math.pi, math.pi), st.integers(1, 5))
def test_quantize_nearest_level(phase, bits):
    lv = quantization_levels(bits)
    idx = quantize_phase(phase, bits)
    assert abs(lv[idx] - phase) <= math.pi / 2 ** bits + 1e-12
    assert abs(lv[idx] - phase) <= np.abs(lv - phase).min() + 1e-12


def test_broadside_profile_is_uniform():
    prof, cont = synthesize_profile(ArrayConfig(), Direction(0, 77))
    assert np.all(cont == 0)
    assert np.all(prof.indices == 2)  # +45 deg, nearest to 0 under the tie rule


def test_hand_evaluated_cell():
    lam = SPEED_OF_LIGHT / 28e9
    delta = (2 * math.pi / lam) * 0.003 * math.cos(math.radians(40)) * math.sin(math.radians(30))
    assert delta == pytest.approx(0.674, abs=1e-3)
    prof, cont = synthesize_profile(ArrayConfig(), Direction(30, 40))
    assert math.degrees(cont[1, 0]) == pytest.approx(-38.6, abs=0.05)
    assert cont[1, 0] == pytest.approx(-delta)
    assert math.degrees(prof.phases()[1, 0]) == pytest.approx(-45)


def test_mirror_directions():
    _, a = synthesize_profile(ArrayConfig(), Direction(30, 40))
    _, b = synthesize_profile(ArrayConfig(), Direction(30, 140))
    gx_a, gx_b = _wrap(a[1:, :] - a[:-1, :]), _wrap(b[1:, :] - b[:-1, :])
    gy_a, gy_b = _wrap(a[:, 1:] - a[:, :-1]), _wrap(b[:, 1:] - b[:, :-1])
    np.testing.assert_allclose(gx_b, -gx_a, atol=1e-9)
    np.testing.assert_allclose(gy_b, gy_a, atol=1e-9)


@given(st.floats(0, 90), st.floats(0, 180), st.sampled_from([2, 3, 4]))
@settings(max_examples=40, deadline=None)
def test_quantization_error_bound(theta, phi, bits):
    prof, cont = synthesize_profile(ArrayConfig(bits=bits), Direction(theta, phi))
    err = np.abs(_wrap(prof.phases() - cont))
    assert err.max() <= math.pi / 2 ** bits + 1e-9
    assert prof.indices.max() < 2 ** bits


def _scan_period(grid, axis):
    """Shift-and-compare every cell; independent of the library's slicing."""
    n = grid.shape[axis]
    for s in range(1, n):
        ok = True
        for x in range(grid.shape[0]):
            for y in range(grid.shape[1]):
                xx, yy = (x + s, y) if axis == 0 else (x, y + s)
                if xx < grid.shape[0] and yy < grid.shape[1] and grid[x, y] != grid[xx, yy]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return s
    return n


def test_period_lengths_examples():
    uniform = PhaseProfile(np.zeros((30, 30), int), 2)
    assert period_lengths(uniform) == (1, 1)
    alt = PhaseProfile(np.tile(np.array([0, 3])[:, None], (15, 30)), 2)
    assert period_lengths(alt) == (2, 1)
    prof, _ = synthesize_profile(ArrayConfig(), Direction(45, 0))
    px, py = period_lengths(prof)
    assert py == 1
    assert 1 < px <= 30
    assert px == _scan_period(prof.indices, 0)


@pytest.mark.parametrize("d", [D1, D2, Direction(30, 40), Direction(50, 60)])
def test_period_lengths_match_scan(d):
    prof, _ = synthesize_profile(ArrayConfig(), d)
    assert period_lengths(prof) == (_scan_period(prof.indices, 0), _scan_period(prof.indices, 1))


def _spec(rect_w=22, rect_h=22, window=Window(6, 10, 18, 10)):
    return SuperpositionSpec(D1, D2, window, rect_w, rect_h)


def _profiles(rect_w=22, rect_h=22):
    cfg = ArrayConfig()
    p1, _ = synthesize_profile(cfg, D1)
    p2, _ = synthesize_profile(cfg, D2, rect_w, rect_h)
    return p1, p2


def _naive_superpose(p1, p2, spec, pl):
    out = p1.indices.copy()
    x0, y0 = pl.cx - spec.rect_w // 2, pl.cy - spec.rect_h // 2
    for x in range(spec.nx):
        for y in range(spec.ny):
            lx, ly = x - x0, y - y0
            if 0 <= lx < spec.rect_w and 0 <= ly < spec.rect_h:
                out[x, y] = p2.indices[lx, ly]
    return out


def test_full_cover_gives_p2():
    p1, p2 = _profiles(30, 30)
    spec = _spec(30, 30)
    out = superpose(p1, p2, spec, OverlayPlacement(15, 15))
    assert out == p2


def test_four_to_one_area_at_center():
    spec = _spec(24, 30)
    mask = spec.covered_mask(spec.window.center())
    assert mask.sum() == 720
    assert (~mask).sum() == 180


def test_superpose_rejects_outside_window():
    p1, p2 = _profiles()
    with pytest.raises(ValidationError):
        superpose(p1, p2, _spec(), OverlayPlacement(5, 15))


def test_periodic_shift_gives_identical_phases():
    # rectangle wider than the array: both placements clip to the full x span
    p1, _ = _profiles()
    p2 = PhaseProfile(np.tile((np.arange(40) % 3)[:, None], (1, 10)), 2)
    spec = SuperpositionSpec(D1, D2, Window(10, 10, 11, 10), 40, 10)
    px, _ = period_lengths(p2)
    assert px == 3
    a = superpose(p1, p2, spec, OverlayPlacement(12, 15))
    b = superpose(p1, p2, spec, OverlayPlacement(12 + px, 15))
    assert a == b
    c = superpose(p1, p2, spec, OverlayPlacement(13, 15))
    assert a != c


placements = st.builds(OverlayPlacement, st.integers(6, 23), st.integers(10, 19))


@given(placements)
@settings(max_examples=60, deadline=None)
def test_superpose_properties(pl):
    p1, p2 = _profiles()
    spec = _spec()
    out = superpose(p1, p2, spec, pl)
    np.testing.assert_array_equal(out.indices, _naive_superpose(p1, p2, spec, pl))
    assert superpose(p1, p2, spec, pl) == out
    mask = spec.covered_mask(pl)
    np.testing.assert_array_equal(out.indices[~mask], p1.indices[~mask])
    x0, y0 = spec.rect_origin(pl)
    xs, ys = np.nonzero(mask)
    np.testing.assert_array_equal(out.indices[xs, ys], p2.indices[xs - x0, ys - y0])


def test_move_examples():
    win = Window(6, 10, 18, 10)
    c = win.center()
    assert c == OverlayPlacement(15, 15)
    assert move(c, win, 0) == c
    assert move(c, win, 2) == OverlayPlacement(16, 16)  # NE
    east = OverlayPlacement(23, 12)
    assert move(east, win, 3) == east
    assert move(OverlayPlacement(6, 10), win, 6) == OverlayPlacement(6, 10)
    for bad in (-1, 9, 2.0, True):
        with pytest.raises(ValidationError):
            move(c, win, bad)


def test_action_table():
    assert len(ACTION_STEPS) == 9
    assert ACTION_STEPS[0] == (0, 0)
    assert set(ACTION_STEPS[1:]) == {(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)} - {(0, 0)}
    assert [ACTION_STEPS[i] for i in (1, 3, 5, 7)] == [(0, 1), (1, 0), (0, -1), (-1, 0)]


@given(placements, st.lists(st.integers(0, 8), min_size=11, max_size=40))
def test_move_stays_in_window(pl, actions):
    win = Window(6, 10, 18, 10)
    for a in actions:
        pl = move(pl, win, a)
        assert win.contains(pl.cx, pl.cy)


def test_translation_keeps_beam_direction(steering):
    # standalone (unquantized) profile-2 rectangle radiating from two placements
    cfg = ArrayConfig()
    spec = _spec()
    _, cont2 = synthesize_profile(cfg, D2, spec.rect_w, spec.rect_h)
    peaks = []
    for pl in (OverlayPlacement(11, 11), OverlayPlacement(15, 15), OverlayPlacement(19, 14)):
        mask = spec.covered_mask(pl)
        x0, y0 = spec.rect_origin(pl)
        xs, ys = np.nonzero(mask)
        phases = cont2[xs - x0, ys - y0]
        cols = xs * cfg.ny + ys
        af = np.abs(steering.matrix[:, cols] @ np.exp(1j * phases)).reshape(steering.grid.shape)
        peaks.append(np.unravel_index(af.argmax(), af.shape))
    assert len(set(peaks)) == 1


def test_profile_json_roundtrip(tmp_path):
    p1, _ = _profiles()
    path = tmp_path / "p.json"
    p1.save(path)
    assert PhaseProfile.load(path) == p1
    d = p1.to_dict()
    assert len(d["indices"]) == 900
    assert d["indices"][1 * 30 + 2] == p1.indices[1, 2]  # row-major
    bad = dict(d, indices=d["indices"][:-1])
    with pytest.raises(FormatError):
        PhaseProfile.from_dict(bad)
    with pytest.raises(ValidationError):
        PhaseProfile(np.full((2, 2), 4), 2)
