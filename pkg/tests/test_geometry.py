import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ris_overlay.errors import ValidationError
from ris_overlay.geometry import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    Direction,
    FarFieldGridSpec,
    element_position,
    quantization_levels,
    wavelength,
    wavenumber,
)


def test_wavelength_values():
    assert wavelength(ArrayConfig()) == pytest.approx(SPEED_OF_LIGHT / 28e9)
    assert wavelength(ArrayConfig()) == pytest.approx(0.0107068735, rel=1e-9)
    assert wavelength(ArrayConfig(frequency=SPEED_OF_LIGHT)) == 1.0
    assert wavelength(ArrayConfig(frequency=14e9)) == pytest.approx(2 * wavelength(ArrayConfig()))
    assert wavenumber(ArrayConfig()) == pytest.approx(2 * math.pi / wavelength(ArrayConfig()))


def test_element_position():
    cfg = ArrayConfig()
    assert element_position(cfg, 0, 0) == (0.0, 0.0)
    assert element_position(cfg, 1, 0) == pytest.approx((0.003, 0.0))
    assert element_position(cfg, 29, 29) == pytest.approx((0.087, 0.087))
    with pytest.raises(IndexError):
        element_position(cfg, 30, 0)
    with pytest.raises(IndexError):
        element_position(cfg, 0, -1)


@given(st.integers(0, 14), st.integers(0, 14), st.integers(0, 14), st.integers(0, 14))
def test_element_position_linear(x1, y1, x2, y2):
    cfg = ArrayConfig()
    a = element_position(cfg, x1, y1)
    b = element_position(cfg, x2, y2)
    c = element_position(cfg, x1 + x2, y1 + y2)
    assert c == pytest.approx((a[0] + b[0], a[1] + b[1]), abs=1e-15)


def test_quantization_levels_examples():
    np.testing.assert_allclose(np.degrees(quantization_levels(2)), [-135, -45, 45, 135])
    np.testing.assert_allclose(np.degrees(quantization_levels(1)), [-90, 90])
    lv3 = np.degrees(quantization_levels(3))
    assert lv3[0] == pytest.approx(-157.5)
    assert lv3[1] == pytest.approx(-112.5)
    assert lv3[-1] == pytest.approx(157.5)
    with pytest.raises(ValidationError):
        quantization_levels(0)


@pytest.mark.parametrize("bits", [1, 2, 3, 4, 5])
def test_quantization_levels_properties(bits):
    lv = quantization_levels(bits)
    assert lv.size == 2 ** bits
    assert np.all(np.diff(lv) > 0)
    assert abs(lv.mean()) < 1e-12
    np.testing.assert_allclose(np.diff(lv), 2 * math.pi / 2 ** bits)


@pytest.mark.parametrize("kwargs", [
    {"nx": 0}, {"ny": 0}, {"dx": 0.0}, {"dy": -1.0}, {"frequency": 0.0},
    {"amplitude": 0.0}, {"amplitude": 1.5}, {"bits": 0},
])
def test_array_config_rejects(kwargs):
    with pytest.raises(ValidationError):
        ArrayConfig(**kwargs)


def test_array_config_allows_one_bit():
    assert ArrayConfig(bits=1).bits == 1


def test_direction_bounds():
    Direction(0, 0)
    Direction(90, 180)
    for th, ph in [(-1, 0), (91, 0), (0, -0.5), (0, 181)]:
        with pytest.raises(ValidationError):
            Direction(th, ph)


def test_grid_spec():
    g = FarFieldGridSpec()
    assert g.shape == (91, 181)
    assert g.n_theta * g.n_phi == 16471
    with pytest.raises(ValidationError):
        FarFieldGridSpec(step=0.7)
    with pytest.raises(ValidationError):
        FarFieldGridSpec(theta_min=10, theta_max=10)
    with pytest.raises(ValidationError):
        FarFieldGridSpec(step=0)
    assert FarFieldGridSpec(step=10).shape == (10, 19)
