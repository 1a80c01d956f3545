"""
Pruebas del banco de Gabor, extraccion de estructura, suavizado y visualizacion
"""

import time

import numpy as np
import pytest

from human_motion_transfer.data.structure_field import (
    GaborParams,
    StructureField,
    build_gabor_bank,
    extract_structure,
    extract_structure_sequence,
    load_structure,
    rgb_to_luminance,
    save_structure,
    smooth_orientation,
    visualize_structure,
)
from human_motion_transfer.exceptions import ConfigError, DimensionError, NumericError
from human_motion_transfer.utils.config import load_config, validate_section


@pytest.fixture(scope="module")
def bank():
    return build_gabor_bank(GaborParams())


def grating(theta, size=64, wavelength=6.0, centered=False):
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    phase = 2.0 * np.pi * (x * np.cos(theta) + y * np.sin(theta)) / wavelength
    if centered:
        c = (size - 1) / 2.0
        return np.cos(2.0 * np.pi * ((x - c) * np.cos(theta) + (y - c) * np.sin(theta)) / wavelength)
    return 0.5 + 0.5 * np.sin(phase)


def angular_error(a, b):
    diff = np.abs(a - b) % np.pi
    return np.minimum(diff, np.pi - diff)


def test_bank_layout(bank):
    assert bank.kernels.shape == (32, 17, 17)
    assert np.all(np.diff(bank.angles) > 0)
    assert bank.angles[0] == 0.0 and bank.angles[-1] < np.pi
    assert np.abs(bank.kernels.mean(axis=(1, 2))).max() < 1e-6


def test_even_kernel_size_is_config_error():
    with pytest.raises(ConfigError):
        build_gabor_bank(GaborParams(kernel_size=4))


def test_each_kernel_prefers_its_own_angle(bank):
    for i, theta in enumerate(bank.angles):
        patch = grating(theta, size=17, centered=True)
        responses = [abs(float((kernel * patch).sum())) for kernel in bank.kernels]
        assert int(np.argmax(responses)) == i


def test_constant_image_has_zero_confidence(bank):
    field = extract_structure(np.full((32, 32), 0.4), bank)
    assert not field.confidence.any()
    assert not field.orientation.any()


def test_grating_orientation_recovered(bank):
    theta = bank.angles[5]
    field = extract_structure(grating(theta), bank)
    inner = (slice(9, -9), slice(9, -9))
    confident = field.confidence[inner] > 0.5
    assert confident.any()
    assert angular_error(field.orientation[inner][confident], theta).max() <= np.pi / 64


def test_confidence_is_normalized_to_one(bank, small_sequence):
    field = extract_structure(rgb_to_luminance(small_sequence.frames[0]), bank)
    assert field.confidence.max() == pytest.approx(1.0)
    assert field.confidence.min() >= 0.0
    assert field.orientation.min() >= 0.0 and field.orientation.max() < np.pi


def test_rotation_by_quarter_turn_shifts_orientation(bank):
    theta = bank.angles[3]
    image = grating(theta)
    original = extract_structure(image, bank)
    rotated = extract_structure(np.rot90(image), bank)
    back = np.rot90(rotated.orientation, k=-1)
    confident = (original.confidence > 0.5)[9:-9, 9:-9]
    # un cuarto de vuelta desplaza la orientacion en pi/2 (mod pi)
    expected = (original.orientation - np.pi / 2) % np.pi
    assert angular_error(back[9:-9, 9:-9][confident], expected[9:-9, 9:-9][confident]).max() <= np.pi / 32


def test_half_turn_keeps_orientation(bank):
    image = grating(bank.angles[11])
    original = extract_structure(image, bank)
    turned = extract_structure(np.rot90(image, 2), bank)
    back = np.rot90(turned.orientation, 2)
    confident = (original.confidence > 0.5)[9:-9, 9:-9]
    err = angular_error(back[9:-9, 9:-9][confident], original.orientation[9:-9, 9:-9][confident])
    assert err.max() <= np.pi / 32


def test_nan_image_is_numeric_error(bank):
    image = np.zeros((16, 16))
    image[3, 3] = np.nan
    with pytest.raises(NumericError):
        extract_structure(image, bank)


def test_color_image_is_dimension_error(bank):
    with pytest.raises(DimensionError):
        extract_structure(np.zeros((8, 8, 3)), bank)


@pytest.mark.slow
def test_all_angles_on_full_frame_gratings(bank):
    for i, theta in enumerate(bank.angles):
        start = time.perf_counter()
        field = extract_structure(grating(theta, size=256), bank)
        assert time.perf_counter() - start < 10.0
        inner = (slice(9, -9), slice(9, -9))
        confident = field.confidence[inner] > 0.5
        correct = angular_error(field.orientation[inner][confident], theta) <= np.pi / 64
        assert correct.mean() >= 0.95, f"angulo {i}"


def test_zero_sigma_is_identity(rng):
    field = StructureField(
        orientation=rng.uniform(0, np.pi, (8, 8)).astype(np.float32),
        confidence=rng.uniform(0, 1, (8, 8)).astype(np.float32),
    )
    smoothed = smooth_orientation(field, 0.0)
    np.testing.assert_array_equal(smoothed.orientation, field.orientation)
    np.testing.assert_array_equal(smoothed.confidence, field.confidence)


def test_uniform_field_is_fixed_point():
    field = StructureField(
        orientation=np.full((10, 10), 0.7, np.float32), confidence=np.ones((10, 10), np.float32)
    )
    for sigma in (0.5, 1.0, 3.0):
        smoothed = smooth_orientation(field, sigma)
        np.testing.assert_allclose(smoothed.orientation, 0.7, atol=1e-5)
        np.testing.assert_array_equal(smoothed.confidence, field.confidence)


def test_low_confidence_noise_is_pulled_to_neighbors(rng):
    orientation = np.full((8, 8), 0.3, np.float32)
    confidence = np.ones((8, 8), np.float32)
    orientation[:, 4] = rng.uniform(0, np.pi, 8).astype(np.float32)
    confidence[:, 4] = 0.0
    smoothed = smooth_orientation(StructureField(orientation, confidence), 1.0)
    assert angular_error(smoothed.orientation[:, 4], 0.3).max() < 1e-4


def test_negative_sigma_is_config_error():
    field = StructureField(np.zeros((2, 2), np.float32), np.zeros((2, 2), np.float32))
    with pytest.raises(ConfigError):
        smooth_orientation(field, -1.0)


def test_visualization_colors():
    shape = (2, 2)
    white = visualize_structure(StructureField(np.zeros(shape, np.float32), np.zeros(shape, np.float32)))
    np.testing.assert_allclose(white, 1.0)
    red = visualize_structure(StructureField(np.zeros(shape, np.float32), np.ones(shape, np.float32)))
    np.testing.assert_allclose(red[0, 0], [1.0, 0.0, 0.0])
    cyan = visualize_structure(StructureField(np.full(shape, np.pi / 2, np.float32), np.ones(shape, np.float32)))
    np.testing.assert_allclose(cyan[0, 0], [0.0, 1.0, 1.0], atol=1e-6)


def test_structure_file_keeps_values(tmp_path, rng):
    field = StructureField(
        orientation=rng.uniform(0, np.pi, (5, 6)).astype(np.float32),
        confidence=rng.uniform(0, 1, (5, 6)).astype(np.float32),
    )
    save_structure(tmp_path / "s.npy", field)
    loaded = load_structure(tmp_path / "s.npy")
    np.testing.assert_array_equal(loaded.as_array(), field.as_array())


def test_sequence_extraction_keeps_order(bank, small_sequence):
    fields = extract_structure_sequence(small_sequence.frames, bank, smoothing_sigma=1.0, n_jobs=2)
    assert len(fields) == len(small_sequence.frames)
    single = smooth_orientation(extract_structure(rgb_to_luminance(small_sequence.frames[2]), bank), 1.0)
    np.testing.assert_array_equal(fields[2].orientation, single.orientation)


def test_scaled_params_only_when_enabled():
    params = GaborParams()
    assert params.scaled_to((64, 64)) is params
    scaled = GaborParams(scale_with_resolution=True).scaled_to((128, 128))
    assert scaled.kernel_size % 2 == 1 and scaled.kernel_size >= 3
    assert scaled.wavelength == pytest.approx(1.5)


def test_shipped_config_keeps_reference_bank_at_desk_resolution():
    params = validate_section(GaborParams, load_config()["structure"])
    assert params.scaled_to((64, 64)) == params
    scaled = params.model_copy(update={"scale_with_resolution": True}).scaled_to((64, 64))
    assert scaled.wavelength == pytest.approx(0.75)
    assert scaled.kernel_size == 3
