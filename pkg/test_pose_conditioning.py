"""
Pruebas de keypoints, derivadas temporales, normalizacion y rasterizacion
"""

import json

import numpy as np
import pytest
from skimage.draw import line

from human_motion_transfer.data.pose_conditioning import (
    NUM_DERIVATIVE_CHANNELS,
    NUM_LIMB_GROUPS,
    DerivativeFrame,
    KeypointFrame,
    LimbMap,
    PoseConditioning,
    PoseStats,
    build_conditioning,
    compute_pose_stats,
    load_keypoints,
    normalize_poses,
    rasterize_derivatives,
    rasterize_skeleton,
    save_keypoints,
    temporal_derivatives,
)
from human_motion_transfer.exceptions import (
    ConfigError,
    KeypointParseError,
    KeypointSchemaError,
    NormalizationError,
)

TORSO = 2


def single_bone_map(group=TORSO, count=2):
    """Nueve grupos vacios salvo uno con el hueso (0, 1)"""
    groups = tuple((f"g{i}", ((0, 1),) if i == group else ()) for i in range(NUM_LIMB_GROUPS))
    return LimbMap(groups=groups, keypoint_count=count)


def moving_frames(xs, ys=None):
    ys = ys if ys is not None else [0.0] * len(xs)
    return [
        KeypointFrame(points=np.array([[x, y]]), valid=np.array([True]), frame_index=n)
        for n, (x, y) in enumerate(zip(xs, ys))
    ]


def write_keypoint_json(path, frames):
    path.write_text(json.dumps({"frames": frames}), encoding="utf-8")
    return path


def test_load_keypoints_two_frames(tmp_path):
    triples = [10.0, 20.0, 0.9] * 127
    path = write_keypoint_json(
        tmp_path / "kp.json",
        [{"frame_index": 0, "people": [{"pose_keypoints_2d": triples}]},
         {"frame_index": 1, "people": [{"pose_keypoints_2d": triples}]}],
    )
    frames = load_keypoints(path, count=127)
    assert len(frames) == 2
    assert all(frame.count == 127 for frame in frames)
    assert frames[1].frame_index == 1
    assert frames[0].valid.all()


def test_zero_confidence_marks_points_invalid(tmp_path):
    path = write_keypoint_json(
        tmp_path / "kp.json", [{"people": [{"pose_keypoints_2d": [5.0, 5.0, 0.0] * 127}]}]
    )
    assert not load_keypoints(path).pop().valid.any()


def test_confidence_threshold_is_inclusive(tmp_path):
    flat = [1.0, 1.0, 0.05, 2.0, 2.0, 0.049]
    path = write_keypoint_json(tmp_path / "kp.json", [{"people": [{"pose_keypoints_2d": flat}]}])
    frame = load_keypoints(path, count=2)[0]
    assert frame.valid.tolist() == [True, False]


def test_frame_without_people_is_all_invalid(tmp_path):
    path = write_keypoint_json(tmp_path / "kp.json", [{"frame_index": 0, "people": []}])
    frame = load_keypoints(path, count=127)[0]
    assert frame.count == 127
    assert not frame.valid.any()


def test_missing_triple_is_schema_error(tmp_path):
    path = write_keypoint_json(
        tmp_path / "kp.json", [{"people": [{"pose_keypoints_2d": [1.0, 1.0, 1.0] * 126}]}]
    )
    with pytest.raises(KeypointSchemaError):
        load_keypoints(path, count=127)


def test_malformed_record_names_frame(tmp_path):
    good = {"people": [{"pose_keypoints_2d": [1.0, 1.0, 1.0] * 2}]}
    bad = {"people": [{"pose_keypoints_2d": [1.0, 1.0]}]}
    path = write_keypoint_json(tmp_path / "kp.json", [good, bad])
    with pytest.raises(KeypointParseError, match="frame 1"):
        load_keypoints(path, count=2)


def test_invalid_json_is_parse_error(tmp_path):
    path = tmp_path / "kp.json"
    path.write_text("{frames: [", encoding="utf-8")
    with pytest.raises(KeypointParseError):
        load_keypoints(path)


def test_saved_keypoints_load_back(tmp_path, small_sequence):
    path = tmp_path / "kp.json"
    save_keypoints(path, small_sequence.keypoints)
    loaded = load_keypoints(path)
    for original, restored in zip(small_sequence.keypoints, loaded):
        np.testing.assert_array_equal(original.valid, restored.valid)
        np.testing.assert_allclose(original.points, restored.points)


def test_constant_pose_has_zero_derivatives():
    derivs = temporal_derivatives(moving_frames([4.0] * 5, [7.0] * 5))
    assert len(derivs) == 5
    for d in derivs:
        assert not d.first.any() and not d.second.any()


def test_linear_motion_derivatives():
    derivs = temporal_derivatives(moving_frames([3.0 * n for n in range(5)]))
    assert derivs[0].first[0, 0] == 0.0
    for n in range(1, 5):
        assert derivs[n].first[0, 0] == pytest.approx(3.0)
    for n in range(2, 5):
        assert derivs[n].second[0, 0] == pytest.approx(0.0)
    assert derivs[1].second[0, 0] == 0.0


def test_quadratic_motion_second_derivative():
    xs = [float(n * n) for n in range(6)]
    derivs = temporal_derivatives(moving_frames(xs))
    for n in range(2, 6):
        assert derivs[n].second[0, 0] == pytest.approx(xs[n] - 2 * xs[n - 1] + xs[n - 2])
        assert derivs[n].second[0, 0] == pytest.approx(2.0)


def test_invalid_stencil_point_zeroes_derivative():
    frames = moving_frames([0.0, 5.0, 10.0])
    frames[0] = KeypointFrame(points=np.array([[0.0, 0.0]]), valid=np.array([False]), frame_index=0)
    derivs = temporal_derivatives(frames)
    assert not derivs[1].valid[0]
    assert derivs[1].first[0, 0] == 0.0
    assert not derivs[2].valid[0]


def test_empty_sequence_gives_empty_outputs(limbs):
    assert temporal_derivatives([]) == []
    assert build_conditioning([], limbs, (32, 32)) == []


def _stats(height, ankle=100.0, hip=50.0):
    return PoseStats(ankle_y=ankle, torso_height=height, hip_x=hip)


def test_normalize_identity_when_stats_match(small_sequence):
    stats = _stats(20.0)
    out = normalize_poses(small_sequence.keypoints, stats, stats)
    for a, b in zip(out, small_sequence.keypoints):
        np.testing.assert_array_equal(a.points, b.points)


def test_normalize_doubles_bone_lengths():
    frame = KeypointFrame(points=np.array([[50.0, 60.0], [50.0, 100.0], [70.0, 100.0]]), valid=np.ones(3, bool))
    out = normalize_poses([frame], _stats(10.0), _stats(20.0))[0]
    for a, b in ((0, 1), (1, 2)):
        before = np.linalg.norm(frame.points[a] - frame.points[b])
        after = np.linalg.norm(out.points[a] - out.points[b])
        assert after == pytest.approx(2.0 * before)


def test_normalize_is_invertible(rng):
    frames = [KeypointFrame(points=rng.uniform(0, 64, (127, 2)), valid=np.ones(127, bool)) for _ in range(3)]
    src, tgt = _stats(13.0, 55.0, 30.0), _stats(21.0, 60.0, 33.0)
    back = normalize_poses(normalize_poses(frames, src, tgt), tgt, src)
    for a, b in zip(frames, back):
        np.testing.assert_allclose(a.points, b.points, atol=1e-9)


def test_degenerate_height_is_normalization_error(small_sequence):
    with pytest.raises(NormalizationError):
        normalize_poses(small_sequence.keypoints, _stats(0.0), _stats(10.0))


def test_pose_stats_ignore_invalid_points(small_sequence, limbs):
    stats = compute_pose_stats(small_sequence.keypoints, limbs.anchors)
    assert stats.torso_height > 0
    assert 0 <= stats.ankle_y < 32


def test_limb_map_has_nine_groups(limbs):
    assert len(limbs.groups) == NUM_LIMB_GROUPS
    assert limbs.keypoint_count == 127
    assert {"ankles", "hips", "neck"} <= set(limbs.anchors)


def test_limb_map_rejects_out_of_range_bone():
    groups = tuple((f"g{i}", ((0, 5),) if i == 0 else ()) for i in range(NUM_LIMB_GROUPS))
    with pytest.raises(ConfigError):
        LimbMap(groups=groups, keypoint_count=3)


def test_limb_map_rejects_wrong_group_count():
    with pytest.raises(ConfigError):
        LimbMap(groups=(("solo", ((0, 1),)),), keypoint_count=2)


def test_no_valid_keypoints_rasterize_to_zero(limbs):
    frame = KeypointFrame(points=np.full((127, 2), 10.0), valid=np.zeros(127, bool))
    assert not rasterize_skeleton(frame, limbs, (32, 32)).any()


def test_vertical_bone_sets_eleven_pixels():
    limbs = single_bone_map()
    frame = KeypointFrame(points=np.array([[10.0, 10.0], [10.0, 20.0]]), valid=np.ones(2, bool))
    skeleton = rasterize_skeleton(frame, limbs, (32, 32))
    assert skeleton[TORSO].sum() == 11
    assert skeleton[TORSO, 10:21, 10].all()
    assert skeleton.sum() == 11


def test_bone_outside_frame_is_clipped():
    limbs = single_bone_map()
    frame = KeypointFrame(points=np.array([[5.0, -10.0], [5.0, 10.0]]), valid=np.ones(2, bool))
    skeleton = rasterize_skeleton(frame, limbs, (32, 32))
    assert skeleton[TORSO].sum() == 11
    assert skeleton[TORSO, 0:11, 5].all()


def test_skeleton_matches_line_oracle(limbs, rng):
    size = (48, 40)
    for _ in range(100):
        frame = KeypointFrame(points=rng.uniform(-5, 50, (127, 2)), valid=rng.random(127) > 0.2)
        skeleton = rasterize_skeleton(frame, limbs, size)
        expected = np.zeros_like(skeleton)
        for g, (_, bones) in enumerate(limbs.groups):
            for a, b in bones:
                if not (frame.valid[a] and frame.valid[b]):
                    continue
                x0, y0 = np.rint(frame.points[a]).astype(int)
                x1, y1 = np.rint(frame.points[b]).astype(int)
                rr, cc = line(y0, x0, y1, x1)
                keep = (rr >= 0) & (rr < size[0]) & (cc >= 0) & (cc < size[1])
                expected[g, rr[keep], cc[keep]] = 1
        np.testing.assert_array_equal(skeleton, expected)


def test_derivative_interpolates_along_bone():
    limbs = single_bone_map()
    frame = KeypointFrame(points=np.array([[0.0, 5.0], [10.0, 5.0]]), valid=np.ones(2, bool))
    deriv = DerivativeFrame(
        first=np.array([[0.0, 0.0], [10.0, 0.0]]), second=np.zeros((2, 2)), valid=np.ones(2, bool)
    )
    maps = rasterize_derivatives(frame, deriv, limbs, (16, 16))
    assert maps.shape == (NUM_DERIVATIVE_CHANNELS, 16, 16)
    dx = maps[TORSO * 4 + 0]
    assert dx[5, 5] == pytest.approx(5.0)
    assert dx[5, 0] == pytest.approx(0.0)
    assert dx[5, 10] == pytest.approx(10.0)
    assert not maps[TORSO * 4 + 1].any()


def test_invalid_derivative_endpoint_keeps_skeleton():
    limbs = single_bone_map()
    frame = KeypointFrame(points=np.array([[0.0, 5.0], [10.0, 5.0]]), valid=np.ones(2, bool))
    deriv = DerivativeFrame(
        first=np.array([[1.0, 1.0], [10.0, 0.0]]), second=np.zeros((2, 2)), valid=np.array([False, True])
    )
    assert not rasterize_derivatives(frame, deriv, limbs, (16, 16)).any()
    assert rasterize_skeleton(frame, limbs, (16, 16))[TORSO].any()


def test_static_single_frame_conditioning(small_sequence, limbs):
    cond = build_conditioning(small_sequence.keypoints[:1], limbs, (32, 32))[0]
    assert cond.skeleton.any()
    assert not cond.derivatives.any()
    assert cond.as_array().shape == (45, 32, 32)


def test_linear_motion_conditioning_starts_at_second_frame():
    limbs = single_bone_map()
    frames = [
        KeypointFrame(points=np.array([[5.0 + n, 5.0], [5.0 + n, 15.0]]), valid=np.ones(2, bool), frame_index=n)
        for n in range(3)
    ]
    cond = build_conditioning(frames, limbs, (32, 32))
    assert not cond[0].derivatives.any()
    assert cond[1].derivatives[TORSO * 4 + 0].any()
    assert cond[2].derivatives[TORSO * 4 + 0].any()
    assert not cond[2].derivatives[TORSO * 4 + 2].any()


def test_derivatives_vanish_off_skeleton(small_sequence, limbs):
    for cond in build_conditioning(small_sequence.keypoints, limbs, (32, 32)):
        for g in range(NUM_LIMB_GROUPS):
            support = cond.skeleton[g].astype(bool)
            assert not cond.derivatives[g * 4:(g + 1) * 4][:, ~support].any()


def test_conditioning_rejects_wrong_channel_count():
    with pytest.raises(ConfigError):
        PoseConditioning(skeleton=np.zeros((8, 4, 4), np.uint8), derivatives=np.zeros((36, 4, 4), np.float32))


def test_sequence_without_ankles_fails_normalization(small_sequence, limbs):
    frames = []
    for frame in small_sequence.keypoints:
        valid = frame.valid.copy()
        valid[list(limbs.anchors["ankles"])] = False
        frames.append(KeypointFrame(points=frame.points, valid=valid, frame_index=frame.frame_index))
    stats = compute_pose_stats(frames, limbs.anchors)
    assert np.isnan(stats.ankle_y) and stats.torso_height > 0
    target = compute_pose_stats(small_sequence.keypoints, limbs.anchors)
    with pytest.raises(NormalizationError):
        normalize_poses(frames, stats, target)
    with pytest.raises(NormalizationError):
        normalize_poses(small_sequence.keypoints, target, stats)


def test_far_and_non_finite_endpoints_are_bounded():
    limbs = single_bone_map()
    far = KeypointFrame(points=np.array([[10.0, 10.0], [1e12, 10.0]]), valid=np.ones(2, bool))
    skeleton = rasterize_skeleton(far, limbs, (32, 32))
    assert skeleton[TORSO].sum() == 22
    assert skeleton[TORSO, 10, 10:].all()

    broken = KeypointFrame(points=np.array([[10.0, 10.0], [np.nan, 10.0]]), valid=np.ones(2, bool))
    assert not rasterize_skeleton(broken, limbs, (32, 32)).any()
    deriv = DerivativeFrame(first=np.ones((2, 2)), second=np.zeros((2, 2)), valid=np.ones(2, bool))
    assert not rasterize_derivatives(broken, deriv, limbs, (32, 32)).any()
