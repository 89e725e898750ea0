import math

import numpy as np
import pytest
from scipy import stats

from pointfilter.simulator import (ScenarioSpec, Track, default_scenario, generate, ground_truth,
                                   to_cartesian, to_polar, with_clean_sensing)


def one_track_spec(**kw):
    base = dict(num_frames=30, tracks=(Track(10, 20, (100.0, -40.0), "cv", velocity=(3.0, 1.0)),))
    base.update(kw)
    return ScenarioSpec(**base)


def test_noise_free_frames_equal_truth():
    spec = one_track_spec(sigma_r=0.0, sigma_theta=0.0, lambda_c=0.0)
    truth, frames = generate(spec)
    for gt, fr in zip(truth, frames):
        assert fr.time_step == gt.time_step
        np.testing.assert_allclose(fr.points, gt.positions, atol=1e-9)


def test_lifespan_gate():
    truth, frames = generate(one_track_spec(lambda_c=0.0))
    present = [fr.time_step for fr in frames if len(fr) > 0]
    assert present == list(range(10, 20))
    assert [gt.time_step for gt in truth if gt.labels] == list(range(10, 20))


def test_clutter_count_mean():
    spec = ScenarioSpec(num_frames=100, tracks=(), lambda_c=20.0, seed=3)
    _, frames = generate(spec)
    assert 17 <= np.mean([len(f) for f in frames]) <= 23


def test_default_fixture_values():
    spec = default_scenario()
    assert len(spec.tracks) == 10
    assert spec.sigma_r == 10.0 and spec.sigma_theta == math.pi / 90
    assert spec.num_frames == 100 and spec.range_max == 1000.0
    assert {t.motion for t in spec.tracks} == {"cv", "ct"}
    assert len({t.birth_frame for t in spec.tracks}) > 1
    for gt in ground_truth(spec):
        assert np.all(np.hypot(*gt.positions.T) < spec.range_max)


def test_reproducible():
    a_truth, a = generate(default_scenario(seed=11))
    b_truth, b = generate(default_scenario(seed=11))
    for fa, fb in zip(a, b):
        assert fa.points.tobytes() == fb.points.tobytes()
    _, c = generate(default_scenario(seed=12))
    assert any(len(x) != len(y) or not np.array_equal(x.points, y.points) for x, y in zip(a, c))


def test_polar_round_trip():
    xy = np.random.default_rng(0).uniform(-1000, 1000, size=(1000, 2))
    back = to_cartesian(*to_polar(xy))
    assert np.max(np.abs(back - xy)) <= 1e-9


def test_clutter_is_uniform_in_range_and_bearing():
    spec = ScenarioSpec(num_frames=500, tracks=(), lambda_c=20.0, seed=5)
    _, frames = generate(spec)
    pts = np.vstack([f.points for f in frames])
    assert pts.shape[0] > 9000
    r, theta = to_polar(pts[:10000])
    for values, lo, hi in ((r, 0.0, spec.range_max), (theta, -math.pi, math.pi)):
        counts, _ = np.histogram(values, bins=20, range=(lo, hi))
        assert stats.chisquare(counts).pvalue > 0.01


def test_coordinated_turn_keeps_speed_and_turn_rate():
    tr = Track(0, 50, (0.0, 0.0), "ct", speed=4.0, heading=0.3, turn_rate=0.05)
    steps = np.diff(tr.positions(), axis=0)
    headings = np.unwrap(np.arctan2(steps[:, 1], steps[:, 0]))
    np.testing.assert_allclose(np.hypot(*steps.T), 4.0 * np.sinc(0.05 / 2 / np.pi), rtol=1e-12)
    np.testing.assert_allclose(np.diff(headings), 0.05, atol=1e-12)


def test_straight_ct_matches_cv():
    ct = Track(0, 5, (1.0, 2.0), "ct", speed=2.0, heading=0.0)
    cv = Track(0, 5, (1.0, 2.0), "cv", velocity=(2.0, 0.0))
    np.testing.assert_allclose(ct.positions(), cv.positions())


def test_clean_sensing_copy():
    spec = with_clean_sensing(default_scenario())
    assert spec.sigma_r == spec.sigma_theta == spec.lambda_c == 0.0
    assert spec.tracks == default_scenario().tracks


def test_json_round_trip(tmp_path):
    spec = default_scenario(lambda_c=35.0, seed=4)
    spec.save(tmp_path / "s.json")
    assert ScenarioSpec.load(tmp_path / "s.json") == spec


@pytest.mark.parametrize("bad", [
    dict(num_frames=0),
    dict(tracks=(Track(5, 40, (0.0, 0.0)),)),
    dict(sigma_r=-1.0),
    dict(lambda_c=-0.5),
    dict(p_detect=1.5),
])
def test_invalid_specs(bad):
    with pytest.raises(ValueError):
        one_track_spec(**bad)


def test_track_guards():
    with pytest.raises(ValueError):
        Track(5, 5, (0.0, 0.0))
    with pytest.raises(ValueError):
        Track(0, 5, (0.0, 0.0), "spiral")
