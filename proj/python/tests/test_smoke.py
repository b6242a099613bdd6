# Copyright 2026 The ppba Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json

import numpy as np
import pytest

import ppba

SURROGATE = {"format": "ppba-surrogate", "version": 1, "family": "static_target",
             "horizon_steps": 1, "seed": 7}
CONFIG = {"num_trials": 4, "num_iterations": 3, "steps_first_iteration": 20,
          "steps_per_iteration": 10, "seed": 3}


def scene(seed, n=200):
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(-40, 40, n), rng.uniform(-40, 40, n),
                           rng.uniform(-2, 2, n), rng.uniform(0, 1, n)])
    boxes = np.array([[5.0, 3.0, -1.0, 4.0, 1.8, 1.5, 0.3, 0.0]])
    return pts, boxes


def test_parameter_names():
    names = ppba.parameter_names()
    assert len(names) == 28
    assert len(set(names)) == 28
    assert "random_rotation.max_angle" in names


def test_identity_policy_is_a_no_op():
    pts, boxes = scene(1)
    out_pts, out_boxes, pasted, _ = ppba.apply_policy(pts, boxes, ppba.identity_policy(), 5)
    assert pasted == 0
    np.testing.assert_array_equal(out_pts, pts)
    np.testing.assert_array_equal(out_boxes, boxes)


def test_apply_is_deterministic_in_seed():
    pts, boxes = scene(2)
    policy = ppba.sample_policy(11)
    a = ppba.apply_policy(pts, boxes, policy, 4)
    b = ppba.apply_policy(pts, boxes, policy, 4)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_policy_missing_parameter_is_rejected():
    policy = ppba.identity_policy()
    policy.pop("random_rotation.max_angle", None)
    policy.get("params", {}).pop("random_rotation.max_angle", None)
    pts, boxes = scene(3)
    with pytest.raises(ValueError):
        ppba.apply_policy(pts, boxes, policy, 1)


@pytest.mark.parametrize("intersection", [False, True])
def test_frustum_candidates_against_numpy(intersection):
    pts, _ = scene(4, 500)
    anchor, tw, pw, dist = 7, 0.6, 0.8, 12.0
    got = ppba.frustum_candidates(pts, anchor, tw, pw, dist, intersection=intersection)

    r = np.linalg.norm(pts[:, :3], axis=1)
    polar = np.arccos(np.clip(pts[:, 2] / r, -1.0, 1.0))
    azimuth = np.arctan2(pts[:, 1], pts[:, 0])

    def gap(a, b):
        d = np.abs(a - b) % (2 * np.pi)
        return np.minimum(d, 2 * np.pi - d)

    in_polar = gap(polar, polar[anchor]) <= tw / 2
    in_azimuth = gap(azimuth, azimuth[anchor]) <= pw / 2
    cone = in_polar & in_azimuth if intersection else in_polar | in_azimuth
    want = cone & (r > dist)
    assert got.dtype == bool
    assert got.shape == (500,)
    np.testing.assert_array_equal(got, want)


def test_search_is_deterministic_and_replays():
    log_a = ppba.run_search(CONFIG, SURROGATE)
    log_b = ppba.run_search(CONFIG, SURROGATE)
    assert log_a == log_b
    records = [json.loads(line) for line in log_a.splitlines()[1:] if line.strip()]
    assert len(records) == 12
    best = max((r for r in records if r.get("iteration") == 2), key=lambda r: r["metric"])
    schedule = ppba.extract_schedule(log_a, best["iteration"], best["trial"])
    assert schedule
    replayed = ppba.replay_surrogate(log_a, SURROGATE, best["iteration"], best["trial"])
    assert replayed == best["metric"]


def test_pba_baseline_runs():
    log = ppba.run_search(CONFIG, SURROGATE, method="pba")
    assert len(log.splitlines()) == 13
    with pytest.raises(ValueError):
        ppba.run_search(CONFIG, SURROGATE, method="bogus")
