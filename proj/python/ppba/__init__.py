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

"""Point-cloud augmentation ops and population based schedule search."""

import json

import numpy as np

from . import _core
from ._core import FormatError, IntegrityError, ValidationError

__all__ = [
    "FormatError",
    "IntegrityError",
    "ValidationError",
    "apply_policy",
    "extract_schedule",
    "frustum_candidates",
    "identity_policy",
    "parameter_names",
    "replay_surrogate",
    "run_search",
    "sample_policy",
]


def _space(space):
    return "" if space is None else json.dumps(space)


def parameter_names(space=None):
    return _core.parameter_names(_space(space))


def identity_policy(space=None):
    return json.loads(_core.identity_policy(_space(space)))


def sample_policy(seed, space=None):
    return json.loads(_core.sample_policy(seed, _space(space)))


def apply_policy(points, boxes, policy, seed, space=None):
    """Returns (points, boxes, boxes_pasted, warnings).

    points: (n, 4) x, y, z, intensity. boxes: (k, 8) cx, cy, cz, length,
    width, height, heading, label. No paste database is used from Python.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 4)
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 8)
    return _core.apply_policy(points, boxes, json.dumps(policy), seed, _space(space))


def frustum_candidates(points, anchor, theta_width, phi_width, distance,
                       intersection=False):
    points = np.asarray(points, dtype=np.float64).reshape(-1, 4)
    return np.array(
        _core.frustum_candidates(points, anchor, theta_width, phi_width,
                                 distance, intersection), dtype=bool)


def run_search(config, surrogate, method="ppba"):
    """Runs a search on a surrogate objective; returns the schedule log text."""
    return _core.run_search(json.dumps(config), json.dumps(surrogate), method)


def extract_schedule(log_text, iteration, trial):
    return json.loads(_core.extract_schedule(log_text, iteration, trial))


def replay_surrogate(log_text, surrogate, iteration, trial):
    return _core.replay_surrogate(log_text, json.dumps(surrogate), iteration, trial)
