// Copyright 2026 The ppba Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Operation identifiers and the per-op value layout of an augmentation policy.

#ifndef PPBA_POLICY_HPP_
#define PPBA_POLICY_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace ppba {

// Declaration order is the fixed execution order of the policy executor.
enum class OpKind : std::uint8_t {
  kGroundTruthAugmentor = 0,
  kRandomFlip,
  kWorldScaling,
  kGlobalTranslateNoise,
  kFrustumDropout,
  kFrustumNoise,
  kRandomRotation,
  kRandomDropout,
};
inline constexpr std::size_t kNumOps = 8;

inline constexpr std::array<OpKind, kNumOps> kAllOps = {
    OpKind::kGroundTruthAugmentor, OpKind::kRandomFlip,
    OpKind::kWorldScaling,         OpKind::kGlobalTranslateNoise,
    OpKind::kFrustumDropout,       OpKind::kFrustumNoise,
    OpKind::kRandomRotation,       OpKind::kRandomDropout,
};

constexpr std::size_t index_of(OpKind op) { return static_cast<std::size_t>(op); }

std::string_view op_name(OpKind op);
std::optional<OpKind> parse_op(std::string_view name);

enum class FrustumRegion : std::uint8_t { kUnion = 0, kIntersection = 1 };

// Slot indices inside PolicyAssignment::values[op]. Slot 0 is always the
// probability that gates the op; for RandomFlip it is the flip probability.
namespace param {
namespace gt {
enum : std::size_t { kProb, kVehicleProb, kPedestrianProb, kCyclistProb, kOtherProb, kCount };
}
namespace flip {
enum : std::size_t { kFlipProb, kCount };
}
namespace scaling {
enum : std::size_t { kProb, kScalingRange, kCount };
}
namespace translate {
enum : std::size_t { kProb, kStdX, kStdY, kStdZ, kCount };
}
// Shared by FrustumDropout (magnitude = keep_prob) and FrustumNoise
// (magnitude = max_noise).
namespace frustum {
enum : std::size_t { kProb, kThetaWidth, kPhiWidth, kDistance, kMagnitude, kRegion, kCount };
}
namespace rotation {
enum : std::size_t { kProb, kMaxAngle, kCount };
}
namespace dropout {
enum : std::size_t { kProb, kDropoutProb, kCount };
}
}  // namespace param

std::size_t param_count(OpKind op);

// A concrete value for every parameter of every operation at one schedule
// step. Categorical values are stored as the choice index.
struct PolicyAssignment {
  std::array<std::vector<double>, kNumOps> values;

  std::vector<double>& operator[](OpKind op) { return values[index_of(op)]; }
  const std::vector<double>& operator[](OpKind op) const {
    return values[index_of(op)];
  }
  bool operator==(const PolicyAssignment&) const = default;
};

}  // namespace ppba

#endif  // PPBA_POLICY_HPP_
