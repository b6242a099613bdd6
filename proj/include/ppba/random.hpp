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

#ifndef PPBA_RANDOM_HPP_
#define PPBA_RANDOM_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ppba {

// Counter-based random stream keyed by a hierarchical path.
//
// The n-th draw of a stream is a pure function of (seed, path, n), so streams
// handed to parallel trials never interact and a run can be replayed from the
// path alone. Child streams are derived with child("iter", 3) etc.; deriving a
// child does not advance the parent.
//
// All distributions are implemented here rather than through <random> so the
// draw sequence is identical across standard library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  RandomStream child(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform on {0, ..., n - 1}; n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via Box-Muller; consumes exactly two draws.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  // k distinct indices from {0, ..., n - 1}, in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t key() const { return key_; }
  std::uint64_t draws() const { return counter_; }
  // Human-readable stream path, e.g. "7/iter=3/trial=5/op=2".
  const std::string& id() const { return path_; }

 private:
  RandomStream(std::uint64_t seed, std::uint64_t key, std::string path);

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::string path_;
};

// SplitMix64 finalizer; exposed for seed derivation.
std::uint64_t mix64(std::uint64_t z);

}  // namespace ppba

#endif  // PPBA_RANDOM_HPP_
