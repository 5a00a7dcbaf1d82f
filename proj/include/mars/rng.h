// Copyright 2026 The MARS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MARS_RNG_H_
#define MARS_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mars {

// Counter-based seed derivation: the same (base, stream...) always yields the
// same child seed, independent of how many draws other streams made.
uint64_t DeriveSeed(uint64_t base, std::initializer_list<uint64_t> stream);

// Thin wrapper over mt19937_64 with distribution code we own, so sampled
// values do not depend on the standard library's distribution algorithms.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  static Rng Derived(uint64_t base, std::initializer_list<uint64_t> stream) {
    return Rng(DeriveSeed(base, stream));
  }

  uint64_t Next() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  int UniformInt(int n);

  // Index drawn from an unnormalized nonnegative weight vector.
  int Categorical(std::span<const double> probs);

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (int i = static_cast<int>(items.size()) - 1; i > 0; --i) {
      std::swap(items[i], items[UniformInt(i + 1)]);
    }
  }

  std::string SerializeState() const;
  void RestoreState(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mars

#endif  // MARS_RNG_H_
