/*
 * Copyright 2026 The UniRec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace unirec {

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic random stream. Samples are drawn with hand-rolled rules on
// top of mt19937_64 rather than <random> distributions, whose output is
// implementation-defined; a (seed, call sequence) pair fully determines the
// stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); unbiased via rejection. n must be positive.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t nn = static_cast<std::uint64_t>(n);
    const std::uint64_t bound = UINT64_MAX - UINT64_MAX % nn;
    std::uint64_t x = gen_();
    while (x >= bound) x = gen_();
    return static_cast<std::size_t>(x % nn);
  }

  // Independent child stream identified by a tag.
  Rng child(std::uint64_t tag) const { return Rng(mix64(seed_ ^ mix64(tag))); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::swap(v[i], v[uniform_index(i + 1)]);
    }
  }

  // Sample k distinct indices from [0, n) \ excluded, in random order.
  // Caller guarantees enough eligible elements exist.
  template <class Excluded>
  std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k,
                                           const Excluded& is_excluded) {
    std::vector<std::size_t> out;
    out.reserve(k);
    // Rejection works well while k is small relative to the eligible count;
    // fall back to an explicit eligible list otherwise.
    if (k * 4 <= n) {
      std::vector<bool> taken(n, false);
      std::size_t guard = 0;
      while (out.size() < k) {
        std::size_t i = uniform_index(n);
        if (!taken[i] && !is_excluded(i)) {
          taken[i] = true;
          out.push_back(i);
        }
        if (++guard > 64 * (k + 16)) break;
      }
    }
    if (out.size() < k) {
      std::vector<std::size_t> eligible;
      eligible.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (!is_excluded(i)) eligible.push_back(i);
      }
      out.clear();
      shuffle(eligible);
      for (std::size_t i = 0; i < k && i < eligible.size(); ++i) {
        out.push_back(eligible[i]);
      }
    }
    return out;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace unirec
