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

#include <algorithm>
#include <chrono>
#include <fstream>
#include <string>
#include <vector>

#include "unirec/model.hpp"

namespace unirec {

// Wall-time comparison of the two user-embedding paths: encoding the whole
// behavior sequence is O(N) at best, synthesizing the recall embedding from
// the memory touches only the M slots.

struct BenchRow {
  std::string phase;  // "user_encode" or "memory_compose"
  std::size_t n = 0;  // history length
  std::size_t m = 0;  // basis count (0 for user_encode rows)
  std::size_t rep = 0;
  double micros = 0.0;
};

namespace benchdetail {

inline double time_loop(const std::function<void()>& body, std::size_t iters) {
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < iters; ++i) body();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::micro>(stop - start).count() /
         static_cast<double>(iters);
}

}  // namespace benchdetail

// Runs both phases over the given grids. Each rep reports the mean time of a
// fixed inner loop; 5 extra warm-up reps are discarded per grid point.
inline std::vector<BenchRow> bench_recall_embedding(
    const RankingModel& model, const std::vector<std::size_t>& n_values,
    const std::vector<std::size_t>& m_values, std::size_t reps,
    std::uint64_t seed) {
  NoGradGuard ng;
  const std::size_t warmup = 5;
  const std::size_t d = model.cfg.dim;
  std::vector<BenchRow> rows;
  Rng rng(seed);

  for (std::size_t n : n_values) {
    if (n > model.cfg.max_history) {
      throw ConfigError("bench: N exceeds max_history");
    }
    Tensor hist = Tensor::uniform({n, d}, rng, -1, 1);
    const std::size_t iters = std::max<std::size_t>(1, 512 / std::max<std::size_t>(n, 1));
    for (std::size_t rep = 0; rep < reps + warmup; ++rep) {
      const double micros = benchdetail::time_loop(
          [&] { encode_user_rank(model, hist); }, iters);
      if (rep >= warmup) {
        rows.push_back({"user_encode", n, 0, rep - warmup, micros});
      }
    }
  }

  for (std::size_t n : n_values) {
    Tensor hist = Tensor::uniform({n, d}, rng, -1, 1);
    Tensor u_ra = encode_user_rank(model, hist);
    for (std::size_t m : m_values) {
      Rng mem_rng = rng.child(m);
      BasisMemory memory = BasisMemory::init(m, d, mem_rng);
      const std::size_t iters = std::max<std::size_t>(8, 4096 / std::max<std::size_t>(m, 1));
      for (std::size_t rep = 0; rep < reps + warmup; ++rep) {
        const double micros = benchdetail::time_loop(
            [&] {
              AttentionWeights aw = basis_attention(u_ra, memory);
              compose_recall_all(aw, memory);
            },
            iters);
        if (rep >= warmup) {
          rows.push_back({"memory_compose", n, m, rep - warmup, micros});
        }
      }
    }
  }
  return rows;
}

inline double median_micros(const std::vector<BenchRow>& rows,
                            const std::string& phase, std::size_t n,
                            std::size_t m) {
  std::vector<double> vals;
  for (const BenchRow& r : rows) {
    if (r.phase == phase && r.n == n && r.m == m) vals.push_back(r.micros);
  }
  if (vals.empty()) throw ConfigError("bench: no rows for " + phase);
  std::sort(vals.begin(), vals.end());
  return vals[vals.size() / 2];
}

struct BenchVerdict {
  double compose_n_ratio = 0.0;   // median at max N / median at min N
  bool compose_n_independent = false;
  bool user_encode_monotone = false;
  bool compose_m_monotone = false;
};

// The memory path must not scale with N (ratio within [0.5, 2]); the user
// encoder must slow down as N grows; a bigger memory must cost more.
inline BenchVerdict judge_bench(const std::vector<BenchRow>& rows,
                                const std::vector<std::size_t>& n_values,
                                const std::vector<std::size_t>& m_values) {
  BenchVerdict v;
  const std::size_t n_lo = *std::min_element(n_values.begin(), n_values.end());
  const std::size_t n_hi = *std::max_element(n_values.begin(), n_values.end());
  const std::size_t m_lo = *std::min_element(m_values.begin(), m_values.end());
  const std::size_t m_hi = *std::max_element(m_values.begin(), m_values.end());

  const double c_lo = median_micros(rows, "memory_compose", n_lo, m_lo);
  const double c_hi = median_micros(rows, "memory_compose", n_hi, m_lo);
  v.compose_n_ratio = c_hi / c_lo;
  v.compose_n_independent = v.compose_n_ratio >= 0.5 && v.compose_n_ratio <= 2.0;

  v.user_encode_monotone = true;
  std::vector<std::size_t> ns(n_values);
  std::sort(ns.begin(), ns.end());
  for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
    if (median_micros(rows, "user_encode", ns[i], 0) >=
        median_micros(rows, "user_encode", ns[i + 1], 0)) {
      v.user_encode_monotone = false;
    }
  }
  v.compose_m_monotone = median_micros(rows, "memory_compose", n_lo, m_hi) >
                         median_micros(rows, "memory_compose", n_lo, m_lo);
  return v;
}

inline void write_bench_csv(const std::vector<BenchRow>& rows,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write bench csv: " + path);
  out << "phase,n,m,rep,micros\n";
  char buf[64];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.3f", r.micros);
    out << r.phase << ',' << r.n << ',' << r.m << ',' << r.rep << ',' << buf
        << '\n';
  }
  if (!out) throw IoError("failed writing bench csv: " + path);
}

}  // namespace unirec
