#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

#include "geometry.hpp"

namespace qcg {

inline constexpr std::uint64_t kChunkSize = 65536;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Substream keyed by (seed, stream index).
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream)
      : eng_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  std::uint64_t next() { return eng_(); }

  /// Uniform point in the closed unit ball by rejection.
  VecN in_ball(int n) {
    VecN v(n);
    for (;;) {
      double r2 = 0.0;
      for (int i = 0; i < n; ++i) {
        v[i] = 2.0 * uniform() - 1.0;
        r2 += v[i] * v[i];
      }
      if (r2 <= 1.0) return v;
    }
  }

 private:
  std::mt19937_64 eng_;
};

/// Process `count` indices in fixed-size chunks. `body(chunk, begin, end)` runs
/// once per chunk; chunk results are kept by index so reductions done by the
/// caller in chunk order are independent of the thread schedule.
inline void for_each_chunk(std::uint64_t count, std::uint64_t chunk_size, int threads,
                           const std::function<void(std::uint64_t, std::uint64_t, std::uint64_t)>& body) {
  if (chunk_size == 0) chunk_size = kChunkSize;
  const std::uint64_t chunks = (count + chunk_size - 1) / chunk_size;
  auto run = [&](std::uint64_t c) { body(c, c * chunk_size, std::min(count, (c + 1) * chunk_size)); };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(chunks)));
  if (workers <= 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) run(c);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::uint64_t c = static_cast<std::uint64_t>(w); c < chunks; c += static_cast<std::uint64_t>(workers)) run(c);
    });
  for (auto& t : pool) t.join();
}

/// Index-parallel loop over [0, count) with the same scheduling rules.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  for_each_chunk(count, 1, threads, [&](std::uint64_t, std::uint64_t b, std::uint64_t) { body(static_cast<std::size_t>(b)); });
}

/// Running sums for a sample mean and its standard error.
struct MeanAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t count = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  void merge(const MeanAccumulator& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    count += o.count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double std_error() const {
    if (count < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - static_cast<double>(count) * m * m) / static_cast<double>(count - 1));
    return std::sqrt(var / static_cast<double>(count));
  }
};

}  // namespace qcg
