#pragma once

// Deterministic chunked Monte Carlo: work is cut into fixed-size chunks, chunk
// c draws from derive_seed(master, stream_base + c), and chunk results are
// returned in chunk order. The outcome is therefore independent of the number
// of worker threads.

#include "cltrace/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cltrace {

/// Count, mean and centred sum of squares; merged with Chan's formula.
struct RunningStats {
  double count = 0, mean = 0, m2 = 0;

  void add(double x) {
    count += 1;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const RunningStats& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / total;
    m2 += o.m2 + delta * delta * count * o.count / total;
    count = total;
  }

  double variance() const { return count > 1 ? m2 / (count - 1) : 0.0; }
  double standard_error() const { return count > 1 ? std::sqrt(variance() / count) : 0.0; }
};

inline constexpr long long kChunkSize = 4096;

/// Runs body(rng, count) over ceil(total / chunk) chunks on `workers` threads
/// and returns the per-chunk results in chunk order.
template <class Result>
std::vector<Result> run_chunks(std::uint64_t master, std::uint64_t stream_base, long long total, int workers,
                               const std::function<Result(Rng&, long long)>& body,
                               long long chunk = kChunkSize) {
  const long long chunks = total <= 0 ? 0 : (total + chunk - 1) / chunk;
  std::vector<Result> results(static_cast<std::size_t>(chunks));
  std::atomic<long long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const long long c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        Rng rng = make_rng(master, stream_base + static_cast<std::uint64_t>(c));
        const long long count = std::min(chunk, total - c * chunk);
        results[static_cast<std::size_t>(c)] = body(rng, count);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = chunks;
      }
    }
  };
  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(std::max<long long>(chunks, 1))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

/// Element-wise merge of per-chunk statistic vectors, in chunk order.
inline std::vector<RunningStats> merge_stats(const std::vector<std::vector<RunningStats>>& chunks, std::size_t width) {
  std::vector<RunningStats> out(width);
  for (const auto& c : chunks)
    for (std::size_t i = 0; i < width && i < c.size(); ++i) out[i].merge(c[i]);
  return out;
}

}  // namespace cltrace
