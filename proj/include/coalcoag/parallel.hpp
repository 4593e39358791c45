#pragma once

// Replicate-parallel execution with one RNG stream per replicate.
//
// Stream rule: replicate r of a run with master seed s uses std::mt19937_64
// seeded from seed_seq{lo32(s), hi32(s), lo32(r), hi32(r)}. Results are stored
// by replicate index, so output does not depend on the thread count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace coalcoag {

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t master_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs fn(replicate_index, rng) for every replicate in [0, n) and returns the
/// results ordered by replicate index.
template <class Fn>
auto run_replicates(std::size_t n, std::uint64_t master_seed, Fn&& fn, unsigned threads = 0) {
  using Result = decltype(fn(std::size_t{0}, std::declval<Rng&>()));
  std::vector<Result> out(n);
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));

  auto one = [&](std::size_t r) {
    Rng rng = make_stream(master_seed, r);
    out[r] = fn(r, rng);
  };
  if (threads <= 1) {
    for (std::size_t r = 0; r < n; ++r) one(r);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t r = next++; r < n; r = next++) {
        try {
          one(r);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace coalcoag
