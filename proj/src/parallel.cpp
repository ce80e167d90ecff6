#include "hetfx/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

namespace hetfx {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  SplitMix64 outer(seed);
  const std::uint64_t key = outer();
  SplitMix64 inner(key ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
  inner();
  return inner();
}

unsigned thread_count() {
  if (const char* env = std::getenv("HETFX_THREADS")) {
    try {
      const long value = std::stol(env);
      if (value > 0) return static_cast<unsigned>(value);
    } catch (const std::exception&) {
      // fall through to the hardware default
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t block = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(count, begin + block);
    threads.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

IndexVector draw_assignment(Eigen::Index n, Eigen::Index n1, SplitMix64& rng) {
  if (n1 <= 0 || n1 >= n) throw Error(ErrorCode::domain, "treated count must be in (0, n)");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  IndexVector t = IndexVector::Zero(n);
  // Partial Fisher-Yates: the first n1 slots become the treated set.
  for (Eigen::Index k = 0; k < n1; ++k) {
    const auto remaining = static_cast<std::uint64_t>(n - k);
    const auto pick = k + static_cast<Eigen::Index>(rng() % remaining);
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick)]);
    t[order[static_cast<std::size_t>(k)]] = 1;
  }
  return t;
}

}  // namespace hetfx
