#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace ptrmarket {

/// Worker cap for per-scenario work, from COUPLED_MARKET_THREADS (default:
/// hardware concurrency).
inline unsigned scenario_threads() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("COUPLED_MARKET_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) cap = static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return cap;
}

/// Evaluates fn(0..n-1) into an indexed vector; output order never depends on
/// scheduling. The first exception thrown by any task is rethrown.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(scenario_threads(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          out[i] = fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace ptrmarket
