// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_PARALLEL_HPP
#define GIBC_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace gibc
{

// Worker count: explicit value if positive, else GIBC_WORKERS, else hardware concurrency.
inline int resolve_workers(int requested = 0)
{
  if (requested > 0)
  {
    return requested;
  }
  if (const char *env = std::getenv("GIBC_WORKERS"))
  {
    const int v = std::atoi(env);
    if (v > 0)
    {
      return v;
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

//
// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be written to
// per-index slots so the outcome does not depend on scheduling. The first exception thrown
// by any task is rethrown after all threads join.
//
template <typename Fn>
void parallel_for(int n, int workers, Fn &&fn)
{
  workers = std::max(1, std::min(workers, n));
  if (workers == 1)
  {
    for (int i = 0; i < n; ++i)
    {
      fn(i);
    }
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
  {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++)
      {
        try
        {
          fn(i);
        }
        catch (...)
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error)
          {
            error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto &t : pool)
  {
    t.join();
  }
  if (error)
  {
    std::rethrow_exception(error);
  }
}

}  // namespace gibc

#endif  // GIBC_PARALLEL_HPP
