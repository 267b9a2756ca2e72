#include "angiorecon/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace angiorecon {
namespace {

std::atomic<int> g_default_jobs{1};

}  // namespace

void set_default_jobs(int jobs) { g_default_jobs = jobs; }

int default_jobs() {
  const int j = g_default_jobs;
  if (j > 0) return j;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  if (jobs <= 0) jobs = default_jobs();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  // Small problems are not worth a thread spawn.
  if (workers <= 1 || n < 64) {
    body(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      threads.emplace_back([&, w, begin, end] {
        try {
          body(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace angiorecon
