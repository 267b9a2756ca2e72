#pragma once

#include <cstddef>
#include <functional>

namespace angiorecon {

/// Runs body(begin, end) over contiguous chunks of [0, n) on up to `jobs`
/// threads (jobs <= 0 means hardware concurrency). Callers write to disjoint
/// output slots, so results do not depend on the thread count.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Process-wide default for `jobs` arguments left at 0.
void set_default_jobs(int jobs);
int default_jobs();

}  // namespace angiorecon
