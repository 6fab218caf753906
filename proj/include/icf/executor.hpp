#pragma once

#include <cstddef>
#include <functional>

namespace icf {

/// Runs fn(0..count-1) across at most `parallelism` threads. Tasks are
/// claimed from a shared counter, so completion order is arbitrary; callers
/// must aggregate results in index order themselves. The first exception by
/// task index is rethrown after all workers drain.
void parallel_for(std::size_t count, int parallelism, const std::function<void(std::size_t)>& fn);

}  // namespace icf
