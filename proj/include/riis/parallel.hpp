#pragma once

#include <cstddef>
#include <functional>

namespace riis {

/// Global cap on worker threads (the CLI's --threads). Defaults to 1.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Calls fn(i) for i in [0, n) on up to max_threads() threads. Each index is
/// visited exactly once; callers write into per-index slots and reduce in
/// index order afterwards so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace riis
