#pragma once

#include <functional>

namespace speckle {

/// Worker count used by every row-parallel kernel in the library. Results
/// never depend on this value; only wall-clock time does.
void set_num_threads(int n);
int num_threads();

/// Runs fn(i) for i in [begin, end), split into contiguous blocks across
/// num_threads() workers. fn must only write state owned by index i.
/// Calls made from inside a worker run serially. The first exception (by
/// block order) is rethrown after every worker has finished.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace speckle
