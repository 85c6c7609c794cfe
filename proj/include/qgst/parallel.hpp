#pragma once

#include <cstddef>
#include <functional>

namespace qgst {

// Worker count used by parallel_for; 1 by default.
void set_num_threads(int n);
int num_threads();

// Calls body(i) for i in [0, n) across num_threads() workers. Each index is
// visited exactly once; callers write results into preallocated slots so
// output does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace qgst
