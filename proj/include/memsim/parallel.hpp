#pragma once

#include <cstddef>
#include <functional>

namespace memsim {

// Worker cap for parallel_for; 1 = serial. Results never depend on the
// setting: tasks write disjoint slots and reductions run in fixed order.
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Runs fn(i) for i in [0, n). Exceptions from workers are rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace memsim
