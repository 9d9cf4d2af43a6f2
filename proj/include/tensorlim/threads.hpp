#pragma once

#include <cstdint>
#include <functional>

namespace tensorlim {

// Global worker count. Work is split by static index ranges and every item
// writes its own slot, so results are identical for any thread count.
void set_thread_count(int n);
int thread_count();

// Reads TENSORLIM_THREADS if set, else hardware concurrency.
int default_thread_count();

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace tensorlim
