#pragma once

#include <cstddef>
#include <vector>

#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace metastab::app {

/// out[i] = fn(i) for i < count on a work-stealing pool of `workers`
/// threads. Results land by index, so the output does not depend on the
/// worker count or on scheduling.
template <class Fn>
auto parallel_map(std::size_t count, std::size_t workers, Fn&& fn) {
    using T = decltype(fn(std::size_t{}));
    std::vector<T> out(count);
    tbb::global_control limit(tbb::global_control::max_allowed_parallelism, workers);
    tbb::task_arena arena(static_cast<int>(workers));
    arena.execute([&] {
        tbb::parallel_for(std::size_t{0}, count, [&](std::size_t i) { out[i] = fn(i); });
    });
    return out;
}

}  // namespace metastab::app
