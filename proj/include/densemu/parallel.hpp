#pragma once

#include <cstddef>
#include <functional>

namespace densemu {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items must be
// independent; the first captured exception is rethrown after all
// workers join.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace densemu
