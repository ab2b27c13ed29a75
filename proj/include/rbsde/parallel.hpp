#pragma once

#include <cstddef>
#include <cstdint>

namespace rbsde {

/// Sets the number of OpenMP threads used by slice kernels. n <= 0 restores
/// the runtime default.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n). Iterations must be independent; results are
/// bit-identical for any thread count because every reduction a body performs
/// happens inside a single iteration in a fixed order.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (count > 256)
  for (std::int64_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
}

}  // namespace rbsde
