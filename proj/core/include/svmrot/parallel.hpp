#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace svmrot {

// Runs body(begin, end) over [0, count) split into `threads` contiguous
// chunks. threads == 0 uses the hardware concurrency. Callers must keep the
// per-index work independent of the partition.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t chunks = std::min<std::size_t>(threads, std::max<std::size_t>(count, 1));
  if (chunks <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(chunks - 1);
  const std::size_t per = (count + chunks - 1) / chunks;
  for (std::size_t c = 1; c < chunks; ++c) {
    const std::size_t b = std::min(count, c * per);
    const std::size_t e = std::min(count, b + per);
    workers.emplace_back([&body, b, e] { body(b, e); });
  }
  body(std::size_t{0}, std::min(count, per));
}

}  // namespace svmrot
