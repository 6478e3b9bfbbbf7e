#include "ccep/parallel.hpp"

#include <thread>
#include <vector>

namespace ccep {

void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t, std::size_t, int)>& fn) {
  if (n == 0) return;
  if (jobs <= 1 || n == 1) {
    fn(0, n, 0);
    return;
  }
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back(fn, begin, end, static_cast<int>(w));
  }
  for (auto& t : threads) t.join();
}

}  // namespace ccep
