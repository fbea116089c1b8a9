#include "esv/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace esv {

int thread_budget() {
  if (const char* env = std::getenv("ESV_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
    }
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

void parallel_for(size_t begin, size_t end, const std::function<void(size_t)>& fn) {
  if (begin >= end) return;
  size_t count = end - begin;
  size_t workers = static_cast<size_t>(thread_budget());
  if (workers > count) workers = count;
  if (workers <= 1 || count < 64) {
    for (size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  size_t chunk = (count + workers - 1) / workers;
  for (size_t w = 0; w < workers; ++w) {
    size_t lo = begin + w * chunk;
    size_t hi = lo + chunk < end ? lo + chunk : end;
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] {
      for (size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace esv
