#include "harmsec/parallel.hpp"

#include <atomic>

namespace harmsec {

namespace {
std::atomic<int> g_workers{0};
}

int default_workers() {
  int w = g_workers.load();
  if (w > 0) return w;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void set_default_workers(int workers) { g_workers.store(workers > 0 ? workers : 0); }

}  // namespace harmsec
