#include "polyfk/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>

namespace polyfk {

namespace {
std::atomic<int> g_override{0};
}

int assembly_threads() {
  if (const int o = g_override.load(); o > 0)
    return o;
  if (const char *env = std::getenv("POLYFK_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0)
        return n;
    } catch (const std::exception &) {
    }
  }
  return omp_get_max_threads();
}

void set_assembly_threads(int n) { g_override.store(n > 0 ? n : 0); }

} // namespace polyfk
