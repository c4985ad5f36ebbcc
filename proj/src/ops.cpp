#include "times2d/tensor.hpp"

#include <atomic>

namespace times2d {

namespace {
std::atomic<bool> g_debug_checks{false};
}

void set_debug_checks(bool enabled) { g_debug_checks.store(enabled); }
bool debug_checks_enabled() { return g_debug_checks.load(std::memory_order_relaxed); }

} // namespace times2d
