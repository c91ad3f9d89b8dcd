#pragma once

namespace polyfk {

/// How an assembly loop is executed. Both produce bit-identical results:
/// local contributions are computed independently and scattered in a fixed
/// order.
enum class Execution { serial, parallel };

/// Thread cap for parallel assembly: POLYFK_THREADS if set and positive,
/// otherwise the OpenMP default.
int assembly_threads();

/// Override the thread cap (0 restores the environment/OpenMP default).
void set_assembly_threads(int n);

} // namespace polyfk
