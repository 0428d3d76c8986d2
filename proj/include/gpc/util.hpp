#pragma once

// Small shared utilities: deterministic worker fan-out, trapezoid quadrature,
// repeatable number formatting, FNV-1a hashing, and filesystem helpers.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gpc {

// Run fn(i) for i in [0, n) across up to `workers` threads. Work is split
// into contiguous chunks; results must be written into per-index slots by the
// callee, which keeps outputs independent of the worker count and of thread
// scheduling. workers <= 1 runs inline; workers == 0 uses the hardware count.
void parallel_for(std::int64_t n, int workers, const std::function<void(std::int64_t)>& fn);

int resolve_workers(int workers);

// Trapezoid rule over an ascending grid.
double trapezoid(const std::vector<double>& grid, const std::vector<double>& values);
// Cumulative trapezoid: out[i] = integral from grid[0] to grid[i].
std::vector<double> cumulative_trapezoid(const std::vector<double>& grid,
                                         const std::vector<double>& values);

// Shortest round-trip decimal for a double (stable across runs; used by every
// writer so reruns are byte-identical).
std::string format_double(double v);

// FNV-1a 64-bit over bytes, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

// Write a file atomically enough for our purposes (truncate + write, '\n'
// endings only). Throws std::runtime_error on failure.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace gpc
