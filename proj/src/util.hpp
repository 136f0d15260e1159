#ifndef STK_UTIL_HPP
#define STK_UTIL_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace stk {

// Shortest round-trip decimal form (std::to_chars). All CSV output goes
// through this so that re-running a command reproduces files byte for byte.
std::string fmt_double(double v);

// Half away from zero, the rounding used by stroke masking and rasterization.
long long round_half_away(double v);

// FNV-1a, 64 bit. Stable across runs and platforms; used to derive per-user
// sub-seeds and to hash output files in the determinism checks.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);

// Whole-file helpers. Writes go to "<path>.tmp" and are renamed into place.
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& contents);

std::vector<std::string> split_lines(const std::string& text);

}  // namespace stk

#endif
