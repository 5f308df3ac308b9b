#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace xvec {

// Runs body(i) for i in [0, n) across hardware threads. Each index is
// visited exactly once; callers must write only to slot i of their output.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned max_threads = 0);

std::vector<std::string_view> split(std::string_view s, char delim);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Strict numeric parse: whole field must be consumed.
bool parse_double(std::string_view s, double& out);

// Shortest round-trip-free fixed rendering with `digits` significant digits.
std::string format_sig(double v, int digits = 9);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Portable uniform draws on top of mt19937_64. The distribution objects in
// <random> are implementation-defined, so they are not used for anything that
// has to reproduce across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n), rejection-sampled.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace xvec
