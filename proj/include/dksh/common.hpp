#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace dksh {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SpMatrix = Eigen::SparseMatrix<double>;

// printf-style std::string builder
inline std::string strf(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    va_list args2;
    va_copy(args2, args);
    char buf[512];
    const int need = std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    if (need < static_cast<int>(sizeof(buf))) {
        va_end(args2);
        return std::string(buf, static_cast<std::size_t>(need > 0 ? need : 0));
    }
    std::string out(static_cast<std::size_t>(need) + 1, '\0');
    std::vsnprintf(out.data(), out.size(), fmt, args2);
    va_end(args2);
    out.resize(static_cast<std::size_t>(need));
    return out;
}

[[noreturn]] inline void fail(const std::string& msg) {
    throw std::runtime_error(msg);
}

void log_warn(const std::string& msg);

// ---------------------------------------------------------------------------
// Deterministic RNG utilities. All randomness in the library flows through
// mt19937_64 seeded via splitmix64 mixing, so independent streams can be
// derived per (seed, tag, index) and results are reproducible across runs
// and thread counts.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s ^= a + 0x9E3779B97F4A7C15ULL;
    h ^= splitmix64(s);
    s ^= b + 0xD1B54A32D192ED03ULL;
    h ^= splitmix64(s);
    return h;
}

// uniform integer in [0, n) by rejection; avoids implementation-defined
// std::uniform_int_distribution behavior
template <typename Rng>
std::uint64_t bounded(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % n;
}

template <typename Rng>
void fisher_yates(std::vector<int>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(bounded(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// ---------------------------------------------------------------------------
// FNV-1a content hashing for stage-cache keys.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xCBF29CE484222325ULL) {
    return fnv1a(s.data(), s.size(), h);
}

inline std::string hex16(std::uint64_t h) {
    return strf("%016llx", static_cast<unsigned long long>(h));
}

}  // namespace dksh
