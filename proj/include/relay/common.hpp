#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace relay {

// Dense row-major matrix of doubles. Small sizes throughout (<= a few
// thousand rows, <= 16 columns), so no BLAS backing.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    bool operator==(const Mat&) const = default;
};

// splitmix64: used for seed derivation and for test-instance generation.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform double in [0,1), 53-bit resolution
    double u01() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

    uint64_t below(uint64_t n) { return next() % n; }
};

uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64(const std::string& s);

// Shortest decimal form that round-trips the exact double value.
std::string format_double(double v);

// File checksum used by the experiment manifest. Throws std::runtime_error
// if the file cannot be read.
uint64_t file_checksum(const std::string& path);

} // namespace relay
