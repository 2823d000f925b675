#include "relay/common.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace relay {

uint64_t fnv1a64(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xCBF29CE484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string format_double(double v) {
    char buf[64];
    // shortest representation that parses back to the same bits
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for checksum: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a64(ss.str());
}

} // namespace relay
