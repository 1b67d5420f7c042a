#pragma once

#include <cstdint>
#include <string_view>

namespace mrtnet {

// FNV-1a, used for config/graph/model fingerprints embedded in artifacts.
class Fnv1a {
public:
    Fnv1a& mix_bytes(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t k = 0; k < len; ++k) {
            state_ ^= p[k];
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Fnv1a& mix(std::string_view s) { return mix_bytes(s.data(), s.size()); }
    Fnv1a& mix(std::uint64_t v) { return mix_bytes(&v, sizeof(v)); }
    Fnv1a& mix(std::int64_t v) { return mix_bytes(&v, sizeof(v)); }
    Fnv1a& mix(int v) { return mix(static_cast<std::int64_t>(v)); }
    Fnv1a& mix(double v) { return mix_bytes(&v, sizeof(v)); }

    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

} // namespace mrtnet
