#pragma once

#include <array>
#include <string>
#include <string_view>

#include "ssfi/error.hpp"

namespace ssfi {

struct Band {
    std::string_view name;
    double lo_hz;
    double hi_hz;
};

// The six canonical EEG bands, ordered by lower edge. Contiguous from
// 0.1 Hz to 64 Hz; the 0-0.1 Hz sliver belongs to no band.
inline constexpr std::array<Band, 6> kBands = {{
    {"delta", 0.1, 4.0},
    {"theta", 4.0, 8.0},
    {"alpha", 8.0, 14.0},
    {"beta", 14.0, 30.0},
    {"gamma1", 30.0, 47.0},
    {"gamma2", 47.0, 64.0},
}};

inline constexpr std::size_t kNumBands = kBands.size();

inline std::size_t band_index(std::string_view name) {
    for (std::size_t i = 0; i < kBands.size(); ++i) {
        if (kBands[i].name == name) return i;
    }
    throw argument_error("unknown band name: " + std::string(name));
}

}  // namespace ssfi
