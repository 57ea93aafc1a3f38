#pragma once

#include <array>
#include <string>
#include <string_view>

#include "ssfi/error.hpp"

namespace ssfi {

// Emotiv Epoc montage, in recording order. Every matrix/vector indexed by
// channel in this library follows this order.
inline constexpr std::array<std::string_view, 14> kChannelNames = {
    "AF3", "F7", "F3", "FC5", "T7", "P7", "O1",
    "O2", "P8", "T8", "FC6", "F4", "F8", "AF4",
};

inline constexpr std::size_t kNumChannels = kChannelNames.size();

inline std::size_t channel_index(std::string_view name) {
    for (std::size_t i = 0; i < kChannelNames.size(); ++i) {
        if (kChannelNames[i] == name) return i;
    }
    throw argument_error("unknown channel name: " + std::string(name));
}

}  // namespace ssfi
