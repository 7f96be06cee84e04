#pragma once

#include <filesystem>

#include "freqdisc/image.hpp"

namespace freqdisc {

/// 8-bit PNG; 1 channel -> gray, 3 -> RGB, 4 -> RGBA. Values are scaled by 255
/// with round-half-up after clamping to [0,1].
void write_png(const std::filesystem::path& path, const ImageTensor& image);
ImageTensor read_png(const std::filesystem::path& path);

/// Raw tensor: "FQD1", u32 C, u32 H, u32 W (little endian), then C*H*W float32 LE.
void write_tensor(const std::filesystem::path& path, const ImageTensor& image);
ImageTensor read_tensor(const std::filesystem::path& path);

}  // namespace freqdisc
