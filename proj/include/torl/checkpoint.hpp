#pragma once

#include <string>

#include "torl/numeric.hpp"

namespace torl {

// Flat binary container: magic "TORL1", uint32 LE header length, JSON header
// listing (name, shape, offset) per entry, then raw little-endian float32
// values in row-major order.
void save_checkpoint(const ParameterStore<float>& params, const std::string& path);
ParameterStore<float> load_checkpoint(const std::string& path);

}  // namespace torl
