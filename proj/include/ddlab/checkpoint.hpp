#pragma once

#include <filesystem>

#include "ddlab/neural.hpp"

namespace ddlab {

// Layout:
//   ddlab-params v1 input=<I> hidden=<w1,w2,...> actions=<A> count=<N>\n
//   N IEEE-754 binary64 values, little-endian, in ParameterBlocks::blocks() order
//   (each weight matrix in column-major order).
void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams load_checkpoint(const std::filesystem::path& path);

}  // namespace ddlab
