#pragma once

// Model checkpoint container. Layout is documented in docs/checkpoint_format.md.

#include <filesystem>
#include <string>
#include <string_view>

#include "edl/net.hpp"

namespace edl {

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_string(const ModelParams& params);
ModelParams checkpoint_from_string(std::string_view text);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace edl
