#pragma once

#include <span>
#include <string_view>

#include "ersim/config.hpp"

// Ready-to-run experiment configurations.
namespace ersim::presets {

struct Preset {
  std::string_view name;
  std::string_view summary;
  std::string_view text;  // config file contents
};

std::span<const Preset> all();
/// nullptr if unknown.
const Preset* find(std::string_view name);
/// Parsed preset; ValidationError if unknown.
config::Config load(std::string_view name);

}  // namespace ersim::presets
