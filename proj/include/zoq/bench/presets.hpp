#pragma once

#include <string>
#include <vector>

#include "zoq/bench/config.hpp"

namespace zoq::bench {

struct PresetInfo {
  std::string name;
  std::string description;
};

std::vector<PresetInfo> list_presets();

/// Named experiment. paper_scale switches to d = 1000 and K ∈ {20000, 500}.
/// Throws ConfigError for an unknown name.
ExperimentConfig make_preset(const std::string& name, bool paper_scale = false);

}  // namespace zoq::bench
