#pragma once

#include "styleinv/trainer.hpp"

#include <string>
#include <utility>
#include <vector>

namespace styleinv {

// Flat key-value config text: one `section.key = value` per line, `#` starts
// a comment. Unknown keys are an error naming the key.
std::vector<std::pair<std::string, std::string>> parse_config_lines(const std::string& text);

TrainConfig config_from_text(const std::string& text);
TrainConfig load_config_file(const std::string& path);

// Canonical serialization; config_from_text(config_to_text(c)) == c.
std::string config_to_text(const TrainConfig& cfg);

}  // namespace styleinv
