#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace styleinv {

// Command bodies behind the CLI. They throw on failure; the CLI maps
// exceptions to exit code 2 and flag misuse to exit code 1.
int cmd_train(const std::string& config_path, std::optional<uint64_t> seed_override = {});
int cmd_invert(const std::string& checkpoint, const std::string& image_in,
               const std::string& image_out, const std::string& codes_out);
int cmd_edit(const std::string& checkpoint, const std::string& image_in,
             const std::string& direction_file, double alpha, const std::string& image_out);
int cmd_mix(const std::string& checkpoint, const std::string& image_a,
            const std::string& image_b, const std::vector<int64_t>& layers,
            const std::string& image_out);
int cmd_superres(const std::string& checkpoint, const std::string& image_in,
                 int64_t factor, const std::string& image_out);
int cmd_diff_heatmap(const std::string& checkpoint, const std::string& image_in,
                     const std::string& heatmap_out, const std::string& attn_out = "");
int cmd_metrics(const std::string& image_a, const std::string& image_b);

std::vector<int64_t> parse_layer_list(const std::string& spec);

}  // namespace styleinv
