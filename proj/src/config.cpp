#include "styleinv/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace styleinv {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

int64_t to_i64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        auto r = std::stoll(v, &used);
        TORCH_CHECK(used == v.size(), "config key ", key, ": bad integer '", v, "'");
        return r;
    } catch (const std::logic_error&) {
        TORCH_CHECK(false, "config key ", key, ": bad integer '", v, "'");
    }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        auto r = std::stoull(v, &used);
        TORCH_CHECK(used == v.size(), "config key ", key, ": bad integer '", v, "'");
        return r;
    } catch (const std::logic_error&) {
        TORCH_CHECK(false, "config key ", key, ": bad integer '", v, "'");
    }
}

double to_f64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        auto r = std::stod(v, &used);
        TORCH_CHECK(used == v.size(), "config key ", key, ": bad number '", v, "'");
        return r;
    } catch (const std::logic_error&) {
        TORCH_CHECK(false, "config key ", key, ": bad number '", v, "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    TORCH_CHECK(false, "config key ", key, ": bad boolean '", v, "' (use true/false)");
}

std::array<int64_t, 4> to_i64x4(const std::string& key, const std::string& v) {
    std::array<int64_t, 4> out{};
    std::stringstream ss(v);
    std::string item;
    int i = 0;
    while (std::getline(ss, item, ',')) {
        TORCH_CHECK(i < 4, "config key ", key, ": expected 4 comma-separated integers");
        out[i++] = to_i64(key, trim(item));
    }
    TORCH_CHECK(i == 4, "config key ", key, ": expected 4 comma-separated integers");
    return out;
}

std::string fmt_f64(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_i64x4(const std::array<int64_t, 4>& a) {
    std::string s;
    for (int i = 0; i < 4; ++i) {
        if (i) s += ",";
        s += std::to_string(a[i]);
    }
    return s;
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"model.resolution", [](TrainConfig& c, const std::string& k, const std::string& v) { c.resolution = to_i64(k, v); }},
        {"model.style_dim", [](TrainConfig& c, const std::string& k, const std::string& v) { c.style_dim = to_i64(k, v); }},
        {"model.patch_size", [](TrainConfig& c, const std::string& k, const std::string& v) { c.patch_size = to_i64(k, v); }},
        {"model.stage_dims", [](TrainConfig& c, const std::string& k, const std::string& v) { c.stage_dims = to_i64x4(k, v); }},
        {"model.stage_depths", [](TrainConfig& c, const std::string& k, const std::string& v) { c.stage_depths = to_i64x4(k, v); }},
        {"model.stage_heads", [](TrainConfig& c, const std::string& k, const std::string& v) { c.stage_heads = to_i64x4(k, v); }},
        {"model.window_sizes", [](TrainConfig& c, const std::string& k, const std::string& v) { c.window_sizes = to_i64x4(k, v); }},
        {"map2style.window", [](TrainConfig& c, const std::string& k, const std::string& v) { c.lq_window = to_i64(k, v); }},
        {"map2style.block", [](TrainConfig& c, const std::string&, const std::string& v) { c.map2style_block = v; }},
        {"map2style.level_counts", [](TrainConfig& c, const std::string& k, const std::string& v) { c.level_counts = to_i64x4(k, v); }},
        {"generator.mapping_depth", [](TrainConfig& c, const std::string& k, const std::string& v) { c.mapping_depth = to_i64(k, v); }},
        {"generator.channel_base", [](TrainConfig& c, const std::string& k, const std::string& v) { c.channel_base = to_i64(k, v); }},
        {"generator.channel_max", [](TrainConfig& c, const std::string& k, const std::string& v) { c.channel_max = to_i64(k, v); }},
        {"generator.pretrain_steps", [](TrainConfig& c, const std::string& k, const std::string& v) { c.gen_pretrain_steps = to_i64(k, v); }},
        {"generator.pretrain_lr", [](TrainConfig& c, const std::string& k, const std::string& v) { c.gen_pretrain_lr = to_f64(k, v); }},
        {"train.batch_size", [](TrainConfig& c, const std::string& k, const std::string& v) { c.batch_size = to_i64(k, v); }},
        {"train.steps", [](TrainConfig& c, const std::string& k, const std::string& v) { c.steps = to_i64(k, v); }},
        {"train.learning_rate", [](TrainConfig& c, const std::string& k, const std::string& v) { c.learning_rate = to_f64(k, v); }},
        {"train.seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }},
        {"train.out_dir", [](TrainConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
        {"train.resume", [](TrainConfig& c, const std::string&, const std::string& v) { c.resume = v; }},
        {"train.eval_every", [](TrainConfig& c, const std::string& k, const std::string& v) { c.eval_every = to_i64(k, v); }},
        {"train.checkpoint_every", [](TrainConfig& c, const std::string& k, const std::string& v) { c.checkpoint_every = to_i64(k, v); }},
        {"loss.pixel", [](TrainConfig& c, const std::string& k, const std::string& v) { c.weights.pixel = to_f64(k, v); }},
        {"loss.perceptual", [](TrainConfig& c, const std::string& k, const std::string& v) { c.weights.perceptual = to_f64(k, v); }},
        {"loss.identity", [](TrainConfig& c, const std::string& k, const std::string& v) { c.weights.identity = to_f64(k, v); }},
        {"loss.dist_align", [](TrainConfig& c, const std::string& k, const std::string& v) { c.weights.dist_align = to_f64(k, v); }},
        {"loss.adversarial", [](TrainConfig& c, const std::string& k, const std::string& v) { c.weights.adversarial = to_f64(k, v); }},
        {"loss.da_mode", [](TrainConfig& c, const std::string&, const std::string& v) { c.da_mode = v; }},
        {"ablation.multi_scale_connections", [](TrainConfig& c, const std::string& k, const std::string& v) { c.multi_scale_connections = to_bool(k, v); }},
        {"ablation.da_loss", [](TrainConfig& c, const std::string& k, const std::string& v) { c.use_da_loss = to_bool(k, v); }},
        {"ablation.inversion_discriminator", [](TrainConfig& c, const std::string& k, const std::string& v) { c.use_inversion_discriminator = to_bool(k, v); }},
        {"ablation.plain_discriminator", [](TrainConfig& c, const std::string& k, const std::string& v) { c.plain_discriminator = to_bool(k, v); }},
        {"sr.enabled", [](TrainConfig& c, const std::string& k, const std::string& v) { c.sr_mode = to_bool(k, v); }},
        {"sr.weight", [](TrainConfig& c, const std::string& k, const std::string& v) { c.sr_weight = to_f64(k, v); }},
        {"disc.embed_dim", [](TrainConfig& c, const std::string& k, const std::string& v) { c.embed_dim = to_i64(k, v); }},
        {"disc.momentum", [](TrainConfig& c, const std::string& k, const std::string& v) { c.disc_momentum = to_f64(k, v); }},
        {"augment.enabled", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augment.enabled = to_bool(k, v); }},
        {"augment.crop", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augment.crop = to_bool(k, v); }},
        {"augment.flip", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augment.flip = to_bool(k, v); }},
        {"augment.jitter", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augment.jitter = to_bool(k, v); }},
        {"data.train_count", [](TrainConfig& c, const std::string& k, const std::string& v) { c.data_train = to_i64(k, v); }},
        {"data.eval_count", [](TrainConfig& c, const std::string& k, const std::string& v) { c.data_eval = to_i64(k, v); }},
    };
    return table;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_lines(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::stringstream ss(text);
    std::string line;
    int64_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        TORCH_CHECK(eq != std::string::npos,
                    "config line ", lineno, " is not 'key = value': ", line);
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        TORCH_CHECK(!key.empty(), "config line ", lineno, " has an empty key");
        out.emplace_back(key, value);
    }
    return out;
}

TrainConfig config_from_text(const std::string& text) {
    TrainConfig cfg;
    for (const auto& [key, value] : parse_config_lines(text)) {
        auto it = setters().find(key);
        TORCH_CHECK(it != setters().end(), "unknown config key: ", key);
        it->second(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    TORCH_CHECK(in.good(), "cannot read config file ", path);
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_text(buf.str());
}

std::string config_to_text(const TrainConfig& c) {
    std::string s;
    auto add = [&s](const std::string& k, const std::string& v) {
        s += k + " = " + v + "\n";
    };
    add("model.resolution", std::to_string(c.resolution));
    add("model.style_dim", std::to_string(c.style_dim));
    add("model.patch_size", std::to_string(c.patch_size));
    add("model.stage_dims", fmt_i64x4(c.stage_dims));
    add("model.stage_depths", fmt_i64x4(c.stage_depths));
    add("model.stage_heads", fmt_i64x4(c.stage_heads));
    add("model.window_sizes", fmt_i64x4(c.window_sizes));
    add("map2style.window", std::to_string(c.lq_window));
    add("map2style.block", c.map2style_block);
    add("map2style.level_counts", fmt_i64x4(c.level_counts));
    add("generator.mapping_depth", std::to_string(c.mapping_depth));
    add("generator.channel_base", std::to_string(c.channel_base));
    add("generator.channel_max", std::to_string(c.channel_max));
    add("generator.pretrain_steps", std::to_string(c.gen_pretrain_steps));
    add("generator.pretrain_lr", fmt_f64(c.gen_pretrain_lr));
    add("train.batch_size", std::to_string(c.batch_size));
    add("train.steps", std::to_string(c.steps));
    add("train.learning_rate", fmt_f64(c.learning_rate));
    add("train.seed", std::to_string(c.seed));
    add("train.out_dir", c.out_dir);
    add("train.resume", c.resume);
    add("train.eval_every", std::to_string(c.eval_every));
    add("train.checkpoint_every", std::to_string(c.checkpoint_every));
    add("loss.pixel", fmt_f64(c.weights.pixel));
    add("loss.perceptual", fmt_f64(c.weights.perceptual));
    add("loss.identity", fmt_f64(c.weights.identity));
    add("loss.dist_align", fmt_f64(c.weights.dist_align));
    add("loss.adversarial", fmt_f64(c.weights.adversarial));
    add("loss.da_mode", c.da_mode);
    add("ablation.multi_scale_connections", c.multi_scale_connections ? "true" : "false");
    add("ablation.da_loss", c.use_da_loss ? "true" : "false");
    add("ablation.inversion_discriminator", c.use_inversion_discriminator ? "true" : "false");
    add("ablation.plain_discriminator", c.plain_discriminator ? "true" : "false");
    add("sr.enabled", c.sr_mode ? "true" : "false");
    add("sr.weight", fmt_f64(c.sr_weight));
    add("disc.embed_dim", std::to_string(c.embed_dim));
    add("disc.momentum", fmt_f64(c.disc_momentum));
    add("augment.enabled", c.augment.enabled ? "true" : "false");
    add("augment.crop", c.augment.crop ? "true" : "false");
    add("augment.flip", c.augment.flip ? "true" : "false");
    add("augment.jitter", c.augment.jitter ? "true" : "false");
    add("data.train_count", std::to_string(c.data_train));
    add("data.eval_count", std::to_string(c.data_eval));
    return s;
}

}  // namespace styleinv
