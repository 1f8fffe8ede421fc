#include "coughdetect/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

extern char** environ;

namespace coughdetect {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

std::map<std::string, std::string> read_toml(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string section, line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config: bad table header on line " +
                                         std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key = value on line " +
                                     std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        out[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

std::string json_scalar_to_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

std::map<std::string, std::string> read_json(std::istream& in) {
    nlohmann::json j;
    in >> j;
    std::map<std::string, std::string> out;
    for (const auto& [section, table] : j.items()) {
        if (!table.is_object())
            throw std::runtime_error("config: top-level JSON entries must be sections");
        for (const auto& [key, value] : table.items()) {
            if (value.is_array()) {
                std::string s = "[";
                for (std::size_t i = 0; i < value.size(); ++i) {
                    if (i) s += ", ";
                    s += json_scalar_to_string(value[i]);
                }
                s += "]";
                out[section + "." + key] = s;
            } else {
                out[section + "." + key] = json_scalar_to_string(value);
            }
        }
    }
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const int r = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw std::runtime_error("config: " + key + " expects an integer, got '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double r = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw std::runtime_error("config: " + key + " expects a number, got '" + v + "'");
    }
}

std::vector<int> to_int_list(const std::string& key, std::string v) {
    v = trim(v);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        throw std::runtime_error("config: " + key + " expects a list like [5, 9]");
    v = v.substr(1, v.size() - 2);
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_int(key, item));
    }
    if (out.empty()) throw std::runtime_error("config: " + key + " list is empty");
    return out;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    return is_json ? read_json(f) : read_toml(f);
}

std::map<std::string, std::string> read_config_env() {
    std::map<std::string, std::string> out;
    const std::string prefix = "COUGHDETECT_";
    for (char** e = environ; e && *e; ++e) {
        const std::string entry(*e);
        if (entry.rfind(prefix, 0) != 0) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string key = entry.substr(prefix.size(), eq - prefix.size());
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        const auto us = key.find('_');
        if (us == std::string::npos) continue;
        key[us] = '.';
        out[key] = entry.substr(eq + 1);
    }
    return out;
}

void apply_config(AppConfig& cfg, const std::map<std::string, std::string>& values) {
    for (const auto& [key, v] : values) {
        if (key == "preprocess.cutoff_hz") cfg.preprocess.cutoff_hz = to_double(key, v);
        else if (key == "preprocess.transition_hz") cfg.preprocess.transition_hz = to_double(key, v);
        else if (key == "preprocess.decimation_factor") cfg.preprocess.decimation_factor = to_int(key, v);
        else if (key == "preprocess.filter_order") cfg.preprocess.filter_order = to_int(key, v);
        else if (key == "preprocess.stopband_db") cfg.preprocess.stopband_db = to_double(key, v);
        else if (key == "sift.max_imfs") cfg.sift.max_imfs = to_int(key, v);
        else if (key == "sift.sd_threshold") cfg.sift.sd_threshold = to_double(key, v);
        else if (key == "sift.max_sifts_per_imf") cfg.sift.max_sifts_per_imf = to_int(key, v);
        else if (key == "sift.residual_floor") cfg.sift.residual_floor = to_double(key, v);
        else if (key == "detector.delta") cfg.detector.delta = to_double(key, v);
        else if (key == "detector.median_window") cfg.detector.median_window = to_int(key, v);
        else if (key == "detector.join_gap") cfg.detector.join_gap = to_int(key, v);
        else if (key == "detector.min_segment") cfg.detector.min_segment = to_int(key, v);
        else if (key == "detector.burst_extent_fraction") cfg.detector.burst_extent_fraction = to_double(key, v);
        else if (key == "detector.imf_indices") cfg.detector.imf_indices = to_int_list(key, v);
        else if (key == "sonograph.sample_rate") cfg.sonograph.sample_rate = to_int(key, v);
        else if (key == "sonograph.hop_length") cfg.sonograph.hop_length = to_int(key, v);
        else if (key == "sonograph.frame_length") cfg.sonograph.frame_length = to_int(key, v);
        else if (key == "sonograph.n_mfcc") cfg.sonograph.n_mfcc = to_int(key, v);
        else if (key == "sonograph.n_mels") cfg.sonograph.n_mels = to_int(key, v);
        else if (key == "sonograph.lpc_order") cfg.sonograph.lpc_order = to_int(key, v);
        else if (key == "sonograph.n_frames") cfg.sonograph.n_frames = to_int(key, v);
        else if (key == "sonograph.mel_fmin") cfg.sonograph.mel_fmin = to_double(key, v);
        else if (key == "sonograph.mel_fmax") cfg.sonograph.mel_fmax = to_double(key, v);
        else if (key == "model.mode") {
            if (v == "2d" || v == "2D") cfg.tensor_mode = TensorMode::TwoD;
            else if (v == "3d" || v == "3D") cfg.tensor_mode = TensorMode::ThreeD;
            else throw std::runtime_error("config: model.mode expects 2d or 3d");
        }
        else if (key == "model.n_classes") cfg.n_classes = to_int(key, v);
        else if (key == "model.dropout_rate") cfg.dropout_rate = to_double(key, v);
        else if (key == "train.learning_rate") cfg.train.learning_rate = to_double(key, v);
        else if (key == "train.adam_beta1") cfg.train.adam_beta1 = to_double(key, v);
        else if (key == "train.adam_beta2") cfg.train.adam_beta2 = to_double(key, v);
        else if (key == "train.adam_epsilon") cfg.train.adam_epsilon = to_double(key, v);
        else if (key == "train.batch_size") cfg.train.batch_size = to_int(key, v);
        else if (key == "train.max_epochs") cfg.train.max_epochs = to_int(key, v);
        else if (key == "train.early_stop_patience") cfg.train.early_stop_patience = to_int(key, v);
        else if (key == "train.rng_seed") cfg.train.rng_seed = static_cast<std::uint64_t>(std::stoull(v));
        else if (key == "train.threads") cfg.train.threads = to_int(key, v);
        else if (key == "service.port") cfg.service_port = to_int(key, v);
        else if (key == "service.host") cfg.service_host = v;
        else if (key == "service.max_body_mb") cfg.service_max_body = static_cast<std::size_t>(to_int(key, v)) * 1024 * 1024;
        else if (key == "service.store_dir") cfg.service_store_dir = v;
        else throw std::runtime_error("config: unknown key '" + key + "'");
    }
}

AppConfig load_app_config(const std::string& config_path) {
    AppConfig cfg;
    if (!config_path.empty()) apply_config(cfg, read_config_file(config_path));
    apply_config(cfg, read_config_env());
    return cfg;
}

}  // namespace coughdetect
