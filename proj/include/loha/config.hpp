#pragma once

#include <map>

#include "loha/trainer.hpp"

namespace loha {

struct config_error : error {
    using error::error;
};

namespace detail {

struct ConfigEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

// Flat `key = value` file with [section] headers and # comments.
struct RawConfig {
    std::map<std::string, ConfigEntry> entries;  // "section.key" -> entry
    std::string path;

    static RawConfig parse(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw io_error("cannot open config file: " + path);
        RawConfig rc;
        rc.path = path;
        std::string line, section;
        int lineno = 0;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        while (std::getline(f, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw config_error(path + ":" + std::to_string(lineno) + ": malformed section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw config_error(path + ":" + std::to_string(lineno) + ": empty key");
            const std::string full = section.empty() ? key : section + "." + key;
            if (rc.entries.count(full))
                throw config_error(path + ":" + std::to_string(lineno) + ": duplicate key '" + full + "'");
            rc.entries[full] = ConfigEntry{value, lineno, false};
        }
        return rc;
    }

    bool has(const std::string& key) const { return entries.count(key) > 0; }

    std::optional<std::string> get(const std::string& key) {
        auto it = entries.find(key);
        if (it == entries.end()) return std::nullopt;
        it->second.used = true;
        return it->second.value;
    }

    std::string where(const std::string& key) const {
        auto it = entries.find(key);
        return path + ":" + (it == entries.end() ? "?" : std::to_string(it->second.line));
    }

    // Unknown keys are hard errors; silent hyperparameter typos are worse
    // than a failed run.
    void ensure_all_used() const {
        for (const auto& [key, e] : entries)
            if (!e.used)
                throw config_error(path + ":" + std::to_string(e.line) + ": unknown key '" + key + "'");
    }

    double get_double(const std::string& key, double fallback) {
        auto v = get(key);
        if (!v) return fallback;
        try {
            size_t pos = 0;
            double d = std::stod(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument(*v);
            return d;
        } catch (const std::exception&) {
            throw config_error(where(key) + ": field '" + key + "' expects a number, got '" + *v + "'");
        }
    }
    long get_int(const std::string& key, long fallback) {
        auto v = get(key);
        if (!v) return fallback;
        try {
            size_t pos = 0;
            long d = std::stol(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument(*v);
            return d;
        } catch (const std::exception&) {
            throw config_error(where(key) + ": field '" + key + "' expects an integer, got '" + *v + "'");
        }
    }
    bool get_bool(const std::string& key, bool fallback) {
        auto v = get(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw config_error(where(key) + ": field '" + key + "' expects true/false, got '" + *v + "'");
    }
    std::string get_string(const std::string& key, const std::string& fallback) {
        auto v = get(key);
        return v ? *v : fallback;
    }
};

}  // namespace detail

struct DataConfig {
    std::string name = "dataset";
    // file-backed graph
    std::string edge_path, feature_path, label_path;
    // or generated SBM
    bool sbm = false;
    int sbm_n = 0, sbm_classes = 2;
    double sbm_p_in = 0, sbm_p_out = 0, sbm_feature_noise = 0;
    uint64_t sbm_seed = 0;

    Graph load() const {
        if (sbm) return generate_sbm(sbm_n, sbm_classes, sbm_p_in, sbm_p_out, sbm_feature_noise, sbm_seed);
        std::optional<std::string> lp;
        if (!label_path.empty()) lp = label_path;
        return load_graph(edge_path, feature_path, lp);
    }
};

struct ProbeSection {
    int repeats = 10;
    uint64_t split_seed = 42;
    ProbeConfig probe;
};

struct ExperimentConfig {
    DataConfig data;
    TrainConfig train;
    ProbeSection probe;
    std::string out_dir = "out";
};

inline ExperimentConfig load_experiment_config(const std::string& path) {
    auto rc = detail::RawConfig::parse(path);
    ExperimentConfig ec;

    ec.data.name = rc.get_string("data.name", ec.data.name);
    ec.data.edge_path = rc.get_string("data.edge_path", "");
    ec.data.feature_path = rc.get_string("data.feature_path", "");
    ec.data.label_path = rc.get_string("data.label_path", "");
    const bool has_paths = !ec.data.edge_path.empty() || !ec.data.feature_path.empty();
    const bool has_sbm = rc.has("data.sbm_n");
    if (has_paths == has_sbm)
        throw config_error(path + ": [data] must provide exactly one of dataset paths or an SBM spec");
    if (has_paths && (ec.data.edge_path.empty() || ec.data.feature_path.empty()))
        throw config_error(path + ": [data] needs both edge_path and feature_path");
    ec.data.sbm = has_sbm;
    if (has_sbm) {
        ec.data.sbm_n = static_cast<int>(rc.get_int("data.sbm_n", 0));
        ec.data.sbm_classes = static_cast<int>(rc.get_int("data.sbm_classes", 2));
        ec.data.sbm_p_in = rc.get_double("data.sbm_p_in", 0.05);
        ec.data.sbm_p_out = rc.get_double("data.sbm_p_out", 0.05);
        ec.data.sbm_feature_noise = rc.get_double("data.sbm_feature_noise", 1.0);
        ec.data.sbm_seed = static_cast<uint64_t>(rc.get_int("data.sbm_seed", 0));
    }

    TrainConfig& t = ec.train;
    t.order = static_cast<int>(rc.get_int("train.k", t.order));
    t.hidden = static_cast<int>(rc.get_int("train.hidden", t.hidden));
    t.tau = rc.get_double("train.tau", t.tau);
    t.mu = rc.get_double("train.mu", t.mu);
    t.lr = rc.get_double("train.lr", t.lr);
    t.weight_decay = rc.get_double("train.weight_decay", t.weight_decay);
    t.epochs = static_cast<int>(rc.get_int("train.epochs", t.epochs));
    t.patience = static_cast<int>(rc.get_int("train.patience", t.patience));
    t.seed = static_cast<uint64_t>(rc.get_int("train.seed", 0));
    t.mlp_depth = static_cast<int>(rc.get_int("train.mlp_depth", t.mlp_depth));
    t.lambda_max = rc.get_double("train.lambda_max", t.lambda_max);
    const std::string variant = rc.get_string("train.trend_variant", "full");
    if (variant == "full")
        t.variant = TrendVariant::full;
    else if (variant == "var1")
        t.variant = TrendVariant::var1;
    else if (variant == "var3")
        t.variant = TrendVariant::var3;
    else
        throw config_error(rc.where("train.trend_variant") +
                           ": trend_variant must be full|var1|var3, got '" + variant + "'");
    const std::string orient = rc.get_string("train.orientation", "corrected");
    if (orient == "corrected")
        t.orientation = Orientation::corrected;
    else if (orient == "paper_verbatim")
        t.orientation = Orientation::paper_verbatim;
    else
        throw config_error(rc.where("train.orientation") +
                           ": orientation must be corrected|paper_verbatim, got '" + orient + "'");
    t.band_filters = rc.get_bool("train.band_filters", false);
    t.no_sliding = rc.get_bool("train.no_sliding", false);
    t.no_reunion = rc.get_bool("train.no_reunion", false);
    t.no_contrast = rc.get_bool("train.no_contrast", false);
    t.standard_infonce = rc.get_bool("train.standard_infonce", false);
    t.stop_grad_composite = rc.get_bool("train.stop_grad_composite", false);
    t.fixed_combination = rc.get_bool("train.fixed_combination", false);

    ec.probe.repeats = static_cast<int>(rc.get_int("probe.repeats", ec.probe.repeats));
    ec.probe.split_seed = static_cast<uint64_t>(rc.get_int("probe.split_seed", 42));
    ec.probe.probe.epochs = static_cast<int>(rc.get_int("probe.epochs", ec.probe.probe.epochs));
    ec.probe.probe.lr = rc.get_double("probe.lr", ec.probe.probe.lr);
    ec.probe.probe.weight_decay = rc.get_double("probe.weight_decay", 0.0);

    ec.out_dir = rc.get_string("output.out_dir", ec.out_dir);

    rc.ensure_all_used();
    try {
        t.validate();
    } catch (const parameter_error& e) {
        throw config_error(path + ": " + e.what());
    }
    if (ec.probe.repeats < 1) throw config_error(path + ": probe.repeats must be >= 1");
    return ec;
}

}  // namespace loha
