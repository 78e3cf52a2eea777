#pragma once

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "loha/trainer.hpp"

namespace loha {

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// Write-temp-then-rename so partially written artifacts never appear.
inline void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("cannot open for writing: " + tmp);
        f << content;
        if (!f) throw io_error("write failed: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw io_error("rename failed for " + path + ": " + ec.message());
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::string loss_history_csv(const std::vector<LossRecord>& history) {
    std::string out = "epoch,loss_low,loss_high,loss_sf,total\n";
    for (const auto& r : history)
        out += std::to_string(r.epoch) + "," + fmt_double(r.low) + "," + fmt_double(r.high) + "," +
               fmt_double(r.sf) + "," + fmt_double(r.total) + "\n";
    return out;
}

/// Two-column response curve for one view.
inline std::string filter_response_csv(const std::vector<double>& grid,
                                       const std::vector<double>& response) {
    std::string out = "lambda,response\n";
    for (size_t i = 0; i < grid.size(); ++i)
        out += fmt_double(grid[i]) + "," + fmt_double(response[i]) + "\n";
    return out;
}

/// Minimal standalone SVG: labeled axes and one polyline per view.
inline std::string filters_svg(const std::vector<double>& grid, const std::vector<double>& low,
                               const std::vector<double>& high) {
    const int w = 640, h = 420, ml = 60, mr = 20, mt = 20, mb = 50;
    double ymin = 0.0, ymax = 0.0;
    for (double v : low) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    for (double v : high) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
    const double xmin = grid.front(), xmax = grid.back();
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
    auto poly = [&](const std::vector<double>& ys) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(2);
        for (size_t i = 0; i < grid.size(); ++i) os << px(grid[i]) << "," << py(ys[i]) << " ";
        return os.str();
    };
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
       << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
       << "<line x1=\"" << ml << "\" y1=\"" << (h - mb) << "\" x2=\"" << (w - mr) << "\" y2=\""
       << (h - mb) << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << (h - mb)
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 4;
        os << "<text x=\"" << px(xv) << "\" y=\"" << (h - mb + 18)
           << "\" font-size=\"11\" text-anchor=\"middle\">" << std::setprecision(2) << xv
           << "</text>\n";
        const double yv = ymin + (ymax - ymin) * i / 4;
        os << "<text x=\"" << (ml - 8) << "\" y=\"" << py(yv) + 4
           << "\" font-size=\"11\" text-anchor=\"end\">" << yv << "</text>\n";
    }
    os << "<text x=\"" << (ml + (w - ml - mr) / 2) << "\" y=\"" << (h - 12)
       << "\" font-size=\"13\" text-anchor=\"middle\">lambda</text>\n"
       << "<text x=\"16\" y=\"" << (mt + (h - mt - mb) / 2)
       << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << (mt + (h - mt - mb) / 2) << ")\">response</text>\n"
       << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"" << poly(low)
       << "\"/>\n"
       << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"" << poly(high)
       << "\"/>\n"
       << "<text x=\"" << (w - mr - 140) << "\" y=\"" << (mt + 16)
       << "\" font-size=\"12\" fill=\"#1f77b4\">low view</text>\n"
       << "<text x=\"" << (w - mr - 140) << "\" y=\"" << (mt + 32)
       << "\" font-size=\"12\" fill=\"#d62728\">high view</text>\n"
       << "</svg>\n";
    return os.str();
}

inline nlohmann::json snapshot_to_json(const FilterSnapshot& s) {
    nlohmann::json j;
    j["order"] = s.order;
    j["band"] = s.band;
    j["orientation"] = s.orientation == Orientation::corrected ? "corrected" : "paper_verbatim";
    j["gamma_low"] = s.gamma_low;
    j["gamma_high"] = s.gamma_high;
    j["w_low"] = s.w_low;
    j["w_high"] = s.w_high;
    j["beta_a_low"] = s.beta_a_low;
    j["beta_b_low"] = s.beta_b_low;
    j["delta_low"] = s.delta_low;
    j["beta_a_high"] = s.beta_a_high;
    j["beta_b_high"] = s.beta_b_high;
    j["delta_high"] = s.delta_high;
    j["band_low"] = s.band_low;
    j["band_high"] = s.band_high;
    j["alpha"] = s.alpha;
    j["beta"] = s.beta;
    return j;
}

inline FilterSnapshot snapshot_from_json(const nlohmann::json& j) {
    FilterSnapshot s;
    s.order = j.at("order").get<int>();
    s.band = j.at("band").get<bool>();
    s.orientation = j.at("orientation").get<std::string>() == "paper_verbatim"
                        ? Orientation::paper_verbatim
                        : Orientation::corrected;
    s.gamma_low = j.at("gamma_low").get<std::vector<double>>();
    s.gamma_high = j.at("gamma_high").get<std::vector<double>>();
    s.w_low = j.at("w_low").get<std::vector<double>>();
    s.w_high = j.at("w_high").get<std::vector<double>>();
    s.beta_a_low = j.at("beta_a_low").get<double>();
    s.beta_b_low = j.at("beta_b_low").get<double>();
    s.delta_low = j.at("delta_low").get<double>();
    s.beta_a_high = j.at("beta_a_high").get<double>();
    s.beta_b_high = j.at("beta_b_high").get<double>();
    s.delta_high = j.at("delta_high").get<double>();
    s.band_low = j.at("band_low").get<std::vector<double>>();
    s.band_high = j.at("band_high").get<std::vector<double>>();
    s.alpha = j.at("alpha").get<double>();
    s.beta = j.at("beta").get<double>();
    return s;
}

/// One metrics record; every command that reports accuracy emits this schema.
inline nlohmann::json metrics_record(const std::string& dataset, const std::string& variant,
                                     uint64_t seed, double accuracy_mean, double accuracy_std,
                                     double runtime_s) {
    nlohmann::json j;
    j["dataset"] = dataset;
    j["variant"] = variant;
    j["seed"] = seed;
    j["accuracy_mean"] = accuracy_mean;
    j["accuracy_std"] = accuracy_std;
    j["runtime_s"] = runtime_s;
    return j;
}

inline std::string theorem_report_csv(const TheoremReport& rep) {
    std::string out = "t,bound_sub,tail_sub,pass_sub,bound_add,tail_add,pass_add\n";
    for (const auto& r : rep.rows)
        out += fmt_double(r.t) + "," + fmt_double(r.bound_sub) + "," + fmt_double(r.tail_sub) +
               "," + (r.pass_sub ? "1" : "0") + "," + fmt_double(r.bound_add) + "," +
               fmt_double(r.tail_add) + "," + (r.pass_add ? "1" : "0") + "\n";
    return out;
}

inline nlohmann::json theorem_report_json(const TheoremReport& rep) {
    nlohmann::json j;
    j["node"] = rep.node;
    j["degree"] = rep.degree;
    j["feature_dim"] = rep.feature_dim;
    j["bound_b"] = rep.bound_b;
    j["samples"] = rep.samples;
    j["max_lambda_sub"] = rep.max_lambda_sub;
    j["max_lambda_add"] = rep.max_lambda_add;
    j["std_sub"] = rep.std_sub;
    j["std_add"] = rep.std_add;
    j["all_pass"] = rep.all_pass;
    j["sub_leq_add"] = rep.sub_leq_add;
    auto rows = nlohmann::json::array();
    for (const auto& r : rep.rows) {
        nlohmann::json jr;
        jr["t"] = r.t;
        jr["bound_sub"] = r.bound_sub;
        jr["tail_sub"] = r.tail_sub;
        jr["pass_sub"] = r.pass_sub;
        jr["bound_add"] = r.bound_add;
        jr["tail_add"] = r.tail_add;
        jr["pass_add"] = r.pass_add;
        rows.push_back(jr);
    }
    j["rows"] = rows;
    return j;
}

}  // namespace loha
