// Experiment runner for the loha library: self-supervised training plus the
// frozen-embedding probe, ablation sweeps, band-filter comparisons, filter
// plots and the concentration check.

#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "loha/io.hpp"
#include "loha/loha.hpp"

namespace {

using namespace loha;

std::string variant_label(const TrainConfig& t) {
    std::string label;
    auto append = [&label](const std::string& s) {
        if (!label.empty()) label += "+";
        label += s;
    };
    if (t.band_filters) append("band");
    if (t.no_sliding) append("no_sliding");
    if (t.no_reunion) append("no_reunion");
    if (t.no_contrast) append("no_contrast");
    if (t.variant == TrendVariant::var1) append("var1");
    if (t.variant == TrendVariant::var3) append("var3");
    return label.empty() ? "full" : label;
}

void apply_variant(TrainConfig& t, const std::string& name) {
    t.no_sliding = t.no_reunion = t.no_contrast = t.band_filters = false;
    t.variant = TrendVariant::full;
    if (name == "full") return;
    if (name == "no_sliding")
        t.no_sliding = true;
    else if (name == "no_reunion")
        t.no_reunion = true;
    else if (name == "no_contrast")
        t.no_contrast = true;
    else if (name == "var1")
        t.variant = TrendVariant::var1;
    else if (name == "var3")
        t.variant = TrendVariant::var3;
    else if (name == "band")
        t.band_filters = true;
    else
        throw config_error("unknown variant '" + name +
                           "' (expected full|no_sliding|no_reunion|no_contrast|var1|var3|band)");
}

struct RunOutcome {
    PretrainResult pretrain;
    ProbeResult probe;
    double runtime_s = 0.0;
};

RunOutcome run_experiment(const Graph& g, const TrainConfig& cfg, const ProbeSection& probe) {
    if (!g.labels) throw input_error("experiment needs labels for the probe stage");
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome out;
    out.pretrain = pretrain(g, cfg);
    const auto splits = make_splits(g.n, probe.split_seed, probe.repeats);
    out.probe = linear_probe(out.pretrain.embeddings, *g.labels, splits, probe.probe);
    out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

void write_filter_artifacts(const std::string& dir, const FilterSnapshot& snap) {
    const auto grid = uniform_grid(0.0, 2.0, 101);
    const auto rl = filter_response(snap.w_low, grid);
    const auto rh = filter_response(snap.w_high, grid);
    atomic_write_file(dir + "/filter_low.csv", filter_response_csv(grid, rl));
    atomic_write_file(dir + "/filter_high.csv", filter_response_csv(grid, rh));
    atomic_write_file(dir + "/filters.svg", filters_svg(grid, rl, rh));
    atomic_write_file(dir + "/snapshot.json", snapshot_to_json(snap).dump(2) + "\n");
}

int cmd_train(const std::string& config_path, const std::string& out_override,
              std::optional<uint64_t> seed_override, const std::string& variant) {
    ExperimentConfig ec = load_experiment_config(config_path);
    if (!out_override.empty()) ec.out_dir = out_override;
    if (seed_override) ec.train.seed = *seed_override;
    if (!variant.empty()) apply_variant(ec.train, variant);
    const Graph g = ec.data.load();
    std::cerr << "[loha] train: dataset=" << ec.data.name << " n=" << g.n
              << " F=" << g.num_features() << " variant=" << variant_label(ec.train) << "\n";
    const RunOutcome run = run_experiment(g, ec.train, ec.probe);
    const auto metrics = metrics_record(ec.data.name, variant_label(ec.train), ec.train.seed,
                                        run.probe.mean, run.probe.stddev, run.runtime_s);
    atomic_write_file(ec.out_dir + "/metrics.json", metrics.dump(2) + "\n");
    atomic_write_file(ec.out_dir + "/loss_history.csv", loss_history_csv(run.pretrain.history));
    write_filter_artifacts(ec.out_dir, run.pretrain.snapshot);
    std::cout << "accuracy " << run.probe.mean << " +- " << run.probe.stddev << " ("
              << run.probe.per_split.size() << " splits)\n";
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& out_override,
               std::optional<uint64_t> seed_override) {
    ExperimentConfig ec = load_experiment_config(config_path);
    if (!out_override.empty()) ec.out_dir = out_override;
    if (seed_override) ec.train.seed = *seed_override;
    const Graph g = ec.data.load();
    const std::vector<std::string> variants = {"full",        "no_sliding", "no_reunion",
                                               "no_contrast", "var1",       "var3"};
    std::vector<RunOutcome> runs;
    for (const auto& v : variants) {
        TrainConfig cfg = ec.train;
        apply_variant(cfg, v);
        std::cerr << "[loha] ablate: " << v << "\n";
        runs.push_back(run_experiment(g, cfg, ec.probe));  // shared split seed
    }
    const double full_mean = runs[0].probe.mean;
    std::string csv = "variant," + ec.data.name + "_accuracy_mean," + ec.data.name +
                      "_accuracy_std,ratio_to_full\n";
    auto records = nlohmann::json::array();
    for (size_t i = 0; i < variants.size(); ++i) {
        const double ratio = full_mean != 0.0 ? runs[i].probe.mean / full_mean : 0.0;
        csv += variants[i] + "," + fmt_double(runs[i].probe.mean) + "," +
               fmt_double(runs[i].probe.stddev) + "," + fmt_double(ratio) + "\n";
        records.push_back(metrics_record(ec.data.name, variants[i], ec.train.seed,
                                         runs[i].probe.mean, runs[i].probe.stddev,
                                         runs[i].runtime_s));
    }
    atomic_write_file(ec.out_dir + "/ablation.csv", csv);
    atomic_write_file(ec.out_dir + "/ablation.json", records.dump(2) + "\n");
    std::cout << csv;
    return 0;
}

int cmd_demo_band(const std::string& config_path, const std::string& out_override,
                  std::optional<uint64_t> seed_override) {
    ExperimentConfig ec = load_experiment_config(config_path);
    if (!out_override.empty()) ec.out_dir = out_override;
    if (seed_override) ec.train.seed = *seed_override;
    const Graph g = ec.data.load();
    TrainConfig lowhigh = ec.train;
    lowhigh.band_filters = false;
    TrainConfig band = ec.train;
    band.band_filters = true;
    std::cerr << "[loha] demo-band: low/high run\n";
    const RunOutcome a = run_experiment(g, lowhigh, ec.probe);
    std::cerr << "[loha] demo-band: band run\n";
    const RunOutcome b = run_experiment(g, band, ec.probe);
    auto cell = [](const ProbeResult& p) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.1f±%.1f", p.mean, p.stddev);
        return std::string(buf);
    };
    std::string csv = "dataset,Low/High,Band-Pass/Stop\n";
    csv += ec.data.name + "," + cell(a.probe) + "," + cell(b.probe) + "\n";
    atomic_write_file(ec.out_dir + "/demo_band.csv", csv);
    std::cout << csv;
    return 0;
}

int cmd_check_theorem(int n, int order, int feature_dim, double bound_b, int samples, double t_max,
                      int t_count, uint64_t seed, const std::string& out_dir) {
    const Graph g = make_circulant(n, {1, 2, 3, 4});  // 8-regular
    Tape tape;
    SlidingParams low{tape.param(Matrix::scalar(0.0)), tape.param(Matrix::scalar(2.0)),
                      tape.param(Matrix::scalar(0.0))};
    SlidingParams high{tape.param(Matrix::scalar(2.0)), tape.param(Matrix::scalar(2.0)),
                       tape.param(Matrix::scalar(0.0))};
    const SpectralFilter fl =
        make_filter(build_gamma(low, FilterMode::low, order, Orientation::corrected), FilterMode::low);
    const SpectralFilter fh = make_filter(
        build_gamma(high, FilterMode::high, order, Orientation::corrected), FilterMode::high);
    std::vector<double> t_grid;
    for (int i = 0; i < t_count; ++i) t_grid.push_back(t_max * (i + 1) / t_count);
    const TheoremReport rep = check_theorem1(g, 0, fl.coeff_values(), fh.coeff_values(),
                                             feature_dim, bound_b, t_grid, samples, seed);
    if (!out_dir.empty()) {
        atomic_write_file(out_dir + "/theorem.csv", theorem_report_csv(rep));
        atomic_write_file(out_dir + "/theorem.json", theorem_report_json(rep).dump(2) + "\n");
    }
    std::cout << "node " << rep.node << " degree " << rep.degree << " f=" << rep.feature_dim
              << " B=" << rep.bound_b << " samples=" << rep.samples << "\n"
              << "max|lambda'| sub=" << rep.max_lambda_sub << " add=" << rep.max_lambda_add
              << "  std sub=" << rep.std_sub << " add=" << rep.std_add << "\n";
    std::cout << theorem_report_csv(rep);
    std::cout << (rep.all_pass ? "bound check: PASS" : "bound check: FAIL")
              << (rep.sub_leq_add ? " (subtraction tail <= addition tail everywhere)\n" : "\n");
    return rep.all_pass ? 0 : 1;
}

int cmd_plot_filters(const std::string& snapshot_path, const std::string& out_dir) {
    if (!std::filesystem::exists(snapshot_path))
        throw config_error("snapshot not found: " + snapshot_path);
    const auto j = nlohmann::json::parse(read_file(snapshot_path));
    const FilterSnapshot snap = snapshot_from_json(j);
    write_filter_artifacts(out_dir, snap);
    std::cout << "wrote filter_low.csv, filter_high.csv, filters.svg to " << out_dir << "\n";
    return 0;
}

int cmd_sbm_gen(const std::string& config_path, const std::string& out_override) {
    ExperimentConfig ec = load_experiment_config(config_path);
    if (!out_override.empty()) ec.out_dir = out_override;
    if (!ec.data.sbm) throw config_error(config_path + ": sbm-gen needs an SBM spec in [data]");
    const Graph g = ec.data.load();
    std::string edges;
    for (int i = 0; i < g.n; ++i)
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e)
            if (g.col_idx[e] > i) edges += std::to_string(i) + "\t" + std::to_string(g.col_idx[e]) + "\n";
    std::string feats;
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.num_features(); ++j)
            feats += (j ? "," : "") + fmt_double(g.features(i, j));
        feats += "\n";
    }
    std::string labels;
    for (int i = 0; i < g.n; ++i) labels += std::to_string((*g.labels)[i]) + "\n";
    atomic_write_file(ec.out_dir + "/edges.tsv", edges);
    atomic_write_file(ec.out_dir + "/features.csv", feats);
    atomic_write_file(ec.out_dir + "/labels.txt", labels);
    std::cout << "n=" << g.n << " undirected_edges=" << g.num_undirected_edges()
              << " edge_homophily=" << edge_homophily(g) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"loha: spectral low/high-pass graph contrastive learning"};
    app.require_subcommand(1);

    std::string config_path, out_dir, variant, snapshot_path;
    std::optional<uint64_t> seed;

    auto add_common = [&](CLI::App* c, bool need_config = true) {
        if (need_config) c->add_option("--config", config_path, "experiment config file")->required();
        c->add_option("--out", out_dir, "output directory (overrides config)");
        c->add_option("--seed", seed, "training seed (overrides config)");
    };

    auto* train = app.add_subcommand("train", "pretrain + linear probe on one dataset");
    add_common(train);
    train->add_option("--variant", variant, "variant name (overrides config flags)");

    auto* ablate = app.add_subcommand("ablate", "run the six model variants under shared splits");
    add_common(ablate);

    auto* demo = app.add_subcommand("demo-band", "compare low/high views against band-stop/band-pass");
    add_common(demo);

    auto* theorem = app.add_subcommand("check-theorem", "Monte-Carlo concentration check");
    int th_n = 24, th_k = 10, th_f = 4, th_samples = 100000, th_tcount = 20;
    double th_b = 1.0, th_tmax = 10.0;
    uint64_t th_seed = 0;
    theorem->add_option("--n", th_n, "circulant graph size (8-regular)");
    theorem->add_option("--k", th_k, "polynomial order");
    theorem->add_option("--f", th_f, "feature dimension");
    theorem->add_option("--bound", th_b, "feature bound B");
    theorem->add_option("--samples", th_samples, "Monte-Carlo samples (>= 10^4)");
    theorem->add_option("--t-max", th_tmax, "largest t on the grid");
    theorem->add_option("--t-count", th_tcount, "grid size");
    theorem->add_option("--seed", th_seed, "sampling seed");
    theorem->add_option("--out", out_dir, "output directory for theorem.csv/json");

    auto* plot = app.add_subcommand("plot-filters", "response curves from a model snapshot");
    plot->add_option("--snapshot", snapshot_path, "snapshot.json from a training run")->required();
    plot->add_option("--out", out_dir, "output directory")->required();

    auto* sbmgen = app.add_subcommand("sbm-gen", "write an SBM instance as dataset files");
    sbmgen->add_option("--config", config_path, "experiment config file")->required();
    sbmgen->add_option("--out", out_dir, "output directory (overrides config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) return cmd_train(config_path, out_dir, seed, variant);
        if (ablate->parsed()) return cmd_ablate(config_path, out_dir, seed);
        if (demo->parsed()) return cmd_demo_band(config_path, out_dir, seed);
        if (theorem->parsed())
            return cmd_check_theorem(th_n, th_k, th_f, th_b, th_samples, th_tmax, th_tcount,
                                     th_seed, out_dir);
        if (plot->parsed()) return cmd_plot_filters(snapshot_path, out_dir);
        if (sbmgen->parsed()) return cmd_sbm_gen(config_path, out_dir);
    } catch (const loha::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const loha::parameter_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const loha::numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const loha::io_error& e) {
        std::cerr << "i/o failure: " << e.what() << "\n";
        return 4;
    } catch (const loha::input_error& e) {
        std::cerr << "input failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
