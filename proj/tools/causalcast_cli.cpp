// causalcast command-line driver: ingest -> scale -> discover / forecast ->
// evaluate, plus synthetic-data generation. Every command is reproducible:
// identical config, seed, and data yield byte-identical outputs, independent
// of the worker thread count.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "causalcast/causalcast.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    int threads = 1;
};

std::string hex64(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_file(const std::string& path) {
    const std::string bytes = causalcast::read_text_file(path);
    return "fnv1a:" + hex64(causalcast::detail::fnv1a(bytes));
}

std::string hash_config(const json& cfg) {
    return "fnv1a:" + hex64(causalcast::detail::fnv1a(cfg.dump()));
}

// Config-file merge: JSON values apply only where the flag was not given on
// the command line (flags win).
class ConfigMerger {
public:
    ConfigMerger(CLI::App* cmd, const std::string& config_path) : cmd_(cmd) {
        if (config_path.empty()) return;
        const auto text = causalcast::read_text_file(config_path);
        try {
            config_ = json::parse(text);
        } catch (const json::exception& e) {
            throw causalcast::ConfigError("cannot parse config file '" + config_path + "': " + e.what());
        }
    }

    template <typename T>
    void apply(const std::string& flag, T& target) {
        if (config_.is_null()) return;
        const std::string key = flag.substr(2); // strip leading "--"
        std::string snake = key;
        for (auto& c : snake) {
            if (c == '-') c = '_';
        }
        if (cmd_->count(flag) > 0) return;
        if (config_.contains(key)) {
            target = config_.at(key).get<T>();
        } else if (config_.contains(snake)) {
            target = config_.at(snake).get<T>();
        }
    }

private:
    CLI::App* cmd_;
    json config_;
};

void write_output(const fs::path& dir, const std::string& name, const std::string& text) {
    fs::create_directories(dir);
    causalcast::write_text_file((dir / name).string(), text);
}

json base_manifest(const std::string& command, const json& cfg, const std::string& input_hash) {
    json m;
    m["tool"] = "causalcast";
    m["version"] = causalcast::version_string();
    m["command"] = command;
    m["config"] = cfg;
    m["config_hash"] = hash_config(cfg);
    m["input_hash"] = input_hash;
    return m;
}

std::string csv_with_hash(const std::string& csv, const json& cfg) {
    return "# config_hash: " + hash_config(cfg) + "\n" + csv;
}

causalcast::Frequency parse_frequency(const std::string& s) {
    if (s == "quarterly") return causalcast::Frequency::quarterly;
    if (s == "monthly") return causalcast::Frequency::monthly;
    throw causalcast::ConfigError("unknown frequency '" + s + "' (use quarterly or monthly)");
}

// ---------------------------------------------------------------------------

struct CitestArgs {
    std::string data, date_column, frequency = "quarterly";
    std::string x, y, z;
    std::string test = "parcorr";
    int n_perm = 199;
};

int cmd_citest(const CitestArgs& a, const GlobalOpts& g) {
    using namespace causalcast;
    auto panel = load_csv(a.data, a.date_column, parse_frequency(a.frequency));
    const auto [begin, end] = panel.longest_complete_span();
    if (end - begin < panel.rows()) panel = panel.slice_rows(begin, end);

    const auto need_col = [&](const std::string& name) {
        const int idx = panel.column_index(name);
        if (idx < 0) throw ConfigError("variable '" + name + "' not found in data");
        return static_cast<std::size_t>(idx);
    };
    const auto xv = panel.column(need_col(a.x));
    const auto yv = panel.column(need_col(a.y));
    std::vector<std::string> z_names;
    {
        std::stringstream ss(a.z);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) z_names.push_back(item);
        }
    }
    Eigen::MatrixXd zm;
    if (!z_names.empty()) {
        zm.resize(static_cast<Eigen::Index>(panel.rows()), static_cast<Eigen::Index>(z_names.size()));
        for (std::size_t j = 0; j < z_names.size(); ++j) {
            const auto col = panel.column(need_col(z_names[j]));
            for (std::size_t t = 0; t < col.size(); ++t) {
                zm(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = col[t];
            }
        }
    }

    CITestResult res;
    if (a.test == "parcorr") {
        res = parcorr_test(xv, yv, zm);
    } else if (a.test == "gpdc") {
        res = gpdc_test(xv, yv, zm, a.n_perm, g.seed, g.threads);
    } else {
        throw ConfigError("unknown test '" + a.test + "' (use parcorr or gpdc)");
    }

    json cfg = {{"data", a.data},     {"x", a.x},           {"y", a.y},
                {"z", a.z},           {"test", a.test},     {"n_perm", a.n_perm},
                {"seed", g.seed},     {"frequency", a.frequency}};
    json out = citest_result_to_json(res);
    out["config_hash"] = hash_config(cfg);
    const std::string text = out.dump(2) + "\n";
    if (g.out.empty()) {
        std::cout << text;
    } else {
        write_output(fs::path(g.out), "citest.json", text);
        json manifest = base_manifest("citest", cfg, hash_file(a.data));
        manifest["span"] = {{"begin", panel.index.front()}, {"end", panel.index.back()}};
        write_output(fs::path(g.out), "manifest.json", manifest.dump(2) + "\n");
    }
    if (!res.note.empty()) std::cerr << "note: " << res.note << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct DiscoverArgs {
    std::string data, date_column, frequency = "quarterly";
    int tau_max = 4;
    double alpha_pc = 0.2;
    double alpha_mci = 0.05;
    std::string test = "parcorr";
    std::string mode = "pcmci";
    int n_perm = 199;
    bool no_scale = false;
    int max_cond_dim = -1;
};

int cmd_discover(const DiscoverArgs& a, const GlobalOpts& g) {
    using namespace causalcast;
    auto panel = load_csv(a.data, a.date_column, parse_frequency(a.frequency));
    const auto [begin, end] = panel.longest_complete_span();
    const std::string span_begin = panel.index[begin];
    const std::string span_end = panel.index[end - 1];
    panel = panel.slice_rows(begin, end);
    if (!a.no_scale) panel = standard_scale(panel).first;

    DiscoveryConfig cfg;
    cfg.tau_max = a.tau_max;
    cfg.alpha_pc = a.alpha_pc;
    cfg.alpha_mci = a.alpha_mci;
    cfg.seed = g.seed;
    cfg.n_perm = a.n_perm;
    cfg.n_threads = g.threads;
    if (a.max_cond_dim >= 0) cfg.max_cond_dim = a.max_cond_dim;
    if (a.test == "parcorr") {
        cfg.ci_test = CiTestKind::parcorr;
    } else if (a.test == "gpdc") {
        cfg.ci_test = CiTestKind::gpdc;
    } else {
        throw ConfigError("unknown test '" + a.test + "' (use parcorr or gpdc)");
    }
    if (a.mode == "pcmci") {
        cfg.mode = DiscoveryMode::pcmci;
    } else if (a.mode == "lpcmci") {
        cfg.mode = DiscoveryMode::lpcmci;
    } else {
        throw ConfigError("unknown mode '" + a.mode + "' (use pcmci or lpcmci)");
    }

    const LaggedGraph graph = run_discovery(panel, cfg);

    json cfg_json = {{"data", a.data},          {"tau_max", a.tau_max},   {"alpha_pc", a.alpha_pc},
                     {"alpha_mci", a.alpha_mci}, {"test", a.test},        {"mode", a.mode},
                     {"n_perm", a.n_perm},       {"seed", g.seed},        {"scale", !a.no_scale},
                     {"frequency", a.frequency}};

    json graph_json = json::parse(export_graph(graph, GraphFormat::json));
    graph_json["config_hash"] = hash_config(cfg_json);
    const std::string dot = export_graph(graph, GraphFormat::dot) +
                            "// config_hash: " + hash_config(cfg_json) + "\n";

    const fs::path out_dir(g.out.empty() ? "." : g.out);
    write_output(out_dir, "graph.json", graph_json.dump(2) + "\n");
    write_output(out_dir, "graph.dot", dot);
    json manifest = base_manifest("discover", cfg_json, hash_file(a.data));
    manifest["span"] = {{"begin", span_begin}, {"end", span_end}, {"rows", panel.rows()}};
    manifest["mode_label"] = graph.mode;
    write_output(out_dir, "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------

struct ForecastArgs {
    std::string data, date_column, frequency = "quarterly";
    std::string var;
    int context_len = 40;
    int horizon = 4;
    int step = 4;
    int bins = 64;
    int order = 3;
    double gamma = 0.5;
    int n_samples = 200;
    double scaled_lo = -15.0;
    double scaled_hi = 15.0;
    bool no_samples = false;
};

int cmd_forecast(const ForecastArgs& a, const GlobalOpts& g) {
    using namespace causalcast;
    auto panel = load_csv(a.data, a.date_column, parse_frequency(a.frequency));
    const int var_idx = panel.column_index(a.var);
    if (var_idx < 0) throw ConfigError("variable '" + a.var + "' not found in data");

    // Longest fully-observed run of the target column.
    std::size_t best_begin = 0, best_len = 0, run_begin = 0, run_len = 0;
    for (std::size_t t = 0; t < panel.rows(); ++t) {
        if (!panel.missing(t, static_cast<std::size_t>(var_idx))) {
            if (run_len == 0) run_begin = t;
            if (++run_len > best_len) {
                best_len = run_len;
                best_begin = run_begin;
            }
        } else {
            run_len = 0;
        }
    }
    std::vector<double> series;
    std::vector<std::string> labels;
    for (std::size_t t = best_begin; t < best_begin + best_len; ++t) {
        series.push_back(panel.at(t, static_cast<std::size_t>(var_idx)));
        labels.push_back(panel.index[t]);
    }

    RollingConfig cfg;
    cfg.context_len = a.context_len;
    cfg.horizon = a.horizon;
    cfg.step = a.step;
    cfg.bins = a.bins;
    cfg.order = a.order;
    cfg.gamma = a.gamma;
    cfg.n_samples = a.n_samples;
    cfg.scaled_lo = a.scaled_lo;
    cfg.scaled_hi = a.scaled_hi;
    cfg.seed = g.seed;
    cfg.n_threads = g.threads;

    const auto bundles = rolling_forecast(series, cfg, labels);

    json cfg_json = {{"data", a.data},           {"var", a.var},
                     {"context_len", a.context_len}, {"horizon", a.horizon},
                     {"step", a.step},           {"bins", a.bins},
                     {"order", a.order},         {"gamma", a.gamma},
                     {"n_samples", a.n_samples}, {"scaled_lo", a.scaled_lo},
                     {"scaled_hi", a.scaled_hi}, {"seed", g.seed},
                     {"keep_samples", !a.no_samples}, {"frequency", a.frequency}};

    json out;
    out["variable"] = a.var;
    out["frequency"] = a.frequency;
    out["config_hash"] = hash_config(cfg_json);
    out["bundles"] = json::array();
    for (const auto& b : bundles) out["bundles"].push_back(bundle_to_json(b, !a.no_samples));

    const fs::path out_dir(g.out.empty() ? "." : g.out);
    write_output(out_dir, "bundles.json", out.dump(2) + "\n");
    write_output(out_dir, "bands.csv", csv_with_hash(bands_to_csv(bundles), cfg_json));
    json manifest = base_manifest("forecast", cfg_json, hash_file(a.data));
    manifest["span"] = {{"begin", labels.front()}, {"end", labels.back()}, {"rows", series.size()}};
    manifest["n_origins"] = bundles.size();
    write_output(out_dir, "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string bundles_path;
    std::string actuals, date_column, frequency = "quarterly";
    std::string var;
    double level = 0.90;
    double alpha = 0.05;
};

int cmd_evaluate(const EvaluateArgs& a, const GlobalOpts& g) {
    using namespace causalcast;
    const json in = json::parse(read_text_file(a.bundles_path));
    std::vector<ForecastBundle> bundles;
    for (const auto& jb : in.at("bundles")) bundles.push_back(bundle_from_json(jb));
    if (bundles.empty()) throw DataError("bundle list is empty");

    std::string var = a.var;
    if (var.empty() && in.contains("variable")) var = in.at("variable").get<std::string>();
    auto panel = load_csv(a.actuals, a.date_column, parse_frequency(a.frequency));
    const int var_idx = panel.column_index(var);
    if (var_idx < 0) throw ConfigError("variable '" + var + "' not found in actuals");

    AlignedActuals actuals;
    for (const auto& b : bundles) {
        std::ptrdiff_t pos = -1;
        for (std::size_t t = 0; t < panel.rows(); ++t) {
            if (panel.index[t] == b.origin) {
                pos = static_cast<std::ptrdiff_t>(t);
                break;
            }
        }
        if (pos < 0) throw DataError("alignment error: origin '" + b.origin + "' not in actuals index");
        if (pos + b.horizon > static_cast<std::ptrdiff_t>(panel.rows())) {
            throw DataError("alignment error: actuals end before origin '" + b.origin + "' horizon");
        }
        std::vector<double> vals;
        std::vector<std::string> labels;
        for (int h = 0; h < b.horizon; ++h) {
            const auto t = static_cast<std::size_t>(pos + h);
            if (panel.missing(t, static_cast<std::size_t>(var_idx))) {
                throw DataError("alignment error: actual value missing at '" + panel.index[t] + "'");
            }
            vals.push_back(panel.at(t, static_cast<std::size_t>(var_idx)));
            labels.push_back(panel.index[t]);
        }
        actuals.values.push_back(std::move(vals));
        actuals.labels.push_back(std::move(labels));
    }

    const auto cov = coverage_counts(actuals, bundles, a.level);
    std::vector<PosteriorSummary> posteriors;
    std::vector<BinomialCalibration> calibs;
    for (std::size_t h = 0; h < cov.trials.size(); ++h) {
        posteriors.push_back(beta_posterior(cov.successes[h], cov.trials[h]));
        calibs.push_back(binomial_calibration(cov.trials[h] - cov.successes[h], cov.trials[h], 1.0 - a.level));
    }
    const auto errors = error_distributions(actuals, bundles);
    const auto widths = interval_widths(bundles, a.level);
    const auto anomalies = anomaly_flags(actuals, bundles, a.alpha);

    json cfg_json = {{"bundles", a.bundles_path}, {"actuals", a.actuals}, {"var", var},
                     {"level", a.level},          {"alpha", a.alpha},     {"frequency", a.frequency}};
    json report = evaluation_report_to_json(cov, posteriors, calibs, errors, widths, anomalies, a.level,
                                            a.alpha);
    report["config_hash"] = hash_config(cfg_json);

    const fs::path out_dir(g.out.empty() ? "." : g.out);
    write_output(out_dir, "report.json", report.dump(2) + "\n");
    write_output(out_dir, "errors.csv", csv_with_hash(per_horizon_csv(errors.per_horizon, "abs_error"), cfg_json));
    write_output(out_dir, "widths.csv", csv_with_hash(per_horizon_csv(widths.per_horizon, "width"), cfg_json));
    write_output(out_dir, "posteriors.csv", csv_with_hash(posteriors_to_csv(cov, posteriors), cfg_json));
    write_output(out_dir, "anomalies.csv", csv_with_hash(anomalies_to_csv(anomalies), cfg_json));
    json manifest = base_manifest("evaluate", cfg_json,
                                  hash_file(a.bundles_path) + "+" + hash_file(a.actuals));
    write_output(out_dir, "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------

struct AugmentArgs {
    std::string mode = "kernelsynth";
    int n = 1;
    std::string data, date_column, frequency = "quarterly";
    int max_series = 3;
    double dirichlet_alpha = 1.5;
    int length_min = 64;
    int length_max = 512;
    int length = 256;
    int max_terms = 5;
};

int cmd_augment(const AugmentArgs& a, const GlobalOpts& g) {
    using namespace causalcast;
    std::vector<std::vector<double>> series;
    json meta;
    meta["mode"] = a.mode;
    meta["seed"] = g.seed;
    meta["draws"] = json::array();

    if (a.mode == "tsmixup") {
        if (a.data.empty()) throw ConfigError("tsmixup requires --data with the source pool");
        auto panel = load_csv(a.data, a.date_column, parse_frequency(a.frequency));
        const auto [begin, end] = panel.longest_complete_span();
        panel = panel.slice_rows(begin, end);
        std::vector<std::vector<double>> pool;
        for (std::size_t j = 0; j < panel.cols(); ++j) pool.push_back(panel.column(j));

        TSMixupConfig cfg;
        cfg.max_series = a.max_series;
        cfg.dirichlet_alpha = a.dirichlet_alpha;
        cfg.length_min = std::min<int>(a.length_min, static_cast<int>(panel.rows()));
        cfg.length_max = std::min<int>(a.length_max, static_cast<int>(panel.rows()));
        for (int i = 0; i < a.n; ++i) {
            const auto draw = tsmixup(pool, cfg, derive_seed(g.seed, static_cast<std::uint64_t>(i)));
            series.push_back(draw.series);
            meta["draws"].push_back({{"pool_indices", draw.pool_indices},
                                     {"window_starts", draw.window_starts},
                                     {"weights", draw.weights},
                                     {"length", draw.length}});
        }
    } else if (a.mode == "kernelsynth") {
        for (int i = 0; i < a.n; ++i) {
            const auto seed_i = derive_seed(g.seed, static_cast<std::uint64_t>(i));
            const auto expr = sample_kernel(a.max_terms, seed_i);
            series.push_back(kernelsynth(a.length, expr, derive_seed(seed_i, 1)));
            json terms = json::array();
            for (const auto& t : expr.terms) {
                const char* kind = t.kind == KernelPrimitive::linear ? "linear"
                                   : t.kind == KernelPrimitive::periodic ? "periodic"
                                                                         : "squared_exponential";
                terms.push_back({{"kind", kind}, {"param", t.param}});
            }
            json ops = json::array();
            for (const auto op : expr.ops) ops.push_back(op == KernelOp::add ? "add" : "multiply");
            meta["draws"].push_back({{"terms", terms}, {"ops", ops}, {"length", a.length}});
        }
    } else {
        throw ConfigError("unknown augment mode '" + a.mode + "' (use tsmixup or kernelsynth)");
    }

    json cfg_json = {{"mode", a.mode},  {"n", a.n},
                     {"seed", g.seed},  {"max_series", a.max_series},
                     {"dirichlet_alpha", a.dirichlet_alpha}, {"length_min", a.length_min},
                     {"length_max", a.length_max}, {"length", a.length},
                     {"max_terms", a.max_terms}};
    meta["config_hash"] = hash_config(cfg_json);

    std::size_t max_len = 0;
    for (const auto& s : series) max_len = std::max(max_len, s.size());
    std::string csv;
    for (std::size_t i = 0; i < series.size(); ++i) {
        csv += (i ? "," : "") + ("s" + std::to_string(i + 1));
    }
    csv += "\n";
    for (std::size_t t = 0; t < max_len; ++t) {
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (i) csv += ",";
            if (t < series[i].size()) csv += causalcast::detail::format_number(series[i][t]);
        }
        csv += "\n";
    }

    const fs::path out_dir(g.out.empty() ? "." : g.out);
    write_output(out_dir, "augmented.csv", csv_with_hash(csv, cfg_json));
    write_output(out_dir, "augmented_meta.json", meta.dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"causalcast: time-lagged causal discovery and quantized-token probabilistic forecasting"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON config file; command-line flags take precedence")
        ->expected(1);
    app.add_option("--seed", g.seed, "global random seed");
    app.add_option("--out", g.out, "output directory (citest: stdout when omitted)");
    app.add_option("--threads", g.threads, "worker threads (outputs are invariant to this)");

    CitestArgs ca;
    auto* citest = app.add_subcommand("citest", "run one conditional independence test");
    citest->add_option("--data", ca.data, "panel CSV")->required();
    citest->add_option("--date-column", ca.date_column, "date column name (default: first column)");
    citest->add_option("--frequency", ca.frequency, "quarterly or monthly");
    citest->add_option("--x", ca.x, "first variable")->required();
    citest->add_option("--y", ca.y, "second variable")->required();
    citest->add_option("--z", ca.z, "conditioning variables, comma separated");
    citest->add_option("--test", ca.test, "parcorr or gpdc");
    citest->add_option("--n-perm", ca.n_perm, "permutations for gpdc");

    DiscoverArgs da;
    auto* discover = app.add_subcommand("discover", "discover the time-lagged causal graph");
    discover->add_option("--data", da.data, "panel CSV")->required();
    discover->add_option("--date-column", da.date_column, "date column name");
    discover->add_option("--frequency", da.frequency, "quarterly or monthly");
    discover->add_option("--tau-max", da.tau_max, "maximum lag");
    discover->add_option("--alpha-pc", da.alpha_pc, "PC1 significance level");
    discover->add_option("--alpha-mci", da.alpha_mci, "MCI significance level");
    discover->add_option("--test", da.test, "parcorr or gpdc");
    discover->add_option("--mode", da.mode, "pcmci or lpcmci");
    discover->add_option("--n-perm", da.n_perm, "permutations for gpdc");
    discover->add_option("--max-cond-dim", da.max_cond_dim, "cap on conditioning dimension");
    discover->add_flag("--no-scale", da.no_scale, "skip standard scaling");

    ForecastArgs fa;
    auto* forecast = app.add_subcommand("forecast", "rolling-origin probabilistic forecasts");
    forecast->add_option("--data", fa.data, "panel CSV")->required();
    forecast->add_option("--date-column", fa.date_column, "date column name");
    forecast->add_option("--frequency", fa.frequency, "quarterly or monthly");
    forecast->add_option("--var", fa.var, "target variable")->required();
    forecast->add_option("--context-len", fa.context_len, "context window length");
    forecast->add_option("--horizon", fa.horizon, "forecast horizon");
    forecast->add_option("--step", fa.step, "origin step");
    forecast->add_option("--bins", fa.bins, "quantizer bin count");
    forecast->add_option("--order", fa.order, "k-gram order");
    forecast->add_option("--gamma", fa.gamma, "smoothing constant");
    forecast->add_option("--n-samples", fa.n_samples, "sample trajectories per origin");
    forecast->add_option("--scaled-lo", fa.scaled_lo, "quantizer range low (scaled axis)");
    forecast->add_option("--scaled-hi", fa.scaled_hi, "quantizer range high (scaled axis)");
    forecast->add_flag("--no-samples", fa.no_samples, "omit sample trajectories from bundles.json");

    EvaluateArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "evaluate forecast bundles against actuals");
    evaluate->add_option("--bundles", ea.bundles_path, "bundles.json from the forecast command")->required();
    evaluate->add_option("--actuals", ea.actuals, "actuals panel CSV")->required();
    evaluate->add_option("--date-column", ea.date_column, "date column name");
    evaluate->add_option("--frequency", ea.frequency, "quarterly or monthly");
    evaluate->add_option("--var", ea.var, "target variable (default: from bundles.json)");
    evaluate->add_option("--level", ea.level, "central band level");
    evaluate->add_option("--alpha", ea.alpha, "anomaly tail threshold");

    AugmentArgs aa;
    auto* augment = app.add_subcommand("augment", "generate synthetic series");
    augment->add_option("--mode", aa.mode, "tsmixup or kernelsynth");
    augment->add_option("--n", aa.n, "number of series to generate");
    augment->add_option("--data", aa.data, "source pool CSV (tsmixup)");
    augment->add_option("--date-column", aa.date_column, "date column name");
    augment->add_option("--frequency", aa.frequency, "quarterly or monthly");
    augment->add_option("--max-series", aa.max_series, "TSMixup K");
    augment->add_option("--dirichlet-alpha", aa.dirichlet_alpha, "TSMixup concentration");
    augment->add_option("--length-min", aa.length_min, "TSMixup minimum window");
    augment->add_option("--length-max", aa.length_max, "TSMixup maximum window");
    augment->add_option("--length", aa.length, "KernelSynth series length");
    augment->add_option("--max-terms", aa.max_terms, "KernelSynth max kernel terms");

    try {
        app.parse(argc, argv);

        ConfigMerger merger(app.get_subcommands().front(), g.config_path);
        // Global keys may also come from the config file.
        {
            ConfigMerger global_merger(&app, g.config_path);
            global_merger.apply("--seed", g.seed);
            global_merger.apply("--out", g.out);
            global_merger.apply("--threads", g.threads);
        }

        if (citest->parsed()) {
            merger.apply("--data", ca.data);
            merger.apply("--date-column", ca.date_column);
            merger.apply("--frequency", ca.frequency);
            merger.apply("--x", ca.x);
            merger.apply("--y", ca.y);
            merger.apply("--z", ca.z);
            merger.apply("--test", ca.test);
            merger.apply("--n-perm", ca.n_perm);
            return cmd_citest(ca, g);
        }
        if (discover->parsed()) {
            merger.apply("--data", da.data);
            merger.apply("--date-column", da.date_column);
            merger.apply("--frequency", da.frequency);
            merger.apply("--tau-max", da.tau_max);
            merger.apply("--alpha-pc", da.alpha_pc);
            merger.apply("--alpha-mci", da.alpha_mci);
            merger.apply("--test", da.test);
            merger.apply("--mode", da.mode);
            merger.apply("--n-perm", da.n_perm);
            merger.apply("--max-cond-dim", da.max_cond_dim);
            return cmd_discover(da, g);
        }
        if (forecast->parsed()) {
            merger.apply("--data", fa.data);
            merger.apply("--date-column", fa.date_column);
            merger.apply("--frequency", fa.frequency);
            merger.apply("--var", fa.var);
            merger.apply("--context-len", fa.context_len);
            merger.apply("--horizon", fa.horizon);
            merger.apply("--step", fa.step);
            merger.apply("--bins", fa.bins);
            merger.apply("--order", fa.order);
            merger.apply("--gamma", fa.gamma);
            merger.apply("--n-samples", fa.n_samples);
            merger.apply("--scaled-lo", fa.scaled_lo);
            merger.apply("--scaled-hi", fa.scaled_hi);
            return cmd_forecast(fa, g);
        }
        if (evaluate->parsed()) {
            merger.apply("--bundles", ea.bundles_path);
            merger.apply("--actuals", ea.actuals);
            merger.apply("--date-column", ea.date_column);
            merger.apply("--frequency", ea.frequency);
            merger.apply("--var", ea.var);
            merger.apply("--level", ea.level);
            merger.apply("--alpha", ea.alpha);
            return cmd_evaluate(ea, g);
        }
        if (augment->parsed()) {
            merger.apply("--mode", aa.mode);
            merger.apply("--n", aa.n);
            merger.apply("--data", aa.data);
            merger.apply("--max-series", aa.max_series);
            merger.apply("--dirichlet-alpha", aa.dirichlet_alpha);
            merger.apply("--length-min", aa.length_min);
            merger.apply("--length-max", aa.length_max);
            merger.apply("--length", aa.length);
            merger.apply("--max-terms", aa.max_terms);
            return cmd_augment(aa, g);
        }
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const causalcast::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const causalcast::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
