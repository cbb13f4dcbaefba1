#pragma once

// Command-line front end: experiment configuration, `run`, `report` and
// `plot`. All file I/O of the project lives here and in io.hpp.
//
// Exit codes: 0 success, 2 invalid configuration or usage, 3 dataset or
// records problems, 4 runtime inconsistency.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "palacs/data.hpp"
#include "palacs/error.hpp"
#include "palacs/harness.hpp"
#include "palacs/io.hpp"

namespace palacs::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kConfigInvalid = 2, kDataInvalid = 3, kRuntimeFailure = 4 };

struct DatasetSpec {
    // Either a synthetic generator name or a CSV path.
    std::string synthetic;
    std::uint64_t seed = 0;
    std::size_t instances_per_class = 200;

    std::string path;
    std::string label_column = "class";
    std::optional<std::vector<std::string>> class_filter;
};

// Per-strategy overrides of the experiment-wide defaults.
struct StrategyOverride {
    std::string name;
    std::optional<int> pseudo_per_class;
    std::optional<int> local_budget_max;
    std::optional<int> chunk_size;
    std::optional<int> folds;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::vector<StrategyOverride> strategies;
    int trials = 500;
    std::optional<int> budget;  // dataset default when unset
    double sigma = 0.05;
    int pseudo_per_class = 25;
    int local_budget_max = 3;
    std::optional<int> chunk_size;  // 2C when unset
    int folds = 3;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out = "results";
    bool plot = false;
};

// Command-line flags that replace config keys of the same name.
struct Overrides {
    std::optional<int> trials;
    std::optional<int> budget;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
};

namespace detail {

template <class T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key, "has the wrong type");
    }
}

inline int get_int(const json& j, const std::string& key) {
    if (!j.is_number_integer()) throw ConfigError(key, "must be an integer");
    return j.get<int>();
}

inline std::uint64_t get_seed(const json& j, const std::string& key) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
        throw ConfigError(key, "must be a non-negative integer");
    return j.get<std::uint64_t>();
}

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.count(k)) throw ConfigError(prefix + k, "unknown key");
    }
}

inline DatasetSpec parse_dataset(const json& j) {
    if (!j.is_object()) throw ConfigError("dataset", "must be an object");
    reject_unknown(j, {"synthetic", "seed", "instances_per_class", "path", "label_column", "class_filter"}, "dataset.");
    DatasetSpec d;
    const bool synthetic = j.contains("synthetic");
    const bool file = j.contains("path");
    if (synthetic == file) throw ConfigError("dataset", "exactly one of 'synthetic' and 'path' is required");
    if (synthetic) {
        d.synthetic = get_as<std::string>(j["synthetic"], "dataset.synthetic");
        const auto& names = synthetic_names();
        if (std::find(names.begin(), names.end(), d.synthetic) == names.end())
            throw ConfigError("dataset.synthetic", "unknown generator '" + d.synthetic + "'");
        if (j.contains("seed")) d.seed = get_seed(j["seed"], "dataset.seed");
        if (j.contains("instances_per_class")) {
            const int n = get_int(j["instances_per_class"], "dataset.instances_per_class");
            if (n < 110) throw ConfigError("dataset.instances_per_class", "must be >= 110");
            d.instances_per_class = static_cast<std::size_t>(n);
        }
        for (const char* k : {"label_column", "class_filter"})
            if (j.contains(k)) throw ConfigError(std::string("dataset.") + k, "only valid with 'path'");
    } else {
        d.path = get_as<std::string>(j["path"], "dataset.path");
        if (j.contains("label_column")) d.label_column = get_as<std::string>(j["label_column"], "dataset.label_column");
        if (j.contains("class_filter"))
            d.class_filter = get_as<std::vector<std::string>>(j["class_filter"], "dataset.class_filter");
        for (const char* k : {"seed", "instances_per_class"})
            if (j.contains(k)) throw ConfigError(std::string("dataset.") + k, "only valid with 'synthetic'");
    }
    return d;
}

inline StrategyOverride parse_strategy(const json& j, std::size_t index) {
    const std::string key = "strategies[" + std::to_string(index) + "]";
    StrategyOverride s;
    if (j.is_string()) {
        s.name = j.get<std::string>();
    } else if (j.is_object()) {
        reject_unknown(j, {"name", "pseudo_per_class", "local_budget_max", "chunk_size", "folds"}, key + ".");
        if (!j.contains("name")) throw ConfigError(key + ".name", "is required");
        s.name = get_as<std::string>(j["name"], key + ".name");
        if (j.contains("pseudo_per_class")) s.pseudo_per_class = get_int(j["pseudo_per_class"], key + ".pseudo_per_class");
        if (j.contains("local_budget_max")) s.local_budget_max = get_int(j["local_budget_max"], key + ".local_budget_max");
        if (j.contains("chunk_size")) s.chunk_size = get_int(j["chunk_size"], key + ".chunk_size");
        if (j.contains("folds")) s.folds = get_int(j["folds"], key + ".folds");
    } else {
        throw ConfigError(key, "must be a strategy name or an object");
    }
    if (!is_known_strategy(s.name)) throw ConfigError(key, "unknown strategy '" + s.name + "'");
    return s;
}

}  // namespace detail

// The key "provenance" is accepted and ignored so a run manifest can be fed
// back as a config.
inline ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
    detail::reject_unknown(j,
                           {"dataset", "strategies", "trials", "budget", "sigma", "pseudo_per_class",
                            "local_budget_max", "chunk_size", "folds", "seed", "workers", "out", "plot", "provenance"},
                           "");
    ExperimentConfig c;
    if (!j.contains("dataset")) throw ConfigError("dataset", "is required");
    c.dataset = detail::parse_dataset(j["dataset"]);
    if (!j.contains("strategies") || !j["strategies"].is_array())
        throw ConfigError("strategies", "must be a list of strategy names");
    for (std::size_t i = 0; i < j["strategies"].size(); ++i) c.strategies.push_back(detail::parse_strategy(j["strategies"][i], i));

    if (j.contains("trials")) c.trials = detail::get_int(j["trials"], "trials");
    if (j.contains("budget") && !j["budget"].is_null()) c.budget = detail::get_int(j["budget"], "budget");
    if (j.contains("sigma")) {
        if (!j["sigma"].is_number()) throw ConfigError("sigma", "must be a number");
        c.sigma = j["sigma"].get<double>();
    }
    if (j.contains("pseudo_per_class")) c.pseudo_per_class = detail::get_int(j["pseudo_per_class"], "pseudo_per_class");
    if (j.contains("local_budget_max")) c.local_budget_max = detail::get_int(j["local_budget_max"], "local_budget_max");
    if (j.contains("chunk_size") && !j["chunk_size"].is_null()) c.chunk_size = detail::get_int(j["chunk_size"], "chunk_size");
    if (j.contains("folds")) c.folds = detail::get_int(j["folds"], "folds");
    if (j.contains("seed")) c.seed = detail::get_seed(j["seed"], "seed");
    if (j.contains("workers")) c.workers = detail::get_int(j["workers"], "workers");
    if (j.contains("out")) c.out = detail::get_as<std::string>(j["out"], "out");
    if (j.contains("plot")) c.plot = detail::get_as<bool>(j["plot"], "plot");
    return c;
}

inline void apply_overrides(ExperimentConfig& c, const Overrides& o) {
    if (o.trials) c.trials = *o.trials;
    if (o.budget) c.budget = *o.budget;
    if (o.seed) c.seed = *o.seed;
    if (o.workers) c.workers = *o.workers;
    if (o.out) c.out = *o.out;
}

// Checks that need no dataset.
inline void validate(const ExperimentConfig& c) {
    if (c.strategies.empty()) throw ConfigError("strategies", "must name at least one strategy");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < c.strategies.size(); ++i) {
        const auto& s = c.strategies[i];
        const std::string key = "strategies[" + std::to_string(i) + "]";
        if (!seen.insert(s.name).second) throw ConfigError(key, "duplicate strategy '" + s.name + "'");
        if (s.pseudo_per_class && *s.pseudo_per_class < 1) throw ConfigError(key + ".pseudo_per_class", "must be >= 1");
        if (s.local_budget_max && *s.local_budget_max < 1) throw ConfigError(key + ".local_budget_max", "must be >= 1");
        if (s.folds && *s.folds < 2) throw ConfigError(key + ".folds", "must be >= 2");
    }
    if (c.trials < 1) throw ConfigError("trials", "must be >= 1");
    if (c.budget && *c.budget < 1) throw ConfigError("budget", "must be >= 1");
    if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) throw ConfigError("sigma", "must be positive");
    if (c.pseudo_per_class < 1) throw ConfigError("pseudo_per_class", "must be >= 1");
    if (c.local_budget_max < 1) throw ConfigError("local_budget_max", "must be >= 1");
    if (c.folds < 2) throw ConfigError("folds", "must be >= 2");
    if (c.workers < 1) throw ConfigError("workers", "must be >= 1");
    if (c.out.empty()) throw ConfigError("out", "must not be empty");
}

struct LoadedDataset {
    Dataset dataset;
    std::vector<std::string> warnings;
};

inline LoadedDataset load_dataset(const DatasetSpec& d) {
    if (!d.synthetic.empty()) return {generate_synthetic(d.synthetic, d.instances_per_class, d.seed), {}};
    auto t = load_tabular(d.path, d.label_column, d.class_filter);
    return {std::move(t.dataset), std::move(t.warnings)};
}

// Resolves defaults that depend on the dataset into a runnable plan.
inline ExperimentPlan make_plan(const ExperimentConfig& c, const Dataset& ds) {
    ExperimentPlan plan;
    plan.trials = c.trials;
    plan.budget = c.budget.value_or(ds.budget);
    plan.base_seed = c.seed;
    plan.workers = c.workers;
    plan.kernel = KernelConfig{c.sigma};
    const int C = static_cast<int>(ds.num_classes());
    for (std::size_t i = 0; i < c.strategies.size(); ++i) {
        const auto& o = c.strategies[i];
        StrategySpec s;
        s.name = o.name;
        s.pal.pseudo_per_class = o.pseudo_per_class.value_or(c.pseudo_per_class);
        s.pal.local_budget_max = o.local_budget_max.value_or(c.local_budget_max);
        s.pal.kernel = plan.kernel;
        s.chunk.chunk_size = o.chunk_size.value_or(c.chunk_size.value_or(2 * C));
        s.chunk.folds = o.folds.value_or(c.folds);
        if (s.chunk.chunk_size < C) {
            const std::string key = o.chunk_size ? "strategies[" + std::to_string(i) + "].chunk_size" : "chunk_size";
            throw ConfigError(key, "must be >= the number of classes (" + std::to_string(C) + ")");
        }
        plan.strategies.push_back(s);
    }
    return plan;
}

// Fully resolved config; parse_config accepts it unchanged.
inline json resolved_config(const ExperimentConfig& c, const ExperimentPlan& plan) {
    json j;
    json d;
    if (!c.dataset.synthetic.empty()) {
        d["synthetic"] = c.dataset.synthetic;
        d["seed"] = c.dataset.seed;
        d["instances_per_class"] = c.dataset.instances_per_class;
    } else {
        d["path"] = c.dataset.path;
        d["label_column"] = c.dataset.label_column;
        if (c.dataset.class_filter) d["class_filter"] = *c.dataset.class_filter;
    }
    j["dataset"] = d;
    j["strategies"] = json::array();
    for (const auto& s : plan.strategies) {
        j["strategies"].push_back({{"name", s.name},
                                   {"pseudo_per_class", s.pal.pseudo_per_class},
                                   {"local_budget_max", s.pal.local_budget_max},
                                   {"chunk_size", s.chunk.chunk_size},
                                   {"folds", s.chunk.folds}});
    }
    j["trials"] = plan.trials;
    j["budget"] = plan.budget;
    j["sigma"] = c.sigma;
    j["pseudo_per_class"] = c.pseudo_per_class;
    j["local_budget_max"] = c.local_budget_max;
    j["chunk_size"] = c.chunk_size ? json(*c.chunk_size) : json(nullptr);
    j["folds"] = c.folds;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["out"] = c.out;
    j["plot"] = c.plot;
    return j;
}

inline json manifest_json(const ExperimentConfig& c, const ExperimentPlan& plan, const Dataset& ds,
                          const std::vector<std::string>& warnings) {
    json j = resolved_config(c, plan);
    json p;
    p["tool"] = "palacs";
    p["version"] = kVersion;
    p["dataset_name"] = ds.name;
    p["num_classes"] = ds.num_classes();
    p["dimension"] = ds.dimension();
    p["class_names"] = ds.class_names;
    p["trial_seed_rule"] = "seed + trial";
    p["strategy_seed_rule"] = "trial_seed xor fnv1a64(strategy name)";
    p["dataset_warnings"] = warnings;
    j["provenance"] = p;
    return j;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << content;
    if (!f) throw Error("failed writing '" + path.string() + "'");
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DatasetError("cannot read '" + path.string() + "'");
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

struct StoredRun {
    ExperimentReport report;
    std::vector<std::string> class_names;
};

inline StoredRun load_run(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DatasetError("'" + dir.string() + "' is not a directory");
    const auto manifest_path = dir / "run_manifest.json";
    const auto records_path = dir / "records.csv";
    if (!std::filesystem::exists(manifest_path)) throw DatasetError("no run_manifest.json in '" + dir.string() + "'");
    if (!std::filesystem::exists(records_path)) throw DatasetError("no records.csv in '" + dir.string() + "'");

    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw DatasetError("corrupt run_manifest.json: " + std::string(e.what()));
    }
    if (!manifest.contains("provenance") || !manifest["provenance"].contains("num_classes"))
        throw DatasetError("run_manifest.json lacks provenance.num_classes");
    StoredRun run;
    const auto C = manifest["provenance"]["num_classes"].get<std::size_t>();
    if (manifest["provenance"].contains("class_names"))
        run.class_names = manifest["provenance"]["class_names"].get<std::vector<std::string>>();

    std::ifstream in(records_path);
    const auto records = io::read_records(in);
    if (records.empty()) throw DatasetError("records.csv holds no records");
    for (const auto& r : records)
        for (ClassIndex y : r.choices)
            if (y >= C) throw DatasetError("records.csv mentions a class outside the manifest's range");
    try {
        run.report = aggregate(records, C);
    } catch (const ConsistencyError& e) {
        throw DatasetError(std::string("records.csv is inconsistent: ") + e.what());
    }
    return run;
}

}  // namespace detail

inline void write_bundle(const std::filesystem::path& dir, const ExperimentReport& rep,
                         const std::vector<TrialRecord>& records, const std::vector<std::string>& class_names,
                         const json& manifest, bool plot) {
    std::filesystem::create_directories(dir);
    std::ostringstream curves, phases, sampling, recs;
    io::write_learning_curves(curves, rep);
    io::write_phase_table(phases, rep);
    io::write_sampling_proportions(sampling, rep, class_names);
    io::write_records(recs, records);
    detail::write_file(dir / "learning_curves.csv", curves.str());
    detail::write_file(dir / "phase_table.csv", phases.str());
    detail::write_file(dir / "sampling_proportions.csv", sampling.str());
    detail::write_file(dir / "records.csv", recs.str());
    detail::write_file(dir / "run_manifest.json", manifest.dump(2) + "\n");
    if (plot) detail::write_file(dir / "learning_curves.svg", io::render_svg(rep));
}

// Runs `body`, mapping exceptions to exit codes and messages on `err`.
template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigInvalid;
    } catch (const DatasetError& e) {
        err << "error: " << e.what() << '\n';
        return kDataInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

inline int cmd_run(const std::string& config_path, const Overrides& overrides, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::string text;
        try {
            text = detail::read_file(config_path);
        } catch (const DatasetError& e) {
            throw ConfigError("", e.what());
        }
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw ConfigError("", std::string("cannot parse config: ") + e.what());
        }
        ExperimentConfig cfg = parse_config(j);
        apply_overrides(cfg, overrides);
        validate(cfg);

        auto [ds, warnings] = load_dataset(cfg.dataset);
        for (const auto& w : warnings) err << "warning: " << w << '\n';
        const ExperimentPlan plan = make_plan(cfg, ds);

        const auto records = run_experiment(ds, plan);
        const auto report = aggregate(records, ds.num_classes());
        write_bundle(cfg.out, report, records, ds.class_names, manifest_json(cfg, plan, ds, warnings), cfg.plot);
        out << io::render_tables(report) << "\nwrote reports to " << cfg.out << '\n';
        return static_cast<int>(kOk);
    });
}

inline int cmd_report(const std::string& dir, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto run = detail::load_run(dir);
        out << io::render_tables(run.report);
        return static_cast<int>(kOk);
    });
}

inline int cmd_plot(const std::string& dir, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto run = detail::load_run(dir);
        const auto path = std::filesystem::path(dir) / "learning_curves.svg";
        detail::write_file(path, io::render_svg(run.report));
        out << "wrote " << path.string() << '\n';
        return static_cast<int>(kOk);
    });
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Active class selection experiments (PAL-ACS and baselines)", "palacs"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, report_dir, plot_dir;
    Overrides ov;
    auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
    run->add_option("config", config_path, "Config file")->required();
    run->add_option("--trials", ov.trials, "Override 'trials'");
    run->add_option("--budget", ov.budget, "Override 'budget'");
    run->add_option("--seed", ov.seed, "Override 'seed'");
    run->add_option("--workers", ov.workers, "Override 'workers'");
    run->add_option("--out", ov.out, "Override 'out'");

    auto* report = app.add_subcommand("report", "Print phase and sampling tables for a finished run");
    report->add_option("dir", report_dir, "Output directory of a run")->required();
    auto* plot = app.add_subcommand("plot", "Write learning_curves.svg for a finished run");
    plot->add_option("dir", plot_dir, "Output directory of a run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigInvalid;
    }
    if (run->parsed()) return cmd_run(config_path, ov, out, err);
    if (report->parsed()) return cmd_report(report_dir, out, err);
    return cmd_plot(plot_dir, out, err);
}

}  // namespace palacs::cli
