#pragma once

// Datasets: synthetic generators, CSV ingestion, min-max normalization,
// per-trial test/queue splits and the fixed-order instance oracle.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "palacs/error.hpp"
#include "palacs/kernel.hpp"

namespace palacs {

inline constexpr std::size_t kTestPerClass = 50;

struct Dataset {
    std::string name;
    std::vector<FeatureVector> features;
    std::vector<ClassIndex> labels;
    std::vector<std::string> class_names;
    int budget = 60;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t num_classes() const noexcept { return class_names.size(); }
    std::size_t dimension() const noexcept { return features.empty() ? 0 : features.front().size(); }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> n(num_classes(), 0);
        for (ClassIndex y : labels) ++n[y];
        return n;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Acquisition budgets: 60 for 3clusters, vertebral and yeast, 80 for
// vehicle, 120 for bars and spirals; 60 otherwise.
inline int default_budget(std::string_view name) {
    if (name == "spirals" || name == "bars") return 120;
    if (name == "vehicle") return 80;
    return 60;
}

// Rescales every feature to [0, 1]. Constant features are removed; their
// original column indices are returned.
inline std::vector<std::size_t> normalize_min_max(Dataset& ds) {
    const std::size_t d = ds.dimension();
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& x : ds.features) {
        for (std::size_t j = 0; j < d; ++j) {
            lo[j] = std::min(lo[j], x[j]);
            hi[j] = std::max(hi[j], x[j]);
        }
    }
    std::vector<std::size_t> dropped, kept;
    for (std::size_t j = 0; j < d; ++j) (hi[j] > lo[j] ? kept : dropped).push_back(j);
    for (auto& x : ds.features) {
        FeatureVector out;
        out.reserve(kept.size());
        for (std::size_t j : kept) out.push_back(std::clamp((x[j] - lo[j]) / (hi[j] - lo[j]), 0.0, 1.0));
        x = std::move(out);
    }
    return dropped;
}

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

struct GaussianComponent {
    std::vector<double> mean;
    double stddev = 1.0;
};

// One isotropic Gaussian per class, n instances each, normalized. Instances
// are stored class by class.
inline Dataset generate_gaussian_mixture(std::string name, const std::vector<GaussianComponent>& classes,
                                         std::size_t per_class, std::uint64_t seed) {
    if (classes.size() < 2) throw DatasetError("a mixture needs at least two classes");
    std::mt19937_64 rng(seed);
    Dataset ds;
    ds.name = std::move(name);
    ds.budget = default_budget(ds.name);
    for (std::size_t y = 0; y < classes.size(); ++y) {
        ds.class_names.push_back(std::to_string(y + 1));
        std::normal_distribution<double> noise(0.0, classes[y].stddev);
        for (std::size_t i = 0; i < per_class; ++i) {
            FeatureVector x(classes[y].mean);
            for (double& v : x) v += noise(rng);
            ds.features.push_back(std::move(x));
            ds.labels.push_back(y);
        }
    }
    normalize_min_max(ds);
    return ds;
}

namespace detail {

inline Dataset make_3clusters(std::size_t n, std::uint64_t seed) {
    return generate_gaussian_mixture("3clusters", {{{0.0, 0.0}, 0.5}, {{3.0, 0.0}, 0.8}, {{4.2, 0.0}, 0.8}}, n, seed);
}

// Class 1 is a compact blob far from two interleaved Archimedean spiral arms.
inline Dataset make_spirals(std::size_t n, std::uint64_t seed) {
    constexpr double kTurns = 3.0 * std::numbers::pi;
    constexpr double kMaxRadius = 0.75;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, kTurns);
    std::normal_distribution<double> arm_noise(0.0, 0.03);
    std::normal_distribution<double> blob_noise(0.0, 0.1);

    // The arms fit in [-0.75, 0.75]^2; the blob sits 1.5 box diagonals away
    // along (1, 1).
    const double offset = 1.5 * (2.0 * kMaxRadius * std::numbers::sqrt2) / std::numbers::sqrt2;

    Dataset ds;
    ds.name = "spirals";
    ds.budget = default_budget(ds.name);
    ds.class_names = {"1", "2", "3"};
    for (std::size_t i = 0; i < n; ++i) {
        ds.features.push_back({offset + blob_noise(rng), offset + blob_noise(rng)});
        ds.labels.push_back(0);
    }
    for (ClassIndex y = 1; y <= 2; ++y) {
        const double phase = y == 1 ? 0.0 : std::numbers::pi;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = angle(rng);
            const double r = 0.25 + 0.5 * t / kTurns;
            ds.features.push_back({r * std::cos(t + phase) + arm_noise(rng), r * std::sin(t + phase) + arm_noise(rng)});
            ds.labels.push_back(y);
        }
    }
    normalize_min_max(ds);
    return ds;
}

// Unit-width, height-3 vertical bars. Bars 1 and 2 overlap on a band of 20%
// of the width; bar 3 is one width to the right of bar 2.
inline Dataset make_bars(std::size_t n, std::uint64_t seed) {
    constexpr double kWidth = 1.0;
    constexpr double kHeight = 3.0;
    const double left[3] = {0.0, 0.8 * kWidth, 0.8 * kWidth + 2.0 * kWidth};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Dataset ds;
    ds.name = "bars";
    ds.budget = default_budget(ds.name);
    ds.class_names = {"1", "2", "3"};
    for (ClassIndex y = 0; y < 3; ++y) {
        for (std::size_t i = 0; i < n; ++i) {
            ds.features.push_back({left[y] + kWidth * unit(rng), kHeight * unit(rng)});
            ds.labels.push_back(y);
        }
    }
    normalize_min_max(ds);
    return ds;
}

}  // namespace detail

inline const std::vector<std::string>& synthetic_names() {
    static const std::vector<std::string> names = {"3clusters", "spirals", "bars"};
    return names;
}

inline Dataset generate_synthetic(std::string_view name, std::size_t instances_per_class, std::uint64_t seed) {
    if (instances_per_class < 110)
        throw DatasetError("synthetic datasets need at least 110 instances per class");
    if (name == "3clusters") return detail::make_3clusters(instances_per_class, seed);
    if (name == "spirals") return detail::make_spirals(instances_per_class, seed);
    if (name == "bars") return detail::make_bars(instances_per_class, seed);
    throw DatasetError("unknown synthetic dataset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

struct TabularLoad {
    Dataset dataset;
    std::vector<std::string> warnings;
};

inline constexpr std::size_t kMinTabularClassSize = 60;

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(b, e - b + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

inline std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace detail

// Reads a comma-separated file with a header row. Non-numeric feature columns
// and constant features are dropped; rows with missing cells are skipped.
// Labels map to classes in order of first appearance after filtering.
// Classes smaller than `min_class_size` cannot supply a test split and are
// rejected.
inline TabularLoad load_tabular(const std::string& path, const std::string& label_column,
                                const std::optional<std::vector<std::string>>& class_filter = std::nullopt,
                                std::size_t min_class_size = kMinTabularClassSize) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DatasetError("'" + path + "' is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = detail::split_csv_line(line);
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) throw DatasetError("label column '" + label_column + "' not found in '" + path + "'");
    const std::size_t label_idx = static_cast<std::size_t>(label_it - header.begin());

    std::vector<std::vector<std::string>> rows;
    std::size_t rejected = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        const bool missing = cells.size() != header.size() ||
                             std::any_of(cells.begin(), cells.end(), [](const std::string& c) {
                                 return c.empty() || c == "?" || c == "NA";
                             });
        if (missing) {
            ++rejected;
            continue;
        }
        if (class_filter && std::find(class_filter->begin(), class_filter->end(), cells[label_idx]) == class_filter->end())
            continue;
        rows.push_back(std::move(cells));
    }

    TabularLoad result;
    if (rejected > 0) result.warnings.push_back(std::to_string(rejected) + " rows with missing values rejected");

    std::vector<std::size_t> numeric_cols;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == label_idx) continue;
        const bool numeric = std::all_of(rows.begin(), rows.end(),
                                         [&](const auto& r) { return detail::parse_number(r[j]).has_value(); });
        if (numeric) {
            numeric_cols.push_back(j);
        } else {
            result.warnings.push_back("non-numeric column '" + header[j] + "' dropped");
        }
    }
    if (numeric_cols.empty()) throw DatasetError("'" + path + "' has no numeric feature columns");

    Dataset& ds = result.dataset;
    ds.name = path.substr(path.find_last_of("/\\") == std::string::npos ? 0 : path.find_last_of("/\\") + 1);
    if (const auto dot = ds.name.find_last_of('.'); dot != std::string::npos && dot > 0) ds.name.erase(dot);
    std::map<std::string, ClassIndex> index_of;
    for (const auto& r : rows) {
        const auto [it, inserted] = index_of.try_emplace(r[label_idx], ds.class_names.size());
        if (inserted) ds.class_names.push_back(r[label_idx]);
        FeatureVector x;
        for (std::size_t j : numeric_cols) x.push_back(*detail::parse_number(r[j]));
        ds.features.push_back(std::move(x));
        ds.labels.push_back(it->second);
    }
    if (ds.num_classes() < 2) throw DatasetError("'" + path + "' has fewer than two classes after filtering");
    const auto counts = ds.class_counts();
    for (ClassIndex y = 0; y < counts.size(); ++y) {
        if (counts[y] < min_class_size)
            throw DatasetError("class '" + ds.class_names[y] + "' has " + std::to_string(counts[y]) +
                               " instances; at least " + std::to_string(min_class_size) + " are required");
    }

    for (std::size_t j : normalize_min_max(ds))
        result.warnings.push_back("constant column '" + header[numeric_cols[j]] + "' dropped");
    if (ds.dimension() == 0) throw DatasetError("'" + path + "' has no non-constant feature columns");
    ds.budget = default_budget(ds.name);
    return result;
}

// ---------------------------------------------------------------------------
// Trial splits
// ---------------------------------------------------------------------------

struct TrialSplit {
    LabeledSet test;
    // Per-class training instances in the fixed order the oracle serves them.
    std::vector<std::vector<FeatureVector>> queues;
};

// Draws 50 test instances per class without replacement and shuffles the
// rest of each class into its queue. Throws when any class has too few
// instances for the test set plus `required_queue_depth` acquisitions.
inline TrialSplit make_trial_split(const Dataset& ds, std::uint64_t seed, std::size_t required_queue_depth = 0) {
    const std::size_t C = ds.num_classes();
    if (C < 2) throw DatasetError("dataset needs at least two classes");
    const auto counts = ds.class_counts();
    for (ClassIndex y = 0; y < C; ++y) {
        if (counts[y] < kTestPerClass + std::max<std::size_t>(required_queue_depth, 1))
            throw DatasetError("class '" + ds.class_names[y] + "' has " + std::to_string(counts[y]) +
                               " instances; need " + std::to_string(kTestPerClass) + " for testing plus " +
                               std::to_string(std::max<std::size_t>(required_queue_depth, 1)) + " for acquisition");
    }

    std::mt19937_64 rng(seed);
    TrialSplit split{LabeledSet(C, ds.dimension()), std::vector<std::vector<FeatureVector>>(C)};
    for (ClassIndex y = 0; y < C; ++y) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.labels[i] == y) members.push_back(i);
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t j = 0; j < members.size(); ++j) {
            const auto& x = ds.features[members[j]];
            if (j < kTestPerClass) {
                split.test.add(x, y);
            } else {
                split.queues[y].push_back(x);
            }
        }
    }
    return split;
}

// Serves the next unused instance of a requested class.
class InstanceOracle {
public:
    explicit InstanceOracle(const TrialSplit& split) : queues_(&split.queues), next_(split.queues.size(), 0) {}

    const FeatureVector& request(ClassIndex y) {
        if (y >= next_.size()) throw PreconditionError("requested class out of range");
        if (next_[y] >= (*queues_)[y].size())
            throw ConsistencyError("instance queue for class " + std::to_string(y + 1) + " exhausted");
        return (*queues_)[y][next_[y]++];
    }

private:
    const std::vector<std::vector<FeatureVector>>* queues_;
    std::vector<std::size_t> next_;
};

}  // namespace palacs
