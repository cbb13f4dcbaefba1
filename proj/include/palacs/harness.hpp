#pragma once

// Experiment protocol: strategy x trial runs against a fixed-order oracle,
// then aggregation into learning curves, phase statistics and sampling
// proportions.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "palacs/data.hpp"
#include "palacs/error.hpp"
#include "palacs/kernel.hpp"
#include "palacs/seed.hpp"
#include "palacs/strategies.hpp"

namespace palacs {

inline const std::vector<std::string>& strategy_names() {
    static const std::vector<std::string> names = {"pal-acs", "random", "inverse", "redistricting"};
    return names;
}

inline bool is_known_strategy(std::string_view name) {
    const auto& n = strategy_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

// A strategy name plus its resolved parameters. chunk.chunk_size <= 0 means
// the default of 2C.
struct StrategySpec {
    std::string name;
    PalAcsConfig pal;
    ChunkConfig chunk{0, 3};
};

inline std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec, std::size_t num_classes,
                                               const KernelConfig& kernel, std::uint64_t seed) {
    ChunkConfig chunk = spec.chunk;
    if (chunk.chunk_size <= 0) chunk.chunk_size = ChunkConfig::defaults_for(num_classes).chunk_size;
    if (spec.name == "pal-acs") {
        PalAcsConfig pal = spec.pal;
        pal.kernel = kernel;
        return std::make_unique<PalAcsStrategy>(num_classes, pal, seed);
    }
    if (spec.name == "random") return std::make_unique<RandomStrategy>(num_classes, seed);
    if (spec.name == "inverse") return std::make_unique<InverseStrategy>(num_classes, chunk, kernel, seed);
    if (spec.name == "redistricting") return std::make_unique<RedistrictingStrategy>(num_classes, chunk, kernel, seed);
    throw PreconditionError("unknown strategy '" + spec.name + "'");
}

struct TrialRecord {
    std::string strategy;
    std::string dataset;
    int trial_id = 0;
    std::vector<double> errors;      // test error after each acquisition
    std::vector<ClassIndex> choices;  // class requested at each step

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

inline std::uint64_t trial_seed(std::uint64_t base_seed, int trial) {
    return base_seed + static_cast<std::uint64_t>(trial);
}

inline std::uint64_t strategy_seed(std::uint64_t trial_seed, std::string_view strategy) {
    return trial_seed ^ hash_name(strategy);
}

// Parzen test error tracked incrementally: per test instance class sums are
// extended by one kernel evaluation per acquisition, in acquisition order, so
// the result equals a full kernel_frequency recomputation bit for bit.
class IncrementalParzenError {
public:
    IncrementalParzenError(const LabeledSet& test, const KernelConfig& kernel)
        : test_(&test), factor_(kernel.exponent_factor()), sums_(test.size() * test.num_classes(), 0.0) {
        kernel.validate();
    }

    double add(std::span<const double> x, ClassIndex y) {
        const std::size_t C = test_->num_classes();
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < test_->size(); ++i) {
            double* k = &sums_[i * C];
            k[y] += std::exp(squared_distance(x, test_->features(i)) * factor_);
            if (argmax_lowest(std::span<const double>(k, C)) != test_->label(i)) ++wrong;
        }
        return static_cast<double>(wrong) / static_cast<double>(test_->size());
    }

private:
    const LabeledSet* test_;
    double factor_;
    std::vector<double> sums_;
};

// One acquisition run: select, pop from the oracle, retrain, evaluate.
inline TrialRecord run_trial(const Dataset& ds, const TrialSplit& split, Strategy& strategy, int budget,
                             const KernelConfig& kernel, int trial_id = 0) {
    if (budget < 0) throw PreconditionError("budget must be non-negative");
    TrialRecord rec;
    rec.strategy = std::string(strategy.name());
    rec.dataset = ds.name;
    rec.trial_id = trial_id;
    rec.errors.reserve(static_cast<std::size_t>(budget));
    rec.choices.reserve(static_cast<std::size_t>(budget));

    InstanceOracle oracle(split);
    LabeledSet train(ds.num_classes(), split.test.dimension());
    IncrementalParzenError evaluator(split.test, kernel);
    for (int step = 0; step < budget; ++step) {
        const ClassIndex y = strategy.select(train).chosen_class;
        if (y >= ds.num_classes()) throw ConsistencyError("strategy returned an invalid class");
        const FeatureVector& x = oracle.request(y);
        train.add(x, y);
        rec.choices.push_back(y);
        rec.errors.push_back(evaluator.add(x, y));
    }
    return rec;
}

struct ExperimentPlan {
    std::vector<StrategySpec> strategies;
    int trials = 500;
    int budget = 60;
    std::uint64_t base_seed = 0;
    int workers = 1;
    KernelConfig kernel;
};

// Runs every strategy on every trial. Records are ordered trial-major, then
// by the plan's strategy order, independent of the worker count.
inline std::vector<TrialRecord> run_experiment(const Dataset& ds, const ExperimentPlan& plan) {
    if (plan.trials < 1) throw PreconditionError("trials must be >= 1");
    if (plan.budget < 1) throw PreconditionError("budget must be >= 1");
    if (plan.strategies.empty()) throw PreconditionError("no strategies");
    plan.kernel.validate();
    for (const auto& s : plan.strategies) {
        if (!is_known_strategy(s.name)) throw PreconditionError("unknown strategy '" + s.name + "'");
    }
    // Fail on shallow queues before any work starts.
    (void)make_trial_split(ds, trial_seed(plan.base_seed, 0), static_cast<std::size_t>(plan.budget));

    const std::size_t S = plan.strategies.size();
    std::vector<TrialRecord> records(static_cast<std::size_t>(plan.trials) * S);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (int t = next++; t < plan.trials; t = next++) {
            try {
                const std::uint64_t seed = trial_seed(plan.base_seed, t);
                const TrialSplit split = make_trial_split(ds, seed, static_cast<std::size_t>(plan.budget));
                for (std::size_t s = 0; s < S; ++s) {
                    const auto& spec = plan.strategies[s];
                    auto strategy = make_strategy(spec, ds.num_classes(), plan.kernel, strategy_seed(seed, spec.name));
                    records[static_cast<std::size_t>(t) * S + s] = run_trial(ds, split, *strategy, plan.budget, plan.kernel, t);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = plan.trials;
            }
        }
    };

    const int n_workers = std::clamp(plan.workers, 1, plan.trials);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return records;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct StepRange {
    std::size_t first = 0;  // zero-based, inclusive
    std::size_t last = 0;   // exclusive
};

// Four consecutive blocks covering [0, budget); when budget % 4 != 0 the
// earlier phases are one step longer.
inline std::array<StepRange, 4> phase_ranges(std::size_t budget) {
    std::array<StepRange, 4> out{};
    std::size_t start = 0;
    for (std::size_t p = 0; p < 4; ++p) {
        const std::size_t len = budget / 4 + (p < budget % 4 ? 1 : 0);
        out[p] = {start, start + len};
        start += len;
    }
    return out;
}

struct PhaseStats {
    double mean_error = 0.0;
    double win_ratio = 0.0;
};

struct StrategySummary {
    std::string strategy;
    std::vector<double> curve_mean;
    std::vector<double> curve_std;  // sample standard deviation over trials
    std::array<PhaseStats, 4> phases{};
    std::vector<double> sampling_proportions;  // per class, sums to 1
};

struct ExperimentReport {
    std::string dataset;
    std::size_t num_classes = 0;
    std::size_t budget = 0;
    std::size_t trials = 0;
    std::vector<StrategySummary> strategies;  // first-appearance order

    const StrategySummary& at(std::string_view name) const {
        for (const auto& s : strategies)
            if (s.strategy == name) return s;
        throw PreconditionError("no strategy '" + std::string(name) + "' in report");
    }
};

// Trials are matched by trial_id across strategies. A trial's phase winners
// are all strategies whose phase-mean error equals the minimum exactly.
inline ExperimentReport aggregate(const std::vector<TrialRecord>& records, std::size_t num_classes) {
    if (records.empty()) throw PreconditionError("no records to aggregate");
    ExperimentReport rep;
    rep.dataset = records.front().dataset;
    rep.num_classes = num_classes;
    rep.budget = records.front().errors.size();

    std::vector<std::string> order;
    std::map<std::string, std::map<int, const TrialRecord*>> by_strategy;
    for (const auto& r : records) {
        if (r.dataset != rep.dataset) throw ConsistencyError("records mix datasets");
        if (r.errors.size() != rep.budget || r.choices.size() != rep.budget)
            throw ConsistencyError("records have different budgets");
        auto& trials = by_strategy[r.strategy];
        if (trials.empty()) order.push_back(r.strategy);
        if (!trials.emplace(r.trial_id, &r).second)
            throw ConsistencyError("duplicate trial " + std::to_string(r.trial_id) + " for " + r.strategy);
    }
    const auto& reference = by_strategy[order.front()];
    for (const auto& name : order) {
        const auto& trials = by_strategy[name];
        if (trials.size() != reference.size() ||
            !std::equal(trials.begin(), trials.end(), reference.begin(),
                        [](const auto& a, const auto& b) { return a.first == b.first; }))
            throw ConsistencyError("strategies '" + order.front() + "' and '" + name + "' cover different trials");
    }
    rep.trials = reference.size();
    const double n_trials = static_cast<double>(rep.trials);
    const auto phases = phase_ranges(rep.budget);

    // phase_means[s][trial][p]
    std::vector<std::vector<std::array<double, 4>>> phase_means(order.size());
    for (std::size_t s = 0; s < order.size(); ++s) {
        StrategySummary sum;
        sum.strategy = order[s];
        sum.curve_mean.assign(rep.budget, 0.0);
        sum.curve_std.assign(rep.budget, 0.0);
        sum.sampling_proportions.assign(num_classes, 0.0);
        for (const auto& [id, rec] : by_strategy[order[s]]) {
            std::array<double, 4> pm{};
            for (std::size_t p = 0; p < 4; ++p) {
                double acc = 0.0;
                for (std::size_t i = phases[p].first; i < phases[p].last; ++i) acc += rec->errors[i];
                const std::size_t len = phases[p].last - phases[p].first;
                pm[p] = len > 0 ? acc / static_cast<double>(len) : 0.0;
            }
            phase_means[s].push_back(pm);
            for (std::size_t i = 0; i < rep.budget; ++i) sum.curve_mean[i] += rec->errors[i];
            std::vector<std::size_t> counts(num_classes, 0);
            for (ClassIndex y : rec->choices) {
                if (y >= num_classes) throw ConsistencyError("choice outside the class range");
                ++counts[y];
            }
            for (std::size_t y = 0; y < num_classes; ++y)
                sum.sampling_proportions[y] += static_cast<double>(counts[y]) / static_cast<double>(rep.budget);
        }
        for (double& m : sum.curve_mean) m /= n_trials;
        if (rep.trials > 1) {
            for (const auto& [id, rec] : by_strategy[order[s]]) {
                for (std::size_t i = 0; i < rep.budget; ++i) {
                    const double d = rec->errors[i] - sum.curve_mean[i];
                    sum.curve_std[i] += d * d;
                }
            }
            for (double& v : sum.curve_std) v = std::sqrt(v / (n_trials - 1.0));
        }
        for (double& p : sum.sampling_proportions) p /= n_trials;
        for (std::size_t p = 0; p < 4; ++p) {
            double acc = 0.0;
            for (const auto& pm : phase_means[s]) acc += pm[p];
            sum.phases[p].mean_error = acc / n_trials;
        }
        rep.strategies.push_back(std::move(sum));
    }

    for (std::size_t p = 0; p < 4; ++p) {
        std::vector<std::size_t> wins(order.size(), 0);
        for (std::size_t t = 0; t < rep.trials; ++t) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < order.size(); ++s) best = std::min(best, phase_means[s][t][p]);
            for (std::size_t s = 0; s < order.size(); ++s)
                if (phase_means[s][t][p] == best) ++wins[s];
        }
        for (std::size_t s = 0; s < order.size(); ++s)
            rep.strategies[s].phases[p].win_ratio = static_cast<double>(wins[s]) / n_trials;
    }
    return rep;
}

}  // namespace palacs
