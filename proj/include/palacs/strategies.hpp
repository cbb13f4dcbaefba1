#pragma once

// Active class selection strategies. Each maps the current labeled set to the
// class whose next instance should be requested.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "palacs/error.hpp"
#include "palacs/gain.hpp"
#include "palacs/kernel.hpp"
#include "palacs/seed.hpp"

namespace palacs {

struct StrategyDecision {
    ClassIndex chosen_class = 0;
    std::optional<std::vector<double>> scores;
};

struct PalAcsConfig {
    int pseudo_per_class = 25;
    int local_budget_max = 3;
    KernelConfig kernel;

    void validate() const {
        if (pseudo_per_class < 1) throw PreconditionError("pseudo_per_class must be >= 1");
        if (local_budget_max < 1) throw PreconditionError("local_budget_max must be >= 1");
        kernel.validate();
    }
};

struct ChunkConfig {
    int chunk_size = 6;
    int folds = 3;

    // chunk_size = 2C, three folds.
    static ChunkConfig defaults_for(std::size_t num_classes) {
        return ChunkConfig{static_cast<int>(2 * num_classes), 3};
    }

    void validate(std::size_t num_classes) const {
        if (chunk_size < static_cast<int>(num_classes)) throw PreconditionError("chunk_size must be >= number of classes");
        if (folds < 2) throw PreconditionError("folds must be >= 2");
    }
};

// The class with fewest instances among those holding fewer than `threshold`,
// lowest index first. Empty when every class has reached the threshold.
inline std::optional<ClassIndex> cold_start_class(const LabeledSet& data, std::size_t threshold = 1) {
    std::optional<ClassIndex> best;
    for (ClassIndex y = 0; y < data.num_classes(); ++y) {
        const std::size_t n = data.class_count(y);
        if (n < threshold && (!best || n < data.class_count(*best))) best = y;
    }
    return best;
}

// ---------------------------------------------------------------------------
// PAL-ACS
// ---------------------------------------------------------------------------

struct PalAcsScores {
    std::vector<FeatureVector> pseudo;
    std::vector<std::vector<double>> frequencies;  // k_i for each pseudo instance
    std::vector<double> weighted_gains;            // perfGain(k_i) / |pseudo|
    std::vector<double> class_scores;              // g_y
};

// g_y = sum_i pg_i * k_{i,y} / sum_j k_{j,y}
inline std::vector<double> summarize_class_scores(std::span<const std::vector<double>> frequencies,
                                                  std::span<const double> weighted_gains) {
    if (frequencies.size() != weighted_gains.size())
        throw DimensionMismatch("one weighted gain per pseudo instance is required");
    if (frequencies.empty()) throw PreconditionError("no pseudo instances");
    const std::size_t C = frequencies.front().size();

    std::vector<double> normalizer(C, 0.0);
    for (const auto& k : frequencies) {
        for (std::size_t y = 0; y < C; ++y) normalizer[y] += k[y];
    }
    std::vector<double> g(C, 0.0);
    for (std::size_t y = 0; y < C; ++y) {
        if (!(normalizer[y] > 0.0))
            throw ConsistencyError("class " + std::to_string(y) + " has zero kernel mass over all pseudo instances");
        for (std::size_t i = 0; i < frequencies.size(); ++i) {
            g[y] += weighted_gains[i] * frequencies[i][y] / normalizer[y];
        }
    }
    return g;
}

// Requires every class to hold at least one instance.
inline PalAcsScores pal_acs_scores(const LabeledSet& data, const PalAcsConfig& cfg, const GainModel& model,
                                   std::uint64_t seed) {
    PalAcsScores s;
    s.pseudo = sample_pseudo_instances(data, cfg.pseudo_per_class, cfg.kernel, seed);
    const double density_weight = 1.0 / static_cast<double>(s.pseudo.size());
    s.frequencies.reserve(s.pseudo.size());
    s.weighted_gains.reserve(s.pseudo.size());
    for (const auto& x : s.pseudo) {
        s.frequencies.push_back(kernel_frequency_values(x, data, cfg.kernel));
        s.weighted_gains.push_back(model.perf_gain(s.frequencies.back()) * density_weight);
    }
    s.class_scores = summarize_class_scores(s.frequencies, s.weighted_gains);
    return s;
}

inline StrategyDecision pal_acs_select(const LabeledSet& data, const PalAcsConfig& cfg, const GainModel& model,
                                       std::uint64_t seed) {
    cfg.validate();
    if (auto y = cold_start_class(data)) return {*y, std::nullopt};
    auto scores = pal_acs_scores(data, cfg, model, seed);
    const ClassIndex best = argmax_lowest(scores.class_scores);
    return {best, std::move(scores.class_scores)};
}

inline StrategyDecision pal_acs_select(const LabeledSet& data, const PalAcsConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const GainModel model(data.num_classes(), GainConfig{cfg.local_budget_max});
    return pal_acs_select(data, cfg, model, seed);
}

inline StrategyDecision random_select(std::size_t num_classes, std::uint64_t seed) {
    if (num_classes < 2) throw PreconditionError("need at least two classes");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<ClassIndex> pick(0, num_classes - 1);
    return {pick(rng), std::nullopt};
}

// ---------------------------------------------------------------------------
// Chunk allocation helpers
// ---------------------------------------------------------------------------

// Integer allocation of `total` proportional to `weights`. Floors first, then
// hands out the remainder by largest fractional part (lowest index on ties).
inline std::vector<int> largest_remainder_allocation(std::span<const double> weights, int total) {
    if (weights.empty()) throw PreconditionError("no weights");
    if (total < 0) throw PreconditionError("negative allocation total");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw PreconditionError("weights must be finite and non-negative");
        sum += w;
    }
    if (!(sum > 0.0)) throw PreconditionError("weights sum to zero");

    std::vector<int> alloc(weights.size());
    std::vector<double> frac(weights.size());
    int assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double quota = total * weights[i] / sum;
        alloc[i] = static_cast<int>(std::floor(quota));
        frac[i] = quota - alloc[i];
        assigned += alloc[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t j = 0; assigned < total; j = (j + 1) % order.size(), ++assigned) ++alloc[order[j]];
    return alloc;
}

// 1 / max(acc_y, 1 / (n_y + 2))
inline std::vector<double> inverse_accuracy_weights(std::span<const double> accuracy,
                                                    std::span<const std::size_t> class_counts) {
    if (accuracy.size() != class_counts.size()) throw DimensionMismatch("accuracy and counts differ in length");
    std::vector<double> w(accuracy.size());
    for (std::size_t y = 0; y < w.size(); ++y) {
        const double floor = 1.0 / (static_cast<double>(class_counts[y]) + 2.0);
        w[y] = 1.0 / std::max(accuracy[y], floor);
    }
    return w;
}

// r_y + 1
inline std::vector<double> redistricting_weights(std::span<const std::size_t> redistricted) {
    std::vector<double> w;
    for (std::size_t r : redistricted) w.push_back(static_cast<double>(r) + 1.0);
    return w;
}

// Per-class accuracy of the Parzen classifier under stratified f-fold cross
// validation. Fold membership is a seeded shuffle within each class.
inline std::vector<double> cross_validated_class_accuracy(const LabeledSet& data, int folds, const KernelConfig& kernel,
                                                          std::uint64_t seed) {
    if (folds < 2) throw PreconditionError("folds must be >= 2");
    const std::size_t C = data.num_classes();
    std::vector<int> fold_of(data.size(), 0);
    std::mt19937_64 rng(seed);
    for (ClassIndex y = 0; y < C; ++y) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data.label(i) == y) members.push_back(i);
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t j = 0; j < members.size(); ++j) fold_of[members[j]] = static_cast<int>(j % folds);
    }

    std::vector<std::size_t> correct(C, 0), total(C, 0);
    for (int f = 0; f < folds; ++f) {
        LabeledSet train(C, data.dimension());
        for (std::size_t i = 0; i < data.size(); ++i)
            if (fold_of[i] != f) train.add(data.features(i), data.label(i));
        if (train.empty()) continue;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (fold_of[i] != f) continue;
            const ClassIndex y = data.label(i);
            ++total[y];
            if (parzen_classify(data.features(i), train, kernel) == y) ++correct[y];
        }
    }
    std::vector<double> acc(C, 0.0);
    for (ClassIndex y = 0; y < C; ++y)
        acc[y] = total[y] > 0 ? static_cast<double>(correct[y]) / static_cast<double>(total[y]) : 0.0;
    return acc;
}

// Instances in [0, chunk_begin) whose Parzen prediction differs between the
// classifier trained on the first chunk_begin instances and the one trained
// on all of `data`, counted by true class.
inline std::vector<std::size_t> redistricted_counts(const LabeledSet& data, std::size_t chunk_begin,
                                                    const KernelConfig& kernel) {
    if (chunk_begin > data.size()) throw PreconditionError("chunk start beyond the labeled set");
    std::vector<std::size_t> r(data.num_classes(), 0);
    if (chunk_begin == 0) return r;
    const LabeledSet before = data.prefix(chunk_begin);
    for (std::size_t i = 0; i < chunk_begin; ++i) {
        const auto x = data.features(i);
        if (parzen_classify(x, before, kernel) != parzen_classify(x, data, kernel)) ++r[data.label(i)];
    }
    return r;
}

// ---------------------------------------------------------------------------
// Stateful strategies, one instance per trial
// ---------------------------------------------------------------------------

class Strategy {
public:
    virtual ~Strategy() = default;
    virtual std::string_view name() const = 0;
    virtual StrategyDecision select(const LabeledSet& data) = 0;
};

class PalAcsStrategy final : public Strategy {
public:
    PalAcsStrategy(std::size_t num_classes, PalAcsConfig cfg, std::uint64_t seed)
        : cfg_(cfg), model_(num_classes, GainConfig{cfg.local_budget_max}), seed_(seed) {
        cfg_.validate();
    }

    std::string_view name() const override { return "pal-acs"; }

    StrategyDecision select(const LabeledSet& data) override {
        return pal_acs_select(data, cfg_, model_, mix_seed(seed_, data.size()));
    }

private:
    PalAcsConfig cfg_;
    GainModel model_;
    std::uint64_t seed_;
};

class RandomStrategy final : public Strategy {
public:
    RandomStrategy(std::size_t num_classes, std::uint64_t seed) : num_classes_(num_classes), seed_(seed) {}

    std::string_view name() const override { return "random"; }

    StrategyDecision select(const LabeledSet& data) override {
        return random_select(num_classes_, mix_seed(seed_, data.size()));
    }

private:
    std::size_t num_classes_;
    std::uint64_t seed_;
};

// Shared machinery of the chunk-based baselines: at each chunk boundary an
// allocation for the next chunk_size acquisitions is computed, then served
// round robin over the classes with allocation left.
class ChunkedStrategy : public Strategy {
public:
    StrategyDecision select(const LabeledSet& data) override {
        if (auto y = cold_start_class(data, cold_start_threshold())) return {*y, std::nullopt};
        if (remaining_total_ == 0) start_chunk(data);

        for (std::size_t step = 0; step < remaining_.size(); ++step) {
            const ClassIndex y = (cursor_ + step) % remaining_.size();
            if (remaining_[y] > 0) {
                --remaining_[y];
                --remaining_total_;
                cursor_ = (y + 1) % remaining_.size();
                return {y, std::nullopt};
            }
        }
        throw ConsistencyError("chunk allocation exhausted unexpectedly");
    }

    const ChunkConfig& chunk_config() const noexcept { return chunk_; }
    // Allocation of every chunk started so far, oldest first.
    const std::vector<std::vector<int>>& allocations() const noexcept { return allocations_; }
    // Labeled-set size at which each chunk started.
    const std::vector<std::size_t>& boundaries() const noexcept { return boundaries_; }

protected:
    ChunkedStrategy(std::size_t num_classes, ChunkConfig chunk, KernelConfig kernel, std::uint64_t seed)
        : chunk_(chunk), kernel_(kernel), seed_(seed), remaining_(num_classes, 0) {
        chunk_.validate(num_classes);
        kernel_.validate();
    }

    virtual std::size_t cold_start_threshold() const = 0;
    // Allocation weights for the chunk starting now. `previous_boundary` is
    // where the chunk just completed began (0 for the first chunk).
    virtual std::vector<double> chunk_weights(const LabeledSet& data, std::size_t previous_boundary) = 0;

    const KernelConfig& kernel() const noexcept { return kernel_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    void start_chunk(const LabeledSet& data) {
        const std::size_t previous = boundaries_.empty() ? 0 : boundaries_.back();
        const auto weights = chunk_weights(data, previous);
        auto alloc = largest_remainder_allocation(weights, chunk_.chunk_size);
        remaining_ = alloc;
        remaining_total_ = chunk_.chunk_size;
        cursor_ = 0;
        allocations_.push_back(std::move(alloc));
        boundaries_.push_back(data.size());
    }

    ChunkConfig chunk_;
    KernelConfig kernel_;
    std::uint64_t seed_;
    std::vector<int> remaining_;
    int remaining_total_ = 0;
    ClassIndex cursor_ = 0;
    std::vector<std::vector<int>> allocations_;
    std::vector<std::size_t> boundaries_;
};

class InverseStrategy final : public ChunkedStrategy {
public:
    InverseStrategy(std::size_t num_classes, ChunkConfig chunk, KernelConfig kernel, std::uint64_t seed)
        : ChunkedStrategy(num_classes, chunk, kernel, seed) {}

    std::string_view name() const override { return "inverse"; }

protected:
    std::size_t cold_start_threshold() const override { return static_cast<std::size_t>(chunk_config().folds); }

    std::vector<double> chunk_weights(const LabeledSet& data, std::size_t) override {
        const auto acc = cross_validated_class_accuracy(data, chunk_config().folds, kernel(), mix_seed(seed(), data.size()));
        return inverse_accuracy_weights(acc, data.class_counts());
    }
};

class RedistrictingStrategy final : public ChunkedStrategy {
public:
    RedistrictingStrategy(std::size_t num_classes, ChunkConfig chunk, KernelConfig kernel, std::uint64_t seed)
        : ChunkedStrategy(num_classes, chunk, kernel, seed) {}

    std::string_view name() const override { return "redistricting"; }

    // Redistricted counts computed at the most recent chunk boundary.
    const std::vector<std::size_t>& last_redistricted() const noexcept { return last_redistricted_; }

protected:
    std::size_t cold_start_threshold() const override { return 1; }

    std::vector<double> chunk_weights(const LabeledSet& data, std::size_t previous_boundary) override {
        last_redistricted_ = redistricted_counts(data, previous_boundary, kernel());
        return redistricting_weights(last_redistricted_);
    }

private:
    std::vector<std::size_t> last_redistricted_;
};

}  // namespace palacs
