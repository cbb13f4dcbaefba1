#pragma once

// Gaussian similarity, kernel frequency estimates, the Parzen window
// classifier and sampling from per-class Gaussian kernel density estimates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "palacs/error.hpp"
#include "palacs/gain.hpp"

namespace palacs {

using FeatureVector = std::vector<double>;

struct KernelConfig {
    double bandwidth = 0.05;

    void validate() const {
        if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
            throw PreconditionError("kernel bandwidth must be positive");
    }
    // Factor f with sim(a, b) = exp(f * |a - b|^2).
    double exponent_factor() const { return -1.0 / (2.0 * bandwidth * bandwidth); }
};

// Ordered multiset of (features, class) pairs. Insertion order is kept.
class LabeledSet {
public:
    LabeledSet(std::size_t num_classes, std::size_t dimension)
        : num_classes_(num_classes), dimension_(dimension), class_counts_(num_classes, 0) {
        if (num_classes_ < 2) throw PreconditionError("need at least two classes");
        if (dimension_ == 0) throw PreconditionError("feature dimension must be positive");
    }

    void add(std::span<const double> x, ClassIndex y) {
        if (x.size() != dimension_) throw DimensionMismatch("instance has the wrong feature dimension");
        if (y >= num_classes_) throw PreconditionError("class index out of range");
        values_.insert(values_.end(), x.begin(), x.end());
        labels_.push_back(y);
        ++class_counts_[y];
    }

    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t dimension() const noexcept { return dimension_; }

    std::span<const double> features(std::size_t i) const {
        return std::span<const double>(values_).subspan(i * dimension_, dimension_);
    }
    ClassIndex label(std::size_t i) const { return labels_[i]; }
    std::size_t class_count(ClassIndex y) const { return class_counts_[y]; }
    std::span<const std::size_t> class_counts() const noexcept { return class_counts_; }

    // The first n instances, in order.
    LabeledSet prefix(std::size_t n) const {
        LabeledSet out(num_classes_, dimension_);
        for (std::size_t i = 0; i < std::min(n, size()); ++i) out.add(features(i), label(i));
        return out;
    }

private:
    std::size_t num_classes_;
    std::size_t dimension_;
    std::vector<double> values_;
    std::vector<ClassIndex> labels_;
    std::vector<std::size_t> class_counts_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionMismatch("feature vectors differ in dimension");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

inline double similarity(std::span<const double> a, std::span<const double> b, const KernelConfig& cfg) {
    cfg.validate();
    return std::exp(squared_distance(a, b) * cfg.exponent_factor());
}

// Per-class sums of similarities from x to the instances of each class.
// Accumulates in insertion order.
inline std::vector<double> kernel_frequency_values(std::span<const double> x, const LabeledSet& data,
                                                   const KernelConfig& cfg) {
    cfg.validate();
    if (x.size() != data.dimension()) throw DimensionMismatch("query has the wrong feature dimension");
    const double factor = cfg.exponent_factor();
    std::vector<double> k(data.num_classes(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        k[data.label(i)] += std::exp(squared_distance(x, data.features(i)) * factor);
    }
    return k;
}

inline LabelStats kernel_frequency(std::span<const double> x, const LabeledSet& data, const KernelConfig& cfg) {
    return LabelStats(kernel_frequency_values(x, data, cfg));
}

inline ClassIndex parzen_classify(std::span<const double> x, const LabeledSet& data, const KernelConfig& cfg) {
    if (data.empty()) throw PreconditionError("Parzen classifier needs a non-empty training set");
    return argmax_lowest(kernel_frequency_values(x, data, cfg));
}

// n_p draws from each class's Gaussian KDE, class 0 first. A draw picks a
// uniformly random instance of the class and adds N(0, bandwidth^2) noise to
// every feature. Draws are not clipped to the data range.
inline std::vector<FeatureVector> sample_pseudo_instances(const LabeledSet& data, int per_class,
                                                          const KernelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (per_class < 1) throw PreconditionError("pseudo instances per class must be >= 1");

    std::vector<std::vector<std::size_t>> members(data.num_classes());
    for (std::size_t i = 0; i < data.size(); ++i) members[data.label(i)].push_back(i);
    for (const auto& m : members) {
        if (m.empty()) throw PreconditionError("cannot sample pseudo instances for a class without instances");
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, cfg.bandwidth);
    std::vector<FeatureVector> out;
    out.reserve(members.size() * static_cast<std::size_t>(per_class));
    for (const auto& m : members) {
        std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
        for (int s = 0; s < per_class; ++s) {
            const auto center = data.features(m[pick(rng)]);
            FeatureVector x(center.begin(), center.end());
            for (double& v : x) v += noise(rng);
            out.push_back(std::move(x));
        }
    }
    return out;
}

}  // namespace palacs
