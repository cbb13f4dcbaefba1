#pragma once

// Multi-class probabilistic performance gain over real-valued label statistics.
//
// The true class posterior p in a neighborhood is unknown. Given label
// statistics k, p is modelled as Dirichlet(k + 1). Adding m hypothetical
// labels l (sum m) is multinomial given p. The expected accuracy after the
// labels arrive is
//
//   E_p E_l [ p_yhat ],   yhat = argmax(k + l)
//
// which has a closed form as a sum of Dirichlet cross moments. The gain is
// the best per-label improvement over up to M labels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "palacs/error.hpp"

namespace palacs {

// Zero-based class index. Ties in any argmax resolve to the lowest index.
using ClassIndex = std::size_t;

inline ClassIndex argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw PreconditionError("argmax of an empty vector");
    ClassIndex best = 0;
    for (ClassIndex i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

// Per-class kernel frequencies k.
class LabelStats {
public:
    explicit LabelStats(std::vector<double> counts) : counts_(std::move(counts)) {
        if (counts_.size() < 2) throw PreconditionError("label statistics need at least two classes");
        for (double c : counts_) {
            if (!(c >= 0.0) || !std::isfinite(c))
                throw DomainError("label statistics must be finite and non-negative");
        }
    }

    std::span<const double> counts() const noexcept { return counts_; }
    std::size_t num_classes() const noexcept { return counts_.size(); }
    double operator[](ClassIndex i) const { return counts_[i]; }

private:
    std::vector<double> counts_;
};

// Hypothetical integer label counts l with a fixed total m.
class LabelingVector {
public:
    explicit LabelingVector(std::vector<int> counts) : counts_(std::move(counts)) {
        for (int c : counts_) {
            if (c < 0) throw PreconditionError("labeling vector entries must be non-negative");
            total_ += c;
        }
    }

    std::span<const int> counts() const noexcept { return counts_; }
    std::size_t num_classes() const noexcept { return counts_.size(); }
    int total() const noexcept { return total_; }
    int operator[](ClassIndex i) const { return counts_[i]; }

    friend bool operator==(const LabelingVector&, const LabelingVector&) = default;

private:
    std::vector<int> counts_;
    int total_ = 0;
};

class DirichletParams {
public:
    explicit DirichletParams(std::vector<double> beta) : beta_(std::move(beta)) {
        if (beta_.empty()) throw DomainError("Dirichlet needs at least one parameter");
        for (double b : beta_) {
            if (!(b > 0.0) || !std::isfinite(b))
                throw DomainError("Dirichlet parameters must be finite and positive");
        }
    }

    // Posterior under a symmetric prior: beta_i = k_i + prior.
    static DirichletParams posterior(const LabelStats& k, double prior = 1.0) {
        std::vector<double> beta(k.counts().begin(), k.counts().end());
        for (double& b : beta) b += prior;
        return DirichletParams(std::move(beta));
    }

    std::span<const double> beta() const noexcept { return beta_; }
    std::size_t size() const noexcept { return beta_.size(); }

private:
    std::vector<double> beta_;
};

struct GainConfig {
    int local_budget_max = 3;

    void validate() const {
        if (local_budget_max < 1) throw PreconditionError("local budget M must be >= 1");
    }
};

// Values this far below zero are floating-point cancellation and clamp to 0.
inline constexpr double kGainClampTolerance = 1e-12;

// All compositions of m into num_classes non-negative parts, in descending
// lexicographic order: (m,0,..,0) first, (0,..,0,m) last.
inline std::vector<LabelingVector> enumerate_labeling_vectors(std::size_t num_classes, int m) {
    if (num_classes < 2) throw PreconditionError("need at least two classes");
    if (m < 0) throw PreconditionError("number of labels must be non-negative");

    std::vector<LabelingVector> out;
    std::vector<int> current(num_classes, 0);
    auto recurse = [&](auto&& self, std::size_t pos, int remaining) -> void {
        if (pos + 1 == num_classes) {
            current[pos] = remaining;
            out.emplace_back(current);
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            current[pos] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    recurse(recurse, 0, m);
    return out;
}

// E_{p ~ Dir(beta)}[ prod_i p_i^{l_i} * p_winner ], evaluated in log space.
inline double dirichlet_cross_moment(const DirichletParams& params, const LabelingVector& exponents,
                                     ClassIndex winner) {
    const auto beta = params.beta();
    if (exponents.num_classes() != beta.size())
        throw DimensionMismatch("labeling vector and Dirichlet parameters differ in length");
    if (winner >= beta.size()) throw PreconditionError("winner class out of range");

    double beta_sum = 0.0;
    double log_value = 0.0;
    int exponent_sum = 0;
    for (std::size_t i = 0; i < beta.size(); ++i) {
        const int a = exponents[i] + (i == winner ? 1 : 0);
        beta_sum += beta[i];
        exponent_sum += a;
        if (a > 0) log_value += std::lgamma(beta[i] + a) - std::lgamma(beta[i]);
    }
    log_value += std::lgamma(beta_sum) - std::lgamma(beta_sum + exponent_sum);
    return std::exp(log_value);
}

inline double log_multinomial_coefficient(const LabelingVector& l) {
    double v = std::lgamma(static_cast<double>(l.total()) + 1.0);
    for (int c : l.counts()) v -= std::lgamma(static_cast<double>(c) + 1.0);
    return v;
}

// Closed-form gain evaluator for a fixed class count and local budget.
// Labeling vectors are enumerated once; each evaluation needs only
// C * (M + 2) log-Gamma calls.
class GainModel {
public:
    GainModel(std::size_t num_classes, GainConfig cfg) : num_classes_(num_classes), cfg_(cfg) {
        cfg_.validate();
        if (num_classes_ < 2) throw PreconditionError("need at least two classes");
        terms_.resize(static_cast<std::size_t>(cfg_.local_budget_max) + 1);
        for (int m = 0; m <= cfg_.local_budget_max; ++m) {
            for (const auto& l : enumerate_labeling_vectors(num_classes_, m)) {
                Term t;
                t.log_coefficient = log_multinomial_coefficient(l);
                for (std::size_t i = 0; i < num_classes_; ++i) t.counts.push_back(l[i]);
                terms_[static_cast<std::size_t>(m)].push_back(std::move(t));
            }
        }
    }

    std::size_t num_classes() const noexcept { return num_classes_; }
    const GainConfig& config() const noexcept { return cfg_; }

    // Expected accuracy for m in [0, M].
    double expected_performance(std::span<const double> k, int m) const {
        check(k);
        if (m < 0 || m > cfg_.local_budget_max) throw PreconditionError("m outside [0, M]");
        const LogGammaTable table(k, m + 1);
        return evaluate(k, m, table);
    }

    double perf_gain(std::span<const double> k) const {
        check(k);
        const LogGammaTable table(k, cfg_.local_budget_max + 1);
        const double base = evaluate(k, 0, table);
        double best = -std::numeric_limits<double>::infinity();
        for (int m = 1; m <= cfg_.local_budget_max; ++m) {
            best = std::max(best, (evaluate(k, m, table) - base) / m);
        }
        if (best < 0.0) {
            if (best < -kGainClampTolerance)
                throw ConsistencyError("negative performance gain " + std::to_string(best));
            best = 0.0;
        }
        return best;
    }

private:
    struct Term {
        double log_coefficient = 0.0;
        std::vector<int> counts;
    };

    // lgamma(beta_i + j) for j in [0, max_shift], plus the same for sum(beta).
    struct LogGammaTable {
        LogGammaTable(std::span<const double> k, int max_shift) : stride(static_cast<std::size_t>(max_shift) + 1) {
            values.resize(k.size() * stride);
            double beta_sum = 0.0;
            for (std::size_t i = 0; i < k.size(); ++i) {
                const double beta = k[i] + 1.0;
                beta_sum += beta;
                for (std::size_t j = 0; j < stride; ++j) values[i * stride + j] = std::lgamma(beta + static_cast<double>(j));
            }
            for (std::size_t j = 0; j < stride; ++j) sum_values.push_back(std::lgamma(beta_sum + static_cast<double>(j)));
        }
        double at(std::size_t cls, int shift) const { return values[cls * stride + static_cast<std::size_t>(shift)]; }

        std::size_t stride;
        std::vector<double> values;
        std::vector<double> sum_values;
    };

    void check(std::span<const double> k) const {
        if (k.size() != num_classes_) throw DimensionMismatch("label statistics have the wrong number of classes");
        for (double c : k) {
            if (!(c >= 0.0) || !std::isfinite(c))
                throw DomainError("label statistics must be finite and non-negative");
        }
    }

    double evaluate(std::span<const double> k, int m, const LogGammaTable& table) const {
        const double log_normalizer = table.sum_values[0] - table.sum_values[static_cast<std::size_t>(m) + 1];
        double total = 0.0;
        for (const Term& t : terms_[static_cast<std::size_t>(m)]) {
            ClassIndex winner = 0;
            double best = k[0] + t.counts[0];
            for (std::size_t i = 1; i < num_classes_; ++i) {
                const double v = k[i] + t.counts[i];
                if (v > best) {
                    best = v;
                    winner = i;
                }
            }
            double log_term = t.log_coefficient + log_normalizer;
            for (std::size_t i = 0; i < num_classes_; ++i) {
                const int a = t.counts[i] + (i == winner ? 1 : 0);
                if (a > 0) log_term += table.at(i, a) - table.at(i, 0);
            }
            total += std::exp(log_term);
        }
        return total;
    }

    std::size_t num_classes_;
    GainConfig cfg_;
    std::vector<std::vector<Term>> terms_;
};

inline double expected_performance(const LabelStats& k, int m) {
    if (m < 0) throw PreconditionError("number of labels must be non-negative");
    const auto beta = DirichletParams::posterior(k);
    std::vector<double> shifted(k.num_classes());
    double total = 0.0;
    for (const auto& l : enumerate_labeling_vectors(k.num_classes(), m)) {
        for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] = k[i] + l[i];
        const ClassIndex winner = argmax_lowest(shifted);
        total += std::exp(log_multinomial_coefficient(l)) * dirichlet_cross_moment(beta, l, winner);
    }
    return total;
}

inline double perf_gain(const LabelStats& k, const GainConfig& cfg) {
    return GainModel(k.num_classes(), cfg).perf_gain(k.counts());
}

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

inline constexpr std::int64_t kMinOracleSamples = 100000;

// Sampling estimate of expected_performance(k, m) for every m in [0, max_m],
// sharing one set of posterior draws. Each draw p ~ Dir(k + 1) contributes
// sum_l Mult(l | m, p) * p_{argmax(k + l)}.
inline std::vector<MonteCarloEstimate> monte_carlo_oracle_curve(const LabelStats& k, int max_m,
                                                                std::int64_t samples, std::uint64_t seed) {
    if (samples < kMinOracleSamples) throw PreconditionError("oracle needs at least 1e5 samples");
    if (max_m < 0) throw PreconditionError("number of labels must be non-negative");

    const std::size_t C = k.num_classes();
    struct Term {
        double coefficient;
        std::vector<std::pair<std::size_t, int>> powers;
        ClassIndex winner;
    };
    std::vector<std::vector<Term>> terms(static_cast<std::size_t>(max_m) + 1);
    for (int m = 0; m <= max_m; ++m) {
        for (const auto& l : enumerate_labeling_vectors(C, m)) {
            Term t{1.0, {}, 0};
            // m! / prod l_i! as an exact running product
            int n = 0;
            for (std::size_t i = 0; i < C; ++i) {
                for (int j = 1; j <= l[i]; ++j) {
                    ++n;
                    t.coefficient = t.coefficient * n / j;
                }
                if (l[i] > 0) t.powers.emplace_back(i, l[i]);
            }
            std::vector<double> shifted(C);
            for (std::size_t i = 0; i < C; ++i) shifted[i] = k[i] + l[i];
            t.winner = argmax_lowest(shifted);
            terms[static_cast<std::size_t>(m)].push_back(std::move(t));
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<std::gamma_distribution<double>> gammas;
    for (std::size_t i = 0; i < C; ++i) gammas.emplace_back(k[i] + 1.0, 1.0);

    const std::size_t stride = static_cast<std::size_t>(max_m) + 1;
    std::vector<double> p(C), powers(C * stride);
    std::vector<double> sum(stride, 0.0), sum_sq(stride, 0.0);
    for (std::int64_t s = 0; s < samples; ++s) {
        double norm = 0.0;
        for (std::size_t i = 0; i < C; ++i) {
            p[i] = gammas[i](rng);
            norm += p[i];
        }
        for (std::size_t i = 0; i < C; ++i) {
            p[i] /= norm;
            double pw = 1.0;
            for (std::size_t j = 0; j < stride; ++j) {
                powers[i * stride + j] = pw;
                pw *= p[i];
            }
        }
        for (std::size_t m = 0; m < stride; ++m) {
            double value = 0.0;
            for (const Term& t : terms[m]) {
                double prob = t.coefficient;
                for (const auto& [cls, e] : t.powers) prob *= powers[cls * stride + static_cast<std::size_t>(e)];
                value += prob * p[t.winner];
            }
            sum[m] += value;
            sum_sq[m] += value * value;
        }
    }

    std::vector<MonteCarloEstimate> out(stride);
    const double n = static_cast<double>(samples);
    for (std::size_t m = 0; m < stride; ++m) {
        const double mean = sum[m] / n;
        const double var = std::max(0.0, sum_sq[m] / n - mean * mean);
        out[m] = {mean, std::sqrt(var / (n - 1.0))};
    }
    return out;
}

inline double monte_carlo_oracle(const LabelStats& k, int m, std::int64_t samples, std::uint64_t seed) {
    return monte_carlo_oracle_curve(k, m, samples, seed).back().mean;
}

}  // namespace palacs
