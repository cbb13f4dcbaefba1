#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "palacs/kernel.hpp"

using namespace palacs;

namespace {

const KernelConfig kSigma{0.05};

LabeledSet make_set(std::size_t C, const std::vector<std::pair<FeatureVector, ClassIndex>>& items) {
    LabeledSet s(C, items.empty() ? 2 : items.front().first.size());
    for (const auto& [x, y] : items) s.add(x, y);
    return s;
}

}  // namespace

TEST(Similarity, IdenticalPointsGiveOne) {
    const FeatureVector a{0.3, 0.7};
    EXPECT_EQ(similarity(a, a, kSigma), 1.0);
    EXPECT_EQ(similarity(a, a, KernelConfig{3.0}), 1.0);
}

TEST(Similarity, DistanceOneTenth) {
    EXPECT_NEAR(similarity(FeatureVector{0.0, 0.0}, FeatureVector{0.1, 0.0}, kSigma), std::exp(-2.0), 1e-12);
    EXPECT_NEAR(std::exp(-2.0), 0.13534, 1e-5);
}

TEST(Similarity, FarFieldUnderflowsQuietly) {
    const double s = similarity(FeatureVector{0.0}, FeatureVector{1.0}, kSigma);
    EXPECT_GE(s, 0.0);
    EXPECT_LT(s, 1e-80);
    EXPECT_NEAR(s, std::exp(-200.0), 1e-95);
}

TEST(Similarity, DimensionMismatchThrows) {
    EXPECT_THROW(similarity(FeatureVector{0.0}, FeatureVector{0.0, 1.0}, kSigma), DimensionMismatch);
}

TEST(Similarity, IncreasesWithBandwidth) {
    const FeatureVector a{0.2, 0.4}, b{0.25, 0.3};
    double prev = 0.0;
    for (double s : {0.01, 0.02, 0.05, 0.1, 0.5, 1.0}) {
        const double v = similarity(a, b, KernelConfig{s});
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(KernelConfig, RejectsNonPositiveBandwidth) {
    EXPECT_THROW(KernelConfig{0.0}.validate(), PreconditionError);
    EXPECT_THROW(KernelConfig{-0.1}.validate(), PreconditionError);
}

TEST(KernelFrequency, EmptySet) {
    const LabeledSet empty(3, 2);
    const auto k = kernel_frequency(FeatureVector{0.5, 0.5}, empty, kSigma);
    ASSERT_EQ(k.num_classes(), 3u);
    for (double v : k.counts()) EXPECT_EQ(v, 0.0);
}

TEST(KernelFrequency, SingleInstanceAtQuery) {
    const FeatureVector x{0.4, 0.6};
    const auto k = kernel_frequency_values(x, make_set(2, {{x, 0}}), kSigma);
    EXPECT_EQ(k, (std::vector<double>{1.0, 0.0}));
}

TEST(KernelFrequency, TwoInstancesAtDistanceOneTenth) {
    const FeatureVector x{0.5, 0.5};
    const auto data = make_set(2, {{{0.6, 0.5}, 1}, {{0.5, 0.4}, 1}});
    const auto k = kernel_frequency_values(x, data, kSigma);
    EXPECT_EQ(k[0], 0.0);
    EXPECT_NEAR(k[1], 2.0 * std::exp(-2.0), 1e-12);
    EXPECT_NEAR(k[1], 0.27067, 1e-5);
}

TEST(KernelFrequency, DimensionMismatchThrows) {
    const auto data = make_set(2, {{{0.6, 0.5}, 1}});
    EXPECT_THROW(kernel_frequency_values(FeatureVector{0.5}, data, kSigma), DimensionMismatch);
}

TEST(KernelFrequency, AdditiveOverDisjointSets) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<ClassIndex> cls(0, 2);
    for (int rep = 0; rep < 50; ++rep) {
        LabeledSet a(3, 2), b(3, 2), both(3, 2);
        for (int i = 0; i < 20; ++i) {
            const FeatureVector x{u(rng), u(rng)};
            const ClassIndex y = cls(rng);
            (i % 2 ? a : b).add(x, y);
        }
        for (std::size_t i = 0; i < a.size(); ++i) both.add(a.features(i), a.label(i));
        for (std::size_t i = 0; i < b.size(); ++i) both.add(b.features(i), b.label(i));
        const FeatureVector q{u(rng), u(rng)};
        const KernelConfig wide{0.2};
        const auto ka = kernel_frequency_values(q, a, wide);
        const auto kb = kernel_frequency_values(q, b, wide);
        const auto kab = kernel_frequency_values(q, both, wide);
        for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(kab[y], ka[y] + kb[y], 1e-12);
    }
}

TEST(ParzenClassify, SingleInstance) {
    const FeatureVector x{0.1, 0.9};
    EXPECT_EQ(parzen_classify(x, make_set(3, {{x, 2}}), kSigma), 2u);
}

TEST(ParzenClassify, TieGoesToLowestIndex) {
    // Both training points sit 0.25 from the query, an exact tie.
    const auto data = make_set(2, {{{0.75}, 1}, {{0.25}, 0}});
    EXPECT_EQ(parzen_classify(FeatureVector{0.5}, data, KernelConfig{0.3}), 0u);
    const auto swapped = make_set(2, {{{0.25}, 1}, {{0.75}, 0}});
    EXPECT_EQ(parzen_classify(FeatureVector{0.5}, swapped, KernelConfig{0.3}), 0u);
}

TEST(ParzenClassify, DenseClusterOutweighsCloserSingleton) {
    // Query at 0. Class 0: one point at 0.05 -> exp(-0.5) = 0.6065.
    // Class 1: five points at 0.08 -> 5 exp(-1.28) = 1.3899.
    const auto data = make_set(2, {{{0.05}, 0}, {{0.08}, 1}, {{-0.08}, 1}, {{0.08}, 1}, {{-0.08}, 1}, {{0.08}, 1}});
    const auto k = kernel_frequency_values(FeatureVector{0.0}, data, kSigma);
    EXPECT_NEAR(k[0], std::exp(-0.5), 1e-12);
    EXPECT_NEAR(k[1], 5.0 * std::exp(-1.28), 1e-12);
    EXPECT_EQ(parzen_classify(FeatureVector{0.0}, data, kSigma), 1u);
}

TEST(ParzenClassify, EmptyTrainingSetThrows) {
    EXPECT_THROW(parzen_classify(FeatureVector{0.5, 0.5}, LabeledSet(2, 2), kSigma), PreconditionError);
}

TEST(ParzenClassify, ZeroTrainingErrorOnSeparatedClusters) {
    // Cluster centers 0.6 = 12 sigma apart, spread 0.01.
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 0.01);
    const std::vector<FeatureVector> centers{{0.1, 0.1}, {0.7, 0.1}, {0.1, 0.7}, {0.7, 0.7}};
    LabeledSet data(4, 2);
    for (ClassIndex y = 0; y < 4; ++y)
        for (int i = 0; i < 15; ++i) data.add(FeatureVector{centers[y][0] + n(rng), centers[y][1] + n(rng)}, y);
    for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(parzen_classify(data.features(i), data, kSigma), data.label(i));
}

TEST(SamplePseudoInstances, CountPerClass) {
    LabeledSet data(3, 2);
    data.add(FeatureVector{0.1, 0.1}, 0);
    data.add(FeatureVector{0.5, 0.5}, 1);
    data.add(FeatureVector{0.52, 0.5}, 1);
    data.add(FeatureVector{0.9, 0.9}, 2);
    const auto pseudo = sample_pseudo_instances(data, 25, kSigma, 1);
    ASSERT_EQ(pseudo.size(), 75u);
    // class blocks come in order; each sits near its own class
    for (std::size_t i = 0; i < 25; ++i) EXPECT_LT(std::abs(pseudo[i][0] - 0.1), 0.3);
    for (std::size_t i = 50; i < 75; ++i) EXPECT_LT(std::abs(pseudo[i][0] - 0.9), 0.3);
}

TEST(SamplePseudoInstances, DegenerateKernelReproducesInstances) {
    LabeledSet data(2, 2);
    data.add(FeatureVector{0.2, 0.3}, 0);
    data.add(FeatureVector{0.8, 0.6}, 1);
    const auto pseudo = sample_pseudo_instances(data, 1, KernelConfig{1e-9}, 5);
    ASSERT_EQ(pseudo.size(), 2u);
    EXPECT_NEAR(pseudo[0][0], 0.2, 1e-6);
    EXPECT_NEAR(pseudo[0][1], 0.3, 1e-6);
    EXPECT_NEAR(pseudo[1][0], 0.8, 1e-6);
    EXPECT_NEAR(pseudo[1][1], 0.6, 1e-6);
}

TEST(SamplePseudoInstances, DeterministicGivenSeed) {
    LabeledSet data(2, 2);
    data.add(FeatureVector{0.2, 0.3}, 0);
    data.add(FeatureVector{0.8, 0.6}, 1);
    data.add(FeatureVector{0.7, 0.6}, 1);
    EXPECT_EQ(sample_pseudo_instances(data, 25, kSigma, 42), sample_pseudo_instances(data, 25, kSigma, 42));
    EXPECT_NE(sample_pseudo_instances(data, 25, kSigma, 42), sample_pseudo_instances(data, 25, kSigma, 43));
}

TEST(SamplePseudoInstances, MeanConvergesToClassMean) {
    LabeledSet data(2, 2);
    const std::vector<FeatureVector> class0{{0.19, 0.2}, {0.21, 0.25}, {0.2, 0.6}};
    for (const auto& x : class0) data.add(x, 0);
    data.add(FeatureVector{0.9, 0.9}, 1);
    const double expected[2] = {0.2, 0.35};

    const int n_p = 25, repeats = 1000;
    double sum[2] = {0.0, 0.0};
    for (int r = 0; r < repeats; ++r) {
        const auto pseudo = sample_pseudo_instances(data, n_p, kSigma, static_cast<std::uint64_t>(r));
        for (int i = 0; i < n_p; ++i) {
            sum[0] += pseudo[static_cast<std::size_t>(i)][0];
            sum[1] += pseudo[static_cast<std::size_t>(i)][1];
        }
    }
    const double tol = 4.0 * kSigma.bandwidth / std::sqrt(static_cast<double>(n_p * repeats));
    EXPECT_NEAR(sum[0] / (n_p * repeats), expected[0], tol);
    // The first coordinate's centers nearly coincide, so the kernel noise
    // dominates. The second has a wide center spread, which adds to the
    // sampling variance and widens its bound accordingly.
    const double spread = std::sqrt(kSigma.bandwidth * kSigma.bandwidth + (0.0225 + 0.01 + 0.0625) / 3.0);
    EXPECT_NEAR(sum[1] / (n_p * repeats), expected[1], 4.0 * spread / std::sqrt(static_cast<double>(n_p * repeats)));
}

TEST(SamplePseudoInstances, EmptyClassThrows) {
    LabeledSet data(3, 2);
    data.add(FeatureVector{0.2, 0.3}, 0);
    data.add(FeatureVector{0.8, 0.6}, 1);
    EXPECT_THROW(sample_pseudo_instances(data, 25, kSigma, 1), PreconditionError);
}

TEST(LabeledSet, PreservesOrderAndCounts) {
    LabeledSet s(3, 1);
    s.add(FeatureVector{0.1}, 2);
    s.add(FeatureVector{0.2}, 0);
    s.add(FeatureVector{0.3}, 2);
    EXPECT_EQ(s.size(), 3u);
    EXPECT_EQ(s.label(0), 2u);
    EXPECT_EQ(s.features(1)[0], 0.2);
    EXPECT_EQ(s.class_count(2), 2u);
    EXPECT_EQ(s.class_count(1), 0u);
    const auto p = s.prefix(2);
    EXPECT_EQ(p.size(), 2u);
    EXPECT_EQ(p.class_count(2), 1u);
    EXPECT_THROW(s.add(FeatureVector{0.1}, 3), PreconditionError);
    EXPECT_THROW(s.add(FeatureVector{0.1, 0.2}, 0), DimensionMismatch);
}
