#include "apara/calibration.hpp"
#include "apara/problems.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace {

using namespace apara;

TEST(Isotonic, PoolsViolatorsAndPreservesMonotone) {
    std::vector<double> mono = {1.0, 2.0, 3.0};
    EXPECT_EQ(detail::isotonic_nondecreasing(mono), mono);
    auto fixed = detail::isotonic_nondecreasing({1.0, 4.0, 2.0, 8.0});
    for (std::size_t i = 1; i < fixed.size(); ++i) EXPECT_GE(fixed[i], fixed[i - 1] * (1 - 1e-12));
    // pooled block keeps the log-mean of the violators
    EXPECT_NEAR(fixed[1], std::sqrt(8.0), 1e-12);
    EXPECT_NEAR(fixed[2], std::sqrt(8.0), 1e-12);
}

struct LinearChart : ::testing::Test {
    OdeSystem sys = make_linear_decay(-1.0, 1.0);
    double T = 4.0;
    TimePartition grid = TimePartition::uniform(4.0, 8);
    std::vector<Vec> ref = reference_solve(sys, 4.0, grid);
};

TEST_F(LinearChart, EpsIsMonotoneAcrossTolerances) {
    auto chart = build_chart(sys, Method::ExplicitRk54, T,
                             {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9}, grid, ref);
    const auto& eps = chart.eps_samples();
    ASSERT_GE(eps.size(), 4u);
    for (std::size_t i = 1; i < eps.size(); ++i) EXPECT_GE(eps[i], eps[i - 1] * (1 - 1e-12));
}

TEST_F(LinearChart, DuplicateTolerancesCollapse) {
    auto chart = build_chart(sys, Method::ExplicitRk54, T, {1e-3, 1e-4, 1e-4, 1e-5, 1e-6, 1e-7},
                             grid, ref);
    EXPECT_EQ(chart.tol_samples().size(), 5u);
}

TEST_F(LinearChart, TooFewTolerancesRejected) {
    EXPECT_THROW(build_chart(sys, Method::ExplicitRk54, T, {1e-3, 1e-4, 1e-5}, grid, ref),
                 std::invalid_argument);
    EXPECT_THROW(build_chart(sys, Method::ExplicitRk54, T, {1e-3, 1e-4, 1e-4, 1e-5}, grid, ref),
                 std::invalid_argument);  // four entries but only three distinct
}

TEST_F(LinearChart, QueryClampsAndRoundTrips) {
    auto chart = build_chart(sys, Method::ExplicitRk54, T,
                             {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9}, grid, ref);
    const auto& tol = chart.tol_samples();
    const auto& eps = chart.eps_samples();

    // round trip at every sample within interpolation error (factor 1.5);
    // samples pooled into a tie share one accuracy level, so compare against
    // the loosest tolerance of the tie (the query's cheapest valid answer)
    for (std::size_t i = 0; i < tol.size(); ++i) {
        const double t = tol_for_accuracy(chart, eps[i]);
        std::size_t j = i;
        while (j + 1 < tol.size() && eps[j + 1] == eps[i]) ++j;
        const double factor = std::max(t / tol[j], tol[j] / t);
        EXPECT_LE(factor, 1.5) << "sample " << i;
        // and the returned tolerance achieves the requested accuracy
        const double back = chart.eps_for_tol(t);
        EXPECT_LE(std::max(back / eps[i], eps[i] / back), 1.5) << "sample " << i;
    }
    // clamping above the loosest and below the tightest accuracy
    bool clamped = false;
    EXPECT_DOUBLE_EQ(tol_for_accuracy(chart, eps.back() * 100.0, &clamped), tol.back());
    EXPECT_TRUE(clamped);
    EXPECT_DOUBLE_EQ(tol_for_accuracy(chart, eps.front() / 100.0, &clamped), tol.front());
    EXPECT_TRUE(clamped);
    EXPECT_THROW(tol_for_accuracy(chart, 0.0), std::invalid_argument);
}

TEST_F(LinearChart, QueryIsMonotoneInAccuracy) {
    auto chart = build_chart(sys, Method::ExplicitRk54, T,
                             {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9}, grid, ref);
    double prev = 0.0;
    for (double z = chart.eps_samples().front(); z <= chart.eps_samples().back(); z *= 1.7) {
        const double t = tol_for_accuracy(chart, z);
        EXPECT_GE(t, prev * (1 - 1e-10));
        prev = t;
    }
}

TEST_F(LinearChart, SaveLoadRoundTrip) {
    auto chart = build_chart(sys, Method::ExplicitRk54, T,
                             {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}, grid, ref);
    auto path = std::filesystem::temp_directory_path() / "apara_test_chart.txt";
    save_chart(chart, path);
    auto loaded = load_chart(path);
    EXPECT_EQ(loaded.system_id(), chart.system_id());
    EXPECT_EQ(loaded.method_id(), chart.method_id());
    EXPECT_EQ(loaded.horizon(), chart.horizon());
    ASSERT_EQ(loaded.tol_samples().size(), chart.tol_samples().size());
    for (std::size_t i = 0; i < chart.tol_samples().size(); ++i) {
        EXPECT_EQ(loaded.tol_samples()[i], chart.tol_samples()[i]);
        EXPECT_EQ(loaded.eps_samples()[i], chart.eps_samples()[i]);
    }
    std::filesystem::remove(path);
}

TEST(BrusselatorChart, AccuracyRangeSpansOrders) {
    auto sys = make_brusselator();
    const double T = 20.0;
    auto grid = TimePartition::uniform(T, 20);
    auto ref = reference_solve(sys, T, grid);
    auto chart = build_chart(sys, Method::RadauIia5, T,
                             {1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12}, grid, ref);
    const auto& eps = chart.eps_samples();
    EXPECT_GE(eps.back() / eps.front(), 1e4);  // achieved accuracies span several orders
    EXPECT_LT(eps.front(), 1e-9);
    EXPECT_GT(eps.back(), 1e-6);
}

TEST(BrusselatorChart, EpsForTolInterpolatesBetweenSamples) {
    auto sys = make_linear_decay(-1.0, 1.0);
    auto grid = TimePartition::uniform(2.0, 4);
    auto ref = reference_solve(sys, 2.0, grid);
    auto chart =
        build_chart(sys, Method::ExplicitRk54, 2.0, {1e-3, 1e-5, 1e-7, 1e-9}, grid, ref);
    const double mid = chart.eps_for_tol(1e-4);
    EXPECT_GT(mid, chart.eps_samples()[0] * 0.99 * 0.0 + chart.eps_for_tol(1e-5));
    EXPECT_LT(mid, chart.eps_for_tol(1e-3));
    // clamped outside the sampled range
    EXPECT_DOUBLE_EQ(chart.eps_for_tol(1e-12), chart.eps_samples().front());
    EXPECT_DOUBLE_EQ(chart.eps_for_tol(1.0), chart.eps_samples().back());
}

}  // namespace
