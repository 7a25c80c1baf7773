#include <gtest/gtest.h>

#include <cmath>

#include "dbalign/exponents.hpp"
#include "dbalign/rng.hpp"
#include "dbalign/spectral.hpp"
#include "oracles.hpp"

using namespace dbalign;

namespace {

// Random symmetric joint with strictly positive cells.
DiscreteJointModel random_model(std::size_t m, Stream& rng) {
    std::vector<double> j(m * m);
    double total = 0.0;
    for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = x; y < m; ++y) {
            const double v = 0.05 + rng.uniform();
            j[x * m + y] = j[y * m + x] = v;
            total += x == y ? v : 2 * v;
        }
    for (auto& v : j) v /= total;
    // Force exact symmetry after normalization.
    for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = 0; y < x; ++y) j[x * m + y] = j[y * m + x];
    double s = 0.0;
    for (double v : j) s += v;
    j[0] += 1.0 - s;
    return DiscreteJointModel::from_joint(m, j);
}

}  // namespace

TEST(Eigenvalues, LeadingIsOne) {
    Stream rng(StreamId{1, Purpose::test_harness, 0});
    for (int t = 0; t < 50; ++t) {
        const auto model = random_model(2 + t % 5, rng);
        const auto p = eigenvalues(model);
        EXPECT_NEAR(p.eigenvalues().front(), 1.0, 1e-10);
        for (double v : p.eigenvalues()) EXPECT_LE(std::abs(v), 1.0 + 1e-10);
    }
}

TEST(Eigenvalues, BernoulliClosedForm) {
    for (double tau : {0.1, 0.3, 0.5, 0.7, 0.9})
        for (double p : {0.2, 0.4, 0.6, 0.8}) {
            const auto prof = eigenvalues(make_bernoulli(tau, p));
            ASSERT_EQ(prof.eigenvalues().size(), 2u);
            EXPECT_NEAR(prof.eigenvalues()[0], 1.0, 1e-12);
            EXPECT_NEAR(prof.eigenvalues()[1], tau * (1 - p) / (1 - tau * p), 1e-12);
        }
}

TEST(Eigenvalues, TraceIdentity) {
    Stream rng(StreamId{2, Purpose::test_harness, 0});
    for (int t = 0; t < 20; ++t) {
        const auto model = random_model(3 + t % 3, rng);
        const auto p = eigenvalues(model);
        double direct = 0.0;
        const auto q = model.marginal();
        for (std::size_t x = 0; x < model.alphabet_size(); ++x)
            for (std::size_t y = 0; y < model.alphabet_size(); ++y)
                direct += q[x] * q[y] * std::exp(2 * model.llr(x, y));
        EXPECT_NEAR(p.power_sum(1), direct, 1e-8);
        EXPECT_NEAR(p.power_sum(1), std::exp(psi_q(model, 2.0)), 1e-8);
    }
}

TEST(Eigenvalues, IndependentModel) {
    const auto p = eigenvalues(DiscreteJointModel::from_joint(2, {0.25, 0.25, 0.25, 0.25}));
    EXPECT_NEAR(p.eigenvalues()[1], 0.0, 1e-12);
    EXPECT_NEAR(weak_lb_statistic(p), 0.0, 1e-12);
    EXPECT_THROW(eigenvalues(DiscreteJointModel::from_joint(2, {1.0, 0.0, 0.0, 0.0})), DegenerateModelError);
}

TEST(GaussianProfile, PowersOfRho) {
    const auto p = gaussian_profile(0.5);
    for (std::size_t l = 0; l < p.eigenvalues().size(); ++l) EXPECT_EQ(p.eigenvalues()[l], std::pow(0.5, l));
    EXPECT_LT(std::abs(p.eigenvalues().back()), 1e-12);
    EXPECT_GE(std::abs(p.eigenvalues()[p.eigenvalues().size() - 2]), 1e-12);
}

TEST(GaussianProfile, SumOfSquaresMatchesPsi) {
    for (double rho : {-0.9, -0.5, 0.1, 0.3, 0.6, 0.9}) {
        const auto p = gaussian_profile(rho);
        EXPECT_NEAR(p.power_sum(1), 1.0 / (1 - rho * rho), 1e-12);
        EXPECT_NEAR(p.power_sum(1), std::exp(psi_q(GaussianModel::make(rho), 2.0)), 1e-8);
        EXPECT_NEAR(p.power_sum(3), 1.0 / (1 - std::pow(rho, 6)), 1e-12);
    }
}

TEST(WeakStatistic, GaussianSeries) {
    const double rho = 0.6;
    double direct = 0.0;
    for (int l = 1; l < 200; ++l) {
        const double r = std::pow(rho * rho, l);
        direct += r / (1 - r);
    }
    const auto p = gaussian_profile(rho);
    EXPECT_NEAR(weak_lb_statistic(p), direct, 1e-12);
    EXPECT_LT(weak_lb_tail_bound(p), p.truncation_tol());
    EXPECT_DOUBLE_EQ(weak_lb_statistic(gaussian_profile(-rho)), weak_lb_statistic(p));
}

TEST(StrongThreshold, GaussianRhoTenth) {
    EXPECT_NEAR(strong_lb_fixed_d_threshold(gaussian_profile(0.1)), 458.2, 0.05);
    EXPECT_NEAR(strong_lb_fixed_d_threshold(gaussian_profile(0.1)), std::log(0.01) / std::log(0.99), 1e-9);
}

TEST(StrongThreshold, IndependentUndefined) {
    EXPECT_THROW(strong_lb_fixed_d_threshold(SpectralProfile::from_values({1.0, 0.0})), DomainError);
}

TEST(CycleTypes, ProbabilitiesAndExpectedCounts) {
    const int partitions[] = {1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42};
    for (int n = 1; n <= 10; ++n) {
        const auto types = cycle_types(n);
        EXPECT_EQ(static_cast<int>(types.size()), partitions[n]);
        double total = 0.0;
        std::vector<double> expected(n + 1, 0.0);
        for (const auto& t : types) {
            int size = 0;
            for (const auto& [k, num] : t.counts) size += k * num;
            EXPECT_EQ(size, n);
            total += t.probability;
            for (int k = 1; k <= n; ++k) expected[k] += t.probability * t.count(k);
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        for (int k = 1; k <= n; ++k) EXPECT_NEAR(expected[k], 1.0 / k, 1e-12);
    }
}

TEST(CycleTypes, Capacity) {
    EXPECT_THROW(cycle_types(61), CapacityError);
    EXPECT_THROW(cycle_types(0), CapacityError);
}

TEST(SecondMoment, WorkedExamples) {
    const auto p = SpectralProfile::from_values({1.0, 0.5});
    EXPECT_NEAR(second_moment_exact(p, 2, 1), 1.3125, 1e-12);
    for (int d : {1, 2, 5}) EXPECT_NEAR(second_moment_exact(p, 1, d), std::pow(1.25, d), 1e-12);
    EXPECT_DOUBLE_EQ(second_moment_exact(SpectralProfile::from_values({1.0, 0.0}), 7, 3), 1.0);
}

TEST(SecondMoment, MatchesCycleIndexRecurrence) {
    Stream rng(StreamId{3, Purpose::test_harness, 0});
    for (int t = 0; t < 20; ++t) {
        const auto model = random_model(2 + t % 4, rng);
        const auto p = eigenvalues(model);
        for (int n : {1, 3, 8, 20, 40})
            for (int d : {1, 3}) {
                const double exact = second_moment_exact(p, n, d);
                EXPECT_NEAR(exact, oracle::cycle_index_moment(p.eigenvalues(), n, d), 1e-9 * exact);
            }
    }
}

TEST(SecondMoment, MatchesDatabaseEnumeration) {
    for (const auto& model : {make_bernoulli(0.5, 0.5), DiscreteJointModel::from_joint(2, {0.4, 0.1, 0.1, 0.4})})
        for (int n : {2, 3})
            for (int d : {1, 2}) {
                const double exact = second_moment_exact(eigenvalues(model), n, d);
                EXPECT_NEAR(exact, oracle::second_moment_bruteforce(model, n, d), 1e-9);
            }
}

TEST(SecondMoment, OverflowGivesInfinity) {
    const auto p = SpectralProfile::from_values({1.0, 0.999});
    EXPECT_TRUE(std::isinf(second_moment_exact(p, 60, 100000)));
    EXPECT_DOUBLE_EQ(risk_lower_bound_from_moment(std::numeric_limits<double>::infinity()), 0.0);
}

TEST(PoissonSurrogate, ClosedFormAndLimit) {
    const auto p = SpectralProfile::from_values({1.0, 0.5});
    EXPECT_NEAR(poisson_surrogate_moment(p, 1, 1), std::exp(0.25), 1e-12);
    EXPECT_DOUBLE_EQ(poisson_surrogate_moment(SpectralProfile::from_values({1.0, 0.0}), 10, 2), 1.0);
    const auto q = SpectralProfile::from_values({1.0, 0.6, -0.3});
    double prev = 0.0;
    for (int m = 1; m <= 400; ++m) {
        const double v = poisson_surrogate_moment(q, m, 1);
        EXPECT_GE(v, prev - 1e-15);
        prev = v;
    }
    EXPECT_NEAR(prev, poisson_surrogate_limit(q), 1e-6);
    EXPECT_LE(prev, poisson_surrogate_limit(q) + 1e-12);
}

TEST(PoissonSurrogate, GaussianLimit) {
    const auto p = gaussian_profile(0.5);
    EXPECT_NEAR(poisson_surrogate_moment(p, 500, 1), poisson_surrogate_limit(p), 1e-6);
}

TEST(BoundB, Examples) {
    EXPECT_DOUBLE_EQ(bound_B(SpectralProfile::from_values({1.0, 0.0}), 4), 1.0);
    const auto p = SpectralProfile::from_values({1.0, 1.0 / 3});
    EXPECT_NEAR(bound_B(p, 1), std::exp(0.125 + 0.125 * 0.125 / (10.0 / 9)), 1e-12);
    EXPECT_NEAR(bound_B(p, 1), 1.14919, 1e-5);
    EXPECT_THROW(bound_B(SpectralProfile::from_values({1.0, -1.0}), 1), DomainError);
}

TEST(RiskLowerBound, Examples) {
    EXPECT_DOUBLE_EQ(risk_lower_bound_from_moment(1.0), 1.0);
    EXPECT_NEAR(risk_lower_bound_from_moment(1.3125), 1 - 0.5 * std::sqrt(0.3125), 1e-15);
    EXPECT_NEAR(risk_lower_bound_from_moment(1.3125), 0.72049, 1e-5);
    EXPECT_DOUBLE_EQ(risk_lower_bound_from_moment(5.0), 0.0);
    EXPECT_THROW(risk_lower_bound_from_moment(0.9), ValidationError);
}
