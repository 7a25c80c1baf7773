#include <gtest/gtest.h>

#include <cmath>

#include "dbalign/models.hpp"

using namespace dbalign;

namespace {

DiscreteJointModel sym2() { return DiscreteJointModel::from_joint(2, {0.4, 0.1, 0.1, 0.4}); }

template <class E, class Fn>
std::string error_of(Fn&& fn) {
    try {
        fn();
    } catch (const E& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(DiscreteModel, MarginalsFromRows) {
    const auto m = sym2();
    EXPECT_DOUBLE_EQ(m.marginal()[0], 0.5);
    EXPECT_DOUBLE_EQ(m.marginal()[1], 0.5);
    EXPECT_TRUE(m.mutually_continuous());
    EXPECT_FALSE(m.independent());
}

TEST(DiscreteModel, RejectsInvalidJoints) {
    EXPECT_NE(error_of<ValidationError>([] { DiscreteJointModel::from_joint(2, {0.5, 0.1, 0.1, 0.4}); })
                  .find("normalization"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>([] { DiscreteJointModel::from_joint(2, {0.4, 0.2, 0.0, 0.4}); })
                  .find("symmetry"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>([] { DiscreteJointModel::from_joint(2, {0.6, -0.1, -0.1, 0.6}); })
                  .find("nonnegativity"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>(
                  [] { DiscreteJointModel::from_joint(2, {0.4, 0.1, 0.1, 0.4}, std::vector<double>{0.6, 0.4}); })
                  .find("marginal-consistency"),
              std::string::npos);
    EXPECT_THROW(DiscreteJointModel::from_joint(2, {0.4, 0.1, 0.5}), ValidationError);
}

TEST(DiscreteModel, AbsoluteContinuity) {
    const auto m = DiscreteJointModel::from_joint(2, {0.5, 0.0, 0.0, 0.5});
    EXPECT_FALSE(m.mutually_continuous());
    EXPECT_THROW(m.require_mutually_continuous(), DegenerateModelError);
    EXPECT_EQ(m.llr(0, 1), -std::numeric_limits<double>::infinity());
}

TEST(DiscreteModel, LlrValues) {
    const auto m = sym2();
    EXPECT_NEAR(m.llr(0, 0), std::log(1.6), 1e-15);
    EXPECT_NEAR(m.llr(0, 1), std::log(0.4), 1e-15);
    EXPECT_THROW(llr(JointModel{m}, 2.0, 0.0), DomainError);
    EXPECT_THROW(llr(JointModel{m}, 0.5, 0.0), DomainError);
}

TEST(Bernoulli, JointCells) {
    const double tau = 0.7, p = 0.3;
    const auto m = make_bernoulli(tau, p);
    EXPECT_NEAR(m.joint(1, 1), tau * tau * p, 1e-15);
    EXPECT_NEAR(m.joint(0, 1), tau * p * (1 - tau), 1e-15);
    EXPECT_NEAR(m.marginal()[1], tau * p, 1e-15);
    EXPECT_NEAR(pearson_rho(m), pearson_rho(BernoulliModel{tau, p}), 1e-12);
}

TEST(Bernoulli, ParameterChecks) {
    EXPECT_THROW(make_bernoulli(1.5, 0.5), ValidationError);
    EXPECT_THROW(make_bernoulli(0.5, 0.0), ValidationError);
    EXPECT_TRUE(make_bernoulli(0.0, 0.5).independent());
}

TEST(Gaussian, Construction) {
    EXPECT_THROW(GaussianModel::make(1.0), ValidationError);
    EXPECT_THROW(GaussianModel::make(0.0), ValidationError);
    EXPECT_THROW(GaussianModel::make(std::nan("")), ValidationError);
    const auto g = GaussianModel::make(-0.3);
    EXPECT_DOUBLE_EQ(g.rho(), -0.3);
}

TEST(Gaussian, LlrIsLogDensityRatio) {
    const double rho = 0.6, x = 0.7, y = -1.2, c = 1 - rho * rho;
    const double p = std::exp(-(x * x - 2 * rho * x * y + y * y) / (2 * c)) / (2 * M_PI * std::sqrt(c));
    const double q = std::exp(-(x * x + y * y) / 2) / (2 * M_PI);
    EXPECT_NEAR(GaussianModel::make(rho).llr(x, y), std::log(p / q), 1e-13);
}

TEST(LlrMatrix, GaussianFastPathMatchesPairLlr) {
    const JointModel m = GaussianModel::make(0.4);
    const auto pair = sample_alt(m, 6, 5, std::uint64_t{3});
    const Matrix c = llr_matrix(m, pair.x, pair.y);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) EXPECT_NEAR(c(i, j), pair_llr(m, row(pair.x, i), row(pair.y, j)), 1e-11);
}

TEST(LlrMatrix, DiscreteMatchesPairLlr) {
    const JointModel m = make_bernoulli(0.6, 0.4);
    const auto pair = sample_null(m, 5, 3, std::uint64_t{4});
    const Matrix c = llr_matrix(m, pair.x, pair.y);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(c(i, j), pair_llr(m, row(pair.x, i), row(pair.y, j)));
}

TEST(Sampling, DeterministicGivenSeed) {
    const JointModel m = GaussianModel::make(0.5);
    const auto a = sample_alt(m, 10, 4, std::uint64_t{77});
    const auto b = sample_alt(m, 10, 4, std::uint64_t{77});
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(*a.hidden_sigma, *b.hidden_sigma);
    const auto c = sample_alt(m, 10, 4, std::uint64_t{78});
    EXPECT_NE(a.x, c.x);
}

TEST(Sampling, AlternativePairsFollowSigma) {
    // With rho close to 1 the matched rows are nearly equal.
    const JointModel m = GaussianModel::make(0.999999);
    const auto pair = sample_alt(m, 8, 3, std::uint64_t{5});
    const auto& s = *pair.hidden_sigma;
    for (int i = 0; i < 8; ++i)
        for (int l = 0; l < 3; ++l) EXPECT_NEAR(pair.x(i, l), pair.y(static_cast<Eigen::Index>(s[i]), l), 0.02);
}

TEST(Sampling, ExplicitSigmaIsValidated) {
    const JointModel m = sym2();
    EXPECT_THROW(sample_alt(m, 3, 1, std::uint64_t{1}, std::vector<std::size_t>{0, 0, 1}), ValidationError);
    const auto pair = sample_alt(m, 3, 1, std::uint64_t{1}, std::vector<std::size_t>{2, 0, 1});
    EXPECT_EQ(*pair.hidden_sigma, (std::vector<std::size_t>{2, 0, 1}));
}

TEST(Sampling, DiscreteMomentsMatchModel) {
    const auto dm = make_bernoulli(0.8, 0.4);
    const JointModel m = dm;
    const auto pair = sample_alt(m, 4000, 5, std::uint64_t{11});
    const auto& s = *pair.hidden_sigma;
    double both = 0.0, ones = 0.0;
    const double cells = 4000.0 * 5;
    for (int i = 0; i < 4000; ++i)
        for (int l = 0; l < 5; ++l) {
            ones += pair.x(i, l);
            both += pair.x(i, l) * pair.y(static_cast<Eigen::Index>(s[i]), l);
        }
    const double p1 = dm.marginal()[1], p11 = dm.joint(1, 1);
    EXPECT_NEAR(ones / cells, p1, 4 * std::sqrt(p1 * (1 - p1) / cells));
    EXPECT_NEAR(both / cells, p11, 4 * std::sqrt(p11 * (1 - p11) / cells));
}

TEST(Sampling, GaussianCorrelation) {
    const JointModel m = GaussianModel::make(0.6);
    const auto pair = sample_alt(m, 2000, 10, std::uint64_t{12});
    const auto& s = *pair.hidden_sigma;
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 2000; ++i)
        for (int l = 0; l < 10; ++l) {
            sxy += pair.x(i, l) * pair.y(static_cast<Eigen::Index>(s[i]), l);
            sxx += pair.x(i, l) * pair.x(i, l);
        }
    const double n = 20000;
    EXPECT_NEAR(sxy / n, 0.6, 4 * std::sqrt((1 + 0.36) / n));
    EXPECT_NEAR(sxx / n, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(Sampling, RejectsEmptyShapes) {
    const JointModel m = GaussianModel::make(0.5);
    EXPECT_THROW(sample_null(m, 0, 3, std::uint64_t{1}), ValidationError);
    EXPECT_THROW(sample_null(m, 3, 0, std::uint64_t{1}), ValidationError);
}
