#pragma once
// Generative pair models and database samplers.
//
// A model describes one feature pair (X, Y) under the alternative P_XY; the
// null Q_XY is the product of the (shared) marginals. Discrete alphabets are
// index-coded 0..m-1 and stored as doubles inside data matrices.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dbalign/error.hpp"
#include "dbalign/rng.hpp"

namespace dbalign {

// n x d observation matrix; rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kProbTol = 1e-12;

class DiscreteJointModel {
public:
    // Validates nonnegativity, normalization, symmetry and marginal
    // consistency. `marginal`, when given, must match the row sums.
    // Mutual absolute continuity is *not* required here; operations that need
    // it call require_mutually_continuous().
    static DiscreteJointModel from_joint(std::size_t m, std::vector<double> joint,
                                         std::optional<std::vector<double>> marginal = std::nullopt) {
        if (m == 0) throw ValidationError("alphabet_size must be positive");
        if (joint.size() != m * m) {
            std::ostringstream os;
            os << "joint matrix must have alphabet_size^2 = " << m * m << " entries, got " << joint.size();
            throw ValidationError(os.str());
        }
        double total = 0.0;
        for (std::size_t k = 0; k < joint.size(); ++k) {
            if (!std::isfinite(joint[k]) || joint[k] < 0.0) {
                std::ostringstream os;
                os << "nonnegativity violated: joint[" << k / m << "][" << k % m << "] = " << joint[k];
                throw ValidationError(os.str());
            }
            total += joint[k];
        }
        if (std::abs(total - 1.0) > kProbTol) {
            std::ostringstream os;
            os.precision(17);
            os << "normalization violated: joint entries sum to " << total;
            throw ValidationError(os.str());
        }
        for (std::size_t x = 0; x < m; ++x) {
            for (std::size_t y = x + 1; y < m; ++y) {
                if (std::abs(joint[x * m + y] - joint[y * m + x]) > kProbTol) {
                    std::ostringstream os;
                    os << "symmetry violated: joint[" << x << "][" << y << "] != joint[" << y << "][" << x << "]";
                    throw ValidationError(os.str());
                }
            }
        }
        DiscreteJointModel model;
        model.m_ = m;
        model.joint_ = std::move(joint);
        model.marginal_.assign(m, 0.0);
        for (std::size_t x = 0; x < m; ++x)
            for (std::size_t y = 0; y < m; ++y) model.marginal_[x] += model.joint_[x * m + y];
        if (marginal) {
            if (marginal->size() != m)
                throw ValidationError("marginal-consistency violated: marginal must have alphabet_size entries");
            for (std::size_t x = 0; x < m; ++x) {
                if (std::abs((*marginal)[x] - model.marginal_[x]) > kProbTol) {
                    std::ostringstream os;
                    os.precision(17);
                    os << "marginal-consistency violated: row " << x << " of joint sums to " << model.marginal_[x]
                       << " but marginal[" << x << "] = " << (*marginal)[x];
                    throw ValidationError(os.str());
                }
            }
        }
        model.build_tables();
        return model;
    }

    std::size_t alphabet_size() const { return m_; }
    double joint(std::size_t x, std::size_t y) const { return joint_[x * m_ + y]; }
    std::span<const double> joint_row_major() const { return joint_; }
    std::span<const double> marginal() const { return marginal_; }

    // joint[x][y] > 0 exactly when q(x) q(y) > 0.
    bool mutually_continuous() const {
        for (std::size_t x = 0; x < m_; ++x)
            for (std::size_t y = 0; y < m_; ++y)
                if ((joint(x, y) > 0.0) != (marginal_[x] * marginal_[y] > 0.0)) return false;
        return true;
    }

    void require_mutually_continuous() const {
        if (!mutually_continuous())
            throw DegenerateModelError(
                "absolute-continuity violated: some joint cell is zero while both marginals are positive");
    }

    void require_positive_marginal() const {
        for (std::size_t x = 0; x < m_; ++x)
            if (!(marginal_[x] > 0.0)) {
                std::ostringstream os;
                os << "degenerate model: marginal[" << x << "] = 0";
                throw DegenerateModelError(os.str());
            }
    }

    // True when joint == q q^T entrywise (within kProbTol).
    bool independent() const {
        for (std::size_t x = 0; x < m_; ++x)
            for (std::size_t y = 0; y < m_; ++y)
                if (std::abs(joint(x, y) - marginal_[x] * marginal_[y]) > kProbTol) return false;
        return true;
    }

    // log[P(x,y) / (q(x) q(y))]; -inf on a zero joint cell with positive marginals.
    double llr(std::size_t x, std::size_t y) const {
        if (x >= m_ || y >= m_ || !(marginal_[x] > 0.0) || !(marginal_[y] > 0.0)) {
            std::ostringstream os;
            os << "(" << x << ", " << y << ") is outside the model support";
            throw DomainError(os.str());
        }
        return llr_[x * m_ + y];
    }

    // Unchecked table access for hot loops; caller guarantees support membership.
    double llr_unchecked(std::size_t x, std::size_t y) const { return llr_[x * m_ + y]; }

    // Maps a stored matrix entry to its symbol index.
    std::size_t symbol(double v) const {
        if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(m_) ||
            !(marginal_[static_cast<std::size_t>(v)] > 0.0)) {
            std::ostringstream os;
            os << "value " << v << " is not a symbol in the support of the marginal";
            throw DataError(os.str());
        }
        return static_cast<std::size_t>(v);
    }

    std::size_t draw_marginal(Stream& rng) const { return draw(marginal_cdf_, rng); }
    // Returns the flattened cell index x*m + y.
    std::size_t draw_joint(Stream& rng) const { return draw(joint_cdf_, rng); }

private:
    static std::size_t draw(const std::vector<double>& cdf, Stream& rng) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    }

    static std::vector<double> make_cdf(const std::vector<double>& p) {
        std::vector<double> cdf(p.size());
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            acc += p[k];
            cdf[k] = acc;
            if (p[k] > 0.0) last_positive = k;
        }
        // Mass lost to rounding goes to the last positive cell; trailing zero
        // cells must stay unreachable.
        for (std::size_t k = last_positive; k < p.size(); ++k) cdf[k] = 1.0;
        return cdf;
    }

    void build_tables() {
        llr_.assign(m_ * m_, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t x = 0; x < m_; ++x) {
            for (std::size_t y = 0; y < m_; ++y) {
                const double qq = marginal_[x] * marginal_[y];
                if (qq > 0.0)
                    llr_[x * m_ + y] = joint(x, y) > 0.0 ? std::log(joint(x, y) / qq)
                                                         : -std::numeric_limits<double>::infinity();
            }
        }
        marginal_cdf_ = make_cdf(marginal_);
        joint_cdf_ = make_cdf(joint_);
    }

    std::size_t m_ = 0;
    std::vector<double> joint_;
    std::vector<double> marginal_;
    std::vector<double> llr_;
    std::vector<double> marginal_cdf_;
    std::vector<double> joint_cdf_;
};

// Standard bivariate normal pair with correlation rho, 0 < |rho| < 1.
class GaussianModel {
public:
    static GaussianModel make(double rho) {
        if (!std::isfinite(rho) || !(std::abs(rho) < 1.0))
            throw ValidationError("rho must satisfy -1 < rho < 1");
        if (rho == 0.0) throw ValidationError("rho must be nonzero");
        GaussianModel g;
        g.rho_ = rho;
        g.c_ = 1.0 - rho * rho;
        g.log_c_ = std::log1p(-rho * rho);
        return g;
    }

    double rho() const { return rho_; }
    // 1 - rho^2
    double one_minus_rho2() const { return c_; }
    double log_one_minus_rho2() const { return log_c_; }

    // Log of the Mehler kernel.
    double llr(double x, double y) const {
        return -0.5 * log_c_ + (-(x * x + y * y) * rho_ * rho_ + 2.0 * x * y * rho_) / (2.0 * c_);
    }

private:
    double rho_ = 0.5;
    double c_ = 0.75;
    double log_c_ = std::log(0.75);
};

using JointModel = std::variant<DiscreteJointModel, GaussianModel>;

// Correlated Bernoulli pair: X ~ Bern(tau p), Y|X=1 ~ Bern(tau),
// Y|X=0 ~ Bern(tau p (1-tau) / (1 - tau p)).
struct BernoulliModel {
    double tau = 0.5;
    double p = 0.5;

    void validate() const {
        if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
        if (!(p > 0.0 && p < 1.0)) throw ValidationError("p must lie in (0, 1)");
    }

    DiscreteJointModel to_discrete() const {
        validate();
        const double tp = tau * p;
        const double p11 = tau * tp;
        const double p01 = tp * (1.0 - tau);
        const double p00 = (1.0 - tp) - p01;
        return DiscreteJointModel::from_joint(2, {p00, p01, p01, p11});
    }
};

inline DiscreteJointModel make_bernoulli(double tau, double p) { return BernoulliModel{tau, p}.to_discrete(); }

// Pearson correlation with symbols used as their numeric index.
inline double pearson_rho(const DiscreteJointModel& model) {
    const std::size_t m = model.alphabet_size();
    const auto q = model.marginal();
    double mean = 0.0, second = 0.0, cross = 0.0;
    for (std::size_t x = 0; x < m; ++x) {
        mean += q[x] * static_cast<double>(x);
        second += q[x] * static_cast<double>(x * x);
        for (std::size_t y = 0; y < m; ++y) cross += model.joint(x, y) * static_cast<double>(x * y);
    }
    const double var = second - mean * mean;
    if (!(var > kProbTol)) throw DegenerateModelError("degenerate model: marginal has zero variance");
    return (cross - mean * mean) / var;
}

inline double pearson_rho(const BernoulliModel& model) {
    model.validate();
    const double tp = model.tau * model.p;
    if (!(tp > 0.0 && tp < 1.0)) throw DegenerateModelError("degenerate model: marginal has zero variance");
    return model.tau * (1.0 - model.p) / (1.0 - tp);
}

inline double pearson_rho(const GaussianModel& model) { return model.rho(); }

inline double pearson_rho(const JointModel& model) {
    return std::visit([](const auto& m) { return pearson_rho(m); }, model);
}

inline double llr(const DiscreteJointModel& model, double x, double y) {
    auto to_index = [&](double v) {
        if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(model.alphabet_size())) {
            std::ostringstream os;
            os << "value " << v << " is outside the model support";
            throw DomainError(os.str());
        }
        return static_cast<std::size_t>(v);
    };
    return model.llr(to_index(x), to_index(y));
}

inline double llr(const GaussianModel& model, double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw DomainError("Gaussian observations must be finite");
    return model.llr(x, y);
}

inline double llr(const JointModel& model, double x, double y) {
    return std::visit([&](const auto& m) { return llr(m, x, y); }, model);
}

// Sum of single-letter LLRs over the d features of a row pair.
template <class Model>
double pair_llr(const Model& model, std::span<const double> x_row, std::span<const double> y_row) {
    if (x_row.size() != y_row.size()) throw ShapeError("rows must have equal length");
    if (x_row.empty()) throw ShapeError("rows must have at least one feature");
    double s = 0.0;
    for (std::size_t l = 0; l < x_row.size(); ++l) s += llr(model, x_row[l], y_row[l]);
    return s;
}

inline double pair_llr(const JointModel& model, std::span<const double> x_row, std::span<const double> y_row) {
    return std::visit([&](const auto& m) { return pair_llr(m, x_row, y_row); }, model);
}

inline std::span<const double> row(const Matrix& a, Eigen::Index i) {
    return {a.data() + i * a.cols(), static_cast<std::size_t>(a.cols())};
}

inline void require_same_shape(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw ShapeError("X and Y must have the same n x d shape");
    if (x.rows() < 1 || x.cols() < 1) throw ShapeError("n and d must be positive");
}

// C[i][j] = pair_llr(x_i, y_j) for all row pairs.
inline Matrix llr_matrix(const DiscreteJointModel& model, const Matrix& x, const Matrix& y) {
    require_same_shape(x, y);
    const Eigen::Index n = x.rows(), d = x.cols();
    std::vector<std::size_t> xs(static_cast<std::size_t>(n * d)), ys(xs.size());
    for (Eigen::Index k = 0; k < n * d; ++k) {
        xs[static_cast<std::size_t>(k)] = model.symbol(x.data()[k]);
        ys[static_cast<std::size_t>(k)] = model.symbol(y.data()[k]);
    }
    Matrix c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double s = 0.0;
            for (Eigen::Index l = 0; l < d; ++l)
                s += model.llr_unchecked(xs[static_cast<std::size_t>(i * d + l)], ys[static_cast<std::size_t>(j * d + l)]);
            c(i, j) = s;
        }
    }
    return c;
}

// Gaussian pair LLRs depend on the rows only through norms and inner products.
inline Matrix llr_matrix(const GaussianModel& model, const Matrix& x, const Matrix& y) {
    require_same_shape(x, y);
    if (!x.allFinite() || !y.allFinite()) throw DataError("Gaussian observations must be finite");
    const double rho = model.rho(), c = model.one_minus_rho2();
    const double d = static_cast<double>(x.cols());
    const Eigen::VectorXd xn = x.rowwise().squaredNorm();
    const Eigen::VectorXd yn = y.rowwise().squaredNorm();
    Matrix out = (rho / c) * (x * y.transpose());
    const double base = -0.5 * d * model.log_one_minus_rho2();
    const double w = rho * rho / (2.0 * c);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += base - w * (xn(i) + yn(j));
    return out;
}

inline Matrix llr_matrix(const JointModel& model, const Matrix& x, const Matrix& y) {
    return std::visit([&](const auto& m) { return llr_matrix(m, x, y); }, model);
}

struct DatabasePair {
    Matrix x;
    Matrix y;
    // Row i of X is paired with row hidden_sigma[i] of Y (H1 only). 0-based.
    std::optional<std::vector<std::size_t>> hidden_sigma;

    std::size_t n() const { return static_cast<std::size_t>(x.rows()); }
    std::size_t d() const { return static_cast<std::size_t>(x.cols()); }
};

inline void validate_permutation(std::span<const std::size_t> sigma, std::size_t n) {
    if (sigma.size() != n) throw ValidationError("sigma must have exactly n entries");
    std::vector<char> seen(n, 0);
    for (std::size_t v : sigma) {
        if (v >= n || seen[v]) throw ValidationError("sigma is not a permutation of the rows");
        seen[v] = 1;
    }
}

namespace detail {

inline void check_dims(std::size_t n, std::size_t d) {
    if (n < 1) throw ValidationError("n must be at least 1");
    if (d < 1) throw ValidationError("d must be at least 1");
}

inline void fill_null(const DiscreteJointModel& model, Matrix& a, Stream& rng) {
    for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = static_cast<double>(model.draw_marginal(rng));
}

inline void fill_null(const GaussianModel&, Matrix& a, Stream& rng) {
    std::normal_distribution<double> normal;
    for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = normal(rng);
}

inline void fill_alt(const DiscreteJointModel& model, DatabasePair& pair, Stream& rng) {
    const auto& sigma = *pair.hidden_sigma;
    const std::size_t m = model.alphabet_size();
    for (Eigen::Index i = 0; i < pair.x.rows(); ++i) {
        const auto partner = static_cast<Eigen::Index>(sigma[static_cast<std::size_t>(i)]);
        for (Eigen::Index l = 0; l < pair.x.cols(); ++l) {
            const std::size_t cell = model.draw_joint(rng);
            pair.x(i, l) = static_cast<double>(cell / m);
            pair.y(partner, l) = static_cast<double>(cell % m);
        }
    }
}

// Y = rho X + sqrt(1 - rho^2) Z
inline void fill_alt(const GaussianModel& model, DatabasePair& pair, Stream& rng) {
    const auto& sigma = *pair.hidden_sigma;
    const double rho = model.rho(), s = std::sqrt(model.one_minus_rho2());
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < pair.x.rows(); ++i) {
        const auto partner = static_cast<Eigen::Index>(sigma[static_cast<std::size_t>(i)]);
        for (Eigen::Index l = 0; l < pair.x.cols(); ++l) {
            const double a = normal(rng);
            const double z = normal(rng);
            pair.x(i, l) = a;
            pair.y(partner, l) = rho * a + s * z;
        }
    }
}

}  // namespace detail

// X and Y with i.i.d. marginal entries, mutually independent.
template <class Model>
DatabasePair sample_null(const Model& model, std::size_t n, std::size_t d, StreamId stream) {
    detail::check_dims(n, d);
    Stream rng(stream);
    DatabasePair pair{Matrix(n, d), Matrix(n, d), std::nullopt};
    detail::fill_null(model, pair.x, rng);
    detail::fill_null(model, pair.y, rng);
    return pair;
}

// Pairs (X_i, Y_sigma(i)) i.i.d. P_XY per feature. sigma is drawn by
// Fisher-Yates from the stream when not supplied.
template <class Model>
DatabasePair sample_alt(const Model& model, std::size_t n, std::size_t d, StreamId stream,
                        std::optional<std::vector<std::size_t>> sigma = std::nullopt) {
    detail::check_dims(n, d);
    Stream rng(stream);
    if (sigma)
        validate_permutation(*sigma, n);
    else
        sigma = random_permutation(n, rng);
    DatabasePair pair{Matrix(n, d), Matrix(n, d), std::move(sigma)};
    detail::fill_alt(model, pair, rng);
    return pair;
}

inline DatabasePair sample_null(const JointModel& model, std::size_t n, std::size_t d, StreamId stream) {
    return std::visit([&](const auto& m) { return sample_null(m, n, d, stream); }, model);
}

inline DatabasePair sample_alt(const JointModel& model, std::size_t n, std::size_t d, StreamId stream,
                               std::optional<std::vector<std::size_t>> sigma = std::nullopt) {
    return std::visit([&](const auto& m) { return sample_alt(m, n, d, stream, sigma); }, model);
}

inline DatabasePair sample_null(const JointModel& model, std::size_t n, std::size_t d, std::uint64_t seed) {
    return sample_null(model, n, d, StreamId{seed, Purpose::null_sample, 0});
}

inline DatabasePair sample_alt(const JointModel& model, std::size_t n, std::size_t d, std::uint64_t seed,
                               std::optional<std::vector<std::size_t>> sigma = std::nullopt) {
    return sample_alt(model, n, d, StreamId{seed, Purpose::alt_sample, 0}, std::move(sigma));
}

inline const char* model_kind(const JointModel& model) {
    return std::holds_alternative<GaussianModel>(model) ? "gaussian" : "discrete";
}

}  // namespace dbalign
