#pragma once
// Likelihood-kernel spectra and the second-moment calculus built on them.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "dbalign/error.hpp"
#include "dbalign/models.hpp"

namespace dbalign {

enum class SpectrumSource { discrete_exact, gaussian_truncated };

// Eigenvalues sorted by decreasing value, eigenvalues[0] == 1.
//
// Gaussian profiles hold rho^l up to the first term below the truncation
// tolerance; power sums add the exact geometric tail so that statistics do
// not depend on where the list was cut.
class SpectralProfile {
public:
    SpectralProfile() = default;

    static SpectralProfile from_values(std::vector<double> values, SpectrumSource source = SpectrumSource::discrete_exact) {
        std::sort(values.begin(), values.end(), std::greater<>());
        SpectralProfile p;
        p.values_ = std::move(values);
        p.source_ = source;
        p.check();
        return p;
    }

    const std::vector<double>& eigenvalues() const { return values_; }
    SpectrumSource source() const { return source_; }
    double truncation_tol() const { return tol_; }
    // rho for Gaussian profiles, 0 otherwise.
    double ratio() const { return ratio_; }

    // Number of stored Gaussian terms rho^0..rho^(K-1); the tail starts at K.
    std::size_t stored_terms() const { return values_.size(); }

    // Sum over i >= 0 of lambda_i^(2k), including the Gaussian tail.
    double power_sum(int k) const {
        double s = 0.0;
        for (double v : values_) s += std::pow(v * v, k);
        return s + tail_power_sum(k);
    }

    // Sum over i >= 1 of lambda_i^(2k).
    double nontrivial_power_sum(int k) const {
        double s = 0.0;
        for (std::size_t i = 1; i < values_.size(); ++i) s += std::pow(values_[i] * values_[i], k);
        return s + tail_power_sum(k);
    }

    // Largest lambda_i^2 over i >= 1.
    double leading_nontrivial_square() const {
        double best = 0.0;
        for (std::size_t i = 1; i < values_.size(); ++i) best = std::max(best, values_[i] * values_[i]);
        if (source_ == SpectrumSource::gaussian_truncated) best = std::max(best, ratio_ * ratio_);
        return best;
    }

    bool independent() const { return leading_nontrivial_square() == 0.0; }

    friend SpectralProfile gaussian_profile(double rho, double tol);

private:
    double tail_power_sum(int k) const {
        if (source_ != SpectrumSource::gaussian_truncated) return 0.0;
        const double r2k = std::pow(ratio_ * ratio_, k);
        return std::pow(r2k, static_cast<double>(values_.size())) / (1.0 - r2k);
    }

    void check() const {
        if (values_.empty() || std::abs(values_.front() - 1.0) > 1e-10)
            throw ValidationError("spectral profile must have leading eigenvalue 1");
        for (double v : values_)
            if (!(std::abs(v) <= 1.0 + 1e-10)) throw ValidationError("spectral profile eigenvalue exceeds 1 in magnitude");
    }

    std::vector<double> values_;
    SpectrumSource source_ = SpectrumSource::discrete_exact;
    double tol_ = 0.0;
    double ratio_ = 0.0;
};

// M[x][y] = P(x,y) / q(x); row-stochastic.
inline Eigen::MatrixXd kernel_matrix(const DiscreteJointModel& model) {
    model.require_positive_marginal();
    const auto m = static_cast<Eigen::Index>(model.alphabet_size());
    const auto q = model.marginal();
    Eigen::MatrixXd k(m, m);
    for (Eigen::Index x = 0; x < m; ++x)
        for (Eigen::Index y = 0; y < m; ++y)
            k(x, y) = model.joint(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) / q[static_cast<std::size_t>(x)];
    return k;
}

// Spectrum of M computed on the symmetric conjugate D^-1/2 P D^-1/2.
inline SpectralProfile eigenvalues(const DiscreteJointModel& model) {
    model.require_positive_marginal();
    const auto m = static_cast<Eigen::Index>(model.alphabet_size());
    const auto q = model.marginal();
    Eigen::MatrixXd s(m, m);
    for (Eigen::Index x = 0; x < m; ++x)
        for (Eigen::Index y = 0; y < m; ++y) {
            const auto xi = static_cast<std::size_t>(x), yi = static_cast<std::size_t>(y);
            s(x, y) = model.joint(xi, yi) / std::sqrt(q[xi] * q[yi]);
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw DomainError("eigenvalue solver failed to converge");
    const Eigen::VectorXd ev = solver.eigenvalues();
    return SpectralProfile::from_values(std::vector<double>(ev.data(), ev.data() + ev.size()));
}

inline constexpr double kDefaultGaussianTol = 1e-12;

// rho^l for l = 0, 1, ... up to and including the first term with |rho^l| < tol.
inline SpectralProfile gaussian_profile(double rho, double tol = kDefaultGaussianTol) {
    if (!std::isfinite(rho) || !(std::abs(rho) < 1.0)) throw DomainError("Gaussian profile needs |rho| < 1");
    if (!(tol > 0.0)) throw DomainError("truncation tolerance must be positive");
    std::vector<double> values{1.0};
    double term = 1.0;
    for (int l = 1; std::abs(term) >= tol; ++l) {
        term = std::pow(rho, static_cast<double>(l));
        values.push_back(term);
        if (term == 0.0) break;
    }
    SpectralProfile p;
    p.source_ = SpectrumSource::gaussian_truncated;
    p.tol_ = tol;
    p.ratio_ = rho;
    p.values_ = std::move(values);
    // The tail formula needs the stored terms to be exactly rho^0..rho^(K-1)
    // in order, so sort only the copy used for presentation.
    std::vector<double> sorted = p.values_;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    p.values_ = std::move(sorted);
    p.check();
    return p;
}

// Geometric bound on the part of sum_{i>=1} lambda_i^2/(1-lambda_i^2) that
// lies beyond the stored Gaussian terms; zero for discrete profiles.
inline double weak_lb_tail_bound(const SpectralProfile& profile) {
    if (profile.source() != SpectrumSource::gaussian_truncated) return 0.0;
    const double r2 = profile.ratio() * profile.ratio();
    const double r2k = std::pow(r2, static_cast<double>(profile.stored_terms()));
    return r2k / ((1.0 - r2) * (1.0 - r2k));
}

// sum_{i>=1} lambda_i^2 / (1 - lambda_i^2)
inline double weak_lb_statistic(const SpectralProfile& profile) {
    const auto& v = profile.eigenvalues();
    double s = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double l2 = v[i] * v[i];
        if (l2 >= 1.0) throw DomainError("singular profile: a nontrivial eigenvalue has magnitude 1");
        s += l2 / (1.0 - l2);
    }
    const double tail = weak_lb_tail_bound(profile);
    if (profile.source() == SpectrumSource::gaussian_truncated && !(tail < profile.truncation_tol()))
        throw DomainError("Gaussian tail bound exceeds the truncation tolerance; lower the tolerance");
    return s + tail;
}

// -log(lambda_1^2) / log(sum_i lambda_i^2); integer d strictly below it
// cannot give strong detection at fixed d. lambda_1 is the largest
// nontrivial eigenvalue in magnitude.
inline double strong_lb_fixed_d_threshold(const SpectralProfile& profile) {
    const double l1 = profile.leading_nontrivial_square();
    if (l1 == 0.0) throw DomainError("independent model: fixed-d threshold undefined (lambda_1 = 0)");
    return -std::log(l1) / std::log(profile.power_sum(1));
}

struct CycleType {
    // (k, N_k) pairs with N_k > 0, increasing k; sum of k * N_k == n.
    std::vector<std::pair<int, int>> counts;
    double log_probability = 0.0;
    double probability = 0.0;

    int count(int k) const {
        for (const auto& [len, num] : counts)
            if (len == k) return num;
        return 0;
    }
};

// Visits every cycle type of S_n (one per integer partition of n).
template <class Fn>
void for_each_cycle_type(int n, Fn&& fn, const Capacity& cap = default_capacity()) {
    if (n < 1 || n > cap.max_cycle_type_n)
        throw CapacityError("cycle-type enumeration supports 1 <= n <= " + std::to_string(cap.max_cycle_type_n));
    CycleType current;
    // Parts are generated in decreasing order of length so each partition is
    // produced exactly once; log-probability = -sum(N_k log k + log N_k!).
    std::function<void(int, int, double)> rec = [&](int remaining, int max_part, double logp) {
        if (remaining == 0) {
            current.log_probability = logp;
            current.probability = std::exp(logp);
            CycleType view = current;
            std::reverse(view.counts.begin(), view.counts.end());
            fn(static_cast<const CycleType&>(view));
            return;
        }
        for (int k = std::min(remaining, max_part); k >= 1; --k) {
            for (int num = remaining / k; num >= 1; --num) {
                current.counts.emplace_back(k, num);
                rec(remaining - k * num, k - 1,
                    logp - num * std::log(static_cast<double>(k)) - std::lgamma(num + 1.0));
                current.counts.pop_back();
            }
        }
    };
    rec(n, n, 0.0);
}

inline std::vector<CycleType> cycle_types(int n, const Capacity& cap = default_capacity()) {
    std::vector<CycleType> out;
    for_each_cycle_type(n, [&](const CycleType& t) { out.push_back(t); }, cap);
    return out;
}

namespace detail {

inline double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

inline double exp_or_inf(double log_value) {
    return log_value > std::log(std::numeric_limits<double>::max()) ? std::numeric_limits<double>::infinity()
                                                                    : std::exp(log_value);
}

}  // namespace detail

// E_H0[L_n^2] = sum over cycle types of P(type) * prod_k g_k^(d N_k),
// g_k = sum_i lambda_i^(2k). Accumulated in log space; +inf if unrepresentable.
inline double second_moment_exact(const SpectralProfile& profile, int n, int d,
                                  const Capacity& cap = default_capacity()) {
    if (d < 1) throw ValidationError("d must be at least 1");
    if (n < 1 || n > cap.max_cycle_type_n)
        throw CapacityError("exact second moment supports 1 <= n <= " + std::to_string(cap.max_cycle_type_n));
    std::vector<double> log_g(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 1; k <= n; ++k) log_g[static_cast<std::size_t>(k)] = std::log(profile.power_sum(k));
    double acc = -std::numeric_limits<double>::infinity();
    for_each_cycle_type(
        n,
        [&](const CycleType& t) {
            double term = t.log_probability;
            for (const auto& [k, num] : t.counts) term += static_cast<double>(d) * num * log_g[static_cast<std::size_t>(k)];
            acc = detail::log_sum_exp(acc, term);
        },
        cap);
    return std::max(1.0, detail::exp_or_inf(acc));
}

// prod_{k=1..m} exp((g_k^d - 1)/k): E[exp(d sum_k P_k log g_k)] with
// independent P_k ~ Poisson(1/k).
inline double poisson_surrogate_moment(const SpectralProfile& profile, int m, int d) {
    if (m < 1) throw ValidationError("m must be at least 1");
    if (d < 1) throw ValidationError("d must be at least 1");
    double log_value = 0.0;
    for (int k = 1; k <= m; ++k) {
        // g_k^d - 1 with g_k = 1 + s_k
        const double gkd_minus_1 = std::expm1(static_cast<double>(d) * std::log1p(profile.nontrivial_power_sum(k)));
        log_value += gkd_minus_1 / k;
        if (!std::isfinite(log_value)) return std::numeric_limits<double>::infinity();
    }
    return detail::exp_or_inf(log_value);
}

// exp(-sum_{i>=1} log(1 - lambda_i^2)): the m -> infinity limit of the
// Poisson surrogate at d = 1.
inline double poisson_surrogate_limit(const SpectralProfile& profile) {
    const auto& v = profile.eigenvalues();
    double s = 0.0;
    if (profile.source() == SpectrumSource::gaussian_truncated) {
        // prod_{i>=1} (1 - rho^(2i))^-1, summed until terms vanish.
        const double r2 = profile.ratio() * profile.ratio();
        double term = r2;
        while (term > 0.0 && term > 1e-300) {
            s -= std::log1p(-term);
            if (term < 1e-18) break;
            term *= r2;
        }
        return detail::exp_or_inf(s);
    }
    for (std::size_t i = 1; i < v.size(); ++i) s -= std::log1p(-v[i] * v[i]);
    return detail::exp_or_inf(s);
}

// B_{n,d} = exp[d S + (sum_i lambda_i^2)^(d-2) (d S)^2], S the weak statistic.
inline double bound_B(const SpectralProfile& profile, int d) {
    if (d < 1) throw ValidationError("d must be at least 1");
    const double s = weak_lb_statistic(profile);
    const double ds = static_cast<double>(d) * s;
    const double scale = std::pow(profile.power_sum(1), static_cast<double>(d - 2));
    return detail::exp_or_inf(ds + scale * ds * ds);
}

// clamp(1 - sqrt(E[L^2] - 1)/2, 0, 1); a lower bound on the minimax risk.
inline double risk_lower_bound_from_moment(double second_moment) {
    if (std::isnan(second_moment) || second_moment < 1.0 - 1e-12)
        throw ValidationError("second moment below 1 violates E[L^2] >= (E L)^2 = 1");
    if (std::isinf(second_moment)) return 0.0;
    const double excess = std::max(0.0, second_moment - 1.0);
    return std::clamp(1.0 - 0.5 * std::sqrt(excess), 0.0, 1.0);
}

}  // namespace dbalign
