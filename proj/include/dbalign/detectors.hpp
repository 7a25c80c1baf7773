#pragma once
// Decision procedures for "are X and Y row-shuffled dependent databases?"
//
//   glrt       maximum over permutations of the normalized log-likelihood
//   sum_test   grand sum of the centered kernel over all row pairs and features
//   count_test number of row pairs whose normalized LLR clears tau_count
//   np_oracle  exact permutation-mixture likelihood ratio (tiny n only)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dbalign/assignment.hpp"
#include "dbalign/error.hpp"
#include "dbalign/exponents.hpp"
#include "dbalign/models.hpp"
#include "dbalign/rng.hpp"
#include "dbalign/spectral.hpp"

namespace dbalign {

enum class DetectorKind { glrt, sum, count, np };

inline const char* to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::glrt: return "glrt";
        case DetectorKind::sum: return "sum";
        case DetectorKind::count: return "count";
        case DetectorKind::np: return "np";
    }
    return "?";
}

inline DetectorKind parse_detector(const std::string& s) {
    if (s == "glrt") return DetectorKind::glrt;
    if (s == "sum") return DetectorKind::sum;
    if (s == "count") return DetectorKind::count;
    if (s == "np") return DetectorKind::np;
    throw ValidationError("unknown detector '" + s + "' (expected glrt, sum, count or np)");
}

struct Verdict {
    bool decision = false;  // true = dependent (H1)
    double statistic = 0.0;
    double threshold = 0.0;
    DetectorKind detector = DetectorKind::sum;
    // GLRT: maximizing permutation (row i of X to row perm[i] of Y).
    std::optional<std::vector<std::size_t>> permutation;
    // Count test: number of qualifying pairs and the plan's P_d.
    std::optional<std::int64_t> count;
    std::optional<double> pd;
};

// Ties decide H1.
inline Verdict make_verdict(DetectorKind kind, double statistic, double threshold) {
    Verdict v;
    v.detector = kind;
    v.statistic = statistic;
    v.threshold = threshold;
    v.decision = statistic >= threshold;
    return v;
}

// sum >= bound up to accumulated rounding in sums of LLR atoms.
inline bool reaches(double sum, double bound) { return sum >= bound - 1e-12 * std::max(1.0, std::abs(bound)); }

namespace detail {

inline Matrix finite_llr_matrix(const JointModel& model, const DatabasePair& pair) {
    Matrix c = llr_matrix(model, pair.x, pair.y);
    if (!c.allFinite()) throw DataError("support violation: a row pair has zero likelihood under P_XY");
    return c;
}

inline void require_usable(const JointModel& model) {
    if (auto* dm = std::get_if<DiscreteJointModel>(&model)) dm->require_mutually_continuous();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// GLRT

inline Verdict glrt(const JointModel& model, const DatabasePair& pair, double tau) {
    require_same_shape(pair.x, pair.y);
    const Matrix c = detail::finite_llr_matrix(model, pair);
    auto best = max_weight_assignment(c);
    const double scale = static_cast<double>(pair.n()) * static_cast<double>(pair.d());
    Verdict v = make_verdict(DetectorKind::glrt, best.value / scale, tau);
    v.permutation = std::move(best.perm);
    return v;
}

// ---------------------------------------------------------------------------
// Sum test

namespace detail {

inline double centered_grand_sum(const DiscreteJointModel& model, const DatabasePair& pair) {
    const CenteredKernel kernel(model);
    const std::size_t m = model.alphabet_size();
    const Eigen::Index n = pair.x.rows(), d = pair.x.cols();
    std::vector<std::int64_t> cx(m), cy(m);
    double total = 0.0;
    for (Eigen::Index l = 0; l < d; ++l) {
        std::fill(cx.begin(), cx.end(), 0);
        std::fill(cy.begin(), cy.end(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            ++cx[model.symbol(pair.x(i, l))];
            ++cy[model.symbol(pair.y(i, l))];
        }
        for (std::size_t a = 0; a < m; ++a) {
            if (cx[a] == 0) continue;
            for (std::size_t b = 0; b < m; ++b)
                if (cy[b] != 0) total += static_cast<double>(cx[a] * cy[b]) * kernel.unchecked(a, b);
        }
    }
    return total;
}

// Column sums taken over sorted values so the result does not depend on row order.
inline double sorted_sum(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

inline double centered_grand_sum(const GaussianModel& model, const DatabasePair& pair) {
    if (!pair.x.allFinite() || !pair.y.allFinite()) throw DataError("Gaussian observations must be finite");
    const Eigen::Index n = pair.x.rows(), d = pair.x.cols();
    std::vector<double> col(static_cast<std::size_t>(n));
    double total = 0.0;
    for (Eigen::Index l = 0; l < d; ++l) {
        for (Eigen::Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = pair.x(i, l);
        const double sx = sorted_sum(col);
        for (Eigen::Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = pair.y(i, l);
        const double sy = sorted_sum(col);
        total += sx * sy;
    }
    return model.rho() / model.one_minus_rho2() * total;
}

}  // namespace detail

// Default threshold d * n * SKL(P || Q) against the unnormalized grand sum.
inline double default_sum_threshold(const JointModel& model, std::size_t n, std::size_t d) {
    const double skl = kl_divergences(model).skl;
    if (!(skl > 0.0)) throw DegenerateModelError("degenerate model: P_XY equals Q_XY, the sum test has no signal");
    return static_cast<double>(d) * static_cast<double>(n) * skl;
}

inline Verdict sum_test(const JointModel& model, const DatabasePair& pair, std::optional<double> tau = std::nullopt) {
    require_same_shape(pair.x, pair.y);
    detail::require_usable(model);
    const double threshold = tau ? *tau : default_sum_threshold(model, pair.n(), pair.d());
    const double stat = std::visit([&](const auto& m) { return detail::centered_grand_sum(m, pair); }, model);
    return make_verdict(DetectorKind::sum, stat, threshold);
}

// ---------------------------------------------------------------------------
// Count test

struct PdMethod {
    enum class Kind { exact_convolution, monte_carlo };
    Kind kind = Kind::exact_convolution;
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;  // substream index, e.g. the sweep point

    static PdMethod exact() { return {}; }
    static PdMethod monte_carlo(std::uint64_t samples, std::uint64_t seed, std::uint64_t stream = 0) {
        return {Kind::monte_carlo, samples, seed, stream};
    }
};

struct CountTestPlan {
    double tau_count = 0.0;
    std::size_t d = 1;
    double pd = 0.0;
    double pd_stderr = 0.0;  // zero for the exact method
    PdMethod method;
};

inline constexpr std::size_t kMaxConvolutionSupport = 5'000'000;

// Pr_P[sum of d i.i.d. LLR atoms >= d tau], exact by repeated convolution.
inline double exact_pd(const LLRAtoms& atoms, std::size_t d, double tau) {
    std::vector<std::pair<double, double>> dist{{0.0, 1.0}};  // (value, P-mass)
    std::vector<std::pair<double, double>> next;
    for (std::size_t step = 0; step < d; ++step) {
        next.clear();
        next.reserve(dist.size() * atoms.atoms.size());
        for (const auto& [v, pm] : dist)
            for (const auto& a : atoms.atoms)
                if (a.p_prob > 0.0) next.emplace_back(v + a.value, pm * a.p_prob);
        std::sort(next.begin(), next.end());
        dist.clear();
        for (const auto& e : next) {
            if (!dist.empty() && std::abs(e.first - dist.back().first) <= kAtomMergeTol * std::max(1.0, std::abs(e.first)))
                dist.back().second += e.second;
            else
                dist.push_back(e);
        }
        if (dist.size() > kMaxConvolutionSupport)
            throw CapacityError("exact P_d convolution support too large; use the monte-carlo method");
    }
    const double bound = static_cast<double>(d) * tau;
    double pd = 0.0;
    for (const auto& [v, pm] : dist)
        if (reaches(v, bound)) pd += pm;
    return std::min(1.0, pd);
}

namespace detail {

inline double mc_llr_sum(const DiscreteJointModel& model, std::size_t d, Stream& rng) {
    const std::size_t m = model.alphabet_size();
    double s = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
        const std::size_t cell = model.draw_joint(rng);
        s += model.llr_unchecked(cell / m, cell % m);
    }
    return s;
}

}  // namespace detail

inline CountTestPlan make_count_plan(const JointModel& model, std::size_t d, double tau_count, PdMethod method) {
    if (d < 1) throw ValidationError("d must be at least 1");
    if (!std::isfinite(tau_count)) throw ValidationError("tau_count must be finite");
    detail::require_usable(model);
    CountTestPlan plan;
    plan.tau_count = tau_count;
    plan.d = d;
    plan.method = method;
    if (method.kind == PdMethod::Kind::exact_convolution) {
        const auto* dm = std::get_if<DiscreteJointModel>(&model);
        if (!dm) throw ValidationError("unsupported method: exact P_d needs a discrete model; use monte-carlo");
        plan.pd = exact_pd(llr_atoms(*dm), d, tau_count);
        return plan;
    }
    if (method.samples < 1) throw ValidationError("monte-carlo P_d needs at least one sample");
    Stream rng(StreamId{method.seed, Purpose::pd_estimate, method.stream});
    const double bound = static_cast<double>(d) * tau_count;
    std::uint64_t hits = 0;
    if (const auto* g = std::get_if<GaussianModel>(&model)) {
        // Under P the d-feature LLR sum equals -(d/2) log(1-rho^2) + (rho/2)(A - B)
        // with A, B independent chi-square(d).
        std::chi_squared_distribution<double> chi(static_cast<double>(d));
        const double base = -0.5 * static_cast<double>(d) * g->log_one_minus_rho2();
        for (std::uint64_t s = 0; s < method.samples; ++s) {
            const double a = chi(rng);
            const double b = chi(rng);
            if (reaches(base + 0.5 * g->rho() * (a - b), bound)) ++hits;
        }
    } else {
        const auto& dm = std::get<DiscreteJointModel>(model);
        for (std::uint64_t s = 0; s < method.samples; ++s)
            if (reaches(detail::mc_llr_sum(dm, d, rng), bound)) ++hits;
    }
    const double n = static_cast<double>(method.samples);
    plan.pd = static_cast<double>(hits) / n;
    plan.pd_stderr = std::sqrt(plan.pd * (1.0 - plan.pd) / n);
    return plan;
}

inline Verdict count_test(const JointModel& model, const DatabasePair& pair, const CountTestPlan& plan) {
    require_same_shape(pair.x, pair.y);
    if (pair.d() != plan.d) throw ShapeError("count-test plan was built for a different d");
    if (!(plan.pd > 0.0)) throw ValidationError("vacuous threshold: P_d = 0, the count test cannot fire meaningfully");
    const Matrix c = llr_matrix(model, pair.x, pair.y);
    const double bound = static_cast<double>(plan.d) * plan.tau_count;
    std::int64_t count = 0;
    for (Eigen::Index k = 0; k < c.size(); ++k)
        if (reaches(c.data()[k], bound)) ++count;
    Verdict v = make_verdict(DetectorKind::count, static_cast<double>(count), 0.5 * static_cast<double>(pair.n()) * plan.pd);
    v.count = count;
    v.pd = plan.pd;
    return v;
}

// ---------------------------------------------------------------------------
// Neyman-Pearson oracle

// (1/n!) sum over sigma of prod_i exp(pair_llr(x_i, y_sigma(i))), thresholded at 1.
inline Verdict np_oracle(const JointModel& model, const DatabasePair& pair, const Capacity& cap = default_capacity()) {
    require_same_shape(pair.x, pair.y);
    const auto n = static_cast<int>(pair.n());
    if (n > cap.max_factorial_n)
        throw CapacityError("np oracle enumerates n! permutations; n <= " + std::to_string(cap.max_factorial_n));
    const Matrix c = llr_matrix(model, pair.x, pair.y);
    std::vector<std::size_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<double> terms;
    do {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += c(i, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
        terms.push_back(s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double hi = *std::max_element(terms.begin(), terms.end());
    double log_mean;
    if (hi == -std::numeric_limits<double>::infinity()) {
        log_mean = hi;
    } else {
        double acc = 0.0;
        for (double t : terms) acc += std::exp(t - hi);
        log_mean = hi + std::log(acc) - std::lgamma(n + 1.0);
    }
    return make_verdict(DetectorKind::np, detail::exp_or_inf(log_mean), 1.0);
}

}  // namespace dbalign
