#pragma once
// Log-likelihood-ratio law: log-MGFs, Chernoff exponents, divergences and the
// centered kernel used by the sum test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <type_traits>
#include <variant>
#include <vector>

#include "dbalign/error.hpp"
#include "dbalign/models.hpp"

namespace dbalign {

struct LLRAtom {
    double value = 0.0;   // LLR
    double q_prob = 0.0;  // mass under Q = q x q
    double p_prob = 0.0;  // mass under P = joint
};

struct LLRAtoms {
    std::vector<LLRAtom> atoms;  // increasing value
};

inline constexpr double kAtomMergeTol = 1e-12;

// Exact law of the single-letter LLR under Q and P; cells with equal LLR
// (within kAtomMergeTol) share one atom.
inline LLRAtoms llr_atoms(const DiscreteJointModel& model) {
    model.require_mutually_continuous();
    const std::size_t m = model.alphabet_size();
    const auto q = model.marginal();
    std::vector<LLRAtom> cells;
    for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = 0; y < m; ++y)
            if (q[x] * q[y] > 0.0) cells.push_back({model.llr_unchecked(x, y), q[x] * q[y], model.joint(x, y)});
    std::sort(cells.begin(), cells.end(), [](const LLRAtom& a, const LLRAtom& b) { return a.value < b.value; });
    LLRAtoms out;
    for (const auto& c : cells) {
        if (!out.atoms.empty() && std::abs(c.value - out.atoms.back().value) <= kAtomMergeTol) {
            out.atoms.back().q_prob += c.q_prob;
            out.atoms.back().p_prob += c.p_prob;
        } else {
            out.atoms.push_back(c);
        }
    }
    return out;
}

struct Divergences {
    double kl_pq = 0.0;  // D(P || Q)
    double kl_qp = 0.0;  // D(Q || P)
    double skl = 0.0;    // (kl_pq + kl_qp) / 2
};

inline Divergences kl_divergences(const DiscreteJointModel& model) {
    const auto atoms = llr_atoms(model);
    Divergences out;
    for (const auto& a : atoms.atoms) {
        out.kl_pq += a.p_prob * a.value;
        out.kl_qp -= a.q_prob * a.value;
    }
    out.skl = 0.5 * (out.kl_pq + out.kl_qp);
    return out;
}

inline Divergences kl_divergences(const GaussianModel& model) {
    const double c = model.one_minus_rho2(), r2 = model.rho() * model.rho();
    Divergences out;
    out.kl_pq = -0.5 * model.log_one_minus_rho2();
    out.kl_qp = 0.5 * model.log_one_minus_rho2() + r2 / c;
    out.skl = 0.5 * (out.kl_pq + out.kl_qp);
    return out;
}

inline Divergences kl_divergences(const JointModel& model) {
    return std::visit([](const auto& m) { return kl_divergences(m); }, model);
}

// ---------------------------------------------------------------------------
// Log-moment generating functions

// Open interval of lambda on which psi_Q is finite.
struct LambdaDomain {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool contains(double lam) const { return lam > lo && lam < hi; }
};

inline LambdaDomain psi_q_domain(const DiscreteJointModel&) { return {}; }

// 1 - (1 - lambda)^2 rho^2 > 0
inline LambdaDomain psi_q_domain(const GaussianModel& model) {
    const double r = std::abs(model.rho());
    return {1.0 - 1.0 / r, 1.0 + 1.0 / r};
}

inline double psi_q(const LLRAtoms& atoms, double lam) {
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& a : atoms.atoms)
        if (a.q_prob > 0.0) hi = std::max(hi, lam * a.value);
    double s = 0.0;
    for (const auto& a : atoms.atoms)
        if (a.q_prob > 0.0) s += a.q_prob * std::exp(lam * a.value - hi);
    return hi + std::log(s);
}

inline double psi_q(const DiscreteJointModel& model, double lam) { return psi_q(llr_atoms(model), lam); }

// -((lambda-1)/2) log(1-rho^2) - (1/2) log(1 - (1-lambda)^2 rho^2)
inline double psi_q(const GaussianModel& model, double lam) {
    if (!psi_q_domain(model).contains(lam))
        throw DivergentMgfError("E_Q[exp(lambda L)] diverges for this lambda");
    const double r2 = model.rho() * model.rho();
    const double t = 1.0 - lam;
    return 0.5 * t * model.log_one_minus_rho2() - 0.5 * std::log1p(-t * t * r2);
}

inline double psi_q(const JointModel& model, double lam) {
    return std::visit([&](const auto& m) { return psi_q(m, lam); }, model);
}

inline double psi_p(const JointModel& model, double lam) { return psi_q(model, lam + 1.0); }

// -(lambda/2) log(1-rho^2) - (1/2) log(1 - lambda^2 rho^2), |lambda| < 1/|rho|.
inline double psi_p_gaussian_direct(const GaussianModel& model, double lam) {
    const double r2 = model.rho() * model.rho();
    if (!(lam * lam * r2 < 1.0)) throw DivergentMgfError("E_P[exp(lambda L)] diverges for this lambda");
    return -0.5 * lam * model.log_one_minus_rho2() - 0.5 * std::log1p(-lam * lam * r2);
}

// d/dlambda psi_Q: the mean LLR under the exponentially tilted law.
inline double psi_q_derivative(const LLRAtoms& atoms, double lam) {
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& a : atoms.atoms)
        if (a.q_prob > 0.0) hi = std::max(hi, lam * a.value);
    double num = 0.0, den = 0.0;
    for (const auto& a : atoms.atoms) {
        if (!(a.q_prob > 0.0)) continue;
        const double w = a.q_prob * std::exp(lam * a.value - hi);
        num += w * a.value;
        den += w;
    }
    return num / den;
}

inline double psi_q_derivative(const GaussianModel& model, double lam) {
    const double r2 = model.rho() * model.rho();
    const double t = 1.0 - lam;
    return -0.5 * model.log_one_minus_rho2() - t * r2 / (1.0 - t * t * r2);
}

// ---------------------------------------------------------------------------
// Chernoff exponents

enum class ExponentSide { Q, P };

struct ExponentResult {
    double theta = 0.0;
    double value = 0.0;
    double argmax_lambda = 0.0;
    int iterations = 0;
    // The maximizer sits on the wall of the MGF domain; value is the
    // boundary supremum.
    bool boundary_supremum = false;
};

namespace detail {

// Concave objective f(lambda) = lambda*theta - psi(lambda) for one side.
// psi_P(lambda) = psi_Q(lambda + 1), so side P shifts the argument and the
// domain by one.
struct LegendreProblem {
    std::function<double(double)> psi;
    std::function<double(double)> dpsi;
    LambdaDomain domain;
};

inline LegendreProblem legendre_problem(const JointModel& model, ExponentSide side) {
    const double shift = side == ExponentSide::P ? 1.0 : 0.0;
    return std::visit(
        [&](const auto& m) -> LegendreProblem {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, DiscreteJointModel>) {
                auto atoms = std::make_shared<LLRAtoms>(llr_atoms(m));
                return {[atoms, shift](double l) { return psi_q(*atoms, l + shift); },
                        [atoms, shift](double l) { return psi_q_derivative(*atoms, l + shift); },
                        LambdaDomain{}};
            } else {
                auto dom = psi_q_domain(m);
                return {[m, shift](double l) { return psi_q(m, l + shift); },
                        [m, shift](double l) { return psi_q_derivative(m, l + shift); },
                        LambdaDomain{dom.lo - shift, dom.hi - shift}};
            }
        },
        model);
}

inline constexpr double kLambdaTol = 1e-10;

// Golden-section maximization of lambda*theta - psi(lambda) on a bracket
// grown geometrically from [-1, 2] until the derivative changes sign or a
// domain wall is reached.
inline ExponentResult legendre_sup(const LegendreProblem& prob, double theta) {
    const auto& dom = prob.domain;
    auto inset = [](double wall, double toward) {
        const double eps = 1e-12 * std::max(1.0, std::abs(wall));
        return wall + (toward > wall ? eps : -eps);
    };
    const double lo_wall = std::isfinite(dom.lo) ? inset(dom.lo, 0.0) : -std::numeric_limits<double>::infinity();
    const double hi_wall = std::isfinite(dom.hi) ? inset(dom.hi, 0.0) : std::numeric_limits<double>::infinity();
    auto grad = [&](double l) { return theta - prob.dpsi(l); };
    auto f = [&](double l) { return l * theta - prob.psi(l); };

    double a = std::max(-1.0, lo_wall), b = std::min(2.0, hi_wall);
    bool a_wall = a == lo_wall, b_wall = b == hi_wall;
    int iterations = 0;
    constexpr int kMaxExpansions = 200;
    for (int e = 0; e < kMaxExpansions && !b_wall && grad(b) > 0.0; ++e, ++iterations) {
        const double next = b + 2.0 * (b - a);
        b = std::min(next, hi_wall);
        b_wall = b == hi_wall;
        if (!std::isfinite(b)) break;
    }
    for (int e = 0; e < kMaxExpansions && !a_wall && grad(a) < 0.0; ++e, ++iterations) {
        const double next = a - 2.0 * (b - a);
        a = std::max(next, lo_wall);
        a_wall = a == lo_wall;
        if (!std::isfinite(a)) break;
    }
    if (!std::isfinite(a) || !std::isfinite(b)) {
        ExponentResult r;
        r.theta = theta;
        r.value = std::numeric_limits<double>::infinity();
        r.argmax_lambda = std::isfinite(b) ? a : b;
        r.iterations = iterations;
        r.boundary_supremum = true;
        return r;
    }

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > kLambdaTol) {
        ++iterations;
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    ExponentResult r;
    r.theta = theta;
    r.argmax_lambda = 0.5 * (a + b);
    r.value = f(r.argmax_lambda);
    r.iterations = iterations;
    r.boundary_supremum = (a_wall && r.argmax_lambda - lo_wall <= 2 * kLambdaTol) ||
                          (b_wall && hi_wall - r.argmax_lambda <= 2 * kLambdaTol);
    return r;
}

}  // namespace detail

// sup_lambda lambda*theta - psi(lambda) for any theta, without the interval
// restriction of chernoff_E. Used to calibrate thresholds beyond kl_pq.
inline ExponentResult legendre_transform(const JointModel& model, double theta, ExponentSide side) {
    if (auto* dm = std::get_if<DiscreteJointModel>(&model)) dm->require_mutually_continuous();
    return detail::legendre_sup(detail::legendre_problem(model, side), theta);
}

// Chernoff exponent E_Q(theta) or E_P(theta) for theta in [-kl_qp, kl_pq].
// At the endpoints the limit values are returned directly.
inline ExponentResult chernoff_E(const JointModel& model, double theta, ExponentSide side) {
    const auto div = kl_divergences(model);
    const double lo = -div.kl_qp, hi = div.kl_pq;
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
    if (!std::isfinite(theta) || (theta < lo && !near(theta, lo)) || (theta > hi && !near(theta, hi)))
        throw DomainError("theta must lie in [-D(Q||P), D(P||Q)]");
    ExponentResult r;
    r.theta = theta;
    if (near(theta, lo)) {
        r.argmax_lambda = side == ExponentSide::Q ? 0.0 : -1.0;
        r.value = side == ExponentSide::Q ? 0.0 : div.kl_qp;
        return r;
    }
    if (near(theta, hi)) {
        r.argmax_lambda = side == ExponentSide::Q ? 1.0 : 0.0;
        r.value = side == ExponentSide::Q ? div.kl_pq : 0.0;
        return r;
    }
    r = detail::legendre_sup(detail::legendre_problem(model, side), theta);
    r.value = std::max(0.0, r.value);
    return r;
}

// ---------------------------------------------------------------------------
// Centered kernel K(x, y) = L(x,y) - E_A[L(A,y)] - E_B[L(x,B)] - D(Q||P),
// A, B ~ P_X. Mean zero under Q.

class CenteredKernel {
public:
    explicit CenteredKernel(const DiscreteJointModel& model) : model_(model) {
        model.require_mutually_continuous();
        const std::size_t m = model.alphabet_size();
        const auto q = model.marginal();
        const double kl_qp = kl_divergences(model).kl_qp;
        std::vector<double> row_mean(m, 0.0);
        for (std::size_t x = 0; x < m; ++x)
            for (std::size_t y = 0; y < m; ++y)
                if (q[x] > 0.0 && q[y] > 0.0) row_mean[x] += q[y] * model.llr_unchecked(x, y);
        // Symmetric model: E_A[L(A, y)] == row_mean[y].
        table_.assign(m * m, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t x = 0; x < m; ++x)
            for (std::size_t y = 0; y < m; ++y)
                if (q[x] > 0.0 && q[y] > 0.0)
                    table_[x * m + y] = model.llr_unchecked(x, y) - row_mean[y] - row_mean[x] - kl_qp;
    }

    double operator()(std::size_t x, std::size_t y) const {
        const std::size_t m = model_.alphabet_size();
        if (x >= m || y >= m || std::isnan(table_[x * m + y])) throw DomainError("symbol outside the model support");
        return table_[x * m + y];
    }

    double unchecked(std::size_t x, std::size_t y) const { return table_[x * model_.alphabet_size() + y]; }

private:
    DiscreteJointModel model_;
    std::vector<double> table_;
};

inline double centered_kernel(const DiscreteJointModel& model, double x, double y) {
    auto idx = [&](double v) {
        if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(model.alphabet_size()))
            throw DomainError("symbol outside the model support");
        return static_cast<std::size_t>(v);
    };
    return CenteredKernel(model)(idx(x), idx(y));
}

// rho/(1-rho^2) x y
inline double centered_kernel(const GaussianModel& model, double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw DomainError("Gaussian observations must be finite");
    return model.rho() / model.one_minus_rho2() * x * y;
}

inline double centered_kernel(const JointModel& model, double x, double y) {
    return std::visit([&](const auto& m) { return centered_kernel(m, x, y); }, model);
}

inline double var_q_centered_kernel(const DiscreteJointModel& model) {
    const CenteredKernel k(model);
    const std::size_t m = model.alphabet_size();
    const auto q = model.marginal();
    double mean = 0.0, second = 0.0;
    for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = 0; y < m; ++y) {
            if (!(q[x] * q[y] > 0.0)) continue;
            const double v = k.unchecked(x, y);
            mean += q[x] * q[y] * v;
            second += q[x] * q[y] * v * v;
        }
    return second - mean * mean;
}

// rho^2 / (1-rho^2)^2
inline double var_q_centered_kernel(const GaussianModel& model) {
    const double c = model.one_minus_rho2();
    return model.rho() * model.rho() / (c * c);
}

inline double var_q_centered_kernel(const JointModel& model) {
    return std::visit([](const auto& m) { return var_q_centered_kernel(m); }, model);
}

}  // namespace dbalign
