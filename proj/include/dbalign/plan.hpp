#pragma once
// Model and experiment descriptions as read from plan/model files.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dbalign/detectors.hpp"
#include "dbalign/error.hpp"
#include "dbalign/exponents.hpp"
#include "dbalign/models.hpp"

namespace dbalign {

enum class ModelKind { gaussian, bernoulli, discrete };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::gaussian: return "gaussian";
        case ModelKind::bernoulli: return "bernoulli";
        case ModelKind::discrete: return "discrete";
    }
    return "?";
}

// Parameterized model family member; `build` yields the validated model.
struct ModelSpec {
    ModelKind kind = ModelKind::gaussian;
    double rho = 0.5;                 // gaussian
    double tau = 0.5, p = 0.5;        // bernoulli
    std::size_t alphabet_size = 0;    // discrete
    std::vector<double> joint;        // discrete, row-major
    std::optional<std::vector<double>> marginal;

    static ModelSpec gaussian(double rho) {
        ModelSpec s;
        s.kind = ModelKind::gaussian;
        s.rho = rho;
        return s;
    }
    static ModelSpec bernoulli(double tau, double p) {
        ModelSpec s;
        s.kind = ModelKind::bernoulli;
        s.tau = tau;
        s.p = p;
        return s;
    }
    static ModelSpec discrete(std::size_t m, std::vector<double> joint) {
        ModelSpec s;
        s.kind = ModelKind::discrete;
        s.alphabet_size = m;
        s.joint = std::move(joint);
        return s;
    }

    JointModel build() const {
        switch (kind) {
            case ModelKind::gaussian: return GaussianModel::make(rho);
            case ModelKind::bernoulli: return make_bernoulli(tau, p);
            case ModelKind::discrete: return DiscreteJointModel::from_joint(alphabet_size, joint, marginal);
        }
        throw ValidationError("unknown model kind");
    }

    // The swept parameter: rho (gaussian) or tau (bernoulli); NaN for discrete.
    double param() const {
        switch (kind) {
            case ModelKind::gaussian: return rho;
            case ModelKind::bernoulli: return tau;
            default: return std::numeric_limits<double>::quiet_NaN();
        }
    }

    ModelSpec with_param(double value) const {
        ModelSpec s = *this;
        if (kind == ModelKind::gaussian)
            s.rho = value;
        else if (kind == ModelKind::bernoulli)
            s.tau = value;
        else
            throw ValidationError("discrete models have no sweepable parameter");
        return s;
    }
};

// How tau_count is chosen for a given (model, n, d).
struct TauCountRule {
    enum class Kind { fixed, chernoff };
    Kind kind = Kind::chernoff;
    // fixed: the threshold itself; chernoff: kappa in d * E_Q(tau) = kappa * log n.
    double value = 2.0;

    static TauCountRule fixed(double tau) { return {Kind::fixed, tau}; }
    static TauCountRule chernoff(double kappa) { return {Kind::chernoff, kappa}; }
};

// Solves d * E_Q(tau) = kappa * log(n) for tau >= -D(Q||P), where E_Q is the
// (unrestricted) Legendre transform of psi_Q. E_Q is increasing there. If the
// target exceeds every finite value of E_Q, the largest tau with finite
// exponent is returned.
inline double chernoff_calibrated_tau(const JointModel& model, std::size_t n, std::size_t d, double kappa) {
    if (!(kappa >= 0.0)) throw ValidationError("chernoff calibration constant must be nonnegative");
    const auto div = kl_divergences(model);
    const double target = kappa * std::log(static_cast<double>(n)) / static_cast<double>(d);
    const double lo0 = -div.kl_qp;
    if (target <= 0.0) return lo0;
    auto eq = [&](double theta) { return legendre_transform(model, theta, ExponentSide::Q); };
    double lo = lo0;
    double hi = div.kl_pq;
    double step = std::max(div.kl_pq + div.kl_qp, 1e-6);
    // Past the largest atom a discrete exponent is infinite.
    double cap = std::numeric_limits<double>::infinity();
    if (const auto* dm = std::get_if<DiscreteJointModel>(&model)) cap = llr_atoms(*dm).atoms.back().value;
    for (int it = 0; it < 200; ++it) {
        const auto r = eq(hi);
        if (std::isfinite(r.value) && r.value >= target) break;
        lo = hi;
        if (hi >= cap) return cap;
        hi = std::min(hi + step, cap);
        step *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto r = eq(mid);
        if (std::isfinite(r.value) && r.value < target)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

inline double resolve_tau_count(const TauCountRule& rule, const JointModel& model, std::size_t n, std::size_t d) {
    if (rule.kind == TauCountRule::Kind::fixed) return rule.value;
    return chernoff_calibrated_tau(model, n, d, rule.value);
}

struct DetectorConfig {
    DetectorKind kind = DetectorKind::sum;
    // glrt: tau_GLRT (default 0); sum: override of d n SKL; unused otherwise.
    std::optional<double> tau;
    TauCountRule tau_count;
    // nullopt: exact for discrete models, monte-carlo for Gaussian.
    std::optional<PdMethod::Kind> pd_method;
    std::uint64_t pd_samples = 1'000'000;
};

struct SweepGrid {
    std::vector<double> params;   // rho or tau; empty = the model's own
    std::vector<std::size_t> ds;  // empty = plan d
    std::vector<std::size_t> ns;  // empty = plan n
};

struct TrialPlan {
    ModelSpec model;
    std::size_t n = 100;
    std::size_t d = 1;
    std::vector<DetectorConfig> detectors;
    std::size_t trials = 2000;
    std::uint64_t seed = 0;
    std::optional<SweepGrid> sweep;

    void validate() const {
        if (n < 1) throw ValidationError("plan: n must be at least 1");
        if (d < 1) throw ValidationError("plan: d must be at least 1");
        if (trials < 1) throw ValidationError("plan: trials must be at least 1");
        if (trials >= (std::size_t{1} << 32)) throw ValidationError("plan: trials must be below 2^32");
        if (detectors.empty()) throw ValidationError("plan: at least one detector is required");
        if (sweep && sweep->params.empty() && sweep->ds.empty() && sweep->ns.empty())
            throw ValidationError("plan: sweep grid is empty");
    }
};

}  // namespace dbalign
