#pragma once
// Theory summary for one (model, n, d): impossibility statistics, moment
// bounds, detector guarantees and exponents, as a JSON record.

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "dbalign/error.hpp"
#include "dbalign/exponents.hpp"
#include "dbalign/models.hpp"
#include "dbalign/spectral.hpp"

namespace dbalign {

using Json = nlohmann::ordered_json;

// Non-finite doubles become the strings "inf", "-inf" and "nan".
inline Json json_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline SpectralProfile spectral_profile(const JointModel& model) {
    if (const auto* g = std::get_if<GaussianModel>(&model)) return gaussian_profile(g->rho());
    return eigenvalues(std::get<DiscreteJointModel>(model));
}

struct BoundOptions {
    double tau_glrt = 0.0;
    double tau_count = 0.0;
    Capacity capacity = default_capacity();
};

namespace detail {

// Evaluates fn into the record, or a note when the quantity is unavailable.
inline void put(Json& obj, Json& notes, const std::string& key, const std::function<Json()>& fn) {
    try {
        obj[key] = fn();
    } catch (const CapacityError& e) {
        obj[key] = nullptr;
        notes[key] = std::string("capacity: ") + e.what();
    } catch (const Error& e) {
        obj[key] = nullptr;
        notes[key] = e.what();
    }
}

// Outside [-D(Q||P), D(P||Q)] the unrestricted Legendre transform is reported.
inline Json exponent_json(const JointModel& model, double theta, ExponentSide side) {
    const auto div = kl_divergences(model);
    const bool inside = theta >= -div.kl_qp && theta <= div.kl_pq;
    const auto r = inside ? chernoff_E(model, theta, side) : legendre_transform(model, theta, side);
    Json j;
    if (!inside) j["outside_chernoff_interval"] = true;
    j["value"] = json_number(r.value);
    j["argmax_lambda"] = json_number(r.argmax_lambda);
    if (r.boundary_supremum) j["boundary_supremum"] = true;
    return j;
}

}  // namespace detail

inline Json bound_report(const JointModel& model, int n, int d, const BoundOptions& opt = {}) {
    if (n < 1 || d < 1) throw ValidationError("n and d must be at least 1");
    const double dn = static_cast<double>(d), nn = static_cast<double>(n);
    Json r, notes = Json::object();
    r["model_kind"] = model_kind(model);
    r["pearson_rho"] = json_number(pearson_rho(model));
    r["n"] = n;
    r["d"] = d;

    const SpectralProfile profile = spectral_profile(model);
    Json ev = Json::array();
    for (double v : profile.eigenvalues()) ev.push_back(json_number(v));
    r["eigenvalues"] = ev;
    if (profile.source() == SpectrumSource::gaussian_truncated) {
        r["eigenvalues_truncated_below"] = profile.truncation_tol();
        r["weak_lb_tail_bound"] = json_number(weak_lb_tail_bound(profile));
    }
    detail::put(r, notes, "weak_lb_statistic", [&] { return json_number(weak_lb_statistic(profile)); });
    detail::put(r, notes, "d_times_weak_lb_statistic", [&] { return json_number(dn * weak_lb_statistic(profile)); });
    detail::put(r, notes, "strong_lb_fixed_d_threshold", [&] { return json_number(strong_lb_fixed_d_threshold(profile)); });
    detail::put(r, notes, "second_moment_exact",
                [&] { return json_number(second_moment_exact(profile, n, d, opt.capacity)); });
    detail::put(r, notes, "risk_lower_bound", [&] {
        return json_number(risk_lower_bound_from_moment(second_moment_exact(profile, n, d, opt.capacity)));
    });
    detail::put(r, notes, "poisson_surrogate_moment", [&] { return json_number(poisson_surrogate_moment(profile, n, d)); });
    detail::put(r, notes, "bound_B", [&] { return json_number(bound_B(profile, d)); });

    Divergences div{};
    bool have_div = false;
    detail::put(r, notes, "kl", [&] {
        div = kl_divergences(model);
        have_div = true;
        Json j;
        j["kl_pq"] = json_number(div.kl_pq);
        j["kl_qp"] = json_number(div.kl_qp);
        j["skl"] = json_number(div.skl);
        return j;
    });
    detail::put(r, notes, "var_q_centered_kernel", [&] { return json_number(var_q_centered_kernel(model)); });
    detail::put(r, notes, "sum_test_risk_upper_bound", [&] {
        if (!have_div || !(div.skl > 0.0))
            throw DegenerateModelError("degenerate model: SKL = 0, no sum-test guarantee");
        return json_number(4.0 * var_q_centered_kernel(model) / (dn * div.skl * div.skl));
    });

    detail::put(r, notes, "glrt_condition", [&] {
        Json j;
        j["tau_glrt"] = opt.tau_glrt;
        j["E_Q"] = detail::exponent_json(model, opt.tau_glrt, ExponentSide::Q);
        j["E_Q_required"] = json_number(std::log(nn / std::exp(1.0)) / dn + (1.0 + std::log(nn)) / (dn * nn));
        j["E_P"] = detail::exponent_json(model, opt.tau_glrt, ExponentSide::P);
        j["E_P_scale"] = json_number(1.0 / (dn * nn));
        return j;
    });
    detail::put(r, notes, "count_exponents", [&] {
        Json j;
        j["tau_count"] = opt.tau_count;
        j["E_Q"] = detail::exponent_json(model, opt.tau_count, ExponentSide::Q);
        j["E_P"] = detail::exponent_json(model, opt.tau_count, ExponentSide::P);
        j["log_n_over_d"] = json_number(std::log(nn) / dn);
        return j;
    });

    if (const auto* g = std::get_if<GaussianModel>(&model)) {
        // Lower bounds on E_Q(0) from a single lambda against the exact supremum.
        detail::put(r, notes, "gaussian_E_Q_at_zero", [&] {
            const double l = g->log_one_minus_rho2();
            const double rho2 = g->rho() * g->rho();
            Json j;
            j["exact"] = json_number(chernoff_E(model, 0.0, ExponentSide::Q).value);
            j["witness_lambda_half"] = json_number(-psi_q(*g, 0.5));
            j["witness_lambda_half_closed_form"] = json_number(-0.25 * l + 0.5 * std::log1p(-rho2 / 4.0));
            j["leading_term"] = json_number(-0.25 * l);
            return j;
        });
    }

    r["notes"] = notes;
    r["risk_notion"] =
        "average risk over uniform sigma; all detectors are invariant to row permutations of Y, so average and "
        "worst-case type-II errors coincide";
    return r;
}

}  // namespace dbalign
