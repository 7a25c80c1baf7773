#pragma once
// The dbalign command line: validate, sample, detect, risk, sweep, bounds,
// chernoff and tv-oracle.
//
// Exit codes: 0 success, 1 invalid input, 2 capacity exceeded.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dbalign/config.hpp"
#include "dbalign/detectors.hpp"
#include "dbalign/error.hpp"
#include "dbalign/experiments.hpp"
#include "dbalign/exponents.hpp"
#include "dbalign/io.hpp"
#include "dbalign/models.hpp"
#include "dbalign/plan.hpp"
#include "dbalign/report.hpp"
#include "dbalign/spectral.hpp"

namespace dbalign {

namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitCapacity = 2;

struct Options {
    std::string model_path, plan_path, out_path, format;
    std::string x_path, y_path, sigma_path, hypothesis = "h1";
    std::optional<std::size_t> n, d, trials, pd_samples;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> detectors;
    std::optional<double> tau;
    std::optional<std::string> tau_count, pd_method;
    std::vector<std::string> theta;
    unsigned threads = 0;
};

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw ValidationError("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }

private:
    std::ofstream file_;
    std::ostream& fallback_;
};

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + path + "'");
    f << text;
}

inline std::string require_format(const std::string& format, std::initializer_list<const char*> allowed,
                                  const char* fallback) {
    if (format.empty()) return fallback;
    for (const char* a : allowed)
        if (format == a) return format;
    throw ValidationError("unsupported --format '" + format + "' for this subcommand");
}

inline std::uint64_t need_seed(const Options& o) {
    if (!o.seed) throw ValidationError("--seed is required for this subcommand");
    return *o.seed;
}

inline std::size_t need(const std::optional<std::size_t>& v, const char* flag) {
    if (!v) throw ValidationError(std::string(flag) + " is required");
    if (*v < 1) throw ValidationError(std::string(flag) + " must be at least 1");
    return *v;
}

inline ModelSpec need_model(const Options& o) {
    if (o.model_path.empty()) throw ValidationError("--model is required");
    return load_model(o.model_path);
}

// Applies --detector/--tau/--tau-count/--pd-method/--pd-samples to detector configs.
inline void apply_detector_flags(const Options& o, std::vector<DetectorConfig>& dets) {
    if (!o.detectors.empty()) {
        dets.clear();
        for (const auto& name : o.detectors) {
            DetectorConfig dc;
            dc.kind = parse_detector(name);
            dets.push_back(dc);
        }
    }
    for (auto& dc : dets) {
        if (o.tau && (dc.kind == DetectorKind::glrt || dc.kind == DetectorKind::sum)) dc.tau = o.tau;
        if (dc.kind == DetectorKind::count) {
            if (o.tau_count) dc.tau_count = parse_tau_count(*o.tau_count);
            if (o.pd_method) dc.pd_method = parse_pd_method(*o.pd_method);
            if (o.pd_samples) dc.pd_samples = *o.pd_samples;
        }
    }
}

inline TrialPlan plan_from_options(const Options& o) {
    TrialPlan plan;
    if (!o.plan_path.empty()) {
        if (!o.model_path.empty()) throw ValidationError("give either --plan or --model, not both");
        plan = load_plan(o.plan_path);
        if (o.n) plan.n = *o.n;
        if (o.d) plan.d = *o.d;
        if (o.seed) plan.seed = *o.seed;
    } else {
        plan.model = need_model(o);
        plan.n = need(o.n, "--n");
        plan.d = need(o.d, "--d");
        plan.seed = need_seed(o);
        if (o.detectors.empty()) throw ValidationError("--detector is required without --plan");
    }
    if (o.trials) plan.trials = *o.trials;
    apply_detector_flags(o, plan.detectors);
    plan.validate();
    return plan;
}

inline int cmd_validate(const Options& o, std::ostream& out) {
    if (!o.plan_path.empty()) {
        const auto plan = load_plan(o.plan_path);
        const auto model = plan.model.build();
        if (const auto* dm = std::get_if<DiscreteJointModel>(&model)) dm->require_mutually_continuous();
        out << "ok: plan " << o.plan_path << " (" << to_string(plan.model.kind) << " model, " << plan.detectors.size()
            << " detector(s), " << plan.trials << " trials" << (plan.sweep ? ", sweep" : "") << ")\n";
        return kExitOk;
    }
    const auto spec = need_model(o);
    const auto model = spec.build();
    if (const auto* dm = std::get_if<DiscreteJointModel>(&model)) {
        try {
            dm->require_mutually_continuous();
        } catch (const Error& e) {
            throw ValidationError(o.model_path + ": " + e.what());
        }
    }
    out << "ok: " << to_string(spec.kind) << " model, pearson rho " << format_double(pearson_rho(model)) << '\n';
    return kExitOk;
}

inline int cmd_sample(const Options& o, std::ostream&) {
    const auto model = need_model(o).build();
    const std::size_t n = need(o.n, "--n"), d = need(o.d, "--d");
    const std::uint64_t seed = need_seed(o);
    if (o.x_path.empty() || o.y_path.empty()) throw ValidationError("--x and --y output paths are required");
    DatabasePair pair;
    if (o.hypothesis == "h0") {
        if (!o.sigma_path.empty()) throw ValidationError("--sigma applies only to --hypothesis h1");
        pair = sample_null(model, n, d, seed);
    } else if (o.hypothesis == "h1") {
        pair = sample_alt(model, n, d, seed);
    } else {
        throw ValidationError("--hypothesis must be h0 or h1");
    }
    std::ostringstream xs, ys;
    write_matrix_csv(xs, pair.x);
    write_matrix_csv(ys, pair.y);
    write_text_file(o.x_path, xs.str());
    write_text_file(o.y_path, ys.str());
    if (!o.sigma_path.empty()) {
        std::ostringstream ss;
        write_permutation(ss, *pair.hidden_sigma);
        write_text_file(o.sigma_path, ss.str());
    }
    return kExitOk;
}

inline Json verdict_json(const Verdict& v, const std::optional<CountTestPlan>& plan) {
    Json j;
    j["detector"] = to_string(v.detector);
    j["decision"] = v.decision ? 1 : 0;
    j["statistic"] = json_number(v.statistic);
    j["threshold"] = json_number(v.threshold);
    if (v.permutation) j["permutation"] = *v.permutation;
    if (v.count) j["count"] = *v.count;
    if (plan) {
        j["tau_count"] = json_number(plan->tau_count);
        j["pd"] = json_number(plan->pd);
        j["pd_stderr"] = json_number(plan->pd_stderr);
    }
    return j;
}

// Evaluates the configured detectors on one pair, as `detect` does.
inline Json detect_pair(const JointModel& model, const DatabasePair& pair, const std::vector<DetectorConfig>& dets,
                        std::uint64_t seed) {
    Json arr = Json::array();
    for (const auto& dc : dets) {
        switch (dc.kind) {
            case DetectorKind::glrt: arr.push_back(verdict_json(glrt(model, pair, dc.tau.value_or(0.0)), {})); break;
            case DetectorKind::sum: arr.push_back(verdict_json(sum_test(model, pair, dc.tau), {})); break;
            case DetectorKind::count: {
                const double tau = resolve_tau_count(dc.tau_count, model, pair.n(), pair.d());
                const auto kind = dc.pd_method.value_or(std::holds_alternative<GaussianModel>(model)
                                                            ? PdMethod::Kind::monte_carlo
                                                            : PdMethod::Kind::exact_convolution);
                const auto method = kind == PdMethod::Kind::exact_convolution
                                        ? PdMethod::exact()
                                        : PdMethod::monte_carlo(dc.pd_samples, seed);
                const auto plan = make_count_plan(model, pair.d(), tau, method);
                arr.push_back(verdict_json(count_test(model, pair, plan), plan));
                break;
            }
            case DetectorKind::np: arr.push_back(verdict_json(np_oracle(model, pair), {})); break;
        }
    }
    return arr;
}

inline int cmd_detect(const Options& o, std::ostream& out) {
    require_format(o.format, {"json"}, "json");
    const auto model = need_model(o).build();
    if (o.x_path.empty() || o.y_path.empty()) throw ValidationError("--x and --y input paths are required");
    DatabasePair pair{load_matrix_csv(o.x_path), load_matrix_csv(o.y_path), std::nullopt};
    require_same_shape(pair.x, pair.y);
    std::vector<DetectorConfig> dets;
    if (o.detectors.empty()) throw ValidationError("--detector is required");
    apply_detector_flags(o, dets);
    std::uint64_t seed = o.seed.value_or(0);
    for (const auto& dc : dets)
        if (dc.kind == DetectorKind::count && (dc.pd_method ? *dc.pd_method == PdMethod::Kind::monte_carlo
                                                            : std::holds_alternative<GaussianModel>(model)))
            seed = need_seed(o);
    Output dst(o.out_path, out);
    dst.stream() << detect_pair(model, pair, dets, seed).dump(2) << '\n';
    return kExitOk;
}

inline int cmd_risk(const Options& o, std::ostream& out) {
    const auto format = require_format(o.format, {"csv", "json"}, "csv");
    auto plan = plan_from_options(o);
    plan.sweep.reset();
    const auto rows = estimate_risk(plan, o.threads);
    Output dst(o.out_path, out);
    if (format == "csv") {
        dst.stream() << kRiskCsvHeader << '\n';
        for (const auto& r : rows) write_risk_csv_row(dst.stream(), r);
    } else {
        Json arr = Json::array();
        for (const auto& r : rows) arr.push_back(risk_json(r));
        dst.stream() << arr.dump(2) << '\n';
    }
    return kExitOk;
}

inline int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
    const auto format = require_format(o.format, {"csv", "json"}, "csv");
    if (o.plan_path.empty()) throw ValidationError("--plan is required");
    const auto plan = plan_from_options(o);
    if (!plan.sweep) throw ValidationError(o.plan_path + ": plan has no [sweep] section");
    const auto rows = sweep(plan, o.threads);
    std::size_t failed = 0, capacity = 0;
    for (const auto& r : rows)
        if (!r.estimate) {
            ++failed;
            if (r.capacity_error) ++capacity;
        }
    Output dst(o.out_path, out);
    if (format == "csv")
        write_sweep_csv(dst.stream(), rows);
    else
        dst.stream() << sweep_json(rows).dump(2) << '\n';
    if (failed == rows.size()) {
        err << "error: every sweep point failed; first error: " << rows.front().error << '\n';
        return capacity == failed ? kExitCapacity : kExitInvalid;
    }
    if (failed > 0) err << "warning: " << failed << " of " << rows.size() << " sweep rows failed\n";
    return kExitOk;
}

inline int cmd_bounds(const Options& o, std::ostream& out) {
    require_format(o.format, {"json"}, "json");
    const auto model = need_model(o).build();
    BoundOptions opt;
    if (o.tau) opt.tau_glrt = *o.tau;
    if (o.tau_count) {
        const auto rule = parse_tau_count(*o.tau_count);
        opt.tau_count = resolve_tau_count(rule, model, need(o.n, "--n"), need(o.d, "--d"));
    }
    const auto report = bound_report(model, static_cast<int>(need(o.n, "--n")), static_cast<int>(need(o.d, "--d")), opt);
    Output dst(o.out_path, out);
    dst.stream() << report.dump(2) << '\n';
    return kExitOk;
}

inline int cmd_chernoff(const Options& o, std::ostream& out) {
    const auto format = require_format(o.format, {"csv", "json"}, "csv");
    const auto model = need_model(o).build();
    if (o.theta.empty()) throw ValidationError("--theta is required");
    std::vector<double> thetas;
    for (const auto& t : o.theta) {
        const auto v = parse_number_list(t);
        thetas.insert(thetas.end(), v.begin(), v.end());
    }
    Output dst(o.out_path, out);
    Json arr = Json::array();
    if (format == "csv") dst.stream() << "theta,E_Q,E_P,argmax_lambda\n";
    for (double th : thetas) {
        const auto q = chernoff_E(model, th, ExponentSide::Q);
        const auto p = chernoff_E(model, th, ExponentSide::P);
        if (format == "csv") {
            dst.stream() << format_double(th) << ',' << format_double(q.value) << ',' << format_double(p.value) << ','
                         << format_double(q.argmax_lambda) << '\n';
        } else {
            Json j;
            j["theta"] = json_number(th);
            j["E_Q"] = json_number(q.value);
            j["E_P"] = json_number(p.value);
            j["argmax_lambda"] = json_number(q.argmax_lambda);
            arr.push_back(j);
        }
    }
    if (format == "json") dst.stream() << arr.dump(2) << '\n';
    return kExitOk;
}

inline int cmd_tv_oracle(const Options& o, std::ostream& out) {
    require_format(o.format, {"json"}, "json");
    const auto model = need_model(o).build();
    const auto* dm = std::get_if<DiscreteJointModel>(&model);
    if (!dm) throw ValidationError("tv-oracle needs a discrete or bernoulli model");
    const int n = static_cast<int>(need(o.n, "--n")), d = static_cast<int>(need(o.d, "--d"));
    const auto tv = exact_tv_small(*dm, n, d);
    const double m2 = second_moment_exact(eigenvalues(*dm), n, d);
    Json j;
    j["n"] = n;
    j["d"] = d;
    j["tv"] = json_number(tv.tv);
    j["bayes_risk"] = json_number(tv.bayes_risk);
    j["second_moment_exact"] = json_number(m2);
    j["risk_lower_bound"] = json_number(risk_lower_bound_from_moment(m2));
    Output dst(o.out_path, out);
    dst.stream() << j.dump(2) << '\n';
    return kExitOk;
}

}  // namespace cli

// args excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace cli;
    CLI::App app{"Detection of dependence between row-shuffled databases", "dbalign"};
    app.require_subcommand(1);
    Options o;

    auto add_model = [&](CLI::App* s) { s->add_option("--model", o.model_path, "Model file")->check(CLI::ExistingFile); };
    auto add_nd = [&](CLI::App* s) {
        s->add_option("--n", o.n, "Number of rows");
        s->add_option("--d", o.d, "Number of features");
    };
    auto add_out = [&](CLI::App* s, const char* formats) {
        s->add_option("--out", o.out_path, "Output path (default stdout)");
        s->add_option("--format", o.format, formats);
    };
    auto add_detectors = [&](CLI::App* s) {
        s->add_option("--detector", o.detectors, "glrt, sum, count or np (repeatable)");
        s->add_option("--tau", o.tau, "Threshold for glrt and sum (defaults: 0 and d n SKL)");
        s->add_option("--tau-count", o.tau_count, "Count-test threshold: a number or chernoff:K");
        s->add_option("--pd-method", o.pd_method, "P_d method: exact or monte-carlo");
        s->add_option("--pd-samples", o.pd_samples, "Monte-Carlo samples for P_d");
    };
    auto add_seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "64-bit seed"); };

    auto* validate = app.add_subcommand("validate", "Check a model or plan file");
    add_model(validate);
    validate->add_option("--plan", o.plan_path, "Plan file")->check(CLI::ExistingFile);

    auto* sample = app.add_subcommand("sample", "Draw a database pair under H0 or H1");
    add_model(sample);
    add_nd(sample);
    add_seed(sample);
    sample->add_option("--hypothesis", o.hypothesis, "h0 or h1 (default h1)");
    sample->add_option("--x", o.x_path, "Output CSV for X");
    sample->add_option("--y", o.y_path, "Output CSV for Y");
    sample->add_option("--sigma", o.sigma_path, "Output file for the hidden permutation (h1)");

    auto* detect = app.add_subcommand("detect", "Run detectors on a database pair");
    add_model(detect);
    detect->add_option("--x", o.x_path, "CSV matrix X")->check(CLI::ExistingFile);
    detect->add_option("--y", o.y_path, "CSV matrix Y")->check(CLI::ExistingFile);
    add_detectors(detect);
    add_seed(detect);
    add_out(detect, "json");

    auto* risk = app.add_subcommand("risk", "Monte-Carlo risk of detectors at one point");
    add_model(risk);
    risk->add_option("--plan", o.plan_path, "Plan file")->check(CLI::ExistingFile);
    add_nd(risk);
    add_seed(risk);
    risk->add_option("--trials", o.trials, "Trials per hypothesis");
    add_detectors(risk);
    risk->add_option("--threads", o.threads, "Worker threads (default DBALIGN_THREADS or all cores)");
    add_out(risk, "csv or json");

    auto* sw = app.add_subcommand("sweep", "Risk over the plan's [sweep] grid");
    sw->add_option("--plan", o.plan_path, "Plan file")->check(CLI::ExistingFile);
    add_seed(sw);
    sw->add_option("--trials", o.trials, "Trials per hypothesis");
    add_detectors(sw);
    sw->add_option("--threads", o.threads, "Worker threads (default DBALIGN_THREADS or all cores)");
    add_out(sw, "csv or json");

    auto* bounds = app.add_subcommand("bounds", "Theoretical bound report (JSON)");
    add_model(bounds);
    add_nd(bounds);
    bounds->add_option("--tau", o.tau, "GLRT threshold for the exponent conditions (default 0)");
    bounds->add_option("--tau-count", o.tau_count, "Count threshold: a number or chernoff:K (default 0)");
    add_out(bounds, "json");

    auto* chernoff = app.add_subcommand("chernoff", "Chernoff exponents on a theta grid");
    add_model(chernoff);
    chernoff->add_option("--theta", o.theta, "Theta values: list or start:stop:step (repeatable)");
    add_out(chernoff, "csv or json");

    auto* tv = app.add_subcommand("tv-oracle", "Exact total variation and Bayes risk (tiny discrete instances)");
    add_model(tv);
    add_nd(tv);
    add_out(tv, "json");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (*validate) return cmd_validate(o, out);
        if (*sample) return cmd_sample(o, out);
        if (*detect) return cmd_detect(o, out);
        if (*risk) return cmd_risk(o, out);
        if (*sw) return cmd_sweep(o, out, err);
        if (*bounds) return cmd_bounds(o, out);
        if (*chernoff) return cmd_chernoff(o, out);
        if (*tv) return cmd_tv_oracle(o, out);
    } catch (const CapacityError& e) {
        err << "capacity error: " << e.what() << '\n';
        return kExitCapacity;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    return kExitInvalid;
}

}  // namespace dbalign
