// Acceptance checks, one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dbalign/dbalign.hpp"
#include "oracles.hpp"

using namespace dbalign;
namespace fs = std::filesystem;

namespace {

// Collects failed sub-checks for one criterion.
struct Check {
    std::vector<std::string> failures;
    std::string summary;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

std::string fmt(double v, int prec = 6) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<DiscreteJointModel> binary_models() {
    return {make_bernoulli(0.5, 0.5), DiscreteJointModel::from_joint(2, {0.4, 0.1, 0.1, 0.4}),
            make_bernoulli(0.9, 0.3), make_bernoulli(0.2, 0.7), DiscreteJointModel::from_joint(2, {0.3, 0.2, 0.2, 0.3})};
}

// 1. Second moment vs database + permutation enumeration.
void criterion1(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (const auto& model : binary_models())
        for (int n : {2, 3, 4})
            for (int d : {1, 2}) {
                const double exact = second_moment_exact(eigenvalues(model), n, d);
                const double brute = oracle::second_moment_bruteforce(model, n, d);
                worst = std::max(worst, std::abs(exact - brute));
                c.expect(std::abs(exact - brute) <= 1e-9, "n=" + std::to_string(n) + " d=" + std::to_string(d) +
                                                               " exact " + fmt(exact, 17) + " brute " + fmt(brute, 17));
            }
    const double t = seconds_since(t0);
    c.expect(t < 10.0, "runtime " + fmt(t) + " s");
    c.summary = "max |diff| " + fmt(worst, 3) + ", " + fmt(t, 3) + " s";
}

// 2. Eigenvalue closed forms.
void criterion2(Check& c) {
    double worst_b = 0.0, worst_g = 0.0;
    int points = 0;
    for (double tau : {0.1, 0.3, 0.5, 0.7, 0.9})
        for (double p : {0.2, 0.4, 0.6, 0.8}) {
            ++points;
            const auto ev = eigenvalues(make_bernoulli(tau, p)).eigenvalues();
            const double expected = tau * (1 - p) / (1 - tau * p);
            c.expect(ev.size() == 2, "bernoulli profile size");
            if (ev.size() != 2) continue;
            worst_b = std::max({worst_b, std::abs(ev[0] - 1.0), std::abs(ev[1] - expected)});
        }
    c.expect(points == 20, "grid size");
    c.expect(worst_b <= 1e-12, "bernoulli max error " + fmt(worst_b, 3));
    for (int k = -9; k <= 9; ++k) {
        if (k == 0) continue;
        const double rho = 0.1 * k;
        const auto prof = gaussian_profile(rho);
        std::vector<double> powers;
        for (std::size_t l = 0; l < prof.eigenvalues().size(); ++l) powers.push_back(std::pow(rho, static_cast<double>(l)));
        std::sort(powers.begin(), powers.end(), std::greater<>());
        c.expect(prof.eigenvalues() == powers, "gaussian entries differ from rho^l at rho=" + fmt(rho));
        const double diff = std::abs(std::exp(psi_q(GaussianModel::make(rho), 2.0)) - prof.power_sum(1));
        worst_g = std::max(worst_g, diff);
        c.expect(diff <= 1e-8, "exp(psi_Q(2)) vs sum lambda^2 at rho=" + fmt(rho) + ": " + fmt(diff, 3));
    }
    c.summary = "bernoulli max error " + fmt(worst_b, 3) + ", gaussian trace error " + fmt(worst_g, 3);
}

// 3. Exponent identities.
void criterion3(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<JointModel> models = {GaussianModel::make(0.3), GaussianModel::make(0.6), GaussianModel::make(0.9),
                                      GaussianModel::make(-0.5)};
    for (const auto& m : binary_models()) models.emplace_back(m);
    models.emplace_back(DiscreteJointModel::from_joint(3, {0.2, 0.05, 0.05, 0.05, 0.2, 0.05, 0.05, 0.05, 0.3}));

    int psi_checks = 0, e_checks = 0;
    for (const auto& m : models) {
        c.expect(std::abs(psi_q(m, 0.0)) <= 1e-9 && std::abs(psi_q(m, 1.0)) <= 1e-9, "psi_Q(0), psi_Q(1)");
        for (int k = 0; k <= 24; ++k) {
            const double lam = -2.0 + 0.125 * k;
            std::optional<double> q, p;
            try {
                q = psi_q(m, lam + 1.0);
            } catch (const DivergentMgfError&) {
            }
            try {
                p = std::holds_alternative<GaussianModel>(m) ? psi_p_gaussian_direct(std::get<GaussianModel>(m), lam)
                                                             : psi_p(m, lam);
            } catch (const DivergentMgfError&) {
            }
            c.expect(q.has_value() == p.has_value(), "psi domains disagree at lambda " + fmt(lam));
            if (q && p) {
                ++psi_checks;
                c.expect(std::abs(*q - *p) <= 1e-9, "psi_P vs psi_Q(+1) at lambda " + fmt(lam));
            }
        }
        const auto div = kl_divergences(m);
        c.expect(std::abs(chernoff_E(m, -div.kl_qp, ExponentSide::Q).value) <= 1e-6, "E_Q(-kl_qp) = 0");
        c.expect(std::abs(chernoff_E(m, div.kl_pq, ExponentSide::P).value) <= 1e-6, "E_P(kl_pq) = 0");
        for (int k = 0; k <= 20; ++k) {
            const double th = -div.kl_qp + (div.kl_pq + div.kl_qp) * k / 20.0;
            const double eq = chernoff_E(m, th, ExponentSide::Q).value;
            const double ep = chernoff_E(m, th, ExponentSide::P).value;
            ++e_checks;
            c.expect(std::abs(ep - (eq - th)) <= 1e-6, "E_P = E_Q - theta at theta " + fmt(th));
        }
    }
    int quad = 0;
    double worst_quad = 0.0;
    for (double rho : {-0.6, 0.1, 0.3, 0.5, 0.6, 0.8}) {
        const auto g = GaussianModel::make(rho);
        const auto dom = psi_q_domain(g);
        for (double lam : {-1.0, -0.5, 0.25, 0.5, 1.5, 2.0}) {
            if (!dom.contains(lam)) continue;
            ++quad;
            const double diff = std::abs(psi_q(g, lam) - oracle::gaussian_psi_q_quadrature(rho, lam));
            worst_quad = std::max(worst_quad, diff);
            c.expect(diff <= 1e-6, "quadrature rho=" + fmt(rho) + " lambda=" + fmt(lam) + ": " + fmt(diff, 3));
        }
    }
    const double t = seconds_since(t0);
    c.expect(t < 5.0, "runtime " + fmt(t) + " s");
    c.summary = std::to_string(psi_checks) + " psi pairs, " + std::to_string(e_checks) + " exponent pairs, " +
                std::to_string(quad) + " quadrature points (max error " + fmt(worst_quad, 3) + "), " + fmt(t, 3) + " s";
}

// 4. Assignment solver vs factorial brute force.
void criterion4(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Stream rng(StreamId{2024, Purpose::test_harness, 4});
    const JointModel gauss = GaussianModel::make(0.7);
    const JointModel bern = make_bernoulli(0.8, 0.4);
    int mismatches = 0;
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + t % 7;
        Matrix w(n, n);
        if (t % 3 == 0) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) w(i, j) = static_cast<double>(rng.below(201)) - 100.0;
        } else {
            const JointModel& m = t % 3 == 1 ? gauss : bern;
            const auto pair = sample_alt(m, n, 4, StreamId{2024, Purpose::test_harness, static_cast<std::uint64_t>(t)});
            w = llr_matrix(m, pair.x, pair.y);
        }
        const auto r = max_weight_assignment(w);
        if (r.value != oracle::assignment_bruteforce(w)) ++mismatches;
    }
    const double t = seconds_since(t0);
    c.expect(mismatches == 0, std::to_string(mismatches) + " mismatches");
    c.expect(t < 5.0, "runtime " + fmt(t) + " s");
    c.summary = "200 instances, " + std::to_string(mismatches) + " mismatches, " + fmt(t, 3) + " s";
}

// 5. Bounds chain and Poisson surrogate.
void criterion5(Check& c) {
    auto models = binary_models();
    models.push_back(DiscreteJointModel::from_joint(3, {0.2, 0.05, 0.05, 0.05, 0.2, 0.05, 0.05, 0.05, 0.3}));
    const Capacity cap = default_capacity();
    int instances = 0;
    double min_gap = INFINITY;
    for (const auto& model : models)
        for (int n = 1; n <= cap.max_factorial_n; ++n)
            for (int d = 1; d <= 4; ++d) {
                if (std::pow(static_cast<double>(model.alphabet_size()), 2.0 * n * d) > cap.max_tv_states) continue;
                ++instances;
                const double bayes = exact_tv_small(model, n, d).bayes_risk;
                const double lb = risk_lower_bound_from_moment(second_moment_exact(eigenvalues(model), n, d));
                min_gap = std::min(min_gap, bayes - lb);
                c.expect(bayes >= lb - 1e-9, "n=" + std::to_string(n) + " d=" + std::to_string(d) + ": 1-tv " +
                                                 fmt(bayes, 12) + " < bound " + fmt(lb, 12));
            }
    std::vector<SpectralProfile> profiles;
    for (const auto& model : models) profiles.push_back(eigenvalues(model));
    profiles.push_back(gaussian_profile(0.6));
    profiles.push_back(SpectralProfile::from_values({1.0, 0.6, -0.3}));
    for (const auto& p : profiles) {
        double prev = 0.0;
        int first_drop = 0;
        for (int m = 1; m <= 1000; ++m) {
            const double v = poisson_surrogate_moment(p, m, 1);
            if (v < prev && first_drop == 0) first_drop = m;
            prev = v;
        }
        c.expect(first_drop == 0, "surrogate decreases at m=" + std::to_string(first_drop));
        double log_limit = 0.0;
        for (std::size_t i = 1; i < p.eigenvalues().size(); ++i)
            log_limit -= std::log1p(-p.eigenvalues()[i] * p.eigenvalues()[i]);
        c.expect(std::abs(prev - std::exp(log_limit)) <= 1e-6,
                 "surrogate limit " + fmt(prev, 12) + " vs " + fmt(std::exp(log_limit), 12));
    }
    c.summary = std::to_string(instances) + " instances, min(1-tv - bound) " + fmt(min_gap, 4) + ", " +
                std::to_string(profiles.size()) + " surrogate profiles";
}

struct Fig2Cell {
    double risk = NAN, se = NAN;
};

// Adjacent-pair trend check: a pair violates monotone decrease when the
// later risk exceeds the earlier by more than 3 combined stderr.
int trend_violations(const std::vector<Fig2Cell>& v) {
    int bad = 0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
        if (v[i + 1].risk - v[i].risk > 3 * std::hypot(v[i].se, v[i + 1].se)) ++bad;
    return bad;
}

// 6. Fig. 2(a) trends.
void criterion6(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    TrialPlan plan;
    plan.model = ModelSpec::gaussian(0.5);
    plan.n = 100;
    plan.d = 2;
    plan.trials = 2000;
    plan.seed = 20240601;
    DetectorConfig count{DetectorKind::count};
    count.tau_count = TauCountRule::chernoff(2.0);
    plan.detectors = {DetectorConfig{DetectorKind::sum}, count};
    const std::vector<std::size_t> ds = {2, 10, 100};
    plan.sweep = SweepGrid{parse_number_list("0.05:0.95:0.05"), ds, {100}};
    const auto rows = sweep(plan);

    const std::size_t np = plan.sweep->params.size();
    // table[detector][d index][param index]
    std::vector<std::vector<std::vector<Fig2Cell>>> table(2, std::vector<std::vector<Fig2Cell>>(3, std::vector<Fig2Cell>(np)));
    std::size_t k = 0;
    for (std::size_t pi = 0; pi < np; ++pi)
        for (std::size_t di = 0; di < 3; ++di)
            for (std::size_t j = 0; j < 2; ++j) {
                const auto& r = rows[k++];
                if (!r.estimate) {
                    c.expect(false, "sweep point failed: " + r.error);
                    continue;
                }
                table[j][di][pi] = {r.estimate->risk, r.estimate->stderr_};
            }
    if (const char* path = std::getenv("DBALIGN_FIG2_CSV")) {
        std::ofstream out(path);
        write_sweep_csv(out, rows);
    }

    const char* names[] = {"sum", "count"};
    const std::size_t i05 = 0, i90 = 17, i95 = np - 1;
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t di = 0; di < 3; ++di) {
            const auto& cell = table[j][di][i05];
            c.expect(std::abs(cell.risk - 1.0) <= 3 * cell.se,
                     std::string(names[j]) + " d=" + std::to_string(ds[di]) + " rho=0.05 risk " + fmt(cell.risk, 4) +
                         " not within 3 stderr (" + fmt(3 * cell.se, 3) + ") of 1");
            const int bad = trend_violations(table[j][di]);
            c.expect(bad <= static_cast<int>(0.05 * (np - 1)),
                     std::string(names[j]) + " d=" + std::to_string(ds[di]) + ": " + std::to_string(bad) +
                         " trend violations");
        }
    c.expect(table[0][2][i90].risk < 0.1, "sum d=100 rho=0.9 risk " + fmt(table[0][2][i90].risk, 4) + " >= 0.1");
    double min_sum_d2 = INFINITY;
    double at = 0.0;
    for (std::size_t pi = 0; pi < np; ++pi)
        if (table[0][0][pi].risk < min_sum_d2) {
            min_sum_d2 = table[0][0][pi].risk;
            at = plan.sweep->params[pi];
        }
    c.expect(min_sum_d2 > 0.8, "sum d=2 risk " + fmt(min_sum_d2, 4) + " at rho=" + fmt(at) + " <= 0.8");
    const auto& lo = table[1][0][i05];
    const auto& hi = table[1][0][i95];
    c.expect(lo.risk - hi.risk > 3 * std::hypot(lo.se, hi.se),
             "count d=2 risk does not decrease: " + fmt(lo.risk, 4) + " -> " + fmt(hi.risk, 4));
    const double t = seconds_since(t0);
    c.expect(t < 600.0, "runtime " + fmt(t) + " s");
    std::ostringstream s;
    s << "risk at rho=0.05/0.95: sum d=2 " << fmt(table[0][0][i05].risk, 3) << "/" << fmt(table[0][0][i95].risk, 3)
      << ", sum d=10 " << fmt(table[0][1][i05].risk, 3) << "/" << fmt(table[0][1][i95].risk, 3) << ", sum d=100 "
      << fmt(table[0][2][i05].risk, 3) << "/" << fmt(table[0][2][i95].risk, 3) << ", count d=2 " << fmt(lo.risk, 3)
      << "/" << fmt(hi.risk, 3) << ", count d=10 " << fmt(table[1][1][i05].risk, 3) << "/"
      << fmt(table[1][1][i95].risk, 3) << ", count d=100 " << fmt(table[1][2][i05].risk, 3) << "/"
      << fmt(table[1][2][i95].risk, 3) << "; " << fmt(t, 3) << " s";
    c.summary = s.str();
}

// 7. Sum-test risk against 16 / (d rho^2).
void criterion7(Check& c) {
    int points = 0;
    double worst_margin = -INFINITY;
    for (const auto& [rho, d] : std::vector<std::pair<double, std::size_t>>{{0.6, 100}, {0.9, 100}, {0.5, 100}, {0.8, 50}, {0.95, 20}}) {
        const double bound = 16.0 / (static_cast<double>(d) * rho * rho);
        if (!(bound < 1.0)) continue;
        for (std::size_t n : {10, 100}) {
            TrialPlan plan;
            plan.model = ModelSpec::gaussian(rho);
            plan.n = n;
            plan.d = d;
            plan.trials = 2000;
            plan.seed = 7000 + points;
            plan.detectors = {DetectorConfig{DetectorKind::sum}};
            const auto r = estimate_risk(plan).front();
            ++points;
            worst_margin = std::max(worst_margin, r.risk - bound - 3 * r.stderr_);
            c.expect(r.risk <= bound + 3 * r.stderr_, "rho=" + fmt(rho) + " d=" + std::to_string(d) + " n=" +
                                                          std::to_string(n) + ": risk " + fmt(r.risk, 4) +
                                                          " > bound " + fmt(bound, 4));
        }
    }
    c.summary = std::to_string(points) + " points (rho=0.6, d=100 bound " + fmt(16.0 / 36, 4) +
                "), max(risk - bound - 3 stderr) " + fmt(worst_margin, 3);
}

// 8. The NP oracle against the detectors and the exact Bayes risk.
void criterion8(Check& c) {
    int instances = 0;
    double worst = 0.0;
    const std::vector<ModelSpec> specs = {ModelSpec::discrete(2, {0.4, 0.1, 0.1, 0.4}), ModelSpec::bernoulli(0.5, 0.5),
                                          ModelSpec::bernoulli(0.9, 0.3)};
    for (const auto& spec : specs)
        for (std::size_t n : {1, 2, 3, 4}) {
            TrialPlan plan;
            plan.model = spec;
            plan.n = n;
            plan.d = 1;
            plan.trials = 20000;
            plan.seed = 8000 + instances;
            DetectorConfig count{DetectorKind::count};
            count.tau_count = TauCountRule::fixed(0.0);
            plan.detectors = {DetectorConfig{DetectorKind::np}, DetectorConfig{DetectorKind::glrt},
                              DetectorConfig{DetectorKind::sum}, count};
            const auto est = estimate_risk(plan);
            const double bayes =
                exact_tv_small(std::get<DiscreteJointModel>(spec.build()), static_cast<int>(n), 1).bayes_risk;
            ++instances;
            const auto& np = est[0];
            const std::string where = "instance " + std::to_string(instances) + " n=" + std::to_string(n);
            worst = std::max(worst, std::abs(np.risk - bayes) / std::max(np.stderr_, 1e-300));
            c.expect(std::abs(np.risk - bayes) <= 3 * np.stderr_,
                     where + ": np risk " + fmt(np.risk, 4) + " vs bayes " + fmt(bayes, 4));
            for (std::size_t j = 1; j < est.size(); ++j)
                c.expect(np.risk <= est[j].risk + 3 * std::hypot(np.stderr_, est[j].stderr_),
                         where + ": np risk above " + to_string(est[j].detector));
        }
    c.summary = std::to_string(instances) + " instances, max |np - bayes| / stderr " + fmt(worst, 3);
}

// 9. Byte-identical CLI output across runs and thread counts.
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int shell(const std::string& cmd) { return std::system(cmd.c_str()); }

void criterion9(Check& c) {
    const fs::path dir = fs::temp_directory_path() / "dbalign_acceptance";
    fs::create_directories(dir);
    const std::string exe = DBALIGN_CLI_PATH;
    std::ofstream(dir / "gauss.ini") << "kind = gaussian\nrho = 0.7\n";
    std::ofstream(dir / "bern.ini") << "kind = bernoulli\ntau = 0.6\np = 0.4\n";
    std::ofstream(dir / "plan.ini") << "[model]\nkind = gaussian\nrho = 0.5\n\n[plan]\nn = 30\nd = 4\ntrials = 300\n"
                                       "seed = 99\ndetectors = sum, glrt, count\n\n[detector.count]\n"
                                       "tau_count = chernoff:2\npd_samples = 50000\n\n[sweep]\nrho = 0.2:0.8:0.3\n"
                                       "d = 2, 5\n";
    const std::string g = (dir / "gauss.ini").string(), b = (dir / "bern.ini").string(), p = (dir / "plan.ini").string();

    struct Cmd {
        std::string name, args;
        std::vector<std::string> files;  // outputs written by the command
    };
    const std::vector<Cmd> cmds = {
        {"sample h1", "sample --model " + g + " --n 40 --d 5 --seed 5 --x {}x.csv --y {}y.csv --sigma {}s.txt",
         {"x.csv", "y.csv", "s.txt"}},
        {"sample h0", "sample --model " + b + " --n 40 --d 5 --seed 6 --hypothesis h0 --x {}x.csv --y {}y.csv",
         {"x.csv", "y.csv"}},
        {"detect", "detect --model " + g + " --x " + (dir / "in_x.csv").string() + " --y " + (dir / "in_y.csv").string() +
                       " --detector glrt --detector sum --detector count --pd-samples 100000 --seed 8 --out {}out.json",
         {"out.json"}},
        {"risk csv", "risk --model " + g + " --n 50 --d 3 --seed 11 --trials 400 --detector sum --detector count "
                     "--detector glrt --pd-samples 100000 --out {}out.csv",
         {"out.csv"}},
        {"risk json", "risk --plan " + p + " --trials 200 --format json --out {}out.json", {"out.json"}},
        {"sweep csv", "sweep --plan " + p + " --out {}out.csv", {"out.csv"}},
        {"sweep json", "sweep --plan " + p + " --format json --out {}out.json", {"out.json"}},
    };
    if (shell(exe + " sample --model " + g + " --n 25 --d 6 --seed 3 --x " + (dir / "in_x.csv").string() + " --y " +
              (dir / "in_y.csv").string()) != 0) {
        c.expect(false, "could not create detect input");
        return;
    }
    auto substitute = [](std::string s, const std::string& prefix) {
        for (std::size_t pos; (pos = s.find("{}")) != std::string::npos;) s.replace(pos, 2, prefix);
        return s;
    };
    int compared = 0;
    for (const auto& cmd : cmds) {
        std::vector<std::vector<std::string>> outputs;
        const std::vector<std::pair<std::string, std::string>> runs = {
            {"a", "DBALIGN_THREADS=1"}, {"b", "DBALIGN_THREADS=1"}, {"c", "DBALIGN_THREADS=8"}};
        bool ran = true;
        for (const auto& [tag, env] : runs) {
            const std::string prefix = (dir / (tag + "_")).string();
            const std::string line = env + " " + exe + " " + substitute(cmd.args, prefix) + " > " + prefix + "stdout 2>&1";
            if (shell(line) != 0) {
                c.expect(false, cmd.name + ": command failed: " + slurp(prefix + "stdout"));
                ran = false;
                break;
            }
            std::vector<std::string> files;
            for (const auto& f : cmd.files) files.push_back(slurp(prefix + f));
            files.push_back(slurp(prefix + "stdout"));
            outputs.push_back(std::move(files));
        }
        if (!ran) continue;
        ++compared;
        c.expect(!outputs[0].front().empty(), cmd.name + ": empty output");
        c.expect(outputs[0] == outputs[1], cmd.name + ": two runs differ");
        c.expect(outputs[0] == outputs[2], cmd.name + ": 1 vs 8 threads differ");
    }
    // Explicit --threads overrides the environment.
    const std::string base = exe + " risk --model " + g + " --n 40 --d 3 --seed 4 --trials 300 --detector sum --detector glrt";
    shell(base + " --threads 1 > " + (dir / "t1.csv").string());
    shell(base + " --threads 8 > " + (dir / "t8.csv").string());
    c.expect(!slurp(dir / "t1.csv").empty() && slurp(dir / "t1.csv") == slurp(dir / "t8.csv"), "--threads 1 vs 8 differ");
    c.summary = std::to_string(compared) + " subcommand invocations x 3 runs (threads 1, 1, 8) plus --threads 1/8";
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria = {
        {"second-moment oracle equivalence", criterion1},
        {"eigenvalue closed forms", criterion2},
        {"exponent identities", criterion3},
        {"GLRT exactness", criterion4},
        {"bounds chain", criterion5},
        {"Fig. 2 trend replication", criterion6},
        {"sum-test bound consistency", criterion7},
        {"Bayes-optimality sanity", criterion8},
        {"determinism", criterion9},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.failures.push_back(std::string("exception: ") + e.what());
        }
        const bool ok = c.failures.empty();
        failed += !ok;
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): ";
        if (ok) {
            std::cout << c.summary;
        } else {
            for (std::size_t k = 0; k < c.failures.size(); ++k) std::cout << (k ? "; " : "") << c.failures[k];
            if (!c.summary.empty()) std::cout << " [" << c.summary << "]";
        }
        std::cout << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
