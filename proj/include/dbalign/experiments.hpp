#pragma once
// Monte-Carlo risk estimation, parameter sweeps and the exact total-variation
// oracle for tiny discrete instances.
//
// Trial t at grid point k uses the substreams (seed, null_sample, k<<32 | t)
// and (seed, alt_sample, k<<32 | t); both hypotheses' data are shared by all
// detectors of the plan. Results do not depend on the thread count.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dbalign/detectors.hpp"
#include "dbalign/error.hpp"
#include "dbalign/models.hpp"
#include "dbalign/plan.hpp"
#include "dbalign/rng.hpp"

namespace dbalign {

struct RiskEstimate {
    DetectorKind detector = DetectorKind::sum;
    double threshold = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
    double risk = 0.0;
    double stderr_ = 0.0;
    std::size_t trials = 0;
    std::string model_kind;
    double param = 0.0;
    std::size_t n = 0;
    std::size_t d = 0;
    std::uint64_t seed = 0;
};

// One sweep row: an estimate or the error that prevented it.
struct SweepRow {
    std::string model_kind;
    double param = 0.0;
    std::size_t n = 0;
    std::size_t d = 0;
    DetectorKind detector = DetectorKind::sum;
    std::optional<RiskEstimate> estimate;
    std::string error;
    bool capacity_error = false;
};

// DBALIGN_THREADS, else the hardware concurrency.
inline unsigned default_thread_count() {
    if (const char* env = std::getenv("DBALIGN_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

namespace detail {

// A detector prepared for one grid point.
struct PreparedDetector {
    DetectorConfig config;
    double threshold = 0.0;
    std::optional<CountTestPlan> count_plan;
};

inline PreparedDetector prepare_detector(const DetectorConfig& cfg, const JointModel& model, std::size_t n,
                                         std::size_t d, std::uint64_t seed, std::uint64_t point) {
    PreparedDetector p;
    p.config = cfg;
    switch (cfg.kind) {
        case DetectorKind::glrt:
            p.threshold = cfg.tau.value_or(0.0);
            break;
        case DetectorKind::sum:
            require_usable(model);
            p.threshold = cfg.tau ? *cfg.tau : default_sum_threshold(model, n, d);
            break;
        case DetectorKind::count: {
            const double tau = resolve_tau_count(cfg.tau_count, model, n, d);
            PdMethod::Kind kind = cfg.pd_method.value_or(std::holds_alternative<GaussianModel>(model)
                                                             ? PdMethod::Kind::monte_carlo
                                                             : PdMethod::Kind::exact_convolution);
            const PdMethod method = kind == PdMethod::Kind::exact_convolution
                                        ? PdMethod::exact()
                                        : PdMethod::monte_carlo(cfg.pd_samples, seed, point);
            p.count_plan = make_count_plan(model, d, tau, method);
            if (!(p.count_plan->pd > 0.0))
                throw ValidationError("vacuous threshold: P_d = 0, the count test cannot fire meaningfully");
            p.threshold = 0.5 * static_cast<double>(n) * p.count_plan->pd;
            break;
        }
        case DetectorKind::np:
            if (n > static_cast<std::size_t>(default_capacity().max_factorial_n))
                throw CapacityError("np oracle enumerates n! permutations; n <= " +
                                    std::to_string(default_capacity().max_factorial_n));
            p.threshold = 1.0;
            break;
    }
    return p;
}

inline bool decide(const PreparedDetector& p, const JointModel& model, const DatabasePair& pair) {
    switch (p.config.kind) {
        case DetectorKind::glrt: return glrt(model, pair, p.threshold).decision;
        case DetectorKind::sum: return sum_test(model, pair, p.threshold).decision;
        case DetectorKind::count: return count_test(model, pair, *p.count_plan).decision;
        case DetectorKind::np: return np_oracle(model, pair).decision;
    }
    return false;
}

// Rethrows the captured exception with a location prefix, keeping its class.
[[noreturn]] inline void rethrow_with_context(std::exception_ptr ep, const std::string& where) {
    try {
        std::rethrow_exception(ep);
    } catch (const CapacityError& e) {
        throw CapacityError(where + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
    } catch (const ShapeError& e) {
        throw ShapeError(where + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError(where + ": " + e.what());
    } catch (const DegenerateModelError& e) {
        throw DegenerateModelError(where + ": " + e.what());
    } catch (const Error& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

struct PointOutcome {
    std::vector<std::optional<RiskEstimate>> estimates;  // one per plan detector
    std::vector<std::exception_ptr> errors;
};

inline PointOutcome run_point(const TrialPlan& plan, const ModelSpec& spec, std::size_t n, std::size_t d,
                              std::uint64_t point, unsigned threads) {
    const std::size_t k = plan.detectors.size();
    PointOutcome out;
    out.estimates.assign(k, std::nullopt);
    out.errors.assign(k, nullptr);

    JointModel model;
    try {
        model = spec.build();
    } catch (...) {
        out.errors.assign(k, std::current_exception());
        return out;
    }

    std::vector<PreparedDetector> prepared;
    std::vector<std::size_t> slot;
    for (std::size_t j = 0; j < k; ++j) {
        try {
            prepared.push_back(prepare_detector(plan.detectors[j], model, n, d, plan.seed, point));
            slot.push_back(j);
        } catch (...) {
            out.errors[j] = std::current_exception();
        }
    }
    if (prepared.empty()) return out;

    const std::size_t m = plan.trials;
    const std::size_t nd = prepared.size();
    // hits[t * nd + j]: bit 0 = H0 verdict, bit 1 = H1 verdict.
    std::vector<unsigned char> hits(m * nd, 0);
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::size_t err_trial = std::numeric_limits<std::size_t>::max();
    std::exception_ptr err;
    std::string err_where;

    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= m) return;
            const std::uint64_t index = (point << 32) | static_cast<std::uint64_t>(t);
            const char* hyp = "H0";
            try {
                const auto h0 = sample_null(model, n, d, StreamId{plan.seed, Purpose::null_sample, index});
                for (std::size_t j = 0; j < nd; ++j)
                    if (decide(prepared[j], model, h0)) hits[t * nd + j] |= 1;
                hyp = "H1";
                const auto h1 = sample_alt(model, n, d, StreamId{plan.seed, Purpose::alt_sample, index});
                for (std::size_t j = 0; j < nd; ++j)
                    if (decide(prepared[j], model, h1)) hits[t * nd + j] |= 2;
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (t < err_trial) {
                    err_trial = t;
                    err = std::current_exception();
                    err_where = std::string("trial ") + std::to_string(t) + " (" + hyp + ")";
                }
                next.store(m);
                return;
            }
        }
    };

    const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(m)));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (err) {
        std::exception_ptr wrapped;
        try {
            rethrow_with_context(err, err_where);
        } catch (...) {
            wrapped = std::current_exception();
        }
        for (std::size_t j : slot) out.errors[j] = wrapped;
        return out;
    }

    const double mm = static_cast<double>(m);
    for (std::size_t j = 0; j < nd; ++j) {
        std::size_t fp = 0, tp = 0;
        for (std::size_t t = 0; t < m; ++t) {
            fp += hits[t * nd + j] & 1;
            tp += (hits[t * nd + j] >> 1) & 1;
        }
        RiskEstimate r;
        r.detector = prepared[j].config.kind;
        r.threshold = prepared[j].threshold;
        r.fpr = static_cast<double>(fp) / mm;
        r.fnr = static_cast<double>(m - tp) / mm;
        r.risk = r.fpr + r.fnr;
        r.stderr_ = std::sqrt(r.fpr * (1.0 - r.fpr) / mm + r.fnr * (1.0 - r.fnr) / mm);
        r.trials = m;
        r.model_kind = to_string(spec.kind);
        r.param = spec.param();
        r.n = n;
        r.d = d;
        r.seed = plan.seed;
        out.estimates[slot[j]] = r;
    }
    return out;
}

}  // namespace detail

// M null and M alternative trials at the plan's own (model, n, d).
inline std::vector<RiskEstimate> estimate_risk(const TrialPlan& plan, unsigned threads = 0) {
    plan.validate();
    if (threads == 0) threads = default_thread_count();
    auto outcome = detail::run_point(plan, plan.model, plan.n, plan.d, 0, threads);
    std::vector<RiskEstimate> out;
    for (std::size_t j = 0; j < plan.detectors.size(); ++j) {
        if (outcome.errors[j]) std::rethrow_exception(outcome.errors[j]);
        out.push_back(*outcome.estimates[j]);
    }
    return out;
}

// Cartesian product of the grid; rows ordered by param, then d, then n, then
// detector. Point k (in that order) uses substream block k.
inline std::vector<SweepRow> sweep(const TrialPlan& plan, unsigned threads = 0) {
    plan.validate();
    if (threads == 0) threads = default_thread_count();
    const SweepGrid grid = plan.sweep.value_or(SweepGrid{});
    std::vector<std::optional<double>> params;
    if (grid.params.empty())
        params.push_back(std::nullopt);
    else
        params.assign(grid.params.begin(), grid.params.end());
    const std::vector<std::size_t> ds = grid.ds.empty() ? std::vector<std::size_t>{plan.d} : grid.ds;
    const std::vector<std::size_t> ns = grid.ns.empty() ? std::vector<std::size_t>{plan.n} : grid.ns;

    std::vector<SweepRow> rows;
    std::uint64_t point = 0;
    for (const auto& param : params) {
        for (std::size_t d : ds) {
            for (std::size_t n : ns) {
                const std::uint64_t k = point++;
                std::optional<ModelSpec> spec;
                std::exception_ptr spec_err;
                try {
                    spec = param ? plan.model.with_param(*param) : plan.model;
                    if (n < 1 || d < 1) throw ValidationError("grid point needs n >= 1 and d >= 1");
                } catch (...) {
                    spec_err = std::current_exception();
                }
                detail::PointOutcome outcome;
                if (spec) {
                    outcome = detail::run_point(plan, *spec, n, d, k, threads);
                } else {
                    outcome.estimates.assign(plan.detectors.size(), std::nullopt);
                    outcome.errors.assign(plan.detectors.size(), spec_err);
                }
                for (std::size_t j = 0; j < plan.detectors.size(); ++j) {
                    SweepRow row;
                    row.model_kind = to_string(plan.model.kind);
                    row.param = param ? *param : plan.model.param();
                    row.n = n;
                    row.d = d;
                    row.detector = plan.detectors[j].kind;
                    if (outcome.errors[j]) {
                        try {
                            std::rethrow_exception(outcome.errors[j]);
                        } catch (const CapacityError& e) {
                            row.error = e.what();
                            row.capacity_error = true;
                        } catch (const std::exception& e) {
                            row.error = e.what();
                        }
                    } else {
                        row.estimate = outcome.estimates[j];
                    }
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Exact total variation between H0 and the permutation mixture H1

struct ExactTV {
    double tv = 0.0;
    double bayes_risk = 1.0;
};

namespace detail {

// Permanent of a small dense matrix (Ryser with Gray-code subset updates).
inline double permanent(const std::vector<double>& w, int n) {
    if (n == 0) return 1.0;
    if (n <= 5) {
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        double total = 0.0;
        do {
            double prod = 1.0;
            for (int i = 0; i < n; ++i) prod *= w[static_cast<std::size_t>(i * n + perm[static_cast<std::size_t>(i)])];
            total += prod;
        } while (std::next_permutation(perm.begin(), perm.end()));
        return total;
    }
    std::vector<double> rowsum(static_cast<std::size_t>(n), 0.0);
    double total = 0.0;
    std::uint32_t gray = 0;
    for (std::uint32_t k = 1; k < (1u << n); ++k) {
        const std::uint32_t g = k ^ (k >> 1);
        const std::uint32_t flip = g ^ gray;
        const int col = std::countr_zero(flip);
        const double sign = (g & flip) ? 1.0 : -1.0;
        for (int i = 0; i < n; ++i) rowsum[static_cast<std::size_t>(i)] += sign * w[static_cast<std::size_t>(i * n + col)];
        gray = g;
        double prod = 1.0;
        for (int i = 0; i < n; ++i) prod *= rowsum[static_cast<std::size_t>(i)];
        const int bits = std::popcount(g);
        total += ((n - bits) % 2 == 0 ? 1.0 : -1.0) * prod;
    }
    return total;
}

}  // namespace detail

inline ExactTV exact_tv_small(const DiscreteJointModel& model, int n, int d, const Capacity& cap = default_capacity()) {
    if (n < 1 || d < 1) throw ValidationError("n and d must be at least 1");
    if (n > cap.max_factorial_n)
        throw CapacityError("exact TV needs n <= " + std::to_string(cap.max_factorial_n));
    const std::size_t m = model.alphabet_size();
    // m^(2 n d) database pairs
    double states = 1.0;
    for (int i = 0; i < 2 * n * d; ++i) states *= static_cast<double>(m);
    if (states > static_cast<double>(cap.max_tv_states))
        throw CapacityError("exact TV enumeration needs m^(2nd) <= " + std::to_string(cap.max_tv_states) + ", got " +
                            std::to_string(static_cast<long double>(states)));

    // Row codes: r in [0, m^d) encodes d symbols.
    std::size_t rcount = 1;
    for (int l = 0; l < d; ++l) rcount *= m;
    std::vector<double> qrow(rcount, 1.0);
    std::vector<double> prow(rcount * rcount, 1.0);
    for (std::size_t a = 0; a < rcount; ++a) {
        std::size_t ca = a;
        std::vector<std::size_t> sa(static_cast<std::size_t>(d));
        for (int l = 0; l < d; ++l) {
            sa[static_cast<std::size_t>(l)] = ca % m;
            ca /= m;
            qrow[a] *= model.marginal()[sa[static_cast<std::size_t>(l)]];
        }
        for (std::size_t b = 0; b < rcount; ++b) {
            std::size_t cb = b;
            double v = 1.0;
            for (int l = 0; l < d; ++l) {
                v *= model.joint(sa[static_cast<std::size_t>(l)], cb % m);
                cb /= m;
            }
            prow[a * rcount + b] = v;
        }
    }

    const auto nn = static_cast<std::size_t>(n);
    const double inv_fact = std::exp(-std::lgamma(n + 1.0));
    std::vector<std::size_t> xs(nn, 0), ys(nn, 0);
    std::vector<double> w(nn * nn);
    double total = 0.0;

    // Odometer over X row codes, then Y row codes.
    auto advance = [&](std::vector<std::size_t>& v) {
        for (std::size_t i = 0; i < nn; ++i) {
            if (++v[i] < rcount) return true;
            v[i] = 0;
        }
        return false;
    };
    do {
        double qx = 1.0;
        for (std::size_t i = 0; i < nn; ++i) qx *= qrow[xs[i]];
        std::fill(ys.begin(), ys.end(), 0);
        do {
            double q = qx;
            for (std::size_t j = 0; j < nn; ++j) q *= qrow[ys[j]];
            for (std::size_t i = 0; i < nn; ++i)
                for (std::size_t j = 0; j < nn; ++j) w[i * nn + j] = prow[xs[i] * rcount + ys[j]];
            const double p = detail::permanent(w, n) * inv_fact;
            total += std::abs(p - q);
        } while (advance(ys));
    } while (advance(xs));

    ExactTV out;
    out.tv = std::clamp(0.5 * total, 0.0, 1.0);
    out.bayes_risk = 1.0 - out.tv;
    return out;
}

}  // namespace dbalign
