#pragma once
// Plain-text model and plan files.
//
//   # comment
//   [section]
//   key = value
//
// Keys before the first section header belong to the unnamed section "".
// Numbers lists are comma separated; an entry a:b:step expands to the
// inclusive arithmetic range. Every error names the file and line.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dbalign/error.hpp"
#include "dbalign/plan.hpp"

namespace dbalign {

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

struct ConfigSection {
    std::string name;
    int line = 0;
    std::vector<ConfigEntry> entries;

    const ConfigEntry* find(std::string_view key) const {
        for (const auto& e : entries)
            if (e.key == key) return &e;
        return nullptr;
    }
};

class ConfigFile {
public:
    std::string source;
    std::vector<ConfigSection> sections;

    const ConfigSection* section(std::string_view name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }

    std::string where(int line) const { return source + ":" + std::to_string(line); }

    [[noreturn]] void fail(int line, const std::string& msg) const { throw ValidationError(where(line) + ": " + msg); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<std::uint64_t> to_uint(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
    // Integral values written in floating notation, e.g. 1e6.
    if (const auto d = to_double(s); d && *d >= 0.0 && *d <= 9.007199254740992e15 && std::floor(*d) == *d)
        return static_cast<std::uint64_t>(*d);
    return std::nullopt;
}

}  // namespace detail

inline ConfigFile parse_config(const std::string& text, const std::string& source = "<input>") {
    ConfigFile cfg;
    cfg.source = source;
    cfg.sections.push_back({"", 0, {}});
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view s(raw);
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') cfg.fail(line, "unterminated section header");
            std::string name(detail::trim(s.substr(1, s.size() - 2)));
            if (name.empty()) cfg.fail(line, "empty section name");
            if (cfg.section(name)) cfg.fail(line, "duplicate section [" + name + "]");
            cfg.sections.push_back({name, line, {}});
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) cfg.fail(line, "expected 'key = value'");
        std::string key(detail::trim(s.substr(0, eq)));
        std::string value(detail::trim(s.substr(eq + 1)));
        if (key.empty()) cfg.fail(line, "missing key before '='");
        auto& sec = cfg.sections.back();
        if (sec.find(key)) cfg.fail(line, "duplicate key '" + key + "'");
        sec.entries.push_back({key, value, line});
    }
    return cfg;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline ConfigFile load_config(const std::string& path) { return parse_config(read_text_file(path), path); }

// ---------------------------------------------------------------------------
// Typed field access

// "0.1, 0.2, 0.5:0.9:0.1" -> 0.1 0.2 0.5 0.6 0.7 0.8 0.9
inline std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : detail::split(text, ',')) {
        if (item.find(':') != std::string::npos) {
            const auto parts = detail::split(item, ':');
            if (parts.size() != 3) throw ValidationError("range must be written start:stop:step");
            const auto a = detail::to_double(parts[0]), b = detail::to_double(parts[1]), st = detail::to_double(parts[2]);
            if (!a || !b || !st) throw ValidationError("range '" + item + "' has a non-numeric bound");
            if (!(*st > 0.0) || *b < *a) throw ValidationError("range needs step > 0 and start <= stop");
            const double count = std::floor((*b - *a) / *st + 1e-9);
            if (count > 1e6) throw ValidationError("range has too many points");
            for (long k = 0; k <= static_cast<long>(count); ++k) {
                // Rounded to 12 decimals: 0.05:0.95:0.05 gives 0.15, not 0.15000000000000002.
                const double v = *a + static_cast<double>(k) * *st;
                out.push_back(std::round(v * 1e12) / 1e12);
            }
        } else {
            const auto v = detail::to_double(item);
            if (!v || !std::isfinite(*v)) throw ValidationError("'" + item + "' is not a finite number");
            out.push_back(*v);
        }
    }
    if (out.empty()) throw ValidationError("empty number list");
    return out;
}

namespace detail {

class SectionReader {
public:
    SectionReader(const ConfigFile& cfg, const ConfigSection& sec) : cfg_(cfg), sec_(sec) {}

    const ConfigEntry* get(std::string_view key) {
        used_.emplace_back(key);
        return sec_.find(key);
    }

    const ConfigEntry& need(std::string_view key) {
        const auto* e = get(key);
        if (!e) cfg_.fail(sec_.line, "missing required key '" + std::string(key) + "'" + label());
        return *e;
    }

    double number(const ConfigEntry& e) const {
        const auto v = to_double(e.value);
        if (!v || !std::isfinite(*v)) cfg_.fail(e.line, "'" + e.key + "' must be a finite number");
        return *v;
    }

    std::uint64_t integer(const ConfigEntry& e) const {
        const auto v = to_uint(e.value);
        if (!v) cfg_.fail(e.line, "'" + e.key + "' must be a nonnegative integer");
        return *v;
    }

    std::vector<double> numbers(const ConfigEntry& e) const {
        try {
            return parse_number_list(e.value);
        } catch (const Error& err) {
            cfg_.fail(e.line, "'" + e.key + "': " + err.what());
        }
    }

    std::vector<std::size_t> integers(const ConfigEntry& e) const {
        std::vector<std::size_t> out;
        for (double v : numbers(e)) {
            if (v < 0.0 || std::floor(v) != v) cfg_.fail(e.line, "'" + e.key + "' must list nonnegative integers");
            out.push_back(static_cast<std::size_t>(v));
        }
        return out;
    }

    // Unknown keys are errors so typos do not silently fall back to defaults.
    void finish() const {
        for (const auto& e : sec_.entries) {
            bool known = false;
            for (const auto& k : used_) known = known || k == e.key;
            if (!known) cfg_.fail(e.line, "unknown key '" + e.key + "'" + label());
        }
    }

    const ConfigFile& cfg() const { return cfg_; }

private:
    std::string label() const { return sec_.name.empty() ? std::string() : " in [" + sec_.name + "]"; }

    const ConfigFile& cfg_;
    const ConfigSection& sec_;
    std::vector<std::string> used_;
};

inline ModelKind parse_model_kind(const ConfigFile& cfg, const ConfigEntry& e) {
    if (e.value == "gaussian") return ModelKind::gaussian;
    if (e.value == "bernoulli") return ModelKind::bernoulli;
    if (e.value == "discrete") return ModelKind::discrete;
    cfg.fail(e.line, "unknown model kind '" + e.value + "' (expected gaussian, bernoulli or discrete)");
}

inline ModelSpec read_model(const ConfigFile& cfg, const ConfigSection& sec) {
    SectionReader r(cfg, sec);
    ModelSpec spec;
    const auto& kind = r.need("kind");
    spec.kind = parse_model_kind(cfg, kind);
    const ConfigEntry* where = &kind;
    const ConfigEntry* marginal_entry = nullptr;
    switch (spec.kind) {
        case ModelKind::gaussian:
            where = &r.need("rho");
            spec.rho = r.number(*where);
            break;
        case ModelKind::bernoulli:
            where = &r.need("tau");
            spec.tau = r.number(*where);
            spec.p = r.number(r.need("p"));
            break;
        case ModelKind::discrete: {
            const auto& m = r.need("alphabet_size");
            spec.alphabet_size = r.integer(m);
            const auto& joint = r.need("joint");
            spec.joint = r.numbers(joint);
            where = &joint;
            if (const auto* marg = r.get("marginal")) {
                spec.marginal = r.numbers(*marg);
                marginal_entry = marg;
            }
            break;
        }
    }
    r.finish();
    try {
        (void)spec.build();
    } catch (const Error& e) {
        const std::string msg = e.what();
        if (marginal_entry && msg.find("marginal-consistency") != std::string::npos) where = marginal_entry;
        cfg.fail(where->line, msg);
    }
    return spec;
}

}  // namespace detail

// Model keys live in a [model] section or, for standalone model files, at top level.
inline ModelSpec parse_model(const ConfigFile& cfg) {
    if (const auto* sec = cfg.section("model")) return detail::read_model(cfg, *sec);
    const auto* top = cfg.section("");
    if (top->entries.empty()) cfg.fail(1, "no model definition found (expected 'kind = ...')");
    return detail::read_model(cfg, *top);
}

inline ModelSpec load_model(const std::string& path) { return parse_model(load_config(path)); }

inline TauCountRule parse_tau_count(const std::string& text) {
    if (text.rfind("chernoff:", 0) == 0) {
        const auto v = detail::to_double(std::string_view(text).substr(9));
        if (!v || !(*v >= 0.0)) throw ValidationError("tau_count 'chernoff:K' needs a nonnegative K");
        return TauCountRule::chernoff(*v);
    }
    const auto v = detail::to_double(text);
    if (!v || !std::isfinite(*v)) throw ValidationError("tau_count must be a number or 'chernoff:K'");
    return TauCountRule::fixed(*v);
}

inline PdMethod::Kind parse_pd_method(const std::string& text) {
    if (text == "exact") return PdMethod::Kind::exact_convolution;
    if (text == "monte-carlo" || text == "mc") return PdMethod::Kind::monte_carlo;
    throw ValidationError("unknown P_d method '" + text + "' (expected exact or monte-carlo)");
}

inline TrialPlan parse_plan(const ConfigFile& cfg) {
    TrialPlan plan;
    const auto* msec = cfg.section("model");
    if (!msec) cfg.fail(1, "plan file needs a [model] section");
    plan.model = detail::read_model(cfg, *msec);

    const auto* top = cfg.section("");
    if (!top->entries.empty()) cfg.fail(top->entries.front().line, "key outside any section");

    const auto* psec = cfg.section("plan");
    if (!psec) cfg.fail(1, "plan file needs a [plan] section");
    detail::SectionReader r(cfg, *psec);
    plan.n = r.integer(r.need("n"));
    plan.d = r.integer(r.need("d"));
    if (const auto* e = r.get("trials")) plan.trials = r.integer(*e);
    plan.seed = r.integer(r.need("seed"));
    const auto& dets = r.need("detectors");
    for (const auto& name : detail::split(dets.value, ',')) {
        DetectorConfig dc;
        try {
            dc.kind = parse_detector(name);
        } catch (const Error& e) {
            cfg.fail(dets.line, e.what());
        }
        for (const auto& prev : plan.detectors)
            if (prev.kind == dc.kind) cfg.fail(dets.line, "detector '" + name + "' listed twice");
        plan.detectors.push_back(dc);
    }
    r.finish();

    for (auto& dc : plan.detectors) {
        const auto* dsec = cfg.section(std::string("detector.") + to_string(dc.kind));
        if (!dsec) continue;
        detail::SectionReader dr(cfg, *dsec);
        if (dc.kind == DetectorKind::glrt || dc.kind == DetectorKind::sum) {
            if (const auto* e = dr.get("tau")) dc.tau = dr.number(*e);
        } else if (dc.kind == DetectorKind::count) {
            if (const auto* e = dr.get("tau_count")) {
                try {
                    dc.tau_count = parse_tau_count(e->value);
                } catch (const Error& err) {
                    cfg.fail(e->line, err.what());
                }
            }
            if (const auto* e = dr.get("pd_method")) {
                try {
                    dc.pd_method = parse_pd_method(e->value);
                } catch (const Error& err) {
                    cfg.fail(e->line, err.what());
                }
            }
            if (const auto* e = dr.get("pd_samples")) dc.pd_samples = dr.integer(*e);
        }
        dr.finish();
    }
    for (const auto& sec : cfg.sections)
        if (sec.name.rfind("detector.", 0) == 0) {
            bool listed = false;
            for (const auto& dc : plan.detectors) listed = listed || sec.name == std::string("detector.") + to_string(dc.kind);
            if (!listed) cfg.fail(sec.line, "section [" + sec.name + "] configures a detector not listed in [plan]");
        } else if (!sec.name.empty() && sec.name != "model" && sec.name != "plan" && sec.name != "sweep") {
            cfg.fail(sec.line, "unknown section [" + sec.name + "]");
        }

    if (const auto* ssec = cfg.section("sweep")) {
        detail::SectionReader sr(cfg, *ssec);
        SweepGrid grid;
        const char* pname = plan.model.kind == ModelKind::gaussian ? "rho"
                            : plan.model.kind == ModelKind::bernoulli ? "tau"
                                                                      : nullptr;
        if (pname) {
            if (const auto* e = sr.get(pname)) {
                grid.params = sr.numbers(*e);
                for (double v : grid.params) {
                    try {
                        (void)plan.model.with_param(v).build();
                    } catch (const Error& err) {
                        cfg.fail(e->line, err.what());
                    }
                }
            }
        }
        if (const auto* e = sr.get("d")) grid.ds = sr.integers(*e);
        if (const auto* e = sr.get("n")) grid.ns = sr.integers(*e);
        sr.finish();
        if (grid.params.empty() && grid.ds.empty() && grid.ns.empty())
            cfg.fail(ssec->line, "sweep grid is empty");
        for (auto v : grid.ds)
            if (v < 1) cfg.fail(ssec->line, "sweep d values must be at least 1");
        for (auto v : grid.ns)
            if (v < 1) cfg.fail(ssec->line, "sweep n values must be at least 1");
        plan.sweep = grid;
    }
    try {
        plan.validate();
    } catch (const Error& e) {
        cfg.fail(psec->line, e.what());
    }
    return plan;
}

inline TrialPlan load_plan(const std::string& path) { return parse_plan(load_config(path)); }

}  // namespace dbalign
