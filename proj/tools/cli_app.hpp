#pragma once

// Config loading and the four batch commands. Kept out of include/ so the
// library itself carries no JSON dependency.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdde/sdde.hpp"

namespace sdde::cli {

using nlohmann::json;

enum ExitCode : int {
    kOk = 0,
    kConfig = 2,
    kValidation = 3,
    kPrecondition = 4,
    kNumerical = 5,
};

inline constexpr int kConfigVersion = 1;

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// field access with path diagnostics

inline const json& field(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + "." + key + ": missing");
    return *it;
}

inline double number(const json& j, const std::string& key, const std::string& where) {
    const auto& v = field(j, key, where);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    return number(j, key, where);
}

inline std::size_t count(const json& j, const std::string& key, const std::string& where) {
    const auto& v = field(j, key, where);
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw ConfigError(where + "." + key + ": expected a positive integer");
    }
    return v.get<std::size_t>();
}

inline std::string text(const json& j, const std::string& key, const std::string& where) {
    const auto& v = field(j, key, where);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline std::vector<double> numbers(const json& j, const std::string& key, const std::string& where) {
    const auto& v = field(j, key, where);
    if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(where + "." + key + ": expected numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

// ---------------------------------------------------------------------------
// model

inline AnyCoefficient parse_coefficient(const json& j, const std::string& where) {
    const std::string type = text(j, "type", where);
    std::optional<AnyCoefficient> c;
    if (type == "constant") {
        c.emplace(ConstantCoefficient{number(j, "value", where)});
    } else if (type == "scaled_sine") {
        const double scale = number_or(j, "scale", 1.0, where);
        if (scale == 0.0) throw ConfigError(where + ".scale: must be nonzero");
        c.emplace(ScaledSine{number(j, "amplitude", where), scale, number_or(j, "offset", 0.0, where)});
    } else if (type == "affine_clipped") {
        const double lo = number(j, "lower", where);
        const double hi = number(j, "upper", where);
        if (!(lo <= hi)) throw ConfigError(where + ": lower must not exceed upper");
        c.emplace(AffineClipped{number(j, "intercept", where), number(j, "slope", where), lo, hi});
    } else {
        throw ConfigError(where + ".type: unknown coefficient '" + type + "'");
    }
    if (j.contains("bounds")) {
        const auto& b = j["bounds"];
        const std::string w = where + ".bounds";
        c->declare({number(b, "lower", w), number(b, "upper", w), number(b, "lipschitz", w)});
    }
    return *c;
}

inline AnySegment parse_segment(const json& j, const std::string& where) {
    const std::string type = text(j, "type", where);
    std::optional<AnySegment> s;
    if (type == "constant") {
        s.emplace(ConstantSegment{number(j, "value", where)});
    } else if (type == "exp_segment") {
        s.emplace(ExpSegment{number(j, "scale", where), number(j, "rate", where)});
    } else {
        throw ConfigError(where + ".type: unknown initial segment '" + type + "'");
    }
    if (j.contains("holder")) {
        const auto& h = j["holder"];
        s->declare({number(h, "exponent", where + ".holder"), number(h, "constant", where + ".holder")});
    }
    return *s;
}

inline LevySpec parse_levy(const json& j, const std::string& where) {
    const double lambda = number(j, "intensity", where);
    std::vector<PositiveTerm> pos;
    std::vector<NegativeTerm> neg;
    if (j.contains("double_exponential")) {
        const auto& d = j["double_exponential"];
        const std::string w = where + ".double_exponential";
        const double p = number(d, "p", w);
        pos.push_back({p, number(d, "eta", w)});
        double trunc = kInf;
        if (d.contains("truncation") && !d["truncation"].is_null()) trunc = number(d, "truncation", w);
        neg.push_back({1.0 - p, number(d, "theta", w), trunc});
    } else {
        if (j.contains("positive")) {
            for (const auto& t : field(j, "positive", where)) {
                pos.push_back({number(t, "weight", where + ".positive"), number(t, "rate", where + ".positive")});
            }
        }
        if (j.contains("negative")) {
            for (const auto& t : field(j, "negative", where)) {
                const std::string w = where + ".negative";
                double trunc = kInf;
                if (t.contains("truncation") && !t["truncation"].is_null()) trunc = number(t, "truncation", w);
                neg.push_back({number(t, "weight", w), number(t, "rate", w), trunc});
            }
        }
    }
    try {
        return LevySpec(lambda, JumpDistribution(std::move(pos), std::move(neg)));
    } catch (const DomainError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

inline CatalogModel parse_model(const json& cfg) {
    const auto& m = field(cfg, "model", "config");
    const std::string w = "model";
    try {
        return CatalogModel(parse_coefficient(field(m, "f", w), w + ".f"),
                            parse_coefficient(field(m, "g", w), w + ".g"),
                            parse_segment(field(m, "phi", w), w + ".phi"), number(m, "delay", w),
                            parse_levy(field(m, "jumps", w), w + ".jumps"));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

inline ThetaConvention parse_convention(const json& cfg) {
    if (!cfg.contains("theta_convention")) return ThetaConvention::derived;
    const std::string c = text(cfg, "theta_convention", "config");
    if (c == "derived") return ThetaConvention::derived;
    if (c == "legacy") return ThetaConvention::legacy;
    throw ConfigError("config.theta_convention: expected 'derived' or 'legacy'");
}

inline bool replication_mode(const json& cfg) {
    return cfg.contains("replication_mode") && cfg["replication_mode"].is_boolean() &&
           cfg["replication_mode"].get<bool>();
}

inline SimGrid parse_grid(const json& cfg, const CatalogModel& model) {
    const auto& g = field(cfg, "grid", "config");
    try {
        return make_grid(number(g, "horizon", "grid"), count(g, "steps", "grid"), model.delay);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
}

inline MarketSpec parse_market(const json& cfg) {
    const auto& m = field(cfg, "market", "config");
    MarketSpec spec{number(m, "r", "market"), number(m, "K", "market"), number(m, "T", "market"),
                    number_or(m, "t", 0.0, "market")};
    try {
        spec.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("market: ") + e.what());
    }
    return spec;
}

// ---------------------------------------------------------------------------
// run context

struct RunOptions {
    std::filesystem::path config_path;
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

struct Run {
    json cfg;
    std::string command;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::string config_hash;
    std::filesystem::path out;
    unsigned threads = 1;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void require_seed() const {
        if (!has_seed) throw ConfigError("config.seed: required for stochastic commands (or pass --seed)");
    }
};

inline Run load_run(const std::string& command, const RunOptions& opt) {
    Run run;
    run.command = command;
    run.threads = std::max(1u, opt.threads);
    std::ifstream in(opt.config_path);
    if (!in) throw ConfigError("cannot open config " + opt.config_path.string());
    try {
        run.cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!run.cfg.is_object()) throw ConfigError("config: expected a JSON object");
    if (!run.cfg.contains("version") || !run.cfg["version"].is_number_integer() ||
        run.cfg["version"].get<int>() != kConfigVersion) {
        throw ConfigError("config.version: expected " + std::to_string(kConfigVersion));
    }
    if (opt.seed) {
        run.cfg["seed"] = *opt.seed;
    }
    if (run.cfg.contains("seed")) {
        if (!run.cfg["seed"].is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
        run.seed = run.cfg["seed"].get<std::uint64_t>();
        run.has_seed = true;
    }
    run.config_hash = hex64(fnv1a(run.cfg.dump()));
    run.out = opt.out_dir;
    std::filesystem::create_directories(run.out);
    return run;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << s;
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

/// Provenance common to every output; no timing, so reruns are byte-identical.
inline json provenance(const Run& run) {
    json j;
    j["command"] = run.command;
    j["config_hash"] = run.config_hash;
    if (run.has_seed) j["seed"] = run.seed;
    return j;
}

inline void finish(const Run& run, const std::vector<std::string>& outputs) {
    json manifest = provenance(run);
    manifest["outputs"] = outputs;
    write_json(run.out / "manifest.json", manifest);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - run.started).count();
    json timing{{"command", run.command}, {"wall_seconds", secs}, {"threads", run.threads}};
    write_json(run.out / "timing.json", timing);
    std::cerr << run.command << ": done in " << secs << " s\n";
}

inline json checks_json(const std::vector<Check>& checks) {
    json arr = json::array();
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name}, {"passed", c.passed}, {"witness", c.witness}, {"detail", c.detail}});
    }
    return arr;
}

inline json admissibility_json(const AdmissibilityReport& rep) {
    json j;
    j["passed"] = rep.passed();
    j["theta_lower"] = std::isfinite(rep.theta.lower) ? json(rep.theta.lower) : json(nullptr);
    j["theta_upper"] = std::isfinite(rep.theta.upper) ? json(rep.theta.upper) : json(nullptr);
    j["novikov_bound"] = std::isfinite(rep.novikov_bound) ? json(rep.novikov_bound) : json(nullptr);
    j["checks"] = checks_json(rep.checks);
    j["warnings"] = rep.warnings;
    return j;
}

/// Model validation; replication mode downgrades failures to warnings.
inline void validate_or_throw(const Run& run, const CatalogModel& model) {
    const auto rep = validate_model(model);
    if (rep.passed()) return;
    if (replication_mode(run.cfg)) {
        for (const auto& c : rep.checks) {
            if (!c.passed) std::cerr << "warning: replication mode ignores failed check " << c.name << ": " << c.detail << "\n";
        }
        return;
    }
    throw ValidationError("model validation failed: " + rep.failures());
}

// ---------------------------------------------------------------------------
// simulate

inline int cmd_simulate(Run& run) {
    run.require_seed();
    const auto model = parse_model(run.cfg);
    const auto grid = parse_grid(run.cfg, model);
    validate_or_throw(run, model);
    const auto& block = run.cfg.contains("simulate") ? run.cfg["simulate"] : json::object();
    const std::size_t n_paths = block.contains("n_paths") ? count(block, "n_paths", "simulate") : 1;
    JumpAggregation mode = JumpAggregation::per_jump;
    if (block.contains("mode")) {
        const auto m = text(block, "mode", "simulate");
        if (m == "aggregated") {
            mode = JumpAggregation::aggregated;
        } else if (m != "per_jump") {
            throw ConfigError("simulate.mode: expected 'per_jump' or 'aggregated'");
        }
    }

    std::ofstream csv(run.out / "paths.csv", std::ios::binary);
    csv << "path_id,time,value,is_jump\n";
    constexpr std::size_t kChunk = 256;
    double min_value = kInf;
    std::size_t total_jumps = 0;
    std::vector<SimPath> chunk;
    for (std::size_t first = 0; first < n_paths; first += kChunk) {
        const std::size_t n = std::min(kChunk, n_paths - first);
        chunk.assign(n, SimPath{});
        parallel_for(n, run.threads, [&](std::size_t i) {
            const std::size_t id = first + i;
            try {
                auto rng = stream_for(run.seed, id);
                const auto js = draw_jump_stream(model.levy, grid.horizon, rng);
                chunk[i] = log_em_path(model, grid, js, mode);
            } catch (const Error& e) {
                throw PathError(id, e.what());
            }
        });
        std::string buf;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = chunk[i];
            const std::string id = std::to_string(first + i);
            min_value = std::min(min_value, p.min_value());
            total_jumps += p.jumps.size();
            std::size_t j = 0;
            for (std::size_t k = 0; k <= grid.steps; ++k) {
                const double t = grid.time(k);
                for (; j < p.jumps.size() && p.jumps[j].time <= t; ++j) {
                    buf += id + "," + num(p.jumps[j].time) + "," + num(p.jumps[j].value) + ",1\n";
                }
                buf += id + "," + num(t) + "," + num(p.values[k]) + ",0\n";
            }
        }
        csv << buf;
    }
    csv.close();

    json summary = provenance(run);
    summary["n_paths"] = n_paths;
    summary["steps"] = grid.steps;
    summary["dt"] = grid.dt;
    summary["min_value"] = min_value;
    summary["jumps"] = total_jumps;
    summary["all_positive"] = min_value > 0.0;
    write_json(run.out / "simulate.json", summary);
    finish(run, {"paths.csv", "simulate.json"});
    return kOk;
}

// ---------------------------------------------------------------------------
// price

inline HistoryPath parse_history(const json& block, const CatalogModel& model, const MarketSpec& market,
                                 double default_dt) {
    const auto& h = field(block, "history", "price");
    const double dt = number_or(h, "dt", default_dt, "price.history");
    std::size_t m = 0;
    if (!(dt > 0.0) || !is_integer_ratio(model.delay, dt, m)) {
        throw ConfigError("price.history.dt: must divide the delay");
    }
    HistoryPath hist{market.valuation_time, dt, {}};
    if (h.contains("values")) {
        hist.values = numbers(h, "values", "price.history");
    } else {
        hist.values.assign(m + 1, number(h, "constant", "price.history"));
    }
    return hist;
}

inline int cmd_price(Run& run) {
    const auto& block = field(run.cfg, "price", "config");
    const std::string method = text(block, "method", "price");
    const auto market = parse_market(run.cfg);
    std::vector<double> strikes{market.strike};
    if (block.contains("strikes")) strikes = numbers(block, "strikes", "price");
    OptionKind kind = OptionKind::call;
    if (block.contains("kind")) {
        const auto k = text(block, "kind", "price");
        if (k == "put") {
            kind = OptionKind::put;
        } else if (k != "call") {
            throw ConfigError("price.kind: expected 'call' or 'put'");
        }
    }

    json out = provenance(run);
    out["method"] = method;
    std::vector<PricingResult> results;

    if (method == "bs") {
        const double sigma = number(block, "sigma", "price");
        const double spot = number(block, "spot", "price");
        for (double k : strikes) {
            PricingResult r{price_black_scholes(spot, k, market.r, sigma, market.maturity - market.valuation_time),
                            0.0, "bs", 0, 0, {{"strike", k}}};
            results.push_back(r);
        }
    } else if (method == "bs_drift") {
        run.require_seed();
        const double sigma = number(block, "sigma", "price");
        const double spot = number(block, "spot", "price");
        const double alpha = number(block, "alpha", "price");
        const std::size_t steps = count(block, "steps", "price");
        const std::size_t n_paths = count(block, "n_paths", "price");
        const auto terminals =
            bs_drift_terminals(spot, alpha, sigma, market.maturity, steps, n_paths, run.seed, run.threads);
        results = strip_from_terminals(terminals, strikes, std::exp(-market.r * market.maturity), kind,
                                       "bs_drift", run.seed);
    } else if (method == "mc" || method == "fourier") {
        const auto model = parse_model(run.cfg);
        validate_or_throw(run, model);
        const auto conv = parse_convention(run.cfg);
        const auto adm = check_admissibility(model, market.r, market.maturity, conv);
        out["admissibility"] = admissibility_json(adm);
        for (const auto& w : adm.warnings) std::cerr << "warning: " << w << "\n";
        if (method == "mc") {
            run.require_seed();
            const std::size_t n_paths = count(block, "n_paths", "price");
            McOptions mo{run.threads, kind, conv};
            if (market.valuation_time == 0.0) {
                const auto grid = parse_grid(run.cfg, model);
                results = price_mc_strip(model, market, grid, strikes, n_paths, run.seed, mo);
            } else {
                const double dt = run.cfg.contains("grid") ? parse_grid(run.cfg, model).dt : model.delay / 64.0;
                const auto hist = parse_history(block, model, market, dt);
                results = price_mc_conditional_strip(model, market, hist, strikes, n_paths, run.seed, mo);
            }
        } else {
            if (kind != OptionKind::call) throw ConfigError("price.kind: fourier prices calls only");
            if (market.valuation_time < market.maturity - model.delay - 1e-12 * market.maturity) {
                throw PreconditionError("fourier pricing requires t in the last delay period [T - b, T]: outside last delay period");
            }
            const double dt = run.cfg.contains("grid") ? parse_grid(run.cfg, model).dt : model.delay / 64.0;
            const auto hist = parse_history(block, model, market, dt);
            FourierOptions fo{conv, block.contains("legacy_w") && block["legacy_w"].get<bool>()};
            for (double k : strikes) {
                MarketSpec mk = market;
                mk.strike = k;
                auto r = price_fourier(model, mk, hist, fo);
                r.diagnostics["strike"] = k;
                results.push_back(r);
            }
        }
    } else {
        throw ConfigError("price.method: expected mc, fourier, bs or bs_drift");
    }

    json arr = json::array();
    for (const auto& r : results) {
        json e{{"strike", r.diagnostics.at("strike")}, {"price", r.price}, {"stderr", r.std_error},
               {"method", r.method}, {"n_paths", r.n_paths}};
        json d = json::object();
        for (const auto& [k, v] : r.diagnostics) {
            if (k != "strike") d[k] = v;
        }
        e["diagnostics"] = d;
        arr.push_back(e);
    }
    out["price"] = results.front().price;
    out["stderr"] = results.front().std_error;
    out["results"] = arr;
    write_json(run.out / "price.json", out);
    finish(run, {"price.json"});
    return kOk;
}

// ---------------------------------------------------------------------------
// table

inline int cmd_table(Run& run) {
    run.require_seed();
    if (!replication_mode(run.cfg)) {
        throw ConfigError("table: requires \"replication_mode\": true");
    }
    std::cerr << "warning: replication mode prices under the physical measure; results are not arbitrage-free\n";
    const auto model = parse_model(run.cfg);
    validate_or_throw(run, model);
    const auto& block = field(run.cfg, "table", "config");
    const double r = number(block, "r", "table");
    const double sigma = number(block, "sigma", "table");
    const double alpha = number(block, "alpha", "table");
    const double period = number(block, "period_length", "table");   // one month in model time
    const std::size_t steps_per_period = count(block, "steps_per_period", "table");
    const std::size_t n_paths = count(block, "n_paths", "table");
    const double tolerance = number_or(block, "tolerance", 1.0, "table");
    const double spot = model.phi(0.0);
    const auto& rows = field(block, "rows", "table");

    std::string csv =
        "months,strike,bs_closed_form,bs_alpha_mc,bs_alpha_mc_stderr,jump_mc,jump_mc_stderr,"
        "reference_bs,reference_jump,market\n";
    std::string md = "| months | strike | BS (r) | BS (alpha, MC) | jump model (MC) | reference BS | reference jump | market |\n"
                     "|---|---|---|---|---|---|---|---|\n";
    json rows_out = json::array();
    bool jump_ok = true;
    bool bs_r_ok = true;
    bool bs_alpha_ok = true;
    bool have_first = false;

    // group rows by maturity so each maturity shares its paths across strikes
    std::vector<int> months_list;
    for (const auto& row : rows) {
        const int mo = field(row, "months", "table.rows").get<int>();
        if (std::find(months_list.begin(), months_list.end(), mo) == months_list.end()) months_list.push_back(mo);
    }
    for (int mo : months_list) {
        if (mo < 1) throw ConfigError("table.rows.months: must be >= 1");
        std::vector<json> sel;
        std::vector<double> strikes;
        for (const auto& row : rows) {
            if (row["months"].get<int>() == mo) {
                sel.push_back(row);
                strikes.push_back(number(row, "strike", "table.rows"));
            }
        }
        const double maturity = period * mo;
        const std::size_t steps = steps_per_period * static_cast<std::size_t>(mo);
        SimGrid grid{};
        try {
            grid = make_grid(maturity, steps, model.delay);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("table: ") + e.what());
        }
        const std::uint64_t seed = run.seed + static_cast<std::uint64_t>(mo);
        const auto jump_terms = p_terminal_values(model, grid, n_paths, seed, run.threads);
        const auto jump = strip_from_terminals(jump_terms, strikes, std::exp(-r * maturity), OptionKind::call,
                                               "jump_p_mc", seed);
        const auto bs_terms =
            bs_drift_terminals(spot, alpha, sigma, maturity, steps, n_paths, seed + 1000, run.threads);
        const auto bs_alpha = strip_from_terminals(bs_terms, strikes, std::exp(-r * maturity), OptionKind::call,
                                                   "bs_drift", seed + 1000);
        for (std::size_t i = 0; i < strikes.size(); ++i) {
            const double k = strikes[i];
            const double bs_r = price_black_scholes(spot, k, r, sigma, maturity);
            const double ref_bs = number(sel[i], "reference_bs", "table.rows");
            const double ref_jump = number(sel[i], "reference_jump", "table.rows");
            const double market = number_or(sel[i], "market", std::nan(""), "table.rows");
            if (mo == months_list.front()) {
                have_first = true;
                jump_ok = jump_ok && std::abs(jump[i].price - ref_jump) <= tolerance;
                bs_r_ok = bs_r_ok && std::abs(bs_r - ref_bs) <= tolerance;
                bs_alpha_ok = bs_alpha_ok && std::abs(bs_alpha[i].price - ref_bs) <= tolerance;
            }
            csv += std::to_string(mo) + "," + num(k) + "," + num(bs_r) + "," + num(bs_alpha[i].price) + "," +
                   num(bs_alpha[i].std_error) + "," + num(jump[i].price) + "," + num(jump[i].std_error) + "," +
                   num(ref_bs) + "," + num(ref_jump) + "," + num(market) + "\n";
            char line[256];
            std::snprintf(line, sizeof line, "| %d | %.0f | %.2f | %.2f | %.2f | %.2f | %.2f | %.2f |\n", mo, k,
                          bs_r, bs_alpha[i].price, jump[i].price, ref_bs, ref_jump, market);
            md += line;
            rows_out.push_back({{"months", mo},
                                {"strike", k},
                                {"bs_closed_form", bs_r},
                                {"bs_alpha_mc", bs_alpha[i].price},
                                {"bs_alpha_mc_stderr", bs_alpha[i].std_error},
                                {"jump_mc", jump[i].price},
                                {"jump_mc_stderr", jump[i].std_error},
                                {"reference_bs", ref_bs},
                                {"reference_jump", ref_jump}});
        }
    }
    write_text(run.out / "table.csv", csv);
    write_text(run.out / "table.md", md);
    json summary = provenance(run);
    summary["rows"] = rows_out;
    summary["label"] = "replication mode: physical-measure simulation, not arbitrage-free";
    summary["tolerance"] = tolerance;
    summary["first_maturity_checks"] = {{"jump_within_tolerance", have_first && jump_ok},
                                        {"bs_closed_form_within_tolerance", have_first && bs_r_ok},
                                        {"bs_alpha_mc_within_tolerance", have_first && bs_alpha_ok}};
    write_json(run.out / "table.json", summary);
    finish(run, {"table.csv", "table.md", "table.json"});
    return kOk;
}

// ---------------------------------------------------------------------------
// converge

inline int cmd_converge(Run& run) {
    const auto& block = field(run.cfg, "converge", "config");
    const auto& levels_j = field(block, "levels", "converge");
    if (!levels_j.is_array()) throw ConfigError("converge.levels: expected an array");
    std::vector<std::size_t> levels;
    for (const auto& l : levels_j) {
        if (!l.is_number_integer() || l.get<long long>() < 1) {
            throw ConfigError("converge.levels: expected positive step counts");
        }
        levels.push_back(l.get<std::size_t>());
    }
    if (levels.size() < 4) throw ConfigError("converge.levels: need >= 4 levels for a rate fit");
    const double threshold = number_or(block, "threshold", 0.4, "converge");
    const double min_r2 = number_or(block, "min_r2", 0.9, "converge");
    const bool synthetic = block.contains("synthetic") && block["synthetic"].get<bool>();
    const double horizon = number(block, "horizon", "converge");

    std::vector<ErrorEstimate> est;
    std::size_t n_paths = 0;
    if (synthetic) {
        // injected power law e = Delta^{1/2}: exercises the fit and the artifacts
        for (std::size_t n : levels) {
            const double d = horizon / static_cast<double>(n);
            est.push_back({d, std::sqrt(d), 0.0, 0.0});
        }
    } else {
        run.require_seed();
        const auto model = parse_model(run.cfg);
        ConvergenceStudy st;
        st.horizon = horizon;
        st.steps = levels;
        st.reference_steps = count(block, "reference_steps", "converge");
        st.n_paths = count(block, "n_paths", "converge");
        st.p = number_or(block, "p", 2.0, "converge");
        st.seed = run.seed;
        st.threads = run.threads;
        n_paths = st.n_paths;
        try {
            make_grid(horizon, st.reference_steps, model.delay);
            for (std::size_t n : levels) {
                make_grid(horizon, n, model.delay);
                if (st.reference_steps % n != 0) throw DomainError("reference_steps must be a multiple of every level");
            }
        } catch (const DomainError& e) {
            throw ConfigError(std::string("converge: ") + e.what());
        }
        est = coupled_errors(model, st);
    }
    const auto fit = fit_rate(est);
    std::string csv = "delta,e_hat,stderr\n";
    for (const auto& e : est) csv += num(e.delta) + "," + num(e.e_hat) + "," + num(e.std_error) + "\n";
    write_text(run.out / "converge.csv", csv);

    const bool pass = fit.slope >= threshold && fit.r2 >= min_r2;
    json summary = provenance(run);
    summary["slope"] = fit.slope;
    summary["intercept"] = fit.intercept;
    summary["r2"] = fit.r2;
    summary["n_paths"] = n_paths;
    summary["threshold"] = threshold;
    summary["min_r2"] = min_r2;
    summary["synthetic"] = synthetic;
    summary["pass"] = pass;
    write_json(run.out / "converge.json", summary);
    finish(run, {"converge.csv", "converge.json"});
    if (!pass) {
        std::cerr << "converge: slope " << fit.slope << " (R^2 " << fit.r2 << ") below threshold " << threshold << "\n";
        return kNumerical;
    }
    return kOk;
}

/// Runs one command and maps failures onto the exit-code contract.
inline int dispatch(const std::string& command, const RunOptions& opt) {
    try {
        Run run = load_run(command, opt);
        if (command == "simulate") return cmd_simulate(run);
        if (command == "price") return cmd_price(run);
        if (command == "table") return cmd_table(run);
        if (command == "converge") return cmd_converge(run);
        throw ConfigError("unknown command " + command);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition: " << e.what() << "\n";
        return kPrecondition;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
}

} // namespace sdde::cli
