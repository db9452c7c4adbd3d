#include "quantshape/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "quantshape/serialization.hpp"

namespace quantshape {

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

double positive(const json& j, const std::string& name) {
    if (!j.is_number()) throw ConfigError(name + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v) || !(v > 0.0)) throw ConfigError(name + " must be finite and > 0");
    return v;
}

double non_negative(const json& j, const std::string& name) {
    if (!j.is_number()) throw ConfigError(name + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v) || v < 0.0) throw ConfigError(name + " must be finite and >= 0");
    return v;
}

long long integer(const json& j, const std::string& name, long long lo, long long hi) {
    if (!j.is_number_integer()) throw ConfigError(name + " must be an integer");
    const auto v = j.get<long long>();
    if (v < lo || v > hi) {
        throw ConfigError(name + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return v;
}

}  // namespace

std::vector<double> RunConfig::tradeoff_caps() const {
    if (caps) return *caps;
    return default_cap_grid(max_bits, cap_count);
}

RunConfig parse_config(const json& j) {
    only_keys(j, "config", {"plant", "design", "iir", "tradeoff", "simulation", "output_dir", "seed"});
    RunConfig cfg;
    cfg.design.filter_order = 4;
    cfg.design.gamma_eps = 0.05;
    cfg.design.l_y = std::numbers::pi / 2.0;

    if (j.contains("plant")) {
        const json& p = j.at("plant");
        if (p.is_string()) {
            if (p.get<std::string>() != "pendulum") throw ConfigError("unknown plant preset '" + p.get<std::string>() + "'");
        } else {
            try {
                cfg.design.plant = statespace_from_json(p);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("plant: ") + e.what());
            }
            cfg.pendulum = false;
        }
    }
    if (cfg.pendulum) cfg.design.plant = closed_loop_H(cfg.bench);

    if (j.contains("design")) {
        const json& d = j.at("design");
        only_keys(d, "design", {"filter_order", "gamma_eps", "l_y", "truncation", "tail_tol"});
        if (d.contains("filter_order")) cfg.design.filter_order = static_cast<std::size_t>(integer(d.at("filter_order"), "design.filter_order", 1, 64));
        if (d.contains("gamma_eps")) cfg.design.gamma_eps = positive(d.at("gamma_eps"), "design.gamma_eps");
        if (d.contains("l_y")) cfg.design.l_y = positive(d.at("l_y"), "design.l_y");
        if (d.contains("tail_tol")) cfg.design.tail_tol = positive(d.at("tail_tol"), "design.tail_tol");
        if (d.contains("truncation") && !d.at("truncation").is_null()) {
            cfg.design.truncation = static_cast<std::size_t>(integer(d.at("truncation"), "design.truncation", 1, 1000000));
        }
    }

    cfg.mu_eta_caps = default_mu_eta_caps();
    if (j.contains("iir")) {
        const json& d = j.at("iir");
        only_keys(d, "iir", {"alpha_grid", "alphas", "mu_eta_caps"});
        if (d.contains("alphas")) {
            const json& a = d.at("alphas");
            if (!a.is_array() || a.empty()) throw ConfigError("iir.alphas must be a non-empty array");
            std::vector<double> v;
            for (const auto& x : a) v.push_back(positive(x, "iir.alphas[]"));
            cfg.alphas = std::move(v);
        }
        if (d.contains("alpha_grid")) cfg.alpha_grid = static_cast<std::size_t>(integer(d.at("alpha_grid"), "iir.alpha_grid", 2, 100000));
        if (d.contains("mu_eta_caps")) {
            const json& caps = d.at("mu_eta_caps");
            if (!caps.is_array() || caps.empty()) throw ConfigError("iir.mu_eta_caps must be a non-empty array");
            cfg.mu_eta_caps.clear();
            for (const auto& c : caps) {
                if (c.is_null()) {
                    cfg.mu_eta_caps.emplace_back(std::nullopt);
                } else {
                    cfg.mu_eta_caps.emplace_back(positive(c, "iir.mu_eta_caps[]"));
                }
            }
        }
    }

    if (j.contains("tradeoff")) {
        const json& d = j.at("tradeoff");
        only_keys(d, "tradeoff", {"min_bits", "max_bits", "cap_count", "caps"});
        if (d.contains("min_bits")) cfg.min_bits = static_cast<int>(integer(d.at("min_bits"), "tradeoff.min_bits", 1, 30));
        if (d.contains("max_bits")) cfg.max_bits = static_cast<int>(integer(d.at("max_bits"), "tradeoff.max_bits", 1, 30));
        if (d.contains("cap_count")) cfg.cap_count = static_cast<std::size_t>(integer(d.at("cap_count"), "tradeoff.cap_count", 2, 100000));
        if (d.contains("caps")) {
            const json& caps = d.at("caps");
            if (!caps.is_array() || caps.empty()) throw ConfigError("tradeoff.caps must be a non-empty array");
            std::vector<double> v;
            for (const auto& c : caps) v.push_back(non_negative(c, "tradeoff.caps[]"));
            if (!std::is_sorted(v.begin(), v.end())) throw ConfigError("tradeoff.caps must be ascending");
            cfg.caps = std::move(v);
        }
        if (cfg.min_bits > cfg.max_bits) throw ConfigError("tradeoff.min_bits exceeds tradeoff.max_bits");
        if (cfg.caps && !(cfg.caps->back() < std::ldexp(1.0, cfg.max_bits))) {
            throw ConfigError("tradeoff.caps must stay below 2^max_bits");
        }
    }

    if (j.contains("simulation")) {
        const json& d = j.at("simulation");
        only_keys(d, "simulation", {"horizon", "bits", "trials"});
        if (d.contains("horizon")) cfg.horizon = non_negative(d.at("horizon"), "simulation.horizon");
        if (d.contains("bits")) cfg.sim_bits = static_cast<int>(integer(d.at("bits"), "simulation.bits", 1, 30));
        if (d.contains("trials")) cfg.trials = static_cast<std::size_t>(integer(d.at("trials"), "simulation.trials", 1, 10000000));
    }

    if (j.contains("output_dir")) {
        if (!j.at("output_dir").is_string() || j.at("output_dir").get<std::string>().empty()) {
            throw ConfigError("output_dir must be a non-empty string");
        }
        cfg.output_dir = j.at("output_dir").get<std::string>();
    }
    if (j.contains("seed")) cfg.seed = static_cast<std::uint64_t>(integer(j.at("seed"), "seed", 0, (1LL << 62)));

    try {
        cfg.design.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace quantshape
