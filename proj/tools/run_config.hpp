#ifndef QDRIFT_TOOLS_RUN_CONFIG_HPP
#define QDRIFT_TOOLS_RUN_CONFIG_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <qdrift/errors.hpp>
#include <qdrift/payoff.hpp>
#include <qdrift/pricing.hpp>
#include <qdrift/state.hpp>

namespace qdrift::cli {

/// Everything a command needs; defaults are the Figure-1 parameter set.
struct RunConfig {
    std::string command;
    int figure = 1;

    std::string state = "gaussian"; ///< "gaussian" or a path to a JSON state file
    double x0 = 0.0;
    double sigma_s = 0.2;
    double alpha = 0.0;
    double k0 = 0.0;

    std::string payoff = "call";
    double strike = 0.0;
    double beta = 1.0;
    double epsilon = 1e-3;

    double sigma_h = 0.2;
    std::string potential = "none"; ///< none | linear:<c> | quadratic:<c>
    double t = 0.0;
    double rate = 0.0;

    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    std::optional<int> n;
    int grid_n = 4096;
    std::optional<double> x_min;
    std::optional<double> x_max;
    int steps = 51;
    int segment = 0;
    std::vector<double> sigma_h_list{0.05, 0.1, 0.2, 0.4};

    bool spectral = false; ///< price: attach the spectral drift

    std::string out;
    std::string format = "csv";
};

/// Keys accepted in a --config file, with their JSON types.
inline const std::vector<std::pair<std::string, nlohmann::json::value_t>>& config_keys() {
    using t = nlohmann::json::value_t;
    static const std::vector<std::pair<std::string, t>> keys = {
        {"command", t::string},     {"figure", t::number_integer},  {"state", t::string},
        {"x0", t::number_float},    {"sigma_s", t::number_float},   {"alpha", t::number_float},
        {"k0", t::number_float},    {"payoff", t::string},          {"strike", t::number_float},
        {"beta", t::number_float},  {"epsilon", t::number_float},   {"sigma_h", t::number_float},
        {"potential", t::string},   {"t", t::number_float},         {"rate", t::number_float},
        {"lambda_min", t::number_float}, {"lambda_max", t::number_float}, {"n", t::number_integer},
        {"grid_n", t::number_integer},   {"x_min", t::number_float},      {"x_max", t::number_float},
        {"steps", t::number_integer},    {"segment", t::number_integer},  {"sigma_h_list", t::array},
        {"spectral", t::boolean},        {"out", t::string},              {"format", t::string},
    };
    return keys;
}

namespace detail {

inline bool type_matches(const nlohmann::json& v, nlohmann::json::value_t want) {
    using t = nlohmann::json::value_t;
    switch (want) {
    case t::number_float: return v.is_number();
    case t::number_integer: return v.is_number_integer();
    case t::string: return v.is_string();
    case t::boolean: return v.is_boolean();
    case t::array: return v.is_array() && std::all_of(v.begin(), v.end(), [](const auto& e) { return e.is_number(); });
    default: return false;
    }
}

} // namespace detail

/// Structural check of a config document against the shipped schema.
inline void validate_config_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& keys = config_keys();
        auto k = std::find_if(keys.begin(), keys.end(), [&](const auto& p) { return p.first == it.key(); });
        if (k == keys.end()) throw ValidationError("unknown config key '" + it.key() + "'");
        if (!detail::type_matches(it.value(), k->second))
            throw ValidationError("config key '" + it.key() + "' has the wrong type");
    }
}

inline void apply_config_json(RunConfig& c, const nlohmann::json& j) {
    validate_config_json(j);
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    auto get_opt = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<typename std::decay_t<decltype(field)>::value_type>();
    };
    get("command", c.command);
    get("figure", c.figure);
    get("state", c.state);
    get("x0", c.x0);
    get("sigma_s", c.sigma_s);
    get("alpha", c.alpha);
    get("k0", c.k0);
    get("payoff", c.payoff);
    get("strike", c.strike);
    get("beta", c.beta);
    get("epsilon", c.epsilon);
    get("sigma_h", c.sigma_h);
    get("potential", c.potential);
    get("t", c.t);
    get("rate", c.rate);
    get_opt("lambda_min", c.lambda_min);
    get_opt("lambda_max", c.lambda_max);
    get_opt("n", c.n);
    get("grid_n", c.grid_n);
    get_opt("x_min", c.x_min);
    get_opt("x_max", c.x_max);
    get("steps", c.steps);
    get("segment", c.segment);
    get("sigma_h_list", c.sigma_h_list);
    get("spectral", c.spectral);
    get("out", c.out);
    get("format", c.format);
}

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j = {
        {"command", c.command}, {"state", c.state},       {"x0", c.x0},           {"sigma_s", c.sigma_s},
        {"alpha", c.alpha},     {"k0", c.k0},             {"payoff", c.payoff},   {"strike", c.strike},
        {"beta", c.beta},       {"epsilon", c.epsilon},   {"sigma_h", c.sigma_h}, {"potential", c.potential},
        {"t", c.t},             {"rate", c.rate},         {"grid_n", c.grid_n},   {"steps", c.steps},
        {"segment", c.segment}, {"sigma_h_list", c.sigma_h_list}, {"format", c.format},
        {"spectral", c.spectral},
    };
    if (c.command == "figure") j["figure"] = c.figure;
    if (c.lambda_min) j["lambda_min"] = *c.lambda_min;
    if (c.lambda_max) j["lambda_max"] = *c.lambda_max;
    if (c.n) j["n"] = *c.n;
    if (c.x_min) j["x_min"] = *c.x_min;
    if (c.x_max) j["x_max"] = *c.x_max;
    return j;
}

/// Semantic checks that do not need any numerics.
inline void validate(const RunConfig& c) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be positive");
    };
    positive(c.sigma_s, "sigma_s");
    positive(c.sigma_h, "sigma_h");
    positive(c.epsilon, "epsilon");
    positive(c.beta, "beta");
    if (!(c.t >= 0.0)) throw ValidationError("t must be non-negative");
    if (c.figure < 1 || c.figure > 3) throw ValidationError("figure id must be 1, 2 or 3");
    if (c.lambda_min.has_value() != c.lambda_max.has_value())
        throw ValidationError("lambda_min and lambda_max must be given together");
    if (c.lambda_min && !(*c.lambda_max > *c.lambda_min)) throw ValidationError("lambda_min must be below lambda_max");
    if (c.n && *c.n < 64) throw ValidationError("n must be at least 64");
    if (c.x_min.has_value() != c.x_max.has_value()) throw ValidationError("x_min and x_max must be given together");
    if (c.x_min && !(*c.x_max > *c.x_min)) throw ValidationError("x_min must be below x_max");
    if (c.grid_n < 256) throw ValidationError("grid_n must be at least 256");
    if (c.steps < 2) throw ValidationError("steps must be at least 2");
    if (c.format != "csv" && c.format != "json" && c.format != "svg")
        throw ValidationError("format must be csv, json or svg");
    for (double s : c.sigma_h_list) positive(s, "sigma_h_list entries");
}

inline MarketState make_state(const RunConfig& c) {
    if (c.state == "gaussian") return make_gaussian(c.x0, c.sigma_s, c.alpha, c.k0);
    std::ifstream is(c.state);
    if (!is) throw IoError("cannot read state file '" + c.state + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("state file is not valid JSON: " + std::string(e.what()));
    }
    return state_from_json(j);
}

inline Payoff make_payoff(const RunConfig& c) {
    if (c.payoff == "forward") return Payoff::forward(c.strike);
    if (c.payoff == "call") return Payoff::call(c.strike);
    if (c.payoff == "put") return Payoff::put(c.strike);
    if (c.payoff == "straddle") return Payoff::straddle(c.strike);
    if (c.payoff == "digital") return Payoff::digital(c.strike, c.epsilon);
    if (c.payoff == "smooth_call") return Payoff::smooth_call(c.strike, c.beta);
    throw ValidationError("unknown payoff '" + c.payoff + "'");
}

inline HamiltonianSpec make_hamiltonian(const RunConfig& c) {
    if (c.potential == "none") return HamiltonianSpec::free(c.sigma_h);
    const auto colon = c.potential.find(':');
    const std::string kind = c.potential.substr(0, colon);
    double coef = 1.0;
    if (colon != std::string::npos) {
        try {
            std::size_t used = 0;
            coef = std::stod(c.potential.substr(colon + 1), &used);
            if (used != c.potential.size() - colon - 1) throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            throw ValidationError("bad potential coefficient in '" + c.potential + "'");
        }
    }
    if (kind == "linear") return HamiltonianSpec::with_potential(c.sigma_h, [coef](double x) { return coef * x; });
    if (kind == "quadratic")
        return HamiltonianSpec::with_potential(c.sigma_h, [coef](double x) { return coef * x * x; });
    throw ValidationError("unknown potential '" + c.potential + "'");
}

} // namespace qdrift::cli

#endif // QDRIFT_TOOLS_RUN_CONFIG_HPP
