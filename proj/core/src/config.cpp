#include "spinflow/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace spinflow {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Field {
    enum class Type { integer, unsigned64, signed64, longint, real, text, boolean } type;
    void* ptr;
};

std::map<std::string, Field> field_table(RunConfig& c) {
    using T = Field::Type;
    return {
        {"model.L", {T::integer, &c.model_L}},
        {"model.gamma", {T::real, &c.model_gamma}},
        {"model.C_kappa", {T::real, &c.model_C_kappa}},
        {"model.I_max", {T::integer, &c.model_I_max}},
        {"model.ensemble", {T::text, &c.model_ensemble}},
        {"model.seed", {T::unsigned64, &c.model_seed}},
        {"flow.beta", {T::text, &c.flow_beta}},
        {"flow.delta", {T::real, &c.flow_delta}},
        {"flow.epsilon", {T::real, &c.flow_epsilon}},
        {"flow.k_max", {T::integer, &c.flow_k_max}},
        {"flow.eta_den", {T::real, &c.flow_eta_den_margin}},
        {"flow.eta_series", {T::real, &c.flow_eta_series}},
        {"flow.eta_conv", {T::real, &c.flow_eta_conv}},
        {"flow.mode", {T::text, &c.flow_mode}},
        {"flow.n_max", {T::integer, &c.flow_n_max}},
        {"transport.bath_family", {T::text, &c.transport_bath_family}},
        {"transport.bath_state", {T::text, &c.transport_bath_state}},
        {"transport.beta_l", {T::real, &c.transport_beta_l}},
        {"transport.beta_r", {T::real, &c.transport_beta_r}},
        {"transport.lengths", {T::text, &c.transport_lengths}},
        {"transport.T", {T::real, &c.transport_T}},
        {"transport.n_seeds", {T::integer, &c.transport_n_seeds}},
        {"experiment.seeds", {T::text, &c.experiment_seeds}},
        {"experiment.outdir", {T::text, &c.experiment_outdir}},
        {"experiment.threads", {T::integer, &c.experiment_threads}},
        {"experiment.dump_debug", {T::boolean, &c.experiment_dump_debug}},
        {"budgets.dense_cutoff_L", {T::integer, &c.budget_dense_cutoff_L}},
        {"budgets.dense_dim_cap", {T::signed64, &c.budget_dense_dim_cap}},
        {"budgets.census_nodes", {T::unsigned64, &c.budget_census_nodes}},
        {"budgets.diagrams", {T::unsigned64, &c.budget_diagrams}},
        {"census.k_max", {T::integer, &c.census_k_max}},
        {"census.w_max", {T::longint, &c.census_w_max}},
        {"scan.epsilons", {T::text, &c.scan_epsilons}},
        {"scan.samples", {T::integer, &c.scan_samples}},
        {"lemma.dims", {T::integer, &c.lemma_dims}},
        {"lemma.trials", {T::integer, &c.lemma_trials}},
        {"lemma.resolvent_trials", {T::integer, &c.lemma_resolvent_trials}},
    };
}

void assign(RunConfig& c, const std::string& key, const std::string& value) {
    auto table = field_table(c);
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown key " + key);
    const std::string v = trim(value);
    try {
        switch (it->second.type) {
            case Field::Type::integer: *static_cast<int*>(it->second.ptr) = std::stoi(v); break;
            case Field::Type::unsigned64:
                *static_cast<std::uint64_t*>(it->second.ptr) = std::stoull(v);
                break;
            case Field::Type::signed64:
                *static_cast<std::int64_t*>(it->second.ptr) = std::stoll(v);
                break;
            case Field::Type::longint:
                *static_cast<long long*>(it->second.ptr) = std::stoll(v);
                break;
            case Field::Type::real: *static_cast<double*>(it->second.ptr) = std::stod(v); break;
            case Field::Type::text: *static_cast<std::string*>(it->second.ptr) = v; break;
            case Field::Type::boolean:
                if (v == "true" || v == "1")
                    *static_cast<bool*>(it->second.ptr) = true;
                else if (v == "false" || v == "0")
                    *static_cast<bool*>(it->second.ptr) = false;
                else
                    throw ConfigError("bad boolean for " + key + ": " + v);
                break;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad value for " + key + ": " + v);
    }
}

}  // namespace

void RunConfig::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    apply_text(ss.str(), path);
}

void RunConfig::apply_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (section.empty()) throw ConfigError(origin + ": key " + key + " outside any section");
        assign(*this, section + "." + key, line.substr(eq + 1));
    }
}

void RunConfig::apply_override(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like section.key=value: " + assignment);
    std::string key = trim(assignment.substr(0, eq));
    if (key.find('.') == std::string::npos)
        throw ConfigError("override must look like section.key=value: " + assignment);
    assign(*this, key, assignment.substr(eq + 1));
}

std::vector<std::uint64_t> RunConfig::seed_list() const {
    std::vector<std::uint64_t> out;
    std::string s = experiment_seeds;
    auto colon = s.find(':');
    if (colon != std::string::npos) {
        std::uint64_t start = std::stoull(trim(s.substr(0, colon)));
        std::uint64_t count = std::stoull(trim(s.substr(colon + 1)));
        for (std::uint64_t i = 0; i < count; ++i) out.push_back(start + i);
        return out;
    }
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(std::stoull(tok));
    }
    return out;
}

std::vector<int> RunConfig::length_list() const {
    std::vector<int> out;
    std::istringstream in(transport_lengths);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

std::vector<double> RunConfig::epsilon_list() const {
    std::vector<double> out;
    std::istringstream in(scan_epsilons);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

void RunConfig::validate() const {
    if (model_L < 1) throw ConfigError("model.L must be >= 1");
    if (!(model_gamma >= 0.0 && model_gamma < 1.0))
        throw ConfigError("model.gamma must be in [0,1)");
    if (model_I_max < 1 || model_I_max > model_L)
        throw ConfigError("model.I_max must be in [1, model.L]");
    if (flow_mode != "aggregate" && flow_mode != "triadic")
        throw ConfigError("flow.mode must be aggregate or triadic");
    if (flow_k_max < 0) throw ConfigError("flow.k_max must be >= 0");
    if (seed_list().empty()) throw ConfigError("experiment.seeds must be nonempty");
    if (transport_n_seeds < 1) throw ConfigError("transport.n_seeds must be >= 1");
    if (census_w_max < 1) throw ConfigError("census.w_max must be >= 1");
    if (scan_samples < 1) throw ConfigError("scan.samples must be >= 1");
    for (double e : epsilon_list())
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("scan.epsilons entries must be in (0,1)");
}

std::string RunConfig::canonical_text() const {
    RunConfig copy = *this;
    auto table = field_table(copy);
    std::string out;
    for (const auto& [key, field] : table) {
        out += key;
        out += "=";
        switch (field.type) {
            case Field::Type::integer: out += std::to_string(*static_cast<int*>(field.ptr)); break;
            case Field::Type::unsigned64:
                out += std::to_string(*static_cast<std::uint64_t*>(field.ptr));
                break;
            case Field::Type::signed64:
                out += std::to_string(*static_cast<std::int64_t*>(field.ptr));
                break;
            case Field::Type::longint:
                out += std::to_string(*static_cast<long long*>(field.ptr));
                break;
            case Field::Type::real: out += fmt_double(*static_cast<double*>(field.ptr)); break;
            case Field::Type::text: out += *static_cast<std::string*>(field.ptr); break;
            case Field::Type::boolean:
                out += *static_cast<bool*>(field.ptr) ? "true" : "false";
                break;
        }
        out += "\n";
    }
    return out;
}

std::uint64_t fnv1a_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace spinflow
