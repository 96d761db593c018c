#include "tvcache/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tvcache/error.hpp"

namespace tvc {

using nlohmann::json;

namespace {

/// Reads one JSON object, remembering which keys were consumed so that
/// leftovers can be reported as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    double number(const std::string& key, double fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
        return v->get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        return as_integer(*v, key_path(key));
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
        return v->get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
        }
    }

    static std::int64_t as_integer(const json& v, const std::string& path) {
        if (v.is_number_integer()) return v.get<std::int64_t>();
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (d == std::floor(d) && std::abs(d) < 9.0e15) return static_cast<std::int64_t>(d);
        }
        throw ConfigError(path, "expected an integer");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::uint32_t to_u32(std::int64_t v, const std::string& path) {
    if (v < 0 || v > std::numeric_limits<std::uint32_t>::max()) throw ConfigError(path, "out of range");
    return static_cast<std::uint32_t>(v);
}

DynamicsMode mode_from_string(const std::string& s, const std::string& path) {
    if (s == "static") return DynamicsMode::static_profile;
    if (s == "deterministic-permutation") return DynamicsMode::deterministic_permutation;
    if (s == "random-permutation") return DynamicsMode::random_permutation;
    if (s == "explicit") return DynamicsMode::explicit_sequence;
    throw ConfigError(path, "unknown mode '" + s +
                                "' (expected static, deterministic-permutation, random-permutation or explicit)");
}

void read_params(const json& j, SystemParams& p) {
    Section s(j, "params");
    p.lambda_u = s.number("lambda_u", p.lambda_u);
    p.lambda_s = s.number("lambda_s", p.lambda_s);
    p.lambda_b = s.number("lambda_b", p.lambda_b);
    p.gamma = s.number("gamma", p.gamma);
    p.R = s.number("R", p.R);
    p.N = to_u32(s.integer("N", p.N), "params.N");
    p.M = to_u32(s.integer("M", p.M), "params.M");
    p.B = s.number("B", p.B);
    p.R0 = s.number("R0", p.R0);
    p.delta_slot = s.number("delta_slot", p.delta_slot);
    if (const auto* g = s.find("lambda_g")) {
        if (g->is_string()) {
            const auto v = g->get<std::string>();
            if (v == "lambda_s") {
                p.lambda_g_source = LambdaGSource::lambda_s;
            } else if (v == "lambda_u") {
                p.lambda_g_source = LambdaGSource::lambda_u;
            } else {
                throw ConfigError("params.lambda_g", "expected \"lambda_s\", \"lambda_u\" or a number");
            }
        } else if (g->is_number()) {
            p.lambda_g_source = LambdaGSource::custom;
            p.lambda_g_custom = g->get<double>();
        } else {
            throw ConfigError("params.lambda_g", "expected \"lambda_s\", \"lambda_u\" or a number");
        }
    }
    s.finish();
}

void read_dynamics(const json& j, ScenarioConfig& c) {
    Section s(j, "dynamics");
    c.dynamics.mode = mode_from_string(s.text("mode", to_string(c.dynamics.mode)), "dynamics.mode");
    c.zipf_theta = s.number("zipf_theta", c.zipf_theta);
    c.dynamics.period = s.number("period", c.dynamics.period);
    c.dynamics.pairs_per_change = to_u32(s.integer("pairs_per_change", c.dynamics.pairs_per_change),
                                         "dynamics.pairs_per_change");
    if (const auto* b = s.find("beta")) {
        if (!b->is_null()) {
            Section bs(*b, "dynamics.beta");
            GeometricBeta beta;
            beta.C = bs.number("C", beta.C);
            beta.rho = bs.number("rho", beta.rho);
            bs.finish();
            c.beta = beta;
        }
    }
    if (const auto* seq = s.find("sequence")) {
        if (!seq->is_array()) throw ConfigError("dynamics.sequence", "expected an array of profiles");
        c.dynamics.sequence.clear();
        std::int64_t slot = 0;
        for (const auto& row : *seq) {
            const auto path = "dynamics.sequence[" + std::to_string(slot) + "]";
            if (!row.is_array()) throw ConfigError(path, "expected an array of numbers");
            PopularityProfile p;
            p.slot = slot++;
            for (const auto& v : row) {
                if (!v.is_number()) throw ConfigError(path, "expected an array of numbers");
                p.probs.push_back(v.get<double>());
            }
            c.dynamics.sequence.push_back(std::move(p));
        }
    }
    s.finish();
}

void read_arrivals(const json& j, ArrivalModel& a) {
    Section s(j, "arrivals");
    const auto kind = s.text("kind", to_string(a.kind));
    if (kind == "bernoulli") {
        a.kind = ArrivalKind::bernoulli;
    } else if (kind == "poisson") {
        a.kind = ArrivalKind::poisson;
    } else {
        throw ConfigError("arrivals.kind", "expected \"bernoulli\" or \"poisson\"");
    }
    a.p = s.number("p", a.p);
    a.lambda_r = s.number("lambda_r", a.lambda_r);
    s.finish();
}

UpdateStrategy read_strategy(const json& j, const std::string& path) {
    Section s(j, path);
    const auto kind = s.text("kind", "");
    UpdateStrategy out;
    if (kind == "threshold") {
        out = UpdateStrategy::make_threshold(s.number("threshold", 0.0), s.integer("window", 1));
    } else if (kind == "periodic") {
        out = UpdateStrategy::make_periodic(s.integer("period", 0));
    } else if (kind == "never") {
        out = UpdateStrategy::make_never();
    } else {
        throw ConfigError(path + ".kind", "expected \"threshold\", \"periodic\" or \"never\"");
    }
    s.finish();
    return out;
}

std::vector<std::int64_t> int_list(const json& v, const std::string& path) {
    std::vector<std::int64_t> out;
    if (v.is_array()) {
        for (const auto& x : v) out.push_back(Section::as_integer(x, path));
    } else {
        out.push_back(Section::as_integer(v, path));
    }
    return out;
}

std::vector<double> number_list(const json& v, const std::string& path) {
    std::vector<double> out;
    auto one = [&](const json& x) {
        if (!x.is_number()) throw ConfigError(path, "expected a number or an array of numbers");
        out.push_back(x.get<double>());
    };
    if (v.is_array()) {
        for (const auto& x : v) one(x);
    } else {
        one(v);
    }
    return out;
}

std::optional<std::pair<double, double>> pair_or_keyword(const json& v, const std::string& path,
                                                         const std::string& keyword) {
    if (v.is_string()) {
        if (v.get<std::string>() == keyword) return std::nullopt;
        throw ConfigError(path, "expected \"" + keyword + "\" or a pair [even, odd]");
    }
    const auto vals = number_list(v, path);
    if (vals.size() != 2) throw ConfigError(path, "expected \"" + keyword + "\" or a pair [even, odd]");
    return std::make_pair(vals[0], vals[1]);
}

void read_bounds(const json& j, BoundsSettings& b) {
    Section s(j, "bounds");
    try {
        b.model = bound_model_from_string(s.text("model", to_string(b.model)));
    } catch (const InvalidArgument& e) {
        throw ConfigError("bounds.model", e.what());
    }
    if (const auto* v = s.find("t")) b.t_grid = int_list(*v, "bounds.t");
    if (const auto* v = s.find("T")) b.T_grid = int_list(*v, "bounds.T");
    if (const auto* v = s.find("delta")) b.delta_grid = number_list(*v, "bounds.delta");
    b.block_length = s.integer("block_length", b.block_length);
    if (const auto* v = s.find("rademacher")) b.rademacher = pair_or_keyword(*v, "bounds.rademacher", "estimate");
    if (const auto* v = s.find("discrepancy")) b.discrepancy = pair_or_keyword(*v, "bounds.discrepancy", "oracle");
    b.n_sigma = to_u32(s.integer("n_sigma", b.n_sigma), "bounds.n_sigma");
    if (const auto* v = s.find("alpha_min"); v && !v->is_null()) {
        if (!v->is_number()) throw ConfigError("bounds.alpha_min", "expected a number");
        b.alpha_min = v->get<double>();
    }
    if (const auto* v = s.find("alpha_max"); v && !v->is_null()) {
        if (!v->is_number()) throw ConfigError("bounds.alpha_max", "expected a number");
        b.alpha_max = v->get<double>();
    }
    s.finish();
}

ScenarioConfig from_json(const json& root) {
    ScenarioConfig c;
    Section s(root, "");
    if (const auto* v = s.find("params")) read_params(*v, c.params);
    if (const auto* v = s.find("dynamics")) read_dynamics(*v, c);
    if (const auto* v = s.find("arrivals")) read_arrivals(*v, c.arrivals);
    if (const auto* v = s.find("strategies")) {
        if (!v->is_array()) throw ConfigError("strategies", "expected an array");
        for (std::size_t i = 0; i < v->size(); ++i) {
            c.strategies.push_back(read_strategy((*v)[i], "strategies[" + std::to_string(i) + "]"));
        }
    }
    if (const auto* v = s.find("estimator")) {
        Section es(*v, "estimator");
        const auto kind = es.text("kind", to_string(c.estimator));
        if (kind == "full-history") {
            c.estimator = EstimatorKind::full_history;
        } else if (kind == "windowed") {
            c.estimator = EstimatorKind::windowed;
        } else if (kind == "oracle") {
            c.estimator = EstimatorKind::oracle;
        } else {
            throw ConfigError("estimator.kind", "expected \"full-history\", \"windowed\" or \"oracle\"");
        }
        c.estimator_window = es.integer("window", c.estimator_window);
        es.finish();
    }
    {
        const auto mode = s.text("loss_evaluation", to_string(c.loss_evaluation));
        if (mode == "closed-form") {
            c.loss_evaluation = LossEvaluation::closed_form;
        } else if (mode == "empirical") {
            c.loss_evaluation = LossEvaluation::empirical;
        } else {
            throw ConfigError("loss_evaluation", "expected \"closed-form\" or \"empirical\"");
        }
    }
    c.horizon = s.integer("horizon", c.horizon);
    c.replications = to_u32(s.integer("replications", c.replications), "replications");
    if (const auto* v = s.find("seed")) {
        if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
            throw ConfigError("seed", "expected a nonnegative integer");
        }
        c.seed.seed = v->get<std::uint64_t>();
    }
    c.output_dir = s.text("output_dir", c.output_dir);
    c.threads = to_u32(s.integer("threads", c.threads), "threads");
    if (const auto* v = s.find("optimizer")) {
        Section os(*v, "optimizer");
        c.optimizer.tol = os.number("tol", c.optimizer.tol);
        c.optimizer.max_restarts = to_u32(os.integer("max_restarts", c.optimizer.max_restarts), "optimizer.max_restarts");
        c.optimizer.max_iterations =
            to_u32(os.integer("max_iterations", c.optimizer.max_iterations), "optimizer.max_iterations");
        os.finish();
    }
    if (const auto* v = s.find("sweep")) {
        Section ss(*v, "sweep");
        if (const auto* m = ss.find("cache_sizes")) {
            c.sweep_cache_sizes.clear();
            for (auto x : int_list(*m, "sweep.cache_sizes")) c.sweep_cache_sizes.push_back(to_u32(x, "sweep.cache_sizes"));
        }
        ss.finish();
    }
    if (const auto* v = s.find("bounds")) read_bounds(*v, c.bounds);
    s.finish();
    validate_config(c);
    return c;
}

json strategy_json(const UpdateStrategy& st) {
    switch (st.kind) {
        case StrategyKind::threshold: return {{"kind", "threshold"}, {"threshold", st.threshold}, {"window", st.window}};
        case StrategyKind::periodic: return {{"kind", "periodic"}, {"period", st.period}};
        case StrategyKind::never: break;
    }
    return {{"kind", "never"}};
}

// Presets encode the two simulation scenarios. Densities and radii are the
// published ones; horizon and replication counts are sized for a desktop run.
constexpr const char* kRandomPreset = R"({
  "params": {"lambda_u": 1e-4, "lambda_s": 1e-5, "lambda_b": 1e-5, "gamma": 500, "R": 1000,
             "N": 100, "M": 10, "B": 1, "R0": 1, "delta_slot": 1, "lambda_g": "lambda_s"},
  "dynamics": {"mode": "random-permutation", "zipf_theta": 0.8, "period": 100, "pairs_per_change": 2},
  "arrivals": {"kind": "poisson", "lambda_r": 0.09},
  "strategies": [
    {"kind": "threshold", "threshold": 0.04, "window": 1},
    {"kind": "periodic", "period": 5}
  ],
  "estimator": {"kind": "full-history", "window": 100},
  "loss_evaluation": "closed-form",
  "horizon": 1000,
  "replications": 4,
  "seed": 20170901,
  "output_dir": "out/paper-random-variation",
  "sweep": {"cache_sizes": [10, 15, 20, 25]},
  "bounds": {"model": "poisson", "t": [100, 400, 1600], "T": [0, 10], "delta": [0.05, 0.1, 0.2],
             "rademacher": "estimate", "discrepancy": "oracle", "n_sigma": 32}
})";

constexpr const char* kDeterministicPreset = R"({
  "params": {"lambda_u": 1e-4, "lambda_s": 1e-5, "lambda_b": 1e-5, "gamma": 500, "R": 1000,
             "N": 100, "M": 10, "B": 1, "R0": 1, "delta_slot": 1, "lambda_g": "lambda_s"},
  "dynamics": {"mode": "deterministic-permutation", "zipf_theta": 0.8, "period": 150, "pairs_per_change": 3},
  "arrivals": {"kind": "poisson", "lambda_r": 0.01},
  "strategies": [
    {"kind": "threshold", "threshold": 0.04, "window": 1},
    {"kind": "periodic", "period": 5}
  ],
  "estimator": {"kind": "full-history", "window": 150},
  "loss_evaluation": "closed-form",
  "horizon": 1500,
  "replications": 4,
  "seed": 20170902,
  "output_dir": "out/paper-deterministic-variation",
  "sweep": {"cache_sizes": [10, 15, 20, 25]},
  "bounds": {"model": "poisson", "t": [150, 600, 2400], "T": [0, 10], "delta": [0.05, 0.1, 0.2],
             "rademacher": "estimate", "discrepancy": "oracle", "n_sigma": 32}
})";

}  // namespace

ScenarioConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    return from_json(root);
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_to_json(const ScenarioConfig& c, int indent) {
    json j;
    const auto& p = c.params;
    json lambda_g;
    switch (p.lambda_g_source) {
        case LambdaGSource::lambda_s: lambda_g = "lambda_s"; break;
        case LambdaGSource::lambda_u: lambda_g = "lambda_u"; break;
        case LambdaGSource::custom: lambda_g = p.lambda_g_custom; break;
    }
    j["params"] = {{"lambda_u", p.lambda_u}, {"lambda_s", p.lambda_s}, {"lambda_b", p.lambda_b},
                   {"gamma", p.gamma},       {"R", p.R},               {"N", p.N},
                   {"M", p.M},               {"B", p.B},               {"R0", p.R0},
                   {"delta_slot", p.delta_slot}, {"lambda_g", lambda_g}};

    json dyn = {{"mode", to_string(c.dynamics.mode)},
                {"zipf_theta", c.zipf_theta},
                {"period", c.dynamics.period},
                {"pairs_per_change", c.dynamics.pairs_per_change}};
    if (c.beta) dyn["beta"] = {{"C", c.beta->C}, {"rho", c.beta->rho}};
    if (!c.dynamics.sequence.empty()) {
        json seq = json::array();
        for (const auto& prof : c.dynamics.sequence) seq.push_back(prof.probs);
        dyn["sequence"] = seq;
    }
    j["dynamics"] = dyn;
    j["arrivals"] = {{"kind", to_string(c.arrivals.kind)}, {"p", c.arrivals.p}, {"lambda_r", c.arrivals.lambda_r}};

    json strategies = json::array();
    for (const auto& st : c.strategies) strategies.push_back(strategy_json(st));
    j["strategies"] = strategies;
    j["estimator"] = {{"kind", to_string(c.estimator)}, {"window", c.estimator_window}};
    j["loss_evaluation"] = to_string(c.loss_evaluation);
    j["horizon"] = c.horizon;
    j["replications"] = c.replications;
    j["seed"] = c.seed.seed;
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    j["optimizer"] = {{"tol", c.optimizer.tol},
                      {"max_restarts", c.optimizer.max_restarts},
                      {"max_iterations", c.optimizer.max_iterations}};
    j["sweep"] = {{"cache_sizes", c.sweep_cache_sizes}};

    const auto& b = c.bounds;
    json bounds = {{"model", to_string(b.model)}, {"t", b.t_grid},           {"T", b.T_grid},
                   {"delta", b.delta_grid},       {"block_length", b.block_length}, {"n_sigma", b.n_sigma}};
    bounds["rademacher"] = b.rademacher ? json::array({b.rademacher->first, b.rademacher->second}) : json("estimate");
    bounds["discrepancy"] = b.discrepancy ? json::array({b.discrepancy->first, b.discrepancy->second}) : json("oracle");
    if (b.alpha_min) bounds["alpha_min"] = *b.alpha_min;
    if (b.alpha_max) bounds["alpha_max"] = *b.alpha_max;
    j["bounds"] = bounds;
    return j.dump(indent);
}

std::vector<std::string> preset_names() { return {"paper-deterministic-variation", "paper-random-variation"}; }

std::string preset_json(const std::string& name) {
    if (name == "paper-random-variation") return kRandomPreset;
    if (name == "paper-deterministic-variation") return kDeterministicPreset;
    throw ConfigError("preset", "unknown preset '" + name +
                                    "' (available: paper-deterministic-variation, paper-random-variation)");
}

ScenarioConfig load_preset(const std::string& name) { return parse_config(preset_json(name)); }

ScenarioConfig resolve_config(const std::string& spec) {
    constexpr std::string_view prefix = "preset:";
    if (spec.rfind(prefix, 0) == 0) return load_preset(spec.substr(prefix.size()));
    return load_config_file(spec);
}

}  // namespace tvc
