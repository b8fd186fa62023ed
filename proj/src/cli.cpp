#include "stopside/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace stopside {

using nlohmann::json;

namespace {

std::shared_ptr<spdlog::logger> logger()
{
    static std::shared_ptr<spdlog::logger> lg = [] {
        auto l = spdlog::get("stopside");
        if (!l)
            l = spdlog::stderr_color_mt("stopside");
        const char* env = std::getenv("STOPSIDE_LOG");
        l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
        return l;
    }();
    return lg;
}

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

// Object view that rejects keys outside the schema.
class Obj {
public:
    Obj(const json& j, std::string path, std::initializer_list<const char*> allowed) : j_(j), path_(std::move(path))
    {
        if (!j.is_object())
            throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!ok.count(it.key()))
                throw ConfigError(join(path_, it.key()), "unknown key");
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    std::string path(const char* key) const { return join(path_, key); }
    const json& at(const char* key) const
    {
        if (!has(key))
            throw ConfigError(path(key), "required key missing");
        return j_.at(key);
    }

    double num(const char* key) const
    {
        const json& v = at(key);
        if (!v.is_number())
            throw ConfigError(path(key), "expected a number");
        double d = v.get<double>();
        if (!std::isfinite(d))
            throw ConfigError(path(key), "expected a finite number");
        return d;
    }
    std::optional<double> opt_num(const char* key) const
    {
        if (!has(key))
            return std::nullopt;
        return num(key);
    }
    long long integer(const char* key) const
    {
        const json& v = at(key);
        if (!v.is_number_integer())
            throw ConfigError(path(key), "expected an integer");
        return v.get<long long>();
    }
    std::string str(const char* key) const
    {
        const json& v = at(key);
        if (!v.is_string())
            throw ConfigError(path(key), "expected a string");
        return v.get<std::string>();
    }

private:
    const json& j_;
    std::string path_;
};

json num_json(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double num_from(const json& j, const char* key)
{
    const json& v = j.at(key);
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

const char* side_name(ProblemSide s) { return s == ProblemSide::Right ? "right" : "left"; }

ProblemSide parse_side(const std::string& s, const std::string& field)
{
    if (s == "right")
        return ProblemSide::Right;
    if (s == "left")
        return ProblemSide::Left;
    throw ConfigError(field, "expected 'right' or 'left'");
}

Method parse_method(const std::string& s, const std::string& field)
{
    if (s == "threshold")
        return Method::Threshold;
    if (s == "sufficient")
        return Method::Sufficient;
    throw ConfigError(field, "expected 'threshold' or 'sufficient'");
}

double ms_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Pull x toward the interior when it falls outside the state interval.
double clip_lower(const Diffusion& d, double ref, double x)
{
    const auto& iv = d.interval();
    if (x > iv.left)
        return x;
    if (iv.left_in_state)
        return iv.left;
    return iv.left + (ref - iv.left) / 16.0;
}

double clip_upper(const Diffusion& d, double ref, double x)
{
    const auto& iv = d.interval();
    if (x < iv.right)
        return x;
    if (iv.right_in_state)
        return iv.right;
    return iv.right - (iv.right - ref) / 16.0;
}

Solution run_solver(const ProblemConfig& cfg, const Problem& p)
{
    return cfg.method == Method::Sufficient ? solve_sufficient(p, cfg.solve) : solve_right_sided(p, cfg.solve);
}

ConditionRecord record(const ConditionCheck& c)
{
    return {c.holds, to_string(c.relation), c.value, c.detail};
}

SmoothFitRecord record(const SmoothFitReport& f)
{
    SmoothFitRecord r;
    r.sf = to_string(f.sf);
    r.ssf = to_string(f.ssf);
    r.dv_dpsi_exists = f.dv_dpsi_exists;
    r.dv_phi_ds_exists = f.dv_phi_ds_exists;
    r.dv_dx_left = f.dv_dx_left;
    r.dv_dx_right = f.dv_dx_right;
    r.dv_ds_left = f.dv_ds_left;
    r.dv_ds_right = f.dv_ds_right;
    r.dv_dpsi_left = f.dv_dpsi_left;
    r.dv_dpsi_right = f.dv_dpsi_right;
    r.dv_phi_ds_left = f.dv_phi_ds_left;
    r.dv_phi_ds_right = f.dv_phi_ds_right;
    r.tol = f.tol;
    for (auto p : f.predicted_by)
        r.predicted_by.emplace_back(to_string(p));
    r.notes = f.notes;
    return r;
}

void write_text(const std::optional<std::string>& path, std::ostream& out, const std::string& text)
{
    if (!path) {
        out << text;
        return;
    }
    std::ofstream f(*path);
    if (!f)
        throw Error(ErrorKind::InvalidArgument, "cannot open output file " + *path);
    f << text;
}

json error_json(const std::exception& e, int& code)
{
    json err;
    err["message"] = e.what();
    code = 4;
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
        err["kind"] = to_string(ce->kind());
        err["field"] = ce->field();
        code = 3;
    } else if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
        err["kind"] = to_string(pe->kind());
        err["position"] = pe->position();
        err["expected"] = pe->expected();
        code = 3;
    } else if (const auto* se = dynamic_cast<const Error*>(&e)) {
        err["kind"] = to_string(se->kind());
        if (se->kind() == ErrorKind::HypothesisViolated)
            code = 2;
        else if (se->is_numeric())
            code = 4;
        else
            code = 3;
    } else if (dynamic_cast<const json::exception*>(&e)) {
        err["kind"] = to_string(ErrorKind::ConfigError);
        code = 3;
    } else {
        err["kind"] = "Internal";
    }
    return json{{"schema_version", 1}, {"error", err}};
}

template <class F>
int guarded(F&& body, const std::optional<std::string>& out_path, std::ostream& out, std::ostream& err)
{
    try {
        return body();
    } catch (const std::exception& e) {
        int code = 4;
        json j = error_json(e, code);
        err << "stopside: " << e.what() << "\n";
        try {
            write_text(out_path, out, j.dump(2) + "\n");
        } catch (const std::exception&) {
            out << j.dump(2) << "\n";
        }
        return code;
    }
}

ProblemConfig apply_flags(ProblemConfig cfg, const CliOptions& o)
{
    if (o.method)
        cfg.method = parse_method(*o.method, "--method");
    if (o.side)
        cfg.side = parse_side(*o.side, "--side");
    if (o.tol) {
        if (!(*o.tol > 0.0))
            throw ConfigError("--tol", "must be positive");
        cfg.smooth_fit_tol = *o.tol;
    }
    if (o.seed) {
        if (!cfg.oracle)
            cfg.oracle = OracleConfig{};
        cfg.oracle->seed = *o.seed;
    }
    return cfg;
}

int exit_code(const std::string& status) { return status == "Verified" ? 0 : 2; }

std::string csv_text(const SolveReport& r)
{
    std::ostringstream os;
    os << std::setprecision(17) << "x,g,V,psi_scaled\n";
    for (const auto& s : r.value_samples)
        os << s.x << ',' << s.g << ',' << s.v << ',' << s.psi_scaled << '\n';
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------- config

Problem ProblemConfig::build() const
{
    Diffusion d = [&] {
        try {
            return build_diffusion(diffusion, params);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::ParameterOutOfRange || e.kind() == ErrorKind::InvalidArgument)
                throw ConfigError(e.kind() == ErrorKind::ParameterOutOfRange ? "diffusion.params" : "diffusion",
                                  e.what());
            throw;
        }
    }();
    Reward rw = [&] {
        try {
            if (reward.type == "call")
                return call_reward(reward.parameter);
            if (reward.type == "shifted_call")
                return shifted_call_reward(reward.parameter);
            if (reward.type == "exponential")
                return exponential_reward(reward.parameter);
            return parse_reward(reward.expression, reward.sample_lo, reward.sample_hi);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::ParameterOutOfRange)
                throw ConfigError("reward", e.what());
            throw;
        }
    }();
    if (rrc_point)
        rw.rrc_point = *rrc_point;
    if (!(alpha > 0.0))
        throw ConfigError("alpha", "must be positive");
    Problem p{std::move(d), std::move(rw), alpha, side};
    return p;
}

json ProblemConfig::to_json() const
{
    json j;
    j["diffusion"] = {{"name", diffusion}, {"params", params}};
    json r{{"type", reward.type}};
    if (reward.type == "call")
        r["K"] = reward.parameter;
    else if (reward.type == "shifted_call")
        r["c"] = reward.parameter;
    else if (reward.type == "exponential")
        r["sigma"] = reward.parameter;
    else {
        r["expression"] = reward.expression;
        r["lo"] = reward.sample_lo;
        r["hi"] = reward.sample_hi;
    }
    j["reward"] = r;
    j["alpha"] = alpha;
    j["side"] = side_name(side);
    j["rrc_point"] = rrc_point ? json(*rrc_point) : json(nullptr);
    json s{{"grid_points", solve.grid_points},
           {"root_tol", solve.root_tol},
           {"verify_samples", solve.verify_samples},
           {"rel_tol", solve.quadrature.rel_tol},
           {"abs_tol", solve.quadrature.abs_tol},
           {"method", method == Method::Threshold ? "threshold" : "sufficient"},
           {"smooth_fit_tol", smooth_fit_tol}};
    s["search_hi"] = solve.search_hi ? json(*solve.search_hi) : json(nullptr);
    j["solve"] = s;
    if (oracle) {
        json o{{"grid_n", oracle->grid_n},
               {"chain_h", oracle->chain_h},
               {"mc_paths", oracle->mc_paths},
               {"seed", oracle->seed}};
        o["grid_lo"] = oracle->grid_lo ? json(*oracle->grid_lo) : json(nullptr);
        o["grid_hi"] = oracle->grid_hi ? json(*oracle->grid_hi) : json(nullptr);
        o["mc_x0"] = oracle->mc_x0 ? json(*oracle->mc_x0) : json(nullptr);
        j["oracle"] = o;
    } else {
        j["oracle"] = nullptr;
    }
    json sm{{"n", samples.n}};
    sm["lo"] = samples.lo ? json(*samples.lo) : json(nullptr);
    sm["hi"] = samples.hi ? json(*samples.hi) : json(nullptr);
    j["samples"] = sm;
    return j;
}

ProblemConfig parse_config(const json& j)
{
    Obj root(j, "", {"diffusion", "reward", "alpha", "side", "rrc_point", "solve", "oracle", "samples"});
    ProblemConfig cfg;

    Obj dif(root.at("diffusion"), "diffusion", {"name", "params"});
    cfg.diffusion = dif.str("name");
    bool known = false;
    for (const auto& e : catalog_entries())
        known = known || e.name == cfg.diffusion;
    if (!known)
        throw ConfigError("diffusion.name", "unknown catalog entry '" + cfg.diffusion + "'");
    if (dif.has("params")) {
        const json& pj = dif.at("params");
        if (!pj.is_object())
            throw ConfigError("diffusion.params", "expected an object");
        const auto& schema = catalog_entry(cfg.diffusion).parameter_schema;
        for (auto it = pj.begin(); it != pj.end(); ++it) {
            std::string field = "diffusion.params." + it.key();
            auto spec = std::find_if(schema.begin(), schema.end(), [&](const ParamSpec& s) { return s.name == it.key(); });
            if (spec == schema.end())
                throw ConfigError(field, "unknown parameter for " + cfg.diffusion);
            if (!it.value().is_number())
                throw ConfigError(field, "expected a number");
            double v = it.value().get<double>();
            if (!spec->accepts(v))
                throw ConfigError(field, "must lie in " + spec->range_text());
            cfg.params[it.key()] = v;
        }
    }

    const json& rj = root.at("reward");
    if (!rj.is_object() || !rj.contains("type"))
        throw ConfigError("reward.type", "required key missing");
    if (!rj.at("type").is_string())
        throw ConfigError("reward.type", "expected a string");
    cfg.reward.type = rj.at("type").get<std::string>();
    if (cfg.reward.type == "call") {
        Obj r(rj, "reward", {"type", "K"});
        cfg.reward.parameter = r.num("K");
    } else if (cfg.reward.type == "shifted_call") {
        Obj r(rj, "reward", {"type", "c"});
        cfg.reward.parameter = r.num("c");
    } else if (cfg.reward.type == "exponential") {
        Obj r(rj, "reward", {"type", "sigma"});
        cfg.reward.parameter = r.num("sigma");
    } else if (cfg.reward.type == "expression") {
        Obj r(rj, "reward", {"type", "expression", "lo", "hi"});
        cfg.reward.expression = r.str("expression");
        cfg.reward.sample_lo = r.opt_num("lo").value_or(-10.0);
        cfg.reward.sample_hi = r.opt_num("hi").value_or(10.0);
        if (!(cfg.reward.sample_lo < cfg.reward.sample_hi))
            throw ConfigError("reward.hi", "must exceed reward.lo");
    } else {
        throw ConfigError("reward.type", "expected one of call, shifted_call, exponential, expression");
    }

    cfg.alpha = root.num("alpha");
    if (!(cfg.alpha > 0.0))
        throw ConfigError("alpha", "must be positive");
    if (root.has("side"))
        cfg.side = parse_side(root.str("side"), "side");
    cfg.rrc_point = root.opt_num("rrc_point");

    if (root.has("solve")) {
        Obj s(root.at("solve"), "solve",
              {"search_hi", "grid_points", "root_tol", "verify_samples", "rel_tol", "abs_tol", "method",
               "smooth_fit_tol"});
        cfg.solve.search_hi = s.opt_num("search_hi");
        if (s.has("grid_points")) {
            long long g = s.integer("grid_points");
            if (g < 16 || g > 1 << 20)
                throw ConfigError("solve.grid_points", "must lie in [16, 1048576]");
            cfg.solve.grid_points = static_cast<int>(g);
        }
        if (s.has("root_tol") && !((cfg.solve.root_tol = s.num("root_tol")) > 0.0))
            throw ConfigError("solve.root_tol", "must be positive");
        if (s.has("verify_samples")) {
            long long v = s.integer("verify_samples");
            if (v < 1 || v > 1 << 20)
                throw ConfigError("solve.verify_samples", "must lie in [1, 1048576]");
            cfg.solve.verify_samples = static_cast<int>(v);
        }
        if (s.has("rel_tol") && !((cfg.solve.quadrature.rel_tol = s.num("rel_tol")) > 0.0))
            throw ConfigError("solve.rel_tol", "must be positive");
        if (s.has("abs_tol") && !((cfg.solve.quadrature.abs_tol = s.num("abs_tol")) >= 0.0))
            throw ConfigError("solve.abs_tol", "must be non-negative");
        if (s.has("method"))
            cfg.method = parse_method(s.str("method"), "solve.method");
        if (s.has("smooth_fit_tol") && !((cfg.smooth_fit_tol = s.num("smooth_fit_tol")) > 0.0))
            throw ConfigError("solve.smooth_fit_tol", "must be positive");
    }

    if (root.has("oracle")) {
        Obj o(root.at("oracle"), "oracle", {"grid_lo", "grid_hi", "grid_n", "chain_h", "mc_paths", "seed", "mc_x0"});
        OracleConfig oc;
        oc.grid_lo = o.opt_num("grid_lo");
        oc.grid_hi = o.opt_num("grid_hi");
        if (oc.grid_lo && oc.grid_hi && !(*oc.grid_lo < *oc.grid_hi))
            throw ConfigError("oracle.grid_hi", "must exceed oracle.grid_lo");
        if (o.has("grid_n")) {
            long long n = o.integer("grid_n");
            if (n < 3 || n > 10000000)
                throw ConfigError("oracle.grid_n", "must lie in [3, 10000000]");
            oc.grid_n = static_cast<int>(n);
        }
        if (o.has("chain_h") && !((oc.chain_h = o.num("chain_h")) > 0.0))
            throw ConfigError("oracle.chain_h", "must be positive");
        if (o.has("mc_paths") && (oc.mc_paths = o.integer("mc_paths")) < 0)
            throw ConfigError("oracle.mc_paths", "must be non-negative");
        if (o.has("seed")) {
            long long sd = o.integer("seed");
            if (sd < 0)
                throw ConfigError("oracle.seed", "must be non-negative");
            oc.seed = static_cast<std::uint64_t>(sd);
        }
        oc.mc_x0 = o.opt_num("mc_x0");
        cfg.oracle = oc;
    }

    if (root.has("samples")) {
        Obj s(root.at("samples"), "samples", {"lo", "hi", "n"});
        cfg.samples.lo = s.opt_num("lo");
        cfg.samples.hi = s.opt_num("hi");
        if (s.has("n")) {
            long long n = s.integer("n");
            if (n < 2 || n > 1000000)
                throw ConfigError("samples.n", "must lie in [2, 1000000]");
            cfg.samples.n = static_cast<int>(n);
        }
        if (cfg.samples.lo && cfg.samples.hi && !(*cfg.samples.lo < *cfg.samples.hi))
            throw ConfigError("samples.hi", "must exceed samples.lo");
    }
    return cfg;
}

ProblemConfig load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError("--config", "cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------- report json

namespace {

json to_json(const ConditionRecord& c)
{
    return {{"holds", c.holds}, {"relation", c.relation}, {"value", num_json(c.value)}, {"detail", c.detail}};
}

ConditionRecord condition_from(const json& j)
{
    return {j.at("holds").get<bool>(), j.at("relation").get<std::string>(), num_from(j, "value"),
            j.at("detail").get<std::string>()};
}

json to_json(const SmoothFitRecord& f)
{
    return {{"sf", f.sf},
            {"ssf", f.ssf},
            {"dv_dpsi_exists", f.dv_dpsi_exists},
            {"dv_phi_ds_exists", f.dv_phi_ds_exists},
            {"dv_dx_left", num_json(f.dv_dx_left)},
            {"dv_dx_right", num_json(f.dv_dx_right)},
            {"dv_ds_left", num_json(f.dv_ds_left)},
            {"dv_ds_right", num_json(f.dv_ds_right)},
            {"dv_dpsi_left", num_json(f.dv_dpsi_left)},
            {"dv_dpsi_right", num_json(f.dv_dpsi_right)},
            {"dv_phi_ds_left", num_json(f.dv_phi_ds_left)},
            {"dv_phi_ds_right", num_json(f.dv_phi_ds_right)},
            {"tol", f.tol},
            {"predicted_by", f.predicted_by},
            {"notes", f.notes}};
}

SmoothFitRecord smooth_fit_from(const json& j)
{
    SmoothFitRecord f;
    f.sf = j.at("sf").get<std::string>();
    f.ssf = j.at("ssf").get<std::string>();
    f.dv_dpsi_exists = j.at("dv_dpsi_exists").get<bool>();
    f.dv_phi_ds_exists = j.at("dv_phi_ds_exists").get<bool>();
    f.dv_dx_left = num_from(j, "dv_dx_left");
    f.dv_dx_right = num_from(j, "dv_dx_right");
    f.dv_ds_left = num_from(j, "dv_ds_left");
    f.dv_ds_right = num_from(j, "dv_ds_right");
    f.dv_dpsi_left = num_from(j, "dv_dpsi_left");
    f.dv_dpsi_right = num_from(j, "dv_dpsi_right");
    f.dv_phi_ds_left = num_from(j, "dv_phi_ds_left");
    f.dv_phi_ds_right = num_from(j, "dv_phi_ds_right");
    f.tol = j.at("tol").get<double>();
    f.predicted_by = j.at("predicted_by").get<std::vector<std::string>>();
    f.notes = j.at("notes").get<std::vector<std::string>>();
    return f;
}

json to_json(const OracleRecord& o)
{
    json j{{"grid_lo", o.grid_lo},
           {"grid_hi", o.grid_hi},
           {"grid_n", o.grid_n},
           {"ratio_argmax", o.ratio_argmax},
           {"ratio_cell", o.ratio_cell},
           {"ratio_agrees", o.ratio_agrees},
           {"chain_far_end", o.chain_far_end},
           {"chain_h", o.chain_h},
           {"chain_nodes", o.chain_nodes},
           {"chain_frontier", o.chain_frontier},
           {"chain_cell", o.chain_cell},
           {"chain_agrees", o.chain_agrees}};
    if (o.mc) {
        j["mc"] = {{"x0", o.mc->x0},
                   {"z", o.mc->z},
                   {"mean", o.mc->mean},
                   {"std_error", o.mc->std_error},
                   {"expected", o.mc->expected},
                   {"n_paths", o.mc->n_paths},
                   {"seed", o.mc->seed},
                   {"agrees", o.mc->agrees}};
    } else {
        j["mc"] = nullptr;
    }
    return j;
}

OracleRecord oracle_from(const json& j)
{
    OracleRecord o;
    o.grid_lo = j.at("grid_lo").get<double>();
    o.grid_hi = j.at("grid_hi").get<double>();
    o.grid_n = j.at("grid_n").get<int>();
    o.ratio_argmax = j.at("ratio_argmax").get<double>();
    o.ratio_cell = j.at("ratio_cell").get<double>();
    o.ratio_agrees = j.at("ratio_agrees").get<bool>();
    o.chain_far_end = j.at("chain_far_end").get<double>();
    o.chain_h = j.at("chain_h").get<double>();
    o.chain_nodes = j.at("chain_nodes").get<std::size_t>();
    o.chain_frontier = j.at("chain_frontier").get<double>();
    o.chain_cell = j.at("chain_cell").get<double>();
    o.chain_agrees = j.at("chain_agrees").get<bool>();
    if (!j.at("mc").is_null()) {
        const json& m = j.at("mc");
        McRecord r;
        r.x0 = m.at("x0").get<double>();
        r.z = m.at("z").get<double>();
        r.mean = m.at("mean").get<double>();
        r.std_error = m.at("std_error").get<double>();
        r.expected = m.at("expected").get<double>();
        r.n_paths = m.at("n_paths").get<long long>();
        r.seed = m.at("seed").get<std::uint64_t>();
        r.agrees = m.at("agrees").get<bool>();
        o.mc = r;
    }
    return o;
}

}  // namespace

json to_json(const SolveReport& r)
{
    json j;
    j["schema_version"] = r.schema_version;
    j["problem"] = r.problem;
    json res{{"side", r.side},
             {"method", r.method},
             {"status", r.status},
             {"x_star", num_json(r.x_star)},
             {"k", num_json(r.k)},
             {"rrc_point", num_json(r.rrc_point)},
             {"residual", num_json(r.residual)},
             {"speed_atom", num_json(r.speed_atom)},
             {"other_roots", r.other_roots},
             {"diagnostics", r.diagnostics}};
    j["result"] = res;
    json cond = json::object();
    for (const auto& [name, c] : r.conditions)
        cond[name] = to_json(c);
    j["conditions"] = cond;
    j["rrc"] = {{"integrability_ok", r.rrc_integrability_ok},
                {"limit_ok", r.rrc_limit_ok},
                {"limit_estimate", num_json(r.rrc_limit_estimate)},
                {"details", r.rrc_details}};
    j["representing_measure"] = {{"atom_point", num_json(r.rep_atom_point)},
                                 {"atom_weight", num_json(r.rep_atom_weight)},
                                 {"density", r.rep_density}};
    j["smooth_fit"] = r.smooth_fit ? to_json(*r.smooth_fit) : json(nullptr);
    if (r.table_row) {
        const auto& t = *r.table_row;
        j["table_row"] = {{"x_star_sign", t.x_star_sign},     {"threshold", t.threshold},
                          {"atom_bound", t.atom_bound},       {"sf_and_ssf", t.sf_and_ssf},
                          {"dv_dpsi_exists", t.dv_dpsi_exists}, {"dv_phi_ds_exists", t.dv_phi_ds_exists}};
    } else {
        j["table_row"] = nullptr;
    }
    json samples = json::array();
    for (const auto& s : r.value_samples)
        samples.push_back({num_json(s.x), num_json(s.g), num_json(s.v), num_json(s.psi_scaled)});
    j["value_samples"] = {{"columns", {"x", "g", "V", "psi_scaled"}}, {"rows", samples}};
    j["oracle"] = r.oracle ? to_json(*r.oracle) : json(nullptr);
    j["timings"] = r.timings_ms;
    return j;
}

SolveReport report_from_json(const json& j)
{
    SolveReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != 1)
        throw ConfigError("schema_version", "unsupported report schema version");
    r.problem = j.at("problem");
    const json& res = j.at("result");
    r.side = res.at("side").get<std::string>();
    r.method = res.at("method").get<std::string>();
    r.status = res.at("status").get<std::string>();
    r.x_star = num_from(res, "x_star");
    r.k = num_from(res, "k");
    r.rrc_point = num_from(res, "rrc_point");
    r.residual = num_from(res, "residual");
    r.speed_atom = num_from(res, "speed_atom");
    r.other_roots = res.at("other_roots").get<std::vector<double>>();
    r.diagnostics = res.at("diagnostics").get<std::vector<std::string>>();
    for (auto it = j.at("conditions").begin(); it != j.at("conditions").end(); ++it)
        r.conditions[it.key()] = condition_from(it.value());
    const json& rrc = j.at("rrc");
    r.rrc_integrability_ok = rrc.at("integrability_ok").get<bool>();
    r.rrc_limit_ok = rrc.at("limit_ok").get<bool>();
    r.rrc_limit_estimate = num_from(rrc, "limit_estimate");
    r.rrc_details = rrc.at("details").get<std::string>();
    const json& rm = j.at("representing_measure");
    r.rep_atom_point = num_from(rm, "atom_point");
    r.rep_atom_weight = num_from(rm, "atom_weight");
    r.rep_density = rm.at("density").get<std::string>();
    if (!j.at("smooth_fit").is_null())
        r.smooth_fit = smooth_fit_from(j.at("smooth_fit"));
    if (!j.at("table_row").is_null()) {
        const json& t = j.at("table_row");
        r.table_row = TableRecord{t.at("x_star_sign").get<std::string>(), t.at("threshold").get<std::string>(),
                                  t.at("atom_bound").get<std::string>(), t.at("sf_and_ssf").get<bool>(),
                                  t.at("dv_dpsi_exists").get<bool>(),   t.at("dv_phi_ds_exists").get<bool>()};
    }
    for (const json& row : j.at("value_samples").at("rows")) {
        auto get = [&](std::size_t i) {
            return row.at(i).is_null() ? std::numeric_limits<double>::quiet_NaN() : row.at(i).get<double>();
        };
        r.value_samples.push_back({get(0), get(1), get(2), get(3)});
    }
    if (!j.at("oracle").is_null())
        r.oracle = oracle_from(j.at("oracle"));
    r.timings_ms = j.at("timings").get<std::map<std::string, double>>();
    return r;
}

// ---------------------------------------------------------------- oracles

OracleRecord run_oracles(const Problem& p, const Solution& sol, const OracleConfig& cfg)
{
    if (p.side == ProblemSide::Left) {
        Problem mp = mirror_problem(p);
        Solution ms;
        ms.x_star = -sol.x_star;
        ms.status = sol.status;
        OracleConfig mc = cfg;
        if (cfg.grid_hi)
            mc.grid_lo = -*cfg.grid_hi;
        else
            mc.grid_lo.reset();
        if (cfg.grid_lo)
            mc.grid_hi = -*cfg.grid_lo;
        else
            mc.grid_hi.reset();
        if (cfg.mc_x0)
            mc.mc_x0 = -*cfg.mc_x0;
        OracleRecord r = run_oracles(mp, ms, mc);
        std::swap(r.grid_lo, r.grid_hi);
        r.grid_lo = -r.grid_lo;
        r.grid_hi = -r.grid_hi;
        r.ratio_argmax = -r.ratio_argmax;
        r.chain_far_end = -r.chain_far_end;
        r.chain_frontier = -r.chain_frontier;
        if (r.mc) {
            r.mc->x0 = -r.mc->x0;
            r.mc->z = -r.mc->z;
        }
        return r;
    }

    const auto& d = p.diffusion;
    const auto& iv = d.interval();
    const double xs = sol.x_star;
    const double len = std::max(1.0, std::abs(xs));
    OracleRecord rec;
    rec.grid_lo = cfg.grid_lo.value_or(clip_lower(d, xs, xs - 2.0 * len));
    rec.grid_hi = cfg.grid_hi.value_or(clip_upper(d, xs, xs + 2.0 * len));
    rec.grid_n = cfg.grid_n;
    if (!(rec.grid_lo < rec.grid_hi))
        throw ConfigError("oracle.grid_hi", "must exceed oracle.grid_lo");

    std::vector<double> grid(static_cast<std::size_t>(cfg.grid_n));
    for (int i = 0; i < cfg.grid_n; ++i)
        grid[static_cast<std::size_t>(i)] = rec.grid_lo + (rec.grid_hi - rec.grid_lo) * i / (cfg.grid_n - 1);
    grid.back() = rec.grid_hi;
    rec.ratio_argmax = ratio_argmax(p, grid);
    rec.ratio_cell = (rec.grid_hi - rec.grid_lo) / (cfg.grid_n - 1);
    rec.ratio_agrees = std::abs(rec.ratio_argmax - xs) <= rec.ratio_cell * (1.0 + 1e-9);
    logger()->debug("ratio oracle argmax {} vs x* {}", rec.ratio_argmax, xs);

    // Push the lower end of the chain out until the continuation value there is negligible.
    auto pair = d.fundamental_pair_for(p.alpha);
    const double psi_star = pair.psi(xs);
    double far = rec.grid_lo;
    for (int k = 1; k <= 60 && pair.psi(far) > 1e-10 * psi_star; ++k) {
        if (iv.left_in_state && far == iv.left)
            break;
        double next = clip_lower(d, xs, xs - len * std::ldexp(1.0, k));
        if (std::isfinite(iv.left) && !iv.left_in_state)
            next = std::min(next, iv.left + (xs - iv.left) * std::ldexp(1.0, -k));
        far = std::min(far, next);
    }
    rec.chain_far_end = far;
    rec.chain_h = cfg.chain_h;
    ChainApprox chain = build_chain(p, far, rec.grid_hi, cfg.chain_h);
    auto values = chain_value(p, chain);
    rec.chain_nodes = chain.grid.size();
    rec.chain_frontier = chain_frontier(p, chain, values);
    auto it = std::lower_bound(chain.grid.begin(), chain.grid.end(), xs);
    std::size_t j = static_cast<std::size_t>(it - chain.grid.begin());
    double cell = 0.0;
    if (j > 0 && j < chain.grid.size())
        cell = chain.grid[j] - chain.grid[j - 1];
    if (j + 1 < chain.grid.size())
        cell = std::max(cell, chain.grid[j + 1] - chain.grid[j]);
    if (j > 1 && j - 1 < chain.grid.size())
        cell = std::max(cell, chain.grid[j - 1] - chain.grid[j - 2]);
    rec.chain_cell = cell;
    rec.chain_agrees = std::abs(rec.chain_frontier - xs) <= 2.0 * cell * (1.0 + 1e-9);
    logger()->debug("chain oracle frontier {} on {} nodes", rec.chain_frontier, rec.chain_nodes);

    if (cfg.mc_paths > 0) {
        McRecord m;
        m.x0 = cfg.mc_x0.value_or(clip_lower(d, xs, xs - 0.5 * len));
        m.z = xs;
        auto est = mc_policy_value(p, m.x0, m.z, cfg.mc_paths, cfg.seed);
        m.mean = est.mean;
        m.std_error = est.std_error;
        m.n_paths = est.n_paths;
        m.seed = est.seed;
        m.expected = m.x0 >= xs ? p.reward.g(m.x0) : p.reward.g(xs) * pair.psi(m.x0) / psi_star;
        m.agrees = std::abs(m.mean - m.expected) <= 3.0 * m.std_error + 1e-12 * std::abs(m.expected);
        rec.mc = m;
    }
    return rec;
}

// ---------------------------------------------------------------- solve report

SolveReport build_report(const ProblemConfig& cfg, bool with_oracle)
{
    SolveReport r;
    r.problem = cfg.to_json();
    Problem p = cfg.build();
    auto t0 = std::chrono::steady_clock::now();
    logger()->info("solving {} with alpha={}", cfg.diffusion, cfg.alpha);
    Solution sol = run_solver(cfg, p);
    r.timings_ms["solve"] = ms_since(t0);
    for (const auto& msg : sol.diagnostics)
        logger()->info("{}", msg);

    r.side = side_name(sol.side);
    r.method = sol.method;
    r.status = to_string(sol.status);
    r.x_star = sol.x_star;
    r.k = sol.k;
    r.rrc_point = sol.rrc_point;
    r.residual = sol.residual;
    r.speed_atom = sol.speed_atom;
    r.other_roots = sol.other_roots;
    r.diagnostics = sol.diagnostics;
    r.conditions["threshold"] = record(sol.conditions.threshold);
    r.conditions["generator_sign"] = record(sol.conditions.generator_sign);
    r.conditions["left_majorant"] = record(sol.conditions.left_majorant);
    r.conditions["atom_bound"] = record(sol.conditions.atom_bound);
    r.rrc_integrability_ok = sol.rrc.integrability_ok;
    r.rrc_limit_ok = sol.rrc.limit_ok;
    r.rrc_limit_estimate = sol.rrc.limit_estimate;
    r.rrc_details = sol.rrc.details;
    r.rep_atom_point = sol.rep_measure.atom_point;
    r.rep_atom_weight = sol.rep_measure.atom_weight;
    r.rep_density = sol.rep_measure.density;

    if (sol.status == SolveStatus::Verified) {
        t0 = std::chrono::steady_clock::now();
        try {
            SmoothFitReport fit = diagnose(p, sol, cfg.smooth_fit_tol);
            r.smooth_fit = record(fit);
            TableRow row = table_row(p, sol, fit);
            r.table_row = TableRecord{row.x_star_sign,   row.threshold,      row.atom_bound,
                                      row.sf_and_ssf,    row.dv_dpsi_exists, row.dv_phi_ds_exists};
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::OutOfDomain && !e.is_numeric())
                throw;
            r.diagnostics.push_back(std::string("smooth-fit diagnostics skipped: ") + e.what());
        }
        r.timings_ms["smooth_fit"] = ms_since(t0);
    }

    if (sol.value) {
        const double xs = sol.x_star;
        const double len = std::max(1.0, std::abs(xs));
        double lo = cfg.samples.lo.value_or(clip_lower(p.diffusion, xs, xs - 2.0 * len));
        double hi = cfg.samples.hi.value_or(clip_upper(p.diffusion, xs, xs + 2.0 * len));
        p.diffusion.require_in_state(lo, "samples.lo");
        p.diffusion.require_in_state(hi, "samples.hi");
        auto pair = p.diffusion.fundamental_pair_for(p.alpha);
        const auto& harmonic = p.side == ProblemSide::Right ? pair.psi : pair.phi;
        const double scale = p.reward.g(xs) / harmonic(xs);
        for (int i = 0; i < cfg.samples.n; ++i) {
            double x = i + 1 == cfg.samples.n ? hi : lo + (hi - lo) * i / (cfg.samples.n - 1);
            r.value_samples.push_back({x, p.reward.g(x), sol.value(x), harmonic(x) * scale});
        }
    }

    if (with_oracle) {
        t0 = std::chrono::steady_clock::now();
        r.oracle = run_oracles(p, sol, cfg.oracle.value_or(OracleConfig{}));
        r.timings_ms["oracle"] = ms_since(t0);
    }
    return r;
}

// ---------------------------------------------------------------- sweep

namespace {

ProblemConfig with_parameter(ProblemConfig cfg, const std::string& name, double v)
{
    if (name == "alpha")
        cfg.alpha = v;
    else
        cfg.params[name] = v;
    return cfg;
}

struct SweepPoint {
    SweepRow row;
    bool at_target = false;
    bool k_positive = false;
};

SweepPoint sweep_point(const ProblemConfig& base, const SweepOptions& o, double v, bool diagnose_fit)
{
    SweepPoint pt;
    pt.row.param = v;
    try {
        ProblemConfig cfg = with_parameter(base, o.parameter, v);
        Problem p = cfg.build();
        Solution sol = run_solver(cfg, p);
        pt.row.ok = true;
        pt.row.x_star = sol.x_star;
        pt.row.k = sol.k;
        pt.row.status = to_string(sol.status);
        pt.row.sf = pt.row.ssf = "n/a";
        if (diagnose_fit && sol.status == SolveStatus::Verified) {
            try {
                auto fit = diagnose(p, sol, cfg.smooth_fit_tol);
                pt.row.sf = to_string(fit.sf);
                pt.row.ssf = to_string(fit.ssf);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::OutOfDomain && !e.is_numeric())
                    throw;
            }
        }
        pt.at_target = std::abs(sol.x_star - o.target_x) <= 1e-9 * std::max(1.0, std::abs(o.target_x));
        pt.k_positive = sol.k > 1e-9 * std::max(1.0, std::abs(p.reward.g(sol.x_star)));
    } catch (const std::exception& e) {
        pt.row.ok = false;
        pt.row.error = e.what();
        pt.row.status = "Error";
    }
    return pt;
}

}  // namespace

SweepResult run_sweep(const ProblemConfig& cfg, const SweepOptions& o)
{
    if (o.parameter != "alpha") {
        const auto& schema = catalog_entry(cfg.diffusion).parameter_schema;
        bool found = std::any_of(schema.begin(), schema.end(), [&](const ParamSpec& s) { return s.name == o.parameter; });
        if (!found)
            throw ConfigError("--param", "expected alpha or a parameter of " + cfg.diffusion);
    }
    if (!(o.lo < o.hi) || !std::isfinite(o.lo) || !std::isfinite(o.hi))
        throw ConfigError("--lo", "sweep range needs finite lo < hi");
    if (o.n < 2)
        throw ConfigError("--n", "sweep needs at least two rows");
    if (!(o.bisect_tol > 0.0))
        throw ConfigError("--bisect-tol", "must be positive");

    SweepResult res;
    res.parameter = o.parameter;
    std::vector<SweepPoint> pts;
    for (int i = 0; i < o.n; ++i) {
        double v = i + 1 == o.n ? o.hi : o.lo + (o.hi - o.lo) * i / (o.n - 1);
        pts.push_back(sweep_point(cfg, o, v, true));
        res.rows.push_back(pts.back().row);
        logger()->info("sweep {}={} x*={} status={}", o.parameter, v, pts.back().row.x_star, pts.back().row.status);
    }

    auto locate = [&](const char* quantity, bool SweepPoint::*flag) {
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            if (!pts[i].row.ok || !pts[i + 1].row.ok || pts[i].*flag == pts[i + 1].*flag)
                continue;
            double a = pts[i].row.param;
            double b = pts[i + 1].row.param;
            const bool left_flag = pts[i].*flag;
            while (b - a > o.bisect_tol) {
                double mid = 0.5 * (a + b);
                if (!(mid > a && mid < b))
                    break;
                SweepPoint m = sweep_point(cfg, o, mid, false);
                if (!m.row.ok)
                    break;
                if (m.*flag == left_flag)
                    a = mid;
                else
                    b = mid;
            }
            res.transitions.push_back({quantity, left_flag ? "exit" : "onset", 0.5 * (a + b)});
        }
    };
    locate("x_star_at_target", &SweepPoint::at_target);
    locate("k_positive", &SweepPoint::k_positive);
    return res;
}

json to_json(const SweepResult& r)
{
    json rows = json::array();
    for (const auto& row : r.rows) {
        json j{{"param", row.param}, {"ok", row.ok}, {"status", row.status}};
        if (row.ok) {
            j["x_star"] = num_json(row.x_star);
            j["k"] = num_json(row.k);
            j["sf"] = row.sf;
            j["ssf"] = row.ssf;
        } else {
            j["error"] = row.error;
        }
        rows.push_back(j);
    }
    json tr = json::array();
    for (const auto& t : r.transitions)
        tr.push_back({{"quantity", t.quantity}, {"direction", t.direction}, {"at", t.at}});
    return {{"schema_version", 1}, {"parameter", r.parameter}, {"rows", rows}, {"transitions", tr}};
}

// ---------------------------------------------------------------- commands

int cmd_solve(const CliOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(
        [&] {
            ProblemConfig cfg = apply_flags(load_config(opts.config_path), opts);
            SolveReport r = build_report(cfg, cfg.oracle.has_value());
            write_text(opts.out_path, out, to_json(r).dump(2) + "\n");
            if (opts.csv_path)
                write_text(opts.csv_path, out, csv_text(r));
            return exit_code(r.status);
        },
        opts.out_path, out, err);
}

int cmd_sweep(const CliOptions& opts, const SweepOptions& sweep, std::ostream& out, std::ostream& err)
{
    return guarded(
        [&] {
            ProblemConfig cfg = apply_flags(load_config(opts.config_path), opts);
            SweepResult r = run_sweep(cfg, sweep);
            write_text(opts.out_path, out, to_json(r).dump(2) + "\n");
            if (opts.csv_path) {
                std::ostringstream os;
                os << std::setprecision(17) << sweep.parameter << ",x_star,k,sf,ssf,status\n";
                for (const auto& row : r.rows)
                    os << row.param << ',' << row.x_star << ',' << row.k << ',' << row.sf << ',' << row.ssf << ','
                       << row.status << '\n';
                write_text(opts.csv_path, out, os.str());
            }
            return 0;
        },
        opts.out_path, out, err);
}

int cmd_catalog(std::ostream& out)
{
    json entries = json::array();
    for (const auto& e : catalog_entries()) {
        json params = json::array();
        for (const auto& s : e.parameter_schema)
            params.push_back({{"name", s.name},
                              {"range", s.range_text()},
                              {"default", s.default_value},
                              {"description", s.description}});
        entries.push_back({{"name", e.name}, {"description", e.description}, {"parameters", params}});
    }
    out << json{{"schema_version", 1}, {"entries", entries}}.dump(2) << "\n";
    return 0;
}

int cmd_oracle(const CliOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(
        [&] {
            ProblemConfig cfg = apply_flags(load_config(opts.config_path), opts);
            if (!cfg.oracle)
                cfg.oracle = OracleConfig{};
            SolveReport r = build_report(cfg, true);
            const auto& o = *r.oracle;
            json cmp{{"schema_version", 1},
                     {"x_star", num_json(r.x_star)},
                     {"status", r.status},
                     {"ratio", {{"argmax", o.ratio_argmax}, {"delta", o.ratio_argmax - r.x_star},
                                {"cell", o.ratio_cell}, {"agrees", o.ratio_agrees}}},
                     {"chain", {{"frontier", o.chain_frontier}, {"delta", o.chain_frontier - r.x_star},
                                {"cell", o.chain_cell}, {"nodes", o.chain_nodes}, {"agrees", o.chain_agrees}}}};
            if (o.mc)
                cmp["mc"] = {{"x0", o.mc->x0},       {"z", o.mc->z},
                             {"mean", o.mc->mean},   {"std_error", o.mc->std_error},
                             {"expected", o.mc->expected}, {"delta", o.mc->mean - o.mc->expected},
                             {"n_paths", o.mc->n_paths}, {"seed", o.mc->seed}, {"agrees", o.mc->agrees}};
            else
                cmp["mc"] = nullptr;
            write_text(opts.out_path, out, cmp.dump(2) + "\n");
            bool agree = o.ratio_agrees && o.chain_agrees && (!o.mc || o.mc->agrees);
            if (r.status != "Verified")
                return 2;
            return agree ? 0 : 2;
        },
        opts.out_path, out, err);
}

}  // namespace stopside
