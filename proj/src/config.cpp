#include "lensopt/config.hpp"
#include "lensopt/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

extern char** environ;

namespace lensopt {

using nlohmann::json;

namespace {

const char* kVersion = "0.1.0";

int line_of(const std::string& source, const std::string& key)
{
    if (source.empty())
        return 0;
    const std::string needle = "\"" + key + "\"";
    const auto pos = source.find(needle);
    if (pos == std::string::npos)
        return 0;
    return 1 + static_cast<int>(std::count(source.begin(), source.begin() + pos, '\n'));
}

std::string where(const std::string& source, const std::string& key)
{
    const int l = line_of(source, key);
    return l > 0 ? " (line " + std::to_string(l) + ")" : std::string();
}

class Section {
public:
    Section(const json& root, const std::string& name, const std::string& source)
        : name_(name), source_(source)
    {
        if (!root.contains(name))
            return;
        const json& s = root.at(name);
        if (!s.is_object())
            throw ConfigError("section '" + name + "' must be an object" + where(source, name));
        obj_ = &s;
    }
    explicit Section(const json* obj, std::string name, const std::string& source)
        : obj_(obj), name_(std::move(name)), source_(source)
    {
    }

    template <class T>
    void get(const std::string& key, T& out)
    {
        allowed_.insert(key);
        if (!obj_ || !obj_->contains(key))
            return;
        try {
            out = obj_->at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("key '" + name_ + "." + key + "' has the wrong type" + where(source_, key));
        }
    }

    const json* child(const std::string& key)
    {
        allowed_.insert(key);
        if (!obj_ || !obj_->contains(key))
            return nullptr;
        const json& c = obj_->at(key);
        if (!c.is_object())
            throw ConfigError("key '" + name_ + "." + key + "' must be an object" + where(source_, key));
        return &c;
    }

    void finish() const
    {
        if (!obj_)
            return;
        for (auto it = obj_->begin(); it != obj_->end(); ++it)
            if (!allowed_.count(it.key()))
                throw ConfigError("unknown key '" + name_ + "." + it.key() + "'" + where(source_, it.key()));
    }

private:
    const json* obj_ = nullptr;
    std::string name_;
    const std::string& source_;
    std::set<std::string> allowed_;
};

void read_material(Section& sec, MaterialParams& m)
{
    sec.get("c", m.c);
    sec.get("b", m.b);
    sec.get("rho", m.rho);
    sec.get("b_over_a", m.b_over_a);
    sec.finish();
}

json material_json(const MaterialParams& m)
{
    return {{"c", m.c}, {"b", m.b}, {"rho", m.rho}, {"b_over_a", m.b_over_a}};
}

std::string moving_name(MovingSet m)
{
    switch (m) {
    case MovingSet::Upper: return "upper";
    case MovingSet::Lower: return "lower";
    default: return "both";
    }
}

MovingSet moving_from(const std::string& s)
{
    if (s == "upper")
        return MovingSet::Upper;
    if (s == "lower")
        return MovingSet::Lower;
    if (s == "both")
        return MovingSet::Both;
    throw ConfigError("optimizer.moving must be upper, lower or both");
}

} // namespace

void RunConfig::validate() const
{
    domain.validate();
    if (degree < 1)
        throw ConfigError("domain.degree must be at least 1");
    refinement().validate();
    materials.fluid.validate();
    materials.lens.validate();
    time.validate();
    alpha.validate();
    if (!(tol_u > 0.0) || state_max_iter < 1)
        throw ConfigError("solver.tol_u must be positive and solver.max_iter at least 1");
    if (quad_points < 0 || workers < 1)
        throw ConfigError("solver.quad_points must be >= 0 and solver.workers >= 1");
    adjoint.validate();
    if (!(excitation.frequency > 0.0))
        throw ConfigError("excitation.frequency must be positive");
    if (target_kind == TargetKind::Gaussian)
        gaussian.validate();
    else if (target_path.empty() && !goal.enabled)
        throw ConfigError("stored target needs target.path or a goal lens for synthetic data");
    if (goal.enabled)
        goal_params().validate();
    optimizer.validate();
    if (synthetic.refine_factor < 1 || synthetic.dt_factor < 1 || !(synthetic.noise >= 0.0))
        throw ConfigError("synthetic factors must be >= 1 and noise >= 0");
    if (output.snapshot_every < 0)
        throw ConfigError("output.snapshot_every must be non-negative");
}

Refinement RunConfig::refinement() const
{
    return Refinement::layout(layout[0], layout[1], layout[2], layout[3], layout[4], layout[5]);
}

DomainParams RunConfig::goal_params() const
{
    if (!goal.enabled)
        throw ConfigError("no goal lens configured");
    DomainParams g = goal.preset.empty() ? domain : lens_preset(goal.preset);
    if (goal.preset.empty()) {
        g.P = goal.P;
        g.R = goal.R;
    } else {
        g.L = domain.L;
        g.B = domain.B;
        g.K = domain.K;
        g.W = domain.W;
        g.S = domain.S;
    }
    return g;
}

Problem RunConfig::problem() const
{
    Problem p;
    p.params = domain;
    p.degree = degree;
    p.refinement = refinement();
    p.materials = materials;
    p.excitation = excitation;
    p.grid = time;
    p.alpha = alpha;
    p.state.tol_u = tol_u;
    p.state.max_iter = state_max_iter;
    p.adjoint = adjoint;
    p.assembly.quad_points = quad_points;
    p.assembly.workers = workers;
    if (!tracking.empty())
        p.tracking = tracking;
    p.target = gaussian;
    p.moving = moving;
    p.thickness = thickness ? ThicknessConstraint::reference_lens() : ThicknessConstraint::none();
    return p;
}

json to_json(const RunConfig& c)
{
    json probes = json::array();
    for (const auto& p : c.output.probes)
        probes.push_back({p(0), p(1)});
    json goal = json::object();
    if (c.goal.enabled) {
        if (!c.goal.preset.empty())
            goal["preset"] = c.goal.preset;
        else
            goal = {{"P", c.goal.P}, {"R", c.goal.R}};
    }
    json domain = {{"preset", c.preset}, {"L", c.domain.L}, {"B", c.domain.B}, {"K", c.domain.K}, {"W", c.domain.W},
                   {"P", c.domain.P}, {"S", c.domain.S}, {"R", c.domain.R}, {"degree", c.degree},
                   {"refinement", c.layout}};
    return {
        {"domain", domain},
        {"materials", {{"fluid", material_json(c.materials.fluid)}, {"lens", material_json(c.materials.lens)}}},
        {"time", {{"T_final", c.time.T_final}, {"n_steps", c.time.n_steps}}},
        {"alpha",
         {{"alpha_m", c.alpha.alpha_m}, {"alpha_f", c.alpha.alpha_f}, {"beta", c.alpha.beta}, {"gamma", c.alpha.gamma}}},
        {"solver",
         {{"tol_u", c.tol_u}, {"max_iter", c.state_max_iter}, {"quad_points", c.quad_points}, {"workers", c.workers}}},
        {"adjoint",
         {{"gamma_p", c.adjoint.gamma_p},
          {"beta_p", c.adjoint.beta_p},
          {"tol_p", c.adjoint.tol_p},
          {"max_iter", c.adjoint.max_iter},
          {"tensor_source", c.adjoint.tensor_source == TensorSource::State ? "state" : "target"}}},
        {"excitation", {{"g0", c.excitation.g0}, {"frequency", c.excitation.frequency}}},
        {"tracking", {{"x0", c.tracking.x0}, {"x1", c.tracking.x1}, {"y0", c.tracking.y0}, {"y1", c.tracking.y1}}},
        {"target",
         {{"kind", c.target_kind == TargetKind::Gaussian ? "gaussian" : "stored"},
          {"A", c.gaussian.A},
          {"y_fp", c.gaussian.y_fp},
          {"sigma_x", c.gaussian.sigma_x},
          {"sigma_y", c.gaussian.sigma_y},
          {"path", c.target_path}}},
        {"goal", goal},
        {"optimizer",
         {{"s_max", c.optimizer.s_max},
          {"tol_grad", c.optimizer.tol_grad},
          {"tol_step", c.optimizer.tol_step},
          {"base", c.optimizer.base},
          {"grow", c.optimizer.grow},
          {"shrink", c.optimizer.shrink},
          {"moving", moving_name(c.moving)},
          {"thickness", c.thickness}}},
        {"synthetic",
         {{"refine_factor", c.synthetic.refine_factor},
          {"dt_factor", c.synthetic.dt_factor},
          {"noise", c.synthetic.noise}}},
        {"output",
         {{"dir", c.output.dir},
          {"snapshot_every", c.output.snapshot_every},
          {"probes", probes},
          {"binary", c.output.binary}}},
        {"seed", c.seed},
    };
}

RunConfig config_from_json(const json& j, const std::string& src)
{
    if (j.is_null())
        return RunConfig{};
    if (!j.is_object())
        throw ConfigError("configuration root must be an object");
    static const std::set<std::string> sections = {"domain",    "materials", "time",      "alpha",  "solver",
                                                   "adjoint",   "excitation", "tracking", "target", "goal",
                                                   "optimizer", "synthetic", "output",    "seed"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!sections.count(it.key()))
            throw ConfigError("unknown section '" + it.key() + "'" + where(src, it.key()));

    RunConfig c;
    {
        Section s(j, "domain", src);
        s.get("preset", c.preset);
        if (!c.preset.empty())
            c.domain = lens_preset(c.preset);
        s.get("L", c.domain.L);
        s.get("B", c.domain.B);
        s.get("K", c.domain.K);
        s.get("W", c.domain.W);
        s.get("P", c.domain.P);
        s.get("S", c.domain.S);
        s.get("R", c.domain.R);
        s.get("degree", c.degree);
        s.get("refinement", c.layout);
        s.finish();
    }
    {
        Section s(j, "materials", src);
        if (const json* f = s.child("fluid")) {
            Section m(f, "materials.fluid", src);
            read_material(m, c.materials.fluid);
        }
        if (const json* l = s.child("lens")) {
            Section m(l, "materials.lens", src);
            read_material(m, c.materials.lens);
        }
        s.finish();
    }
    {
        Section s(j, "time", src);
        s.get("T_final", c.time.T_final);
        s.get("n_steps", c.time.n_steps);
        s.finish();
    }
    {
        Section s(j, "alpha", src);
        s.get("alpha_m", c.alpha.alpha_m);
        s.get("alpha_f", c.alpha.alpha_f);
        s.get("beta", c.alpha.beta);
        s.get("gamma", c.alpha.gamma);
        s.finish();
    }
    {
        Section s(j, "solver", src);
        s.get("tol_u", c.tol_u);
        s.get("max_iter", c.state_max_iter);
        s.get("quad_points", c.quad_points);
        s.get("workers", c.workers);
        s.finish();
    }
    {
        Section s(j, "adjoint", src);
        s.get("gamma_p", c.adjoint.gamma_p);
        s.get("beta_p", c.adjoint.beta_p);
        s.get("tol_p", c.adjoint.tol_p);
        s.get("max_iter", c.adjoint.max_iter);
        std::string ts = "state";
        s.get("tensor_source", ts);
        if (ts == "state")
            c.adjoint.tensor_source = TensorSource::State;
        else if (ts == "target")
            c.adjoint.tensor_source = TensorSource::Target;
        else
            throw ConfigError("adjoint.tensor_source must be state or target" + where(src, "tensor_source"));
        s.finish();
    }
    {
        Section s(j, "excitation", src);
        s.get("g0", c.excitation.g0);
        s.get("frequency", c.excitation.frequency);
        s.finish();
    }
    {
        Section s(j, "tracking", src);
        s.get("x0", c.tracking.x0);
        s.get("x1", c.tracking.x1);
        s.get("y0", c.tracking.y0);
        s.get("y1", c.tracking.y1);
        s.finish();
    }
    {
        Section s(j, "target", src);
        std::string kind = "gaussian";
        s.get("kind", kind);
        if (kind == "gaussian")
            c.target_kind = TargetKind::Gaussian;
        else if (kind == "stored")
            c.target_kind = TargetKind::Stored;
        else
            throw ConfigError("target.kind must be gaussian or stored" + where(src, "kind"));
        s.get("A", c.gaussian.A);
        s.get("y_fp", c.gaussian.y_fp);
        s.get("sigma_x", c.gaussian.sigma_x);
        s.get("sigma_y", c.gaussian.sigma_y);
        s.get("path", c.target_path);
        s.finish();
    }
    if (j.contains("goal")) {
        Section s(j, "goal", src);
        s.get("preset", c.goal.preset);
        c.goal.P = c.domain.P;
        c.goal.R = c.domain.R;
        s.get("P", c.goal.P);
        s.get("R", c.goal.R);
        s.finish();
        c.goal.enabled = !j.at("goal").empty();
    }
    {
        Section s(j, "optimizer", src);
        s.get("s_max", c.optimizer.s_max);
        s.get("tol_grad", c.optimizer.tol_grad);
        s.get("tol_step", c.optimizer.tol_step);
        s.get("base", c.optimizer.base);
        s.get("grow", c.optimizer.grow);
        s.get("shrink", c.optimizer.shrink);
        std::string mv = "both";
        s.get("moving", mv);
        c.moving = moving_from(mv);
        s.get("thickness", c.thickness);
        s.finish();
    }
    {
        Section s(j, "synthetic", src);
        s.get("refine_factor", c.synthetic.refine_factor);
        s.get("dt_factor", c.synthetic.dt_factor);
        s.get("noise", c.synthetic.noise);
        s.finish();
    }
    {
        Section s(j, "output", src);
        s.get("dir", c.output.dir);
        s.get("snapshot_every", c.output.snapshot_every);
        std::vector<std::array<double, 2>> probes;
        s.get("probes", probes);
        for (const auto& p : probes)
            c.output.probes.emplace_back(p[0], p[1]);
        s.get("binary", c.output.binary);
        s.finish();
    }
    if (j.contains("seed")) {
        try {
            c.seed = j.at("seed").get<std::uint64_t>();
        } catch (const json::exception&) {
            throw ConfigError("seed must be a non-negative integer" + where(src, "seed"));
        }
    }
    c.synthetic.seed = c.seed;
    c.validate();
    return c;
}

RunConfig parse_config_text(const std::string& text)
{
    const bool blank = std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); });
    json j = json::object();
    if (!blank) {
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
        }
    }
    apply_env_overrides(j, environment_overrides());
    return config_from_json(j, text);
}

RunConfig parse_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open configuration file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_env_overrides(json& j, const std::vector<std::pair<std::string, std::string>>& env)
{
    const std::string prefix = "LENSOPT_";
    for (const auto& [name, value] : env) {
        if (name.rfind(prefix, 0) != 0)
            continue;
        std::string rest = name.substr(prefix.size());
        std::vector<std::string> path;
        size_t pos;
        while ((pos = rest.find("__")) != std::string::npos) {
            path.push_back(rest.substr(0, pos));
            rest = rest.substr(pos + 2);
        }
        path.push_back(rest);
        for (auto& p : path)
            std::transform(p.begin(), p.end(), p.begin(), [](unsigned char ch) { return std::tolower(ch); });
        json v;
        try {
            v = json::parse(value);
        } catch (const json::parse_error&) {
            v = value;
        }
        const json ref = to_json(RunConfig{});
        const json* rnode = &ref;
        json* node = &j;
        for (size_t k = 0; k < path.size(); ++k) {
            std::string key = path[k];
            if (rnode && rnode->is_object()) {
                const json* next = nullptr;
                for (auto it = rnode->begin(); it != rnode->end(); ++it) {
                    std::string low = it.key();
                    std::transform(low.begin(), low.end(), low.begin(),
                                   [](unsigned char ch) { return std::tolower(ch); });
                    if (low == key) {
                        key = it.key();
                        next = &it.value();
                    }
                }
                rnode = next;
            } else {
                rnode = nullptr;
            }
            if (k + 1 == path.size()) {
                (*node)[key] = v;
            } else {
                if (!node->contains(key))
                    (*node)[key] = json::object();
                node = &(*node)[key];
            }
        }
    }
}

std::vector<std::pair<std::string, std::string>> environment_overrides()
{
    std::vector<std::pair<std::string, std::string>> out;
    for (char** e = environ; e && *e; ++e) {
        const std::string kv(*e);
        if (kv.rfind("LENSOPT_", 0) != 0)
            continue;
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            continue;
        out.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash(const RunConfig& cfg)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(to_json(cfg).dump());
    return os.str();
}

json manifest_json(const Manifest& m)
{
    json timings = json::object();
    for (const auto& [k, v] : m.timings)
        timings[k] = v;
    json out = {{"command", m.command},
                {"version", version_string()},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"compiler", __VERSION__},
                {"config_hash", config_hash(m.config)},
                {"config", to_json(m.config)},
                {"timings", timings},
                {"artifacts", m.artifacts},
                {"status", m.status}};
    if (!m.error.empty())
        out["error"] = m.error;
    return out;
}

RunConfig config_from_manifest(const json& m)
{
    if (!m.contains("config"))
        throw ConfigError("manifest has no config section");
    return config_from_json(m.at("config"));
}

std::string version_string() { return kVersion; }

} // namespace lensopt
