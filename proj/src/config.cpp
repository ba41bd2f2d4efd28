#include "sem2d/config.hpp"

#include "sem2d/error.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sem {

namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what)
{
    fail(ErrorKind::ConfigError, path + ": " + what);
}

const json& need(const json& obj, const std::string& key, const std::string& path)
{
    if (!obj.is_object()) bad(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) bad(path + "." + key, "missing required field");
    return *it;
}

double num(const json& v, const std::string& path)
{
    if (!v.is_number()) bad(path, "expected a number");
    return v.get<double>();
}

int integer(const json& v, const std::string& path)
{
    if (!v.is_number_integer()) bad(path, "expected an integer");
    return v.get<int>();
}

double num_or(const json& obj, const std::string& key, double dflt, const std::string& path)
{
    auto it = obj.find(key);
    return it == obj.end() ? dflt : num(*it, path + "." + key);
}

int int_or(const json& obj, const std::string& key, int dflt, const std::string& path)
{
    auto it = obj.find(key);
    return it == obj.end() ? dflt : integer(*it, path + "." + key);
}

Vec2 point(const json& v, const std::string& path)
{
    if (!v.is_array() || v.size() != 2) bad(path, "expected a point [x1, x2]");
    return {num(v[0], path + "[0]"), num(v[1], path + "[1]")};
}

/// Angles in radians ("theta1") or degrees ("theta1_deg").
double angle(const json& obj, const std::string& key, const std::string& path)
{
    if (obj.contains(key + "_deg")) return num(obj[key + "_deg"], path + "." + key + "_deg") * std::numbers::pi / 180.0;
    return num(need(obj, key, path), path + "." + key);
}

Matrix square_matrix(const json& v, int n, const std::string& path)
{
    if (!v.is_array() || static_cast<int>(v.size()) != n) bad(path, "expected " + std::to_string(n) + " rows");
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
        const std::string rp = path + "[" + std::to_string(i) + "]";
        if (!v[i].is_array() || static_cast<int>(v[i].size()) != n)
            bad(rp, "expected " + std::to_string(n) + " entries");
        for (int j = 0; j < n; ++j) m(i, j) = num(v[i][j], rp + "[" + std::to_string(j) + "]");
    }
    return m;
}

Element parse_element(const json& e, const std::string& path, std::optional<int> n_override)
{
    const std::string kind = need(e, "kind", path).is_string() ? e["kind"].get<std::string>() : "";
    int n1 = 0, n2 = 0;
    if (e.contains("n")) n1 = n2 = integer(e["n"], path + ".n");
    n1 = int_or(e, "n1", n1, path);
    n2 = int_or(e, "n2", n2, path);
    if (n_override) n1 = n2 = *n_override;
    if (n1 < 2 || n2 < 2) bad(path, "point counts n1, n2 (or n) must be at least 2");
    try {
        if (kind == "quad") {
            const json& c = need(e, "corners", path);
            if (!c.is_array() || c.size() != 4) bad(path + ".corners", "expected 4 corner points");
            QuadSpec q;
            for (int k = 0; k < 4; ++k) q.corners[k] = point(c[k], path + ".corners[" + std::to_string(k) + "]");
            q.n1 = n1;
            q.n2 = n2;
            return Element::quad(q);
        }
        if (kind == "box") {
            const json& x = need(e, "x1", path);
            const json& y = need(e, "x2", path);
            const Vec2 xr = point(x, path + ".x1"), yr = point(y, path + ".x2");
            QuadSpec q;
            q.corners = {Vec2(xr[0], yr[0]), Vec2(xr[0], yr[1]), Vec2(xr[1], yr[1]), Vec2(xr[1], yr[0])};
            q.n1 = n1;
            q.n2 = n2;
            return Element::quad(q);
        }
        if (kind == "wedge") {
            WedgeSpec w;
            w.origin = e.contains("origin") ? point(e["origin"], path + ".origin") : Vec2::Zero();
            w.r_in = num(need(e, "r_in", path), path + ".r_in");
            w.r_out = num(need(e, "r_out", path), path + ".r_out");
            w.th1 = angle(e, "theta1", path);
            w.th2 = angle(e, "theta2", path);
            w.n1 = n1;
            w.n2 = n2;
            return Element::wedge(w);
        }
    } catch (const Error& err) {
        if (err.kind() == ErrorKind::ConfigError) throw;
        bad(path, err.what());
    }
    bad(path + ".kind", "unknown element kind '" + kind + "' (expected quad, box or wedge)");
}

WallCurve parse_wall(const json& w, const std::string& path)
{
    if (!w.is_array() || w.empty()) bad(path, "expected a non-empty list of segments and arcs");
    WallCurve curve;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const std::string p = path + "[" + std::to_string(k) + "]";
        if (w[k].contains("segment")) {
            const json& s = w[k]["segment"];
            if (!s.is_array() || s.size() != 2) bad(p + ".segment", "expected two points");
            curve.segment(point(s[0], p + ".segment[0]"), point(s[1], p + ".segment[1]"));
        } else if (w[k].contains("arc")) {
            const json& a = w[k]["arc"];
            const double th1 = angle(a, "theta1", p + ".arc");
            const double th2 = angle(a, "theta2", p + ".arc");
            if (!(th2 > th1)) bad(p + ".arc", "theta2 must exceed theta1");
            curve.arc(point(need(a, "center", p + ".arc"), p + ".arc.center"),
                      num(need(a, "radius", p + ".arc"), p + ".arc.radius"), th1, th2);
        } else {
            bad(p, "expected a 'segment' or an 'arc'");
        }
    }
    return curve;
}

GeometryConfig parse_geometry(const json& g, const std::string& path, std::optional<int> n_override)
{
    GeometryConfig out;
    if (!g.is_object()) bad(path, "expected an object");
    if (g.contains("validation_case")) {
        if (!g["validation_case"].is_string()) bad(path + ".validation_case", "expected a string");
        out.validation_case = g["validation_case"].get<std::string>();
        out.validation_n = n_override ? *n_override : int_or(g, "n_sigma", 20, path);
        try {
            (void)make_validation_multishape(out.validation_case, 6);
        } catch (const Error& e) {
            bad(path + ".validation_case", e.what());
        }
        return out;
    }
    const json& els = need(g, "elements", path);
    if (!els.is_array() || els.empty()) bad(path + ".elements", "expected a non-empty list");
    for (std::size_t k = 0; k < els.size(); ++k)
        out.elements.push_back(parse_element(els[k], path + ".elements[" + std::to_string(k) + "]", n_override));
    const int ne = static_cast<int>(out.elements.size());
    if (g.contains("conditions")) {
        const json& cs = g["conditions"];
        if (!cs.is_array()) bad(path + ".conditions", "expected a list");
        for (std::size_t k = 0; k < cs.size(); ++k) {
            const std::string p = path + ".conditions[" + std::to_string(k) + "]";
            const json& pair = need(cs[k], "elements", p);
            if (!pair.is_array() || pair.size() != 2) bad(p + ".elements", "expected two element indices");
            ConditionFlag f;
            f.elem_a = integer(pair[0], p + ".elements[0]");
            f.elem_b = integer(pair[1], p + ".elements[1]");
            if (f.elem_a < 0 || f.elem_a >= ne || f.elem_b < 0 || f.elem_b >= ne)
                bad(p + ".elements", "element index out of range");
            const std::string c = need(cs[k], "condition", p).is_string() ? cs[k]["condition"].get<std::string>() : "";
            if (c == "match")
                f.condition = InterfaceCondition::Match;
            else if (c == "wall")
                f.condition = InterfaceCondition::Wall;
            else
                bad(p + ".condition", "expected 'match' or 'wall'");
            out.options.conditions.push_back(f);
        }
    }
    if (g.contains("normal_overrides")) {
        const json& os = g["normal_overrides"];
        if (!os.is_array()) bad(path + ".normal_overrides", "expected a list");
        for (std::size_t k = 0; k < os.size(); ++k) {
            const std::string p = path + ".normal_overrides[" + std::to_string(k) + "]";
            NormalOverride o;
            o.point = point(need(os[k], "point", p), p + ".point");
            o.normal = point(need(os[k], "normal", p), p + ".normal");
            if (o.normal.norm() == 0.0) bad(p + ".normal", "normal must be nonzero");
            o.normal.normalize();
            out.options.normal_overrides.push_back(o);
        }
    }
    if (g.contains("walls")) {
        const json& ws = g["walls"];
        if (!ws.is_object()) bad(path + ".walls", "expected an object of named walls");
        for (auto it = ws.begin(); it != ws.end(); ++it) out.walls[it.key()] = parse_wall(it.value(), path + ".walls." + it.key());
    }
    return out;
}

/// Sum of built-in terms: constant, linear, gaussian, wall_repulsion.
ScalarFn parse_function(const json& terms, const std::string& path, const GeometryConfig& geo)
{
    if (!terms.is_array()) bad(path, "expected a list of terms");
    std::vector<ScalarFn> parts;
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const std::string p = path + "[" + std::to_string(k) + "]";
        const json& t = terms[k];
        const json& ty = need(t, "type", p);
        const std::string type = ty.is_string() ? ty.get<std::string>() : "";
        if (type == "constant") {
            const double v = num(need(t, "value", p), p + ".value");
            parts.push_back([v](double, double) { return v; });
        } else if (type == "linear") {
            const double c0 = num_or(t, "c0", 0.0, p), c1 = num_or(t, "c1", 0.0, p), c2 = num_or(t, "c2", 0.0, p);
            parts.push_back([=](double x, double y) { return c0 + c1 * x + c2 * y; });
        } else if (type == "gaussian") {
            const double amp = num_or(t, "amp", 1.0, p);
            const Vec2 c = point(need(t, "center", p), p + ".center");
            double a1, a2;
            const json& co = need(t, "coef", p);
            if (co.is_array()) {
                const Vec2 a = point(co, p + ".coef");
                a1 = a[0];
                a2 = a[1];
            } else {
                a1 = a2 = num(co, p + ".coef");
            }
            parts.push_back([=](double x, double y) {
                return amp * std::exp(-a1 * (x - c[0]) * (x - c[0]) - a2 * (y - c[1]) * (y - c[1]));
            });
        } else if (type == "wall_repulsion") {
            const double eps = num(need(t, "epsilon", p), p + ".epsilon");
            const double alpha = num(need(t, "alpha", p), p + ".alpha");
            if (!(alpha > 0.0)) bad(p + ".alpha", "must be positive");
            const json& names = need(t, "walls", p);
            if (!names.is_array() || names.empty()) bad(p + ".walls", "expected a list of wall names");
            std::vector<WallCurve> ws;
            for (const auto& n : names) {
                const std::string name = n.is_string() ? n.get<std::string>() : "";
                auto it = geo.walls.find(name);
                if (it == geo.walls.end()) bad(p + ".walls", "wall '" + name + "' is not defined in geometry.walls");
                ws.push_back(it->second);
            }
            parts.push_back([=](double x, double y) {
                double v = 0.0;
                for (const auto& w : ws) {
                    const double d = w.distance(Vec2(x, y)) / alpha;
                    v += std::exp(-d * d);
                }
                return eps * v;
            });
        } else {
            bad(p + ".type", "unknown term type '" + type + "' (expected constant, linear, gaussian, wall_repulsion)");
        }
    }
    return [parts](double x, double y) {
        double s = 0.0;
        for (const auto& f : parts) s += f(x, y);
        return s;
    };
}

PhysicsConfig parse_physics(const json& ph, const std::string& path, const GeometryConfig& geo)
{
    PhysicsConfig out;
    out.n_s = integer(need(ph, "species", path), path + ".species");
    if (out.n_s < 1) bad(path + ".species", "must be at least 1");
    out.kappa = square_matrix(need(ph, "kappa", path), out.n_s, path + ".kappa");
    out.sigma = square_matrix(need(ph, "sigma", path), out.n_s, path + ".sigma");
    if (!(out.sigma.array() > 0.0).all()) bad(path + ".sigma", "entries must be positive");
    const json& cm = need(ph, "c_mass", path);
    if (!cm.is_array() || static_cast<int>(cm.size()) != out.n_s) bad(path + ".c_mass", "expected one mass per species");
    for (std::size_t k = 0; k < cm.size(); ++k) out.c_mass.push_back(num(cm[k], path + ".c_mass[" + std::to_string(k) + "]"));
    auto per_species = [&](const char* key, std::vector<ScalarFn>& dst, bool required) {
        if (!ph.contains(key)) {
            if (required) bad(path + "." + key, "missing required field");
            dst.assign(out.n_s, [](double, double) { return 0.0; });
            return;
        }
        const json& v = ph[key];
        if (!v.is_array() || static_cast<int>(v.size()) != out.n_s)
            bad(path + "." + key, "expected one term list per species");
        for (std::size_t k = 0; k < v.size(); ++k)
            dst.push_back(parse_function(v[k], path + "." + key + "[" + std::to_string(k) + "]", geo));
    };
    per_species("v_ext", out.v_ext, false);
    per_species("f_ic", out.f_ic, false);
    return out;
}

std::vector<double> number_list(const json& v, const std::string& path)
{
    if (!v.is_array()) bad(path, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(num(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

SolverSettings parse_solver(const json& s, const std::string& path, int n_elements)
{
    SolverSettings out;
    if (!s.is_object()) bad(path, "expected an object");
    out.rtol = num_or(s, "rtol", out.rtol, path);
    out.atol = num_or(s, "atol", out.atol, path);
    out.t_final = num_or(s, "t_final", out.t_final, path);
    if (!(out.rtol > 0.0 && out.atol > 0.0)) bad(path, "tolerances must be positive");
    if (!(out.t_final > 0.0)) bad(path + ".t_final", "must be positive");
    if (s.contains("frames")) out.frames = number_list(s["frames"], path + ".frames");
    for (double f : out.frames)
        if (f < 0.0 || f > out.t_final) bad(path + ".frames", "frame times must lie in [0, t_final]");
    out.picard.lambda = num_or(s, "lambda", out.picard.lambda, path);
    out.picard.tol = num_or(s, "tol", out.picard.tol, path);
    out.picard.max_iters = int_or(s, "max_iters", out.picard.max_iters, path);
    if (!(out.picard.lambda > 0.0 && out.picard.lambda <= 1.0)) bad(path + ".lambda", "must lie in (0, 1]");
    if (s.contains("ocp")) {
        const json& o = s["ocp"];
        const std::string p = path + ".ocp";
        auto& oc = out.ocp;
        oc.beta = num_or(o, "beta", oc.beta, p);
        oc.time_nodes = int_or(o, "time_nodes", oc.time_nodes, p);
        oc.gamma = num_or(o, "gamma", oc.gamma, p);
        oc.max_sweeps = int_or(o, "max_sweeps", oc.max_sweeps, p);
        oc.sweep_tol = num_or(o, "sweep_tol", oc.sweep_tol, p);
        if (!(oc.beta > 0.0)) bad(p + ".beta", "must be positive");
        if (oc.time_nodes < 3) bad(p + ".time_nodes", "must be at least 3");
        if (!(oc.gamma > 0.0 && oc.gamma <= 1.0)) bad(p + ".gamma", "must lie in (0, 1]");
        if (o.contains("target_flow")) {
            const json& tf = o["target_flow"];
            if (!tf.is_array() || static_cast<int>(tf.size()) != n_elements)
                bad(p + ".target_flow", "expected one local vector per element");
            for (std::size_t k = 0; k < tf.size(); ++k)
                oc.target_flow.push_back(point(tf[k], p + ".target_flow[" + std::to_string(k) + "]"));
        }
    }
    return out;
}

ValidationSettings parse_validation(const json& v, const std::string& path)
{
    ValidationSettings out;
    if (!v.is_object()) bad(path, "expected an object");
    auto strings = [&](const char* key, std::vector<std::string>& dst) {
        if (!v.contains(key)) return;
        const json& a = v[key];
        if (!a.is_array()) bad(path + "." + key, "expected a list of strings");
        dst.clear();
        for (const auto& x : a) {
            if (!x.is_string()) bad(path + "." + key, "expected a list of strings");
            dst.push_back(x.get<std::string>());
        }
    };
    auto ints = [&](const char* key, std::vector<int>& dst) {
        if (!v.contains(key)) return;
        const json& a = v[key];
        if (!a.is_array()) bad(path + "." + key, "expected a list of integers");
        dst.clear();
        for (std::size_t k = 0; k < a.size(); ++k) dst.push_back(integer(a[k], path + "." + key + "[" + std::to_string(k) + "]"));
    };
    strings("cases", out.options.cases);
    strings("operators", out.options.operators);
    ints("n_sigma", out.options.n_sigma);
    ints("fig1_n", out.options.fig1_n);
    if (v.contains("fig1_timing")) {
        if (!v["fig1_timing"].is_boolean()) bad(path + ".fig1_timing", "expected true or false");
        out.options.fig1_timing = v["fig1_timing"].get<bool>();
    }
    for (const auto& c : out.options.cases) try {
            (void)make_validation_multishape(c, 6);
        } catch (const Error& e) {
            bad(path + ".cases", e.what());
        }
    return out;
}

} // namespace

ScenarioConfig parse_config(const nlohmann::json& doc, std::optional<int> n_override)
{
    if (n_override && *n_override < 2) fail(ErrorKind::ConfigError, "resolution override must be at least 2");
    ScenarioConfig cfg;
    cfg.raw = doc;
    if (!doc.is_object()) bad("(root)", "expected an object");
    cfg.name = doc.value("name", std::string("scenario"));
    const json& kind = need(doc, "kind", "(root)");
    if (!kind.is_string()) bad("kind", "expected a string");
    cfg.kind = kind.get<std::string>();
    static const std::vector<std::string> kinds{"validate", "poisson", "equilibrium", "dynamics", "ocp"};
    if (std::find(kinds.begin(), kinds.end(), cfg.kind) == kinds.end())
        bad("kind", "unknown kind '" + cfg.kind + "' (expected validate, poisson, equilibrium, dynamics or ocp)");

    if (cfg.kind == "poisson" && doc.contains("validation"))
        cfg.validation = parse_validation(doc["validation"], "validation");
    if (cfg.kind == "validate") {
        cfg.validation = parse_validation(need(doc, "validation", "(root)"), "validation");
    } else {
        cfg.geometry = parse_geometry(need(doc, "geometry", "(root)"), "geometry", n_override);
        if (cfg.kind != "poisson") cfg.physics = parse_physics(need(doc, "physics", "(root)"), "physics", cfg.geometry);
        cfg.solver = parse_solver(doc.value("solver", json::object()), "solver",
                                  static_cast<int>(cfg.geometry.elements.size()));
    }
    if (doc.contains("outputs")) {
        const json& o = doc["outputs"];
        if (!o.is_object()) bad("outputs", "expected an object");
        if (o.contains("dir")) {
            if (!o["dir"].is_string()) bad("outputs.dir", "expected a string");
            cfg.outputs.dir = o["dir"].get<std::string>();
        }
        if (o.contains("uniform_grid")) {
            const json& g = o["uniform_grid"];
            if (!g.is_array() || g.size() != 2) bad("outputs.uniform_grid", "expected [nx, ny]");
            cfg.outputs.grid_nx = integer(g[0], "outputs.uniform_grid[0]");
            cfg.outputs.grid_ny = integer(g[1], "outputs.uniform_grid[1]");
            if (cfg.outputs.grid_nx < 2 || cfg.outputs.grid_ny < 2) bad("outputs.uniform_grid", "need at least 2 x 2 cells");
        }
    }
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path, std::optional<int> n_override)
{
    std::ifstream in(path);
    SEM_REQUIRE(in.good(), ConfigError, "cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // translate the byte offset into line and column
        std::size_t line = 1, col = 1;
        for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream os;
        os << path.string() << ":" << line << ":" << col << ": syntax error: " << e.what();
        fail(ErrorKind::ConfigError, os.str());
    }
    try {
        return parse_config(doc, n_override);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::ConfigError) throw;
        fail(ErrorKind::ConfigError, path.string() + ": " + std::string(e.what()).substr(std::string("config-error: ").size()));
    }
}

MultiShape build_multishape(const GeometryConfig& geometry)
{
    if (!geometry.validation_case.empty()) return make_validation_multishape(geometry.validation_case, geometry.validation_n);
    return MultiShape::build(geometry.elements, geometry.options);
}

SpeciesParams build_species(const PhysicsConfig& physics, const MultiShape& ms)
{
    SpeciesParams p;
    p.n_s = physics.n_s;
    p.kappa = physics.kappa;
    p.sigma = physics.sigma;
    p.c_mass = physics.c_mass;
    for (const auto& v : physics.v_ext) p.v_ext.push_back(ms.evaluate(v));
    return p;
}

std::vector<Vector> initial_profiles(const PhysicsConfig& physics, const MultiShape& ms)
{
    std::vector<Vector> out;
    for (const auto& f : physics.f_ic) out.push_back(ms.evaluate(f));
    return out;
}

Vector element_vector_field(const MultiShape& ms, const std::vector<Vec2>& per_element)
{
    SEM_REQUIRE(static_cast<int>(per_element.size()) == ms.num_elements(), InvalidArgument,
                "one vector per element expected");
    const int m = ms.size();
    Vector w(2 * m);
    for (int g = 0; g < m; ++g) {
        const Vec2& v = per_element[ms.element_of(g)];
        w[g] = v[0];
        w[m + g] = v[1];
    }
    return w;
}

} // namespace sem
