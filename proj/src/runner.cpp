#include "sem2d/runner.hpp"

#include "sem2d/csv.hpp"
#include "sem2d/error.hpp"
#include "sem2d/ocp.hpp"
#include "sem2d/steady.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sem {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<double> to_std(const Vector& v)
{
    return {v.data(), v.data() + v.size()};
}

json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

std::vector<std::string> species_names(const std::string& base, int n)
{
    std::vector<std::string> out;
    for (int a = 1; a <= n; ++a) out.push_back(base + "_" + std::to_string(a));
    return out;
}

StepperConfig stepper_from(const SolverSettings& s)
{
    StepperConfig cfg;
    cfg.rtol = s.rtol;
    cfg.atol = s.atol;
    return cfg;
}

json stats_json(const SolverStats& s)
{
    return {{"steps", s.steps},           {"rejected", s.rejected},         {"newton_iters", s.newton_iters},
            {"newton_failures", s.newton_failures}, {"jacobian_evals", s.jacobian_evals},
            {"factorizations", s.factorizations},   {"rhs_evals", s.rhs_evals}};
}

MultiShape scenario_multishape(const ScenarioConfig& cfg)
{
    if (!cfg.geometry.validation_case.empty())
        return make_validation_multishape(cfg.geometry.validation_case, cfg.geometry.validation_n);
    return build_multishape(cfg.geometry);
}

struct Context {
    const ScenarioConfig& cfg;
    fs::path dir;
    json manifest;
    std::vector<std::string> files;

    fs::path file(const std::string& name)
    {
        files.push_back(name);
        return dir / name;
    }
};

void maybe_uniform(Context& ctx, const MultiShape& ms, const std::vector<double>& times,
                   const std::vector<Vector>& fields, const std::vector<std::string>& names)
{
    const auto& o = ctx.cfg.outputs;
    if (o.grid_nx > 0 && o.grid_ny > 0) write_uniform_csv(ctx.file("uniform.csv"), ms, times, fields, names, o.grid_nx, o.grid_ny);
}

int run_validate(Context& ctx)
{
    const auto rows = run_validation_suite(ctx.cfg.validation.options);
    write_validation_csv(ctx.file("validation.csv"), rows);
    ctx.manifest["results"] = {{"rows", rows.size()}};
    return 0;
}

int run_poisson(Context& ctx)
{
    const MultiShape ms = scenario_multishape(ctx.cfg);
    const Vector f = ms.evaluate(testfn::poisson_f);
    const Vector exact = ms.evaluate(testfn::poisson_u);
    const Vector u = solve_poisson(ms, f, exact);
    const double err = error_measure(u, exact, ms);
    Vector both(2 * ms.size());
    both << u, exact;
    write_fields_csv(ctx.file("fields.csv"), ms, {0.0}, {both}, {"u", "u_exact"});
    maybe_uniform(ctx, ms, {0.0}, {both}, {"u", "u_exact"});
    json res = {{"M", ms.size()}, {"error", err}};
    const std::string& vc = ctx.cfg.geometry.validation_case;
    if (!vc.empty() && ctx.cfg.raw.contains("validation")) {
        std::vector<ValidationRow> rows;
        for (int n : ctx.cfg.validation.options.n_sigma) {
            const auto t0 = Clock::now();
            const double e = validation_error(vc, "poisson", n);
            if (std::isnan(e)) continue;
            rows.push_back({vc, "poisson", n, e, ms_since(t0)});
        }
        write_validation_csv(ctx.file("poisson_sweep.csv"), rows);
        res["sweep_points"] = rows.size();
    }
    ctx.manifest["results"] = res;
    return 0;
}

int run_equilibrium(Context& ctx)
{
    const auto& cfg = ctx.cfg;
    const MultiShape ms = scenario_multishape(cfg);
    const DDFTModel model(ms, build_species(cfg.physics, ms));
    const Vector guess = model.normalize_ic(initial_profiles(cfg.physics, ms));
    const auto t0 = Clock::now();
    const PicardResult eq = picard_equilibrium(model, guess, cfg.solver.picard);
    const double wall = ms_since(t0);
    const int ns = model.n_species();
    write_fields_csv(ctx.file("fields.csv"), ms, {0.0}, {eq.rho}, species_names("rho", ns));
    maybe_uniform(ctx, ms, {0.0}, {eq.rho}, species_names("rho", ns));
    {
        CsvWriter w(ctx.file("convergence.csv"), {"iter", "error", "free_energy", "shifted_log_free_energy"});
        const auto shifted = eq.shifted_log_free_energy();
        for (std::size_t k = 0; k < eq.errors.size(); ++k)
            w.row({static_cast<long long>(k + 1), eq.errors[k], eq.free_energy[k], shifted[k]});
    }
    json fe = json::array();
    for (double f : eq.free_energy) fe.push_back(finite_or_null(f));
    ctx.manifest["results"] = {{"M", ms.size()},
                               {"iterations", eq.iterations},
                               {"final_error", eq.final_error},
                               {"free_energy_log", fe},
                               {"masses", to_std(model.masses(eq.rho))},
                               {"reference_iterations", 266}};
    ctx.manifest["timings"]["solve_ms"] = wall;
    return 0;
}

int run_dynamics(Context& ctx)
{
    const auto& cfg = ctx.cfg;
    const MultiShape ms = scenario_multishape(cfg);
    const DDFTModel model(ms, build_species(cfg.physics, ms));
    StepperConfig st = stepper_from(cfg.solver);
    st.output_times = cfg.solver.frames;
    st.output_times.push_back(0.0);
    const auto t0 = Clock::now();
    const DynamicsResult res = simulate_dynamics(model, initial_profiles(cfg.physics, ms), 0.0, cfg.solver.t_final, st);
    const double wall = ms_since(t0);
    const auto& tr = res.trajectory;
    const auto names = species_names("rho", model.n_species());
    write_fields_csv(ctx.file("fields.csv"), ms, tr.times, tr.states, names);
    maybe_uniform(ctx, ms, tr.times, tr.states, names);
    json masses = json::array();
    for (const Vector& m : res.masses) masses.push_back(to_std(m));
    json fe = json::array();
    for (double f : res.free_energy) fe.push_back(finite_or_null(f));
    ctx.manifest["results"] = {{"M", ms.size()},           {"times", tr.times},
                               {"masses", masses},         {"free_energy", fe},
                               {"max_mass_drift", res.max_mass_drift}, {"stats", stats_json(tr.stats)}};
    ctx.manifest["timings"]["solve_ms"] = wall;
    return 0;
}

int run_ocp(Context& ctx)
{
    const auto& cfg = ctx.cfg;
    const auto& oc = cfg.solver.ocp;
    const MultiShape ms = scenario_multishape(cfg);
    const DDFTModel model(ms, build_species(cfg.physics, ms));
    OCPConfig c;
    c.beta = oc.beta;
    c.t_final = cfg.solver.t_final;
    c.time_nodes = oc.time_nodes;
    c.gamma = oc.gamma;
    c.max_sweeps = oc.max_sweeps;
    c.sweep_tol = oc.sweep_tol;
    c.stepper = stepper_from(cfg.solver);
    c.rho0 = model.normalize_ic(initial_profiles(cfg.physics, ms));
    const TimeGrid grid(c.time_nodes, c.t_final);
    const Vector flow = oc.target_flow.empty() ? Vector(Vector::Zero(2 * ms.size())) : element_vector_field(ms, oc.target_flow);
    const auto t0 = Clock::now();
    c.targets = state_solve(model, grid, std::vector<Vector>(grid.size(), flow), c.rho0, c.stepper).rho;
    const OCPSolution sol = solve_ocp(model, c);
    const double wall = ms_since(t0);

    {
        CsvWriter w(ctx.file("ocp.csv"), {"iter", "J", "grad_residual"});
        for (const auto& h : sol.history) w.row({static_cast<long long>(h.iter), h.j, h.grad_residual});
    }
    const int ns = model.n_species();
    const int m = ms.size();
    std::vector<std::string> names = species_names("rho", ns);
    for (const auto& s : species_names("target", ns)) names.push_back(s);
    for (const auto& s : species_names("q", ns)) names.push_back(s);
    names.push_back("w_x1");
    names.push_back("w_x2");
    std::vector<double> times = to_std(grid.nodes());
    std::vector<Vector> frames;
    for (int k = 0; k < grid.size(); ++k) {
        Vector f(static_cast<Eigen::Index>(names.size()) * m);
        f << sol.rho[k], c.targets[k], sol.q[k], ms.local_to_cartesian() * sol.w[k];
        frames.push_back(std::move(f));
    }
    write_fields_csv(ctx.file("fields.csv"), ms, times, frames, names);
    maybe_uniform(ctx, ms, times, frames, names);
    ctx.manifest["results"] = {{"M", m},
                               {"J_uncontrolled", sol.j_uncontrolled},
                               {"J_controlled", sol.j_value},
                               {"ratio", sol.j_value / sol.j_uncontrolled},
                               {"grad_residual", sol.grad_residual},
                               {"control_norm", sol.control_norm},
                               {"sweeps", static_cast<int>(sol.history.size()) - 1},
                               {"forward_solves", sol.forward_solves},
                               {"converged", sol.converged},
                               {"reference", {{"J_uncontrolled", 0.0038}, {"J_controlled", 1.7571e-4}}}};
    ctx.manifest["timings"]["solve_ms"] = wall;
    return sol.converged ? 0 : 3;
}

} // namespace

json csv_schemas()
{
    return {{"version", kCsvSchemaVersion},
            {"validation", {"case", "operator", "N_Sigma", "error", "wall_ms"}},
            {"fields", {"t", "node", "x1", "x2", "values..."}},
            {"uniform", {"t", "i", "j", "x1", "x2", "values...", "in_domain"}},
            {"ocp", {"iter", "J", "grad_residual"}},
            {"convergence", {"iter", "error", "free_energy", "shifted_log_free_energy"}}};
}

RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& options)
{
#ifdef _OPENMP
    if (options.threads > 0) omp_set_num_threads(options.threads);
#endif
    if (options.threads > 0) Eigen::setNbThreads(options.threads);
    Context ctx{cfg, options.out_dir.empty() ? fs::path(cfg.outputs.dir) : options.out_dir, json::object(), {}};
    fs::create_directories(ctx.dir);
    const auto t0 = Clock::now();
    int code = 0;
    if (cfg.kind == "validate")
        code = run_validate(ctx);
    else if (cfg.kind == "poisson")
        code = run_poisson(ctx);
    else if (cfg.kind == "equilibrium")
        code = run_equilibrium(ctx);
    else if (cfg.kind == "dynamics")
        code = run_dynamics(ctx);
    else if (cfg.kind == "ocp")
        code = run_ocp(ctx);
    else
        fail(ErrorKind::ConfigError, "unknown scenario kind '" + cfg.kind + "'");

    json& m = ctx.manifest;
    m["name"] = cfg.name;
    m["kind"] = cfg.kind;
    m["version"] = kVersion;
    m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION);
    m["config"] = cfg.raw;
    m["csv_schemas"] = csv_schemas();
    m["files"] = ctx.files;
    m["exit_code"] = code;
    m["timings"]["wall_ms"] = ms_since(t0);
    std::ofstream(ctx.dir / "manifest.json") << m.dump(2) << '\n';
    return {code, m};
}

void write_fields_csv(const fs::path& path, const MultiShape& ms, const std::vector<double>& times,
                      const std::vector<Vector>& fields, const std::vector<std::string>& names)
{
    const int m = ms.size();
    const auto nf = static_cast<Eigen::Index>(names.size());
    SEM_REQUIRE(times.size() == fields.size(), InvalidArgument, "one field set per time needed");
    std::vector<std::string> header{"t", "node", "x1", "x2"};
    header.insert(header.end(), names.begin(), names.end());
    CsvWriter w(path, header);
    const Matrix& x = ms.cart_points();
    for (std::size_t k = 0; k < times.size(); ++k) {
        SEM_REQUIRE(fields[k].size() == nf * m, InvalidArgument, "field length does not match the column names");
        for (int i = 0; i < m; ++i) {
            std::vector<CsvWriter::Cell> row{times[k], static_cast<long long>(i), x(i, 0), x(i, 1)};
            for (Eigen::Index f = 0; f < nf; ++f) row.emplace_back(fields[k][f * m + i]);
            w.row(row);
        }
    }
}

void write_uniform_csv(const fs::path& path, const MultiShape& ms, const std::vector<double>& times,
                       const std::vector<Vector>& fields, const std::vector<std::string>& names, int nx, int ny)
{
    SEM_REQUIRE(nx >= 2 && ny >= 2, InvalidArgument, "uniform grid needs at least 2 x 2 points");
    const int m = ms.size();
    const auto nf = static_cast<Eigen::Index>(names.size());
    const Matrix& x = ms.cart_points();
    const double x0 = x.col(0).minCoeff(), x1 = x.col(0).maxCoeff();
    const double y0 = x.col(1).minCoeff(), y1 = x.col(1).maxCoeff();
    Matrix targets(nx * ny, 2);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            targets(i * ny + j, 0) = x0 + (x1 - x0) * i / (nx - 1);
            targets(i * ny + j, 1) = y0 + (y1 - y0) * j / (ny - 1);
        }
    std::vector<char> inside;
    const SpMat interp = ms.interpolation(targets, &inside);
    std::vector<std::string> header{"t", "i", "j", "x1", "x2"};
    header.insert(header.end(), names.begin(), names.end());
    header.push_back("in_domain");
    CsvWriter w(path, header);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < times.size(); ++k) {
        SEM_REQUIRE(fields[k].size() == nf * m, InvalidArgument, "field length does not match the column names");
        Matrix vals(nx * ny, nf);
        for (Eigen::Index f = 0; f < nf; ++f) vals.col(f) = interp * fields[k].segment(f * m, m);
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) {
                const int r = i * ny + j;
                std::vector<CsvWriter::Cell> row{times[k], static_cast<long long>(i), static_cast<long long>(j),
                                                 targets(r, 0), targets(r, 1)};
                for (Eigen::Index f = 0; f < nf; ++f) row.emplace_back(inside[r] ? vals(r, f) : nan);
                row.emplace_back(static_cast<long long>(inside[r] ? 1 : 0));
                w.row(row);
            }
    }
}

FieldFrames read_fields_csv(const fs::path& path, const MultiShape& ms)
{
    std::ifstream in(path);
    SEM_REQUIRE(in.good(), InvalidArgument, "cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    SEM_REQUIRE(header.size() > 4 && header[0] == "t" && header[1] == "node" && header[2] == "x1" && header[3] == "x2",
                InvalidArgument, path.string() + " is not a fields CSV");
    FieldFrames out;
    out.names.assign(header.begin() + 4, header.end());
    const int m = ms.size();
    const auto nf = static_cast<Eigen::Index>(out.names.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        SEM_REQUIRE(vals.size() == header.size(), InvalidArgument, "ragged row in " + path.string());
        const int node = static_cast<int>(vals[1]);
        SEM_REQUIRE(node >= 0 && node < m, InvalidArgument, "node index does not fit the configured multishape");
        if (out.times.empty() || vals[0] != out.times.back()) {
            out.times.push_back(vals[0]);
            out.fields.push_back(Vector::Constant(nf * m, std::numeric_limits<double>::quiet_NaN()));
        }
        for (Eigen::Index f = 0; f < nf; ++f) out.fields.back()[f * m + node] = vals[4 + f];
    }
    for (const Vector& f : out.fields)
        SEM_REQUIRE(!f.hasNaN(), InvalidArgument, "fields CSV does not cover every node of the multishape");
    return out;
}

void export_uniform_grid(const ScenarioConfig& cfg, const fs::path& fields_csv, const fs::path& out_csv, int nx, int ny)
{
    const MultiShape ms = scenario_multishape(cfg);
    const FieldFrames fr = read_fields_csv(fields_csv, ms);
    write_uniform_csv(out_csv, ms, fr.times, fr.fields, fr.names, nx, ny);
}

} // namespace sem
