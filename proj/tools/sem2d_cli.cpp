#include "sem2d/error.hpp"
#include "sem2d/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

int exit_code_for(sem::ErrorKind kind)
{
    switch (kind) {
    case sem::ErrorKind::ConfigError:
    case sem::ErrorKind::InvalidGeometry:
    case sem::ErrorKind::InvalidArgument:
        return 2;
    default:
        return 3;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral element solver for steady, dynamic and optimal-control problems on 2D multishapes"};
    app.set_version_flag("--version", std::string(sem::kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int threads = 0;
    long long seed = 0;
    std::optional<int> n_override;

    const std::vector<std::pair<std::string, std::string>> kinds{
        {"validate", "operator validation tables"},
        {"poisson", "Poisson problem with the manufactured solution"},
        {"equilibrium", "DDFT equilibrium by Picard iteration"},
        {"dynamics", "DDFT dynamics with no-flux walls"},
        {"ocp", "optimal flow control of the DDFT dynamics"},
    };
    for (const auto& [name, help] : kinds) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("config", config_path, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (default: outputs.dir of the config)");
        sub->add_option("--threads", threads, "worker threads (0: library default)")->check(CLI::NonNegativeNumber);
        sub->add_option("--seed", seed, "reserved; every algorithm is deterministic");
        sub->add_option("--n", n_override, "override the points per direction of every element");
    }

    std::string fields_path;
    int nx = 0, ny = 0;
    CLI::App* exp = app.add_subcommand("export", "resample a fields CSV onto a uniform grid");
    exp->add_option("config", config_path, "config of the run that produced the fields")->required()->check(CLI::ExistingFile);
    exp->add_option("--fields", fields_path, "fields CSV (default: <outputs.dir>/fields.csv)");
    exp->add_option("--out", out_dir, "output CSV (default: <outputs.dir>/uniform.csv)");
    exp->add_option("--nx", nx, "grid points along x1 (default: outputs.uniform_grid)");
    exp->add_option("--ny", ny, "grid points along x2 (default: outputs.uniform_grid)");
    exp->add_option("--n", n_override, "points per direction used by the run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const sem::ScenarioConfig cfg = sem::load_config(config_path, n_override);
        if (exp->parsed()) {
            const std::filesystem::path dir = cfg.outputs.dir;
            const std::filesystem::path in = fields_path.empty() ? dir / "fields.csv" : std::filesystem::path(fields_path);
            const std::filesystem::path out = out_dir.empty() ? dir / "uniform.csv" : std::filesystem::path(out_dir);
            if (nx == 0) nx = cfg.outputs.grid_nx;
            if (ny == 0) ny = cfg.outputs.grid_ny;
            sem::export_uniform_grid(cfg, in, out, nx, ny);
            std::cout << "wrote " << out.string() << '\n';
            return 0;
        }
        const std::string sub = app.get_subcommands().front()->get_name();
        if (cfg.kind != sub) {
            std::cerr << "error: " << config_path << " describes a '" << cfg.kind << "' scenario, not '" << sub << "'\n";
            return 2;
        }
        const sem::RunResult res = sem::run_scenario(cfg, {out_dir, threads});
        std::cout << res.manifest["results"].dump(2) << '\n';
        if (res.exit_code == 3) std::cerr << "error: solver did not converge; artifacts written\n";
        return res.exit_code;
    } catch (const sem::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
