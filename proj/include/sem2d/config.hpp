#pragma once

// Scenario configuration files (JSON) with geometry, physics, solver and
// output sections. Parse failures raise ConfigError naming the offending
// field path, or the line and column for syntax errors.

#include "sem2d/ddft.hpp"
#include "sem2d/multishape.hpp"
#include "sem2d/steady.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sem {

using ScalarFn = std::function<double(double, double)>;

struct GeometryConfig {
    /// Named validation discretisation ("a".."h", "fig1") instead of elements.
    std::string validation_case;
    int validation_n = 0;
    std::vector<Element> elements;
    BuildOptions options;
    std::map<std::string, WallCurve> walls;
};

struct PhysicsConfig {
    int n_s = 1;
    Matrix kappa;
    Matrix sigma;
    std::vector<double> c_mass;
    std::vector<ScalarFn> v_ext;
    std::vector<ScalarFn> f_ic;
};

struct OcpSettings {
    double beta = 1e-3;
    int time_nodes = 10;
    double gamma = 0.3;
    int max_sweeps = 50;
    double sweep_tol = 1e-4;
    /// Background flow of the target-generating forward run, per element in
    /// local components; empty means the targets are the uncontrolled run.
    std::vector<Vec2> target_flow;
};

struct SolverSettings {
    double rtol = 1e-9;
    double atol = 1e-9;
    double t_final = 1.0;
    std::vector<double> frames; ///< output times besides t = 0 and t_final
    PicardOptions picard;
    OcpSettings ocp;
};

struct OutputSettings {
    std::string dir = "out";
    int grid_nx = 0; ///< uniform export grid; 0 disables
    int grid_ny = 0;
};

struct ValidationSettings {
    ValidationOptions options;
};

struct ScenarioConfig {
    std::string name;
    std::string kind; ///< validate | poisson | equilibrium | dynamics | ocp
    GeometryConfig geometry;
    PhysicsConfig physics;
    SolverSettings solver;
    OutputSettings outputs;
    ValidationSettings validation;
    nlohmann::json raw;
};

/// Parse a configuration document. `n_override` replaces every element's
/// point counts (n1 = n2 = n) for reduced-resolution runs.
ScenarioConfig parse_config(const nlohmann::json& doc, std::optional<int> n_override = std::nullopt);
ScenarioConfig load_config(const std::filesystem::path& path, std::optional<int> n_override = std::nullopt);

MultiShape build_multishape(const GeometryConfig& geometry);
SpeciesParams build_species(const PhysicsConfig& physics, const MultiShape& ms);
std::vector<Vector> initial_profiles(const PhysicsConfig& physics, const MultiShape& ms);

/// Per-element local vectors expanded to a stacked 2M field.
Vector element_vector_field(const MultiShape& ms, const std::vector<Vec2>& per_element);

} // namespace sem
