#pragma once

// Scenario drivers behind the command-line tool: each run writes data CSVs
// and a JSON manifest into the output directory.

#include "sem2d/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace sem {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kCsvSchemaVersion = 1;

/// Column lists of the CSV files, recorded in every manifest.
nlohmann::json csv_schemas();

struct RunOptions {
    std::filesystem::path out_dir; ///< empty means the config's outputs.dir
    int threads = 0;               ///< 0 keeps the library default
};

struct RunResult {
    int exit_code = 0; ///< 0 ok, 3 solver did not converge
    nlohmann::json manifest;
};

/// Run the scenario named by cfg.kind. Exceptions propagate for the caller
/// to map onto exit codes; a non-converged optimisation still writes its
/// artifacts and reports exit code 3.
RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& options);

/// Stacked nodal fields per time: columns t, node, x1, x2, then one column
/// per name. `fields[k]` holds names.size() blocks of length M.
void write_fields_csv(const std::filesystem::path& path, const MultiShape& ms, const std::vector<double>& times,
                      const std::vector<Vector>& fields, const std::vector<std::string>& names);

/// Fields interpolated onto an nx x ny Cartesian grid over the bounding box.
/// Cells outside the domain get nan values and in_domain = 0.
void write_uniform_csv(const std::filesystem::path& path, const MultiShape& ms, const std::vector<double>& times,
                       const std::vector<Vector>& fields, const std::vector<std::string>& names, int nx, int ny);

/// Read a fields CSV back: times, stacked values and value column names.
struct FieldFrames {
    std::vector<double> times;
    std::vector<Vector> fields;
    std::vector<std::string> names;
};
FieldFrames read_fields_csv(const std::filesystem::path& path, const MultiShape& ms);

/// Resample a fields CSV of a run onto a uniform grid.
void export_uniform_grid(const ScenarioConfig& cfg, const std::filesystem::path& fields_csv,
                         const std::filesystem::path& out_csv, int nx, int ny);

} // namespace sem
