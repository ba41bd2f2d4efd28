#include "sem2d/error.hpp"
#include "sem2d/runner.hpp"
#include "sem2d/steady.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using namespace sem;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / "sem2d_test_runner" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// L-shaped box + wedge: the bounding box has a large uncovered corner.
MultiShape l_shape(int n)
{
    GeometryConfig g;
    g.elements = {Element::quad({{Vec2(0, 0), Vec2(0, 1), Vec2(1, 1), Vec2(1, 0)}, n, n}),
                  Element::wedge({1.0, 2.0, -M_PI / 2, 0.0, Vec2(1, 2), n, n})};
    return build_multishape(g);
}

struct UniformRow {
    double x1, x2, value;
    int in_domain;
};

std::vector<UniformRow> read_uniform(const fs::path& path)
{
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<UniformRow> rows;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string c;
        std::vector<std::string> cells;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        rows.push_back({std::stod(cells[3]), std::stod(cells[4]), std::stod(cells[5]), std::stoi(cells[6])});
    }
    return rows;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(SEM2D_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST(FieldsCsv, RoundTripIsExact)
{
    const auto ms = make_validation_multishape("f", 10);
    const Vector u = ms.evaluate([](double x, double y) { return std::sin(3 * x) * std::exp(y) / 7.0; });
    Vector two(2 * ms.size());
    two << u, -u;
    const fs::path p = tmp_dir("roundtrip") / "fields.csv";
    write_fields_csv(p, ms, {0.0, 0.5}, {two, 2 * two}, {"a", "b"});
    const FieldFrames back = read_fields_csv(p, ms);
    ASSERT_EQ(back.times.size(), 2u);
    EXPECT_EQ(back.names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(back.fields[0], two);
    EXPECT_EQ(back.fields[1], 2 * two);
}

TEST(UniformExport, CollocationPointsReproduceStoredValues)
{
    const auto ms = l_shape(9);
    const Vector u = ms.evaluate([](double x, double y) { return std::cos(x) * y + x * x; });
    std::vector<char> inside;
    const SpMat interp = ms.interpolation(ms.cart_points(), &inside);
    for (char c : inside) EXPECT_TRUE(c);
    EXPECT_LE((interp * u - u).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(UniformExport, ConstantFieldIsConstantInDomain)
{
    const auto ms = l_shape(8);
    const fs::path p = tmp_dir("constant") / "uniform.csv";
    write_uniform_csv(p, ms, {0.0}, {Vector::Constant(ms.size(), 2.5)}, {"c"}, 31, 27);
    int inside = 0;
    for (const auto& r : read_uniform(p)) {
        if (!r.in_domain) continue;
        ++inside;
        EXPECT_NEAR(r.value, 2.5, 1e-12);
    }
    EXPECT_GT(inside, 100);
}

TEST(UniformExport, OutsidePointsAreMarkedNotExtrapolated)
{
    const auto ms = l_shape(8);
    const fs::path p = tmp_dir("outside") / "uniform.csv";
    write_uniform_csv(p, ms, {0.0}, {ms.evaluate([](double x, double) { return x; })}, {"x"}, 41, 41);
    int outside = 0;
    for (const auto& r : read_uniform(p)) {
        // box [0,1]^2; wedge: quarter annulus about (1,2) with r in [1,2], right of x = 1
        const double rr = std::hypot(r.x1 - 1, r.x2 - 2);
        const bool clearly_out = (r.x1 < 0.97 && r.x2 > 1.03) || (r.x1 > 1.03 && (rr < 0.97 || rr > 2.03));
        if (clearly_out) {
            ++outside;
            EXPECT_EQ(r.in_domain, 0) << r.x1 << "," << r.x2;
            EXPECT_TRUE(std::isnan(r.value));
        }
        // x1 is not polynomial in the wedge coordinates, so this is spectral accuracy
        if (r.in_domain) EXPECT_NEAR(r.value, r.x1, 1e-6);
    }
    EXPECT_GT(outside, 100);
}

TEST(RunScenario, PoissonWritesManifestAndFields)
{
    const auto doc = nlohmann::json::parse(R"({
        "name": "p", "kind": "poisson",
        "geometry": {"validation_case": "d", "n_sigma": 16},
        "outputs": {"uniform_grid": [5, 4]}
    })");
    const fs::path dir = tmp_dir("poisson");
    const RunResult r = run_scenario(parse_config(doc), {dir, 1});
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_TRUE(fs::exists(dir / "fields.csv"));
    EXPECT_TRUE(fs::exists(dir / "uniform.csv"));
    std::ifstream in(dir / "manifest.json");
    const auto m = nlohmann::json::parse(in);
    EXPECT_EQ(m["kind"], "poisson");
    EXPECT_EQ(m["version"], kVersion);
    EXPECT_EQ(m["csv_schemas"]["version"], kCsvSchemaVersion);
    EXPECT_LT(m["results"]["error"].get<double>(), 1e-5);
    EXPECT_EQ(m["config"], doc);
}

TEST(RunScenario, ExportMatchesRunUniformGrid)
{
    const auto doc = nlohmann::json::parse(R"({
        "name": "p", "kind": "poisson",
        "geometry": {"validation_case": "fig1", "n_sigma": 12},
        "outputs": {"uniform_grid": [9, 7]}
    })");
    const fs::path dir = tmp_dir("export");
    const ScenarioConfig cfg = parse_config(doc);
    (void)run_scenario(cfg, {dir, 0});
    export_uniform_grid(cfg, dir / "fields.csv", dir / "again.csv", 9, 7);
    std::ifstream a(dir / "uniform.csv"), b(dir / "again.csv");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(Cli, ExitCodes)
{
    const std::string src = SEM2D_SOURCE_DIR;
    const fs::path out = tmp_dir("cli");
    EXPECT_EQ(run_cli("poisson " + src + "/configs/examples/malformed_face_mismatch.json --out " + out.string()), 2);
    EXPECT_EQ(run_cli("dynamics " + src + "/configs/poisson/case_a.json --out " + out.string()), 2);
    EXPECT_EQ(run_cli("poisson " + src + "/does_not_exist.json"), 2);
    EXPECT_EQ(run_cli("poisson " + src + "/configs/poisson/case_a.json --n 8 --out " + out.string()), 0);
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Cli, MalformedGeometryNamesElementPair)
{
    const std::string src = SEM2D_SOURCE_DIR;
    const std::string cmd = std::string(SEM2D_CLI) + " poisson " + src + "/configs/examples/malformed_face_mismatch.json 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    ASSERT_NE(pipe, nullptr);
    std::string text;
    char buf[256];
    while (fgets(buf, sizeof buf, pipe)) text += buf;
    pclose(pipe);
    EXPECT_NE(text.find("element 0"), std::string::npos) << text;
    EXPECT_NE(text.find("element 1"), std::string::npos) << text;
}

TEST(Cli, ConvergenceFailureExitsThree)
{
    const fs::path dir = tmp_dir("nonconv");
    const fs::path cfg = dir / "eq.json";
    std::ofstream(cfg) << R"({
        "name": "eq", "kind": "equilibrium",
        "geometry": {"elements": [{"kind": "box", "x1": [0, 1], "x2": [0, 1], "n": 6}]},
        "physics": {"species": 1, "kappa": [[-2]], "sigma": [[0.5]], "c_mass": [1],
                    "v_ext": [[{"type": "linear", "c1": 1}]], "f_ic": [[{"type": "constant", "value": 1}]]},
        "solver": {"lambda": 0.5, "tol": 1e-14, "max_iters": 2}
    })";
    EXPECT_EQ(run_cli("equilibrium " + cfg.string() + " --out " + (dir / "out").string()), 3);
}
