#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sfdg/bench.hpp"
#include "sfdg/config.hpp"
#include "sfdg/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sfdg;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("defaults and roundtrip") {
    const RunConfig a = parse_config("{}");
    const std::string s = serialize_config(a);
    const RunConfig b = parse_config(s);
    CHECK(serialize_config(b) == s);
    CHECK(config_hash(a) == config_hash(b));

    const std::string text = R"({
      "mesh": {"dim": 2, "cells": [6, 5], "perturbation": 0.1},
      "problem": {"id": "custom", "custom": {"diffusion": [[2, 0.5], [0.5, 1]], "velocity": [1, -2],
                                              "reaction": 0.25, "source": 1, "dirichlet": 0.5, "neumann": -1}},
      "discretization": {"degree": 3, "quad_points": 5, "alpha": 3.5},
      "time": {"scheme": "ssp3", "dt": 0.001, "steps": 7, "snapshot_every": 2, "diagnostics_every": 3},
      "execution": {"threads": 2, "backend": "matrix-based", "pin": false, "matrix_cap_bytes": 1000000},
      "bench": {"degrees": [2, 4], "dof_budget": 1e5, "reps": 7, "warmup": 2},
      "output": {"dir": "o", "prefix": "p"}
    })";
    const RunConfig c = parse_config(text);
    CHECK(c.mesh.cells[0] == 6);
    CHECK(c.mesh.cells[1] == 5);
    CHECK(c.mesh.cells[2] == 1);
    CHECK(c.problem.custom.diffusion[0][1] == 0.5);
    CHECK(c.problem.custom.velocity[1] == -2.0);
    CHECK(c.time.scheme == Scheme::ssp3);
    CHECK(c.execution.backend == Backend::matrix_based);
    CHECK(c.bench.degrees == std::vector<int>{2, 4});
    const std::string s1 = serialize_config(c);
    CHECK(serialize_config(parse_config(s1)) == s1);
    CHECK(config_hash(c) != config_hash(a));
    CHECK(hex64(config_hash(c)).size() == 16);
}

TEST_CASE("unknown keys are rejected with their path") {
    CHECK(error_of(R"({"mesh": {"cels": [2]}})").find("/mesh/cels") != std::string::npos);
    CHECK(error_of(R"({"extra": 1})").find("/extra") != std::string::npos);
    CHECK(error_of(R"({"problem": {"custom": {"diffusivity": 1}}})").find("/problem/custom/diffusivity") !=
          std::string::npos);
}

TEST_CASE("type and range errors name the key") {
    CHECK(error_of(R"({"discretization": {"degree": "two"}})").find("/discretization/degree") != std::string::npos);
    CHECK(error_of(R"({"discretization": {"degree": 1.5}})").find("/discretization/degree") != std::string::npos);
    CHECK(error_of(R"({"mesh": {"cells": [2, "x"]}})").find("/mesh/cells/1") != std::string::npos);
    CHECK(error_of(R"({"mesh": {"dim": 4}})").find("/mesh/dim") != std::string::npos);
    CHECK(error_of(R"({"time": {"scheme": "rk4"}})").find("/time/scheme") != std::string::npos);
    CHECK(error_of(R"({"execution": {"backend": "gpu"}})").find("/execution/backend") != std::string::npos);
    CHECK(error_of(R"({"bench": {"reps": 0}})").find("/bench/reps") != std::string::npos);
    CHECK(error_of(R"({"problem": {"id": "zz"}})").find("/problem/id") != std::string::npos);
    CHECK(error_of(R"({"discretization": {"degree": 3, "quad_points": 2}})").find("quad_points") !=
          std::string::npos);
    CHECK(error_of(R"({"mesh": 3})").find("/mesh") != std::string::npos);
}

TEST_CASE("syntax errors report the line") {
    const std::string e = error_of("{\n  \"mesh\": {\n    \"dim\": 2,,\n  }\n}");
    CHECK(e.find("line 3") != std::string::npos);
}

TEST_CASE("problem construction from a config") {
    RunConfig c = parse_config(R"({"mesh": {"dim": 2, "cells": [3, 3], "perturbation": 0.05},
                                  "problem": {"id": "c"}, "discretization": {"degree": 2}})");
    const Problem pr = make_problem(c);
    CHECK(pr.mesh.perturbation == 0.05);
    const auto o = operator_options(c, pr);
    CHECK(o.quad_points == pr.quad_points(2));
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("vtk snapshot") {
    const auto dir = std::filesystem::temp_directory_path() / "sfdg_test_io";
    ensure_directory(dir.string());
    MeshConfig mc;
    mc.dim = 2;
    mc.cells = {3, 2, 1};
    StructuredMesh mesh(mc);
    DofVector z(6, 4);
    for (index_t e = 0; e < 6; ++e)
        z.block(e)[0] = 0.5 * e;
    const auto path = (dir / "u.vtk").string();
    write_vtk_cell_means(path, mesh, z);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string s = ss.str();
    CHECK(s.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
    CHECK(s.find("DATASET STRUCTURED_POINTS") != std::string::npos);
    CHECK(s.find("DIMENSIONS 4 3 1") != std::string::npos);
    CHECK(s.find("CELL_DATA 6") != std::string::npos);
    CHECK(s.find("\n2.5\n") != std::string::npos);
    CHECK(cell_means(z)[3] == 1.5);
    CHECK_THROWS_AS(ensure_directory("/dev/null/sub"), IoError);
    CHECK_THROWS_AS(write_vtk_cell_means("/dev/null/sub/u.vtk", mesh, z), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("benchmark harness") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    const auto c = auto_cells(3, 3, 2e6);
    CHECK(c[0] == 31);
    CHECK(auto_cells(2, 1, 1.0)[0] == 2);
    BenchCase bc;
    bc.problem = "a";
    bc.dim = 2;
    bc.degree = 2;
    bc.cells = {6, 6, 1};
    bc.reps = 3;
    auto rows = run_bench(bc);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].dofs == 36 * 9);
    CHECK(rows[0].seconds > 0.0);
    bc.backend = Backend::matrix_based;
    rows = run_bench(bc);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].backend == "matrix-based");
    CHECK(rows[1].backend == "matrix-assembly");
    bc.matrix_cap = 1000;
    CHECK_THROWS_AS(run_bench(bc), ResourceError);
    bc.reps = 0;
    CHECK_THROWS_AS(run_bench(bc), std::invalid_argument);
    const auto f = fit_matrix_cells(3, 7, 2e6, std::size_t{1} << 30);
    MeshConfig mc;
    mc.dim = 3;
    mc.cells = f;
    mc.periodic = {true, true, true};
    CHECK(estimate_matrix_bytes(StructuredMesh(mc), 512) <= std::size_t{1} << 30);
    std::ostringstream os;
    write_bench_header(os);
    CHECK(os.str() == "backend,problem,d,p,cells,dofs,seconds,dofs_per_sec,modeled_flops,flops_per_sec_model\n");
}
