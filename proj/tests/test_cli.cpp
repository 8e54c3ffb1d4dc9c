#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kOut = fs::temp_directory_path() / "sfdg_test_cli";

int run(const std::string& args, std::string* output = nullptr) {
    const fs::path log = kOut / "stdout.txt";
    fs::create_directories(kOut);
    const std::string cmd = std::string(SFDG_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int st = std::system(cmd.c_str());
    if (output) {
        std::ifstream in(log);
        std::stringstream ss;
        ss << in.rdbuf();
        *output = ss.str();
    }
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("exit codes") {
    CHECK(run("verify --no-pin --out " + kOut.string()) == 0);
    CHECK(fs::exists(kOut / "run_verify.json"));
    CHECK(run("verify --alpha -1 --out " + kOut.string()) == 2);
    CHECK(run("verify --backend matrix-based --cells 40 --degree 6 --out " + kOut.string()) == 3);
    CHECK(run("solve --problem a --cells 2 --degree 1 --steps 1 --out /dev/null/x") == 4);
    CHECK(run("frobnicate") == 2);
    CHECK(run("bench --out " + kOut.string() + " --config /nonexistent.json") == 4);
    {
        std::ofstream bad(kOut / "bad.json");
        bad << R"({"mesh": {"cels": [2]}})";
    }
    std::string out;
    CHECK(run("verify --config " + (kOut / "bad.json").string(), &out) == 2);
    CHECK(out.find("/mesh/cels") != std::string::npos);
}

TEST_CASE("model output is reproducible") {
    std::string a, b;
    CHECK(run("model --dim 3 --pmin 1 --pmax 8 --preset paper-haswell", &a) == 0);
    CHECK(run("model --dim 3 --pmin 1 --pmax 8 --preset paper-haswell", &b) == 0);
    CHECK(a == b);
    CHECK(a.find("3,3,228,333,") != std::string::npos);
}

TEST_CASE("solve writes snapshots and metadata") {
    const fs::path dir = kOut / "solve";
    fs::remove_all(dir);
    fs::remove(kOut / "snap.json");
    CHECK(run("solve --problem taylor-green --dim 3 --cells 4 --degree 1 --steps 4 --no-pin --out " + dir.string() +
              " --config " + (kOut / "snap.json").string()) == 4);
    {
        std::ofstream cfg(kOut / "snap.json");
        cfg << R"({"time": {"snapshot_every": 2, "scheme": "heun"}})";
    }
    CHECK(run("solve --problem taylor-green --dim 3 --cells 4 --degree 1 --steps 4 --no-pin --out " + dir.string() +
              " --config " + (kOut / "snap.json").string()) == 0);
    CHECK(fs::exists(dir / "run_000000.vtk"));
    CHECK(fs::exists(dir / "run_000002.vtk"));
    CHECK(fs::exists(dir / "run_000004.vtk"));
    const auto meta = nlohmann::json::parse(slurp(dir / "run_000004.json"));
    CHECK(meta["step"] == 4);
    CHECK(meta.contains("config_hash"));
    CHECK(meta.contains("mass"));
    CHECK(meta.contains("L2"));
    const auto m0 = nlohmann::json::parse(slurp(dir / "run_000000.json"));
    CHECK(std::abs(meta["mass"].get<double>() - m0["mass"].get<double>()) <=
          1e-12 * std::abs(m0["mass"].get<double>()) + 1e-15);
    const auto fin = nlohmann::json::parse(slurp(dir / "run_final.json"));
    CHECK(fin["affinity"]["requested"] == false);

    const fs::path d2 = kOut / "solve0";
    fs::remove_all(d2);
    CHECK(run("solve --problem b --dim 2 --cells 3 --degree 1 --steps 3 --no-pin --out " + d2.string()) == 0);
    int vtk = 0;
    for (const auto& e : fs::directory_iterator(d2))
        vtk += e.path().extension() == ".vtk";
    CHECK(vtk == 0);
    CHECK(fs::exists(d2 / "run_final.json"));
    CHECK(fs::exists(d2 / "run_trajectory.csv"));

    CHECK(run("solve --problem b --dim 2 --cells 3 --degree 1 --steps 3 --backend matrix-based --no-pin --out " +
              (kOut / "solve_mb").string()) == 0);
    const auto a = nlohmann::json::parse(slurp(d2 / "run_final.json"));
    const auto b = nlohmann::json::parse(slurp(kOut / "solve_mb" / "run_final.json"));
    CHECK(std::abs(a["L2"].get<double>() - b["L2"].get<double>()) <= 1e-12 * a["L2"].get<double>());
}

TEST_CASE("bench csv") {
    const fs::path dir = kOut / "bench";
    CHECK(run("bench --problem a --dim 2 --cells 4 --degree 2 --backend both --no-pin --out " + dir.string()) == 0);
    const std::string csv = slurp(dir / "run_bench.csv");
    CHECK(csv.rfind("backend,problem,d,p,cells,dofs,seconds,dofs_per_sec,modeled_flops,flops_per_sec_model\n", 0) ==
          0);
    CHECK(csv.find("matrix-free,a,2,2,16,144,") != std::string::npos);
    CHECK(csv.find("matrix-assembly,a,2,2,16,144,") != std::string::npos);
    const auto meta = nlohmann::json::parse(slurp(dir / "run_bench_meta.json"));
    CHECK(meta.contains("affinity"));
}

TEST_CASE("config printing roundtrips") {
    std::string a, b;
    CHECK(run("--print-config verify --degree 4 --problem c --dim 2 --cells 5", &a) == 0);
    {
        std::ofstream f(kOut / "printed.json");
        f << a;
    }
    CHECK(run("--print-config verify --config " + (kOut / "printed.json").string(), &b) == 0);
    CHECK(a == b);
}
