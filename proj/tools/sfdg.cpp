#include "sfdg/affinity.hpp"
#include "sfdg/bench.hpp"
#include "sfdg/config.hpp"
#include "sfdg/io.hpp"
#include "sfdg/perfmodel.hpp"
#include "sfdg/verify.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <iostream>
#include <omp.h>
#include <sstream>

using namespace sfdg;

namespace {

enum Exit { ok = 0, check_failure = 1, invalid_argument = 2, resource = 3, io = 4 };

struct Overrides {
    std::string config;
    int threads = 0;
    std::string backend;
    std::string out;
    std::string preset;
    int degree = -1;
    std::vector<index_t> cells;
    std::string problem;
    int dim = 0;
    index_t steps = -1;
    double dt = -1.0;
    double alpha = 0.0;
    bool alpha_set = false;
    bool pin = false;
    bool no_pin = false;
    bool print_config = false;
};

RunConfig resolve(const Overrides& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (o.threads != 0)
        c.execution.threads = o.threads;
    if (!o.backend.empty() && o.backend != "both")
        c.execution.backend = backend_from_string(o.backend);
    if (!o.out.empty())
        c.output.dir = o.out;
    if (o.degree >= 0)
        c.discretization.degree = o.degree;
    if (!o.problem.empty())
        c.problem.id = o.problem;
    if (o.dim != 0)
        c.mesh.dim = o.dim;
    if (!o.cells.empty()) {
        c.mesh.cells = {1, 1, 1};
        for (int k = 0; k < c.mesh.dim; ++k)
            c.mesh.cells[k] = o.cells.size() == 1 ? o.cells[0] : o.cells.at(std::min<std::size_t>(k, o.cells.size() - 1));
    }
    if (o.steps >= 0)
        c.time.steps = o.steps;
    if (o.dt >= 0.0)
        c.time.dt = o.dt;
    if (o.alpha_set)
        c.discretization.alpha = o.alpha;
    if (o.no_pin)
        c.execution.pin = false;
    if (o.pin)
        c.execution.pin = true;
    // reparse the canonical form so overrides go through the same validation
    return parse_config(serialize_config(c));
}

nlohmann::json affinity_json(const AffinityReport& a) {
    return {{"requested", a.requested}, {"succeeded", a.succeeded}, {"threads", a.threads}, {"cpus", a.cpus},
            {"detail", a.detail}};
}

AffinityReport maybe_pin(const RunConfig& c) {
    if (!c.execution.pin) {
        AffinityReport r;
        r.threads = c.execution.threads;
        r.detail = "not requested";
        return r;
    }
    return pin_threads(c.execution.threads);
}

std::string out_path(const RunConfig& c, const std::string& suffix) {
    return c.output.dir + "/" + c.output.prefix + suffix;
}

int cmd_verify(const Overrides& o) {
    const RunConfig c = resolve(o);
    const auto rep = run_verification(c);
    rep.print(std::cout);
    ensure_directory(c.output.dir);
    write_text_file(out_path(c, "_verify.json"), rep.to_json());
    return rep.pass() ? ok : check_failure;
}

int cmd_bench(const Overrides& o, bool scaling) {
    const RunConfig c = resolve(o);
    const auto aff = maybe_pin(c);
    std::vector<Backend> backends;
    if (o.backend == "both")
        backends = {Backend::matrix_free, Backend::matrix_based};
    else
        backends = {c.execution.backend};
    std::vector<int> degrees = c.bench.degrees;
    if (o.degree >= 0)
        degrees = {o.degree};
    ensure_directory(c.output.dir);
    auto csv = open_output(out_path(c, "_bench.csv"));
    std::ostringstream rows;
    write_bench_header(rows);
    const int d = c.mesh.dim;
    for (int p : degrees)
        for (Backend b : backends) {
            BenchCase bc;
            bc.problem = c.problem.id;
            bc.dim = d;
            bc.degree = p;
            bc.backend = b;
            bc.threads = c.execution.threads;
            bc.reps = c.bench.reps;
            bc.warmup = c.bench.warmup;
            bc.matrix_cap = static_cast<std::size_t>(c.execution.matrix_cap_bytes);
            if (!o.cells.empty())
                bc.cells = c.mesh.cells;
            else if (b == Backend::matrix_based)
                bc.cells = fit_matrix_cells(d, p, c.bench.dof_budget, bc.matrix_cap);
            else
                bc.cells = auto_cells(d, p, c.bench.dof_budget);
            for (const auto& r : run_bench(bc)) {
                write_bench_row(r, rows);
                write_bench_row(r, std::cout);
            }
        }
    csv << rows.str();
    std::cout.flush();

    nlohmann::json meta;
    meta["config_hash"] = hex64(config_hash(c));
    meta["affinity"] = affinity_json(aff);
    meta["max_threads"] = omp_get_max_threads();

    if (scaling) {
        auto sc = open_output(out_path(c, "_scaling.csv"));
        sc << "backend,threads,dofs,seconds,dofs_per_sec,efficiency\n";
        const int maxt = std::max(1, static_cast<int>(available_cpus().size()));
        std::vector<int> counts;
        for (int t = 1; t < maxt; t *= 2)
            counts.push_back(t);
        counts.push_back(maxt);
        const int p = degrees.front();
        for (Backend b : backends) {
            double base = 0.0;
            for (int t : counts) {
                BenchCase bc;
                bc.problem = c.problem.id;
                bc.dim = d;
                bc.degree = p;
                bc.backend = b;
                bc.threads = t;
                bc.reps = c.bench.reps;
                bc.warmup = c.bench.warmup;
                bc.matrix_cap = static_cast<std::size_t>(c.execution.matrix_cap_bytes);
                const double budget = c.bench.dof_budget * t; // weak scaling
                bc.cells = b == Backend::matrix_based ? fit_matrix_cells(d, p, budget, bc.matrix_cap)
                                                      : auto_cells(d, p, budget);
                const auto r = run_bench(bc).front();
                const double per_thread = r.dofs_per_sec / t;
                if (t == 1)
                    base = per_thread;
                sc << to_string(b) << ',' << t << ',' << r.dofs << ',' << shortest(r.seconds) << ','
                   << shortest(r.dofs_per_sec) << ',' << shortest(base > 0 ? per_thread / base : 0.0) << '\n';
            }
        }
        meta["scaling_threads"] = counts;
    }
    write_text_file(out_path(c, "_bench_meta.json"), meta.dump(2) + "\n");
    return ok;
}

int cmd_model(const Overrides& o, int pmin, int pmax, int cores, bool do_reconcile) {
    RooflineInputs m;
    const std::string preset = o.preset.empty() ? "paper-haswell" : o.preset;
    if (preset == "probe")
        m = probe_machine(cores > 0 ? cores : 1);
    else
        m = machine_preset(preset);
    if (cores > 0)
        m.cores = cores;
    const int d = o.dim != 0 ? o.dim : 3;
    const auto rows = model_table(d, pmin, pmax, m);
    write_model_csv(rows, std::cout);
    if (!o.out.empty()) {
        ensure_directory(o.out);
        auto f = open_output(o.out + "/model_d" + std::to_string(d) + ".csv");
        write_model_csv(rows, f);
    }
    if (do_reconcile) {
        const RunConfig c = resolve(o);
        const Problem pr = make_problem(c);
        StructuredMesh mesh(pr.mesh);
        DgOperator op(mesh, pr.coeffs, operator_options(c, pr));
        DofVector z = op.create_vector(), y;
        z.fill(1.0);
        KernelStats st;
        op.apply(z, 0.0, y, st);
        const auto rep = reconcile(st, CostModel{mesh.dim(), op.n(), op.m()},
                                   static_cast<std::uint64_t>(mesh.num_elements()) * ipow(op.m(), mesh.dim()));
        std::cout << '\n';
        write_reconcile_csv(rep, std::cout);
    }
    return ok;
}

int cmd_solve(const Overrides& o) {
    const RunConfig c = resolve(o);
    const auto aff = maybe_pin(c);
    ensure_directory(c.output.dir);
    const Problem pr = make_problem(c);
    StructuredMesh mesh(pr.mesh);
    DgOperator op(mesh, pr.coeffs, operator_options(c, pr));
    if (const index_t bad = count_inflow_on_outflow(op, 0.0); bad > 0)
        std::cerr << "warning: " << bad << " outflow face(s) have inflowing velocity at their center\n";
    std::unique_ptr<SemiDiscreteOperator> sd;
    const MassOperator* mass = nullptr;
    if (c.execution.backend == Backend::matrix_free) {
        auto p = std::make_unique<DgSemiDiscrete>(op);
        mass = &p->mass();
        sd = std::move(p);
    } else {
        auto p = std::make_unique<MatrixSemiDiscrete>(
            op, assemble_matrix(op, 0.0, static_cast<std::size_t>(c.execution.matrix_cap_bytes)));
        mass = &p->mass();
        sd = std::move(p);
    }
    DofVector z;
    project_initial(op, *mass, pr.initial, z);

    RunOptions ro;
    ro.scheme = c.time.scheme;
    ro.steps = c.time.steps;
    ro.diagnostics_every = c.time.diagnostics_every;
    ro.snapshot_every = c.time.snapshot_every;
    ro.dt = c.time.dt > 0.0 ? c.time.dt
                            : advisory_dt(mesh.min_width(), c.discretization.degree, pr.max_velocity,
                                          pr.max_diffusion, c.time.courant);
    if (!std::isfinite(ro.dt))
        throw ConfigError("/time/dt: no advisory step without transport or diffusion; set dt explicitly");
    const std::string hash = hex64(config_hash(c));
    auto meta = [&](const Diagnostics& d) {
        nlohmann::json j;
        j["config_hash"] = hash;
        j["step"] = d.step;
        j["time"] = d.time;
        j["mass"] = d.mass;
        j["L2"] = d.l2;
        return j;
    };
    SnapshotFn snap;
    if (c.time.snapshot_every > 0)
        snap = [&](const DofVector& zz, const Diagnostics& d) {
            char tag[32];
            std::snprintf(tag, sizeof tag, "_%06lld", static_cast<long long>(d.step));
            write_vtk_cell_means(out_path(c, std::string(tag) + ".vtk"), mesh, zz);
            write_text_file(out_path(c, std::string(tag) + ".json"), meta(d).dump(2) + "\n");
        };
    const auto tr = run(*sd, z, ro, snap);

    auto csv = open_output(out_path(c, "_trajectory.csv"));
    csv << "step,time,mass,l2\n";
    for (const auto& d : tr.records)
        csv << d.step << ',' << shortest(d.time) << ',' << shortest(d.mass) << ',' << shortest(d.l2) << '\n';
    auto fin = meta(tr.records.back());
    fin["dt"] = ro.dt;
    fin["scheme"] = to_string(ro.scheme);
    fin["backend"] = to_string(c.execution.backend);
    fin["dofs"] = op.num_dofs();
    fin["affinity"] = affinity_json(aff);
    write_text_file(out_path(c, "_final.json"), fin.dump(2) + "\n");
    write_text_file(out_path(c, "_config.json"), serialize_config(c));

    const auto& first = tr.records.front();
    const auto& last = tr.records.back();
    std::printf("steps=%lld dt=%.6e t=%.6e mass=%.16e (drift %.3e) L2=%.16e\n", static_cast<long long>(tr.steps),
                ro.dt, last.time, last.mass,
                first.mass != 0.0 ? std::abs(last.mass - first.mass) / std::abs(first.mass) : 0.0, last.l2);
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matrix-free sum-factorized DG convection-diffusion-reaction engine"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    app.add_option("--config", o.config, "JSON run configuration");
    app.add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--backend", o.backend, "matrix-free | matrix-based (bench also: both)")
        ->check(CLI::IsMember({"matrix-free", "matrix-based", "both"}));
    app.add_option("--out", o.out, "output directory");
    app.add_option("--preset", o.preset, "machine preset for model (paper-haswell | probe)");
    app.add_option("--degree", o.degree, "polynomial degree")->check(CLI::NonNegativeNumber);
    app.add_option("--cells", o.cells, "cells per direction (one value or one per direction)")->expected(1, 3);
    app.add_option("--problem", o.problem, "a | b | c | taylor-green | custom");
    app.add_option("--dim", o.dim, "space dimension")->check(CLI::Range(2, 3));
    app.add_option("--steps", o.steps, "time steps")->check(CLI::NonNegativeNumber);
    app.add_option("--dt", o.dt, "time step (0: advisory)")->check(CLI::NonNegativeNumber);
    app.add_option("--alpha", o.alpha, "penalty parameter")->each([&](const std::string&) { o.alpha_set = true; });
    app.add_flag("--pin", o.pin, "pin worker threads");
    app.add_flag("--no-pin", o.no_pin, "do not pin worker threads");
    app.add_flag("--print-config", o.print_config, "print the resolved configuration and exit");

    auto* verify = app.add_subcommand("verify", "oracle, conservation and cost-model suites");
    auto* bench = app.add_subcommand("bench", "operator application benchmarks (CSV)");
    bool scaling = false;
    bench->add_flag("--scaling", scaling, "also run a weak-scaling sweep over thread counts");
    auto* model = app.add_subcommand("model", "closed-form cost and roofline tables (CSV)");
    int pmin = 1, pmax = 10, cores = 0;
    bool rec = false;
    model->add_option("--pmin", pmin, "lowest degree")->check(CLI::NonNegativeNumber);
    model->add_option("--pmax", pmax, "highest degree")->check(CLI::NonNegativeNumber);
    model->add_option("--cores", cores, "core count of the node")->check(CLI::PositiveNumber);
    model->add_flag("--reconcile", rec, "also reconcile counted kernel flops of one application");
    auto* solve = app.add_subcommand("solve", "explicit time integration with snapshots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : invalid_argument;
    }

    try {
        if (o.print_config) {
            std::cout << serialize_config(resolve(o));
            return ok;
        }
        if (*verify)
            return cmd_verify(o);
        if (*bench)
            return cmd_bench(o, scaling);
        if (*model)
            return cmd_model(o, pmin, pmax, cores, rec);
        if (*solve)
            return cmd_solve(o);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return invalid_argument;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return invalid_argument;
    } catch (const ResourceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return resource;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return check_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return check_failure;
    }
    return ok;
}
