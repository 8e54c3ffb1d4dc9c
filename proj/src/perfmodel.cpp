#include "sfdg/perfmodel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace sfdg {

namespace {

void check_dim(int d) {
    if (d < 2 || d > 3)
        throw std::invalid_argument("performance model: dimension must be 2 or 3");
}

void check_degree(int p) {
    if (p < 0)
        throw std::invalid_argument("performance model: degree must be non-negative");
}

} // namespace

double c_factor(int d, double rho) {
    if (d < 1 || d > kMaxDim)
        throw std::invalid_argument("c_factor: dimension out of range");
    if (!(rho > 0.0) || rho > 1.0)
        throw std::invalid_argument("c_factor: rho must lie in (0, 1]");
    double c = 0.0, r = 1.0;
    for (int q = 1; q <= d; ++q) {
        r *= rho;
        c += r;
    }
    return c;
}

double cost_volume(int d, int m, double rho) {
    if (m < 1)
        throw std::invalid_argument("cost_volume: m must be positive");
    return 2.0 * c_factor(d, rho) * std::pow(static_cast<double>(m), d + 1);
}

double cost_face(int d, int m, double rho) {
    if (m < 1)
        throw std::invalid_argument("cost_face: m must be positive");
    return 2.0 * c_factor(d, rho) * std::pow(static_cast<double>(m), d);
}

double flopdof_volume(int d, int p) {
    check_dim(d);
    check_degree(p);
    return 4.0 * (d + 1) * d * (p + 1) + 2.0 * d * d + 5.0 * d + 3.0;
}

double flopdof_face(int d, int p) {
    check_dim(d);
    check_degree(p);
    return 8.0 * (d + 1) * d * d + d * (2.0 * d * d + 8.0 * d + 18.0) / (p + 1);
}

double bdof_volume(int d, int p) {
    check_dim(d);
    check_degree(p);
    return 16.0;
}

double bdof_face(int d, int p) {
    check_dim(d);
    check_degree(p);
    return 32.0 * d;
}

double intensity_volume(int d, int p) { return flopdof_volume(d, p) / bdof_volume(d, p); }
double intensity_face(int d, int p) { return flopdof_face(d, p) / bdof_face(d, p); }

double roofline(double intensity, double peak_gflops, double bandwidth_gbs) {
    if (!(peak_gflops > 0.0) || !(bandwidth_gbs > 0.0))
        throw std::invalid_argument("roofline: peak and bandwidth must be positive");
    if (intensity < 0.0)
        throw std::invalid_argument("roofline: negative intensity");
    return std::min(peak_gflops, bandwidth_gbs * intensity);
}

void RooflineInputs::validate() const {
    if (!(peak_gflops > 0.0) || !(bandwidth_gbs > 0.0))
        throw std::invalid_argument("machine '" + name + "': peak and bandwidth must be positive");
    if (cores < 1)
        throw std::invalid_argument("machine '" + name + "': core count must be positive");
}

RooflineInputs machine_preset(const std::string& name) {
    if (name == "paper-haswell")
        return {name, 30.4, 15.0, 32};
    throw std::invalid_argument("unknown machine preset '" + name + "'");
}

std::vector<std::string> machine_presets() { return {"paper-haswell"}; }

RooflineInputs probe_machine(int cores, double seconds) {
    using clock = std::chrono::steady_clock;
    RooflineInputs r;
    r.name = "probed";
    r.cores = std::max(1, cores);

    constexpr int kAcc = 32;
    alignas(64) double acc[kAcc];
    for (int i = 0; i < kAcc; ++i)
        acc[i] = 1.0 + 1e-3 * i;
    const double a = 0.999999, b = 1e-7;
    std::uint64_t iters = 0;
    const auto t0 = clock::now();
    double elapsed = 0.0;
    while (elapsed < seconds) {
        for (int k = 0; k < 4096; ++k)
#pragma omp simd
            for (int i = 0; i < kAcc; ++i)
                acc[i] = std::fma(acc[i], a, b);
        iters += 4096;
        elapsed = std::chrono::duration<double>(clock::now() - t0).count();
    }
    double sink = 0.0;
    for (double v : acc)
        sink += v;
    r.peak_gflops = 2.0 * kAcc * static_cast<double>(iters) / elapsed * 1e-9 + (sink == 0.0 ? 1e-300 : 0.0);

    const std::size_t n = std::size_t{1} << 22;
    std::vector<double> x(n, 1.0), y(n, 2.0), z(n, 0.0);
    std::uint64_t sweeps = 0;
    const auto t1 = clock::now();
    elapsed = 0.0;
    while (elapsed < seconds || sweeps < 2) {
        const double s = 1.0 + 1e-9 * static_cast<double>(sweeps);
        for (std::size_t i = 0; i < n; ++i)
            z[i] = x[i] + s * y[i];
        ++sweeps;
        elapsed = std::chrono::duration<double>(clock::now() - t1).count();
    }
    r.bandwidth_gbs = 24.0 * static_cast<double>(n) * static_cast<double>(sweeps) / elapsed * 1e-9 +
                      (z[n / 2] == 0.0 ? 1e-300 : 0.0);
    return r;
}

double throughput(int d, int p, const RooflineInputs& machine) {
    machine.validate();
    return machine.cores * machine.peak_gflops * 1e9 / (flopdof_volume(d, p) + flopdof_face(d, p));
}

std::vector<ModelRow> model_table(int d, int p_min, int p_max, const RooflineInputs& machine) {
    check_dim(d);
    if (p_min < 0 || p_max < p_min)
        throw std::invalid_argument("model_table: invalid degree range");
    machine.validate();
    std::vector<ModelRow> rows;
    for (int p = p_min; p <= p_max; ++p) {
        ModelRow r;
        r.d = d;
        r.p = p;
        r.flopdof_vol = flopdof_volume(d, p);
        r.flopdof_face = flopdof_face(d, p);
        r.i_vol = intensity_volume(d, p);
        r.i_face = intensity_face(d, p);
        r.p_vol = roofline(r.i_vol, machine.peak_gflops, machine.bandwidth_gbs);
        r.p_face = roofline(r.i_face, machine.peak_gflops, machine.bandwidth_gbs);
        r.tput = throughput(d, p, machine);
        rows.push_back(r);
    }
    return rows;
}

void write_model_csv(const std::vector<ModelRow>& rows, std::ostream& os) {
    os << "d,p,flopdof_vol,flopdof_face,I_vol,I_face,P_vol,P_face,tput\n";
    for (const auto& r : rows)
        os << r.d << ',' << r.p << ',' << shortest(r.flopdof_vol) << ',' << shortest(r.flopdof_face) << ','
           << shortest(r.i_vol) << ',' << shortest(r.i_face) << ',' << shortest(r.p_vol) << ',' << shortest(r.p_face)
           << ',' << shortest(r.tput) << '\n';
}

namespace {

ReconcileRow make_row(std::string kernel, std::uint64_t inv, double modeled, double counted, bool info) {
    ReconcileRow r;
    r.kernel = std::move(kernel);
    r.invocations = inv;
    r.modeled_flops = modeled;
    r.counted_flops = counted;
    r.deviation_pct = modeled == 0.0 ? (counted == 0.0 ? 0.0 : 100.0) : 100.0 * (counted - modeled) / modeled;
    r.informational = info;
    return r;
}

} // namespace

ReconcileReport reconcile(const KernelStats& stats, const CostModel& model, std::uint64_t quad_points_volume) {
    ReconcileReport rep;
    const double lanes = model.lanes();
    const double vc = model.volume_chain_flops() * lanes;
    const double fc = model.face_chain_flops() * lanes;
    rep.rows.push_back(make_row("volume", stats.volume_evaluations + stats.volume_integrations,
                                vc * static_cast<double>(stats.volume_evaluations + stats.volume_integrations),
                                2.0 * static_cast<double>(stats.volume_fma), false));
    rep.rows.push_back(make_row("face", stats.face_evaluations + stats.face_integrations,
                                fc * static_cast<double>(stats.face_evaluations + stats.face_integrations),
                                2.0 * static_cast<double>(stats.face_fma), false));
    const int d = model.d;
    rep.rows.push_back(make_row("quadrature_points", quad_points_volume,
                                static_cast<double>(quad_points_volume) * (2.0 * d * d + 5.0 * d + 3.0),
                                static_cast<double>(stats.qp_flops), true));
    rep.rows.push_back(make_row("geometry", 0, 0.0, 2.0 * static_cast<double>(stats.other_fma), true));
    for (const auto& r : rep.rows)
        if (!r.informational)
            rep.max_sumfact_deviation_pct = std::max(rep.max_sumfact_deviation_pct, std::abs(r.deviation_pct));
    return rep;
}

void write_reconcile_csv(const ReconcileReport& report, std::ostream& os) {
    os << "kernel,invocations,modeled_flops,counted_flops,deviation_pct,kind\n";
    for (const auto& r : report.rows)
        os << r.kernel << ',' << r.invocations << ',' << shortest(r.modeled_flops) << ',' << shortest(r.counted_flops)
           << ',' << shortest(r.deviation_pct) << ',' << (r.informational ? "informational" : "model") << '\n';
    os << "# BDOF values are modeled, not measured\n";
}

} // namespace sfdg
