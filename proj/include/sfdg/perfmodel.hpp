#pragma once

#include "sfdg/sumfact.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sfdg {

/// C_{d,rho} = sum_{q=1}^{d} rho^q
double c_factor(int d, double rho);
/// 2 C_{d,rho} m^{d+1}
double cost_volume(int d, int m, double rho);
/// 2 C_{d,rho} m^d
double cost_face(int d, int m, double rho);

double flopdof_volume(int d, int p);
double flopdof_face(int d, int p);
double bdof_volume(int d, int p);
double bdof_face(int d, int p);
double intensity_volume(int d, int p);
double intensity_face(int d, int p);

/// P = min(pi, beta I)
double roofline(double intensity, double peak_gflops, double bandwidth_gbs);

struct RooflineInputs {
    std::string name = "custom";
    double peak_gflops = 0.0;   ///< per core
    double bandwidth_gbs = 0.0; ///< per core
    int cores = 1;

    void validate() const;
};

/// Named machine presets; "paper-haswell" is one E5-2698v3 core, 32 cores per node.
RooflineInputs machine_preset(const std::string& name);
std::vector<std::string> machine_presets();

/// FMA-loop and triad micro-benchmarks on the calling thread.
RooflineInputs probe_machine(int cores, double seconds = 0.2);

/// Assuming compute-bound execution: cores * pi / (FLOPDOF_vol + FLOPDOF_face), in DOF/s.
double throughput(int d, int p, const RooflineInputs& machine);

struct ModelRow {
    int d = 3;
    int p = 1;
    double flopdof_vol = 0.0;
    double flopdof_face = 0.0;
    double i_vol = 0.0;
    double i_face = 0.0;
    double p_vol = 0.0;
    double p_face = 0.0;
    double tput = 0.0;
};

std::vector<ModelRow> model_table(int d, int p_min, int p_max, const RooflineInputs& machine);
void write_model_csv(const std::vector<ModelRow>& rows, std::ostream& os);

/// Kernel cost model of one discretization: n basis functions, m points per direction.
struct CostModel {
    int d = 3;
    int n = 2;
    int m = 2;

    double rho() const { return static_cast<double>(n) / m; }
    double volume_chain_flops() const { return cost_volume(d, m, rho()); }
    double face_chain_flops() const { return cost_face(d, m, rho()); }
    int lanes() const { return d + 1; }
};

struct ReconcileRow {
    std::string kernel;
    std::uint64_t invocations = 0;
    double modeled_flops = 0.0;
    double counted_flops = 0.0;
    double deviation_pct = 0.0;
    bool informational = false;
};

struct ReconcileReport {
    std::vector<ReconcileRow> rows;
    /// Largest deviation over the sum-factorization rows.
    double max_sumfact_deviation_pct = 0.0;
};

/// Modeled vs counted flops of the volume and face sum-factorization chains;
/// quad_points_volume (points visited) feeds the informational 2d^2+5d+3 row.
ReconcileReport reconcile(const KernelStats& stats, const CostModel& model, std::uint64_t quad_points_volume);
void write_reconcile_csv(const ReconcileReport& report, std::ostream& os);

} // namespace sfdg
